#pragma once

#include <Eigen/Dense>
#include <array>
#include <string>
#include <vector>

#include "kflow/kinematics.hpp"
#include "kflow/scalar_calculus.hpp"

namespace kflow {

/// Density values per node, with respect to the node weight w = h^d.
using DensityState = Eigen::VectorXd;

/// One conservative binary collision {i, j} <-> {k, l} on the lattice.
///
/// Canonical form: i <= j, k <= l, (i, j) < (k, l) lexicographically and
/// {i, j} != {k, l}. omega = unit(v_i - v_k) maps (v_i, v_j) onto (v_k, v_l).
struct Quadruple {
  int i, j, k, l;
  Velocity omega;
  double kernel;  ///< B(v_i - v_j, omega)
  double weight;  ///< quadrature weight W = w^2
};

/// Mass, momentum and energy (second moment) of a density.
struct Moments {
  double mass = 0.0;
  std::array<double, 3> momentum{0.0, 0.0, 0.0};
  double energy = 0.0;
};

struct MomentTargets {
  double mass = 1.0;
  std::array<double, 3> momentum{0.0, 0.0, 0.0};
  /// Negative means "use the dimension d" (unit variance per coordinate).
  double energy = -1.0;
};

/// Finite velocity network: lattice nodes h*z with |h z|_inf <= V and every
/// momentum- and energy-conserving quadruple among them.
class VelocityNetwork {
 public:
  int dim() const { return dim_; }
  double spacing() const { return spacing_; }
  double radius() const { return radius_; }
  int size() const { return static_cast<int>(nodes_.size()); }
  double node_weight() const { return node_weight_; }

  const Velocity& node(int idx) const { return nodes_[static_cast<std::size_t>(idx)]; }
  const std::vector<Velocity>& nodes() const { return nodes_; }
  const std::array<int, 3>& lattice(int idx) const { return lattice_[static_cast<std::size_t>(idx)]; }
  const std::vector<Quadruple>& quadruples() const { return quadruples_; }
  const Kernel& kernel() const { return kernel_; }

  /// Index of the node with lattice coordinates z, or -1.
  int find(const std::array<int, 3>& z) const;

  /// Collision invariants (columns 1, v, |v|^2 at each node), n x (d + 2).
  const Eigen::MatrixXd& invariants() const { return invariants_; }
  /// Orthonormal basis of the null space of the incidence matrix (the
  /// functions phi with phi_i + phi_j = phi_k + phi_l on every quadruple).
  const Eigen::MatrixXd& conserved_basis() const { return conserved_basis_; }
  /// Orthonormal basis of the complement of conserved_basis().
  const Eigen::MatrixXd& transport_basis() const { return transport_basis_; }
  /// Number of conserved quantities beyond mass, momentum and energy.
  int spurious_invariants() const;

  /// The same nodes with only the listed quadruples kept.
  VelocityNetwork with_quadruples(const std::vector<std::size_t>& keep) const;
  /// The four nodes of one quadruple carrying only that quadruple.
  VelocityNetwork single_quadruple(std::size_t q) const;

  friend VelocityNetwork build_network(int d, double V, double h, const Kernel& kernel);

 private:
  VelocityNetwork(int d, double V, double h, Kernel kernel);
  void finalize();

  int dim_;
  double spacing_;
  double radius_;
  double node_weight_;
  Kernel kernel_;
  std::vector<Velocity> nodes_;
  std::vector<std::array<int, 3>> lattice_;
  std::vector<Quadruple> quadruples_;
  Eigen::MatrixXd invariants_;
  Eigen::MatrixXd conserved_basis_;
  Eigen::MatrixXd transport_basis_;
};

/// Enumerate nodes and quadruples. Pairs are hash-joined on the integer key
/// (z_i + z_j, |z_i|^2 + |z_j|^2); all pairs sharing a key collide into each
/// other. Requires V/h to be a nonnegative integer; throws BuildError when no
/// quadruple exists.
VelocityNetwork build_network(int d, double V, double h, const Kernel& kernel);

Moments moments(const VelocityNetwork& net, const DensityState& f);

/// Resolve a negative energy target to d * mass.
MomentTargets resolve(const VelocityNetwork& net, MomentTargets targets);
MomentTargets targets_of(const Moments& m);

/// Discrete Maxwellian exp(c + a.v + b|v|^2) with the requested moments.
DensityState maxent_project(const VelocityNetwork& net, const MomentTargets& targets = {});

/// Minimal relative-entropy correction f0 * exp(c + a.v + b|v|^2) matching the
/// targets. Throws DomainError when the targets are infeasible and
/// NumericalError when the Newton iteration does not converge in 200 steps.
DensityState tilt_to_moments(const VelocityNetwork& net, const DensityState& f0,
                             const MomentTargets& targets = {});

/// Mixture density sampled at the nodes, tilted to the targets.
DensityState density_from_mixture(const VelocityNetwork& net, const GaussianMixture& mix,
                                  const MomentTargets& targets = {});

/// Two isotropic bumps at +-offset along the first axis (variance var each),
/// tilted to the targets.
GaussianMixture bimodal_mixture(int d, double offset, double var);

/// Stable JSON export (nodes, quadruples, build parameters).
std::string network_json(const VelocityNetwork& net);

}  // namespace kflow
