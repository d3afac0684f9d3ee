#include "kflow/network.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <unordered_map>

#include "json.hpp"
#include "kflow/errors.hpp"

namespace kflow {

namespace {

struct PairKey {
  std::array<int, 3> sum;
  std::int64_t energy;
  bool operator==(const PairKey&) const = default;
};

struct PairKeyHash {
  std::size_t operator()(const PairKey& k) const noexcept {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](std::uint64_t x) {
      h ^= x + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    };
    for (int s : k.sum) mix(static_cast<std::uint64_t>(static_cast<std::int64_t>(s)));
    mix(static_cast<std::uint64_t>(k.energy));
    return static_cast<std::size_t>(h);
  }
};

std::int64_t lattice_norm2(const std::array<int, 3>& z) {
  return std::int64_t{z[0]} * z[0] + std::int64_t{z[1]} * z[1] + std::int64_t{z[2]} * z[2];
}

Velocity unit(const Velocity& v) { return (1.0 / norm(v)) * v; }

}  // namespace

VelocityNetwork::VelocityNetwork(int d, double V, double h, Kernel kernel)
    : dim_(d), spacing_(h), radius_(V), node_weight_(std::pow(h, d)), kernel_(kernel) {}

int VelocityNetwork::find(const std::array<int, 3>& z) const {
  const auto it = std::find(lattice_.begin(), lattice_.end(), z);
  return it == lattice_.end() ? -1 : static_cast<int>(it - lattice_.begin());
}

void VelocityNetwork::finalize() {
  const int n = size();
  const int p = dim_ + 2;
  invariants_.resize(n, p);
  for (int v = 0; v < n; ++v) {
    invariants_(v, 0) = 1.0;
    for (int c = 0; c < dim_; ++c) invariants_(v, 1 + c) = nodes_[v][c];
    invariants_(v, p - 1) = norm2(nodes_[v]);
  }

  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(n, n);
  for (const auto& q : quadruples_) {
    const int idx[4] = {q.i, q.j, q.k, q.l};
    const double sign[4] = {1.0, 1.0, -1.0, -1.0};
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) gram(idx[a], idx[b]) += sign[a] * sign[b];
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
  const double top = std::max(1.0, eig.eigenvalues().cwiseAbs().maxCoeff());
  int nullity = 0;
  for (int e = 0; e < n; ++e)
    if (eig.eigenvalues()(e) <= 1e-9 * top) ++nullity;

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> inv_qr(invariants_);
  inv_qr.setThreshold(1e-10);
  const int inv_rank = static_cast<int>(inv_qr.rank());

  Eigen::MatrixXd basis;
  if (nullity == inv_rank) {
    // Canonical choice: orthonormalised (1, v, |v|^2).
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(invariants_ * inv_qr.colsPermutation());
    basis = qr.householderQ() * Eigen::MatrixXd::Identity(n, inv_rank);
  } else {
    basis = eig.eigenvectors().leftCols(nullity);
  }
  conserved_basis_ = basis;
  Eigen::HouseholderQR<Eigen::MatrixXd> full(basis);
  const Eigen::MatrixXd q = full.householderQ();
  transport_basis_ = q.rightCols(n - basis.cols());
}

int VelocityNetwork::spurious_invariants() const {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(invariants_);
  qr.setThreshold(1e-10);
  return static_cast<int>(conserved_basis_.cols()) - static_cast<int>(qr.rank());
}

VelocityNetwork VelocityNetwork::with_quadruples(const std::vector<std::size_t>& keep) const {
  VelocityNetwork out = *this;
  out.quadruples_.clear();
  for (std::size_t q : keep) {
    if (q >= quadruples_.size()) throw ArgumentError("with_quadruples: index out of range");
    out.quadruples_.push_back(quadruples_[q]);
  }
  out.finalize();
  return out;
}

VelocityNetwork VelocityNetwork::single_quadruple(std::size_t q) const {
  if (q >= quadruples_.size()) throw ArgumentError("single_quadruple: index out of range");
  const Quadruple& src = quadruples_[q];
  std::array<int, 4> members{src.i, src.j, src.k, src.l};
  std::array<int, 4> sorted = members;
  std::sort(sorted.begin(), sorted.end());
  auto remap = [&sorted](int old) {
    return static_cast<int>(std::find(sorted.begin(), sorted.end(), old) - sorted.begin());
  };
  VelocityNetwork out(dim_, radius_, spacing_, kernel_);
  for (int old : sorted) {
    out.nodes_.push_back(nodes_[old]);
    out.lattice_.push_back(lattice_[old]);
  }
  Quadruple quad = src;
  quad.i = remap(src.i);
  quad.j = remap(src.j);
  quad.k = remap(src.k);
  quad.l = remap(src.l);
  out.quadruples_.push_back(quad);
  out.finalize();
  return out;
}

VelocityNetwork build_network(int d, double V, double h, const Kernel& kernel) {
  if (d != 2 && d != 3) throw ArgumentError("build_network: dimension must be 2 or 3");
  if (!(h > 0.0) || !std::isfinite(h)) throw ArgumentError("build_network: spacing h must be positive");
  if (!(V >= 0.0) || !std::isfinite(V)) throw ArgumentError("build_network: radius V must be nonnegative");
  const double ratio = V / h;
  const long R = std::lround(ratio);
  if (std::abs(ratio - static_cast<double>(R)) > 1e-9 * std::max(1.0, ratio)) {
    throw ArgumentError("build_network: V/h must be an integer");
  }

  VelocityNetwork net(d, V, h, kernel);
  const int r = static_cast<int>(R);
  std::array<int, 3> z{0, 0, 0};
  const int zmax = (d == 3) ? r : 0;
  for (z[0] = -r; z[0] <= r; ++z[0]) {
    for (z[1] = -r; z[1] <= r; ++z[1]) {
      for (z[2] = -zmax; z[2] <= zmax; ++z[2]) {
        Velocity v = Velocity::zero(d);
        for (int c = 0; c < d; ++c) v[c] = h * z[c];
        net.nodes_.push_back(v);
        net.lattice_.push_back(z);
      }
    }
  }

  const int n = net.size();
  std::unordered_map<PairKey, std::vector<std::pair<int, int>>, PairKeyHash> groups;
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      const auto& zi = net.lattice_[i];
      const auto& zj = net.lattice_[j];
      PairKey key{{zi[0] + zj[0], zi[1] + zj[1], zi[2] + zj[2]},
                  lattice_norm2(zi) + lattice_norm2(zj)};
      groups[key].emplace_back(i, j);
    }
  }

  const double W = net.node_weight_ * net.node_weight_;
  for (const auto& [key, pairs] : groups) {
    for (std::size_t a = 0; a < pairs.size(); ++a) {
      for (std::size_t b = a + 1; b < pairs.size(); ++b) {
        const auto [i, j] = pairs[a];
        const auto [k, l] = pairs[b];
        Quadruple q{i, j, k, l, {}, 0.0, W};
        q.omega = unit(net.nodes_[i] - net.nodes_[k]);
        q.kernel = kernel(net.nodes_[i] - net.nodes_[j], q.omega);
        net.quadruples_.push_back(q);
      }
    }
  }
  std::sort(net.quadruples_.begin(), net.quadruples_.end(), [](const Quadruple& x, const Quadruple& y) {
    return std::tie(x.i, x.j, x.k, x.l) < std::tie(y.i, y.j, y.k, y.l);
  });

  if (net.quadruples_.empty()) {
    throw BuildError("build_network: no conservative collisions on a grid with V/h = " +
                     std::to_string(r) + "; the smallest usable grid has V/h = 1 (3^d nodes)");
  }
  net.finalize();
  return net;
}

Moments moments(const VelocityNetwork& net, const DensityState& f) {
  if (f.size() != net.size()) throw ArgumentError("moments: density size mismatch");
  Moments m;
  const double w = net.node_weight();
  for (int v = 0; v < net.size(); ++v) {
    const double mass = w * f(v);
    m.mass += mass;
    for (int c = 0; c < net.dim(); ++c) m.momentum[c] += mass * net.node(v)[c];
    m.energy += mass * norm2(net.node(v));
  }
  return m;
}

MomentTargets resolve(const VelocityNetwork& net, MomentTargets targets) {
  if (targets.energy < 0.0) targets.energy = net.dim() * targets.mass;
  return targets;
}

MomentTargets targets_of(const Moments& m) { return {m.mass, m.momentum, m.energy}; }

namespace {

Eigen::VectorXd target_vector(const VelocityNetwork& net, const MomentTargets& t) {
  Eigen::VectorXd m(net.dim() + 2);
  m(0) = t.mass;
  for (int c = 0; c < net.dim(); ++c) m(1 + c) = t.momentum[c];
  m(net.dim() + 1) = t.energy;
  return m;
}

void check_feasible(const VelocityNetwork& net, const MomentTargets& t) {
  if (!(t.mass > 0.0)) throw DomainError("moment targets: mass must be positive");
  double speed2 = 0.0;
  for (int c = 0; c < net.dim(); ++c) {
    const double u = t.momentum[c] / t.mass;
    if (std::abs(u) >= net.radius()) throw DomainError("moment targets: mean velocity outside the lattice box");
    speed2 += u * u;
  }
  const double e = t.energy / t.mass;
  double emax = 0.0;
  for (const auto& v : net.nodes()) emax = std::max(emax, norm2(v));
  if (!(e > speed2) || !(e < emax)) {
    throw DomainError("moment targets: energy per mass must lie strictly between |mean|^2 and the largest node energy");
  }
}

}  // namespace

DensityState tilt_to_moments(const VelocityNetwork& net, const DensityState& f0,
                             const MomentTargets& requested) {
  if (f0.size() != net.size()) throw ArgumentError("tilt_to_moments: density size mismatch");
  if ((f0.array() < 0.0).any() || !f0.allFinite() || !(f0.sum() > 0.0)) {
    throw ArgumentError("tilt_to_moments: base density must be nonnegative with positive mass");
  }
  const MomentTargets targets = resolve(net, requested);
  check_feasible(net, targets);

  const int n = net.size();
  const int p = net.dim() + 2;
  const double w = net.node_weight();
  const Eigen::MatrixXd& phi = net.invariants();
  const Eigen::VectorXd goal = target_vector(net, targets);
  const double scale = goal.cwiseAbs().maxCoeff();

  Eigen::VectorXd theta = Eigen::VectorXd::Zero(p);
  theta(0) = std::log(targets.mass / (w * f0.sum()));

  auto evaluate = [&](const Eigen::VectorXd& th, Eigen::VectorXd& f) {
    const Eigen::VectorXd expo = phi * th;
    f.resize(n);
    for (int v = 0; v < n; ++v) f(v) = f0(v) * std::exp(expo(v));
    return w * f.sum() - th.dot(goal);
  };

  Eigen::VectorXd f;
  double value = evaluate(theta, f);
  double residual = 0.0;
  for (int iter = 0; iter < 200; ++iter) {
    const Eigen::VectorXd wf = w * f;
    const Eigen::VectorXd grad = phi.transpose() * wf - goal;
    residual = grad.cwiseAbs().maxCoeff();
    if (residual <= 1e-12 * std::max(1.0, scale)) return f;
    const Eigen::MatrixXd hess = phi.transpose() * wf.asDiagonal() * phi;
    const Eigen::VectorXd step = hess.completeOrthogonalDecomposition().solve(-grad);
    double alpha = 1.0;
    Eigen::VectorXd trial_f;
    double trial = evaluate(theta + step, trial_f);
    // Below this decrement the dual value is pure rounding noise.
    const bool tiny = -grad.dot(step) <= 1e-14 * (1.0 + std::abs(value));
    while (!tiny && !(std::isfinite(trial) && trial <= value + 1e-4 * alpha * grad.dot(step)) && alpha > 1e-12) {
      alpha *= 0.5;
      trial = evaluate(theta + alpha * step, trial_f);
    }
    if (alpha <= 1e-12) {
      // No decrease possible: we are at the floating-point floor.
      if (residual <= 1e-11 * std::max(1.0, scale)) return f;
      throw NumericalError("tilt_to_moments: line search failed (residual " + std::to_string(residual) + ")");
    }
    theta += alpha * step;
    f = std::move(trial_f);
    value = trial;
    if (!theta.allFinite() || theta.cwiseAbs().maxCoeff() > 1e8) {
      throw DomainError("tilt_to_moments: exponential tilt diverges; moments not attainable");
    }
  }
  throw ConvergenceError("tilt_to_moments: Newton iteration did not converge in 200 steps", residual);
}

DensityState maxent_project(const VelocityNetwork& net, const MomentTargets& targets) {
  return tilt_to_moments(net, DensityState::Ones(net.size()), targets);
}

DensityState density_from_mixture(const VelocityNetwork& net, const GaussianMixture& mix,
                                  const MomentTargets& targets) {
  if (mix.dim() != net.dim()) throw ArgumentError("density_from_mixture: dimension mismatch");
  DensityState f(net.size());
  for (int v = 0; v < net.size(); ++v) {
    Eigen::VectorXd x(net.dim());
    for (int c = 0; c < net.dim(); ++c) x(c) = net.node(v)[c];
    f(v) = mix.density(x);
  }
  return tilt_to_moments(net, f, targets);
}

GaussianMixture bimodal_mixture(int d, double offset, double var) {
  Eigen::VectorXd m = Eigen::VectorXd::Zero(d);
  m(0) = offset;
  const Eigen::MatrixXd cov = var * Eigen::MatrixXd::Identity(d, d);
  return GaussianMixture({{0.5, m, cov}, {0.5, -m, cov}});
}

std::string network_json(const VelocityNetwork& net) {
  using json = nlohmann::ordered_json;
  json out;
  out["dimension"] = net.dim();
  out["spacing"] = net.spacing();
  out["radius"] = net.radius();
  out["node_weight"] = net.node_weight();
  json kernel;
  switch (net.kernel().kind()) {
    case KernelKind::constant:
      kernel["kind"] = "constant";
      kernel["b"] = net.kernel().b();
      break;
    case KernelKind::clamp:
      kernel["kind"] = "clamp";
      kernel["lo"] = net.kernel().lo();
      kernel["hi"] = net.kernel().hi();
      break;
    case KernelKind::angular:
      kernel["kind"] = "angular";
      kernel["base"] = net.kernel().base();
      kernel["amp"] = net.kernel().amp();
      break;
  }
  out["kernel"] = kernel;
  json nodes = json::array();
  for (int v = 0; v < net.size(); ++v) {
    json lat = json::array();
    json vel = json::array();
    for (int c = 0; c < net.dim(); ++c) {
      lat.push_back(net.lattice(v)[c]);
      vel.push_back(net.node(v)[c]);
    }
    nodes.push_back(json{{"index", v}, {"lattice", lat}, {"velocity", vel}});
  }
  out["nodes"] = nodes;
  json quads = json::array();
  for (const auto& q : net.quadruples()) {
    json om = json::array();
    for (int c = 0; c < net.dim(); ++c) om.push_back(q.omega[c]);
    quads.push_back(json{{"i", q.i}, {"j", q.j}, {"k", q.k}, {"l", q.l},
                         {"omega", om}, {"B", q.kernel}, {"W", q.weight}});
  }
  out["quadruples"] = quads;
  return out.dump(1) + "\n";
}

}  // namespace kflow
