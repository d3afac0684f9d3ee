#pragma once

#include <Eigen/Dense>
#include <vector>

#include "kflow/network.hpp"
#include "kflow/scalar_calculus.hpp"

namespace kflow {

/// Time-sliced densities f^0..f^K on a uniform grid of [0, duration].
using DensityPath = std::vector<DensityState>;
/// One flux vector (one entry per quadruple) per time interval.
using FluxPath = std::vector<Eigen::VectorXd>;

/// Strong form of the collision operator,
/// Q(f)_v = (1/w) sum_q W_q B_q c_q(v) (f_k f_l - f_i f_j),
/// with c_q(v) = (#v in {i,j}) - (#v in {k,l}): loss at the pre-collision
/// pair, gain at the post-collision pair. Throws ArgumentError on f < 0.
Eigen::VectorXd collision_operator(const VelocityNetwork& net, const DensityState& f);

/// H(f) = sum_v w f_v log f_v with 0 log 0 = 0.
double entropy(const VelocityNetwork& net, const DensityState& f);

/// D(f) = sum_q W_q B_q (t - s)(log t - log s), s = f_i f_j, t = f_k f_l.
ExtendedReal dissipation(const VelocityNetwork& net, const DensityState& f);

/// Flux of the forward equation, J_q = B_q (f_i f_j - f_k f_l) (positive
/// when mass moves from the pre- to the post-collision pair).
Eigen::VectorXd boltzmann_flux(const VelocityNetwork& net, const DensityState& f);

/// Action of a flux at density f.
///
/// Every quadruple stands for the four symmetric points (v, v*), (v*, v),
/// (v', v'*), (v'*, v') of the continuum collision space, so
/// A = 4 sum_q W_q alpha(J_q, B_q f_i f_j, B_q f_k f_l) = sum_q W_q J_q^2 / (B_q L_q).
/// +inf when some quadruple carries flux with a vanishing log-mean.
ExtendedReal discrete_action(const VelocityNetwork& net, const DensityState& f,
                             const Eigen::VectorXd& flux);

/// Max over (node, interval) of |w (f^{m+1} - f^m)/dt + sum_q W_q J^m_q c_q(v)|
/// for a path on [0, duration] with K + 1 slices and K flux vectors.
double cre_residual(const VelocityNetwork& net, const DensityPath& path, const FluxPath& flux,
                    double duration = 1.0);

/// Divergence sum_q W_q J_q c_q(v) of one flux vector.
Eigen::VectorXd flux_divergence(const VelocityNetwork& net, const Eigen::VectorXd& flux);

}  // namespace kflow
