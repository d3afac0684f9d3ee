#include "kflow/path_energy.hpp"

#include <array>
#include <cmath>
#include <limits>

#include "kflow/errors.hpp"

namespace kflow {

struct PathEnergy::Mobility {
  Eigen::VectorXd a;  // W B Lambda per quadruple
  std::vector<std::array<double, 4>> grad;              // da/d fbar at (i, j, k, l)
  std::vector<std::array<std::array<double, 4>, 4>> hess;
  Eigen::LLT<Eigen::MatrixXd> reduced;  // T^T L T
};

PathEnergy::PathEnergy(const VelocityNetwork& net, double dt) : net_(&net), dt_(dt) {
  if (!(dt > 0.0)) throw ArgumentError("PathEnergy: dt must be positive");
}

PathEnergy::Mobility PathEnergy::mobility(const DensityState& f, bool jets) const {
  const auto& quads = net_->quadruples();
  const int n = net_->size();
  Mobility mob;
  mob.a.resize(static_cast<Eigen::Index>(quads.size()));
  if (jets) {
    mob.grad.resize(quads.size());
    mob.hess.resize(quads.size());
  }
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t q = 0; q < quads.size(); ++q) {
    const Quadruple& Q = quads[q];
    const std::array<int, 4> idx{Q.i, Q.j, Q.k, Q.l};
    const std::array<double, 4> sg{1.0, 1.0, -1.0, -1.0};
    const double s = f(Q.i) * f(Q.j);
    const double t = f(Q.k) * f(Q.l);
    const double wb = Q.weight * Q.kernel;
    if (jets) {
      const LogMeanJet lj = log_mean_jet(s, t);
      mob.a(q) = wb * lj.value;
      // ds/df and dt/df at the four slots (repeated nodes add up later).
      const std::array<double, 4> ds{f(Q.j), f(Q.i), 0.0, 0.0};
      const std::array<double, 4> dtv{0.0, 0.0, f(Q.l), f(Q.k)};
      for (int x = 0; x < 4; ++x) {
        mob.grad[q][x] = wb * (lj.ds * ds[x] + lj.dt * dtv[x]);
        for (int y = 0; y < 4; ++y) {
          double h = lj.dss * ds[x] * ds[y] + lj.dst * (ds[x] * dtv[y] + dtv[x] * ds[y]) +
                     lj.dtt * dtv[x] * dtv[y];
          if ((x == 0 && y == 1) || (x == 1 && y == 0)) h += lj.ds;
          if ((x == 2 && y == 3) || (x == 3 && y == 2)) h += lj.dt;
          mob.hess[q][x][y] = wb * h;
        }
      }
    } else {
      mob.a(q) = wb * log_mean(s, t);
    }
    for (int x = 0; x < 4; ++x)
      for (int y = 0; y < 4; ++y) L(idx[x], idx[y]) += mob.a(q) * sg[x] * sg[y];
  }
  const Eigen::MatrixXd& T = net_->transport_basis();
  mob.reduced.compute(T.transpose() * L * T);
  if (mob.reduced.info() != Eigen::Success) throw NumericalError("PathEnergy: singular mobility");
  return mob;
}

double PathEnergy::value(const DensityState& u, const DensityState& v) const {
  if (!(u.array() > 0.0).all() || !(v.array() > 0.0).all())
    return std::numeric_limits<double>::infinity();
  const Mobility mob = mobility(0.5 * (u + v), false);
  const Eigen::MatrixXd& T = net_->transport_basis();
  const Eigen::VectorXd r = (net_->node_weight() / dt_) * (v - u);
  const Eigen::VectorXd tr = T.transpose() * r;
  return dt_ * tr.dot(mob.reduced.solve(tr));
}

Eigen::VectorXd PathEnergy::flux(const DensityState& u, const DensityState& v) const {
  const Mobility mob = mobility(0.5 * (u + v), false);
  const Eigen::MatrixXd& T = net_->transport_basis();
  const Eigen::VectorXd r = (net_->node_weight() / dt_) * (v - u);
  const Eigen::VectorXd psi = T * mob.reduced.solve(T.transpose() * r);
  const auto& quads = net_->quadruples();
  Eigen::VectorXd J(static_cast<Eigen::Index>(quads.size()));
  for (std::size_t q = 0; q < quads.size(); ++q) {
    const Quadruple& Q = quads[q];
    const double p = psi(Q.i) + psi(Q.j) - psi(Q.k) - psi(Q.l);
    J(q) = -mob.a(q) / Q.weight * p;
  }
  return J;
}

PathEnergy::Local PathEnergy::local(const DensityState& u, const DensityState& v) const {
  if (!(u.array() > 0.0).all() || !(v.array() > 0.0).all())
    throw ArgumentError("PathEnergy: densities must be strictly positive");
  const int n = net_->size();
  const Mobility mob = mobility(0.5 * (u + v), true);
  const Eigen::MatrixXd& T = net_->transport_basis();
  const double c = net_->node_weight() / dt_;
  const Eigen::VectorXd r = c * (v - u);
  const Eigen::VectorXd psi = T * mob.reduced.solve(T.transpose() * r);
  const Eigen::MatrixXd Lplus = T * mob.reduced.solve(T.transpose());

  const auto& quads = net_->quadruples();
  Eigen::MatrixXd Y = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd gbar = Eigen::VectorXd::Zero(n);
  Eigen::MatrixXd curv = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t q = 0; q < quads.size(); ++q) {
    const Quadruple& Q = quads[q];
    const std::array<int, 4> idx{Q.i, Q.j, Q.k, Q.l};
    const std::array<double, 4> sg{1.0, 1.0, -1.0, -1.0};
    const double p = psi(Q.i) + psi(Q.j) - psi(Q.k) - psi(Q.l);
    for (int x = 0; x < 4; ++x) {
      gbar(idx[x]) -= dt_ * p * p * mob.grad[q][x];
      for (int y = 0; y < 4; ++y) {
        Y(idx[x], idx[y]) += p * sg[x] * mob.grad[q][y];
        curv(idx[x], idx[y]) += p * p * mob.hess[q][x][y];
      }
    }
  }

  const Eigen::MatrixXd Hrr = 2.0 * dt_ * Lplus;
  const Eigen::MatrixXd Hrf = -2.0 * dt_ * Lplus * Y;
  const Eigen::MatrixXd Hff = 2.0 * dt_ * Y.transpose() * Lplus * Y - dt_ * curv;
  const Eigen::MatrixXd sym = Hrf + Hrf.transpose();

  Local out;
  out.action = r.dot(psi);
  out.value = dt_ * out.action;
  out.grad_u = -c * 2.0 * dt_ * psi + 0.5 * gbar;
  out.grad_v = c * 2.0 * dt_ * psi + 0.5 * gbar;
  out.uu = c * c * Hrr - 0.5 * c * sym + 0.25 * Hff;
  out.vv = c * c * Hrr + 0.5 * c * sym + 0.25 * Hff;
  out.uv = -c * c * Hrr - 0.5 * c * Hrf + 0.5 * c * Hrf.transpose() + 0.25 * Hff;
  return out;
}

double path_energy(const VelocityNetwork& net, const DensityPath& path, double duration) {
  if (path.size() < 2) throw ArgumentError("path_energy: need at least two slices");
  const PathEnergy pe(net, duration / static_cast<double>(path.size() - 1));
  double total = 0.0;
  for (std::size_t m = 0; m + 1 < path.size(); ++m) total += pe.value(path[m], path[m + 1]);
  return total;
}

}  // namespace kflow
