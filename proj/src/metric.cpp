#include "kflow/metric.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "json.hpp"

#include "kflow/errors.hpp"
#include "kflow/io.hpp"
#include "kflow/path_energy.hpp"

namespace kflow {

namespace {

// Free interior slices 1..K-1 between fixed endpoints.
class DistanceObjective final : public SliceObjective {
 public:
  DistanceObjective(const PathEnergy& pe, const DensityState& f0, const DensityState& f1, double floor)
      : pe_(pe), f0_(f0), f1_(f1), floor_(floor) {}

  double value(const std::vector<Eigen::VectorXd>& x) const override {
    for (const auto& s : x)
      if (s.minCoeff() < floor_) return std::numeric_limits<double>::infinity();
    double total = 0.0;
    for (std::size_t m = 0; m <= x.size(); ++m) total += pe_.value(slice(x, m), slice(x, m + 1));
    return total;
  }

  SliceModel model(const std::vector<Eigen::VectorXd>& x) const override {
    const std::size_t S = x.size();
    const int n = static_cast<int>(f0_.size());
    SliceModel out;
    out.grad.assign(S, Eigen::VectorXd::Zero(n));
    out.diag.assign(S, Eigen::MatrixXd::Zero(n, n));
    out.upper.assign(S > 0 ? S - 1 : 0, Eigen::MatrixXd::Zero(n, n));
    // Interval m joins slice m (free index m - 1) and slice m + 1 (free index m).
    for (std::size_t m = 0; m <= S; ++m) {
      const PathEnergy::Local loc = pe_.local(slice(x, m), slice(x, m + 1));
      out.value += loc.value;
      if (m >= 1) {
        out.grad[m - 1] += loc.grad_u;
        out.diag[m - 1] += loc.uu;
      }
      if (m < S) {
        out.grad[m] += loc.grad_v;
        out.diag[m] += loc.vv;
      }
      if (m >= 1 && m < S) out.upper[m - 1] += loc.uv;
    }
    return out;
  }

 private:
  const DensityState& slice(const std::vector<Eigen::VectorXd>& x, std::size_t m) const {
    if (m == 0) return f0_;
    if (m == x.size() + 1) return f1_;
    return x[m - 1];
  }
  const PathEnergy& pe_;
  const DensityState& f0_;
  const DensityState& f1_;
  double floor_;
};

}  // namespace

MetricSolution solve_distance(const VelocityNetwork& net, const DensityState& f0,
                              const DensityState& f1, const MetricOptions& opt) {
  if (f0.size() != net.size() || f1.size() != net.size())
    throw ArgumentError("solve_distance: density size mismatch");
  if (opt.K < 1) throw ArgumentError("solve_distance: K must be at least 1");
  if (!(f0.array() > 0.0).all() || !(f1.array() > 0.0).all())
    throw DomainError("solve_distance: endpoints must be strictly positive");
  const Eigen::MatrixXd& N = net.conserved_basis();
  const double mismatch = (N.transpose() * (f1 - f0)).cwiseAbs().maxCoeff() /
                         std::max(1.0, f0.cwiseAbs().maxCoeff());
  if (mismatch > 1e-10)
    throw DomainError("solve_distance: endpoints carry different conserved quantities (mismatch " +
                      fmt_double(mismatch) + ")");

  const double dt = 1.0 / opt.K;
  const PathEnergy pe(net, dt);
  std::vector<Eigen::VectorXd> x0;
  for (int m = 1; m < opt.K; ++m) {
    const double s = static_cast<double>(m) / opt.K;
    x0.push_back((1.0 - s) * f0 + s * f1);
  }
  const DistanceObjective obj(pe, f0, f1, opt.floor);
  NewtonOptions nopt;
  nopt.tol = opt.tol;
  nopt.max_iter = opt.max_iter;
  nopt.floor = opt.floor;
  const NewtonResult nr = minimize_slices(obj, std::move(x0), net.transport_basis(), nopt);

  MetricSolution sol;
  sol.path.push_back(f0);
  for (const auto& s : nr.x) sol.path.push_back(s);
  sol.path.push_back(f1);
  for (std::size_t m = 0; m + 1 < sol.path.size(); ++m) {
    const double e = pe.value(sol.path[m], sol.path[m + 1]);
    sol.slice_actions.push_back(e / dt);
    sol.flux.push_back(pe.flux(sol.path[m], sol.path[m + 1]));
  }
  sol.value = std::sqrt(std::max(nr.value, 0.0));
  sol.value_no_floor = std::sqrt(std::max(path_energy(net, sol.path), 0.0));
  sol.kkt_residual = nr.kkt;
  sol.iterations = nr.iterations;
  sol.cre_residual = kflow::cre_residual(net, sol.path, sol.flux);
  return sol;
}

double gradient_form_residual(const VelocityNetwork& net, const DensityPath& path, const FluxPath& flux) {
  if (path.size() != flux.size() + 1) throw ArgumentError("gradient_form_residual: shape mismatch");
  const auto& quads = net.quadruples();
  const int n = net.size();
  const auto nq = static_cast<Eigen::Index>(quads.size());
  // Incidence G (quadruples x nodes): (G phi)_q = phi_i + phi_j - phi_k - phi_l.
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(nq, n);
  for (Eigen::Index q = 0; q < nq; ++q) {
    const Quadruple& Q = quads[static_cast<std::size_t>(q)];
    G(q, Q.i) += 1.0;
    G(q, Q.j) += 1.0;
    G(q, Q.k) -= 1.0;
    G(q, Q.l) -= 1.0;
  }
  double worst = 0.0;
  for (std::size_t m = 0; m < flux.size(); ++m) {
    if (flux[m].size() != nq) throw ArgumentError("gradient_form_residual: flux size mismatch");
    const DensityState fbar = 0.5 * (path[m] + path[m + 1]);
    Eigen::VectorXd a(nq), U(nq);
    for (Eigen::Index q = 0; q < nq; ++q) {
      const Quadruple& Q = quads[static_cast<std::size_t>(q)];
      const double lm = log_mean(fbar(Q.i) * fbar(Q.j), fbar(Q.k) * fbar(Q.l));
      if (lm <= 0.0) {
        if (flux[m](q) != 0.0) throw DomainError("gradient_form_residual: vanishing log-mean under flux");
        a(q) = 0.0;
        U(q) = 0.0;
        continue;
      }
      a(q) = Q.weight * Q.kernel * lm;
      U(q) = flux[m](q) / (Q.kernel * lm);
    }
    const double norm2 = U.dot(a.asDiagonal() * U);
    if (!(norm2 > 0.0)) continue;
    // Weighted least squares: min_phi |U - G phi|_a.
    const Eigen::MatrixXd A = G.transpose() * a.asDiagonal() * G;
    const Eigen::VectorXd b = G.transpose() * a.asDiagonal() * U;
    const Eigen::VectorXd phi = A.completeOrthogonalDecomposition().solve(b);
    const Eigen::VectorXd res = U - G * phi;
    worst = std::max(worst, std::sqrt(res.dot(a.asDiagonal() * res) / norm2));
  }
  return worst;
}

double action_spread(const std::vector<double>& actions) {
  if (actions.empty()) return 0.0;
  double mean = 0.0;
  for (double a : actions) mean += a;
  mean /= static_cast<double>(actions.size());
  if (mean == 0.0) return 0.0;
  double var = 0.0;
  for (double a : actions) var += (a - mean) * (a - mean);
  return std::sqrt(var / static_cast<double>(actions.size())) / mean;
}

std::string metric_json(const MetricSolution& sol) {
  nlohmann::ordered_json j;
  j["value"] = sol.value;
  j["value_no_floor"] = sol.value_no_floor;
  j["kkt_residual"] = sol.kkt_residual;
  j["cre_residual"] = sol.cre_residual;
  j["iterations"] = sol.iterations;
  j["slices"] = sol.path.size() - 1;
  j["slice_actions"] = sol.slice_actions;
  j["action_spread"] = action_spread(sol.slice_actions);
  return j.dump(1) + "\n";
}

std::string path_csv(const DensityPath& path) {
  std::ostringstream out;
  out << "slice,node,f\n";
  for (std::size_t m = 0; m < path.size(); ++m)
    for (Eigen::Index v = 0; v < path[m].size(); ++v) out << m << ',' << v << ',' << fmt_double(path[m](v)) << '\n';
  return out.str();
}

}  // namespace kflow
