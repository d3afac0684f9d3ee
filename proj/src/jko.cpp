#include "kflow/jko.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "kflow/errors.hpp"
#include "kflow/io.hpp"
#include "kflow/newton.hpp"
#include "kflow/path_energy.hpp"
#include "kflow/transport.hpp"

namespace kflow {

namespace {

// Slices 1..K free; the last one carries the entropy.
class JkoObjective final : public SliceObjective {
 public:
  JkoObjective(const PathEnergy& pe, const DensityState& f_prev, double tau, double w, double floor)
      : pe_(pe), f_prev_(f_prev), inv2tau_(0.5 / tau), w_(w), floor_(floor) {}

  double value(const std::vector<Eigen::VectorXd>& x) const override {
    for (const auto& s : x)
      if (s.minCoeff() < floor_) return std::numeric_limits<double>::infinity();
    double e = pe_.value(f_prev_, x[0]);
    for (std::size_t m = 1; m < x.size(); ++m) e += pe_.value(x[m - 1], x[m]);
    const Eigen::VectorXd& g = x.back();
    return w_ * (g.array() * g.array().log()).sum() + inv2tau_ * e;
  }

  SliceModel model(const std::vector<Eigen::VectorXd>& x) const override {
    const std::size_t S = x.size();
    const auto n = x[0].size();
    SliceModel out;
    out.grad.assign(S, Eigen::VectorXd::Zero(n));
    out.diag.assign(S, Eigen::MatrixXd::Zero(n, n));
    out.upper.assign(S - 1, Eigen::MatrixXd::Zero(n, n));
    for (std::size_t m = 0; m < S; ++m) {
      const DensityState& u = m == 0 ? f_prev_ : x[m - 1];
      const PathEnergy::Local loc = pe_.local(u, x[m]);
      out.value += inv2tau_ * loc.value;
      if (m >= 1) {
        out.grad[m - 1] += inv2tau_ * loc.grad_u;
        out.diag[m - 1] += inv2tau_ * loc.uu;
        out.upper[m - 1] += inv2tau_ * loc.uv;
      }
      out.grad[m] += inv2tau_ * loc.grad_v;
      out.diag[m] += inv2tau_ * loc.vv;
    }
    const Eigen::VectorXd& g = x.back();
    out.value += w_ * (g.array() * g.array().log()).sum();
    out.grad.back() += w_ * (g.array().log() + 1.0).matrix();
    out.diag.back().diagonal() += w_ * g.cwiseInverse();
    return out;
  }

 private:
  const PathEnergy& pe_;
  const DensityState& f_prev_;
  double inv2tau_;
  double w_;
  double floor_;
};

}  // namespace

JkoStep jko_step(const VelocityNetwork& net, const DensityState& f_prev, double tau, const JkoOptions& opt) {
  if (f_prev.size() != net.size()) throw ArgumentError("jko_step: density size mismatch");
  if (!(f_prev.array() > 0.0).all()) throw ArgumentError("jko_step: f_prev must be strictly positive");
  if (!(tau > 0.0) || opt.K < 1) throw ArgumentError("jko_step: need tau > 0 and K >= 1");

  const PathEnergy pe(net, 1.0 / opt.K);
  const JkoObjective obj(pe, f_prev, tau, net.node_weight(), opt.floor);

  // Explicit Euler predictor along the path, constant path as fallback.
  const Eigen::VectorXd q = collision_operator(net, f_prev);
  std::vector<Eigen::VectorXd> x0;
  bool positive = true;
  for (int m = 1; m <= opt.K; ++m) {
    x0.push_back(f_prev + (static_cast<double>(m) / opt.K) * tau * q);
    positive = positive && x0.back().minCoeff() > opt.floor;
  }
  if (!positive || !std::isfinite(obj.value(x0))) x0.assign(static_cast<std::size_t>(opt.K), f_prev);

  NewtonOptions nopt;
  nopt.tol = opt.tol;
  nopt.max_iter = opt.max_iter;
  nopt.floor = opt.floor;
  const NewtonResult nr = minimize_slices(obj, std::move(x0), net.transport_basis(), nopt);

  JkoStep step;
  step.state = nr.x.back();
  step.entropy = entropy(net, step.state);
  step.objective = nr.value;
  step.distance2 = 2.0 * tau * (nr.value - step.entropy);
  step.kkt_residual = nr.kkt;
  step.iterations = nr.iterations;
  const double h_prev = entropy(net, f_prev);
  if (step.objective > h_prev + 10.0 * opt.tol) {
    std::ostringstream msg;
    msg << "jko_step: objective " << step.objective << " exceeds H(f_prev) = " << h_prev;
    throw InvariantError(msg.str());
  }
  return step;
}

const DensityState& JkoTrajectory::at(double t) const {
  if (states.empty()) throw ArgumentError("JkoTrajectory::at: empty trajectory");
  if (t <= 0.0) return states.front();
  // Guard against t/tau landing a rounding error above an integer.
  const double ratio = t / tau;
  auto n = static_cast<std::size_t>(std::ceil(ratio - 1e-9 * std::max(1.0, ratio)));
  if (n < 1) n = 1;
  if (n >= states.size()) throw ArgumentError("JkoTrajectory::at: time beyond the last step");
  return states[n];
}

JkoTrajectory jko_trajectory(const VelocityNetwork& net, const DensityState& f0, double tau, double T,
                             const JkoOptions& opt) {
  if (!(T >= 0.0) || !(tau > 0.0)) throw ArgumentError("jko_trajectory: need T >= 0 and tau > 0");
  JkoTrajectory traj;
  traj.tau = tau;
  traj.states.push_back(f0);
  const auto steps = static_cast<long>(std::ceil(T / tau - 1e-9 * std::max(1.0, T / tau)));
  for (long n = 0; n < steps; ++n) {
    JkoStep step = jko_step(net, traj.states.back(), tau, opt);
    traj.states.push_back(step.state);
    traj.steps.push_back(std::move(step));
  }
  return traj;
}

double l1_distance(const VelocityNetwork& net, const DensityState& f, const DensityState& g) {
  if (f.size() != net.size() || g.size() != net.size()) throw ArgumentError("l1_distance: size mismatch");
  return net.node_weight() * (f - g).cwiseAbs().sum();
}

std::vector<ComparisonRow> compare_to_forward(const VelocityNetwork& net, const JkoTrajectory& jko,
                                              const ForwardTrajectory& fwd,
                                              const std::vector<double>& probe_times) {
  if (jko.states.empty() || fwd.states.empty() || jko.states.front().size() != net.size() ||
      fwd.states.front().size() != net.size())
    throw ArgumentError("compare_to_forward: trajectories do not live on this network");
  std::vector<ComparisonRow> rows;
  for (double t : probe_times) {
    const DensityState& a = jko.at(t);
    const DensityState b = fwd.state_at(t);
    rows.push_back({t, l1_distance(net, a, b), w1_distance(net, a, b)});
  }
  return rows;
}

std::string jko_csv(const JkoTrajectory& traj) {
  std::ostringstream out;
  out << "n,t,H,distance2,objective,kkt\n";
  for (std::size_t n = 0; n < traj.steps.size(); ++n) {
    const JkoStep& s = traj.steps[n];
    out << n + 1 << ',' << fmt_double(static_cast<double>(n + 1) * traj.tau) << ',' << fmt_double(s.entropy) << ','
        << fmt_double(s.distance2) << ',' << fmt_double(s.objective) << ',' << fmt_double(s.kkt_residual) << '\n';
  }
  return out.str();
}

}  // namespace kflow
