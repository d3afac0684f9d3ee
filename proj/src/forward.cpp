#include "kflow/forward.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "kflow/errors.hpp"
#include "kflow/io.hpp"

namespace kflow {

namespace {

// Q without the sign check: Runge-Kutta stages may dip below zero.
Eigen::VectorXd rate(const VelocityNetwork& net, const Eigen::VectorXd& f) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(net.size());
  for (const auto& q : net.quadruples()) {
    const double r = q.weight * q.kernel * (f(q.k) * f(q.l) - f(q.i) * f(q.j));
    out(q.i) += r;
    out(q.j) += r;
    out(q.k) -= r;
    out(q.l) -= r;
  }
  return out / net.node_weight();
}

// Dormand-Prince 5(4).
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

void record(ForwardTrajectory& traj, const VelocityNetwork& net, double t, const DensityState& f) {
  traj.times.push_back(t);
  traj.states.push_back(f);
  traj.entropy.push_back(entropy(net, f));
  traj.dissipation.push_back(dissipation(net, f).value());
  traj.speed2.push_back(discrete_action(net, f, boltzmann_flux(net, f)).value());
  traj.moments.push_back(moments(net, f));
}

}  // namespace

std::vector<double> uniform_stops(double T, double dt) {
  if (!(dt > 0.0) || !(T > 0.0)) throw ArgumentError("uniform_stops: T and dt must be positive");
  const long n = std::lround(T / dt);
  std::vector<double> stops;
  for (long k = 1; k <= n; ++k) stops.push_back(std::min(T, static_cast<double>(k) * dt));
  if (stops.empty() || stops.back() < T) stops.push_back(T);
  return stops;
}

DensityState ForwardTrajectory::state_at(double t) const {
  if (times.empty()) throw ArgumentError("state_at: empty trajectory");
  if (t <= times.front()) return states.front();
  if (t >= times.back()) return states.back();
  const auto it = std::lower_bound(times.begin(), times.end(), t);
  const auto hi = static_cast<std::size_t>(it - times.begin());
  if (std::abs(times[hi] - t) <= 1e-12 * std::max(1.0, std::abs(t))) return states[hi];
  const std::size_t lo = hi - 1;
  if (std::abs(times[lo] - t) <= 1e-12 * std::max(1.0, std::abs(t))) return states[lo];
  const double theta = (t - times[lo]) / (times[hi] - times[lo]);
  return (1.0 - theta) * states[lo] + theta * states[hi];
}

ForwardTrajectory solve_forward(const VelocityNetwork& net, const DensityState& f0,
                                const ForwardOptions& opt) {
  if (f0.size() != net.size()) throw ArgumentError("solve_forward: density size mismatch");
  if (!(f0.array() > 0.0).all()) throw ArgumentError("solve_forward: initial density must be strictly positive");
  if (!(opt.T >= 0.0) || !(opt.dt_init > 0.0)) throw ArgumentError("solve_forward: need T >= 0 and dt_init > 0");

  std::vector<double> stops = opt.stops;
  stops.push_back(opt.T);
  std::sort(stops.begin(), stops.end());
  stops.erase(std::unique(stops.begin(), stops.end()), stops.end());
  stops.erase(std::remove_if(stops.begin(), stops.end(), [&](double s) { return s <= 0.0 || s > opt.T; }),
              stops.end());

  ForwardTrajectory traj;
  record(traj, net, 0.0, f0);
  traj.stop_index.push_back(0);
  if (opt.T == 0.0) return traj;

  DensityState f = f0;
  double t = 0.0;
  double dt = opt.dt_init;
  std::size_t next_stop = 0;
  Eigen::VectorXd k1 = rate(net, f);
  long steps = 0;

  while (next_stop < stops.size()) {
    if (++steps > opt.max_steps) throw NumericalError("solve_forward: step limit reached");
    const double target = stops[next_stop];
    double h = dt;
    bool lands = false;
    if (t + h >= target - 1e-12 * std::max(1.0, target)) {
      h = target - t;
      lands = true;
    }
    if (h < 1e-12) throw NumericalError("solve_forward: step size underflow (stiff or singular dynamics)");

    const Eigen::VectorXd k2 = rate(net, f + h * (a21 * k1));
    const Eigen::VectorXd k3 = rate(net, f + h * (a31 * k1 + a32 * k2));
    const Eigen::VectorXd k4 = rate(net, f + h * (a41 * k1 + a42 * k2 + a43 * k3));
    const Eigen::VectorXd k5 = rate(net, f + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    const Eigen::VectorXd k6 = rate(net, f + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    const Eigen::VectorXd next = f + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    const Eigen::VectorXd k7 = rate(net, next);
    const Eigen::VectorXd err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

    if (!next.allFinite()) throw NumericalError("solve_forward: non-finite state");

    double acc = 0.0;
    for (int v = 0; v < f.size(); ++v) {
      const double sc = opt.atol + opt.rtol * std::max(std::abs(f(v)), std::abs(next(v)));
      acc += (err(v) / sc) * (err(v) / sc);
    }
    const double enorm = std::sqrt(acc / static_cast<double>(f.size()));

    if ((next.array() < 0.0).any()) {
      ++traj.positivity_rejections;
      dt = 0.5 * h;
      continue;
    }
    if (enorm > 1.0) {
      ++traj.rejected_steps;
      dt = h * std::clamp(0.9 * std::pow(enorm, -0.2), 0.2, 1.0);
      continue;
    }

    const double h_before = traj.entropy.back();
    t = lands ? target : t + h;
    f = next;
    k1 = k7;
    record(traj, net, t, f);
    if (traj.entropy.back() > h_before + 1e-12 * std::abs(h_before)) {
      std::ostringstream msg;
      msg << "solve_forward: entropy increased at t = " << t << " (" << h_before << " -> "
          << traj.entropy.back() << ")";
      throw InvariantError(msg.str());
    }
    if (lands) {
      traj.stop_index.push_back(traj.size() - 1);
      ++next_stop;
    }
    const double grow = enorm > 0.0 ? std::clamp(0.9 * std::pow(enorm, -0.2), 0.2, 5.0) : 5.0;
    // A step shortened to hit a stop says nothing about the admissible size.
    dt = lands ? std::max(dt, h * grow) : h * grow;
  }
  return traj;
}

double simpson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 3) throw ArgumentError("simpson: need at least three samples");
  double total = 0.0;
  std::size_t i = 0;
  for (; i + 2 < x.size(); i += 2) {
    const double h0 = x[i + 1] - x[i];
    const double h1 = x[i + 2] - x[i + 1];
    total += (h0 + h1) / 6.0 *
             ((2.0 - h1 / h0) * y[i] + (h0 + h1) * (h0 + h1) / (h0 * h1) * y[i + 1] +
              (2.0 - h0 / h1) * y[i + 2]);
  }
  if (i + 1 < x.size()) {
    // Odd interval count: quadratic through the last three samples.
    const std::size_t a = x.size() - 3;
    const double h0 = x[a + 1] - x[a];
    const double h1 = x[a + 2] - x[a + 1];
    total += h1 * (y[a + 2] * (2 * h1 + 3 * h0) / (6 * (h0 + h1)) +
                   y[a + 1] * (h1 + 3 * h0) / (6 * h0) - y[a] * h1 * h1 / (6 * h0 * (h0 + h1)));
  }
  return total;
}

EnergyIdentityReport energy_identity_report(const ForwardTrajectory& traj,
                                            std::span<const std::size_t> indices) {
  std::vector<std::size_t> idx(indices.begin(), indices.end());
  if (idx.empty()) {
    idx.resize(traj.size());
    for (std::size_t k = 0; k < idx.size(); ++k) idx[k] = k;
  }
  if (idx.size() < 3) throw ArgumentError("energy_identity_report: need at least three samples");
  std::vector<double> t, h, d, s;
  for (std::size_t k : idx) {
    if (k >= traj.size()) throw ArgumentError("energy_identity_report: index out of range");
    t.push_back(traj.times[k]);
    h.push_back(traj.entropy[k]);
    d.push_back(traj.dissipation[k]);
    s.push_back(traj.speed2[k]);
  }
  EnergyIdentityReport rep;
  std::size_t i = 0;
  for (; i + 2 < t.size(); i += 2) {
    const double integral = simpson(std::span(t).subspan(i, 3), std::span(d).subspan(i, 3));
    rep.panel_residuals.push_back(std::abs(h[i + 2] - h[i] + integral));
  }
  if (i + 1 < t.size()) {
    const std::size_t a = t.size() - 3;
    const double h0 = t[a + 1] - t[a];
    const double h1 = t[a + 2] - t[a + 1];
    const double tail = h1 * (d[a + 2] * (2 * h1 + 3 * h0) / (6 * (h0 + h1)) +
                              d[a + 1] * (h1 + 3 * h0) / (6 * h0) - d[a] * h1 * h1 / (6 * h0 * (h0 + h1)));
    rep.panel_residuals.push_back(std::abs(h[a + 2] - h[a + 1] + tail));
  }
  for (double r : rep.panel_residuals) rep.max_panel_residual = std::max(rep.max_panel_residual, r);
  const double int_d = simpson(t, d);
  const double int_s = simpson(t, s);
  rep.total_residual = h.back() - h.front() + int_d;
  rep.max_slope_residual = h.back() - h.front() + 0.5 * (int_d + int_s);
  return rep;
}

double entropy_rate_residual(const ForwardTrajectory& traj, std::span<const std::size_t> indices) {
  if (indices.size() < 5) throw ArgumentError("entropy_rate_residual: need at least five samples");
  double worst = 0.0;
  for (std::size_t k = 2; k + 2 < indices.size(); ++k) {
    const double step = traj.times[indices[k + 1]] - traj.times[indices[k]];
    const double dh = (-traj.entropy[indices[k + 2]] + 8.0 * traj.entropy[indices[k + 1]] -
                       8.0 * traj.entropy[indices[k - 1]] + traj.entropy[indices[k - 2]]) /
                      (12.0 * step);
    const double d = traj.dissipation[indices[k]];
    worst = std::max(worst, std::abs(dh + d) / d);
  }
  return worst;
}

std::string trajectory_csv(const ForwardTrajectory& traj, int dim) {
  std::ostringstream out;
  out << "time,H,D,mass,px,py";
  if (dim == 3) out << ",pz";
  out << ",energy\n";
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const Moments& m = traj.moments[k];
    out << fmt_double(traj.times[k]) << ',' << fmt_double(traj.entropy[k]) << ','
        << fmt_double(traj.dissipation[k]) << ',' << fmt_double(m.mass);
    for (int c = 0; c < dim; ++c) out << ',' << fmt_double(m.momentum[c]);
    out << ',' << fmt_double(m.energy) << '\n';
  }
  return out.str();
}

}  // namespace kflow
