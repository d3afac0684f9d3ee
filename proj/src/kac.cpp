#include "kflow/kac.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "kflow/errors.hpp"
#include "kflow/io.hpp"
#include "kflow/rng.hpp"

namespace kflow {

namespace {

Velocity random_direction(Philox& rng, int d) {
  if (d == 2) {
    const double a = 2.0 * std::numbers::pi * rng.uniform();
    return Velocity(std::cos(a), std::sin(a));
  }
  for (;;) {
    Velocity w(rng.normal(), rng.normal(), rng.normal());
    const double n = norm(w);
    if (n > 1e-8) return (1.0 / n) * w;
  }
}

}  // namespace

ParticleState project_to_sphere(std::vector<Velocity> v, int d) {
  const auto N = static_cast<int>(v.size());
  if (N < 2) throw ArgumentError("project_to_sphere: need at least two particles");
  Velocity mean = Velocity::zero(d);
  for (const auto& x : v) mean = mean + x;
  mean = (1.0 / N) * mean;
  double e = 0.0;
  for (auto& x : v) {
    x = x - mean;
    e += norm2(x);
  }
  if (!(e > 0.0)) throw DomainError("project_to_sphere: all particles coincide");
  const double s = std::sqrt(static_cast<double>(N) * d / e);
  ParticleState out;
  out.dim = d;
  // No speed on the sphere exceeds sqrt(N d); the margin absorbs energy roundoff.
  out.grid = MomentumGrid::for_speed(1.5 * std::sqrt(static_cast<double>(N) * d));
  out.v.reserve(v.size());
  for (const auto& x : v) out.v.push_back(out.grid.snap(s * x));
  return out;
}

ParticleState sample_initial(int N, const GaussianMixture& mix, std::uint64_t seed) {
  if (N < 2) throw ArgumentError("sample_initial: N must be at least 2");
  const int d = mix.dim();
  if (d != 2 && d != 3) throw ArgumentError("sample_initial: mixture dimension must be 2 or 3");
  Philox rng(seed, 0);
  std::vector<Eigen::MatrixXd> chol;
  for (const auto& c : mix.components()) chol.push_back(Eigen::LLT<Eigen::MatrixXd>(c.cov).matrixL());
  std::vector<Velocity> v;
  for (int n = 0; n < N; ++n) {
    double u = rng.uniform();
    std::size_t k = 0;
    while (k + 1 < mix.components().size() && u >= mix.components()[k].weight) {
      u -= mix.components()[k].weight;
      ++k;
    }
    Eigen::VectorXd z(d);
    for (int c = 0; c < d; ++c) z(c) = rng.normal();
    const Eigen::VectorXd x = mix.components()[k].mean + chol[k] * z;
    Velocity vel = Velocity::zero(d);
    for (int c = 0; c < d; ++c) vel[c] = x(c);
    v.push_back(vel);
  }
  return project_to_sphere(std::move(v), d);
}

ParticleState sample_initial(int N, const VelocityNetwork& net, const DensityState& f, std::uint64_t seed) {
  if (N < 2) throw ArgumentError("sample_initial: N must be at least 2");
  if (f.size() != net.size() || (f.array() < 0.0).any()) throw ArgumentError("sample_initial: bad node density");
  Philox rng(seed, 0);
  std::vector<double> cdf(static_cast<std::size_t>(net.size()));
  std::partial_sum(f.data(), f.data() + f.size(), cdf.begin());
  std::vector<Velocity> v;
  for (int n = 0; n < N; ++n) {
    const double u = rng.uniform() * cdf.back();
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    v.push_back(net.node(static_cast<int>(std::min<std::ptrdiff_t>(it - cdf.begin(), net.size() - 1))));
  }
  return project_to_sphere(std::move(v), net.dim());
}

KacRun simulate(ParticleState state, const Kernel& kernel, const KacOptions& opt, std::uint64_t seed) {
  const int N = state.size();
  const int d = state.dim;
  if (N < 2) throw ArgumentError("simulate: need at least two particles");
  if (!(opt.T >= 0.0)) throw ArgumentError("simulate: T must be nonnegative");
  if (!std::is_sorted(opt.snapshot_times.begin(), opt.snapshot_times.end()))
    throw ArgumentError("simulate: snapshot times must be sorted");

  const double c2 = kernel.upper_bound();
  const double rate = 0.5 * (N - 1) * c2 * sphere_area(d);
  Philox rng(seed, 1);
  KacRun run;
  run.log.seed = seed;
  std::size_t next_snap = 0;
  double t = 0.0;
  for (;;) {
    const double t_next = t + rng.exponential() / rate;
    while (next_snap < opt.snapshot_times.size() && opt.snapshot_times[next_snap] < std::min(t_next, opt.T + 1e-300)) {
      run.snapshots.push_back(state);
      ++next_snap;
    }
    if (t_next > opt.T) break;
    t = t_next;
    auto i = static_cast<int>(rng.below(static_cast<std::uint64_t>(N)));
    auto j = static_cast<int>(rng.below(static_cast<std::uint64_t>(N - 1)));
    if (j >= i) ++j;
    if (i > j) std::swap(i, j);
    const Velocity omega = random_direction(rng, d);
    const double u = rng.uniform();
    const bool accept = u * c2 < kernel(state.v[i] - state.v[j], omega);
    ++run.proposals;
    KacEvent ev{t, i, j, omega, accept};
    if (accept) {
      ++run.accepted;
      auto [a, b] = collide_on_grid(state.v[i], state.v[j], omega, state.grid);
      state.v[i] = a;
      state.v[j] = b;
      if (opt.on_collision) opt.on_collision(state, ev);
    }
    if (opt.log_events) run.log.events.push_back(ev);
  }
  while (next_snap < opt.snapshot_times.size()) {
    run.snapshots.push_back(state);
    ++next_snap;
  }
  run.state = std::move(state);
  return run;
}

EmpiricalMoments empirical_moments(const ParticleState& state) {
  EmpiricalMoments m;
  const double inv = 1.0 / state.size();
  for (const auto& v : state.v) {
    const double e = norm2(v);
    m.second += inv * e;
    m.fourth += inv * e * e;
    for (int c = 0; c < state.dim; ++c) {
      m.mean[c] += inv * v[c];
      m.coord4[c] += inv * v[c] * v[c] * v[c] * v[c];
    }
  }
  return m;
}

EntropyEstimate empirical_entropy(const ParticleState& state, double ou_time, std::uint64_t seed, int samples) {
  if (!(ou_time > 0.0)) throw ArgumentError("empirical_entropy: ou_time must be positive");
  if (samples < 2) throw ArgumentError("empirical_entropy: need at least two samples");
  const int N = state.size();
  const int d = state.dim;
  const double shrink = std::exp(-ou_time);
  const double var = -std::expm1(-2.0 * ou_time);
  const double sd = std::sqrt(var);
  const double log_norm = -0.5 * d * std::log(2.0 * std::numbers::pi * var) - std::log(static_cast<double>(N));
  std::vector<double> cx(static_cast<std::size_t>(N) * d);
  for (int n = 0; n < N; ++n)
    for (int c = 0; c < d; ++c) cx[static_cast<std::size_t>(n * d + c)] = shrink * state.v[n][c];

  Philox rng(seed, 2);
  std::vector<double> expo(static_cast<std::size_t>(N));
  double sum = 0.0, sum2 = 0.0;
  std::array<double, 3> x{};
  for (int s = 0; s < samples; ++s) {
    const auto k = static_cast<int>(rng.below(static_cast<std::uint64_t>(N)));
    for (int c = 0; c < d; ++c) x[c] = cx[static_cast<std::size_t>(k * d + c)] + sd * rng.normal();
    double top = -std::numeric_limits<double>::infinity();
    for (int n = 0; n < N; ++n) {
      double r2 = 0.0;
      for (int c = 0; c < d; ++c) {
        const double dx = x[c] - cx[static_cast<std::size_t>(n * d + c)];
        r2 += dx * dx;
      }
      expo[n] = -0.5 * r2 / var;
      top = std::max(top, expo[n]);
    }
    double acc = 0.0;
    for (int n = 0; n < N; ++n) acc += std::exp(expo[n] - top);
    const double logp = log_norm + top + std::log(acc);
    sum += logp;
    sum2 += logp * logp;
  }
  const double mean = sum / samples;
  const double var_s = std::max(0.0, (sum2 - samples * mean * mean) / (samples - 1));
  return {mean, std::sqrt(var_s / samples)};
}

std::string event_csv(const EventLog& log, int dim) {
  std::ostringstream out;
  out << "t,i,j,wx,wy";
  if (dim == 3) out << ",wz";
  out << ",accepted\n";
  for (const auto& e : log.events) {
    out << fmt_double(e.time) << ',' << e.i << ',' << e.j;
    for (int c = 0; c < dim; ++c) out << ',' << fmt_double(e.omega[c]);
    out << ',' << (e.accepted ? 1 : 0) << '\n';
  }
  return out.str();
}

std::string state_json(const ParticleState& state) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& v : state.v) {
    nlohmann::ordered_json row = nlohmann::ordered_json::array();
    for (int c = 0; c < state.dim; ++c) row.push_back(v[c]);
    arr.push_back(row);
  }
  return arr.dump() + "\n";
}

}  // namespace kflow
