#include "kflow/run.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <iomanip>
#include <random>
#include <sstream>

#include "json.hpp"
#include "kflow/collision_rates.hpp"
#include "kflow/consistency.hpp"
#include "kflow/errors.hpp"
#include "kflow/forward.hpp"
#include "kflow/io.hpp"
#include "kflow/jko.hpp"
#include "kflow/kac.hpp"
#include "kflow/metric.hpp"
#include "kflow/rng.hpp"

namespace kflow {

namespace {

using json = nlohmann::ordered_json;

class Writer {
 public:
  explicit Writer(std::filesystem::path dir) : dir_(std::move(dir)) { std::filesystem::create_directories(dir_); }
  void put(const std::string& name, const std::string& content) {
    write_text(dir_ / name, content);
    files_.push_back({name, sha256_hex(content), content.size()});
  }
  std::vector<ManifestFile> files() const { return files_; }
  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
  std::vector<ManifestFile> files_;
};

double max_moment_drift(const std::vector<Moments>& m, int d, bool momentum_and_energy) {
  double worst = 0.0;
  for (const auto& x : m) {
    if (!momentum_and_energy) {
      worst = std::max(worst, std::abs(x.mass - m.front().mass));
      continue;
    }
    for (int c = 0; c < d; ++c) worst = std::max(worst, std::abs(x.momentum[c] - m.front().momentum[c]));
    worst = std::max(worst, std::abs(x.energy - m.front().energy));
  }
  return worst;
}

std::string state_json(const DensityState& f) {
  return json(std::vector<double>(f.data(), f.data() + f.size())).dump() + "\n";
}

GaussianMixture particle_mixture(const InitialConfig& init, int d) {
  switch (init.kind) {
    case InitialConfig::Kind::maxwellian:
      return GaussianMixture::standard(d);
    case InitialConfig::Kind::bimodal:
      return bimodal_mixture(d, init.offset, init.var);
    case InitialConfig::Kind::mixture:
      return GaussianMixture(init.components);
    case InitialConfig::Kind::values:
      break;
  }
  throw ConfigError("kac: particles need a mixture, bimodal or maxwellian datum");
}

void run_forward(const RunConfig& cfg, const ForwardExperiment& x, Writer& out, RunManifest& man) {
  const VelocityNetwork net = build_network(cfg.network.d, cfg.network.V, cfg.network.h, cfg.kernel);
  const DensityState f0 = build_initial(net, x.initial);
  ForwardOptions opt;
  opt.T = x.T;
  opt.dt_init = x.dt_init;
  opt.rtol = x.rtol;
  opt.atol = x.atol;
  opt.stops = uniform_stops(x.T, x.record_dt);
  const ForwardTrajectory traj = solve_forward(net, f0, opt);
  out.put("trajectory.csv", trajectory_csv(traj, net.dim()));
  out.put("final_state.json", state_json(traj.states.back()));

  double rise = 0.0;
  for (std::size_t k = 1; k < traj.size(); ++k)
    rise = std::max(rise, (traj.entropy[k] - traj.entropy[k - 1]) / std::abs(traj.entropy[k - 1]));
  man.checks.push_back({"entropy_rise_relative", rise, 1e-12});
  man.checks.push_back({"mass_drift", max_moment_drift(traj.moments, net.dim(), false), 1e-12});
  man.checks.push_back({"momentum_energy_drift", max_moment_drift(traj.moments, net.dim(), true), 1e-10});

  json summary;
  if (traj.stop_index.size() >= 3) {
    const EnergyIdentityReport rep = energy_identity_report(traj, traj.stop_index);
    summary["energy_identity_residual"] = rep.total_residual;
    summary["max_slope_residual"] = rep.max_slope_residual;
    summary["max_panel_residual"] = rep.max_panel_residual;
  }
  summary["accepted_steps"] = traj.size() - 1;
  summary["rejected_steps"] = traj.rejected_steps;
  summary["positivity_rejections"] = traj.positivity_rejections;
  summary["final_entropy"] = traj.entropy.back();
  summary["final_dissipation"] = traj.dissipation.back();
  summary["l1_to_equilibrium"] = l1_distance(net, traj.states.back(), maxent_project(net, targets_of(traj.moments.front())));
  out.put("summary.json", summary.dump(1) + "\n");
  man.tolerances = {{"rtol", x.rtol}, {"atol", x.atol}, {"dt_init", x.dt_init}, {"record_dt", x.record_dt}};
}

void run_distance(const RunConfig& cfg, const DistanceExperiment& x, Writer& out, RunManifest& man) {
  const VelocityNetwork net = build_network(cfg.network.d, cfg.network.V, cfg.network.h, cfg.kernel);
  const DensityState f0 = build_initial(net, x.from);
  const DensityState f1 = build_initial(net, x.to);
  MetricOptions opt;
  opt.K = x.K;
  opt.tol = x.tol;
  opt.max_iter = x.max_iter;
  const MetricSolution sol = solve_distance(net, f0, f1, opt);
  out.put("distance.json", metric_json(sol));
  out.put("path.csv", path_csv(sol.path));
  man.checks.push_back({"kkt_residual", sol.kkt_residual, x.tol});
  man.checks.push_back({"cre_residual", sol.cre_residual, 1e-9});
  std::vector<Moments> m;
  for (const auto& s : sol.path) m.push_back(moments(net, s));
  man.checks.push_back({"slice_moment_deviation", std::max(max_moment_drift(m, net.dim(), true),
                                                           max_moment_drift(m, net.dim(), false)),
                        10.0 * x.tol});
  man.tolerances = {{"tol", x.tol}, {"K", x.K}, {"floor", opt.floor}};
}

void run_jko(const RunConfig& cfg, const JkoExperiment& x, Writer& out, RunManifest& man) {
  const VelocityNetwork net = build_network(cfg.network.d, cfg.network.V, cfg.network.h, cfg.kernel);
  const DensityState f0 = build_initial(net, x.initial);
  JkoOptions opt;
  opt.K = x.K;
  opt.tol = x.tol;
  opt.max_iter = x.max_iter;
  const JkoTrajectory traj = jko_trajectory(net, f0, x.tau, x.T, opt);
  out.put("jko.csv", jko_csv(traj));
  out.put("terminal_state.json", state_json(traj.states.back()));

  ForwardOptions fo;
  fo.T = x.T;
  fo.stops = x.probe_times;
  const ForwardTrajectory fwd = solve_forward(net, f0, fo);
  std::ostringstream cmp;
  cmp << "time,l1,w1\n";
  for (const auto& r : compare_to_forward(net, traj, fwd, x.probe_times))
    cmp << fmt_double(r.time) << ',' << fmt_double(r.l1) << ',' << fmt_double(r.w1) << '\n';
  out.put("comparison.csv", cmp.str());

  double rise = 0.0;
  double h_prev = entropy(net, f0);
  std::vector<Moments> m{moments(net, f0)};
  for (const auto& s : traj.steps) {
    rise = std::max(rise, s.entropy - h_prev);
    h_prev = s.entropy;
    m.push_back(moments(net, s.state));
  }
  man.checks.push_back({"entropy_rise", rise, 10.0 * x.tol});
  man.checks.push_back({"moment_drift", std::max(max_moment_drift(m, net.dim(), true), max_moment_drift(m, net.dim(), false)),
                        10.0 * x.tol});
  man.tolerances = {{"tol", x.tol}, {"K", x.K}, {"tau", x.tau}, {"floor", opt.floor}};
}

void run_kac(const RunConfig& cfg, const KacExperiment& x, Writer& out, RunManifest& man, int threads) {
  const int d = cfg.network.d;
  const GaussianMixture mix = particle_mixture(x.initial, d);
  struct Result {
    KacRun run;
    std::vector<EmpiricalMoments> moments;
    std::vector<EntropyEstimate> entropy;
    ParticleState initial;
  };
  std::vector<Result> results(static_cast<std::size_t>(x.replicates));
  for (int r = 0; r < x.replicates; ++r) man.derived_seeds.push_back(derive_seed(cfg.seed, static_cast<std::uint64_t>(r)));

  parallel_for(x.replicates, threads, [&](int r) {
    const std::uint64_t seed = man.derived_seeds[static_cast<std::size_t>(r)];
    Result& res = results[static_cast<std::size_t>(r)];
    res.initial = sample_initial(x.N, mix, seed);
    KacOptions opt;
    opt.T = x.T;
    opt.snapshot_times = x.snapshot_times;
    opt.log_events = x.log_events;
    res.run = simulate(res.initial, cfg.kernel, opt, seed);
    for (const auto& s : res.run.snapshots) {
      res.moments.push_back(empirical_moments(s));
      if (x.entropy_samples >= 2) res.entropy.push_back(empirical_entropy(s, x.ou_time, seed, x.entropy_samples));
    }
  });

  std::ostringstream csv;
  csv << "replicate,time,mean_x,mean_y" << (d == 3 ? ",mean_z" : "") << ",second,fourth,entropy,entropy_se\n";
  double mom = 0.0, en = 0.0;
  for (int r = 0; r < x.replicates; ++r) {
    const Result& res = results[static_cast<std::size_t>(r)];
    if (x.log_events) {
      out.put("events_" + std::to_string(r) + ".csv", event_csv(res.run.log, d));
    }
    json snaps = json::array();
    for (const auto& s : res.run.snapshots) snaps.push_back(json::parse(kflow::state_json(s)));
    out.put("snapshots_" + std::to_string(r) + ".json", snaps.dump() + "\n");
    for (std::size_t k = 0; k < res.moments.size(); ++k) {
      const auto& m = res.moments[k];
      csv << r << ',' << fmt_double(x.snapshot_times[k]);
      for (int c = 0; c < d; ++c) csv << ',' << fmt_double(m.mean[c]);
      csv << ',' << fmt_double(m.second) << ',' << fmt_double(m.fourth);
      if (k < res.entropy.size()) csv << ',' << fmt_double(res.entropy[k].value) << ',' << fmt_double(res.entropy[k].std_error);
      else csv << ",,";
      csv << '\n';
    }
    const auto& fin = res.run.state;
    Velocity sum = Velocity::zero(d);
    double e = 0.0;
    for (const auto& v : fin.v) {
      sum = sum + v;
      e += norm2(v);
    }
    mom = std::max(mom, norm(sum) / x.N);
    en = std::max(en, std::abs(e - static_cast<double>(x.N) * d) / (static_cast<double>(x.N) * d));
  }
  out.put("moments.csv", csv.str());
  man.checks.push_back({"momentum_per_particle", mom, 1e-9});
  man.checks.push_back({"energy_relative_drift", en, 1e-9});
  man.tolerances = {{"ou_time", x.ou_time}, {"entropy_samples", x.entropy_samples}};
}

void run_consistency(const RunConfig& cfg, const ConsistencyExperiment& x, Writer& out, RunManifest& man,
                     int threads) {
  const VelocityNetwork net = build_network(cfg.network.d, cfg.network.V, cfg.network.h, cfg.kernel);
  const DensityState f0 = build_initial(net, x.initial);
  ForwardOptions fo;
  fo.T = x.T;
  fo.stops = uniform_stops(x.T, x.probe_dt);
  const ForwardTrajectory fwd = solve_forward(net, f0, fo);
  ConsistencyOptions opt;
  opt.particle_counts = x.N;
  opt.replicates = x.replicates;
  opt.probe_times = fo.stops;
  opt.probe_times.insert(opt.probe_times.begin(), 0.0);
  opt.seed = cfg.seed;
  opt.threads = threads;
  const ConsistencyReport rep = consistency_report(net, f0, fwd, opt);
  out.put("consistency.csv", consistency_csv(rep));
  json summary = json::array();
  for (const auto& s : rep.summary) {
    summary.push_back({{"N", s.N}, {"sup_m4_discrepancy", s.sup_mean}, {"ci95", s.sup_ci}});
    man.derived_seeds.insert(man.derived_seeds.end(), s.seeds.begin(), s.seeds.end());
  }
  out.put("summary.json", summary.dump(1) + "\n");
  man.tolerances = {{"rtol", fo.rtol}, {"atol", fo.atol}, {"probe_dt", x.probe_dt}};
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream s;
  s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return s.str();
}

}  // namespace

bool RunManifest::ok() const {
  for (const auto& c : checks)
    if (!c.ok()) return false;
  return true;
}

RunManifest run(const RunConfig& cfg, const std::filesystem::path& dir, int threads) {
  const auto t0 = std::chrono::steady_clock::now();
  RunManifest man;
  man.experiment = experiment_name(cfg.experiment);
  const std::string canonical = canonical_json(cfg);
  man.config_hash = sha256_hex(canonical);
  man.seed = cfg.seed;
  man.started = utc_now();
  Writer out(dir);
  out.put("config.json", canonical);

  if (std::holds_alternative<NetworkExperiment>(cfg.experiment)) {
    const VelocityNetwork net = build_network(cfg.network.d, cfg.network.V, cfg.network.h, cfg.kernel);
    out.put("network.json", network_json(net));
    man.checks.push_back({"spurious_invariants", static_cast<double>(net.spurious_invariants()), 0.0});
  } else if (const auto* x = std::get_if<ForwardExperiment>(&cfg.experiment)) {
    run_forward(cfg, *x, out, man);
  } else if (const auto* x = std::get_if<DistanceExperiment>(&cfg.experiment)) {
    run_distance(cfg, *x, out, man);
  } else if (const auto* x = std::get_if<JkoExperiment>(&cfg.experiment)) {
    run_jko(cfg, *x, out, man);
  } else if (const auto* x = std::get_if<KacExperiment>(&cfg.experiment)) {
    run_kac(cfg, *x, out, man, threads);
  } else if (const auto* x = std::get_if<ConsistencyExperiment>(&cfg.experiment)) {
    run_consistency(cfg, *x, out, man, threads);
  }

  man.files = out.files();
  man.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_text(dir / "manifest.json", manifest_json(man));
  return man;
}

std::string manifest_json(const RunManifest& man) {
  json j;
  j["experiment"] = man.experiment;
  j["version"] = man.version;
  j["config_sha256"] = man.config_hash;
  j["seed"] = man.seed;
  j["started"] = man.started;
  j["wall_seconds"] = man.wall_seconds;
  j["tolerances"] = man.tolerances;
  j["derived_seeds"] = man.derived_seeds;
  json checks = json::array();
  for (const auto& c : man.checks)
    checks.push_back({{"name", c.name}, {"value", c.value}, {"limit", c.limit}, {"ok", c.ok()}});
  j["checks"] = checks;
  json files = json::array();
  for (const auto& f : man.files) files.push_back({{"name", f.name}, {"sha256", f.sha256}, {"bytes", f.bytes}});
  j["files"] = files;
  j["ok"] = man.ok();
  return j.dump(1) + "\n";
}

bool verify_manifest(const std::filesystem::path& dir) {
  const json j = json::parse(read_text(dir / "manifest.json"));
  for (const auto& f : j.at("files")) {
    const auto path = dir / f.at("name").get<std::string>();
    if (!std::filesystem::exists(path) || sha256_file(path) != f.at("sha256").get<std::string>()) return false;
  }
  return true;
}

std::vector<InvariantCheck> selftest(std::uint64_t seed) {
  std::vector<InvariantCheck> out;
  Philox rng(seed, 9);

  // Kinematics.
  double inv = 0.0, energy = 0.0, momentum = 0.0;
  for (int s = 0; s < 20000; ++s) {
    const int d = 2 + s % 2;
    Velocity v = Velocity::zero(d), w = Velocity::zero(d), om = Velocity::zero(d);
    for (int c = 0; c < d; ++c) {
      v[c] = 3.0 * rng.normal();
      w[c] = 3.0 * rng.normal();
      om[c] = rng.normal();
    }
    om = (1.0 / norm(om)) * om;
    const auto [a, b] = collide(v, w, om);
    const auto [c0, c1] = collide(a, b, om);
    for (int c = 0; c < d; ++c) inv = std::max({inv, std::abs(c0[c] - v[c]), std::abs(c1[c] - w[c])});
    energy = std::max(energy, std::abs(norm2(a) + norm2(b) - norm2(v) - norm2(w)) / (1.0 + norm2(v) + norm2(w)));
    const MomentumGrid grid = MomentumGrid::for_speed(std::max(norm(v), norm(w)));
    const auto [g0, g1] = collide_on_grid(grid.snap(v), grid.snap(w), om, grid);
    const Velocity before = grid.snap(v) + grid.snap(w);
    const Velocity after = g0 + g1;
    for (int c = 0; c < d; ++c) momentum = std::max(momentum, std::abs(after[c] - before[c]));
  }
  out.push_back({"collide_involution", inv, 1e-12});
  out.push_back({"collide_energy", energy, 1e-12});
  out.push_back({"collide_on_grid_momentum", momentum, 0.0});

  // Log-mean bounds.
  double lm = 0.0;
  for (int s = 0; s < 100000; ++s) {
    const double a = std::pow(10.0, 24.0 * rng.uniform() - 12.0);
    const double b = std::pow(10.0, 24.0 * rng.uniform() - 12.0);
    const double L = log_mean(a, b);
    const double lo = std::sqrt(a) * std::sqrt(b), hi = 0.5 * (a + b);
    lm = std::max({lm, (lo - L) / L, (L - hi) / L});
  }
  out.push_back({"log_mean_bounds", lm, 1e-14});

  // Network equilibrium and forward conservation.
  const VelocityNetwork net = build_network(2, 3.0, 1.0, Kernel::constant(1.0));
  const DensityState feq = maxent_project(net);
  out.push_back({"equilibrium_Q", collision_operator(net, feq).cwiseAbs().maxCoeff(), 1e-10});
  out.push_back({"spurious_invariants", static_cast<double>(net.spurious_invariants()), 0.0});
  const DensityState f0 = density_from_mixture(net, bimodal_mixture(2, 1.5, 0.6));
  ForwardOptions fo;
  fo.T = 2.0;
  fo.stops = uniform_stops(2.0, 0.0025);
  const ForwardTrajectory traj = solve_forward(net, f0, fo);
  out.push_back({"forward_conservation", max_moment_drift(traj.moments, 2, true), 1e-10});
  out.push_back({"energy_identity", std::abs(energy_identity_report(traj, traj.stop_index).total_residual), 1e-6});

  // Metric and JKO fixed points.
  out.push_back({"distance_self", solve_distance(net, f0, f0).value, 1e-8});
  const MetricSolution sol = solve_distance(net, f0, density_from_mixture(net, bimodal_mixture(2, 1.0, 0.8)));
  out.push_back({"distance_kkt", sol.kkt_residual, 1e-8});
  out.push_back({"distance_action_spread", action_spread(sol.slice_actions), 1e-3});
  out.push_back({"jko_fixed_point", l1_distance(net, jko_step(net, feq, 0.1).state, feq), 1e-8});

  // Kac conservation.
  KacOptions ko;
  ko.T = 20.0;
  ko.log_events = false;
  const ParticleState ps = sample_initial(64, bimodal_mixture(2, 1.5, 0.6), seed);
  const KacRun run = simulate(ps, Kernel::constant(1.0), ko, seed);
  const auto a = ps.grid.total(ps.v), b = ps.grid.total(run.state.v);
  double gap = 0.0;
  for (std::size_t c = 0; c < a.size(); ++c) gap = std::max(gap, std::abs(static_cast<double>(a[c] - b[c])));
  out.push_back({"kac_momentum_exact", gap, 0.0});
  return out;
}

}  // namespace kflow
