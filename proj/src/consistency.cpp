#include "kflow/consistency.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>
#include <tuple>

#include "kflow/errors.hpp"
#include "kflow/io.hpp"
#include "kflow/lattice_walk.hpp"
#include "kflow/rng.hpp"

namespace kflow {

namespace {

std::pair<double, double> mean_ci(const std::vector<double>& x) {
  const auto n = static_cast<double>(x.size());
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= n;
  if (x.size() < 2) return {mean, 0.0};
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  var /= n - 1.0;
  return {mean, 1.96 * std::sqrt(var / n)};
}

}  // namespace

void parallel_for(int count, int threads, const std::function<void(int)>& body) {
  threads = std::max(1, std::min(threads, count));
  if (threads == 1) {
    for (int r = 0; r < count; ++r) body(r);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (int k = 0; k < threads; ++k) {
    pool.emplace_back([&] {
      for (int r = next++; r < count; r = next++) {
        try {
          body(r);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

double density_moment(const VelocityNetwork& net, const DensityState& f, int p) {
  double total = 0.0;
  for (int v = 0; v < net.size(); ++v) total += f(v) * std::pow(norm(net.node(v)), p);
  return net.node_weight() * total;
}

ConsistencyReport consistency_report(const VelocityNetwork& net, const DensityState& f0,
                                     const ForwardTrajectory& fwd, const ConsistencyOptions& opt) {
  if (f0.size() != net.size() || fwd.states.empty() || fwd.states.front().size() != net.size())
    throw ArgumentError("consistency_report: densities do not live on this network");
  if (opt.replicates < 1 || opt.probe_times.empty()) throw ArgumentError("consistency_report: nothing to compare");
  if (opt.probe_times.back() > fwd.times.back() + 1e-12)
    throw ArgumentError("consistency_report: probe times exceed the forward run");

  const LatticeWalk walk(net);
  std::vector<double> fwd2, fwd4;
  for (double t : opt.probe_times) {
    const DensityState f = fwd.state_at(t);
    fwd2.push_back(density_moment(net, f, 2) / density_moment(net, f, 0));
    fwd4.push_back(density_moment(net, f, 4) / density_moment(net, f, 0));
  }

  ConsistencyReport rep;
  const std::size_t P = opt.probe_times.size();
  for (int N : opt.particle_counts) {
    const std::uint64_t base = derive_seed(opt.seed, static_cast<std::uint64_t>(N));
    std::vector<std::vector<double>> m2(P), m4(P);
    for (std::size_t k = 0; k < P; ++k) {
      m2[k].assign(static_cast<std::size_t>(opt.replicates), 0.0);
      m4[k].assign(static_cast<std::size_t>(opt.replicates), 0.0);
    }
    ParticleCountSummary sum{N, 0.0, 0.0, std::vector<double>(static_cast<std::size_t>(opt.replicates), 0.0), {}};
    for (int r = 0; r < opt.replicates; ++r) sum.seeds.push_back(derive_seed(base, static_cast<std::uint64_t>(r)));

    parallel_for(opt.replicates, opt.threads, [&](int r) {
      const std::uint64_t seed = sum.seeds[static_cast<std::size_t>(r)];
      const auto snaps = walk.simulate(walk.sample(N, f0, seed), opt.probe_times.back(), opt.probe_times, seed);
      double worst = 0.0;
      for (std::size_t k = 0; k < P; ++k) {
        m2[k][static_cast<std::size_t>(r)] = count_moment(net, snaps[k], 2);
        m4[k][static_cast<std::size_t>(r)] = count_moment(net, snaps[k], 4);
        worst = std::max(worst, std::abs(m4[k][static_cast<std::size_t>(r)] - fwd4[k]));
      }
      sum.per_replicate[static_cast<std::size_t>(r)] = worst;
    });

    for (std::size_t k = 0; k < P; ++k) {
      const auto [a2, c2] = mean_ci(m2[k]);
      const auto [a4, c4] = mean_ci(m4[k]);
      rep.rows.push_back({opt.probe_times[k], N, "m2", a2, c2, fwd2[k]});
      rep.rows.push_back({opt.probe_times[k], N, "m4", a4, c4, fwd4[k]});
    }
    std::tie(sum.sup_mean, sum.sup_ci) = mean_ci(sum.per_replicate);
    rep.summary.push_back(std::move(sum));
  }
  return rep;
}

std::string consistency_csv(const ConsistencyReport& report) {
  std::ostringstream out;
  out << "time,N,moment,kac_mean,kac_ci,fwd_value\n";
  for (const auto& r : report.rows)
    out << fmt_double(r.time) << ',' << r.N << ',' << r.moment << ',' << fmt_double(r.kac_mean) << ','
        << fmt_double(r.kac_ci) << ',' << fmt_double(r.fwd_value) << '\n';
  return out.str();
}

}  // namespace kflow
