#include "kflow/lattice_walk.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "kflow/errors.hpp"
#include "kflow/rng.hpp"

namespace kflow {

LatticeWalk::LatticeWalk(const VelocityNetwork& net) : net_(&net) {
  const int n = net.size();
  reactions_.resize(static_cast<std::size_t>(n * (n + 1) / 2));
  const double w2 = net.node_weight() * net.node_weight();
  for (const auto& q : net.quadruples()) {
    const double kappa = q.weight * q.kernel / w2;
    reactions_[pair_index(q.i, q.j)].push_back({q.k, q.l, q.i == q.j ? 2.0 * kappa : kappa});
    reactions_[pair_index(q.k, q.l)].push_back({q.i, q.j, q.k == q.l ? 2.0 * kappa : kappa});
  }
  total_.resize(reactions_.size());
  for (std::size_t p = 0; p < reactions_.size(); ++p) {
    total_[p] = 0.0;
    for (const auto& r : reactions_[p]) total_[p] += r.rate;
    max_rate_ = std::max(max_rate_, total_[p]);
  }
}

int LatticeWalk::pair_index(int a, int b) const {
  if (a > b) std::swap(a, b);
  // Row-major upper triangle including the diagonal.
  const int n = net_->size();
  return a * n - a * (a - 1) / 2 + (b - a);
}

std::vector<int> LatticeWalk::sample(int N, const DensityState& f, std::uint64_t seed) const {
  if (N < 2) throw ArgumentError("LatticeWalk::sample: N must be at least 2");
  if (f.size() != net_->size() || (f.array() < 0.0).any()) throw ArgumentError("LatticeWalk::sample: bad density");
  std::vector<double> cdf(static_cast<std::size_t>(f.size()));
  std::partial_sum(f.data(), f.data() + f.size(), cdf.begin());
  Philox rng(seed, 3);
  std::vector<int> out;
  for (int p = 0; p < N; ++p) {
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), rng.uniform() * cdf.back());
    out.push_back(static_cast<int>(std::min<std::ptrdiff_t>(it - cdf.begin(), f.size() - 1)));
  }
  return out;
}

std::vector<std::vector<int>> LatticeWalk::simulate(std::vector<int> particles, double T,
                                                    const std::vector<double>& snaps,
                                                    std::uint64_t seed) const {
  const auto N = static_cast<int>(particles.size());
  if (N < 2) throw ArgumentError("LatticeWalk::simulate: need at least two particles");
  if (!std::is_sorted(snaps.begin(), snaps.end())) throw ArgumentError("LatticeWalk::simulate: unsorted snapshots");
  std::vector<int> counts(static_cast<std::size_t>(net_->size()), 0);
  for (int p : particles) ++counts[p];

  const double rate = 0.5 * (N - 1) * max_rate_;
  Philox rng(seed, 4);
  std::vector<std::vector<int>> out;
  std::size_t next = 0;
  double t = 0.0;
  for (;;) {
    const double t_next = rate > 0.0 ? t + rng.exponential() / rate : T + 1.0;
    while (next < snaps.size() && snaps[next] < t_next && snaps[next] <= T) {
      out.push_back(counts);
      ++next;
    }
    if (t_next > T) break;
    t = t_next;
    auto a = static_cast<int>(rng.below(static_cast<std::uint64_t>(N)));
    auto b = static_cast<int>(rng.below(static_cast<std::uint64_t>(N - 1)));
    if (b >= a) ++b;
    const int pi = pair_index(particles[a], particles[b]);
    double u = rng.uniform() * max_rate_;
    if (u >= total_[pi]) continue;
    const auto& list = reactions_[pi];
    for (std::size_t ri = 0; ri < list.size(); ++ri) {
      const Reaction& r = list[ri];
      if (u < r.rate || ri + 1 == list.size()) {
        // Particle a takes the slot matching its node order.
        const bool a_low = particles[a] <= particles[b];
        --counts[particles[a]];
        --counts[particles[b]];
        particles[a] = a_low ? r.k : r.l;
        particles[b] = a_low ? r.l : r.k;
        ++counts[particles[a]];
        ++counts[particles[b]];
        break;
      }
      u -= r.rate;
    }
  }
  while (next < snaps.size()) {
    out.push_back(counts);
    ++next;
  }
  return out;
}

double count_moment(const VelocityNetwork& net, const std::vector<int>& counts, int p) {
  double total = 0.0, n = 0.0;
  for (std::size_t v = 0; v < counts.size(); ++v) {
    total += counts[v] * std::pow(norm(net.node(static_cast<int>(v))), p);
    n += counts[v];
  }
  return total / n;
}

}  // namespace kflow
