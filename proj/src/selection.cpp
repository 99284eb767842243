#include "tbi/selection.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <queue>

#include "tbi/errors.hpp"
#include "tbi/prng.hpp"

namespace tbi {

namespace {

// Influenced sets as fixed-width bitsets over the edge universe; the greedy
// loops live on popcounts.
struct Bitsets {
  std::size_t blocks = 0;
  std::vector<std::vector<std::uint64_t>> sets;

  explicit Bitsets(const InfluenceIndex& index) {
    std::size_t n = index.edge_count();
    blocks = (n + 63) / 64;
    sets.assign(n, std::vector<std::uint64_t>(blocks, 0));
    for (std::size_t e = 0; e < n; ++e) {
      for (EdgeIndex target : index.influenced[e]) {
        sets[e][static_cast<std::size_t>(target) / 64] |= 1ull
                                                          << (static_cast<std::size_t>(target) % 64);
      }
    }
  }

  int gain_over(const std::vector<std::uint64_t>& covered, std::size_t e) const {
    int gain = 0;
    for (std::size_t b = 0; b < blocks; ++b) {
      gain += std::popcount(sets[e][b] & ~covered[b]);
    }
    return gain;
  }

  void cover(std::vector<std::uint64_t>& covered, std::size_t e) const {
    for (std::size_t b = 0; b < blocks; ++b) covered[b] |= sets[e][b];
  }
};

void check_k(const InfluenceIndex& index, int k) {
  if (k < 1 || static_cast<std::size_t>(k) > index.edge_count()) {
    throw ValidationError("k out of range: " + std::to_string(k) + " with " +
                          std::to_string(index.edge_count()) + " indexed edges");
  }
}

// Recomputes gains and phi from the index; every strategy funnels through
// here so the SeedResult invariants hold no matter how the seeds were found.
SeedResult finalize_result(const InfluenceIndex& index, std::vector<EdgeIndex> seeds,
                           std::string strategy, std::optional<std::uint64_t> rng_seed) {
  SeedResult result;
  result.strategy = std::move(strategy);
  result.rng_seed = rng_seed;
  result.seeds = std::move(seeds);
  std::vector<char> chosen(index.edge_count(), 0);
  std::vector<char> covered(index.edge_count(), 0);
  int total = 0;
  for (EdgeIndex seed : result.seeds) {
    if (seed < 0 || static_cast<std::size_t>(seed) >= index.edge_count()) {
      throw ValidationError("seed edge index out of range");
    }
    if (chosen[static_cast<std::size_t>(seed)]) {
      throw std::logic_error("duplicate seed edge in selection result");
    }
    chosen[static_cast<std::size_t>(seed)] = 1;
    int gain = 0;
    for (EdgeIndex target : index.influenced[static_cast<std::size_t>(seed)]) {
      if (!covered[static_cast<std::size_t>(target)]) {
        covered[static_cast<std::size_t>(target)] = 1;
        ++gain;
      }
    }
    result.marginal_gains.push_back(gain);
    total += gain;
  }
  result.phi = total;
  return result;
}

}  // namespace

int phi(const InfluenceIndex& index, std::span<const EdgeIndex> seeds) {
  std::vector<char> covered(index.edge_count(), 0);
  int total = 0;
  for (EdgeIndex seed : seeds) {
    if (seed < 0 || static_cast<std::size_t>(seed) >= index.edge_count()) {
      throw ValidationError("phi: unknown edge index " + std::to_string(seed));
    }
    for (EdgeIndex target : index.influenced[static_cast<std::size_t>(seed)]) {
      if (!covered[static_cast<std::size_t>(target)]) {
        covered[static_cast<std::size_t>(target)] = 1;
        ++total;
      }
    }
  }
  return total;
}

SeedResult select_bf(const InfluenceIndex& index, int k) {
  check_k(index, k);
  std::size_t n = index.edge_count();
  Bitsets bits(index);
  std::vector<std::uint64_t> covered(bits.blocks, 0);

  // Lazy evaluation: a popped entry counts only if its gain was computed for
  // the current seed set; gains never grow, so everything below a fresh top
  // stays below it.
  struct Entry {
    int gain;
    EdgeIndex edge;
    int round;
  };
  auto worse = [](const Entry& a, const Entry& b) {
    if (a.gain != b.gain) return a.gain < b.gain;
    return a.edge > b.edge;
  };
  std::priority_queue<Entry, std::vector<Entry>, decltype(worse)> queue(worse);
  for (std::size_t e = 0; e < n; ++e) {
    queue.push({static_cast<int>(index.influenced[e].size()), static_cast<EdgeIndex>(e), 0});
  }

  std::vector<EdgeIndex> seeds;
  int last_gain = std::numeric_limits<int>::max();
  for (int round = 0; round < k; ++round) {
    while (true) {
      Entry top = queue.top();
      queue.pop();
      if (top.round == round) {
        seeds.push_back(top.edge);
        bits.cover(covered, static_cast<std::size_t>(top.edge));
        if (top.gain > last_gain) {
          throw std::logic_error("greedy marginal gains increased");
        }
        last_gain = top.gain;
        break;
      }
      top.gain = bits.gain_over(covered, static_cast<std::size_t>(top.edge));
      top.round = round;
      queue.push(top);
    }
  }
  return finalize_result(index, std::move(seeds), "bf", std::nullopt);
}

SeedResult select_sg_from_targets(const InfluenceIndex& index, int k,
                                  std::span<const EdgeIndex> targets) {
  check_k(index, k);
  std::size_t n = index.edge_count();

  // Candidate collection A: one RI set per sampled target, duplicates kept.
  std::vector<char> alive(targets.size(), 1);
  std::vector<int> cover_count(n, 0);
  for (EdgeIndex target : targets) {
    if (target < 0 || static_cast<std::size_t>(target) >= n) {
      throw ValidationError("sampled target edge index out of range");
    }
    for (EdgeIndex coverer : index.reverse[static_cast<std::size_t>(target)]) {
      ++cover_count[static_cast<std::size_t>(coverer)];
    }
  }

  std::vector<char> chosen(n, 0);
  std::vector<EdgeIndex> seeds;
  for (int round = 0; round < k; ++round) {
    std::size_t best = n;
    for (std::size_t e = 0; e < n; ++e) {
      if (chosen[e]) continue;
      if (best == n || cover_count[e] > cover_count[best]) best = e;
    }
    seeds.push_back(static_cast<EdgeIndex>(best));
    chosen[best] = 1;
    // Drop every still-alive RI set covered by the new seed.
    for (std::size_t i = 0; i < targets.size(); ++i) {
      if (!alive[i]) continue;
      const auto& ri = index.reverse[static_cast<std::size_t>(targets[i])];
      if (!std::binary_search(ri.begin(), ri.end(), static_cast<EdgeIndex>(best))) continue;
      alive[i] = 0;
      for (EdgeIndex coverer : ri) --cover_count[static_cast<std::size_t>(coverer)];
    }
  }
  return finalize_result(index, std::move(seeds), "sg", std::nullopt);
}

SeedResult select_sg(const InfluenceIndex& index, int k, const SamplingParams& params,
                     std::uint64_t rng_seed) {
  if (params.beta < 1) throw ValidationError("sampling size beta must be at least 1");
  check_k(index, k);
  SplitMix64 rng(rng_seed);
  std::vector<EdgeIndex> targets;
  targets.reserve(params.beta);
  for (std::size_t i = 0; i < params.beta; ++i) {
    targets.push_back(static_cast<EdgeIndex>(rng.below(index.edge_count())));
  }
  SeedResult result = select_sg_from_targets(index, k, targets);
  result.rng_seed = rng_seed;
  return result;
}

long long sampling_size(double alpha, double delta, double p_hat) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha must be in (0,1)");
  if (!(delta > 0.0 && delta < 1.0)) throw ValidationError("delta must be in (0,1)");
  if (!(p_hat > 0.0 && p_hat <= 1.0)) throw ValidationError("p_hat must be in (0,1]");
  double beta = (2.0 + alpha) / (alpha * alpha * p_hat) * std::log(2.0 / delta);
  return static_cast<long long>(std::ceil(beta));
}

SeedResult select_bruteforce(const InfluenceIndex& index, int k, std::uint64_t subset_cap) {
  check_k(index, k);
  std::size_t n = index.edge_count();

  double subsets = 1.0;
  for (int i = 0; i < k; ++i) {
    subsets *= static_cast<double>(n - static_cast<std::size_t>(i)) / (i + 1);
    if (subsets > static_cast<double>(subset_cap)) {
      throw ValidationError("brute force refused: C(" + std::to_string(n) + "," +
                            std::to_string(k) + ") exceeds the cap of " +
                            std::to_string(subset_cap) + " subsets");
    }
  }

  Bitsets bits(index);
  std::vector<std::vector<std::uint64_t>> unions(
      static_cast<std::size_t>(k) + 1, std::vector<std::uint64_t>(bits.blocks, 0));
  std::vector<EdgeIndex> current(static_cast<std::size_t>(k));
  std::vector<EdgeIndex> best_seeds;
  int best_phi = -1;

  // Lexicographic enumeration; strict improvement keeps the first (smallest)
  // maximizer.
  auto recurse = [&](auto&& self, std::size_t start, int depth) -> void {
    if (depth == k) {
      int value = 0;
      for (std::size_t b = 0; b < bits.blocks; ++b) {
        value += std::popcount(unions[static_cast<std::size_t>(k)][b]);
      }
      if (value > best_phi) {
        best_phi = value;
        best_seeds.assign(current.begin(), current.end());
      }
      return;
    }
    for (std::size_t e = start; e + (static_cast<std::size_t>(k) - static_cast<std::size_t>(depth)) <= n;
         ++e) {
      current[static_cast<std::size_t>(depth)] = static_cast<EdgeIndex>(e);
      for (std::size_t b = 0; b < bits.blocks; ++b) {
        unions[static_cast<std::size_t>(depth) + 1][b] =
            unions[static_cast<std::size_t>(depth)][b] | bits.sets[e][b];
      }
      self(self, e + 1, depth + 1);
    }
  };
  recurse(recurse, 0, 0);
  return finalize_result(index, std::move(best_seeds), "brute", std::nullopt);
}

SeedResult rank_baseline(const InfluenceIndex& index, int k) {
  check_k(index, k);
  std::vector<EdgeIndex> order(index.edge_count());
  for (std::size_t e = 0; e < order.size(); ++e) order[e] = static_cast<EdgeIndex>(e);
  std::sort(order.begin(), order.end(), [&](EdgeIndex a, EdgeIndex b) {
    std::size_t sa = index.influenced[static_cast<std::size_t>(a)].size();
    std::size_t sb = index.influenced[static_cast<std::size_t>(b)].size();
    if (sa != sb) return sa > sb;
    return a < b;
  });
  order.resize(static_cast<std::size_t>(k));
  return finalize_result(index, std::move(order), "rank", std::nullopt);
}

double edge_similarity(const InfluenceIndex& index, EdgeIndex e1, EdgeIndex e2) {
  const auto& a = index.influenced[static_cast<std::size_t>(e1)];
  const auto& b = index.influenced[static_cast<std::size_t>(e2)];
  if (a.empty() && b.empty()) return 0.0;
  std::size_t inter = 0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] == b[j]) {
      ++inter;
      ++i;
      ++j;
    } else if (a[i] < b[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  std::size_t uni = a.size() + b.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

SeedResult select_partition_dp(const InfluenceIndex& index, int k, int partitions, int max_iters,
                               std::uint64_t rng_seed, PartitionState* state) {
  check_k(index, k);
  std::size_t n = index.edge_count();
  if (partitions < 1 || static_cast<std::size_t>(partitions) > n) {
    throw ValidationError("partition count out of range: " + std::to_string(partitions));
  }
  if (max_iters < 1) throw ValidationError("max_iters must be at least 1");
  auto m = static_cast<std::size_t>(partitions);

  // Partition phase: M random distinct centers, then alternate
  // highest-similarity assignment and best-influence center updates until the
  // centers stop moving.
  SplitMix64 rng(rng_seed);
  std::vector<EdgeIndex> pool(n);
  for (std::size_t e = 0; e < n; ++e) pool[e] = static_cast<EdgeIndex>(e);
  for (std::size_t i = 0; i < m; ++i) {
    std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(pool[i], pool[j]);
  }
  std::vector<EdgeIndex> centers(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(m));

  std::vector<std::vector<EdgeIndex>> groups;
  for (int iter = 0; iter < max_iters; ++iter) {
    groups.assign(m, {});
    for (std::size_t e = 0; e < n; ++e) {
      std::size_t best = 0;
      double best_sim = -1.0;
      for (std::size_t c = 0; c < m; ++c) {
        double sim = edge_similarity(index, static_cast<EdgeIndex>(e), centers[c]);
        if (sim > best_sim) {
          best_sim = sim;
          best = c;
        }
      }
      groups[best].push_back(static_cast<EdgeIndex>(e));  // ascending by construction
    }
    std::vector<EdgeIndex> next_centers = centers;  // an empty partition keeps its center
    for (std::size_t c = 0; c < m; ++c) {
      if (groups[c].empty()) continue;
      EdgeIndex best = groups[c].front();
      for (EdgeIndex member : groups[c]) {
        if (index.influenced[static_cast<std::size_t>(member)].size() >
            index.influenced[static_cast<std::size_t>(best)].size()) {
          best = member;
        }
      }
      next_centers[c] = best;
    }
    bool changed = next_centers != centers;
    centers = std::move(next_centers);
    if (!changed) break;
  }

  // DP selection phase. For the k-th seed, eta[p][k] is the best influence
  // score reachable when the seed comes from one of the first p partitions,
  // conditioned on the seeds already fixed; b[p][k] records that partition.
  Bitsets bits(index);
  std::vector<std::uint64_t> covered(bits.blocks, 0);
  std::vector<char> chosen(n, 0);
  std::vector<EdgeIndex> seeds;
  std::vector<std::vector<int>> eta(m + 1, std::vector<int>(static_cast<std::size_t>(k) + 1, -1));
  std::vector<std::vector<int>> b(m + 1, std::vector<int>(static_cast<std::size_t>(k) + 1, 0));
  std::vector<EdgeIndex> best_edge_of(m, -1);
  int phi_so_far = 0;
  for (int round = 1; round <= k; ++round) {
    auto kk = static_cast<std::size_t>(round);
    for (std::size_t p = 0; p < m; ++p) {
      int part_gain = -1;
      EdgeIndex part_edge = -1;
      for (EdgeIndex member : groups[p]) {
        if (chosen[static_cast<std::size_t>(member)]) continue;
        int gain = bits.gain_over(covered, static_cast<std::size_t>(member));
        if (gain > part_gain) {
          part_gain = gain;
          part_edge = member;
        }
      }
      best_edge_of[p] = part_edge;
      int candidate = part_edge < 0 ? -1 : phi_so_far + part_gain;
      if (candidate > eta[p][kk]) {
        eta[p + 1][kk] = candidate;
        b[p + 1][kk] = static_cast<int>(p) + 1;
      } else {
        eta[p + 1][kk] = eta[p][kk];
        b[p + 1][kk] = b[p][kk];
      }
    }
    int winner = b[m][kk];
    if (winner == 0) {
      // Unreachable while k <= |E| and the partitions cover the universe.
      throw std::logic_error("partition DP ran out of candidate edges");
    }
    EdgeIndex seed = best_edge_of[static_cast<std::size_t>(winner - 1)];
    seeds.push_back(seed);
    chosen[static_cast<std::size_t>(seed)] = 1;
    phi_so_far = eta[m][kk];
    bits.cover(covered, static_cast<std::size_t>(seed));
  }
  if (state != nullptr) {
    state->partitions = groups;
    state->dp_score = std::move(eta);
    state->choice = std::move(b);
  }
  return finalize_result(index, std::move(seeds), "dp", rng_seed);
}

}  // namespace tbi
