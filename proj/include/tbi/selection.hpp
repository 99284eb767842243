#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tbi/influence.hpp"

namespace tbi {

// Ordered seed edges with their marginal gains. For every strategy the gains
// and phi are recomputed exactly from the index, so sum(gains) == phi holds
// by construction.
struct SeedResult {
  std::vector<EdgeIndex> seeds;
  std::vector<int> marginal_gains;
  int phi = 0;
  std::string strategy;
  std::optional<std::uint64_t> rng_seed;
};

struct SamplingParams {
  std::size_t beta = 0;  // number of sampled RI targets
  double alpha = 0.1;    // recorded when beta came from sampling_size
  double delta = 0.05;
  double p_hat = 0.0;
};

// Number of distinct edges influenced by S: |union of I({e}) over e in S|.
int phi(const InfluenceIndex& index, std::span<const EdgeIndex> seeds);

// Best-first greedy: K rounds of argmax marginal gain, ties broken by the
// smallest edge index. Lazy (CELF-style) evaluation; equal output to the
// naive re-evaluating greedy.
SeedResult select_bf(const InfluenceIndex& index, int k);

// Sampling-based greedy over beta RI sets of uniformly drawn target edges.
SeedResult select_sg(const InfluenceIndex& index, int k, const SamplingParams& params,
                     std::uint64_t rng_seed);
// The same max-coverage loop on a caller-supplied target list; select_sg
// delegates here after drawing.
SeedResult select_sg_from_targets(const InfluenceIndex& index, int k,
                                  std::span<const EdgeIndex> targets);

// Chernoff-bound sample size: ceil((2 + alpha) / (alpha^2 * p_hat) * ln(2 / delta)).
long long sampling_size(double alpha, double delta, double p_hat);

// Exact maximizer by subset enumeration; refuses instances with more than
// subset_cap candidate subsets. Ties resolve to the lexicographically
// smallest seed list.
SeedResult select_bruteforce(const InfluenceIndex& index, int k,
                             std::uint64_t subset_cap = 2'000'000);

// Top-K edges by |I({e})|, the deliberately naive comparator.
SeedResult rank_baseline(const InfluenceIndex& index, int k);

// Jaccard similarity of the influenced sets; 0 when both are empty.
double edge_similarity(const InfluenceIndex& index, EdgeIndex e1, EdgeIndex e2);

// Internals of the partition + DP strategy, exposed for inspection.
// dp_score[p][k] (eta) is the best score for the k-th seed using the first p
// partitions; choice[p][k] (b) is the 1-based partition it would come from,
// so choice[p][k] <= p.
struct PartitionState {
  std::vector<std::vector<EdgeIndex>> partitions;
  std::vector<std::vector<int>> dp_score;
  std::vector<std::vector<int>> choice;
};

// Similarity-clustered partitions (k-means style) followed by a DP over
// partitions choosing where each of the K seeds comes from.
SeedResult select_partition_dp(const InfluenceIndex& index, int k, int partitions, int max_iters,
                               std::uint64_t rng_seed, PartitionState* state = nullptr);

}  // namespace tbi
