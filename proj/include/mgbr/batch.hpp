#pragma once

#include <cstdint>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "mgbr/config.hpp"
#include "mgbr/data.hpp"

namespace mgbr {

/// Task-A positive with its sampled negative items.
struct TrainPair {
  int u = 0, i = 0;
  std::vector<int> neg_items;
};

/// Task-B positive triple with its negative participants and (when auxiliary
/// losses are on) the item/participant replacements.
struct TrainTriple {
  int u = 0, i = 0, p = 0;
  std::vector<int> neg_users;
  std::vector<int> aux_items;  // |T| replacements i'
  std::vector<int> aux_users;  // |T| replacements p'
};

/// Fully materialized sampling result for one optimization step; both the
/// production losses and the test oracle consume this structure.
struct TrainingBatch {
  std::vector<TrainPair> task_a;
  std::vector<TrainTriple> task_b;
  int neg_per_pos = 9;
};

inline constexpr int kBprNegatives = 9;  // 1:9 positive-to-negative ratio

/// Lookup tables the samplers need; build once per dataset.
struct SamplerContext {
  std::vector<std::unordered_set<int>> initiated;
  std::unordered_map<std::int64_t, std::unordered_set<int>> pair_participants;

  static SamplerContext from(const Dataset& ds) {
    return {ds.user_initiated_items(), ds.group_participants_by_pair()};
  }
};

/// neg_per_pos is 9 in training; gradient checks on very small vocabularies
/// pass a feasible count.
TrainingBatch sample_batch(const std::vector<const DealGroup*>& groups, const Dataset& ds,
                           const SamplerContext& ctx, const MgbrConfig& cfg, Rng& rng,
                           int neg_per_pos = kBprNegatives);

}  // namespace mgbr
