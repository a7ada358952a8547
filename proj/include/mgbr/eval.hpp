#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mgbr/data.hpp"
#include "mgbr/model.hpp"

namespace mgbr {

/// One test instance: a candidate list holding exactly one positive.
struct CandidateList {
  char task = 'A';  // 'A': rank items for u; 'B': rank participants for (u,i)
  int u = 0;
  int i = 0;  // task A: ignored; task B: the given item
  std::vector<int> candidates;
  int positive_index = 0;  // position of the positive inside candidates
};

struct RankedCandidates {
  CandidateList list;
  std::vector<double> scores;
  int rank = 0;  // 1-based rank of the positive, ties broken by id ascending
};

/// Frozen candidate lists for a split: one task-A instance per group, one
/// task-B instance per (group, participant). neg_k negatives each,
/// deterministic per seed.
std::vector<CandidateList> build_candidates(const std::vector<DealGroup>& split,
                                            const Dataset& ds, int neg_k, std::uint64_t seed);

/// Rank of the positive given candidate scores; equal scores are broken by
/// ascending candidate id.
int rank_of_positive(const CandidateList& list, const std::vector<double>& scores);

double mrr_at_n(const std::vector<int>& ranks, int n);
double ndcg_at_n(const std::vector<int>& ranks, int n);

struct MetricsReport {
  double mrr_a = 0, ndcg_a = 0, mrr_b = 0, ndcg_b = 0;
  int n = 0;  // list size (= metric cutoff)
  std::uint64_t seed = 0;
  std::string to_json() const;
};

/// Score every instance with the model (read-only) and aggregate both tasks'
/// metrics. Optionally dumps per-instance ranks as CSV.
MetricsReport evaluate_model(MgbrModel& model, const std::vector<CandidateList>& instances,
                             int neg_k, std::uint64_t seed,
                             const std::optional<std::string>& ranks_csv = std::nullopt);

}  // namespace mgbr
