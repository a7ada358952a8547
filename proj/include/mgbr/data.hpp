#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "mgbr/rng.hpp"

namespace mgbr {

/// One observed group buying: who launched it, what for, who joined.
struct DealGroup {
  int initiator = 0;
  int item = 0;
  std::vector<int> participants;  // sorted, unique, never contains initiator

  bool operator==(const DealGroup&) const = default;
};

struct Dataset {
  int n_users = 0;
  int n_items = 0;
  std::vector<DealGroup> train, val, test;

  std::vector<const DealGroup*> all_groups() const;

  /// items each user initiated with, over every split
  std::vector<std::unordered_set<int>> user_initiated_items() const;
  /// participant union per (initiator, item) pair, over every split
  std::unordered_map<std::int64_t, std::unordered_set<int>> group_participants_by_pair() const;

  static std::int64_t pair_key(int u, int i) {
    return (static_cast<std::int64_t>(u) << 32) | static_cast<std::uint32_t>(i);
  }
};

// ---- ingestion --------------------------------------------------------

/// Read a groups file: `initiator<TAB>item<TAB>p1[,p2,...]` per line, `#`
/// comments and blank lines skipped. Ids stay as written.
std::vector<DealGroup> parse_groups(const std::string& path);

void write_groups(const std::string& path, const std::vector<DealGroup>& groups);

struct ReindexedCorpus {
  int n_users = 0;
  int n_items = 0;
  std::vector<DealGroup> groups;
};

/// Drop users with fewer than min_interactions appearances (initiator or
/// participant, counted once on the raw corpus), drop every group touching a
/// dropped user, then remap surviving ids to contiguous ranges.
ReindexedCorpus filter_and_reindex(const std::vector<DealGroup>& groups, int min_interactions);

/// Shuffle by seed and cut into 7:3:1 elevenths (floor for val and test,
/// remainder to train).
struct SplitRatio {
  int train = 7, val = 3, test = 1;
};
void split(const std::vector<DealGroup>& groups, SplitRatio ratio, std::uint64_t seed,
           std::vector<DealGroup>& train, std::vector<DealGroup>& val,
           std::vector<DealGroup>& test);

// ---- split manifest ----------------------------------------------------

struct SplitManifest {
  int n_users = 0;
  int n_items = 0;
  std::uint64_t seed = 0;
  int min_interactions = 0;
};

void save_dataset(const std::string& dir, const Dataset& ds, const SplitManifest& meta);
Dataset load_dataset(const std::string& dir);

// ---- negative sampling --------------------------------------------------

/// k distinct items the user never initiated with, uniform over the pool.
std::vector<int> sample_negatives_a(int user, const Dataset& ds,
                                    const std::vector<std::unordered_set<int>>& initiated, int k,
                                    Rng& rng);

/// k distinct users outside the group (and != initiator), uniform.
std::vector<int> sample_negatives_b(int user, const std::vector<int>& participants,
                                    int n_users, int k, Rng& rng);

struct AuxNegatives {
  std::vector<int> replaced_items;  // i' drawn from all items except i
  std::vector<int> replaced_users;  // p' outside G_{u,i} and != u
};

AuxNegatives sample_aux_negatives(
    int user, int item, const Dataset& ds,
    const std::unordered_map<std::int64_t, std::unordered_set<int>>& pair_participants, int size,
    Rng& rng);

// ---- synthetic corpus -----------------------------------------------------

/// Latent-factor generator: item choice follows softmax(u . i), participant
/// choice softmax(p . i) among users != u, 1-5 participants per group.
std::vector<DealGroup> generate_synthetic(int n_users, int n_items, int n_groups, int latent_dim,
                                          std::uint64_t seed);

}  // namespace mgbr
