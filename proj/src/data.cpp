#include "mgbr/data.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "mgbr/errors.hpp"

namespace mgbr {

namespace {

int parse_id(std::string_view text, int line_no, const char* what) {
  int value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || value < 0) {
    throw ParseError("line " + std::to_string(line_no) + ": bad " + what + " '" +
                     std::string(text) + "'");
  }
  return value;
}

}  // namespace

std::vector<const DealGroup*> Dataset::all_groups() const {
  std::vector<const DealGroup*> out;
  out.reserve(train.size() + val.size() + test.size());
  for (const auto& g : train) out.push_back(&g);
  for (const auto& g : val) out.push_back(&g);
  for (const auto& g : test) out.push_back(&g);
  return out;
}

std::vector<std::unordered_set<int>> Dataset::user_initiated_items() const {
  std::vector<std::unordered_set<int>> items(static_cast<std::size_t>(n_users));
  for (const DealGroup* g : all_groups()) {
    items[static_cast<std::size_t>(g->initiator)].insert(g->item);
  }
  return items;
}

std::unordered_map<std::int64_t, std::unordered_set<int>> Dataset::group_participants_by_pair()
    const {
  std::unordered_map<std::int64_t, std::unordered_set<int>> map;
  for (const DealGroup* g : all_groups()) {
    auto& set = map[pair_key(g->initiator, g->item)];
    set.insert(g->participants.begin(), g->participants.end());
  }
  return map;
}

std::vector<DealGroup> parse_groups(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open groups file '" + path + "'");
  std::vector<DealGroup> groups;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') continue;

    const auto tab1 = line.find('\t');
    const auto tab2 = tab1 == std::string::npos ? std::string::npos : line.find('\t', tab1 + 1);
    if (tab2 == std::string::npos) {
      throw ParseError("line " + std::to_string(line_no) +
                       ": expected `initiator<TAB>item<TAB>participants`");
    }
    DealGroup g;
    g.initiator = parse_id(std::string_view(line).substr(0, tab1), line_no, "initiator id");
    g.item = parse_id(std::string_view(line).substr(tab1 + 1, tab2 - tab1 - 1), line_no, "item id");

    const std::string_view plist = std::string_view(line).substr(tab2 + 1);
    if (plist.empty()) {
      throw ParseError("line " + std::to_string(line_no) + ": empty participant set");
    }
    std::size_t start = 0;
    while (start <= plist.size()) {
      const auto comma = plist.find(',', start);
      const auto end = comma == std::string_view::npos ? plist.size() : comma;
      g.participants.push_back(
          parse_id(plist.substr(start, end - start), line_no, "participant id"));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    std::sort(g.participants.begin(), g.participants.end());
    if (std::adjacent_find(g.participants.begin(), g.participants.end()) != g.participants.end()) {
      throw ValidationError("line " + std::to_string(line_no) + ": duplicate participant");
    }
    if (std::binary_search(g.participants.begin(), g.participants.end(), g.initiator)) {
      throw ValidationError("line " + std::to_string(line_no) +
                            ": initiator listed among participants");
    }
    groups.push_back(std::move(g));
  }
  return groups;
}

void write_groups(const std::string& path, const std::vector<DealGroup>& groups) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write groups file '" + path + "'");
  for (const auto& g : groups) {
    out << g.initiator << '\t' << g.item << '\t';
    for (std::size_t i = 0; i < g.participants.size(); ++i) {
      if (i) out << ',';
      out << g.participants[i];
    }
    out << '\n';
  }
}

ReindexedCorpus filter_and_reindex(const std::vector<DealGroup>& groups, int min_interactions) {
  if (min_interactions < 1) throw ContractError("min_interactions must be >= 1");

  std::unordered_map<int, int> appearances;
  for (const auto& g : groups) {
    appearances[g.initiator]++;
    for (int p : g.participants) appearances[p]++;
  }
  std::unordered_set<int> dropped;
  for (const auto& [user, count] : appearances) {
    if (count < min_interactions) dropped.insert(user);
  }

  // ordered maps keep the remapping deterministic (ascending original id)
  std::map<int, int> user_map, item_map;
  std::vector<DealGroup> survivors;
  for (const auto& g : groups) {
    if (dropped.count(g.initiator)) continue;
    bool ok = true;
    for (int p : g.participants) {
      if (dropped.count(p)) {
        ok = false;
        break;
      }
    }
    if (!ok) continue;
    survivors.push_back(g);
    user_map.emplace(g.initiator, 0);
    for (int p : g.participants) user_map.emplace(p, 0);
    item_map.emplace(g.item, 0);
  }
  if (survivors.empty()) throw DataError("no groups survive filtering at threshold " +
                                         std::to_string(min_interactions));

  int next = 0;
  for (auto& [id, mapped] : user_map) mapped = next++;
  next = 0;
  for (auto& [id, mapped] : item_map) mapped = next++;

  ReindexedCorpus out;
  out.n_users = static_cast<int>(user_map.size());
  out.n_items = static_cast<int>(item_map.size());
  out.groups.reserve(survivors.size());
  for (auto& g : survivors) {
    DealGroup r;
    r.initiator = user_map.at(g.initiator);
    r.item = item_map.at(g.item);
    r.participants.reserve(g.participants.size());
    for (int p : g.participants) r.participants.push_back(user_map.at(p));
    std::sort(r.participants.begin(), r.participants.end());
    out.groups.push_back(std::move(r));
  }
  return out;
}

void split(const std::vector<DealGroup>& groups, SplitRatio ratio, std::uint64_t seed,
           std::vector<DealGroup>& train, std::vector<DealGroup>& val,
           std::vector<DealGroup>& test) {
  if (ratio.train <= 0 || ratio.val <= 0 || ratio.test <= 0) {
    throw ContractError("split ratio parts must be positive");
  }
  const int parts = ratio.train + ratio.val + ratio.test;
  if (groups.size() < static_cast<std::size_t>(parts)) {
    throw DataError("cannot split " + std::to_string(groups.size()) + " groups into " +
                    std::to_string(parts) + " parts");
  }
  std::vector<DealGroup> shuffled = groups;
  Rng rng(seed);
  rng.shuffle(shuffled);

  const std::size_t n = shuffled.size();
  const std::size_t n_val = n * static_cast<std::size_t>(ratio.val) / static_cast<std::size_t>(parts);
  const std::size_t n_test = n * static_cast<std::size_t>(ratio.test) / static_cast<std::size_t>(parts);
  const std::size_t n_train = n - n_val - n_test;

  train.assign(shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(n_train));
  val.assign(shuffled.begin() + static_cast<std::ptrdiff_t>(n_train),
             shuffled.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  test.assign(shuffled.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), shuffled.end());
}

void save_dataset(const std::string& dir, const Dataset& ds, const SplitManifest& meta) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  write_groups(dir + "/train.groups", ds.train);
  write_groups(dir + "/val.groups", ds.val);
  write_groups(dir + "/test.groups", ds.test);

  nlohmann::ordered_json j;
  j["users"] = ds.n_users;
  j["items"] = ds.n_items;
  j["groups"] = ds.train.size() + ds.val.size() + ds.test.size();
  j["train"] = ds.train.size();
  j["val"] = ds.val.size();
  j["test"] = ds.test.size();
  j["seed"] = meta.seed;
  j["min_interactions"] = meta.min_interactions;
  std::ofstream out(dir + "/manifest.json");
  if (!out) throw DataError("cannot write manifest in '" + dir + "'");
  out << j.dump(2) << '\n';
}

Dataset load_dataset(const std::string& dir) {
  std::ifstream in(dir + "/manifest.json");
  if (!in) throw DataError("cannot open manifest in '" + dir + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("bad manifest: " + std::string(e.what()));
  }
  Dataset ds;
  ds.n_users = j.at("users").get<int>();
  ds.n_items = j.at("items").get<int>();
  ds.train = parse_groups(dir + "/train.groups");
  ds.val = parse_groups(dir + "/val.groups");
  ds.test = parse_groups(dir + "/test.groups");
  for (const DealGroup* g : ds.all_groups()) {
    if (g->initiator >= ds.n_users || g->item >= ds.n_items) {
      throw DataError("group references id beyond manifest counts");
    }
    for (int p : g->participants) {
      if (p >= ds.n_users) throw DataError("group references id beyond manifest counts");
    }
  }
  return ds;
}

// ---- negative sampling ------------------------------------------------------

namespace {

// uniform k-subset of the integers [0, n) minus `excluded`
std::vector<int> sample_excluding(int n, const std::unordered_set<int>& excluded, int k, Rng& rng,
                                  const std::string& what) {
  const int pool = n - static_cast<int>(excluded.size());
  if (pool < k) {
    throw SamplingError("cannot draw " + std::to_string(k) + " " + what + " from a pool of " +
                        std::to_string(pool));
  }
  std::unordered_set<int> taken;
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(k));
  // rejection sampling is cheap while k is well below the pool size;
  // fall back to materializing the pool when it is not
  if (static_cast<long>(k) * 3 < pool) {
    while (static_cast<int>(out.size()) < k) {
      const int cand = rng.uniform_int(n);
      if (excluded.count(cand) || taken.count(cand)) continue;
      taken.insert(cand);
      out.push_back(cand);
    }
    return out;
  }
  std::vector<int> candidates;
  candidates.reserve(static_cast<std::size_t>(pool));
  for (int i = 0; i < n; ++i) {
    if (!excluded.count(i)) candidates.push_back(i);
  }
  for (int j = 0; j < k; ++j) {
    const int pick = j + rng.uniform_int(static_cast<int>(candidates.size()) - j);
    std::swap(candidates[static_cast<std::size_t>(j)], candidates[static_cast<std::size_t>(pick)]);
    out.push_back(candidates[static_cast<std::size_t>(j)]);
  }
  return out;
}

}  // namespace

std::vector<int> sample_negatives_a(int user, const Dataset& ds,
                                    const std::vector<std::unordered_set<int>>& initiated, int k,
                                    Rng& rng) {
  if (user < 0 || user >= ds.n_users) throw LookupError("user id out of range");
  return sample_excluding(ds.n_items, initiated[static_cast<std::size_t>(user)], k, rng,
                          "negative items for user " + std::to_string(user));
}

std::vector<int> sample_negatives_b(int user, const std::vector<int>& participants, int n_users,
                                    int k, Rng& rng) {
  std::unordered_set<int> excluded(participants.begin(), participants.end());
  excluded.insert(user);
  return sample_excluding(n_users, excluded, k, rng,
                          "negative participants for user " + std::to_string(user));
}

AuxNegatives sample_aux_negatives(
    int user, int item, const Dataset& ds,
    const std::unordered_map<std::int64_t, std::unordered_set<int>>& pair_participants, int size,
    Rng& rng) {
  AuxNegatives out;
  out.replaced_items = sample_excluding(
      ds.n_items, {item}, size, rng, "replacement items for (" + std::to_string(user) + "," +
                                         std::to_string(item) + ")");
  std::unordered_set<int> excluded{user};
  const auto it = pair_participants.find(Dataset::pair_key(user, item));
  if (it != pair_participants.end()) {
    excluded.insert(it->second.begin(), it->second.end());
  }
  out.replaced_users =
      sample_excluding(ds.n_users, excluded, size, rng,
                       "replacement participants for (" + std::to_string(user) + "," +
                           std::to_string(item) + ")");
  return out;
}

// ---- synthetic corpus --------------------------------------------------------

std::vector<DealGroup> generate_synthetic(int n_users, int n_items, int n_groups, int latent_dim,
                                          std::uint64_t seed) {
  if (n_users < 2 || n_items < 1 || n_groups < 1 || latent_dim < 1) {
    throw ContractError("generate_synthetic: all counts must be positive (and users >= 2)");
  }
  Rng rng(seed);
  std::vector<std::vector<double>> user_lat(static_cast<std::size_t>(n_users)),
      item_lat(static_cast<std::size_t>(n_items));
  for (auto& v : user_lat) {
    v.resize(static_cast<std::size_t>(latent_dim));
    for (auto& x : v) x = rng.gaussian();
  }
  for (auto& v : item_lat) {
    v.resize(static_cast<std::size_t>(latent_dim));
    for (auto& x : v) x = rng.gaussian();
  }

  auto dot = [&](const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
  };
  // inverse-CDF draw from softmax(affinities)
  auto softmax_pick = [&](const std::vector<double>& affinity) {
    double mx = affinity[0];
    for (double a : affinity) mx = std::max(mx, a);
    std::vector<double> w(affinity.size());
    double z = 0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      w[i] = std::exp(affinity[i] - mx);
      z += w[i];
    }
    double r = rng.uniform() * z;
    for (std::size_t i = 0; i < w.size(); ++i) {
      r -= w[i];
      if (r <= 0) return static_cast<int>(i);
    }
    return static_cast<int>(w.size()) - 1;
  };

  const int max_group = std::min(5, n_users - 1);
  std::vector<DealGroup> groups;
  groups.reserve(static_cast<std::size_t>(n_groups));
  std::vector<double> affinity;
  for (int gi = 0; gi < n_groups; ++gi) {
    DealGroup g;
    g.initiator = rng.uniform_int(n_users);

    affinity.assign(static_cast<std::size_t>(n_items), 0.0);
    for (int i = 0; i < n_items; ++i) {
      affinity[static_cast<std::size_t>(i)] =
          dot(user_lat[static_cast<std::size_t>(g.initiator)], item_lat[static_cast<std::size_t>(i)]);
    }
    g.item = softmax_pick(affinity);

    const int g_size = 1 + rng.uniform_int(max_group);
    std::unordered_set<int> chosen{g.initiator};
    affinity.assign(static_cast<std::size_t>(n_users), 0.0);
    for (int p = 0; p < n_users; ++p) {
      affinity[static_cast<std::size_t>(p)] =
          dot(user_lat[static_cast<std::size_t>(p)], item_lat[static_cast<std::size_t>(g.item)]);
    }
    while (static_cast<int>(g.participants.size()) < g_size) {
      const int p = softmax_pick(affinity);
      if (chosen.count(p)) {
        affinity[static_cast<std::size_t>(p)] = -1e30;  // drawn or initiator: remove and retry
        continue;
      }
      chosen.insert(p);
      g.participants.push_back(p);
    }
    std::sort(g.participants.begin(), g.participants.end());
    groups.push_back(std::move(g));
  }
  return groups;
}

}  // namespace mgbr
