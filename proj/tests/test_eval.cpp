#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mgbr/eval.hpp"

using namespace mgbr;

namespace {

// brute-force recomputation: sort (score desc, id asc) and find the positive
int brute_force_rank(const CandidateList& list, const std::vector<double>& scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return list.candidates[a] < list.candidates[b];
  });
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    if (static_cast<int>(order[pos]) == list.positive_index) return static_cast<int>(pos) + 1;
  }
  return -1;
}

Dataset small_dataset(std::uint64_t seed) {
  Dataset ds;
  ds.n_users = 30;
  ds.n_items = 40;
  auto groups = generate_synthetic(30, 40, 90, 4, seed);
  split(groups, {}, seed, ds.train, ds.val, ds.test);
  return ds;
}

}  // namespace

TEST_CASE("metric hand values") {
  CHECK(mrr_at_n({1, 1, 1}, 10) == doctest::Approx(1.0));
  CHECK(mrr_at_n({1, 2, 4}, 10) == doctest::Approx((1.0 + 0.5 + 0.25) / 3.0));
  CHECK(ndcg_at_n({1}, 10) == doctest::Approx(1.0));
  CHECK(ndcg_at_n({2}, 10) == doctest::Approx(1.0 / std::log2(3.0)));
  // a rank beyond the cutoff contributes zero
  CHECK(mrr_at_n({11}, 10) == doctest::Approx(0.0));
  CHECK_THROWS_AS(mrr_at_n({}, 10), ContractError);

  // both metrics peak at rank 1 and strictly decrease with the rank
  double prev_m = 2, prev_n = 2;
  for (int r = 1; r <= 10; ++r) {
    const double m = mrr_at_n({r}, 10), n = ndcg_at_n({r}, 10);
    CHECK(m < prev_m);
    CHECK(n < prev_n);
    if (r == 1) {
      CHECK(m == doctest::Approx(1.0));
      CHECK(n == doctest::Approx(1.0));
    }
    prev_m = m;
    prev_n = n;
  }
}

TEST_CASE("rank_of_positive breaks ties by ascending candidate id") {
  CandidateList list;
  list.candidates = {5, 3, 9};
  list.positive_index = 0;  // candidate id 5
  CHECK(rank_of_positive(list, {0.5, 0.5, 0.5}) == 2);  // id 3 wins the tie, id 9 loses
  CHECK(rank_of_positive(list, {0.9, 0.5, 0.5}) == 1);
  CHECK(rank_of_positive(list, {0.1, 0.5, 0.5}) == 3);
}

TEST_CASE("build_candidates follows the protocol") {
  auto ds = small_dataset(11);
  auto lists = build_candidates(ds.test, ds, 9, 77);

  std::size_t expected = 0;
  for (const auto& g : ds.test) expected += 1 + g.participants.size();
  CHECK(lists.size() == expected);

  auto initiated = ds.user_initiated_items();
  for (const auto& l : lists) {
    CHECK(l.candidates.size() == 10);
    std::unordered_set<int> unique(l.candidates.begin(), l.candidates.end());
    CHECK(unique.size() == l.candidates.size());
    if (l.task == 'A') {
      for (std::size_t j = 0; j < l.candidates.size(); ++j) {
        if (static_cast<int>(j) == l.positive_index) continue;
        CHECK(!initiated[static_cast<std::size_t>(l.u)].count(l.candidates[j]));
      }
    } else {
      for (std::size_t j = 0; j < l.candidates.size(); ++j) {
        if (static_cast<int>(j) == l.positive_index) continue;
        CHECK(l.candidates[j] != l.u);
      }
    }
  }

  // frozen per seed
  auto again = build_candidates(ds.test, ds, 9, 77);
  REQUIRE(again.size() == lists.size());
  for (std::size_t i = 0; i < lists.size(); ++i) CHECK(again[i].candidates == lists[i].candidates);
  auto other = build_candidates(ds.test, ds, 9, 78);
  bool any_diff = false;
  for (std::size_t i = 0; i < lists.size(); ++i) {
    if (other[i].candidates != lists[i].candidates) any_diff = true;
  }
  CHECK(any_diff);

  // the 1:99 protocol needs a catalog with at least 99 eligible items
  Dataset wide;
  wide.n_users = 160;
  wide.n_items = 150;
  auto wide_groups = generate_synthetic(160, 150, 60, 4, 3);
  split(wide_groups, {}, 3, wide.train, wide.val, wide.test);
  CHECK(build_candidates(wide.test, wide, 99, 1).front().candidates.size() == 100);

  CHECK_THROWS_AS(build_candidates(ds.test, ds, 5, 1), ContractError);
  CHECK_THROWS_AS(build_candidates(ds.test, ds, 99, 1), SamplingError);
}

TEST_CASE("perfect and inverted scorers hit the analytic extremes") {
  CandidateList list;
  list.task = 'A';
  for (int c = 0; c < 10; ++c) list.candidates.push_back(c);
  list.positive_index = 4;

  std::vector<double> perfect(10, 0.0);
  perfect[4] = 1.0;
  CHECK(rank_of_positive(list, perfect) == 1);

  std::vector<double> inverted(10, 1.0);
  inverted[4] = 0.0;
  CHECK(rank_of_positive(list, inverted) == 10);
  CHECK(mrr_at_n({10}, 10) == doctest::Approx(0.1));
  CHECK(ndcg_at_n({10}, 10) == doctest::Approx(1.0 / std::log2(11.0)).epsilon(1e-6));
}

TEST_CASE("random scorer matches the analytic mean reciprocal rank") {
  // E[1/rank] over a uniform position in a 10-list is H(10)/10 = 0.29289...
  Rng rng(20240607);
  std::vector<int> ranks;
  CandidateList list;
  for (int c = 0; c < 10; ++c) list.candidates.push_back(c);
  list.positive_index = 3;
  std::vector<double> scores(10);
  for (int trial = 0; trial < 10000; ++trial) {
    for (auto& s : scores) s = rng.uniform();
    ranks.push_back(rank_of_positive(list, scores));
  }
  CHECK(mrr_at_n(ranks, 10) == doctest::Approx(0.2928968).epsilon(0.034));  // +-0.01 absolute
  CHECK(std::fabs(mrr_at_n(ranks, 10) - 0.2928968) < 0.01);
}

TEST_CASE("ranks agree with brute-force recomputation within 1e-9") {
  Rng rng(31337);
  for (int trial = 0; trial < 200; ++trial) {
    CandidateList list;
    const int len = 10;
    for (int c = 0; c < len; ++c) list.candidates.push_back(c * 3 % 17);
    list.positive_index = rng.uniform_int(len);
    std::vector<double> scores(len);
    for (auto& s : scores) s = rng.uniform_int(4) * 0.25;  // force ties
    CHECK(rank_of_positive(list, scores) == brute_force_rank(list, scores));
  }

  // aggregate metrics vs direct recomputation
  std::vector<int> ranks;
  for (int i = 0; i < 500; ++i) ranks.push_back(1 + static_cast<int>(rng.uniform_int(10)));
  double mrr = 0, ndcg = 0;
  for (int r : ranks) {
    mrr += 1.0 / r;
    ndcg += 1.0 / std::log2(r + 1.0);
  }
  CHECK(std::fabs(mrr_at_n(ranks, 10) - mrr / ranks.size()) < 1e-9);
  CHECK(std::fabs(ndcg_at_n(ranks, 10) - ndcg / ranks.size()) < 1e-9);
}

TEST_CASE("metrics are permutation invariant and bounded") {
  std::vector<int> ranks{1, 4, 2, 9, 10, 3};
  auto shuffled = ranks;
  std::reverse(shuffled.begin(), shuffled.end());
  CHECK(mrr_at_n(ranks, 10) == doctest::Approx(mrr_at_n(shuffled, 10)));
  CHECK(ndcg_at_n(ranks, 10) == doctest::Approx(ndcg_at_n(shuffled, 10)));
  CHECK(mrr_at_n(ranks, 10) >= 0.0);
  CHECK(mrr_at_n(ranks, 10) <= 1.0);
  CHECK(ndcg_at_n(ranks, 10) <= 1.0);
}

TEST_CASE("evaluate_model is deterministic and honors the report schema") {
  auto ds = small_dataset(21);
  MgbrConfig cfg;
  cfg.embed_dim = 4;
  cfg.gcn_layers = 1;
  cfg.experts = 2;
  cfg.mtl_layers = 1;
  auto model = MgbrModel::build(ds, cfg);
  auto lists = build_candidates(ds.test, ds, 9, 5);

  auto r1 = evaluate_model(model, lists, 9, 5);
  auto r2 = evaluate_model(model, lists, 9, 5);
  CHECK(r1.mrr_a == r2.mrr_a);
  CHECK(r1.ndcg_b == r2.ndcg_b);
  CHECK(r1.n == 10);

  auto threaded = model;
  threaded.cfg.threads = 3;
  auto r3 = evaluate_model(threaded, lists, 9, 5);
  CHECK(r3.mrr_a == r1.mrr_a);
  CHECK(r3.mrr_b == r1.mrr_b);

  const auto json = r1.to_json();
  CHECK(json.find("\"taskA\"") != std::string::npos);
  CHECK(json.find("\"mrr\"") != std::string::npos);
  CHECK(json.find("\"seed\": 5") != std::string::npos);
}
