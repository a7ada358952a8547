#include "mgbr/eval.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

#include "mgbr/batch.hpp"
#include "mgbr/errors.hpp"

namespace mgbr {

std::vector<CandidateList> build_candidates(const std::vector<DealGroup>& split, const Dataset& ds,
                                            int neg_k, std::uint64_t seed) {
  if (neg_k != 9 && neg_k != 99) {
    throw ContractError("candidate lists use 9 or 99 negatives, got " + std::to_string(neg_k));
  }
  auto initiated = ds.user_initiated_items();
  Rng rng(seed);
  std::vector<CandidateList> out;
  for (const auto& g : split) {
    CandidateList a;
    a.task = 'A';
    a.u = g.initiator;
    a.candidates = sample_negatives_a(g.initiator, ds, initiated, neg_k, rng);
    a.candidates.push_back(g.item);
    a.positive_index = neg_k;
    out.push_back(std::move(a));

    for (int p : g.participants) {
      CandidateList b;
      b.task = 'B';
      b.u = g.initiator;
      b.i = g.item;
      b.candidates = sample_negatives_b(g.initiator, g.participants, ds.n_users, neg_k, rng);
      b.candidates.push_back(p);
      b.positive_index = neg_k;
      out.push_back(std::move(b));
    }
  }
  return out;
}

int rank_of_positive(const CandidateList& list, const std::vector<double>& scores) {
  if (scores.size() != list.candidates.size()) {
    throw ContractError("rank_of_positive: score count mismatch");
  }
  const double pos_score = scores[static_cast<std::size_t>(list.positive_index)];
  const int pos_id = list.candidates[static_cast<std::size_t>(list.positive_index)];
  int rank = 1;
  for (std::size_t j = 0; j < scores.size(); ++j) {
    if (static_cast<int>(j) == list.positive_index) continue;
    if (scores[j] > pos_score ||
        (scores[j] == pos_score && list.candidates[j] < pos_id)) {
      ++rank;
    }
  }
  return rank;
}

double mrr_at_n(const std::vector<int>& ranks, int n) {
  if (ranks.empty()) throw ContractError("mrr_at_n: empty instance set");
  double acc = 0;
  for (int r : ranks) {
    if (r <= n) acc += 1.0 / r;
  }
  return acc / static_cast<double>(ranks.size());
}

double ndcg_at_n(const std::vector<int>& ranks, int n) {
  if (ranks.empty()) throw ContractError("ndcg_at_n: empty instance set");
  double acc = 0;
  for (int r : ranks) {
    if (r <= n) acc += 1.0 / std::log2(static_cast<double>(r) + 1.0);
  }
  return acc / static_cast<double>(ranks.size());
}

std::string MetricsReport::to_json() const {
  std::ostringstream os;
  os.precision(10);
  os << "{\n"
     << "  \"taskA\": {\"mrr\": " << mrr_a << ", \"ndcg\": " << ndcg_a << "},\n"
     << "  \"taskB\": {\"mrr\": " << mrr_b << ", \"ndcg\": " << ndcg_b << "},\n"
     << "  \"n\": " << n << ",\n"
     << "  \"seed\": " << seed << "\n"
     << "}\n";
  return os.str();
}

MetricsReport evaluate_model(MgbrModel& model, const std::vector<CandidateList>& instances,
                             int neg_k, std::uint64_t seed,
                             const std::optional<std::string>& ranks_csv) {
  auto fs = model_forward_base(nullptr, model);

  std::vector<int> ranks(instances.size(), 0);
  auto score_instance = [&](std::size_t idx) {
    const CandidateList& inst = instances[idx];
    const std::size_t len = inst.candidates.size();
    std::vector<int> us(len, inst.u), is, ps;
    if (inst.task == 'A') {
      is = inst.candidates;
      ps.assign(len, -1);
    } else {
      is.assign(len, inst.i);
      ps = inst.candidates;
    }
    auto logits = nc::sigmoid(nullptr, score_block(nullptr, model, fs, us, is, ps, inst.task));
    std::vector<double> scores(logits.vals().begin(), logits.vals().end());
    ranks[idx] = rank_of_positive(inst, scores);
  };

  const int workers = std::max(1, model.cfg.threads);
  if (workers == 1 || instances.size() < 16) {
    for (std::size_t i = 0; i < instances.size(); ++i) score_instance(i);
  } else {
    std::vector<std::thread> pool;
    std::size_t chunk = (instances.size() + workers - 1) / static_cast<std::size_t>(workers);
    for (int w = 0; w < workers; ++w) {
      const std::size_t begin = static_cast<std::size_t>(w) * chunk;
      const std::size_t end = std::min(instances.size(), begin + chunk);
      if (begin >= end) break;
      pool.emplace_back([&, begin, end] {
        for (std::size_t i = begin; i < end; ++i) score_instance(i);
      });
    }
    for (auto& t : pool) t.join();
  }

  std::vector<int> ranks_a, ranks_b;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    (instances[i].task == 'A' ? ranks_a : ranks_b).push_back(ranks[i]);
  }

  MetricsReport report;
  report.n = neg_k + 1;
  report.seed = seed;
  if (!ranks_a.empty()) {
    report.mrr_a = mrr_at_n(ranks_a, report.n);
    report.ndcg_a = ndcg_at_n(ranks_a, report.n);
  }
  if (!ranks_b.empty()) {
    report.mrr_b = mrr_at_n(ranks_b, report.n);
    report.ndcg_b = ndcg_at_n(ranks_b, report.n);
  }

  if (ranks_csv) {
    std::ofstream out(*ranks_csv);
    if (!out) throw DataError("cannot write ranks file '" + *ranks_csv + "'");
    out << "instance,task,u,i,positive,rank\n";
    for (std::size_t i = 0; i < instances.size(); ++i) {
      const auto& inst = instances[i];
      out << i << ',' << inst.task << ',' << inst.u << ','
          << (inst.task == 'A' ? -1 : inst.i) << ','
          << inst.candidates[static_cast<std::size_t>(inst.positive_index)] << ',' << ranks[i]
          << '\n';
    }
  }
  return report;
}

}  // namespace mgbr
