#include "mgbr/train.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "mgbr/adam.hpp"
#include "mgbr/batch.hpp"
#include "mgbr/checkpoint.hpp"
#include "mgbr/errors.hpp"
#include "mgbr/eval.hpp"
#include "mgbr/loss.hpp"

namespace mgbr {

void write_train_log(const std::string& path, const std::vector<EpochLog>& log) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write training log '" + path + "'");
  out << "epoch,loss_A,loss_B,aux_A,aux_B,total,val_mrr_A,val_mrr_B\n";
  out.precision(9);
  for (const auto& e : log) {
    out << e.epoch << ',' << e.loss_a << ',' << e.loss_b << ',' << e.aux_a << ',' << e.aux_b
        << ',' << e.total << ',' << e.val_mrr_a << ',' << e.val_mrr_b << '\n';
  }
}

TrainResult train(MgbrModel& model, const Dataset& ds, const TrainOptions& opts) {
  const MgbrConfig& cfg = model.cfg;
  if (ds.train.empty()) throw DataError("training split is empty");

  const SamplerContext ctx = SamplerContext::from(ds);
  nc::AdamConfig adam_cfg;
  adam_cfg.lr = cfg.learning_rate;
  nc::AdamState adam(adam_cfg);
  Rng neg_rng(cfg.negative_seed);

  // frozen validation candidates (1:9 protocol)
  std::vector<CandidateList> val_candidates;
  if (!ds.val.empty()) {
    val_candidates = build_candidates(ds.val, ds, 9, cfg.negative_seed ^ 0x5DEECE66Dull);
  }

  std::vector<int> order(ds.train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);

  TrainResult result;
  std::vector<float> best_snapshot;
  int since_best = 0;

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    neg_rng.shuffle(order);

    double sum_a = 0, sum_b = 0, sum_xa = 0, sum_xb = 0, sum_total = 0;
    std::size_t seen_groups = 0;
    int step = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), begin + static_cast<std::size_t>(cfg.batch_size));
      std::vector<const DealGroup*> groups;
      groups.reserve(end - begin);
      for (std::size_t j = begin; j < end; ++j) {
        groups.push_back(&ds.train[static_cast<std::size_t>(order[j])]);
      }
      const TrainingBatch batch = sample_batch(groups, ds, ctx, cfg, neg_rng);

      nc::Tape tape;
      model.params.watch_all(tape);
      auto fs = model_forward_base(&tape, model);
      auto losses = compute_batch_losses(&tape, model, fs, batch);
      const float total = losses.total.item();
      if (!std::isfinite(total)) {
        throw DivergenceError("non-finite loss at epoch " + std::to_string(epoch) + ", step " +
                              std::to_string(step));
      }
      tape.backward(losses.total);
      adam.step(model.params, tape);

      const double w = static_cast<double>(groups.size());
      sum_a += w * losses.loss_a.item();
      sum_b += w * losses.loss_b.item();
      if (losses.has_aux) {
        sum_xa += w * losses.aux_a.item();
        sum_xb += w * losses.aux_b.item();
      }
      sum_total += w * total;
      seen_groups += groups.size();
      ++step;
    }

    EpochLog entry;
    entry.epoch = epoch;
    entry.loss_a = static_cast<float>(sum_a / seen_groups);
    entry.loss_b = static_cast<float>(sum_b / seen_groups);
    entry.aux_a = static_cast<float>(sum_xa / seen_groups);
    entry.aux_b = static_cast<float>(sum_xb / seen_groups);
    entry.total = static_cast<float>(sum_total / seen_groups);

    if (!val_candidates.empty()) {
      auto report = evaluate_model(model, val_candidates, 9, cfg.negative_seed);
      entry.val_mrr_a = report.mrr_a;
      entry.val_mrr_b = report.mrr_b;
    }
    result.log.push_back(entry);
    if (opts.verbose) {
      std::fprintf(stderr, "epoch %d  total %.4f  val mrr A %.4f B %.4f\n", epoch, entry.total,
                   entry.val_mrr_a, entry.val_mrr_b);
    }

    if (!val_candidates.empty()) {
      const double score = 0.5 * (entry.val_mrr_a + entry.val_mrr_b);
      if (result.log.size() == 1 || score > result.best_val) {
        result.best_val = score;
        result.best_epoch = epoch;
        best_snapshot = model.snapshot();
        since_best = 0;
      } else if (++since_best >= cfg.patience) {
        result.stopped_early = true;
        break;
      }
    } else {
      result.best_epoch = epoch;
    }
  }

  if (!best_snapshot.empty()) model.restore(best_snapshot);
  if (opts.checkpoint_path) {
    save_checkpoint(*opts.checkpoint_path, {cfg, model.n_users, model.n_items, model.params});
  }
  if (opts.log_csv_path) write_train_log(*opts.log_csv_path, result.log);
  return result;
}

}  // namespace mgbr
