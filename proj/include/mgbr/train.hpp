#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mgbr/data.hpp"
#include "mgbr/model.hpp"

namespace mgbr {

struct EpochLog {
  int epoch = 0;
  float loss_a = 0, loss_b = 0, aux_a = 0, aux_b = 0, total = 0;
  double val_mrr_a = 0, val_mrr_b = 0;
};

struct TrainResult {
  std::vector<EpochLog> log;
  int best_epoch = 0;
  double best_val = 0;
  bool stopped_early = false;
};

struct TrainOptions {
  std::optional<std::string> checkpoint_path;  // best model by validation MRR
  std::optional<std::string> log_csv_path;
  bool verbose = false;
};

/// Epoch loop: shuffle, fresh negatives, forward/backward, Adam. Validation
/// MRR@10 (averaged over both tasks) drives early stopping and selects the
/// checkpointed parameters; without a validation split the loop runs to
/// max_epochs. The model, if stopping early, holds the best parameters on
/// return.
TrainResult train(MgbrModel& model, const Dataset& ds, const TrainOptions& opts = {});

void write_train_log(const std::string& path, const std::vector<EpochLog>& log);

}  // namespace mgbr
