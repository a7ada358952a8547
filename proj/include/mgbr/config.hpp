#pragma once

#include <cstdint>
#include <string>

namespace mgbr {

/// Every knob of the model and its training run. Defaults are the published
/// operating point; ablation flags switch model variants.
struct MgbrConfig {
  // architecture
  int embed_dim = 128;        // d: per-view GCN width; object embeddings are 2d
  int gcn_layers = 2;         // H
  int experts = 6;            // K: expert networks per sub-module per layer
  int mtl_layers = 2;         // L
  int aux_negatives = 99;     // |T|: replacements per positive in each aux loss

  // loss/gate coefficients
  float gate_alpha_a = 0.1f;
  float gate_alpha_b = 0.1f;
  float loss_b_weight = 1.0f;   // beta
  float aux_a_weight = 0.3f;    // beta_A
  float aux_b_weight = 0.3f;    // beta_B

  // optimization
  float learning_rate = 2e-4f;
  int batch_size = 64;
  int max_epochs = 200;
  int patience = 10;

  // seeds
  std::uint64_t data_seed = 7;
  std::uint64_t init_seed = 13;
  std::uint64_t negative_seed = 101;

  // variant toggles
  bool shared_experts = true;        // off = no S experts/gate
  bool adjusted_gates = true;        // off = generic gates (alpha treated as 0)
  bool aux_losses = true;            // off = plain two-task objective
  bool softmax_listnet = true;       // off = raw log-score form of the task-A aux loss
  bool exclude_self_from_mean = false;

  int threads = 1;

  void validate() const;

  /// Render as the flat key=value text used in config files and checkpoints.
  std::string to_text() const;

  /// Apply `key=value` lines (# comments allowed) on top of *this.
  void apply_text(const std::string& text);
  void apply_file(const std::string& path);

  bool operator==(const MgbrConfig&) const = default;
};

}  // namespace mgbr
