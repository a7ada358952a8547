#pragma once

#include "mgbr/batch.hpp"
#include "mgbr/model.hpp"
#include "mgbr/tensor.hpp"

namespace mgbr {

/// -log sigmoid(s_pos - s_neg), the pairwise ranking term.
float bpr_pair(float s_pos, float s_neg);

/// Mean-normalized pairwise ranking loss over positives with `neg_per_pos`
/// negatives each. `scores` holds post-sigmoid scores in blocks of
/// (1 + neg_per_pos) rows: positive first, then its negatives. The
/// denominator counts positives plus negatives, not pair terms.
nc::Tensor ranking_loss(nc::Tape* tape, const nc::Tensor& scores, int neg_per_pos);

/// Task-A auxiliary loss. `logits` holds pre-sigmoid outputs of the task-A
/// head, 2|T| rows per triple: |T| item-replaced first, then |T|
/// participant-replaced (the participant-replaced ones are the targets).
/// ListNet mode softmax-normalizes the 2|T| scores; the raw mode keeps the
/// plain log-score form.
nc::Tensor aux_loss_a(nc::Tape* tape, const nc::Tensor& logits, int n_triples, int aux_size,
                      bool softmax_listnet);

/// Task-B auxiliary loss: pairwise ranking of each positive triple's score
/// against its |T| item-replaced variants. Both inputs are post-sigmoid.
nc::Tensor aux_loss_b(nc::Tape* tape, const nc::Tensor& pos_scores, const nc::Tensor& aux_scores,
                      int aux_size);

/// beta-weighted sum of the four components. Auxiliary terms are dropped
/// entirely when the config disables them.
nc::Tensor total_loss(nc::Tape* tape, const nc::Tensor& loss_a, const nc::Tensor& loss_b,
                      const nc::Tensor* aux_a, const nc::Tensor* aux_b, const MgbrConfig& cfg);

/// All loss components of one sampled batch, as tape scalars.
struct BatchLosses {
  nc::Tensor loss_a, loss_b, aux_a, aux_b, total;
  bool has_aux = false;
};

BatchLosses compute_batch_losses(nc::Tape* tape, MgbrModel& model, const ForwardState& fs,
                                 const TrainingBatch& batch);

}  // namespace mgbr
