#include "mgbr/loss.hpp"

#include <cmath>

#include "mgbr/errors.hpp"

namespace mgbr {

using nc::Tensor;

float bpr_pair(float s_pos, float s_neg) {
  const float x = s_pos - s_neg;
  return x > 0.0f ? std::log1p(std::exp(-x)) : -x + std::log1p(std::exp(x));
}

Tensor ranking_loss(nc::Tape* tape, const Tensor& scores, int neg_per_pos) {
  const int stride = neg_per_pos + 1;
  const int n = scores.rows();
  if (scores.cols() != 1 || n == 0 || n % stride != 0) {
    throw ContractError("ranking_loss: expected [(1+k)*P,1] scores, got " + scores.shape_str());
  }
  const int n_pos = n / stride;
  std::vector<int> pos_idx, neg_idx;
  pos_idx.reserve(static_cast<std::size_t>(n_pos) * neg_per_pos);
  neg_idx.reserve(pos_idx.capacity());
  for (int p = 0; p < n_pos; ++p) {
    for (int k = 1; k <= neg_per_pos; ++k) {
      pos_idx.push_back(p * stride);
      neg_idx.push_back(p * stride + k);
    }
  }
  // -log sigmoid(pos - neg) == softplus(neg - pos)
  Tensor margins = nc::sub(tape, nc::gather_rows(tape, scores, neg_idx),
                           nc::gather_rows(tape, scores, pos_idx));
  Tensor total = nc::sum(tape, nc::softplus(tape, margins));
  return nc::scale(tape, total, 1.0f / static_cast<float>(n));
}

Tensor aux_loss_a(nc::Tape* tape, const Tensor& logits, int n_triples, int aux_size,
                  bool softmax_listnet) {
  const int row_width = 2 * aux_size;
  if (logits.cols() != 1 || logits.rows() != n_triples * row_width) {
    throw ContractError("aux_loss_a: expected [2|T|*n,1] logits, got " + logits.shape_str());
  }
  Tensor mask({n_triples, row_width});
  for (int t = 0; t < n_triples; ++t) {
    for (int j = aux_size; j < row_width; ++j) {
      mask.at(t, j) = 1.0f;  // participant-replaced triples carry label 1
    }
  }
  Tensor log_scores;
  if (softmax_listnet) {
    // list-wise normalization over the head's raw ranking outputs; the
    // bounded post-sigmoid values could never saturate the list
    log_scores = nc::log_softmax_rows(tape, nc::reshape(tape, logits, {n_triples, row_width}));
  } else {
    // raw form: log of the sigmoid score itself
    log_scores = nc::reshape(tape, nc::log_sigmoid(tape, logits), {n_triples, row_width});
  }
  Tensor total = nc::sum(tape, nc::mul(tape, log_scores, mask));
  return nc::scale(tape, total, -1.0f / static_cast<float>(n_triples * row_width));
}

Tensor aux_loss_b(nc::Tape* tape, const Tensor& pos_scores, const Tensor& aux_scores,
                  int aux_size) {
  const int n_triples = pos_scores.rows();
  if (pos_scores.cols() != 1 || aux_scores.cols() != 1 ||
      aux_scores.rows() != n_triples * aux_size) {
    throw ContractError("aux_loss_b: scores must be [n,1] and [n*|T|,1]");
  }
  std::vector<int> pos_idx;
  pos_idx.reserve(static_cast<std::size_t>(n_triples) * aux_size);
  for (int t = 0; t < n_triples; ++t) {
    for (int k = 0; k < aux_size; ++k) pos_idx.push_back(t);
  }
  Tensor margins =
      nc::sub(tape, aux_scores, nc::gather_rows(tape, pos_scores, pos_idx));
  Tensor total = nc::sum(tape, nc::softplus(tape, margins));
  return nc::scale(tape, total, 1.0f / static_cast<float>(n_triples * aux_size));
}

Tensor total_loss(nc::Tape* tape, const Tensor& loss_a, const Tensor& loss_b, const Tensor* aux_a,
                  const Tensor* aux_b, const MgbrConfig& cfg) {
  Tensor total = nc::add(tape, loss_a, nc::scale(tape, loss_b, cfg.loss_b_weight));
  if (aux_a) total = nc::add(tape, total, nc::scale(tape, *aux_a, cfg.aux_a_weight));
  if (aux_b) total = nc::add(tape, total, nc::scale(tape, *aux_b, cfg.aux_b_weight));
  return total;
}

BatchLosses compute_batch_losses(nc::Tape* tape, MgbrModel& model, const ForwardState& fs,
                                 const TrainingBatch& batch) {
  if (batch.task_a.empty() || batch.task_b.empty()) {
    throw ContractError("compute_batch_losses: empty batch");
  }
  const MgbrConfig& cfg = model.cfg;

  // task A rows: positive then its negatives, mean participant throughout
  std::vector<int> ua, ia, pa;
  for (const auto& pair : batch.task_a) {
    ua.push_back(pair.u);
    ia.push_back(pair.i);
    pa.push_back(-1);
    for (int neg : pair.neg_items) {
      ua.push_back(pair.u);
      ia.push_back(neg);
      pa.push_back(-1);
    }
  }
  Tensor scores_a = nc::sigmoid(tape, score_block(tape, model, fs, ua, ia, pa, 'A'));

  // task B rows: positive participant then sampled negatives
  std::vector<int> ub, ib, pb;
  for (const auto& t : batch.task_b) {
    ub.push_back(t.u);
    ib.push_back(t.i);
    pb.push_back(t.p);
    for (int neg : t.neg_users) {
      ub.push_back(t.u);
      ib.push_back(t.i);
      pb.push_back(neg);
    }
  }
  Tensor scores_b = nc::sigmoid(tape, score_block(tape, model, fs, ub, ib, pb, 'B'));

  BatchLosses out;
  out.loss_a = ranking_loss(tape, scores_a, batch.neg_per_pos);
  out.loss_b = ranking_loss(tape, scores_b, batch.neg_per_pos);

  if (cfg.aux_losses) {
    const int n_t = static_cast<int>(batch.task_b.size());
    const int t_size = cfg.aux_negatives;

    // aux A rows, per triple: |T| item-replaced then |T| participant-replaced,
    // scored by the task-A head with the explicit participant embedding
    std::vector<int> ux, ix, px;
    for (const auto& t : batch.task_b) {
      if (static_cast<int>(t.aux_items.size()) != t_size ||
          static_cast<int>(t.aux_users.size()) != t_size) {
        throw ContractError("aux negatives missing for a triple");
      }
      for (int it : t.aux_items) {
        ux.push_back(t.u);
        ix.push_back(it);
        px.push_back(t.p);
      }
      for (int pu : t.aux_users) {
        ux.push_back(t.u);
        ix.push_back(t.i);
        px.push_back(pu);
      }
    }
    Tensor aux_a_logits = score_block(tape, model, fs, ux, ix, px, 'A');
    out.aux_a = aux_loss_a(tape, aux_a_logits, n_t, t_size, cfg.softmax_listnet);

    // aux B rows: item-replaced variants under the task-B head; the positive
    // side reuses the task-B positive scores
    std::vector<int> uy, iy, py, pos_rows;
    for (std::size_t t = 0; t < batch.task_b.size(); ++t) {
      const auto& trip = batch.task_b[t];
      for (int it : trip.aux_items) {
        uy.push_back(trip.u);
        iy.push_back(it);
        py.push_back(trip.p);
      }
      pos_rows.push_back(static_cast<int>(t) * (batch.neg_per_pos + 1));
    }
    Tensor aux_b_scores = nc::sigmoid(tape, score_block(tape, model, fs, uy, iy, py, 'B'));
    Tensor pos_scores = nc::gather_rows(tape, scores_b, pos_rows);
    out.aux_b = aux_loss_b(tape, pos_scores, aux_b_scores, t_size);

    out.has_aux = true;
    out.total = total_loss(tape, out.loss_a, out.loss_b, &out.aux_a, &out.aux_b, cfg);
  } else {
    out.total = total_loss(tape, out.loss_a, out.loss_b, nullptr, nullptr, cfg);
  }
  return out;
}

}  // namespace mgbr
