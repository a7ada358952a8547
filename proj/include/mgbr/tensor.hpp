#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "mgbr/errors.hpp"

namespace mgbr::nc {

class Tape;

/// Rank-1 or rank-2 float32 tensor, row-major. Copies share storage, so a
/// parameter updated in place stays visible through every handle.
class Tensor {
 public:
  Tensor() : vals_(std::make_shared<std::vector<float>>()) {}

  Tensor(std::vector<int> shape, float fill = 0.0f);
  Tensor(std::vector<int> shape, std::vector<float> values);

  static Tensor scalar(float v) { return Tensor({1}, {v}); }

  const std::vector<int>& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int rows() const;
  int cols() const;
  std::size_t numel() const { return vals_->size(); }

  std::vector<float>& vals() { return *vals_; }
  const std::vector<float>& vals() const { return *vals_; }
  float at(int r, int c) const { return (*vals_)[static_cast<std::size_t>(r) * cols() + c]; }
  float& at(int r, int c) { return (*vals_)[static_cast<std::size_t>(r) * cols() + c]; }
  float item() const;

  bool all_finite() const;
  std::string shape_str() const;

  /// Handle into the active tape; -1 when the tensor is a constant.
  int node = -1;

 private:
  std::vector<int> shape_;
  std::shared_ptr<std::vector<float>> vals_;
};

/// Reverse-mode gradient tape. One tape lives for one training step: ops
/// append nodes in execution order, backward() replays them once in reverse.
class Tape {
 public:
  /// Register a leaf (parameter). Gradients of leaves that no op consumes
  /// stay exactly zero.
  int watch(Tensor& t);

  /// Accumulate gradients of a scalar loss into every reachable node.
  void backward(const Tensor& loss);

  /// Gradient buffer of a watched/derived tensor (zeros if unreached).
  const std::vector<float>& grad(const Tensor& t) const;

  std::size_t size() const { return nodes_.size(); }

  // --- op-implementation interface ---
  // The closure receives the node id of the op's own output, since the id is
  // not known until push() returns.
  int push(std::size_t out_numel, std::function<void(Tape&, int)> back);
  bool reached(int node) const;
  std::vector<float>& grad_buf(int node);

 private:
  struct Node {
    std::size_t numel;
    std::function<void(Tape&, int)> back;
  };
  std::vector<Node> nodes_;
  mutable std::vector<std::vector<float>> grads_;
};

// ---- operations -------------------------------------------------------
// Every op takes the tape first; passing nullptr runs forward-only.

Tensor matmul(Tape* tape, const Tensor& a, const Tensor& b);
Tensor add(Tape* tape, const Tensor& a, const Tensor& b);
Tensor sub(Tape* tape, const Tensor& a, const Tensor& b);
Tensor mul(Tape* tape, const Tensor& a, const Tensor& b);
Tensor scale(Tape* tape, const Tensor& a, float c);

/// mat[r, :] + row for every row r; row has shape [n] or [1, n].
Tensor add_rowvec(Tape* tape, const Tensor& mat, const Tensor& row);

Tensor sigmoid(Tape* tape, const Tensor& x);
Tensor relu(Tape* tape, const Tensor& x);
Tensor log(Tape* tape, const Tensor& x);
Tensor softplus(Tape* tape, const Tensor& x);
/// log(sigmoid(x)) computed without forming sigmoid(x).
Tensor log_sigmoid(Tape* tape, const Tensor& x);

Tensor softmax_rows(Tape* tape, const Tensor& x);
/// Row-wise log(softmax(x)), stable for widely spread inputs.
Tensor log_softmax_rows(Tape* tape, const Tensor& x);
Tensor mean_rows(Tape* tape, const Tensor& x);
Tensor sum(Tape* tape, const Tensor& x);

Tensor concat(Tape* tape, const std::vector<Tensor>& parts, int axis);
Tensor gather_rows(Tape* tape, const Tensor& x, const std::vector<int>& idx);
Tensor reshape(Tape* tape, const Tensor& x, std::vector<int> shape);

/// out[r, :] = sum_j coeffs[r, j] * parts[j][r, :]. The workhorse of the
/// gate units: mixes per-row expert outputs with per-row weights.
Tensor mix_rows(Tape* tape, const Tensor& coeffs, const std::vector<Tensor>& parts);

// forward-op counters, used by instrumentation tests
long spmm_call_count();
void reset_spmm_call_count();

}  // namespace mgbr::nc
