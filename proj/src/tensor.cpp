#include "mgbr/tensor.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstring>
#include <numeric>
#include <sstream>

namespace mgbr::nc {

namespace {

using MatMap = Eigen::Map<Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using ConstMatMap =
    Eigen::Map<const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

std::size_t shape_numel(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int s : shape) {
    if (s <= 0) throw DimensionError("tensor dimensions must be positive");
    n *= static_cast<std::size_t>(s);
  }
  if (shape.empty()) n = 1;
  return n;
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " +
                         b.shape_str());
  }
}

float stable_sigmoid(float x) {
  if (x >= 0.0f) {
    return 1.0f / (1.0f + std::exp(-x));
  }
  const float e = std::exp(x);
  return e / (1.0f + e);
}

float stable_softplus(float x) {
  if (x > 0.0f) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

long g_spmm_calls = 0;

}  // namespace

namespace detail {
void bump_spmm_counter() { ++g_spmm_calls; }
}  // namespace detail

long spmm_call_count() { return g_spmm_calls; }
void reset_spmm_call_count() { g_spmm_calls = 0; }

Tensor::Tensor(std::vector<int> shape, float fill)
    : shape_(std::move(shape)),
      vals_(std::make_shared<std::vector<float>>(shape_numel(shape_), fill)) {
  if (shape_.size() > 2) throw DimensionError("only rank-1/rank-2 tensors are supported");
}

Tensor::Tensor(std::vector<int> shape, std::vector<float> values)
    : shape_(std::move(shape)), vals_(std::make_shared<std::vector<float>>(std::move(values))) {
  if (shape_.size() > 2) throw DimensionError("only rank-1/rank-2 tensors are supported");
  if (shape_numel(shape_) != vals_->size()) {
    throw DimensionError("value count does not match shape " + shape_str());
  }
}

int Tensor::rows() const { return shape_.empty() ? 1 : shape_[0]; }

int Tensor::cols() const {
  if (shape_.size() == 2) return shape_[1];
  return 1;
}

float Tensor::item() const {
  if (numel() != 1) throw ContractError("item(): tensor is not scalar, shape " + shape_str());
  return (*vals_)[0];
}

bool Tensor::all_finite() const {
  for (float v : *vals_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

std::string Tensor::shape_str() const {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape_.size(); ++i) {
    if (i) os << ',';
    os << shape_[i];
  }
  os << ']';
  return os.str();
}

// ---- tape ---------------------------------------------------------------

int Tape::watch(Tensor& t) {
  t.node = push(t.numel(), {});
  return t.node;
}

int Tape::push(std::size_t out_numel, std::function<void(Tape&, int)> back) {
  nodes_.push_back(Node{out_numel, std::move(back)});
  return static_cast<int>(nodes_.size()) - 1;
}

bool Tape::reached(int node) const {
  return node >= 0 && static_cast<std::size_t>(node) < grads_.size() &&
         !grads_[static_cast<std::size_t>(node)].empty();
}

std::vector<float>& Tape::grad_buf(int node) {
  if (node < 0 || static_cast<std::size_t>(node) >= nodes_.size()) {
    throw ContractError("grad_buf: node id out of range");
  }
  if (grads_.size() < nodes_.size()) grads_.resize(nodes_.size());
  auto& g = grads_[static_cast<std::size_t>(node)];
  if (g.empty()) g.assign(nodes_[static_cast<std::size_t>(node)].numel, 0.0f);
  return g;
}

void Tape::backward(const Tensor& loss) {
  if (loss.numel() != 1) {
    throw ContractError("backward: loss must be scalar, got shape " + loss.shape_str());
  }
  if (loss.node < 0) {
    throw ContractError("backward: loss is not attached to this tape");
  }
  grad_buf(loss.node)[0] = 1.0f;
  for (std::size_t i = nodes_.size(); i-- > 0;) {
    if (!nodes_[i].back) continue;
    if (!reached(static_cast<int>(i))) continue;
    nodes_[i].back(*this, static_cast<int>(i));
  }
}

const std::vector<float>& Tape::grad(const Tensor& t) const {
  static const std::vector<float> empty;
  if (t.node < 0) throw ContractError("grad: tensor was never watched or produced on this tape");
  if (grads_.size() < nodes_.size()) grads_.resize(nodes_.size());
  auto& g = grads_[static_cast<std::size_t>(t.node)];
  if (g.empty()) g.assign(nodes_[static_cast<std::size_t>(t.node)].numel, 0.0f);
  return g;
}

// ---- helpers for op bodies ----------------------------------------------

namespace {

// Registers an elementwise op: dy/dx given by `dback(x_i, y_i)`.
Tensor unary_elementwise(Tape* tape, const Tensor& x, float (*fwd)(float),
                         float (*dback)(float, float)) {
  Tensor y(x.shape());
  const auto& xv = x.vals();
  auto& yv = y.vals();
  for (std::size_t i = 0; i < xv.size(); ++i) yv[i] = fwd(xv[i]);
  if (tape && x.node >= 0) {
    const int xn = x.node;
    y.node = tape->push(y.numel(), [x, y, xn, dback](Tape& t, int self) {
      const auto& gy = t.grad_buf(self);
      auto& gx = t.grad_buf(xn);
      const auto& xv2 = x.vals();
      const auto& yv2 = y.vals();
      for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += dback(xv2[i], yv2[i]) * gy[i];
    });
  }
  return y;
}

}  // namespace

// ---- arithmetic ----------------------------------------------------------

Tensor matmul(Tape* tape, const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.shape()[1] != b.shape()[0]) {
    throw DimensionError("matmul: incompatible shapes " + a.shape_str() + " x " + b.shape_str());
  }
  const int m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  Tensor c({m, n});
  {
    ConstMatMap ma(a.vals().data(), m, k);
    ConstMatMap mb(b.vals().data(), k, n);
    MatMap mc(c.vals().data(), m, n);
    mc.noalias() = ma * mb;
  }
  if (tape && (a.node >= 0 || b.node >= 0)) {
    c.node = tape->push(c.numel(), [a, b, c, m, k, n](Tape& t, int self) {
      const auto& gc = t.grad_buf(self);
      ConstMatMap mg(gc.data(), m, n);
      if (a.node >= 0) {
        auto& ga = t.grad_buf(a.node);
        MatMap mga(ga.data(), m, k);
        ConstMatMap mb(b.vals().data(), k, n);
        mga.noalias() += mg * mb.transpose();
      }
      if (b.node >= 0) {
        auto& gb = t.grad_buf(b.node);
        MatMap mgb(gb.data(), k, n);
        ConstMatMap ma(a.vals().data(), m, k);
        mgb.noalias() += ma.transpose() * mg;
      }
    });
  }
  return c;
}

Tensor add(Tape* tape, const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  Tensor c(a.shape());
  const auto& av = a.vals();
  const auto& bv = b.vals();
  auto& cv = c.vals();
  for (std::size_t i = 0; i < cv.size(); ++i) cv[i] = av[i] + bv[i];
  if (tape && (a.node >= 0 || b.node >= 0)) {
    c.node = tape->push(c.numel(), [a, b, c](Tape& t, int self) {
      const auto& gc = t.grad_buf(self);
      if (a.node >= 0) {
        auto& ga = t.grad_buf(a.node);
        for (std::size_t i = 0; i < gc.size(); ++i) ga[i] += gc[i];
      }
      if (b.node >= 0) {
        auto& gb = t.grad_buf(b.node);
        for (std::size_t i = 0; i < gc.size(); ++i) gb[i] += gc[i];
      }
    });
  }
  return c;
}

Tensor sub(Tape* tape, const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  Tensor c(a.shape());
  const auto& av = a.vals();
  const auto& bv = b.vals();
  auto& cv = c.vals();
  for (std::size_t i = 0; i < cv.size(); ++i) cv[i] = av[i] - bv[i];
  if (tape && (a.node >= 0 || b.node >= 0)) {
    c.node = tape->push(c.numel(), [a, b, c](Tape& t, int self) {
      const auto& gc = t.grad_buf(self);
      if (a.node >= 0) {
        auto& ga = t.grad_buf(a.node);
        for (std::size_t i = 0; i < gc.size(); ++i) ga[i] += gc[i];
      }
      if (b.node >= 0) {
        auto& gb = t.grad_buf(b.node);
        for (std::size_t i = 0; i < gc.size(); ++i) gb[i] -= gc[i];
      }
    });
  }
  return c;
}

Tensor mul(Tape* tape, const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  Tensor c(a.shape());
  const auto& av = a.vals();
  const auto& bv = b.vals();
  auto& cv = c.vals();
  for (std::size_t i = 0; i < cv.size(); ++i) cv[i] = av[i] * bv[i];
  if (tape && (a.node >= 0 || b.node >= 0)) {
    c.node = tape->push(c.numel(), [a, b, c](Tape& t, int self) {
      const auto& gc = t.grad_buf(self);
      if (a.node >= 0) {
        auto& ga = t.grad_buf(a.node);
        const auto& bv2 = b.vals();
        for (std::size_t i = 0; i < gc.size(); ++i) ga[i] += bv2[i] * gc[i];
      }
      if (b.node >= 0) {
        auto& gb = t.grad_buf(b.node);
        const auto& av2 = a.vals();
        for (std::size_t i = 0; i < gc.size(); ++i) gb[i] += av2[i] * gc[i];
      }
    });
  }
  return c;
}

Tensor scale(Tape* tape, const Tensor& a, float cst) {
  Tensor c(a.shape());
  const auto& av = a.vals();
  auto& cv = c.vals();
  for (std::size_t i = 0; i < cv.size(); ++i) cv[i] = av[i] * cst;
  if (tape && a.node >= 0) {
    c.node = tape->push(c.numel(), [a, c, cst](Tape& t, int self) {
      const auto& gc = t.grad_buf(self);
      auto& ga = t.grad_buf(a.node);
      for (std::size_t i = 0; i < gc.size(); ++i) ga[i] += cst * gc[i];
    });
  }
  return c;
}

Tensor add_rowvec(Tape* tape, const Tensor& mat, const Tensor& row) {
  if (mat.rank() != 2) throw DimensionError("add_rowvec: matrix operand must be rank-2");
  const int m = mat.shape()[0], n = mat.shape()[1];
  if (static_cast<int>(row.numel()) != n) {
    throw DimensionError("add_rowvec: row length " + row.shape_str() + " does not match " +
                         mat.shape_str());
  }
  Tensor c({m, n});
  const auto& av = mat.vals();
  const auto& rv = row.vals();
  auto& cv = c.vals();
  for (int r = 0; r < m; ++r) {
    const std::size_t off = static_cast<std::size_t>(r) * n;
    for (int j = 0; j < n; ++j) cv[off + j] = av[off + j] + rv[static_cast<std::size_t>(j)];
  }
  if (tape && (mat.node >= 0 || row.node >= 0)) {
    c.node = tape->push(c.numel(), [mat, row, c, m, n](Tape& t, int self) {
      const auto& gc = t.grad_buf(self);
      if (mat.node >= 0) {
        auto& ga = t.grad_buf(mat.node);
        for (std::size_t i = 0; i < gc.size(); ++i) ga[i] += gc[i];
      }
      if (row.node >= 0) {
        auto& gr = t.grad_buf(row.node);
        // column sums over many rows cancel heavily; keep them in double
        for (int j = 0; j < n; ++j) {
          double acc = 0.0;
          for (int r = 0; r < m; ++r) acc += gc[static_cast<std::size_t>(r) * n + j];
          gr[static_cast<std::size_t>(j)] += static_cast<float>(acc);
        }
      }
    });
  }
  return c;
}

// ---- nonlinearities -------------------------------------------------------

Tensor sigmoid(Tape* tape, const Tensor& x) {
  return unary_elementwise(
      tape, x, [](float v) { return stable_sigmoid(v); },
      [](float, float y) { return y * (1.0f - y); });
}

Tensor relu(Tape* tape, const Tensor& x) {
  return unary_elementwise(
      tape, x, [](float v) { return v > 0.0f ? v : 0.0f; },
      [](float v, float) { return v > 0.0f ? 1.0f : 0.0f; });
}

Tensor log(Tape* tape, const Tensor& x) {
  for (float v : x.vals()) {
    if (!(v > 0.0f)) {
      throw DomainError("log: input must be strictly positive, got " + std::to_string(v));
    }
  }
  return unary_elementwise(
      tape, x, [](float v) { return std::log(v); }, [](float v, float) { return 1.0f / v; });
}

Tensor softplus(Tape* tape, const Tensor& x) {
  return unary_elementwise(
      tape, x, [](float v) { return stable_softplus(v); },
      [](float v, float) { return stable_sigmoid(v); });
}

Tensor log_sigmoid(Tape* tape, const Tensor& x) {
  return unary_elementwise(
      tape, x, [](float v) { return -stable_softplus(-v); },
      [](float v, float) { return stable_sigmoid(-v); });
}

// ---- structural / reductions ----------------------------------------------

Tensor softmax_rows(Tape* tape, const Tensor& x) {
  if (x.rank() != 2) throw DimensionError("softmax_rows: operand must be rank-2");
  const int m = x.shape()[0], n = x.shape()[1];
  Tensor y({m, n});
  const auto& xv = x.vals();
  auto& yv = y.vals();
  for (int r = 0; r < m; ++r) {
    const std::size_t off = static_cast<std::size_t>(r) * n;
    float mx = xv[off];
    for (int j = 1; j < n; ++j) mx = std::max(mx, xv[off + j]);
    float z = 0.0f;
    for (int j = 0; j < n; ++j) {
      yv[off + j] = std::exp(xv[off + j] - mx);
      z += yv[off + j];
    }
    for (int j = 0; j < n; ++j) yv[off + j] /= z;
  }
  if (tape && x.node >= 0) {
    y.node = tape->push(y.numel(), [x, y, m, n](Tape& t, int self) {
      const auto& gy = t.grad_buf(self);
      auto& gx = t.grad_buf(x.node);
      const auto& yv2 = y.vals();
      for (int r = 0; r < m; ++r) {
        const std::size_t off = static_cast<std::size_t>(r) * n;
        float dot = 0.0f;
        for (int j = 0; j < n; ++j) dot += gy[off + j] * yv2[off + j];
        for (int j = 0; j < n; ++j) gx[off + j] += yv2[off + j] * (gy[off + j] - dot);
      }
    });
  }
  return y;
}

Tensor log_softmax_rows(Tape* tape, const Tensor& x) {
  if (x.rank() != 2) throw DimensionError("log_softmax_rows: operand must be rank-2");
  const int m = x.shape()[0], n = x.shape()[1];
  Tensor y({m, n});
  const auto& xv = x.vals();
  auto& yv = y.vals();
  for (int r = 0; r < m; ++r) {
    const std::size_t off = static_cast<std::size_t>(r) * n;
    float mx = xv[off];
    for (int j = 1; j < n; ++j) mx = std::max(mx, xv[off + j]);
    double z = 0.0;
    for (int j = 0; j < n; ++j) z += std::exp(static_cast<double>(xv[off + j]) - mx);
    const float lse = mx + static_cast<float>(std::log(z));
    for (int j = 0; j < n; ++j) yv[off + j] = xv[off + j] - lse;
  }
  if (tape && x.node >= 0) {
    y.node = tape->push(y.numel(), [x, y, m, n](Tape& t, int self) {
      const auto& gy = t.grad_buf(self);
      auto& gx = t.grad_buf(x.node);
      const auto& yv2 = y.vals();
      for (int r = 0; r < m; ++r) {
        const std::size_t off = static_cast<std::size_t>(r) * n;
        float gsum = 0.0f;
        for (int j = 0; j < n; ++j) gsum += gy[off + j];
        for (int j = 0; j < n; ++j) {
          gx[off + j] += gy[off + j] - std::exp(yv2[off + j]) * gsum;
        }
      }
    });
  }
  return y;
}

Tensor mean_rows(Tape* tape, const Tensor& x) {
  if (x.rank() != 2) throw DimensionError("mean_rows: operand must be rank-2");
  const int m = x.shape()[0], n = x.shape()[1];
  Tensor y({1, n});
  const auto& xv = x.vals();
  auto& yv = y.vals();
  for (int r = 0; r < m; ++r) {
    const std::size_t off = static_cast<std::size_t>(r) * n;
    for (int j = 0; j < n; ++j) yv[static_cast<std::size_t>(j)] += xv[off + j];
  }
  const float inv = 1.0f / static_cast<float>(m);
  for (int j = 0; j < n; ++j) yv[static_cast<std::size_t>(j)] *= inv;
  if (tape && x.node >= 0) {
    y.node = tape->push(y.numel(), [x, y, m, n, inv](Tape& t, int self) {
      const auto& gy = t.grad_buf(self);
      auto& gx = t.grad_buf(x.node);
      for (int r = 0; r < m; ++r) {
        const std::size_t off = static_cast<std::size_t>(r) * n;
        for (int j = 0; j < n; ++j) gx[off + j] += inv * gy[static_cast<std::size_t>(j)];
      }
    });
  }
  return y;
}

Tensor sum(Tape* tape, const Tensor& x) {
  // accumulate in double so large batches keep full float precision
  double acc = 0.0;
  for (float v : x.vals()) acc += v;
  Tensor y = Tensor::scalar(static_cast<float>(acc));
  if (tape && x.node >= 0) {
    y.node = tape->push(1, [x, y](Tape& t, int self) {
      const float g = t.grad_buf(self)[0];
      auto& gx = t.grad_buf(x.node);
      for (auto& v : gx) v += g;
    });
  }
  return y;
}

Tensor concat(Tape* tape, const std::vector<Tensor>& parts, int axis) {
  if (parts.empty()) throw ContractError("concat: no operands");
  const int rank = parts[0].rank();
  if (rank == 1 || axis == 0) {
    // stack along rows (or plain concatenation for rank-1)
    if (rank == 1) {
      int total = 0;
      for (const auto& p : parts) {
        if (p.rank() != 1) throw DimensionError("concat axis 0: mixed ranks");
        total += p.shape()[0];
      }
      Tensor y({total});
      std::size_t off = 0;
      for (const auto& p : parts) {
        std::memcpy(y.vals().data() + off, p.vals().data(), p.numel() * sizeof(float));
        off += p.numel();
      }
      bool tracked = false;
      for (const auto& p : parts)
        if (p.node >= 0) tracked = true;
      if (tape && tracked) {
        y.node = tape->push(y.numel(), [parts, y](Tape& t, int self) {
          const auto& gy = t.grad_buf(self);
          std::size_t off2 = 0;
          for (const auto& p : parts) {
            if (p.node >= 0) {
              auto& gp = t.grad_buf(p.node);
              for (std::size_t i = 0; i < p.numel(); ++i) gp[i] += gy[off2 + i];
            }
            off2 += p.numel();
          }
        });
      }
      return y;
    }
    int total_rows = 0;
    const int n = parts[0].shape()[1];
    for (const auto& p : parts) {
      if (p.rank() != 2 || p.shape()[1] != n) {
        throw DimensionError("concat axis 0: column counts differ");
      }
      total_rows += p.shape()[0];
    }
    Tensor y({total_rows, n});
    std::size_t off = 0;
    for (const auto& p : parts) {
      std::memcpy(y.vals().data() + off, p.vals().data(), p.numel() * sizeof(float));
      off += p.numel();
    }
    bool tracked = false;
    for (const auto& p : parts)
      if (p.node >= 0) tracked = true;
    if (tape && tracked) {
      y.node = tape->push(y.numel(), [parts, y](Tape& t, int self) {
        const auto& gy = t.grad_buf(self);
        std::size_t off2 = 0;
        for (const auto& p : parts) {
          if (p.node >= 0) {
            auto& gp = t.grad_buf(p.node);
            for (std::size_t i = 0; i < p.numel(); ++i) gp[i] += gy[off2 + i];
          }
          off2 += p.numel();
        }
      });
    }
    return y;
  }
  if (axis != 1) throw ContractError("concat: axis must be 0 or 1");
  const int m = parts[0].shape()[0];
  int total_cols = 0;
  for (const auto& p : parts) {
    if (p.rank() != 2 || p.shape()[0] != m) throw DimensionError("concat axis 1: row counts differ");
    total_cols += p.shape()[1];
  }
  Tensor y({m, total_cols});
  auto& yv = y.vals();
  int col_off = 0;
  for (const auto& p : parts) {
    const int pc = p.shape()[1];
    const auto& pv = p.vals();
    for (int r = 0; r < m; ++r) {
      std::memcpy(yv.data() + static_cast<std::size_t>(r) * total_cols + col_off,
                  pv.data() + static_cast<std::size_t>(r) * pc, static_cast<std::size_t>(pc) * sizeof(float));
    }
    col_off += pc;
  }
  bool tracked = false;
  for (const auto& p : parts)
    if (p.node >= 0) tracked = true;
  if (tape && tracked) {
    y.node = tape->push(y.numel(), [parts, y, m, total_cols](Tape& t, int self) {
      const auto& gy = t.grad_buf(self);
      int co = 0;
      for (const auto& p : parts) {
        const int pc = p.shape()[1];
        if (p.node >= 0) {
          auto& gp = t.grad_buf(p.node);
          for (int r = 0; r < m; ++r) {
            const std::size_t src = static_cast<std::size_t>(r) * total_cols + co;
            const std::size_t dst = static_cast<std::size_t>(r) * pc;
            for (int j = 0; j < pc; ++j) gp[dst + j] += gy[src + j];
          }
        }
        co += pc;
      }
    });
  }
  return y;
}

Tensor gather_rows(Tape* tape, const Tensor& x, const std::vector<int>& idx) {
  if (x.rank() != 2) throw DimensionError("gather_rows: operand must be rank-2");
  const int m = x.shape()[0], n = x.shape()[1];
  for (int i : idx) {
    if (i < 0 || i >= m) {
      throw LookupError("gather_rows: row " + std::to_string(i) + " out of range [0," +
                        std::to_string(m) + ")");
    }
  }
  Tensor y({static_cast<int>(idx.size()), n});
  const auto& xv = x.vals();
  auto& yv = y.vals();
  for (std::size_t r = 0; r < idx.size(); ++r) {
    std::memcpy(yv.data() + r * n, xv.data() + static_cast<std::size_t>(idx[r]) * n,
                static_cast<std::size_t>(n) * sizeof(float));
  }
  if (tape && x.node >= 0) {
    y.node = tape->push(y.numel(), [x, y, idx, n](Tape& t, int self) {
      const auto& gy = t.grad_buf(self);
      auto& gx = t.grad_buf(x.node);
      for (std::size_t r = 0; r < idx.size(); ++r) {
        const std::size_t dst = static_cast<std::size_t>(idx[r]) * n;
        const std::size_t src = r * n;
        for (int j = 0; j < n; ++j) gx[dst + j] += gy[src + j];
      }
    });
  }
  return y;
}

Tensor reshape(Tape* tape, const Tensor& x, std::vector<int> shape) {
  Tensor y(std::move(shape), x.vals());
  if (y.numel() != x.numel()) {
    throw DimensionError("reshape: element count mismatch " + x.shape_str() + " -> " +
                         y.shape_str());
  }
  if (tape && x.node >= 0) {
    y.node = tape->push(y.numel(), [x, y](Tape& t, int self) {
      const auto& gy = t.grad_buf(self);
      auto& gx = t.grad_buf(x.node);
      for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += gy[i];
    });
  }
  return y;
}

Tensor mix_rows(Tape* tape, const Tensor& coeffs, const std::vector<Tensor>& parts) {
  if (coeffs.rank() != 2) throw DimensionError("mix_rows: coeffs must be rank-2");
  const int m = coeffs.shape()[0];
  const int j_count = coeffs.shape()[1];
  if (static_cast<int>(parts.size()) != j_count) {
    throw DimensionError("mix_rows: coeff columns " + std::to_string(j_count) +
                         " != part count " + std::to_string(parts.size()));
  }
  const int n = parts[0].shape()[1];
  for (const auto& p : parts) {
    if (p.rank() != 2 || p.shape()[0] != m || p.shape()[1] != n) {
      throw DimensionError("mix_rows: every part must be " + std::to_string(m) + "x" +
                           std::to_string(n));
    }
  }
  Tensor y({m, n});
  auto& yv = y.vals();
  const auto& cv = coeffs.vals();
  for (int j = 0; j < j_count; ++j) {
    const auto& pv = parts[static_cast<std::size_t>(j)].vals();
    for (int r = 0; r < m; ++r) {
      const float w = cv[static_cast<std::size_t>(r) * j_count + j];
      const std::size_t off = static_cast<std::size_t>(r) * n;
      for (int c = 0; c < n; ++c) yv[off + c] += w * pv[off + c];
    }
  }
  bool tracked = coeffs.node >= 0;
  for (const auto& p : parts)
    if (p.node >= 0) tracked = true;
  if (tape && tracked) {
    y.node = tape->push(y.numel(), [coeffs, parts, y, m, j_count, n](Tape& t, int self) {
      const auto& gy = t.grad_buf(self);
      const auto& cv2 = coeffs.vals();
      for (int j = 0; j < j_count; ++j) {
        const auto& part = parts[static_cast<std::size_t>(j)];
        if (part.node >= 0) {
          auto& gp = t.grad_buf(part.node);
          for (int r = 0; r < m; ++r) {
            const float w = cv2[static_cast<std::size_t>(r) * j_count + j];
            const std::size_t off = static_cast<std::size_t>(r) * n;
            for (int c = 0; c < n; ++c) gp[off + c] += w * gy[off + c];
          }
        }
        if (coeffs.node >= 0) {
          auto& gc = t.grad_buf(coeffs.node);
          const auto& pv = part.vals();
          for (int r = 0; r < m; ++r) {
            const std::size_t off = static_cast<std::size_t>(r) * n;
            float dot = 0.0f;
            for (int c = 0; c < n; ++c) dot += gy[off + c] * pv[off + c];
            gc[static_cast<std::size_t>(r) * j_count + j] += dot;
          }
        }
      }
    });
  }
  return y;
}

}  // namespace mgbr::nc
