#include "mgbr/sparse.hpp"

#include <algorithm>
#include <cmath>

namespace mgbr::nc {

namespace detail {
void bump_spmm_counter();
}

SparseMatrix SparseMatrix::identity(int n) {
  SparseMatrix s;
  s.rows = s.cols = n;
  s.row_ptr.resize(static_cast<std::size_t>(n) + 1);
  s.col_idx.resize(static_cast<std::size_t>(n));
  s.vals.assign(static_cast<std::size_t>(n), 1.0f);
  for (int i = 0; i < n; ++i) {
    s.row_ptr[static_cast<std::size_t>(i)] = i;
    s.col_idx[static_cast<std::size_t>(i)] = i;
  }
  s.row_ptr[static_cast<std::size_t>(n)] = n;
  return s;
}

SparseMatrix SparseMatrix::from_coo(int rows, int cols,
                                    std::vector<std::tuple<int, int, float>> entries) {
  if (rows <= 0 || cols <= 0) throw StructuralError("sparse matrix dimensions must be positive");
  for (const auto& [r, c, v] : entries) {
    (void)v;
    if (r < 0 || r >= rows || c < 0 || c >= cols) {
      throw StructuralError("sparse entry (" + std::to_string(r) + "," + std::to_string(c) +
                            ") out of range for " + std::to_string(rows) + "x" +
                            std::to_string(cols));
    }
  }
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    return std::tie(std::get<0>(a), std::get<1>(a)) < std::tie(std::get<0>(b), std::get<1>(b));
  });
  for (std::size_t i = 1; i < entries.size(); ++i) {
    if (std::get<0>(entries[i]) == std::get<0>(entries[i - 1]) &&
        std::get<1>(entries[i]) == std::get<1>(entries[i - 1])) {
      throw StructuralError("duplicate sparse entry at (" +
                            std::to_string(std::get<0>(entries[i])) + "," +
                            std::to_string(std::get<1>(entries[i])) + ")");
    }
  }
  SparseMatrix s;
  s.rows = rows;
  s.cols = cols;
  s.row_ptr.assign(static_cast<std::size_t>(rows) + 1, 0);
  s.col_idx.reserve(entries.size());
  s.vals.reserve(entries.size());
  for (const auto& [r, c, v] : entries) {
    s.row_ptr[static_cast<std::size_t>(r) + 1]++;
    s.col_idx.push_back(c);
    s.vals.push_back(v);
  }
  for (int r = 0; r < rows; ++r) {
    s.row_ptr[static_cast<std::size_t>(r) + 1] += s.row_ptr[static_cast<std::size_t>(r)];
  }
  return s;
}

std::vector<float> SparseMatrix::densify() const {
  std::vector<float> d(static_cast<std::size_t>(rows) * cols, 0.0f);
  for (int r = 0; r < rows; ++r) {
    for (int k = row_ptr[static_cast<std::size_t>(r)]; k < row_ptr[static_cast<std::size_t>(r) + 1]; ++k) {
      d[static_cast<std::size_t>(r) * cols + col_idx[static_cast<std::size_t>(k)]] =
          vals[static_cast<std::size_t>(k)];
    }
  }
  return d;
}

bool SparseMatrix::is_symmetric(float tol) const {
  if (rows != cols) return false;
  const auto dense = densify();
  for (int r = 0; r < rows; ++r) {
    for (int c = r + 1; c < cols; ++c) {
      const float a = dense[static_cast<std::size_t>(r) * cols + c];
      const float b = dense[static_cast<std::size_t>(c) * cols + r];
      if (std::fabs(a - b) > tol) return false;
    }
  }
  return true;
}

Tensor spmm(Tape* tape, const SparseMatrix& adj, const Tensor& x) {
  if (x.rank() != 2 || adj.cols != x.shape()[0]) {
    throw DimensionError("spmm: adjacency " + std::to_string(adj.rows) + "x" +
                         std::to_string(adj.cols) + " incompatible with " + x.shape_str());
  }
  detail::bump_spmm_counter();
  const int n = x.shape()[1];
  Tensor y({adj.rows, n});
  const auto& xv = x.vals();
  auto& yv = y.vals();
  for (int r = 0; r < adj.rows; ++r) {
    const std::size_t out = static_cast<std::size_t>(r) * n;
    for (int k = adj.row_ptr[static_cast<std::size_t>(r)];
         k < adj.row_ptr[static_cast<std::size_t>(r) + 1]; ++k) {
      const float v = adj.vals[static_cast<std::size_t>(k)];
      const std::size_t in = static_cast<std::size_t>(adj.col_idx[static_cast<std::size_t>(k)]) * n;
      for (int j = 0; j < n; ++j) yv[out + j] += v * xv[in + j];
    }
  }
  if (tape && x.node >= 0) {
    // adjoint multiplies by the transpose: walk entries, swap roles
    y.node = tape->push(y.numel(), [&adj, x, y, n](Tape& t, int self) {
      const auto& gy = t.grad_buf(self);
      auto& gx = t.grad_buf(x.node);
      for (int r = 0; r < adj.rows; ++r) {
        const std::size_t out = static_cast<std::size_t>(r) * n;
        for (int k = adj.row_ptr[static_cast<std::size_t>(r)];
             k < adj.row_ptr[static_cast<std::size_t>(r) + 1]; ++k) {
          const float v = adj.vals[static_cast<std::size_t>(k)];
          const std::size_t in =
              static_cast<std::size_t>(adj.col_idx[static_cast<std::size_t>(k)]) * n;
          for (int j = 0; j < n; ++j) gx[in + j] += v * gy[out + j];
        }
      }
    });
  }
  return y;
}

}  // namespace mgbr::nc
