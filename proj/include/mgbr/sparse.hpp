#pragma once

#include <tuple>
#include <vector>

#include "mgbr/tensor.hpp"

namespace mgbr::nc {

/// CSR sparse matrix. Only used for the normalized view adjacencies, which
/// are symmetric with self-loops, but the kernels do not assume symmetry.
struct SparseMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<int> row_ptr;  // rows + 1
  std::vector<int> col_idx;
  std::vector<float> vals;

  static SparseMatrix identity(int n);

  /// Build from (row, col, value) triples. Rejects out-of-range indices and
  /// duplicate coordinates.
  static SparseMatrix from_coo(int rows, int cols,
                               std::vector<std::tuple<int, int, float>> entries);

  std::size_t nnz() const { return vals.size(); }

  /// Dense row-major copy (test/debug use).
  std::vector<float> densify() const;

  bool is_symmetric(float tol = 0.0f) const;
};

/// adj * x with gradient support; adj is held constant and must outlive the
/// tape (the backward closure refers back to it).
Tensor spmm(Tape* tape, const SparseMatrix& adj, const Tensor& x);

}  // namespace mgbr::nc
