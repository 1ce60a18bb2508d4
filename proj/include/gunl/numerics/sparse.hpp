#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "gunl/numerics/dense.hpp"

namespace gunl {

struct Triplet {
  std::size_t row;
  std::size_t col;
  double value;
};

/// Compressed sparse row matrix. Entries are kept in canonical (row, col)
/// order without duplicates; construction rejects anything else.
class Sparse {
 public:
  Sparse() = default;
  /// Entries may arrive in any order; duplicates throw.
  Sparse(std::size_t rows, std::size_t cols, std::vector<Triplet> entries);

  static Sparse identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t nnz() const { return col_idx_.size(); }

  std::span<const std::size_t> row_cols(std::size_t r) const {
    return {col_idx_.data() + row_ptr_[r], row_ptr_[r + 1] - row_ptr_[r]};
  }
  std::span<const double> row_values(std::size_t r) const {
    return {values_.data() + row_ptr_[r], row_ptr_[r + 1] - row_ptr_[r]};
  }

  const std::vector<std::size_t>& row_ptr() const { return row_ptr_; }
  const std::vector<std::size_t>& col_idx() const { return col_idx_; }
  const std::vector<double>& values() const { return values_; }

  /// Entry lookup by binary search in the row; 0 when absent.
  double at(std::size_t r, std::size_t c) const;
  bool contains(std::size_t r, std::size_t c) const;

  std::vector<Triplet> entries() const;
  std::vector<double> row_sums() const;
  Dense to_dense() const;

  bool is_symmetric() const;
  bool has_zero_diagonal() const;

  /// out = A * x
  Dense multiply(const Dense& x) const;
  /// out += A^T * x
  void multiply_transpose_accumulate(const Dense& x, Dense& out) const;

  friend bool operator==(const Sparse&, const Sparse&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<std::size_t> col_idx_;
  std::vector<double> values_;
};

}  // namespace gunl
