#include "gunl/numerics/sparse.hpp"

#include <algorithm>
#include <string>

#include "gunl/errors.hpp"

namespace gunl {

Sparse::Sparse(std::size_t rows, std::size_t cols, std::vector<Triplet> entries)
    : rows_(rows), cols_(cols), row_ptr_(rows + 1, 0) {
  std::sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  col_idx_.reserve(entries.size());
  values_.reserve(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    if (e.row >= rows || e.col >= cols) {
      throw ShapeError("Sparse: entry (" + std::to_string(e.row) + "," + std::to_string(e.col) +
                       ") outside " + std::to_string(rows) + "x" + std::to_string(cols));
    }
    if (i > 0 && entries[i - 1].row == e.row && entries[i - 1].col == e.col) {
      throw ContractError("Sparse: duplicate entry (" + std::to_string(e.row) + "," +
                          std::to_string(e.col) + ")");
    }
    ++row_ptr_[e.row + 1];
    col_idx_.push_back(e.col);
    values_.push_back(e.value);
  }
  for (std::size_t r = 0; r < rows; ++r) row_ptr_[r + 1] += row_ptr_[r];
}

Sparse Sparse::identity(std::size_t n) {
  std::vector<Triplet> t;
  t.reserve(n);
  for (std::size_t i = 0; i < n; ++i) t.push_back({i, i, 1.0});
  return Sparse(n, n, std::move(t));
}

double Sparse::at(std::size_t r, std::size_t c) const {
  auto cols = row_cols(r);
  auto it = std::lower_bound(cols.begin(), cols.end(), c);
  if (it == cols.end() || *it != c) return 0.0;
  return values_[row_ptr_[r] + static_cast<std::size_t>(it - cols.begin())];
}

bool Sparse::contains(std::size_t r, std::size_t c) const {
  auto cols = row_cols(r);
  return std::binary_search(cols.begin(), cols.end(), c);
}

std::vector<Triplet> Sparse::entries() const {
  std::vector<Triplet> out;
  out.reserve(nnz());
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k)
      out.push_back({r, col_idx_[k], values_[k]});
  return out;
}

std::vector<double> Sparse::row_sums() const {
  std::vector<double> out(rows_, 0.0);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) out[r] += values_[k];
  return out;
}

Dense Sparse::to_dense() const {
  Dense out(rows_, cols_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) out(r, col_idx_[k]) = values_[k];
  return out;
}

bool Sparse::is_symmetric() const {
  if (rows_ != cols_) return false;
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k)
      if (at(col_idx_[k], r) != values_[k] || !contains(col_idx_[k], r)) return false;
  return true;
}

bool Sparse::has_zero_diagonal() const {
  for (std::size_t r = 0; r < std::min(rows_, cols_); ++r)
    if (at(r, r) != 0.0) return false;
  return true;
}

Dense Sparse::multiply(const Dense& x) const {
  if (cols_ != x.rows()) {
    throw ShapeError("spmm: sparse " + std::to_string(rows_) + "x" + std::to_string(cols_) +
                     " times dense " + std::to_string(x.rows()) + "x" + std::to_string(x.cols()));
  }
  const std::size_t d = x.cols();
  Dense out(rows_, d);
  for (std::size_t r = 0; r < rows_; ++r) {
    double* orow = out.data() + r * d;
    for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
      const double v = values_[k];
      const double* xrow = x.data() + col_idx_[k] * d;
      for (std::size_t j = 0; j < d; ++j) orow[j] += v * xrow[j];
    }
  }
  return out;
}

void Sparse::multiply_transpose_accumulate(const Dense& x, Dense& out) const {
  if (rows_ != x.rows() || out.rows() != cols_ || out.cols() != x.cols()) {
    throw ShapeError("spmm^T: shape mismatch");
  }
  const std::size_t d = x.cols();
  for (std::size_t r = 0; r < rows_; ++r) {
    const double* xrow = x.data() + r * d;
    for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
      const double v = values_[k];
      double* orow = out.data() + col_idx_[k] * d;
      for (std::size_t j = 0; j < d; ++j) orow[j] += v * xrow[j];
    }
  }
}

}  // namespace gunl
