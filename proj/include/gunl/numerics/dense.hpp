#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace gunl {

/// Row-major matrix of doubles. A column or row vector is a Dense with one
/// column or one row; scalars are 1x1.
class Dense {
 public:
  Dense() = default;
  Dense(std::size_t rows, std::size_t cols, double fill = 0.0);
  Dense(std::size_t rows, std::size_t cols, std::vector<double> values);

  static Dense from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static Dense scalar(double v) { return Dense(1, 1, v); }
  static Dense identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }
  bool same_shape(const Dense& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {values_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {values_.data() + r * cols_, cols_}; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }

  /// Value of a 1x1 matrix.
  double item() const;

  bool all_finite() const;
  void fill(double v);

  friend bool operator==(const Dense&, const Dense&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

/// Plain (untaped) kernels shared by inference paths and the tape.
namespace dense {

/// out = a * b. Zero entries of `a` are skipped, which makes bag-of-words
/// feature matrices cheap.
Dense matmul(const Dense& a, const Dense& b);
/// out += a^T * b
void matmul_tn_accumulate(const Dense& a, const Dense& b, Dense& out);
/// out += a * b^T
void matmul_nt_accumulate(const Dense& a, const Dense& b, Dense& out);
Dense transpose(const Dense& a);
void add_inplace(Dense& dst, const Dense& src, double scale = 1.0);
double max_abs_diff(const Dense& a, const Dense& b);
double sum_squares(const Dense& a);

}  // namespace dense
}  // namespace gunl
