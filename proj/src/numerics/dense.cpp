#include "gunl/numerics/dense.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gunl/errors.hpp"

namespace gunl {

namespace {

std::string shape_str(const Dense& d) {
  return std::to_string(d.rows()) + "x" + std::to_string(d.cols());
}

}  // namespace

Dense::Dense(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

Dense::Dense(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows * cols) {
    throw ShapeError("Dense: " + std::to_string(values_.size()) + " values for a " +
                     std::to_string(rows) + "x" + std::to_string(cols) + " matrix");
  }
}

Dense Dense::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r ? rows.begin()->size() : 0;
  std::vector<double> values;
  values.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw ShapeError("Dense::from_rows: ragged rows");
    values.insert(values.end(), row.begin(), row.end());
  }
  return Dense(r, c, std::move(values));
}

Dense Dense::identity(std::size_t n) {
  Dense out(n, n);
  for (std::size_t i = 0; i < n; ++i) out(i, i) = 1.0;
  return out;
}

double Dense::item() const {
  if (rows_ != 1 || cols_ != 1) throw ShapeError("Dense::item on " + shape_str(*this));
  return values_[0];
}

bool Dense::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

void Dense::fill(double v) { std::fill(values_.begin(), values_.end(), v); }

namespace dense {

Dense matmul(const Dense& a, const Dense& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: " + shape_str(a) + " * " + shape_str(b));
  }
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  Dense out(n, m);
  for (std::size_t i = 0; i < n; ++i) {
    double* orow = out.data() + i * m;
    const double* arow = a.data() + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      if (av == 0.0) continue;
      const double* brow = b.data() + p * m;
      for (std::size_t j = 0; j < m; ++j) orow[j] += av * brow[j];
    }
  }
  return out;
}

void matmul_tn_accumulate(const Dense& a, const Dense& b, Dense& out) {
  if (a.rows() != b.rows() || out.rows() != a.cols() || out.cols() != b.cols()) {
    throw ShapeError("matmul_tn: " + shape_str(a) + "^T * " + shape_str(b));
  }
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  for (std::size_t i = 0; i < n; ++i) {
    const double* arow = a.data() + i * k;
    const double* brow = b.data() + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      if (av == 0.0) continue;
      double* orow = out.data() + p * m;
      for (std::size_t j = 0; j < m; ++j) orow[j] += av * brow[j];
    }
  }
}

void matmul_nt_accumulate(const Dense& a, const Dense& b, Dense& out) {
  if (a.cols() != b.cols() || out.rows() != a.rows() || out.cols() != b.rows()) {
    throw ShapeError("matmul_nt: " + shape_str(a) + " * " + shape_str(b) + "^T");
  }
  const std::size_t n = a.rows(), k = a.cols(), m = b.rows();
  for (std::size_t i = 0; i < n; ++i) {
    const double* arow = a.data() + i * k;
    double* orow = out.data() + i * m;
    for (std::size_t j = 0; j < m; ++j) {
      const double* brow = b.data() + j * k;
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
      orow[j] += acc;
    }
  }
}

Dense transpose(const Dense& a) {
  Dense out(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  return out;
}

void add_inplace(Dense& dst, const Dense& src, double scale) {
  if (!dst.same_shape(src)) {
    throw ShapeError("add_inplace: " + shape_str(dst) + " += " + shape_str(src));
  }
  auto d = dst.values();
  auto s = src.values();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += scale * s[i];
}

double max_abs_diff(const Dense& a, const Dense& b) {
  if (!a.same_shape(b)) throw ShapeError("max_abs_diff: shape mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

double sum_squares(const Dense& a) {
  double s = 0.0;
  for (double v : a.values()) s += v * v;
  return s;
}

}  // namespace dense
}  // namespace gunl
