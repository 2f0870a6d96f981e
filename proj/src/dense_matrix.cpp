#include "mmpar/dense_matrix.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "mmpar/errors.hpp"

namespace mmpar {

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw InputError("matrix data has " + std::to_string(data_.size()) + " entries, expected " +
                     std::to_string(rows) + "x" + std::to_string(cols));
  }
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

DenseMatrix DenseMatrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw InputError("ragged initializer for DenseMatrix");
    data.insert(data.end(), row.begin(), row.end());
  }
  return DenseMatrix(r, c, std::move(data));
}

DenseMatrix DenseMatrix::column(std::span<const double> values) {
  return DenseMatrix(values.size(), 1, std::vector<double>(values.begin(), values.end()));
}

DenseMatrix DenseMatrix::transposed() const {
  DenseMatrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

bool DenseMatrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

bool DenseMatrix::all_nonnegative() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return v >= 0.0; });
}

std::string shape_string(const DenseMatrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

bool bitwise_equal(std::span<const double> a, std::span<const double> b) {
  return a.size() == b.size() &&
         (a.empty() || std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
}

bool bitwise_equal(const DenseMatrix& a, const DenseMatrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && bitwise_equal(a.values(), b.values());
}

double max_abs_difference(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw InputError("shape mismatch: " + shape_string(a) + " vs " + shape_string(b));
  }
  double worst = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k)
    worst = std::max(worst, std::abs(a.values()[k] - b.values()[k]));
  return worst;
}

double frobenius_norm(const DenseMatrix& m) {
  double s = 0.0;
  for (double v : m.values()) s += v * v;
  return std::sqrt(s);
}

}  // namespace mmpar
