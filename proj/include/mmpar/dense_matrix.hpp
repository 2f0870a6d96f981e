#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace mmpar {

// Row-major dense matrix of doubles.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static DenseMatrix identity(std::size_t n);
  static DenseMatrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static DenseMatrix column(std::span<const double> values);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

  const std::vector<double>& storage() const { return data_; }
  std::vector<double> release() && { return std::move(data_); }

  DenseMatrix transposed() const;
  bool all_finite() const;
  bool all_nonnegative() const;

  // Element-wise ==, so -0.0 == 0.0 and NaN != NaN.
  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

std::string shape_string(const DenseMatrix& m);

// True when both matrices have the same shape and identical bit patterns.
bool bitwise_equal(const DenseMatrix& a, const DenseMatrix& b);
bool bitwise_equal(std::span<const double> a, std::span<const double> b);

double max_abs_difference(const DenseMatrix& a, const DenseMatrix& b);
double frobenius_norm(const DenseMatrix& m);

}  // namespace mmpar
