#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mmpar/backend.hpp"
#include "mmpar/dense_matrix.hpp"
#include "mmpar/errors.hpp"

namespace mmpar {

// Streaming pairwise summation over a fixed, thread-count-independent tree.
//
// Leaf k sits at position k. At level L the node m holds the sum of leaves
// [m 2^L, (m+1) 2^L) and is formed as (left child) + (right child); a node
// with no right child is carried up unchanged. So [1,2,3,4] sums as
// ((1+2)+(3+4)) and [a,b,c] as ((a+b)+c). Any partitioning that hands out
// aligned power-of-two blocks reproduces this tree exactly.
class PairwiseSum {
 public:
  void add(double value) { add_block(value, 0); }

  // `value` must be the complete tree sum of an aligned block of 2^level
  // leaves; the number of leaves added so far must be a multiple of 2^level.
  void add_block(double value, unsigned level) {
    double carry = value;
    unsigned lvl = level;
    while ((count_ >> lvl) & 1u) {
      carry = partial_[lvl] + carry;
      ++lvl;
    }
    partial_[lvl] = carry;
    count_ += std::uint64_t{1} << level;
  }

  double result() const {
    double acc = 0.0;
    bool first = true;
    for (unsigned lvl = 0; lvl < 64; ++lvl) {
      if ((count_ >> lvl) & 1u) {
        acc = first ? partial_[lvl] : partial_[lvl] + acc;
        first = false;
      }
    }
    return acc;
  }

  std::uint64_t count() const { return count_; }

 private:
  std::array<double, 65> partial_{};
  std::uint64_t count_ = 0;
};

// Pairwise sum of a[k*stride_a] * b[k*stride_b], k < n, on the tree above.
double pairwise_dot(const double* a, std::size_t stride_a, const double* b,
                    std::size_t stride_b, std::size_t n);

// Serial pairwise sum of a contiguous range.
double pairwise_sum(std::span<const double> v);

// Sum with the PairwiseSum tree. Parallel backends reduce aligned chunks
// concurrently and combine them on the same tree, so the result is
// bitwise identical for every thread count.
double tree_reduce_sum(std::span<const double> v, const Backend& backend);

// C = op(A) op(B), op = transpose when the flag is set. Each entry of C is a
// pairwise_dot over the inner index; work is split over rows and column
// tiles of C. Transposition is handled by indexing, never by copying.
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b, bool transpose_a,
                   bool transpose_b, const Backend& backend);

inline DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b, const Backend& backend) {
  return matmul(a, b, false, false, backend);
}

// y = op(A) x with the same summation tree as matmul.
std::vector<double> matvec(const DenseMatrix& a, std::span<const double> x, bool transpose_a,
                           const Backend& backend);

// Pairwise sum of each row.
std::vector<double> row_sums(const DenseMatrix& a, const Backend& backend);

namespace detail {
[[noreturn]] void throw_shape_mismatch(const char* what, const DenseMatrix& a, const DenseMatrix& b);
}

// out(i,j) = f(first(i,j), rest(i,j)...), index-partitioned across workers.
template <class F, class... Rest>
DenseMatrix elementwise(const Backend& backend, F&& f, const DenseMatrix& first,
                        const Rest&... rest) {
  (
      [&] {
        if (rest.rows() != first.rows() || rest.cols() != first.cols())
          detail::throw_shape_mismatch("elementwise", first, rest);
      }(),
      ...);
  DenseMatrix out(first.rows(), first.cols());
  const double* src0 = first.values().data();
  double* dst = out.values().data();
  backend.parallel_for(
      first.size(),
      [&](std::size_t begin, std::size_t end) {
        for (std::size_t k = begin; k < end; ++k) dst[k] = f(src0[k], rest.values()[k]...);
      },
      4096);
  return out;
}

// Same as elementwise, over equally sized vectors.
template <class F, class... Rest>
std::vector<double> elementwise(const Backend& backend, F&& f, std::span<const double> first,
                                Rest... rest) {
  static_assert((std::is_convertible_v<Rest, std::span<const double>> && ...));
  (
      [&] {
        if (std::span<const double>(rest).size() != first.size())
          throw InputError("elementwise: vector length mismatch " +
                           std::to_string(first.size()) + " vs " +
                           std::to_string(std::span<const double>(rest).size()));
      }(),
      ...);
  std::vector<double> out(first.size());
  backend.parallel_for(
      first.size(),
      [&](std::size_t begin, std::size_t end) {
        for (std::size_t k = begin; k < end; ++k)
          out[k] = f(first[k], std::span<const double>(rest)[k]...);
      },
      4096);
  return out;
}

}  // namespace mmpar
