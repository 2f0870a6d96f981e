#include "mmpar/kernels.hpp"

#include <algorithm>
#include <bit>

namespace mmpar {

namespace detail {
void throw_shape_mismatch(const char* what, const DenseMatrix& a, const DenseMatrix& b) {
  throw InputError(std::string(what) + ": shape mismatch " + shape_string(a) + " vs " +
                   shape_string(b));
}
}  // namespace detail

namespace {

constexpr std::size_t kColumnTile = 256;

// Row-vector variant of PairwiseSum: each leaf is scale * row[0, width) and
// every output column follows exactly the scalar tree.
class PairwiseRowSum {
 public:
  explicit PairwiseRowSum(std::size_t width) : width_(width), carry_(width) {}

  void add_scaled(double scale, const double* row) {
    for (std::size_t j = 0; j < width_; ++j) carry_[j] = scale * row[j];
    unsigned lvl = 0;
    while ((count_ >> lvl) & 1u) {
      const std::vector<double>& left = partial_[lvl];
      for (std::size_t j = 0; j < width_; ++j) carry_[j] = left[j] + carry_[j];
      ++lvl;
    }
    if (partial_.size() <= lvl) partial_.resize(lvl + 1);
    std::swap(partial_[lvl], carry_);
    carry_.resize(width_);
    ++count_;
  }

  void result(double* out) const {
    bool first = true;
    for (unsigned lvl = 0; lvl < 64; ++lvl) {
      if (!((count_ >> lvl) & 1u)) continue;
      const std::vector<double>& p = partial_[lvl];
      if (first) {
        std::copy(p.begin(), p.end(), out);
        first = false;
      } else {
        for (std::size_t j = 0; j < width_; ++j) out[j] = p[j] + out[j];
      }
    }
    if (first) std::fill(out, out + width_, 0.0);
  }

 private:
  std::size_t width_;
  std::uint64_t count_ = 0;
  std::vector<double> carry_;
  std::vector<std::vector<double>> partial_;
};

}  // namespace

double pairwise_dot(const double* a, std::size_t stride_a, const double* b,
                    std::size_t stride_b, std::size_t n) {
  PairwiseSum acc;
  std::size_t k = 0;
  for (; k + 8 <= n; k += 8) {
    const double* pa = a + k * stride_a;
    const double* pb = b + k * stride_b;
    const double l0 = pa[0] * pb[0];
    const double l1 = pa[stride_a] * pb[stride_b];
    const double l2 = pa[2 * stride_a] * pb[2 * stride_b];
    const double l3 = pa[3 * stride_a] * pb[3 * stride_b];
    const double l4 = pa[4 * stride_a] * pb[4 * stride_b];
    const double l5 = pa[5 * stride_a] * pb[5 * stride_b];
    const double l6 = pa[6 * stride_a] * pb[6 * stride_b];
    const double l7 = pa[7 * stride_a] * pb[7 * stride_b];
    acc.add_block(((l0 + l1) + (l2 + l3)) + ((l4 + l5) + (l6 + l7)), 3);
  }
  for (; k < n; ++k) acc.add(a[k * stride_a] * b[k * stride_b]);
  return acc.result();
}

double pairwise_sum(std::span<const double> v) {
  PairwiseSum acc;
  const std::size_t n = v.size();
  std::size_t k = 0;
  for (; k + 8 <= n; k += 8) {
    const double* p = v.data() + k;
    acc.add_block(((p[0] + p[1]) + (p[2] + p[3])) + ((p[4] + p[5]) + (p[6] + p[7])), 3);
  }
  for (; k < n; ++k) acc.add(v[k]);
  return acc.result();
}

double tree_reduce_sum(std::span<const double> v, const Backend& backend) {
  const std::size_t n = v.size();
  if (!backend.is_parallel() || n < 8192) return pairwise_sum(v);

  // Aligned power-of-two chunks: each chunk is one complete subtree.
  const std::size_t target = (n + backend.threads() - 1) / backend.threads();
  const std::size_t chunk = std::max<std::size_t>(std::bit_ceil(target), 4096);
  const unsigned level = static_cast<unsigned>(std::countr_zero(chunk));
  const std::size_t chunks = (n + chunk - 1) / chunk;
  std::vector<double> partial(chunks);
  backend.parallel_for(chunks, [&](std::size_t begin, std::size_t end) {
    for (std::size_t c = begin; c < end; ++c) {
      const std::size_t lo = c * chunk;
      partial[c] = pairwise_sum(v.subspan(lo, std::min(chunk, n - lo)));
    }
  });
  PairwiseSum acc;
  for (double p : partial) acc.add_block(p, level);
  return acc.result();
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b, bool transpose_a,
                   bool transpose_b, const Backend& backend) {
  const std::size_t m = transpose_a ? a.cols() : a.rows();
  const std::size_t inner = transpose_a ? a.rows() : a.cols();
  const std::size_t inner_b = transpose_b ? b.cols() : b.rows();
  const std::size_t n = transpose_b ? b.rows() : b.cols();
  if (inner != inner_b) {
    throw InputError("matmul: inner dimensions disagree, op(A) is " + std::to_string(m) + "x" +
                     std::to_string(inner) + " (A " + shape_string(a) + "), op(B) is " +
                     std::to_string(inner_b) + "x" + std::to_string(n) + " (B " +
                     shape_string(b) + ")");
  }
  DenseMatrix c(m, n);
  if (m == 0 || n == 0) return c;

  const double* pa = a.values().data();
  const double* pb = b.values().data();
  const std::size_t lda = a.cols();
  const std::size_t ldb = b.cols();
  double* pc = c.values().data();

  if (!transpose_b && n >= 8) {
    // Row-vector accumulation: leaf k contributes op(A)(i,k) * B(k, tile).
    const std::size_t tiles = (n + kColumnTile - 1) / kColumnTile;
    backend.parallel_for(m * tiles, [&](std::size_t begin, std::size_t end) {
      for (std::size_t t = begin; t < end; ++t) {
        const std::size_t i = t / tiles;
        const std::size_t j0 = (t % tiles) * kColumnTile;
        const std::size_t width = std::min(kColumnTile, n - j0);
        PairwiseRowSum acc(width);
        for (std::size_t k = 0; k < inner; ++k) {
          const double aik = transpose_a ? pa[k * lda + i] : pa[i * lda + k];
          acc.add_scaled(aik, pb + k * ldb + j0);
        }
        acc.result(pc + i * n + j0);
      }
    });
    return c;
  }

  const std::size_t stride_a = transpose_a ? lda : 1;
  const std::size_t stride_b = transpose_b ? 1 : ldb;
  backend.parallel_for(
      m * n,
      [&](std::size_t begin, std::size_t end) {
        for (std::size_t e = begin; e < end; ++e) {
          const std::size_t i = e / n;
          const std::size_t j = e % n;
          const double* row_a = transpose_a ? pa + i : pa + i * lda;
          const double* col_b = transpose_b ? pb + j * ldb : pb + j;
          pc[e] = pairwise_dot(row_a, stride_a, col_b, stride_b, inner);
        }
      },
      16);
  return c;
}

std::vector<double> matvec(const DenseMatrix& a, std::span<const double> x, bool transpose_a,
                           const Backend& backend) {
  if (transpose_a) {
    // x^t A as a 1 x rows product keeps the row-vector path and contiguous reads.
    DenseMatrix xt(1, x.size(), std::vector<double>(x.begin(), x.end()));
    return std::move(matmul(xt, a, false, false, backend)).release();
  }
  return std::move(matmul(a, DenseMatrix::column(x), false, false, backend)).release();
}

std::vector<double> row_sums(const DenseMatrix& a, const Backend& backend) {
  std::vector<double> out(a.rows());
  backend.parallel_for(
      a.rows(),
      [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) out[i] = pairwise_sum(a.row(i));
      },
      8);
  return out;
}

}  // namespace mmpar
