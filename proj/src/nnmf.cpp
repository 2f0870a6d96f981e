#include "mmpar/nnmf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "mmpar/errors.hpp"
#include "mmpar/kernels.hpp"

namespace mmpar::nnmf {

namespace {

constexpr double kTiny = 1e-300;

void require_nonnegative(const DenseMatrix& m, const char* name) {
  if (!m.all_nonnegative()) throw InputError(std::string(name) + " has negative entries");
}

void require_shapes(const DenseMatrix& x, const DenseMatrix& v, const DenseMatrix& w) {
  if (v.rows() != x.rows() || w.cols() != x.cols() || v.cols() != w.rows()) {
    throw InputError("nnmf: shapes do not conform, X " + shape_string(x) + ", V " +
                     shape_string(v) + ", W " + shape_string(w));
  }
}

DenseMatrix uniform_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(std::nextafter(0.0, 1.0), 1.0);
  DenseMatrix m(rows, cols);
  for (double& e : m.values()) e = u(rng);
  return m;
}

// factor * numerator / (denominator + tiny), entry by entry.
DenseMatrix multiplicative(const DenseMatrix& factor, const DenseMatrix& numerator,
                           const DenseMatrix& denominator, const Backend& backend) {
  return elementwise(
      backend, [](double f, double n, double d) { return f * (n / (d + kTiny)); }, factor,
      numerator, denominator);
}

// x / b with 0/0 = 0; a positive count over a zero mean is an error.
DenseMatrix poisson_ratio(const DenseMatrix& x, const DenseMatrix& b, const Backend& backend) {
  return elementwise(
      backend,
      [](double xv, double bv) {
        if (xv == 0.0) return 0.0;
        if (bv == 0.0) throw InputError("poisson nnmf: positive entry with zero fitted mean");
        return xv / bv;
      },
      x, b);
}

}  // namespace

bool Problem::validate() const {
  require_nonnegative(x, "X");
  if (rank == 0) throw InputError("nnmf: rank must be at least 1");
  if (x.empty()) throw InputError("nnmf: empty data matrix");
  return rank <= std::min(x.rows(), x.cols());
}

FactorPair random_factors(std::size_t p, std::size_t q, std::size_t rank, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  FactorPair f;
  f.v = uniform_matrix(p, rank, rng);
  f.w = uniform_matrix(rank, q, rng);
  return f;
}

double objective(const DenseMatrix& x, const DenseMatrix& v, const DenseMatrix& w,
                 const Backend& backend) {
  require_shapes(x, v, w);
  const DenseMatrix fit = matmul(v, w, backend);
  const DenseMatrix sq = elementwise(
      backend,
      [](double a, double b) {
        const double r = a - b;
        return r * r;
      },
      x, fit);
  return tree_reduce_sum(sq.values(), backend);
}

DenseMatrix update_v(const DenseMatrix& x, const DenseMatrix& v, const DenseMatrix& w,
                     const Backend& backend) {
  require_shapes(x, v, w);
  require_nonnegative(v, "V");
  require_nonnegative(w, "W");
  const DenseMatrix numerator = matmul(x, w, false, true, backend);
  // (V W) W^t: the same kernel call as the numerator, so X = VW gives a
  // ratio of exactly one.
  const DenseMatrix denominator = matmul(matmul(v, w, backend), w, false, true, backend);
  return multiplicative(v, numerator, denominator, backend);
}

DenseMatrix update_w(const DenseMatrix& x, const DenseMatrix& v_next, const DenseMatrix& w,
                     const Backend& backend) {
  require_shapes(x, v_next, w);
  require_nonnegative(v_next, "V");
  require_nonnegative(w, "W");
  const DenseMatrix numerator = matmul(v_next, x, true, false, backend);
  const DenseMatrix denominator = matmul(v_next, matmul(v_next, w, backend), true, false, backend);
  return multiplicative(w, numerator, denominator, backend);
}

FactorPair step(const DenseMatrix& x, const FactorPair& current, const Backend& backend) {
  FactorPair next;
  next.v = update_v(x, current.v, current.w, backend);
  next.w = update_w(x, next.v, current.w, backend);
  return next;
}

double surrogate(const DenseMatrix& x, const FactorPair& at, const FactorPair& anchor) {
  require_shapes(x, at.v, at.w);
  require_shapes(x, anchor.v, anchor.w);
  const std::size_t r = at.v.cols();
  double total = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < x.cols(); ++j) {
      double b = 0.0;
      for (std::size_t k = 0; k < r; ++k) b += anchor.v(i, k) * anchor.w(k, j);
      for (std::size_t k = 0; k < r; ++k) {
        const double a = anchor.v(i, k) * anchor.w(k, j);
        const double vw = at.v(i, k) * at.w(k, j);
        if (a == 0.0) {
          if (vw != 0.0) return std::numeric_limits<double>::infinity();
          continue;
        }
        const double dev = x(i, j) - (b / a) * vw;
        total += (a / b) * dev * dev;
      }
    }
  }
  return total;
}

FactorPair gradient(const DenseMatrix& x, const FactorPair& at, const Backend& backend) {
  require_shapes(x, at.v, at.w);
  const DenseMatrix residual = elementwise(
      backend, [](double fit, double data) { return fit - data; }, matmul(at.v, at.w, backend),
      x);
  FactorPair g;
  g.v = matmul(residual, at.w, false, true, backend);
  g.w = matmul(at.v, residual, true, false, backend);
  for (double& e : g.v.values()) e *= 2.0;
  for (double& e : g.w.values()) e *= 2.0;
  return g;
}

MmProblem<FactorPair> frobenius_problem(const DenseMatrix& x, const Backend& backend) {
  MmProblem<FactorPair> p;
  p.direction = Direction::kMinimize;
  p.objective = [&x, backend](const FactorPair& f) { return objective(x, f.v, f.w, backend); };
  p.step = [&x, backend](const FactorPair& f) { return step(x, f, backend); };
  p.surrogate = [&x](const FactorPair& at, const FactorPair& anchor) {
    return surrogate(x, at, anchor);
  };
  return p;
}

MmResult<FactorPair> run(const Problem& problem, const MmConfig& config,
                         const Backend& backend) {
  problem.validate();
  return run_from(problem,
                  random_factors(problem.x.rows(), problem.x.cols(), problem.rank, config.seed),
                  config, backend);
}

MmResult<FactorPair> run_from(const Problem& problem, FactorPair start, const MmConfig& config,
                              const Backend& backend) {
  problem.validate();
  return run_mm(frobenius_problem(problem.x, backend), std::move(start), config);
}

double poisson_objective(const DenseMatrix& x, const DenseMatrix& v, const DenseMatrix& w,
                         const Backend& backend) {
  require_shapes(x, v, w);
  const DenseMatrix mean = matmul(v, w, backend);
  const DenseMatrix terms = elementwise(
      backend,
      [](double xv, double b) {
        if (xv == 0.0) return -b;
        if (b <= 0.0) throw InputError("poisson nnmf: positive entry with zero fitted mean");
        return xv * std::log(b) - b;
      },
      x, mean);
  return tree_reduce_sum(terms.values(), backend);
}

FactorPair poisson_update(const DenseMatrix& x, const FactorPair& current,
                          const Backend& backend) {
  require_shapes(x, current.v, current.w);
  require_nonnegative(x, "X");
  require_nonnegative(current.v, "V");
  require_nonnegative(current.w, "W");
  const std::size_t p = x.rows();
  const std::size_t r = current.v.cols();
  const std::size_t q = x.cols();

  FactorPair next;
  {
    const DenseMatrix ratio = poisson_ratio(x, matmul(current.v, current.w, backend), backend);
    const DenseMatrix numerator = matmul(ratio, current.w, false, true, backend);  // p x r
    const std::vector<double> w_sums = row_sums(current.w, backend);               // r
    next.v = DenseMatrix(p, r);
    backend.parallel_for(p, [&](std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i)
        for (std::size_t k = 0; k < r; ++k)
          next.v(i, k) =
              current.v(i, k) * std::sqrt(numerator(i, k) / (w_sums[k] + kTiny));
    });
  }
  {
    const DenseMatrix ratio = poisson_ratio(x, matmul(next.v, current.w, backend), backend);
    const DenseMatrix numerator = matmul(next.v, ratio, true, false, backend);  // r x q
    const std::vector<double> v_sums = matvec(next.v, std::vector<double>(p, 1.0), true, backend);
    next.w = DenseMatrix(r, q);
    backend.parallel_for(r, [&](std::size_t begin, std::size_t end) {
      for (std::size_t k = begin; k < end; ++k)
        for (std::size_t j = 0; j < q; ++j)
          next.w(k, j) =
              current.w(k, j) * std::sqrt(numerator(k, j) / (v_sums[k] + kTiny));
    });
  }
  return next;
}

MmProblem<FactorPair> poisson_problem(const DenseMatrix& x, const Backend& backend) {
  MmProblem<FactorPair> p;
  p.direction = Direction::kMaximize;
  p.objective = [&x, backend](const FactorPair& f) {
    return poisson_objective(x, f.v, f.w, backend);
  };
  p.step = [&x, backend](const FactorPair& f) { return poisson_update(x, f, backend); };
  return p;
}

MmResult<FactorPair> run_poisson(const Problem& problem, const MmConfig& config,
                                 const Backend& backend) {
  problem.validate();
  return run_poisson_from(
      problem, random_factors(problem.x.rows(), problem.x.cols(), problem.rank, config.seed),
      config, backend);
}

MmResult<FactorPair> run_poisson_from(const Problem& problem, FactorPair start,
                                      const MmConfig& config, const Backend& backend) {
  problem.validate();
  return run_mm(poisson_problem(problem.x, backend), std::move(start), config);
}

ScaledImages cbcl_preprocess(const DenseMatrix& raw) {
  ScaledImages out{DenseMatrix(raw.rows(), raw.cols()), 0.0};
  const std::size_t n = raw.cols();
  if (n == 0) return out;
  std::size_t clamped = 0;
  for (std::size_t i = 0; i < raw.rows(); ++i) {
    const auto row = raw.row(i);
    const double mean = pairwise_sum(row) / static_cast<double>(n);
    double ss = 0.0;
    for (double v : row) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n));
    if (!(sd > 0.0)) {
      throw InputError("cbcl_preprocess: row " + std::to_string(i) +
                       " is constant, its standard deviation is zero");
    }
    for (std::size_t j = 0; j < n; ++j) {
      double scaled = 0.25 + 0.25 * (row[j] - mean) / sd;
      if (scaled < 0.0 || scaled > 1.0) {
        scaled = std::clamp(scaled, 0.0, 1.0);
        ++clamped;
      }
      out.matrix(i, j) = scaled;
    }
  }
  out.clamped_fraction = static_cast<double>(clamped) / static_cast<double>(raw.size());
  return out;
}

DenseMatrix synthetic_matrix(std::size_t p, std::size_t q, std::size_t rank, double noise,
                             std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const DenseMatrix v = uniform_matrix(p, rank, rng);
  const DenseMatrix w = uniform_matrix(rank, q, rng);
  DenseMatrix x = matmul(v, w, Backend::serial());
  std::uniform_real_distribution<double> u(0.0, 1.0);
  if (noise > 0.0)
    for (double& e : x.values()) e += noise * u(rng);
  return x;
}

}  // namespace mmpar::nnmf
