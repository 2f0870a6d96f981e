#pragma once

#include <cstddef>
#include <cstdint>

#include "mmpar/backend.hpp"
#include "mmpar/dense_matrix.hpp"
#include "mmpar/mm_core.hpp"

namespace mmpar::nnmf {

// X (p x q, nonnegative) approximated by V (p x r) W (r x q).
struct Problem {
  DenseMatrix x;
  std::size_t rank = 1;

  // Throws InputError for negative entries or rank 0. Returns false when the
  // rank exceeds min(p, q), which is allowed but unusual.
  bool validate() const;
};

struct FactorPair {
  DenseMatrix v;
  DenseMatrix w;
};

// Uniform(0,1) draws, V first then W, row-major.
FactorPair random_factors(std::size_t p, std::size_t q, std::size_t rank, std::uint64_t seed);

// ||X - VW||_F^2
double objective(const DenseMatrix& x, const DenseMatrix& v, const DenseMatrix& w,
                 const Backend& backend);

// v_ik <- v_ik {X W^t}_ik / {V W W^t}_ik
DenseMatrix update_v(const DenseMatrix& x, const DenseMatrix& v, const DenseMatrix& w,
                     const Backend& backend);
// w_kj <- w_kj {V^t X}_kj / {V^t V W}_kj, with V already updated.
DenseMatrix update_w(const DenseMatrix& x, const DenseMatrix& v_next, const DenseMatrix& w,
                     const Backend& backend);

// One full sweep: V first, then W against the new V.
FactorPair step(const DenseMatrix& x, const FactorPair& current, const Backend& backend);

// Majorizer of the Frobenius loss anchored at (V_n, W_n), evaluated as the
// explicit triple sum over a_ikj = v_nik w_nkj and b_ij = sum_k a_ikj.
// Serial and unoptimized; meant for checking the update, not for running it.
double surrogate(const DenseMatrix& x, const FactorPair& at, const FactorPair& anchor);

// Gradient of ||X - VW||_F^2 with respect to V and W.
FactorPair gradient(const DenseMatrix& x, const FactorPair& at, const Backend& backend);

MmProblem<FactorPair> frobenius_problem(const DenseMatrix& x, const Backend& backend);

MmResult<FactorPair> run(const Problem& problem, const MmConfig& config, const Backend& backend);
MmResult<FactorPair> run_from(const Problem& problem, FactorPair start, const MmConfig& config,
                              const Backend& backend);

// Poisson model: L(V,W) = sum_ij [x_ij ln (VW)_ij - (VW)_ij], 0 ln 0 = 0.
double poisson_objective(const DenseMatrix& x, const DenseMatrix& v, const DenseMatrix& w,
                         const Backend& backend);

// Square-root multiplicative updates: V against b = V_n W_n, then W against
// the recomputed b = V_{n+1} W_n. Each half-step is an MM ascent step.
FactorPair poisson_update(const DenseMatrix& x, const FactorPair& current,
                          const Backend& backend);

MmProblem<FactorPair> poisson_problem(const DenseMatrix& x, const Backend& backend);

MmResult<FactorPair> run_poisson(const Problem& problem, const MmConfig& config,
                                 const Backend& backend);
MmResult<FactorPair> run_poisson_from(const Problem& problem, FactorPair start,
                                      const MmConfig& config, const Backend& backend);

struct ScaledImages {
  DenseMatrix matrix;
  double clamped_fraction = 0.0;  // share of entries clamped into [0, 1]
};

// Affine map of each row to mean 0.25 and population standard deviation
// 0.25, then clamp to [0, 1]. A constant row throws InputError.
ScaledImages cbcl_preprocess(const DenseMatrix& raw);

// Nonnegative test data: a random rank-`rank` product plus uniform noise of
// amplitude `noise`.
DenseMatrix synthetic_matrix(std::size_t p, std::size_t q, std::size_t rank, double noise,
                             std::uint64_t seed);

}  // namespace mmpar::nnmf
