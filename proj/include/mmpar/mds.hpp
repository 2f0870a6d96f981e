#pragma once

#include <cstddef>
#include <cstdint>

#include "mmpar/backend.hpp"
#include "mmpar/dense_matrix.hpp"
#include "mmpar/mm_core.hpp"

namespace mmpar::mds {

// q objects with symmetric weights and dissimilarities (zero diagonals),
// embedded as the columns of a p x q configuration.
struct Problem {
  DenseMatrix weights;
  DenseMatrix dissimilarities;
  std::size_t dim = 2;

  std::size_t objects() const { return weights.rows(); }
  void validate() const;
};

DenseMatrix unit_weights(std::size_t q);

// Uniform[-1, 1] draws, row-major over the p x q configuration.
DenseMatrix random_configuration(std::size_t p, std::size_t q, std::uint64_t seed);

// sum_{i<j} w_ij (y_ij - ||theta^i - theta^j||)^2
double stress(const DenseMatrix& theta, const Problem& problem, const Backend& backend);

DenseMatrix stress_gradient(const DenseMatrix& theta, const Problem& problem);

// Majorizer of stress anchored at theta_n: the Cauchy-Schwarz bound on the
// cross term plus the separable bound on the squared distances. It includes
// the constant sum_{i<j} w_ij y_ij^2, so it touches the stress at theta_n.
double surrogate(const DenseMatrix& theta, const DenseMatrix& anchor, const Problem& problem);

// One MM step in matrix form:
//   G = Theta^t Theta, d_ij = sqrt(G_ii + G_jj - 2 G_ij),
//   z_ij = w_ij y_ij / d_ij (i != j), z_i. = sum_j z_ij,
//   theta^i <- [theta^i (w_i. + z_i.) + {Theta (W - Z)}^i] / (2 w_i.).
// Two coincident points with w_ij y_ij > 0 throw NumericalError.
DenseMatrix update(const DenseMatrix& theta, const Problem& problem, const Backend& backend);

// Rigid motion moving theta^1 to the origin and theta^2 onto the positive
// last axis (its first p - 1 coordinates become zero). Stress is unchanged.
DenseMatrix anchor(const DenseMatrix& theta);

MmProblem<DenseMatrix> stress_problem(const Problem& problem, const Backend& backend);

// Random start from config.seed; anchoring, when requested, is applied to
// the final configuration only and leaves the trace untouched.
MmResult<DenseMatrix> run(const Problem& problem, const MmConfig& config, const Backend& backend,
                          bool anchored);
MmResult<DenseMatrix> run_from(const Problem& problem, DenseMatrix start, const MmConfig& config,
                               const Backend& backend, bool anchored);

// Votes are q x m with entries 1 (yea), -1 (nay), 0 (absent). y_ij is the
// share of roll calls where both voted and disagreed. A pair with no shared
// roll call throws InputError.
DenseMatrix votes_to_dissimilarity(const DenseMatrix& votes);

// Two-bloc spatial voting model for demos and benchmarks.
DenseMatrix synthetic_votes(std::size_t legislators, std::size_t roll_calls, std::uint64_t seed);

}  // namespace mmpar::mds
