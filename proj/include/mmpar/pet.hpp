#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "mmpar/backend.hpp"
#include "mmpar/dense_matrix.hpp"
#include "mmpar/mm_core.hpp"

namespace mmpar::pet {

// Square pixel grid over [-1, 1]^2 ringed by detectors spaced evenly on the
// circumscribing circle. Every unordered detector pair is a line of flight.
// Pixel j = row * grid_side + col, row 0 at the top (y = +1).
struct Geometry {
  std::size_t grid_side = 64;
  std::size_t n_detectors = 64;

  std::size_t pixel_count() const { return grid_side * grid_side; }
  std::size_t ray_count() const { return n_detectors * (n_detectors - 1) / 2; }
};

using Neighborhoods = std::vector<std::vector<std::size_t>>;

struct Problem {
  DenseMatrix system;           // d x p, unit column sums
  std::vector<double> counts;   // d nonnegative integers
  double mu = 0.0;              // roughness penalty
  Neighborhoods neighbors;      // symmetric adjacency over the p pixels

  std::size_t rays() const { return system.rows(); }
  std::size_t pixels() const { return system.cols(); }

  // Throws InputError for any broken invariant.
  void validate() const;
};

// Chord length of every ray through every pixel (incremental Siddon
// traversal), each column then scaled to sum to one. A pixel that no ray
// crosses throws InputError.
DenseMatrix build_system_matrix(const Geometry& geometry);

// 4-neighborhood (up, down, left, right) on the square lattice, sorted.
Neighborhoods build_neighborhoods(std::size_t grid_side);

// y_i ~ Poisson((E lambda)_i), reproducible for a given seed.
std::vector<double> simulate_counts(std::span<const double> lambda_true,
                                    const DenseMatrix& system, std::uint64_t seed);

// Disk phantom: 0 outside a central disk, 1 inside, 4 in a hot spot and 0 in
// a cold spot; every value multiplied by `scale`. Returned as a row-major
// grid_side x grid_side image.
DenseMatrix phantom(std::size_t grid_side, double scale);

// sum_i [y_i ln (E lambda)_i - (E lambda)_i]; a zero count contributes
// only -(E lambda)_i. A positive count on a zero mean throws InputError.
double loglik(std::span<const double> lambda, const DenseMatrix& system,
              std::span<const double> counts, const Backend& backend);

// Sum over unordered neighbor pairs of (lambda_j - lambda_k)^2.
double roughness(std::span<const double> lambda, const Neighborhoods& neighbors,
                 const Backend& backend);

// loglik - (mu / 2) roughness
double penalized_objective(std::span<const double> lambda, const Problem& problem,
                           const Backend& backend);

// Gradient of penalized_objective.
std::vector<double> gradient(std::span<const double> lambda, const Problem& problem,
                             const Backend& backend);

// Minorizer of penalized_objective anchored at lambda_n: the Jensen
// minorizer of the loglikelihood minus the separable majorizer of the
// penalty. Direct serial evaluation.
double surrogate(std::span<const double> lambda, std::span<const double> anchor,
                 const Problem& problem);

// One MM step. With mu > 0 each pixel takes the positive root of
// a_j x^2 + b_j x + c_j = 0; with mu = 0 this reduces to the EM update
// lambda_j <- c_j. Non-positive intensities throw InputError.
std::vector<double> update(std::span<const double> lambda, const Problem& problem,
                           const Backend& backend);

MmResult<std::vector<double>> run(const Problem& problem, const MmConfig& config,
                                  const Backend& backend);
MmResult<std::vector<double>> run_from(const Problem& problem, std::vector<double> lambda0,
                                       const MmConfig& config, const Backend& backend);

double mean_squared_error(std::span<const double> a, std::span<const double> b);

}  // namespace mmpar::pet
