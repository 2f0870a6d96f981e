#include "mmpar/mds.hpp"

#include <cmath>
#include <random>

#include "mmpar/errors.hpp"
#include "mmpar/kernels.hpp"

namespace mmpar::mds {

namespace {

double distance(const DenseMatrix& theta, std::size_t i, std::size_t j) {
  double s = 0.0;
  for (std::size_t k = 0; k < theta.rows(); ++k) {
    const double d = theta(k, i) - theta(k, j);
    s += d * d;
  }
  return std::sqrt(s);
}

void require_configuration(const DenseMatrix& theta, const Problem& problem) {
  if (theta.cols() != problem.objects() || theta.rows() != problem.dim) {
    throw InputError("mds: configuration is " + shape_string(theta) + ", expected " +
                     std::to_string(problem.dim) + "x" + std::to_string(problem.objects()));
  }
}

}  // namespace

void Problem::validate() const {
  const std::size_t q = weights.rows();
  if (q < 2) throw InputError("mds: need at least two objects");
  if (dim < 1) throw InputError("mds: embedding dimension must be at least 1");
  if (weights.cols() != q || dissimilarities.rows() != q || dissimilarities.cols() != q) {
    throw InputError("mds: weights " + shape_string(weights) + " and dissimilarities " +
                     shape_string(dissimilarities) + " must both be square of the same size");
  }
  for (std::size_t i = 0; i < q; ++i) {
    if (weights(i, i) != 0.0 || dissimilarities(i, i) != 0.0) {
      throw InputError("mds: nonzero diagonal at object " + std::to_string(i));
    }
    double row = 0.0;
    for (std::size_t j = 0; j < q; ++j) {
      const double w = weights(i, j);
      const double y = dissimilarities(i, j);
      if (!(w >= 0.0) || !(y >= 0.0) || !std::isfinite(w) || !std::isfinite(y)) {
        throw InputError("mds: weights and dissimilarities must be finite and nonnegative");
      }
      if (w != weights(j, i) || y != dissimilarities(j, i)) {
        throw InputError("mds: asymmetric entry at (" + std::to_string(i) + ", " +
                         std::to_string(j) + ")");
      }
      row += w;
    }
    if (!(row > 0.0)) throw InputError("mds: object " + std::to_string(i) + " has zero total weight");
  }
}

DenseMatrix unit_weights(std::size_t q) {
  DenseMatrix w(q, q, 1.0);
  for (std::size_t i = 0; i < q; ++i) w(i, i) = 0.0;
  return w;
}

DenseMatrix random_configuration(std::size_t p, std::size_t q, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  DenseMatrix theta(p, q);
  for (double& v : theta.values()) v = u(rng);
  return theta;
}

double stress(const DenseMatrix& theta, const Problem& problem, const Backend& backend) {
  require_configuration(theta, problem);
  const std::size_t q = problem.objects();
  std::vector<double> per_object(q, 0.0);
  backend.parallel_for(
      q,
      [&](std::size_t begin, std::size_t end) {
        std::vector<double> terms;
        for (std::size_t i = begin; i < end; ++i) {
          terms.clear();
          for (std::size_t j = i + 1; j < q; ++j) {
            const double r = problem.dissimilarities(i, j) - distance(theta, i, j);
            terms.push_back(problem.weights(i, j) * r * r);
          }
          per_object[i] = pairwise_sum(terms);
        }
      },
      8);
  return tree_reduce_sum(per_object, backend);
}

DenseMatrix stress_gradient(const DenseMatrix& theta, const Problem& problem) {
  require_configuration(theta, problem);
  const std::size_t q = problem.objects();
  const std::size_t p = problem.dim;
  DenseMatrix g(p, q);
  for (std::size_t i = 0; i < q; ++i) {
    for (std::size_t j = 0; j < q; ++j) {
      if (j == i || problem.weights(i, j) == 0.0) continue;
      const double d = distance(theta, i, j);
      if (d == 0.0) throw NumericalError("mds: stress is not differentiable at coincident points");
      const double scale = -2.0 * problem.weights(i, j) * (problem.dissimilarities(i, j) - d) / d;
      for (std::size_t k = 0; k < p; ++k) g(k, i) += scale * (theta(k, i) - theta(k, j));
    }
  }
  return g;
}

double surrogate(const DenseMatrix& theta, const DenseMatrix& anchor_at, const Problem& problem) {
  require_configuration(theta, problem);
  require_configuration(anchor_at, problem);
  const std::size_t q = problem.objects();
  const std::size_t p = problem.dim;
  double total = 0.0;
  for (std::size_t i = 0; i < q; ++i) {
    for (std::size_t j = i + 1; j < q; ++j) {
      const double w = problem.weights(i, j);
      const double y = problem.dissimilarities(i, j);
      if (w == 0.0) continue;
      const double dn = distance(anchor_at, i, j);
      double cross = 0.0;
      double spread = 0.0;
      for (std::size_t k = 0; k < p; ++k) {
        const double mid = 0.5 * (anchor_at(k, i) + anchor_at(k, j));
        const double ui = theta(k, i) - mid;
        const double uj = theta(k, j) - mid;
        spread += ui * ui + uj * uj;
        cross += (theta(k, i) - theta(k, j)) * (anchor_at(k, i) - anchor_at(k, j));
      }
      double term = w * y * y + 2.0 * w * spread;
      if (y != 0.0) {
        if (dn == 0.0) throw NumericalError("mds: surrogate undefined at coincident anchor points");
        term -= 2.0 * w * y * cross / dn;
      }
      total += term;
    }
  }
  return total;
}

DenseMatrix update(const DenseMatrix& theta, const Problem& problem, const Backend& backend) {
  require_configuration(theta, problem);
  const std::size_t q = problem.objects();
  const std::size_t p = problem.dim;

  const DenseMatrix gram = matmul(theta, theta, true, false, backend);
  // W - Z, with z_ij = w_ij y_ij / d_ij off the diagonal.
  DenseMatrix w_minus_z(q, q);
  DenseMatrix z(q, q);
  backend.parallel_for(
      q,
      [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
          for (std::size_t j = 0; j < q; ++j) {
            if (j == i) continue;
            const double x = problem.weights(i, j) * problem.dissimilarities(i, j);
            double zij = 0.0;
            if (x != 0.0) {
              const double sq = std::max(0.0, gram(i, i) + gram(j, j) - 2.0 * gram(i, j));
              if (sq == 0.0) {
                throw NumericalError("mds: objects " + std::to_string(i) + " and " +
                                     std::to_string(j) + " coincide; majorizer undefined");
              }
              zij = x / std::sqrt(sq);
            }
            z(i, j) = zij;
            w_minus_z(i, j) = problem.weights(i, j) - zij;
          }
        }
      },
      8);
  const std::vector<double> z_sums = row_sums(z, backend);
  const std::vector<double> w_sums = row_sums(problem.weights, backend);
  const DenseMatrix mixed = matmul(theta, w_minus_z, backend);

  DenseMatrix next(p, q);
  backend.parallel_for(
      q,
      [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
          for (std::size_t k = 0; k < p; ++k) {
            next(k, i) = (theta(k, i) * (w_sums[i] + z_sums[i]) + mixed(k, i)) / (2.0 * w_sums[i]);
          }
        }
      },
      16);
  return next;
}

DenseMatrix anchor(const DenseMatrix& theta) {
  const std::size_t p = theta.rows();
  const std::size_t q = theta.cols();
  DenseMatrix out = theta;
  if (q == 0) return out;
  for (std::size_t k = 0; k < p; ++k) {
    const double origin = theta(k, 0);
    for (std::size_t i = 0; i < q; ++i) out(k, i) -= origin;
  }
  if (q < 2 || p < 2) return out;

  // Householder reflection taking u = theta^2 to |u| e_p, followed by a sign
  // flip of the first axis so the composite is a proper rotation.
  std::vector<double> v(p);
  double norm = 0.0;
  for (std::size_t k = 0; k < p; ++k) norm += out(k, 1) * out(k, 1);
  norm = std::sqrt(norm);
  if (norm == 0.0) return out;
  for (std::size_t k = 0; k < p; ++k) v[k] = out(k, 1);
  v[p - 1] -= norm;
  double vv = 0.0;
  for (double e : v) vv += e * e;
  if (vv <= 1e-30 * norm * norm) return out;  // already on the axis
  for (std::size_t i = 0; i < q; ++i) {
    double dot = 0.0;
    for (std::size_t k = 0; k < p; ++k) dot += v[k] * out(k, i);
    const double f = 2.0 * dot / vv;
    for (std::size_t k = 0; k < p; ++k) out(k, i) -= f * v[k];
    out(0, i) = -out(0, i);
  }
  for (std::size_t k = 0; k + 1 < p; ++k) out(k, 1) = 0.0;
  out(p - 1, 1) = norm;
  return out;
}

MmProblem<DenseMatrix> stress_problem(const Problem& problem, const Backend& backend) {
  MmProblem<DenseMatrix> mm;
  mm.direction = Direction::kMinimize;
  mm.objective = [&problem, backend](const DenseMatrix& t) { return stress(t, problem, backend); };
  mm.step = [&problem, backend](const DenseMatrix& t) { return update(t, problem, backend); };
  mm.surrogate = [&problem](const DenseMatrix& t, const DenseMatrix& a) {
    return surrogate(t, a, problem);
  };
  return mm;
}

MmResult<DenseMatrix> run(const Problem& problem, const MmConfig& config, const Backend& backend,
                          bool anchored) {
  return run_from(problem, random_configuration(problem.dim, problem.objects(), config.seed),
                  config, backend, anchored);
}

MmResult<DenseMatrix> run_from(const Problem& problem, DenseMatrix start, const MmConfig& config,
                               const Backend& backend, bool anchored) {
  problem.validate();
  require_configuration(start, problem);
  auto result = run_mm(stress_problem(problem, backend), std::move(start), config);
  if (anchored) result.state = anchor(result.state);
  return result;
}

DenseMatrix votes_to_dissimilarity(const DenseMatrix& votes) {
  const std::size_t q = votes.rows();
  const std::size_t m = votes.cols();
  for (double v : votes.values()) {
    if (v != 1.0 && v != -1.0 && v != 0.0) {
      throw InputError("mds: vote entries must be 1 (yea), -1 (nay) or 0 (absent)");
    }
  }
  DenseMatrix y(q, q);
  for (std::size_t i = 0; i < q; ++i) {
    for (std::size_t j = i + 1; j < q; ++j) {
      std::size_t shared = 0;
      std::size_t disagree = 0;
      for (std::size_t c = 0; c < m; ++c) {
        const double a = votes(i, c);
        const double b = votes(j, c);
        if (a == 0.0 || b == 0.0) continue;
        ++shared;
        if (a != b) ++disagree;
      }
      if (shared == 0) {
        throw InputError("mds: legislators " + std::to_string(i) + " and " + std::to_string(j) +
                         " share no roll call");
      }
      y(i, j) = y(j, i) = static_cast<double>(disagree) / static_cast<double>(shared);
    }
  }
  return y;
}

DenseMatrix synthetic_votes(std::size_t legislators, std::size_t roll_calls, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> spread(0.0, 0.4);
  std::normal_distribution<double> noise(0.0, 0.3);
  std::uniform_real_distribution<double> cut(-1.5, 1.5);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<double> ideal(legislators);
  for (std::size_t i = 0; i < legislators; ++i)
    ideal[i] = (i % 2 == 0 ? -1.0 : 1.0) + spread(rng);

  DenseMatrix votes(legislators, roll_calls);
  for (std::size_t c = 0; c < roll_calls; ++c) {
    const double threshold = cut(rng);
    const double polarity = unit(rng) < 0.5 ? -1.0 : 1.0;
    for (std::size_t i = 0; i < legislators; ++i) {
      if (unit(rng) < 0.05) continue;  // absent
      votes(i, c) = polarity * (ideal[i] - threshold) + noise(rng) > 0.0 ? 1.0 : -1.0;
    }
  }
  return votes;
}

}  // namespace mmpar::mds
