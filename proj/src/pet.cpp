#include "mmpar/pet.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "mmpar/errors.hpp"
#include "mmpar/kernels.hpp"

namespace mmpar::pet {

namespace {

struct Point {
  double x;
  double y;
};

// Ascending crossing parameters of the planes -1 + m h (m = 0..side) along
// origin + alpha * delta, restricted to the open interval (lo, hi).
std::vector<double> plane_crossings(double origin, double delta, std::size_t side, double h,
                                    double lo, double hi) {
  std::vector<double> out;
  if (delta == 0.0) return out;
  out.reserve(side + 1);
  for (std::size_t m = 0; m <= side; ++m) {
    const double alpha = (-1.0 + static_cast<double>(m) * h - origin) / delta;
    if (alpha > lo && alpha < hi) out.push_back(alpha);
  }
  if (delta < 0.0) std::reverse(out.begin(), out.end());
  return out;
}

// Walks the segment a -> b across the grid, reporting (pixel, chord length).
template <class Visit>
void trace_ray(Point a, Point b, std::size_t side, Visit&& visit) {
  const double h = 2.0 / static_cast<double>(side);
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  const double length = std::hypot(dx, dy);
  if (length == 0.0) return;

  double lo = 0.0;
  double hi = 1.0;
  auto clip = [&](double origin, double delta) {
    if (std::abs(delta) <= 1e-15 * length) {
      if (origin <= -1.0 || origin >= 1.0) hi = lo;  // parallel and outside
      return;
    }
    const double a0 = (-1.0 - origin) / delta;
    const double a1 = (1.0 - origin) / delta;
    lo = std::max(lo, std::min(a0, a1));
    hi = std::min(hi, std::max(a0, a1));
  };
  clip(a.x, dx);
  clip(a.y, dy);
  if (!(hi > lo)) return;

  const auto xs = plane_crossings(a.x, std::abs(dx) <= 1e-15 * length ? 0.0 : dx, side, h, lo, hi);
  const auto ys = plane_crossings(a.y, std::abs(dy) <= 1e-15 * length ? 0.0 : dy, side, h, lo, hi);

  double prev = lo;
  std::size_t ix = 0;
  std::size_t iy = 0;
  auto emit = [&](double next) {
    if (next <= prev) return;
    const double mid = 0.5 * (prev + next);
    const double px = a.x + mid * dx;
    const double py = a.y + mid * dy;
    const auto last = static_cast<long>(side) - 1;
    const long col = std::clamp(static_cast<long>(std::floor((px + 1.0) / h)), 0L, last);
    const long row = std::clamp(static_cast<long>(std::floor((1.0 - py) / h)), 0L, last);
    visit(static_cast<std::size_t>(row) * side + static_cast<std::size_t>(col),
          (next - prev) * length);
    prev = next;
  };
  while (ix < xs.size() || iy < ys.size()) {
    if (iy >= ys.size() || (ix < xs.size() && xs[ix] <= ys[iy])) {
      emit(xs[ix++]);
    } else {
      emit(ys[iy++]);
    }
  }
  emit(hi);
}

std::vector<double> project(const DenseMatrix& system, std::span<const double> lambda,
                            const Backend& backend) {
  return matvec(system, lambda, false, backend);
}

double loglik_from_projection(std::span<const double> projection, std::span<const double> counts,
                              const Backend& backend) {
  const std::vector<double> terms = elementwise(
      backend,
      [](double y, double s) {
        if (y == 0.0) return -s;
        if (!(s > 0.0)) throw InputError("pet: positive count on a ray with zero expected count");
        return y * std::log(s) - s;
      },
      counts, projection);
  return tree_reduce_sum(terms, backend);
}

double objective_from_projection(std::span<const double> lambda,
                                 std::span<const double> projection, const Problem& problem,
                                 const Backend& backend) {
  const double l = loglik_from_projection(projection, problem.counts, backend);
  if (problem.mu == 0.0) return l;
  return l - 0.5 * problem.mu * roughness(lambda, problem.neighbors, backend);
}

std::vector<double> update_from_projection(std::span<const double> lambda,
                                           std::span<const double> projection,
                                           const Problem& problem, const Backend& backend) {
  const std::size_t p = problem.pixels();
  if (lambda.size() != p) throw InputError("pet: intensity vector has the wrong length");
  for (std::size_t j = 0; j < p; ++j) {
    if (!(lambda[j] > 0.0)) {
      throw InputError("pet: intensity of pixel " + std::to_string(j) + " is not positive");
    }
  }
  // r_i = y_i / (E lambda)_i, then c_j = lambda_j sum_i e_ij r_i = sum_i z_ij.
  const std::vector<double> ratio = elementwise(
      backend,
      [](double y, double s) {
        if (y == 0.0) return 0.0;
        if (!(s > 0.0)) throw InputError("pet: positive count on a ray with zero expected count");
        return y / s;
      },
      problem.counts, projection);
  const std::vector<double> back = matvec(problem.system, ratio, true, backend);

  std::vector<double> next(p);
  const double mu = problem.mu;
  backend.parallel_for(
      p,
      [&](std::size_t begin, std::size_t end) {
        for (std::size_t j = begin; j < end; ++j) {
          const double c = lambda[j] * back[j];
          if (mu == 0.0) {
            next[j] = c;
            continue;
          }
          const auto& nbrs = problem.neighbors[j];
          double nbr_sum = 0.0;
          for (std::size_t k : nbrs) nbr_sum += lambda[k];
          const double count = static_cast<double>(nbrs.size());
          const double a = -2.0 * mu * count;
          const double b = mu * (count * lambda[j] + nbr_sum) - 1.0;
          const double disc = b * b - 4.0 * a * c;
          if (disc < 0.0) {
            throw NumericalError("pet: negative discriminant at pixel " + std::to_string(j));
          }
          const double root = std::sqrt(disc);
          // Positive root of a x^2 + b x + c, written to avoid cancellation.
          if (b <= 0.0) {
            next[j] = c == 0.0 ? 0.0 : 2.0 * c / (root - b);
          } else {
            next[j] = (-b - root) / (2.0 * a);
          }
        }
      },
      64);
  return next;
}

struct Iterate {
  std::vector<double> lambda;
  std::vector<double> projection;
};

}  // namespace

void Problem::validate() const {
  const std::size_t d = system.rows();
  const std::size_t p = system.cols();
  if (p == 0) throw InputError("pet: system matrix has no pixels");
  if (counts.size() != d) {
    throw InputError("pet: " + std::to_string(counts.size()) + " counts for " +
                     std::to_string(d) + " rays");
  }
  if (!(mu >= 0.0) || !std::isfinite(mu)) throw InputError("pet: mu must be finite and >= 0");
  if (!system.all_nonnegative()) throw InputError("pet: system matrix has negative entries");
  for (std::size_t i = 0; i < d; ++i) {
    if (!(counts[i] >= 0.0) || counts[i] != std::floor(counts[i])) {
      throw InputError("pet: count " + std::to_string(i) + " is not a nonnegative integer");
    }
  }
  const std::vector<double> sums = matvec(system, std::vector<double>(d, 1.0), true, Backend::serial());
  for (std::size_t j = 0; j < p; ++j) {
    if (std::abs(sums[j] - 1.0) > 1e-10) {
      throw InputError("pet: column " + std::to_string(j) + " of the system matrix sums to " +
                       std::to_string(sums[j]) + ", expected 1");
    }
  }
  if (neighbors.size() != p) throw InputError("pet: neighborhood list size does not match pixels");
  for (std::size_t j = 0; j < p; ++j) {
    for (std::size_t k : neighbors[j]) {
      if (k >= p || k == j) throw InputError("pet: invalid neighbor of pixel " + std::to_string(j));
      const auto& back = neighbors[k];
      if (std::find(back.begin(), back.end(), j) == back.end()) {
        throw InputError("pet: neighborhoods are not symmetric at pixels " + std::to_string(j) +
                         ", " + std::to_string(k));
      }
    }
  }
}

DenseMatrix build_system_matrix(const Geometry& geometry) {
  const std::size_t side = geometry.grid_side;
  const std::size_t n = geometry.n_detectors;
  if (side < 1) throw InputError("pet: grid_side must be at least 1");
  if (n < 2) throw InputError("pet: need at least two detectors");

  const double radius = std::numbers::sqrt2;
  std::vector<Point> detectors(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
    detectors[k] = {radius * std::cos(angle), radius * std::sin(angle)};
  }

  DenseMatrix e(geometry.ray_count(), geometry.pixel_count());
  std::size_t ray = 0;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b, ++ray) {
      trace_ray(detectors[a], detectors[b], side,
                [&](std::size_t pixel, double chord) { e(ray, pixel) += chord; });
    }
  }

  std::vector<double> sums(e.cols(), 0.0);
  for (std::size_t i = 0; i < e.rows(); ++i)
    for (std::size_t j = 0; j < e.cols(); ++j) sums[j] += e(i, j);
  for (std::size_t j = 0; j < e.cols(); ++j) {
    if (!(sums[j] > 0.0)) {
      throw InputError("pet: pixel (" + std::to_string(j / side) + ", " +
                       std::to_string(j % side) + ") is crossed by no ray; its intensity is " +
                       "unidentifiable");
    }
  }
  for (std::size_t i = 0; i < e.rows(); ++i)
    for (std::size_t j = 0; j < e.cols(); ++j) e(i, j) /= sums[j];
  return e;
}

Neighborhoods build_neighborhoods(std::size_t grid_side) {
  if (grid_side < 1) throw InputError("pet: grid_side must be at least 1");
  Neighborhoods out(grid_side * grid_side);
  for (std::size_t r = 0; r < grid_side; ++r) {
    for (std::size_t c = 0; c < grid_side; ++c) {
      auto& list = out[r * grid_side + c];
      if (r > 0) list.push_back((r - 1) * grid_side + c);
      if (c > 0) list.push_back(r * grid_side + c - 1);
      if (c + 1 < grid_side) list.push_back(r * grid_side + c + 1);
      if (r + 1 < grid_side) list.push_back((r + 1) * grid_side + c);
    }
  }
  return out;
}

std::vector<double> simulate_counts(std::span<const double> lambda_true,
                                    const DenseMatrix& system, std::uint64_t seed) {
  if (lambda_true.size() != system.cols()) {
    throw InputError("pet: phantom has " + std::to_string(lambda_true.size()) +
                     " pixels, system matrix has " + std::to_string(system.cols()));
  }
  const std::vector<double> mean = project(system, lambda_true, Backend::serial());
  std::mt19937_64 rng(seed);
  std::vector<double> counts(mean.size(), 0.0);
  for (std::size_t i = 0; i < mean.size(); ++i) {
    if (mean[i] < 0.0) throw InputError("pet: negative expected count");
    if (mean[i] == 0.0) continue;
    std::poisson_distribution<long long> draw(mean[i]);
    counts[i] = static_cast<double>(draw(rng));
  }
  return counts;
}

DenseMatrix phantom(std::size_t grid_side, double scale) {
  if (grid_side < 1) throw InputError("pet: grid_side must be at least 1");
  const double h = 2.0 / static_cast<double>(grid_side);
  auto inside = [](double x, double y, double cx, double cy, double r) {
    return (x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r;
  };
  DenseMatrix img(grid_side, grid_side);
  for (std::size_t r = 0; r < grid_side; ++r) {
    for (std::size_t c = 0; c < grid_side; ++c) {
      const double x = -1.0 + (static_cast<double>(c) + 0.5) * h;
      const double y = 1.0 - (static_cast<double>(r) + 0.5) * h;
      double v = 0.0;
      if (inside(x, y, 0.0, 0.0, 0.8)) v = 1.0;
      if (inside(x, y, 0.3, 0.25, 0.22)) v = 4.0;
      if (inside(x, y, -0.3, -0.3, 0.18)) v = 0.0;
      img(r, c) = v * scale;
    }
  }
  return img;
}

double loglik(std::span<const double> lambda, const DenseMatrix& system,
              std::span<const double> counts, const Backend& backend) {
  if (lambda.size() != system.cols() || counts.size() != system.rows()) {
    throw InputError("pet: loglik shapes do not conform to system matrix " + shape_string(system));
  }
  return loglik_from_projection(project(system, lambda, backend), counts, backend);
}

double roughness(std::span<const double> lambda, const Neighborhoods& neighbors,
                 const Backend& backend) {
  if (neighbors.size() != lambda.size()) throw InputError("pet: neighborhood size mismatch");
  std::vector<double> per_pixel(lambda.size(), 0.0);
  backend.parallel_for(
      lambda.size(),
      [&](std::size_t begin, std::size_t end) {
        for (std::size_t j = begin; j < end; ++j) {
          double s = 0.0;
          for (std::size_t k : neighbors[j]) {
            if (k <= j) continue;
            const double diff = lambda[j] - lambda[k];
            s += diff * diff;
          }
          per_pixel[j] = s;
        }
      },
      256);
  return tree_reduce_sum(per_pixel, backend);
}

double penalized_objective(std::span<const double> lambda, const Problem& problem,
                           const Backend& backend) {
  return objective_from_projection(lambda, project(problem.system, lambda, backend), problem,
                                   backend);
}

std::vector<double> gradient(std::span<const double> lambda, const Problem& problem,
                             const Backend& backend) {
  const std::vector<double> s = project(problem.system, lambda, backend);
  const std::vector<double> resid = elementwise(
      backend,
      [](double y, double si) { return y == 0.0 ? -1.0 : y / si - 1.0; }, problem.counts, s);
  std::vector<double> g = matvec(problem.system, resid, true, backend);
  if (problem.mu != 0.0) {
    for (std::size_t j = 0; j < g.size(); ++j) {
      double diff = 0.0;
      for (std::size_t k : problem.neighbors[j]) diff += lambda[j] - lambda[k];
      g[j] -= problem.mu * diff;
    }
  }
  return g;
}

double surrogate(std::span<const double> lambda, std::span<const double> anchor,
                 const Problem& problem) {
  const DenseMatrix& e = problem.system;
  const std::size_t d = e.rows();
  const std::size_t p = e.cols();
  double q = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    double s = 0.0;
    for (std::size_t k = 0; k < p; ++k) s += e(i, k) * anchor[k];
    for (std::size_t j = 0; j < p; ++j) {
      q -= e(i, j) * lambda[j];
      if (problem.counts[i] == 0.0 || e(i, j) == 0.0) continue;
      const double w = e(i, j) * anchor[j] / s;
      q += problem.counts[i] * w * std::log(e(i, j) * lambda[j] / w);
    }
  }
  double penalty = 0.0;
  for (std::size_t j = 0; j < p; ++j) {
    for (std::size_t k : problem.neighbors[j]) {
      if (k <= j) continue;
      const double m = anchor[j] + anchor[k];
      const double u = 2.0 * lambda[j] - m;
      const double v = 2.0 * lambda[k] - m;
      penalty += u * u + v * v;
    }
  }
  return q - 0.25 * problem.mu * penalty;
}

std::vector<double> update(std::span<const double> lambda, const Problem& problem,
                           const Backend& backend) {
  return update_from_projection(lambda, project(problem.system, lambda, backend), problem,
                                backend);
}

MmResult<std::vector<double>> run(const Problem& problem, const MmConfig& config,
                                  const Backend& backend) {
  return run_from(problem, std::vector<double>(problem.pixels(), 1.0), config, backend);
}

MmResult<std::vector<double>> run_from(const Problem& problem, std::vector<double> lambda0,
                                       const MmConfig& config, const Backend& backend) {
  problem.validate();
  // The iterate carries E lambda so each step projects once.
  MmProblem<Iterate> mm;
  mm.direction = Direction::kMaximize;
  mm.objective = [&](const Iterate& it) {
    return objective_from_projection(it.lambda, it.projection, problem, backend);
  };
  mm.step = [&](const Iterate& it) {
    Iterate next;
    next.lambda = update_from_projection(it.lambda, it.projection, problem, backend);
    next.projection = project(problem.system, next.lambda, backend);
    return next;
  };
  Iterate start;
  start.projection = project(problem.system, lambda0, backend);
  start.lambda = std::move(lambda0);
  auto result = run_mm(mm, std::move(start), config);
  return {std::move(result.state.lambda), std::move(result.trace)};
}

double mean_squared_error(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.empty()) throw InputError("mse: length mismatch");
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return s / static_cast<double>(a.size());
}

}  // namespace mmpar::pet
