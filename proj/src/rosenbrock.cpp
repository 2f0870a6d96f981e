#include "mmpar/rosenbrock.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace mmpar::rosenbrock {

namespace {

double anchor_sum(const Point& a) { return a[0] * a[0] + a[1]; }

// Root of a monotone function on [lo, hi], or nothing if no sign change.
template <class F>
bool bisect(F&& f, double lo, double hi, double& root) {
  double flo = f(lo);
  double fhi = f(hi);
  if (flo == 0.0) return root = lo, true;
  if (fhi == 0.0) return root = hi, true;
  if ((flo < 0.0) == (fhi < 0.0)) return false;
  for (;;) {
    const double mid = lo + 0.5 * (hi - lo);
    if (mid <= lo || mid >= hi) break;
    const double fm = f(mid);
    if (fm == 0.0) return root = mid, true;
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
      fhi = fm;
    }
  }
  root = std::abs(fhi) < std::abs(flo) ? hi : lo;
  return true;
}

}  // namespace

double objective(const Point& x) {
  const double a = x[0] * x[0] - x[1];
  const double b = x[0] - 1.0;
  return 100.0 * a * a + b * b;
}

double surrogate_g1(double x1, const Point& anchor) {
  const double s = anchor_sum(anchor);
  const double sq = x1 * x1;
  return 200.0 * sq * sq - (200.0 * s - 1.0) * sq - 2.0 * x1 + 1.0;
}

double surrogate_g2(double x2, const Point& anchor) {
  const double s = anchor_sum(anchor);
  return 200.0 * x2 * x2 - 200.0 * s * x2 + 100.0 * s * s;
}

double surrogate(const Point& x, const Point& anchor) {
  return surrogate_g1(x[0], anchor) + surrogate_g2(x[1], anchor);
}

double minimize_g1(const Point& anchor) {
  // g1'(t) = 800 t^3 - 2c t - 2, c = 200 s - 1.
  const double c = 200.0 * anchor_sum(anchor) - 1.0;
  auto derivative = [c](double t) { return 800.0 * t * t * t - 2.0 * c * t - 2.0; };

  // Cauchy bound on the roots of t^3 - (c/400) t - 1/400.
  const double bound = 1.0 + std::max(1.0, std::abs(c) / 400.0);
  std::vector<double> edges{-bound};
  if (c > 0.0) {
    // g1'' = 2400 t^2 - 2c vanishes at +-sqrt(c / 1200); g1' is monotone between.
    const double r = std::sqrt(c / 1200.0);
    edges.push_back(-r);
    edges.push_back(r);
  }
  edges.push_back(bound);

  double best = 0.0;
  double best_value = INFINITY;
  for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
    double root;
    if (!bisect(derivative, edges[k], edges[k + 1], root)) continue;
    const double value = surrogate_g1(root, anchor);
    if (value < best_value || (value == best_value && root < best)) {
      best = root;
      best_value = value;
    }
  }
  return best;
}

Point mm_step(const Point& x) { return {minimize_g1(x), 0.5 * anchor_sum(x)}; }

MmProblem<Point> problem() {
  MmProblem<Point> p;
  p.direction = Direction::kMinimize;
  p.objective = objective;
  p.step = mm_step;
  p.surrogate = surrogate;
  return p;
}

}  // namespace mmpar::rosenbrock
