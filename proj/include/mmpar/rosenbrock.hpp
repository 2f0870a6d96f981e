#pragma once

#include <array>

#include "mmpar/mm_core.hpp"

namespace mmpar::rosenbrock {

using Point = std::array<double, 2>;

// 100 (x1^2 - x2)^2 + (x1 - 1)^2
double objective(const Point& x);

// Separated majorizers anchored at x_n, with s = x_n1^2 + x_n2:
//   g1(x1) = 200 x1^4 - (200 s - 1) x1^2 - 2 x1 + 1
//   g2(x2) = 200 x2^2 - 200 s x2 + 100 s^2
// g1 + g2 >= objective everywhere, with equality at x = x_n.
double surrogate_g1(double x1, const Point& anchor);
double surrogate_g2(double x2, const Point& anchor);
double surrogate(const Point& x, const Point& anchor);

// Global minimizer of g1 over the real roots of g1' (bracketed bisection);
// ties in g1 go to the smaller root.
double minimize_g1(const Point& anchor);

// x_{n+1} = (argmin g1, (x_n1^2 + x_n2) / 2)
Point mm_step(const Point& x);

MmProblem<Point> problem();

}  // namespace mmpar::rosenbrock
