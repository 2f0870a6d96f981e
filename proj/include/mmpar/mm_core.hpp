#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "mmpar/errors.hpp"

namespace mmpar {

enum class Direction { kMinimize, kMaximize };

const char* to_string(Direction d);

struct MmConfig {
  double epsilon = 1e-9;
  std::size_t max_iters = 100000;
  std::uint64_t seed = 0;
  bool check_monotone = true;
  // Allowed worsening per iteration, relative to |f(theta_n)|.
  double monotone_tol = 1e-12;

  // Throws InputError when a field is out of range.
  void validate() const;
};

struct MmTrace {
  // objective_values[0] is the objective at the starting point, so the
  // vector always holds iters + 1 entries.
  std::vector<double> objective_values;
  std::vector<double> cumulative_seconds;
  std::size_t iters = 0;
  bool converged = false;
  double wall_time = 0.0;
  double final_relative_change = 0.0;

  double final_objective() const { return objective_values.back(); }
};

// Columns: iter, objective, cumulative_seconds.
void write_trace_csv(const MmTrace& trace, std::ostream& out);
void write_trace_csv(const MmTrace& trace, const std::string& path);

// |f_n - f_prev| / (|f_prev| + 1). Throws NumericalError on non-finite input.
double relative_change(double f_n, double f_prev);

// The MM map theta -> M(theta) together with the objective it improves.
// `surrogate(theta, anchor)` is optional and only used for property checks.
template <class State>
struct MmProblem {
  Direction direction = Direction::kMinimize;
  std::function<double(const State&)> objective;
  std::function<State(const State&)> step;
  std::function<double(const State&, const State&)> surrogate;
};

template <class State>
struct MmResult {
  State state;
  MmTrace trace;
};

namespace detail {
void check_objective_finite(double value, std::size_t iteration);
}

// Iterates theta_{n+1} = step(theta_n) until relative_change falls below
// config.epsilon or max_iters steps have been taken. With check_monotone,
// any step that worsens the objective by more than monotone_tol * |f_n|
// throws MonotonicityError naming the offending iteration.
template <class State>
MmResult<State> run_mm(const MmProblem<State>& problem, State theta0, const MmConfig& config) {
  config.validate();
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(Clock::now() - start).count(); };

  MmResult<State> result{std::move(theta0), {}};
  MmTrace& trace = result.trace;
  double f_prev = problem.objective(result.state);
  detail::check_objective_finite(f_prev, 0);
  trace.objective_values.reserve(std::min<std::size_t>(config.max_iters, 100000) + 1);
  trace.objective_values.push_back(f_prev);
  trace.cumulative_seconds.push_back(elapsed());

  const bool minimize = problem.direction == Direction::kMinimize;
  while (trace.iters < config.max_iters) {
    result.state = problem.step(result.state);
    const double f_n = problem.objective(result.state);
    ++trace.iters;
    detail::check_objective_finite(f_n, trace.iters);
    trace.objective_values.push_back(f_n);
    trace.cumulative_seconds.push_back(elapsed());

    if (config.check_monotone) {
      const double slack = config.monotone_tol * std::abs(f_prev);
      const bool worse = minimize ? f_n > f_prev + slack : f_n < f_prev - slack;
      if (worse) throw MonotonicityError(trace.iters, f_prev, f_n);
    }
    trace.final_relative_change = relative_change(f_n, f_prev);
    f_prev = f_n;
    if (trace.final_relative_change < config.epsilon) {
      trace.converged = true;
      break;
    }
  }
  trace.wall_time = elapsed();
  return result;
}

}  // namespace mmpar
