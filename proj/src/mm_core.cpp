#include "mmpar/mm_core.hpp"

#include <charconv>
#include <fstream>
#include <ostream>
#include <sstream>

namespace mmpar {

MonotonicityError::MonotonicityError(std::size_t iteration, double previous, double current)
    : NumericalError([&] {
        std::ostringstream msg;
        msg.precision(17);
        msg << "monotonicity violated at iteration " << iteration << ": objective went from "
            << previous << " to " << current;
        return msg.str();
      }()),
      iteration_(iteration),
      previous_(previous),
      current_(current) {}

const char* to_string(Direction d) {
  return d == Direction::kMinimize ? "minimize" : "maximize";
}

void MmConfig::validate() const {
  if (!(epsilon > 0.0)) throw InputError("epsilon must be positive");
  if (max_iters < 1) throw InputError("max_iters must be at least 1");
  if (!(monotone_tol >= 0.0)) throw InputError("monotone_tol must be nonnegative");
}

double relative_change(double f_n, double f_prev) {
  if (!std::isfinite(f_n) || !std::isfinite(f_prev)) {
    throw NumericalError("relative_change: non-finite objective (numerical blow-up)");
  }
  return std::abs(f_n - f_prev) / (std::abs(f_prev) + 1.0);
}

namespace detail {
void check_objective_finite(double value, std::size_t iteration) {
  if (!std::isfinite(value)) {
    throw NumericalError("objective is not finite at iteration " + std::to_string(iteration));
  }
}
}  // namespace detail

namespace {
std::string shortest(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}
}  // namespace

void write_trace_csv(const MmTrace& trace, std::ostream& out) {
  out << "iter,objective,cumulative_seconds\n";
  for (std::size_t n = 0; n < trace.objective_values.size(); ++n) {
    const double t = n < trace.cumulative_seconds.size() ? trace.cumulative_seconds[n] : 0.0;
    out << n << ',' << shortest(trace.objective_values[n]) << ',' << shortest(t) << '\n';
  }
}

void write_trace_csv(const MmTrace& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot open trace file for writing: " + path);
  write_trace_csv(trace, out);
}

}  // namespace mmpar
