#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mmpar {

// Bad user input: malformed files, mismatched shapes, invalid parameters.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A numerical invariant failed: non-finite values, broken ascent/descent.
// These indicate a bug or a blow-up rather than bad data.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MonotonicityError : public NumericalError {
 public:
  MonotonicityError(std::size_t iteration, double previous, double current);

  std::size_t iteration() const { return iteration_; }
  double previous() const { return previous_; }
  double current() const { return current_; }

 private:
  std::size_t iteration_;
  double previous_;
  double current_;
};

}  // namespace mmpar
