#ifndef BVNET_ERRORS_HPP
#define BVNET_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bvnet {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Mismatched vector/matrix sizes or state widths.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A value violates a type invariant (row sums, sigma > 0, n >= 2, ...).
class InvariantError : public Error {
 public:
  using Error::Error;
};

/// Dense analysis requested above a documented size cap.
class CapacityError : public Error {
 public:
  CapacityError(const std::string& what, int n, int cap)
      : Error(what + ": n=" + std::to_string(n) + " exceeds cap " +
              std::to_string(cap)),
        n_(n),
        cap_(cap) {}
  int n() const noexcept { return n_; }
  int cap() const noexcept { return cap_; }

 private:
  int n_;
  int cap_;
};

/// Non-finite intermediate values.
class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, std::ptrdiff_t block = -1)
      : Error(what), block_(block) {}
  /// Agent block that produced the bad value, or -1 if unknown.
  std::ptrdiff_t block() const noexcept { return block_; }

 private:
  std::ptrdiff_t block_;
};

/// Iterative solver ran out of iterations.
class IterationLimitError : public Error {
 public:
  IterationLimitError(const std::string& what, double residual)
      : Error(what + " (residual " + std::to_string(residual) + ")"),
        residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// Conditioning on a state with (numerically) zero stationary mass.
class DegenerateMassError : public Error {
 public:
  using Error::Error;
};

/// A transition matrix that no member of the model family produces.
class ModelMismatchError : public Error {
 public:
  using Error::Error;
};

/// Trajectories, streams or runs with too few observations.
class EmptyInputError : public Error {
 public:
  using Error::Error;
};

/// Malformed configuration or CSV input; carries the 1-based line number.
class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line,
             const std::string& what)
      : Error(source + ":" + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace bvnet

#endif  // BVNET_ERRORS_HPP
