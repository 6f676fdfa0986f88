#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace mfspec {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ReducibleMatrix : public Error {
 public:
  ReducibleMatrix(std::size_t from, std::size_t to)
      : Error("transition matrix is reducible: no path " + std::to_string(from) + " -> " +
              std::to_string(to)),
        from_(from),
        to_(to) {}
  std::size_t from() const { return from_; }
  std::size_t to() const { return to_; }

 private:
  std::size_t from_;
  std::size_t to_;
};

class EmptyRowOrColumn : public Error {
 public:
  explicit EmptyRowOrColumn(std::size_t symbol)
      : Error("symbol " + std::to_string(symbol) + " has an empty row or column"), symbol_(symbol) {}
  std::size_t symbol() const { return symbol_; }

 private:
  std::size_t symbol_;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class InadmissibleWord : public Error {
 public:
  using Error::Error;
};

class WordTooShort : public Error {
 public:
  using Error::Error;
};

class StreamExhausted : public Error {
 public:
  using Error::Error;
};

class ConvergenceFailure : public Error {
 public:
  ConvergenceFailure(long iterations, double residual)
      : Error("Perron iteration did not converge after " + std::to_string(iterations) +
              " iterations (residual " + std::to_string(residual) + ")"),
        iterations_(iterations),
        residual_(residual) {}
  long iterations() const { return iterations_; }
  double residual() const { return residual_; }

 private:
  long iterations_;
  double residual_;
};

class SingularSystem : public Error {
 public:
  using Error::Error;
};

class NotZeroPressure : public Error {
 public:
  explicit NotZeroPressure(double pressure)
      : Error("potential is not normalized: pressure = " + std::to_string(pressure)),
        pressure_(pressure) {}
  double pressure() const { return pressure_; }

 private:
  double pressure_;
};

class BracketingFailure : public Error {
 public:
  using Error::Error;
};

class DegenerateSpectrum : public Error {
 public:
  using Error::Error;
};

class InfeasibleConstraint : public Error {
 public:
  using Error::Error;
};

class EqualRatios : public Error {
 public:
  using Error::Error;
};

/// Raised by the JSON/config loaders; `where` names the offending field.
class SchemaError : public Error {
 public:
  SchemaError(std::string where, const std::string& what)
      : Error(where + ": " + what), where_(std::move(where)) {}
  const std::string& where() const { return where_; }

 private:
  std::string where_;
};

}  // namespace mfspec
