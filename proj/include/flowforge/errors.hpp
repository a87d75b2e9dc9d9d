#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace flowforge {

// Base of every error raised by the engine.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class GridMismatch : public Error {
 public:
  using Error::Error;
};

// Numerical failures carry the location where they happened. The node is
// filled by the per-node loop, the step by the iteration driver and the time
// by the reference solver; each layer annotates and rethrows.
class NumericalError : public Error {
 public:
  explicit NumericalError(std::string what) : Error(what), base_(std::move(what)) {}

  const char* what() const noexcept override { return full_.empty() ? base_.c_str() : full_.c_str(); }

  std::optional<std::size_t> node() const { return node_; }
  std::optional<std::size_t> step() const { return step_; }
  std::optional<double> time() const { return time_; }

  void set_node(std::size_t n) {
    node_ = n;
    rebuild();
  }
  void set_step(std::size_t s) {
    step_ = s;
    rebuild();
  }
  void set_time(double t) {
    time_ = t;
    rebuild();
  }

 private:
  void rebuild() {
    full_ = base_;
    if (node_) full_ += " [node " + std::to_string(*node_) + "]";
    if (step_) full_ += " [step " + std::to_string(*step_) + "]";
    if (time_) full_ += " [time " + std::to_string(*time_) + "]";
  }

  std::string base_;
  std::string full_;
  std::optional<std::size_t> node_;
  std::optional<std::size_t> step_;
  std::optional<double> time_;
};

// <nu, r> <= 0: the surface is tangent to (or turns away from) r.
class DegenerateDirection : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class EmptyStencil : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NoBracket : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class BlowUp : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class MaxItersExceeded : public NumericalError {
 public:
  MaxItersExceeded(std::string what, double residual)
      : NumericalError(std::move(what)), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class ParseError : public ConfigError {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t column)
      : ConfigError(what + " (line " + std::to_string(line) + ", column " + std::to_string(column) + ")"),
        line_(line),
        column_(column) {}
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

class ValidationError : public ConfigError {
 public:
  ValidationError(std::string field, const std::string& what)
      : ConfigError(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

}  // namespace flowforge
