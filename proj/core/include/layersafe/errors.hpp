#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace layersafe {

/// Invalid dimensions, constants or settings.
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

/// Scenario text that cannot be parsed; carries the 1-based line number.
class ParseError : public ConfigError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : ConfigError("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// A rollout produced a non-finite state.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(std::size_t step, double t)
      : std::runtime_error("non-finite state at step " + std::to_string(step) +
                           " (t=" + std::to_string(t) + ")"),
        step_(step),
        t_(t) {}
  std::size_t step() const noexcept { return step_; }
  double time() const noexcept { return t_; }

 private:
  std::size_t step_;
  double t_;
};

/// Barrier gradient requested at the nearest obstacle center.
class SingularGradientError : public std::domain_error {
 public:
  explicit SingularGradientError(const std::string& what) : std::domain_error(what) {}
};

/// Query window outside the recorded horizon.
class RangeError : public std::out_of_range {
 public:
  explicit RangeError(const std::string& what) : std::out_of_range(what) {}
};

/// A theorem hypothesis needed by a construction does not hold (e.g. beta <= alpha).
class HypothesisError : public std::domain_error {
 public:
  explicit HypothesisError(const std::string& what) : std::domain_error(what) {}
};

/// No exponential tracking certificate exists for the given gains.
class NoCertificateError : public std::domain_error {
 public:
  explicit NoCertificateError(const std::string& what) : std::domain_error(what) {}
};

}  // namespace layersafe
