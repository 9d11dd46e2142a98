#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace cvx {

/// Invalid parameters or descriptors supplied by the caller (CLI exit code 2).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A Monte-Carlo run hit a sample that breaks an oracle contract (non-finite
/// functional, negative subgradient gap). Carries the offending sample.
class EstimationError : public std::runtime_error {
 public:
  EstimationError(const std::string& what, std::vector<double> sample)
      : std::runtime_error(what), sample_(std::move(sample)) {}

  const std::vector<double>& sample() const noexcept { return sample_; }

 private:
  std::vector<double> sample_;
};

/// Integral that diverges for the requested arguments (e.g. heat kernel
/// integrated in time at an atom in d >= 2).
class NonIntegrableError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Internal geometric invariant broken; signals a bug rather than bad input.
class GeometryError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace cvx
