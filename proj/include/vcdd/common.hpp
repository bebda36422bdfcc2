#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace vcdd {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Invalid argument values or unsatisfied preconditions (exit code 1 at the CLI).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Operation invoked in the wrong order, e.g. applying a scaler that was never fitted.
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Filesystem failures (exit code 2 at the CLI).
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed binary input. `offset` is the first byte that could not be read or validated.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, std::uint64_t offset)
      : std::runtime_error(what + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}

  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

}  // namespace vcdd
