#pragma once

#include <stdexcept>
#include <string>

namespace hyperpp {

// Input violates a mathematical domain (non-finite values, points off the
// manifold, invalid curvature).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Caller broke an API precondition (shape mismatch, wrong head model,
// backward before forward, stepping a finished episode).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Non-finite values appeared during training. Carries the location
// (layer name or trainer step) so runs can be diagnosed after the abort.
class TrainingFault : public std::runtime_error {
 public:
  TrainingFault(std::string where, const std::string& what)
      : std::runtime_error(where + ": " + what), where_(std::move(where)) {}

  const std::string& where() const noexcept { return where_; }

 private:
  std::string where_;
};

// Malformed run configuration; the message names the offending field.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace hyperpp
