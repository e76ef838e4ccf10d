#pragma once

#include <stdexcept>
#include <string>

namespace tve {

/// Argument outside the domain of a material law or operator.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Invalid or inconsistent run configuration. `field()` names the offending key.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::runtime_error(field.empty() ? what : field + ": " + what), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// A time step could not be completed; `suggested_dt()` is a retry hint (0 if none).
class StepError : public std::runtime_error {
 public:
  StepError(const std::string& what, double suggested_dt = 0.0)
      : std::runtime_error(what), suggested_dt_(suggested_dt) {}

  double suggested_dt() const noexcept { return suggested_dt_; }

 private:
  double suggested_dt_;
};

}  // namespace tve
