#pragma once

#include <stdexcept>
#include <string>

namespace scatterdist {

// Contract and configuration violations. The CLI maps these to exit code 2.
class config_error : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

// A size distribution that puts no probability on any grid size.
class empty_support_error : public config_error {
public:
  using config_error::config_error;
};

// Numerical failures (series non-convergence, nothing left to fit, degenerate
// estimates). The CLI maps these to exit code 3.
class numeric_error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class suppression_error : public numeric_error {
public:
  using numeric_error::numeric_error;
};

class degenerate_estimate_error : public numeric_error {
public:
  using numeric_error::numeric_error;
};

class bank_file_error : public std::runtime_error {
public:
  enum class Kind { malformed, shape_mismatch, version_mismatch, io };

  bank_file_error(Kind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

private:
  Kind kind_;
};

}  // namespace scatterdist
