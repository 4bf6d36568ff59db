#pragma once

#include <stdexcept>
#include <string>

namespace tsg {

// Bad user input: malformed files, invalid flags, schema violations.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Risk thresholds admit no strictly interior mixture for some category.
struct InfeasibleRisk : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Projection anchor is not strictly inside its polytope.
struct NonInteriorAnchor : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// An executed action violated its category's risk polytope beyond audit
// tolerance. This signals an upstream bug and is never silently accepted.
struct InfeasibleActionAudit : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Non-finite value surfaced where one must not (losses, parameters).
struct NumericsError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace tsg
