#pragma once

#include <stdexcept>
#include <string>

namespace tbi {

// Malformed input file (bad CSV row, bad JSON, schema mismatch).
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Structurally well-formed input that violates a domain invariant.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Pipeline failure tagged with the phase that raised it.
struct PhaseError : std::runtime_error {
  std::string phase;
  PhaseError(std::string phase_name, const std::string& message)
      : std::runtime_error("[" + phase_name + "] " + message), phase(std::move(phase_name)) {}
};

}  // namespace tbi
