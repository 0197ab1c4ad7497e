#pragma once

// The acceptance suite AC-1..AC-11, shared by `ksblow verify` and the
// acceptance test binary.

#include <string>
#include <vector>

#include "ksblow/emit.hpp"

namespace ksblow {

struct AcceptanceResult {
  std::string id;
  std::string title;
  std::string expected;
  std::string actual;
  std::string tolerance;
  bool passed = false;
  double seconds = 0.0;
  std::string detail;  // exception text or per-case notes
};

struct AcceptanceOptions {
  int threads = 1;
  /// Added to the computed C(2) in AC-1; nonzero only to exercise the
  /// failure path of the harness.
  double c2_perturbation = 0.0;
};

const std::vector<std::string>& acceptance_ids();

/// Runs one item; exceptions become a failed result carrying the message.
/// Throws DomainError for an unknown id.
AcceptanceResult run_acceptance_item(const std::string& id, const AcceptanceOptions& opts = {});

/// Runs `only` (all items when empty) in id order.
std::vector<AcceptanceResult> run_acceptance(const std::vector<std::string>& only, const AcceptanceOptions& opts = {});

/// "AC-7  PASS  exact blowing-up solution  actual=... expected=... tol=... [12.3 s]"
std::string format_line(const AcceptanceResult& r);

nlohmann::json to_json(const std::vector<AcceptanceResult>& results);
std::string to_csv(const std::vector<AcceptanceResult>& results);

}  // namespace ksblow
