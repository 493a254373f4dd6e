#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace qstep {

struct CriterionResult {
  int id = 0;
  std::string family;
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

struct VerifyOptions {
  /// Allowed |qdist - brute force| in the oracle criterion.
  double metric_eq = 1e-9;
  std::uint64_t seed = 1;
  int threads = 1;
  /// Working directory for the determinism criterion; a temporary
  /// directory when empty.
  std::filesystem::path scratch;
};

/// Family names accepted by run_acceptance, "all" excluded.
const std::vector<std::string>& acceptance_families();

/// Runs every criterion of `filter` ("all" or a family name) in id order,
/// calling `progress` after each one. Unknown filters throw PreconditionError.
std::vector<CriterionResult> run_acceptance(const VerifyOptions& options, const std::string& filter = "all",
                                            const std::function<void(const CriterionResult&)>& progress = {});

}  // namespace qstep
