#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>

#include <nlohmann/json.hpp>

#include "qstep/diff.hpp"
#include "qstep/stepanov.hpp"
#include "qstep/synth.hpp"

namespace qstep {

/// Exit codes shared by every command.
enum ExitCode : int {
  kExitOk = 0,
  kExitFormat = 2,
  kExitPrecondition = 3,
  kExitAcceptance = 4,
};

struct ExperimentConfig {
  std::optional<RadiiSchedule> schedule;  // default_schedule of the space when unset
  double metric_eq = 1e-9;
  std::optional<double> eqty_tol;
  DecisionRule decision;
  std::optional<double> infinity_threshold;
  std::optional<double> fit_radius;
  double diagonal_tol = 1e-9;
  int i_max = 3;
  int j_max = 16;
  StratifyVariant variant = StratifyVariant::metric;
  std::optional<double> delta;         // approximate variant; full_delta(K) when unset
  std::optional<double> net_spacing;   // 1 / (2 j_max) when unset
  std::uint64_t seed = 1;
  int threads = 1;
  std::string format = "json";

  /// Keys: schedule{r0,theta,m}, tolerances{metric_eq,eqty_tol,floor,slope,
  /// infinity_threshold,diagonal}, stratify{i_max,j_max,variant,delta,
  /// net_spacing}, fit_radius, seed, threads, format.
  static ExperimentConfig from_json(const nlohmann::json& j);
  static ExperimentConfig load(const std::filesystem::path& path);
  void validate() const;
};

/// Every command reports on `out`, writes files under the given paths and
/// returns an ExitCode. Errors are reported on `err`.
int cmd_qdist(const std::filesystem::path& a, const std::filesystem::path& b, bool oracle, std::ostream& out,
              std::ostream& err);
int cmd_synth(const SyntheticSpec& spec, const std::filesystem::path& out_path, std::ostream& out, std::ostream& err);
int cmd_report(const std::filesystem::path& function_file, const ExperimentConfig& config,
               const std::filesystem::path& out_path, std::ostream& out, std::ostream& err);
int cmd_stratify(const std::filesystem::path& function_file, const ExperimentConfig& config,
                 const std::filesystem::path& out_path, std::ostream& out, std::ostream& err);
int cmd_extend(const std::filesystem::path& function_file, const std::filesystem::path& c_file,
               const ExperimentConfig& config, const std::filesystem::path& out_path, std::ostream& out,
               std::ostream& err);
/// Runs the acceptance criteria (one family or "all"), writes the JSON
/// ledger to out_path when given.
int cmd_verify(const ExperimentConfig& config, const std::string& filter, const std::filesystem::path& out_path,
               std::ostream& out, std::ostream& err);

/// Fullness level used by the approximate variant when none is configured.
double default_delta(const SampledQFunction& f, const RadiiSchedule& schedule);

/// Points of C with a point outside C closer than 1.5 times their nearest
/// neighbor distance.
IndexSet boundary_points(const PointCloudSpace& space, const IndexSet& C);

}  // namespace qstep
