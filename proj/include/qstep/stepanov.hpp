#pragma once

#include <optional>
#include <vector>

#include "qstep/diff.hpp"
#include "qstep/metric_space.hpp"
#include "qstep/qpoint.hpp"

namespace qstep {

enum class StratifyVariant {
  metric,       // G(f(y), f(x)) <= i rho(y, x) on the whole ball B(x, 3/j)
  approximate,  // violations fill at most delta of every B(x, r), r < 3/j
};

struct StratifyOptions {
  StratifyVariant variant = StratifyVariant::metric;
  /// Fullness level for the approximate variant.
  double delta = 0.0;
  int threads = 1;
};

/// E_ij for one base value P.
struct Stratum {
  int i = 0;
  int j = 0;
  int base = -1;  // position in the cover's base point list
  QPoint base_point;
  IndexSet members;
  /// NaN for strata with fewer than two members.
  double lip_certificate = 0.0;
};

/// Domain points x with G(f(x), P) < i / (2j) that satisfy the local
/// i-Lipschitz condition at scale 3/j. Isolated points and points whose
/// ball holds no other domain point are left out.
Stratum stratify(const SampledQFunction& f, const QPoint& P, int i, int j, const StratifyOptions& options = {});

/// max over member pairs of G(f(y), f(z)) / rho(y, z).
double lipschitz_certificate(const SampledQFunction& f, const IndexSet& members);

/// Greedy net of the observed values (domain order) with spacing `spacing`.
std::vector<QPoint> value_net(const SampledQFunction& f, double spacing);

struct CoverOptions {
  StratifyOptions stratify;
  /// Schedule for the direct A_f estimate; default_schedule when unset.
  std::optional<RadiiSchedule> schedule;
  std::optional<double> infinity_threshold;
  /// When false, every lip_certificate is left NaN.
  bool certificates = true;
  int threads = 1;
};

struct StratificationReport {
  int i_max = 0;
  int j_max = 0;
  std::vector<QPoint> base_points;
  std::vector<Stratum> strata;  // ordered by (i, j, base)
  IndexSet covered;
  IndexSet direct_Af;
  IndexSet uncovered;  // direct_Af minus covered
  StratifyVariant variant = StratifyVariant::metric;
  double delta = 0.0;
  RadiiSchedule schedule{1.0, 0.5, 2};
  double infinity_threshold = 0.0;
};

/// All strata for i <= i_max, j <= j_max and every base point, compared
/// against the abgr estimate of A_f.
StratificationReport stepanov_cover(const SampledQFunction& f, int i_max, int j_max,
                                    const std::vector<QPoint>& base_points, const CoverOptions& options = {});

/// Extension to the whole space by the value at the nearest point of C
/// (ties to the smallest index).
SampledQFunction extend(const SampledQFunction& f, const IndexSet& C);

struct ExtensionCheck {
  double lhs;
  double rhs;
  bool ok;
};

/// lhs = abgr of f_ext at x, rhs = 3 abgr of f restricted to C at x plus slack.
ExtensionCheck extension_bound_check(const SampledQFunction& f, const IndexSet& C, const SampledQFunction& f_ext,
                                     int x, const RadiiSchedule& schedule);

/// Domain points where f(x) = Q[[p]] up to tol.
IndexSet diagonal_set(const SampledQFunction& f, double tol);

}  // namespace qstep
