#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qstep/germs.hpp"
#include "qstep/metric_space.hpp"
#include "qstep/qpoint.hpp"

namespace qstep {

/// f: A -> A_Q(R^k) sampled on a subset A of a point cloud.
class SampledQFunction {
 public:
  /// values[c] is the value at domain[c].
  SampledQFunction(PointCloudSpace space, IndexSet domain, std::vector<QPoint> values);

  const PointCloudSpace& space() const { return space_; }
  const IndexSet& domain() const { return domain_; }
  const std::vector<QPoint>& values() const { return values_; }
  int q() const { return values_.front().q(); }
  int k() const { return values_.front().k(); }
  bool contains(int x) const { return x >= 0 && x < space_.size() && position_[x] >= 0; }
  /// f(x); throws std::out_of_range outside the domain.
  const QPoint& value(int x) const;

  /// Known bound on the local Lipschitz constant, if the producer supplied one.
  std::optional<double> lipschitz_hint;

  SampledQFunction restrict_to(const IndexSet& subset) const;

 private:
  PointCloudSpace space_;
  IndexSet domain_;
  std::vector<QPoint> values_;
  std::vector<int> position_;
};

struct CurvePoint {
  double radius;  // outer radius of the annulus
  double inner;
  double value;
  int count;
};

/// Per-annulus quotients from the coarsest to the finest scheduled scale.
struct QuotientCurve {
  std::vector<CurvePoint> points;
  /// Max over the finest third of nonempty annuli.
  double headline = 0.0;

  int nonempty() const;
};

/// "lim = 0" surrogate: finest value <= floor or log-log slope >= slope.
struct DecisionRule {
  double slope = 0.5;
  double floor = 1e-6;
};

/// Default schedule: r0 = diameter / 4, theta = 1/2, m = 8.
RadiiSchedule default_schedule(const PointCloudSpace& space);

/// Max of G(f(y), f(x)) / rho(y, x) per annulus.
QuotientCurve abgr(const SampledQFunction& f, int x, const RadiiSchedule& schedule);

/// Density-trimmed sup per annulus: the least L such that the points with
/// quotient > L weigh at most delta times the annulus.
QuotientCurve abgr_approx(const SampledQFunction& f, int x, const RadiiSchedule& schedule, double delta);

/// Least-squares affine Q-differential at x from the samples in B(x, fit_radius).
/// A negative eqty_tol selects default_eqty_tolerance(f(x)).
AffineQGerm fit_differential(const SampledQFunction& f, int x, double fit_radius, const ChartPtr& chart,
                             double eqty_tol = -1.0);

/// Max of G(f(y), g(y)) / rho(y, x) per annulus.
QuotientCurve residual(const SampledQFunction& f, const AffineQGerm& g, int x, const RadiiSchedule& schedule);

/// Least-squares slope of log value against log radius over nonempty
/// annuli with positive value. NaN with fewer than two such annuli.
double loglog_slope(const QuotientCurve& curve);

bool is_differentiable(const QuotientCurve& residual, const DecisionRule& decision = {});

struct FunctionSplit {
  SampledQFunction g;
  SampledQFunction h;
  IndexSet neighborhood;
  Splitting<double> splitting;
  double radius;
};

/// g = pi_1 o f and h = pi_2 o f on the largest scheduled ball around x on
/// which f stays in the splitting neighborhood of f(x). None when f(x) is
/// diagonal at tolerance tol.
std::optional<FunctionSplit> split_function(const SampledQFunction& f, int x, double tol,
                                            const RadiiSchedule& schedule);

struct ReportOptions {
  /// Cutoff for A_f membership; when unset, 10 x the function's Lipschitz
  /// hint, or 1e6 without a hint.
  std::optional<double> infinity_threshold;
  std::optional<double> eqty_tol;
  std::optional<double> fit_radius;
  int threads = 1;
};

struct DiffVerdict {
  int index = 0;
  bool in_Af = false;
  double abgr_estimate = 0.0;  // +inf when the quotient could not be evaluated
  QuotientCurve abgr_curve;
  std::optional<AffineQGerm> germ;
  std::optional<QuotientCurve> residual;
  bool differentiable = false;
  /// The fit ball leaves the domain.
  bool boundary = false;
  std::string error;
};

double infinity_threshold(const SampledQFunction& f, const ReportOptions& options);

/// Verdict for a single domain point; errors are recorded, not thrown.
DiffVerdict diff_verdict(const SampledQFunction& f, int x, const RadiiSchedule& schedule, const ChartPtr& chart,
                         const DecisionRule& decision, const ReportOptions& options = {});

std::vector<DiffVerdict> differentiability_report(const SampledQFunction& f, const RadiiSchedule& schedule,
                                                  const ChartPtr& chart, const DecisionRule& decision,
                                                  const ReportOptions& options = {});

}  // namespace qstep
