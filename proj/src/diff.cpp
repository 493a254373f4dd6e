#include "qstep/diff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "qstep/detail/parallel.hpp"
#include "qstep/errors.hpp"

namespace qstep {

SampledQFunction::SampledQFunction(PointCloudSpace space, IndexSet domain, std::vector<QPoint> values)
    : space_(std::move(space)), domain_(std::move(domain)), values_(std::move(values)) {
  if (domain_.empty()) throw PreconditionError("SampledQFunction: empty domain");
  if (static_cast<int>(values_.size()) != domain_.size()) {
    throw PreconditionError("SampledQFunction: expected one value per domain point");
  }
  for (const auto& v : values_) {
    if (v.q() != values_.front().q() || v.k() != values_.front().k()) {
      throw PreconditionError("SampledQFunction: values differ in Q or k");
    }
  }
  position_.assign(space_.size(), -1);
  for (int c = 0; c < domain_.size(); ++c) {
    space_.check_index(domain_[c]);
    position_[domain_[c]] = c;
  }
}

const QPoint& SampledQFunction::value(int x) const {
  if (!contains(x)) throw std::out_of_range("point " + std::to_string(x) + " is not in the domain");
  return values_[position_[x]];
}

SampledQFunction SampledQFunction::restrict_to(const IndexSet& subset) const {
  std::vector<QPoint> values;
  values.reserve(subset.size());
  for (int x : subset) values.push_back(value(x));
  SampledQFunction out(space_, subset, std::move(values));
  out.lipschitz_hint = lipschitz_hint;
  return out;
}

int QuotientCurve::nonempty() const {
  return static_cast<int>(std::count_if(points.begin(), points.end(), [](const CurvePoint& p) { return p.count > 0; }));
}

RadiiSchedule default_schedule(const PointCloudSpace& space) {
  const double diam = space.diameter();
  if (!(diam > 0.0)) throw PreconditionError("default_schedule: space has zero diameter");
  return RadiiSchedule(0.25 * diam, 0.5, 8);
}

namespace {

// Scheduled annuli around x restricted to `keep`.
template <typename Keep>
std::vector<std::vector<Neighbor>> domain_bins(const PointCloudSpace& space, int x, const RadiiSchedule& schedule,
                                               Keep&& keep) {
  auto bins = annulus_bins(space, x, schedule);
  for (auto& bin : bins) std::erase_if(bin, [&](const Neighbor& nb) { return !keep(nb.index); });
  return bins;
}

// Fills radii and counts of a curve from its bins; values are set by the caller.
QuotientCurve curve_frame(const std::vector<std::vector<Neighbor>>& bins, const RadiiSchedule& schedule) {
  QuotientCurve curve;
  for (int k = 0; k < schedule.m(); ++k) {
    curve.points.push_back({schedule.radius(k), schedule.radius(k + 1), 0.0,
                            static_cast<int>(bins[k].size())});
  }
  return curve;
}

void finish_headline(QuotientCurve& curve, const char* what) {
  std::vector<int> counts;
  for (const auto& p : curve.points) counts.push_back(p.count);
  const auto finest = finest_third_annuli(counts);
  if (finest.empty()) {
    throw PreconditionError(std::string(what) + ": no domain points in the scheduled annuli");
  }
  curve.headline = 0.0;
  for (int k : finest) curve.headline = std::max(curve.headline, curve.points[k].value);
}

void check_domain(const SampledQFunction& f, int x, const char* what) {
  f.space().check_index(x);
  if (!f.contains(x)) throw PreconditionError(std::string(what) + ": point " + std::to_string(x) + " is not in the domain");
}

}  // namespace

QuotientCurve abgr(const SampledQFunction& f, int x, const RadiiSchedule& schedule) {
  check_domain(f, x, "abgr");
  const auto bins = domain_bins(f.space(), x, schedule, [&](int y) { return f.contains(y); });
  QuotientCurve curve = curve_frame(bins, schedule);
  const QPoint& fx = f.value(x);
  for (int k = 0; k < schedule.m(); ++k) {
    double best = 0.0;
    for (const auto& nb : bins[k]) best = std::max(best, qdist(f.value(nb.index), fx) / nb.distance);
    curve.points[k].value = best;
  }
  finish_headline(curve, "abgr");
  return curve;
}

QuotientCurve abgr_approx(const SampledQFunction& f, int x, const RadiiSchedule& schedule, double delta) {
  if (!(delta >= 0.0 && delta < 1.0)) throw PreconditionError("abgr_approx: delta must lie in [0, 1)");
  check_domain(f, x, "abgr_approx");
  const auto bins = domain_bins(f.space(), x, schedule, [&](int y) { return f.contains(y); });
  QuotientCurve curve = curve_frame(bins, schedule);
  const QPoint& fx = f.value(x);
  for (int k = 0; k < schedule.m(); ++k) {
    std::vector<std::pair<double, double>> quotients;  // (quotient, weight)
    double total = 0.0;
    for (const auto& nb : bins[k]) {
      const double w = f.space().weight(nb.index);
      quotients.emplace_back(qdist(f.value(nb.index), fx) / nb.distance, w);
      total += w;
    }
    std::sort(quotients.begin(), quotients.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });
    // Walk groups of equal quotient from the top; the answer is the first
    // value whose inclusion pushes the mass above delta * total.
    const double allowed = delta * total;
    double above = 0.0;
    double value = 0.0;
    for (std::size_t s = 0; s < quotients.size();) {
      std::size_t e = s;
      double group = 0.0;
      while (e < quotients.size() && quotients[e].first == quotients[s].first) group += quotients[e++].second;
      if (above + group > allowed) {
        value = quotients[s].first;
        break;
      }
      above += group;
      s = e;
    }
    curve.points[k].value = value;
  }
  finish_headline(curve, "abgr_approx");
  return curve;
}

AffineQGerm fit_differential(const SampledQFunction& f, int x, double fit_radius, const ChartPtr& chart,
                             double eqty_tol) {
  check_domain(f, x, "fit_differential");
  if (!chart) throw PreconditionError("fit_differential: null chart");
  if (!chart->contains(x)) throw PreconditionError("fit_differential: base point outside the chart domain");
  if (!(fit_radius > 0.0)) throw PreconditionError("fit_differential: fit radius must be positive");
  const QPoint& base = f.value(x);
  const int q = base.q(), k = base.k(), n = chart->dim();
  if (eqty_tol < 0.0) eqty_tol = default_eqty_tolerance(base);

  std::vector<Eigen::VectorXd> p(q);
  for (int i = 0; i < q; ++i) p[i] = base.point(i);
  const std::vector<int> group = eqty_groups(p, eqty_tol);
  const int groups = *std::max_element(group.begin(), group.end()) + 1;

  std::vector<Neighbor> samples;
  for (const auto& nb : f.space().neighbors(x, fit_radius)) {
    if (nb.index != x && f.contains(nb.index) && chart->contains(nb.index)) samples.push_back(nb);
  }
  if (static_cast<int>(samples.size()) < (n + 1) * groups) {
    throw PreconditionError("fit_differential: " + std::to_string(samples.size()) + " samples within radius " +
                            std::to_string(fit_radius) + ", need " + std::to_string((n + 1) * groups));
  }

  std::vector<int> rows(groups, 0);
  for (int g : group) rows[g] += static_cast<int>(samples.size());
  std::vector<Eigen::MatrixXd> design(groups), target(groups);
  for (int g = 0; g < groups; ++g) {
    design[g].resize(rows[g], n);
    target[g].resize(rows[g], k);
  }
  std::vector<int> filled(groups, 0);
  const Eigen::VectorXd phi_x = chart->value(x);
  for (const auto& nb : samples) {
    const QPoint& fy = f.value(nb.index);
    const auto perm = optimal_matching(base, fy);
    const double w = 1.0 / nb.distance;  // square root of the 1/rho^2 weight
    const Eigen::VectorXd dphi = chart->value(nb.index) - phi_x;
    for (int i = 0; i < q; ++i) {
      const int g = group[i];
      const int r = filled[g]++;
      design[g].row(r) = w * dphi.transpose();
      target[g].row(r) = w * (fy.point(perm[i]) - p[i]).transpose();
    }
  }

  std::vector<GermComponent> components(q);
  for (int g = 0; g < groups; ++g) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design[g]);
    if (qr.rank() < n) {
      throw PreconditionError("fit_differential: rank-deficient regression (rank " + std::to_string(qr.rank()) +
                              " < " + std::to_string(n) + ")");
    }
    const Eigen::MatrixXd lt = qr.solve(target[g]);
    const Eigen::MatrixXd l = lt.transpose();
    for (int i = 0; i < q; ++i) {
      if (group[i] == g) components[i] = {p[i], l};
    }
  }
  return enforce_eqty(chart, x, std::move(components), eqty_tol);
}

QuotientCurve residual(const SampledQFunction& f, const AffineQGerm& g, int x, const RadiiSchedule& schedule) {
  check_domain(f, x, "residual");
  if (g.base_index() != x) throw PreconditionError("residual: germ is based at a different point");
  const QPoint& fx = f.value(x);
  if (g.q() != fx.q() || g.k() != fx.k()) throw PreconditionError("residual: germ and function differ in Q or k");
  const double scale = 1.0 + fx.points().cwiseAbs().maxCoeff();
  if (qdist(g.base(), fx) > 1e-8 * scale * fx.q()) {
    throw PreconditionError("residual: germ base value differs from f(x)");
  }
  const Chart& chart = *g.chart();
  const auto bins =
      domain_bins(f.space(), x, schedule, [&](int y) { return f.contains(y) && chart.contains(y); });
  QuotientCurve curve = curve_frame(bins, schedule);
  for (int k = 0; k < schedule.m(); ++k) {
    double best = 0.0;
    for (const auto& nb : bins[k]) {
      best = std::max(best, qdist(f.value(nb.index), eval_germ(g, nb.index)) / nb.distance);
    }
    curve.points[k].value = best;
  }
  finish_headline(curve, "residual");
  return curve;
}

double loglog_slope(const QuotientCurve& curve) {
  std::vector<double> lx, ly;
  for (const auto& p : curve.points) {
    if (p.count > 0 && p.value > 0.0) {
      lx.push_back(std::log(p.radius));
      ly.push_back(std::log(p.value));
    }
  }
  if (lx.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  const double n = static_cast<double>(lx.size());
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / n;
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  return sxy / sxx;
}

bool is_differentiable(const QuotientCurve& residual, const DecisionRule& decision) {
  if (residual.nonempty() < 3) {
    throw PreconditionError("is_differentiable: need at least 3 nonempty annuli, have " +
                            std::to_string(residual.nonempty()));
  }
  const CurvePoint* finest = nullptr;
  for (const auto& p : residual.points) {
    if (p.count > 0) finest = &p;
  }
  if (finest->value <= decision.floor) return true;
  const double slope = loglog_slope(residual);
  return !std::isnan(slope) && slope >= decision.slope;
}

std::optional<FunctionSplit> split_function(const SampledQFunction& f, int x, double tol,
                                            const RadiiSchedule& schedule) {
  check_domain(f, x, "split_function");
  const QPoint& fx = f.value(x);
  if (is_diagonal(fx, tol)) return std::nullopt;
  auto split = separation_split(fx);
  if (!split) return std::nullopt;

  // Distance to the nearest domain point whose value leaves U.
  double escape = std::numeric_limits<double>::infinity();
  for (const auto& nb : f.space().neighbors(x, schedule.r0())) {
    if (f.contains(nb.index) && nb.distance < escape && !in_neighborhood(*split, f.value(nb.index))) {
      escape = nb.distance;
    }
  }
  int chosen = -1;
  for (int k = 0; k <= schedule.m(); ++k) {
    if (schedule.radius(k) <= escape) {
      chosen = k;
      break;
    }
  }
  if (chosen < 0) {
    throw PreconditionError("split_function: f leaves the splitting neighborhood at every scheduled radius");
  }
  const double radius = schedule.radius(chosen);
  std::vector<int> members;
  for (const auto& nb : f.space().neighbors(x, radius)) {
    if (f.contains(nb.index)) members.push_back(nb.index);
  }
  IndexSet neighborhood(std::move(members));
  std::vector<QPoint> gv, hv;
  for (int y : neighborhood) {
    auto [first, second] = project_split(*split, f.value(y));
    gv.push_back(std::move(first));
    hv.push_back(std::move(second));
  }
  return FunctionSplit{SampledQFunction(f.space(), neighborhood, std::move(gv)),
                       SampledQFunction(f.space(), neighborhood, std::move(hv)), neighborhood, *split, radius};
}

double infinity_threshold(const SampledQFunction& f, const ReportOptions& options) {
  if (options.infinity_threshold) return *options.infinity_threshold;
  if (f.lipschitz_hint && std::isfinite(*f.lipschitz_hint)) return 10.0 * *f.lipschitz_hint;
  return 1e6;
}

DiffVerdict diff_verdict(const SampledQFunction& f, int x, const RadiiSchedule& schedule, const ChartPtr& chart,
                         const DecisionRule& decision, const ReportOptions& options) {
  DiffVerdict v;
  v.index = x;
  try {
    v.abgr_curve = abgr(f, x, schedule);
    v.abgr_estimate = v.abgr_curve.headline;
  } catch (const std::exception& e) {
    v.abgr_estimate = std::numeric_limits<double>::infinity();
    v.error = e.what();
    return v;
  }
  v.in_Af = v.abgr_estimate <= infinity_threshold(f, options);
  if (!v.in_Af) return v;
  double radius = 0.0;
  if (options.fit_radius) {
    radius = *options.fit_radius;
  } else {
    // Outer edge of the finest third, widened annulus by annulus until the
    // ball holds 2 (N + 1) Q samples.
    std::vector<int> counts;
    for (const auto& p : v.abgr_curve.points) counts.push_back(p.count);
    const auto& pts = v.abgr_curve.points;
    const int want = 2 * (chart->dim() + 1) * f.q();
    int k = finest_third_annuli(counts).front();
    int inside = 0;
    for (int a = k; a < static_cast<int>(pts.size()); ++a) inside += pts[a].count;
    while (inside < want && k > 0) inside += pts[--k].count;
    radius = pts[k].radius;
  }
  try {
    v.boundary = density_ratio(f.space(), f.domain(), x, radius) > 0.0;
    v.germ = fit_differential(f, x, radius, chart, options.eqty_tol.value_or(-1.0));
    v.residual = residual(f, *v.germ, x, schedule);
    v.differentiable = is_differentiable(*v.residual, decision);
  } catch (const std::exception& e) {
    v.error = e.what();
    v.differentiable = false;
  }
  return v;
}

std::vector<DiffVerdict> differentiability_report(const SampledQFunction& f, const RadiiSchedule& schedule,
                                                  const ChartPtr& chart, const DecisionRule& decision,
                                                  const ReportOptions& options) {
  const auto& domain = f.domain();
  std::vector<DiffVerdict> verdicts(domain.size());
  detail::parallel_for(domain.size(), options.threads, [&](int c) {
    verdicts[c] = diff_verdict(f, domain[c], schedule, chart, decision, options);
  });
  return verdicts;
}

}  // namespace qstep
