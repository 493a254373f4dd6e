#include <cmath>

#include <doctest.h>

#include "qstep/diff.hpp"
#include "qstep/errors.hpp"
#include "qstep/synth.hpp"

using namespace qstep;

namespace {

QPoint scalar(double v) { return QPoint(Eigen::MatrixXd::Constant(1, 1, v)); }

SampledQFunction on_line(int n, double (*fn)(double)) {
  const auto space = grid_space(n, 1, 0.0, 1.0);
  std::vector<QPoint> values;
  for (int i = 0; i < n; ++i) values.push_back(scalar(fn(space.points()(0, i))));
  return SampledQFunction(space, IndexSet::range(n), std::move(values));
}

QuotientCurve curve(const std::vector<double>& values, double r0 = 1.0) {
  QuotientCurve c;
  double r = r0;
  for (double v : values) {
    c.points.push_back({r, r / 2, v, 1});
    r /= 2;
  }
  return c;
}

// Ordinary least squares slope of log v against log r.
double slope_oracle(const QuotientCurve& c) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (const auto& p : c.points) {
    if (p.count == 0 || !(p.value > 0)) continue;
    const double x = std::log(p.radius), y = std::log(p.value);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

TEST_CASE("SampledQFunction") {
  const auto space = grid_space(4, 1, 0.0, 1.0);
  const SampledQFunction f(space, {1, 3}, {scalar(1), scalar(3)});
  CHECK(f.contains(3));
  CHECK_FALSE(f.contains(2));
  CHECK(f.value(3) == scalar(3));
  CHECK_THROWS_AS(f.value(2), std::out_of_range);
  CHECK_THROWS_AS(SampledQFunction(space, {1, 3}, {scalar(1)}), PreconditionError);
  CHECK_THROWS_AS(SampledQFunction(space, {}, {}), PreconditionError);
  CHECK_THROWS_AS(SampledQFunction(space, {1, 2}, {scalar(1), QPoint::repeated(2, Eigen::VectorXd::Zero(1))}),
                  PreconditionError);
  const auto g = f.restrict_to({3});
  CHECK(g.domain() == IndexSet{3});
  CHECK_THROWS_AS(f.restrict_to({2}), std::out_of_range);
}

TEST_CASE("abgr") {
  const auto constant = on_line(101, [](double) { return 2.0; });
  const RadiiSchedule sched(0.25, 0.5, 5);
  for (const auto& p : abgr(constant, 50, sched).points) CHECK(p.value == 0.0);
  CHECK(abgr_approx(constant, 50, sched, 0.1).headline == 0.0);

  const auto identity = on_line(101, [](double t) { return t; });
  const QuotientCurve c = abgr(identity, 50, sched);
  CHECK(c.headline <= 1.0);
  CHECK(c.headline >= 1.0 - 1e-9);
  CHECK(c.nonempty() == 5);

  const auto parabola = on_line(101, [](double t) { return t * t; });
  const QuotientCurve full = abgr(parabola, 50, sched);
  const QuotientCurve trimmed = abgr_approx(parabola, 50, sched, 0.25);
  for (std::size_t k = 0; k < full.points.size(); ++k) CHECK(trimmed.points[k].value <= full.points[k].value);

  const auto sparse = on_line(3, [](double t) { return t; });
  CHECK_THROWS_AS(abgr(sparse, 1, RadiiSchedule(0.1, 0.5, 3)), PreconditionError);
}

TEST_CASE("loglog slope and the decision rule") {
  CHECK(is_differentiable(curve({0, 0, 0, 0})));
  CHECK_FALSE(is_differentiable(curve({0.3, 0.3, 0.3, 0.3})));
  std::vector<double> root;
  for (int k = 0; k < 6; ++k) root.push_back(0.7 * std::sqrt(std::ldexp(1.0, -k)));
  const QuotientCurve rc = curve(root);
  CHECK(loglog_slope(rc) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(is_differentiable(rc, DecisionRule{0.5 - 1e-9, 1e-6}));
  const QuotientCurve bumpy = curve({1.0, 0.4, 0.5, 0.1, 0.12});
  CHECK(loglog_slope(bumpy) == doctest::Approx(slope_oracle(bumpy)).epsilon(1e-12));
  CHECK(std::isnan(loglog_slope(curve({0.0, 0.0, 1.0}))));
  CHECK_THROWS_AS(is_differentiable(curve({1.0, 0.5})), PreconditionError);
}

TEST_CASE("fit_differential recovers affine maps") {
  SyntheticSpec spec;
  spec.generator = "affine";
  spec.q = 3;
  spec.k = 2;
  spec.dim = 2;
  spec.grid = 15;
  const auto f = synthesize(spec);
  const auto branches = affine_branches(spec);
  const auto chart = std::make_shared<const Chart>(Chart::identity(f.space()));
  const int x = 7 + 15 * 7;
  const AffineQGerm g = fit_differential(f, x, 0.25, chart);
  const Eigen::VectorXd at = f.space().points().col(x);
  for (int i = 0; i < 3; ++i) {
    CHECK((g.components()[i].l - branches[i].l).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((g.components()[i].p - (branches[i].p + branches[i].l * at)).cwiseAbs().maxCoeff() <= 1e-10);
  }
  CHECK(g.group_count() == 3);
  const QuotientCurve res = residual(f, g, x, default_schedule(f.space()));
  for (const auto& p : res.points) CHECK(p.value <= 1e-9);

  CHECK_THROWS_AS(fit_differential(f, x, 1e-3, chart), PreconditionError);

  // All samples on a line: the 2-D regression is rank deficient.
  const auto space = grid_space(9, 1, 0.0, 1.0);
  Eigen::MatrixXd plane(2, 9);
  plane.row(0) = space.points().row(0);
  plane.row(1) = space.points().row(0);
  const auto flat = PointCloudSpace::from_points(plane);
  std::vector<QPoint> values;
  for (int i = 0; i < 9; ++i) values.push_back(scalar(i));
  const SampledQFunction h(flat, IndexSet::range(9), values);
  const auto chart2 = std::make_shared<const Chart>(Chart::identity(flat));
  CHECK_THROWS_AS(fit_differential(h, 4, 0.5, chart2), PreconditionError);
}

TEST_CASE("residual rejects a germ based elsewhere") {
  const auto f = on_line(21, [](double t) { return t; });
  const auto chart = std::make_shared<const Chart>(Chart::identity(f.space()));
  const AffineQGerm wrong(chart, 10, {{Eigen::VectorXd::Constant(1, 7.0), Eigen::MatrixXd::Ones(1, 1)}}, {0});
  CHECK_THROWS_AS(residual(f, wrong, 10, RadiiSchedule(0.4, 0.5, 3)), PreconditionError);
}

TEST_CASE("split_function") {
  const auto f = synthesize([] {
    SyntheticSpec s;
    s.generator = "separated_smooth";
    s.q = 2;
    s.k = 2;
    s.dim = 2;
    s.grid = 31;
    return s;
  }());
  const int x = 15 + 31 * 15;
  const auto sched = default_schedule(f.space());
  const auto split = split_function(f, x, 1e-9, sched);
  REQUIRE(split);
  CHECK(split->g.q() == 1);
  CHECK(split->h.q() == 1);
  CHECK(split->neighborhood.contains(x));
  const auto local = RadiiSchedule(split->radius, 0.5, 4);
  const double af = abgr(f, x, local).headline;
  CHECK(abgr(split->g, x, local).headline <= af + 1e-9);
  CHECK(abgr(split->h, x, local).headline <= af + 1e-9);
  for (int y : split->neighborhood) CHECK(concatenate(split->g.value(y), split->h.value(y)) == f.value(y));

  const auto diag = on_line(11, [](double t) { return t; });
  CHECK_FALSE(split_function(diag, 5, 1e-9, RadiiSchedule(0.4, 0.5, 3)));
}

TEST_CASE("differentiability report on an affine function") {
  SyntheticSpec spec;
  spec.generator = "affine";
  spec.grid = 17;
  const auto f = synthesize(spec);
  const auto chart = std::make_shared<const Chart>(Chart::identity(f.space()));
  ReportOptions opt;
  const auto verdicts = differentiability_report(f, default_schedule(f.space()), chart, DecisionRule{}, opt);
  REQUIRE(verdicts.size() == 17u * 17u);
  int interior = 0;
  for (const auto& v : verdicts) {
    CHECK(v.in_Af);
    if (!v.boundary) {
      ++interior;
      CHECK(v.differentiable);
    }
  }
  CHECK(interior > 0);
  opt.threads = 3;
  const auto again = differentiability_report(f, default_schedule(f.space()), chart, DecisionRule{}, opt);
  for (std::size_t i = 0; i < verdicts.size(); ++i) {
    CHECK(again[i].abgr_estimate == verdicts[i].abgr_estimate);
    CHECK(again[i].differentiable == verdicts[i].differentiable);
  }
}
