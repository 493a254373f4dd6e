#include <cmath>
#include <random>

#include <doctest.h>

#include "qstep/errors.hpp"
#include "qstep/stepanov.hpp"
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

SyntheticSpec fixed(const std::string& generator, int grid) {
  SyntheticSpec s;
  s.generator = generator;
  s.grid = grid;
  s.q = 2;
  s.k = generator == "weierstrass_mix" ? 1 : 2;
  s.dim = 2;
  return s;
}

double pairwise_max(const SampledQFunction& f, const IndexSet& m) {
  double best = 0.0;
  for (int a : m) {
    for (int b : m) {
      if (a < b) best = std::max(best, qdist(f.value(a), f.value(b)) / f.space().distance(a, b));
    }
  }
  return best;
}

}  // namespace

TEST_CASE("stratify hand cases") {
  const auto constant = on_line(21, [](double) { return 0.3; });
  const Stratum s = stratify(constant, scalar(0.3), 1, 4);
  CHECK(s.members == IndexSet::range(21));
  CHECK(s.lip_certificate == 0.0);

  const auto identity = on_line(21, [](double t) { return t; });
  const Stratum t = stratify(identity, scalar(0.5), 2, 1);
  CHECK(t.members == IndexSet::range(21));
  CHECK(t.lip_certificate == doctest::Approx(1.0).epsilon(1e-12));

  // Only values within i / 2j of P qualify.
  const Stratum narrow = stratify(identity, scalar(0.5), 1, 4);
  for (int x : narrow.members) CHECK(std::abs(identity.value(x).point(0)[0] - 0.5) < 0.125);

  // A steep function fails the local 1-Lipschitz condition everywhere.
  const auto steep = on_line(21, [](double t) { return 3.0 * t; });
  CHECK(stratify(steep, scalar(1.5), 1, 1).members.empty());
  CHECK_THROWS_AS(stratify(identity, scalar(0.5), 0, 1), PreconditionError);
  CHECK_THROWS_AS(stratify(identity, QPoint::repeated(2, Eigen::VectorXd::Zero(1)), 1, 1), PreconditionError);
}

TEST_CASE("lipschitz_certificate matches the pairwise oracle") {
  const auto identity = on_line(31, [](double t) { return t; });
  CHECK(lipschitz_certificate(identity, IndexSet::range(31)) == doctest::Approx(1.0).epsilon(1e-12));
  const auto constant = on_line(31, [](double) { return 1.0; });
  CHECK(lipschitz_certificate(constant, IndexSet::range(31)) == 0.0);
  CHECK_THROWS_AS(lipschitz_certificate(identity, {4}), PreconditionError);

  const auto f = synthesize(fixed("weierstrass_mix", 20));
  std::mt19937_64 rng(9);
  for (int t = 0; t < 10; ++t) {
    std::vector<int> pick;
    for (int x = 0; x < 400; ++x) {
      if (rng() % 3 == 0) pick.push_back(x);
    }
    const IndexSet m(pick);
    CHECK(lipschitz_certificate(f, m) == pairwise_max(f, m));
  }

  // Table spaces take the exhaustive path.
  Eigen::MatrixXd table(3, 3);
  table << 0, 1, 2, 1, 0, 1, 2, 1, 0;
  const SampledQFunction g(PointCloudSpace::from_distances(table), IndexSet::range(3),
                           {scalar(0), scalar(3), scalar(2)});
  CHECK(lipschitz_certificate(g, IndexSet::range(3)) == 3.0);
}

TEST_CASE("value_net") {
  const auto f = synthesize(fixed("separated_smooth", 15));
  const double spacing = 0.1;
  const auto net = value_net(f, spacing);
  for (std::size_t a = 0; a < net.size(); ++a) {
    for (std::size_t b = a + 1; b < net.size(); ++b) CHECK(qdist(net[a], net[b]) >= spacing);
  }
  for (const auto& v : f.values()) {
    double nearest = INFINITY;
    for (const auto& p : net) nearest = std::min(nearest, qdist(v, p));
    CHECK(nearest < spacing);
  }
  CHECK_THROWS_AS(value_net(f, 0.0), PreconditionError);
}

TEST_CASE("stepanov_cover") {
  const auto f = synthesize(fixed("weierstrass_mix", 24));
  const auto net = value_net(f, 1.0 / 16.0);
  CoverOptions opt;
  const auto report = stepanov_cover(f, 2, 8, net, opt);
  CHECK(report.strata.size() == 2u * 8u * net.size());
  for (std::size_t s = 1; s < report.strata.size(); ++s) {
    const auto& a = report.strata[s - 1];
    const auto& b = report.strata[s];
    CHECK(std::tie(a.i, a.j, a.base) < std::tie(b.i, b.j, b.base));
  }
  IndexSet covered;
  for (const auto& s : report.strata) {
    covered = set_union(covered, s.members);
    // Each stratum agrees with a direct stratify call.
    if (s.j == 4 && s.i == 2 && s.base % 5 == 0) {
      CHECK(stratify(f, s.base_point, s.i, s.j).members == s.members);
    }
    if (s.members.size() >= 2) CHECK(s.lip_certificate <= 6.0 * s.i);
  }
  CHECK(covered == report.covered);
  CHECK(report.uncovered == set_difference(report.direct_Af, report.covered));

  opt.threads = 4;
  opt.stratify.threads = 4;
  const auto again = stepanov_cover(f, 2, 8, net, opt);
  for (std::size_t s = 0; s < report.strata.size(); ++s) {
    CHECK(again.strata[s].members == report.strata[s].members);
    const double a = again.strata[s].lip_certificate, b = report.strata[s].lip_certificate;
    CHECK(((std::isnan(a) && std::isnan(b)) || a == b));
  }

  CHECK_THROWS_AS(stepanov_cover(f, 0, 8, net), PreconditionError);
  CoverOptions approx;
  approx.stratify.variant = StratifyVariant::approximate;
  CHECK_THROWS_AS(stepanov_cover(f, 2, 8, net, approx), PreconditionError);
}

TEST_CASE("approximate strata contain the metric ones") {
  const auto f = synthesize(fixed("separated_smooth", 20));
  const auto net = value_net(f, 1.0 / 8.0);
  StratifyOptions metric, approx;
  approx.variant = StratifyVariant::approximate;
  approx.delta = 0.1;
  for (std::size_t p = 0; p < net.size(); p += 3) {
    const auto m = stratify(f, net[p], 2, 4, metric).members;
    const auto a = stratify(f, net[p], 2, 4, approx).members;
    CHECK(set_difference(m, a).empty());
  }
}

TEST_CASE("extend") {
  const auto f = on_line(9, [](double t) { return t * t; });
  const auto same = extend(f, f.domain());
  for (int x : f.domain()) CHECK(same.value(x) == f.value(x));
  const auto flat = extend(f, {4});
  for (int x = 0; x < 9; ++x) CHECK(flat.value(x) == f.value(4));
  CHECK_THROWS_AS(extend(f, {}), PreconditionError);

  // Values off C come from the nearest point of C, ties to the smaller index.
  const auto part = extend(f, {2, 6});
  CHECK(part.value(4) == f.value(2));
  CHECK(part.value(5) == f.value(6));
  CHECK(part.value(8) == f.value(6));

  // f defined on a subset: the extension covers the whole space.
  const SampledQFunction g(grid_space(5, 1, 0, 1), {1, 3}, {scalar(1), scalar(3)});
  const auto whole = extend(g, g.domain());
  CHECK(whole.domain() == IndexSet::range(5));
  CHECK(whole.value(0) == scalar(1));
  CHECK(whole.value(4) == scalar(3));
}

TEST_CASE("extension bound") {
  const auto constant = on_line(41, [](double) { return 5.0; });
  const IndexSet C = [] {
    std::vector<int> v;
    for (int i = 0; i <= 20; ++i) v.push_back(i);
    return IndexSet(v);
  }();
  const RadiiSchedule sched(0.4, 0.5, 4);
  const auto ext = extend(constant, C);
  const auto check = extension_bound_check(constant, C, ext, 20, sched);
  CHECK(check.lhs == 0.0);
  CHECK(check.ok);
  CHECK_THROWS_AS(extension_bound_check(constant, C, ext, 30, sched), PreconditionError);

  const auto f = synthesize(fixed("separated_smooth", 25));
  std::vector<int> half;
  for (int x : f.domain()) {
    if (f.space().points()(0, x) < 0.0) half.push_back(x);
  }
  const IndexSet H(half);
  const auto fe = extend(f, H);
  for (int x : H) {
    if (std::abs(f.space().points()(0, x) + 1.0 / 48.0) < 1e-9) {
      CHECK(extension_bound_check(f, H, fe, x, default_schedule(f.space())).ok);
    }
  }
}

TEST_CASE("diagonal_set") {
  SyntheticSpec d;
  d.generator = "diagonal";
  d.grid = 8;
  const auto diag = synthesize(d);
  CHECK(diagonal_set(diag, 1e-12) == diag.domain());

  SyntheticSpec a;
  a.generator = "affine";
  a.grid = 8;
  CHECK(diagonal_set(synthesize(a), 1e-9).empty());

  const auto bp = synthesize(fixed("branchpoint", 33));
  CHECK(diagonal_set(bp, 1e-9) == IndexSet{16 + 33 * 16});
}
