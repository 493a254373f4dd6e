#include <cmath>

#include <doctest.h>

#include "qstep/errors.hpp"
#include "qstep/germs.hpp"
#include "qstep/synth.hpp"

using namespace qstep;

namespace {

GermComponent comp(Eigen::VectorXd p, Eigen::MatrixXd l) { return {std::move(p), std::move(l)}; }

Eigen::VectorXd v1(double a) { return Eigen::VectorXd::Constant(1, a); }
Eigen::MatrixXd m1(double a) { return Eigen::MatrixXd::Constant(1, 1, a); }

ChartPtr line_chart(int n) {
  return std::make_shared<const Chart>(Chart::identity(grid_space(n, 1, 0.0, 1.0)));
}

}  // namespace

TEST_CASE("charts") {
  const auto space = grid_space(5, 1, 0.0, 1.0);
  const Chart id = Chart::identity(space);
  CHECK(id.dim() == 1);
  CHECK(id.lipschitz_constant() == 1.0);
  CHECK(id.value(2)[0] == 0.5);

  Eigen::MatrixXd values(1, 3);
  values << 0.0, 0.5, 2.0;  // y -> 2y^2 on {0, 0.25, 0.5} is not 1-Lipschitz
  const Chart sq(space, {0, 1, 2}, values);
  CHECK(sq.lipschitz_constant() == doctest::Approx(6.0));
  CHECK(sq.contains(2));
  CHECK_FALSE(sq.contains(3));
  CHECK_THROWS_AS(sq.value(4), std::out_of_range);
  CHECK_THROWS_AS(Chart(space, {0, 1}, values), PreconditionError);
  CHECK_THROWS_AS(Chart(space, {}, Eigen::MatrixXd(1, 0)), PreconditionError);
}

TEST_CASE("eval_germ") {
  const auto chart = line_chart(11);
  const AffineQGerm g(chart, 0, {comp(v1(0), m1(1)), comp(v1(1), m1(-1))}, {0, 1});
  CHECK(eval_germ(g, 0) == g.base());
  const QPoint at = eval_germ(g, 5);
  CHECK(at.point(0)[0] == 0.5);
  CHECK(at.point(1)[0] == 0.5);
  CHECK_THROWS_AS(eval_germ(g, 11), std::out_of_range);

  const AffineQGerm flat = zero_germ(g);
  for (int y = 0; y < 11; ++y) CHECK(eval_germ(flat, y) == g.base());
}

TEST_CASE("AffineQGerm validation") {
  const auto chart = line_chart(5);
  CHECK_THROWS_AS(AffineQGerm(chart, 0, {}, {}), PreconditionError);
  CHECK_THROWS_AS(AffineQGerm(chart, 9, {comp(v1(0), m1(0))}, {0}), PreconditionError);
  CHECK_THROWS_AS(AffineQGerm(chart, 0, {comp(v1(0), Eigen::MatrixXd::Zero(1, 2))}, {0}), PreconditionError);
  CHECK_THROWS_AS(AffineQGerm(chart, 0, {comp(v1(0), m1(0))}, {0, 1}), PreconditionError);
}

TEST_CASE("enforce_eqty") {
  const auto chart = line_chart(5);
  const AffineQGerm apart = enforce_eqty(chart, 2, {comp(v1(0), m1(1)), comp(v1(1), m1(3))}, 1e-9);
  CHECK(apart.group_count() == 2);
  CHECK(apart.components()[0].l(0, 0) == 1.0);
  CHECK(apart.components()[1].l(0, 0) == 3.0);

  const AffineQGerm twin = enforce_eqty(chart, 2, {comp(v1(0.3), m1(0.7)), comp(v1(0.3), m1(0.7))}, 1e-9);
  CHECK(twin.group_count() == 1);
  CHECK(twin.components()[0].l(0, 0) == 0.7);
  CHECK(twin.components()[0].p[0] == 0.3);

  const AffineQGerm merged = enforce_eqty(chart, 2, {comp(v1(0), m1(1)), comp(v1(0), m1(3))}, 1e-9);
  CHECK(merged.group_count() == 1);
  CHECK(merged.components()[0].l(0, 0) == 2.0);
  CHECK(merged.components()[1].l(0, 0) == 2.0);

  // Near-equal p values chain transitively into one group.
  const AffineQGerm chain =
      enforce_eqty(chart, 2, {comp(v1(0), m1(0)), comp(v1(0.8e-9), m1(0)), comp(v1(1.6e-9), m1(3))}, 1e-9);
  CHECK(chain.group_count() == 1);
  CHECK(chain.components()[0].p == chain.components()[2].p);
  CHECK(chain.components()[0].l == chain.components()[2].l);

  // Enforcing twice changes nothing.
  const AffineQGerm again = enforce_eqty(chart, 2, merged.components(), 1e-9);
  for (int i = 0; i < 2; ++i) CHECK(again.components()[i].l == merged.components()[i].l);

  CHECK(eqty_groups({v1(0), v1(5), v1(0)}, 1e-9) == std::vector<int>{0, 1, 0});
}

TEST_CASE("germ_norm") {
  const auto chart = line_chart(41);
  const RadiiSchedule sched(0.4, 0.5, 4);
  const AffineQGerm zero(chart, 20, {comp(v1(1), m1(0)), comp(v1(4), m1(0))}, {0, 1});
  CHECK(germ_norm(zero, sched) == 0.0);
  const AffineQGerm one(chart, 20, {comp(v1(1), m1(-2.5))}, {0});
  CHECK(germ_norm(one, sched) == doctest::Approx(2.5).epsilon(1e-12));

  // On a 2-D grid the norm approaches the operator norm from below.
  const auto grid = grid_space(61, 2, 0.0, 1.0);
  const auto chart2 = std::make_shared<const Chart>(Chart::identity(grid));
  Eigen::MatrixXd l(2, 2);
  l << 1.0, 2.0, -0.5, 0.25;
  const double op = Eigen::JacobiSVD<Eigen::MatrixXd>(l).singularValues()(0);
  const AffineQGerm g(chart2, 30 + 61 * 30, {comp(Eigen::Vector2d(0, 0), l)}, {0});
  const double n = germ_norm(g, RadiiSchedule(0.4, 0.5, 4));
  CHECK(n <= op * (1 + 1e-12));
  CHECK(n >= 0.98 * op);
}

TEST_CASE("germ_distance") {
  const auto chart = line_chart(41);
  const RadiiSchedule sched(0.4, 0.5, 4);
  const AffineQGerm g1(chart, 20, {comp(v1(0), m1(1)), comp(v1(5), m1(-1))}, {0, 1});
  const AffineQGerm g2(chart, 20, {comp(v1(0), m1(1.5)), comp(v1(5), m1(-1))}, {0, 1});
  CHECK(germ_distance(g1, g1, sched) == 0.0);
  // One differing component: the distance is that component's own.
  CHECK(germ_distance(g1, g2, sched) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(germ_distance(g1, g2, sched) == germ_distance(g2, g1, sched));

  // Both components differ: bounded by the root sum of squares.
  const AffineQGerm g3(chart, 20, {comp(v1(0), m1(1.3)), comp(v1(5), m1(-1.4))}, {0, 1});
  const double d = germ_distance(g1, g3, sched);
  CHECK(d >= 0.4 - 1e-12);
  CHECK(d <= std::hypot(0.3, 0.4) + 1e-12);

  const AffineQGerm shifted(chart, 20, {comp(v1(0.1), m1(1)), comp(v1(5), m1(-1))}, {0, 1});
  CHECK_THROWS_AS(germ_distance(g1, shifted, sched), PreconditionError);
  const AffineQGerm elsewhere(chart, 21, {comp(v1(0), m1(1)), comp(v1(5), m1(-1))}, {0, 1});
  CHECK_THROWS_AS(germ_distance(g1, elsewhere, sched), PreconditionError);
  const AffineQGerm other_chart(line_chart(41), 20, {comp(v1(0), m1(1)), comp(v1(5), m1(-1))}, {0, 1});
  CHECK_THROWS_AS(germ_distance(g1, other_chart, sched), PreconditionError);
}
