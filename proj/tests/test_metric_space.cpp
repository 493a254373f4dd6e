#include <cmath>
#include <random>

#include <doctest.h>

#include "qstep/errors.hpp"
#include "qstep/metric_space.hpp"
#include "qstep/synth.hpp"

using namespace qstep;

namespace {

PointCloudSpace line_points(std::initializer_list<double> xs) {
  Eigen::MatrixXd m(1, xs.size());
  int c = 0;
  for (double x : xs) m(0, c++) = x;
  return PointCloudSpace::from_points(m);
}

int brute_ball_count(const PointCloudSpace& s, int x, double r) {
  int n = 0;
  for (int y = 0; y < s.size(); ++y) n += (s.points().col(y) - s.points().col(x)).norm() < r;
  return n;
}

}  // namespace

TEST_CASE("IndexSet") {
  const IndexSet a{5, 1, 3, 3};
  CHECK(a.indices() == std::vector<int>{1, 3, 5});
  CHECK(a.contains(3));
  CHECK(a.position(5) == 2);
  CHECK(a.position(4) == -1);
  const IndexSet b{3, 4};
  CHECK(set_union(a, b) == IndexSet{1, 3, 4, 5});
  CHECK(set_intersection(a, b) == IndexSet{3});
  CHECK(set_difference(a, b) == IndexSet{1, 5});
  CHECK_THROWS_AS(IndexSet({-1, 2}), std::out_of_range);
}

TEST_CASE("RadiiSchedule") {
  const RadiiSchedule s(1.0, 0.5, 3);
  CHECK(s.radii() == std::vector<double>{1.0, 0.5, 0.25, 0.125});
  CHECK_THROWS_AS(RadiiSchedule(0.0, 0.5, 3), PreconditionError);
  CHECK_THROWS_AS(RadiiSchedule(1.0, 1.0, 3), PreconditionError);
  CHECK_THROWS_AS(RadiiSchedule(1.0, 0.5, 1), PreconditionError);
}

TEST_CASE("space construction") {
  Eigen::MatrixXd table(3, 3);
  table << 0, 1, 2, 1, 0, 1, 2, 1, 0;
  const auto t = PointCloudSpace::from_distances(table);
  CHECK_FALSE(t.embedded());
  CHECK(t.distance(0, 2) == 2.0);
  CHECK(t.total_weight() == 3.0);

  Eigen::MatrixXd bad = table;
  bad(0, 2) = bad(2, 0) = 3.0;  // violates the triangle inequality
  CHECK_THROWS_AS(PointCloudSpace::from_distances(bad), PreconditionError);
  Eigen::MatrixXd asym = table;
  asym(0, 1) = 1.5;
  CHECK_THROWS_AS(PointCloudSpace::from_distances(asym), PreconditionError);
  CHECK_THROWS_AS(PointCloudSpace::from_points(Eigen::MatrixXd::Zero(1, 2), Eigen::Vector2d(1, 0)),
                  PreconditionError);
}

TEST_CASE("ball") {
  const auto unit = grid_space(11, 1, 0.0, 1.0);
  CHECK(ball(unit, 5, 1e-12) == IndexSet{5});
  const auto three = line_points({0, 1, 2});
  CHECK(ball(three, 1, 1.5) == IndexSet{0, 1, 2});
  CHECK(ball(three, 1, 1.0) == IndexSet{1});
  CHECK_THROWS_AS(ball(three, 7, 1.0), std::out_of_range);

  const auto grid = grid_space(100, 2, 0.0, 1.0);
  const int x = 50 + 100 * 50;
  CHECK(ball(grid, x, 0.1).size() == brute_ball_count(grid, x, 0.1));
}

TEST_CASE("measure") {
  Eigen::VectorXd w(5);
  w << 0.5, 1.5, 2.0, 0.25, 3.0;
  const auto s = PointCloudSpace::from_points(Eigen::MatrixXd::Random(2, 5), w);
  CHECK(measure(s, {}) == 0.0);
  CHECK(measure(s, {1, 3, 4}) == 1.5 + 0.25 + 3.0);
  CHECK(measure(grid_space(7, 1, 0, 1), IndexSet::range(7)) == 7.0);
  const IndexSet a{0, 1, 2}, b{2, 3};
  CHECK(measure(s, set_union(a, b)) + measure(s, set_intersection(a, b)) == measure(s, a) + measure(s, b));
}

TEST_CASE("doubling constant") {
  const auto one = line_points({0.0});
  CHECK(doubling_constant(one, RadiiSchedule(1.0, 0.5, 3), {0}) == 1.0);
  const auto grid = grid_space(256, 2, 0.0, 1.0);
  std::vector<int> centers;
  for (int i = 100; i < 156; i += 5) {
    for (int j = 100; j < 156; j += 5) centers.push_back(i + 256 * j);
  }
  const double K = doubling_constant(grid, RadiiSchedule(0.1, 0.8, 4), IndexSet(centers));
  CHECK(K >= 3.6);
  CHECK(K <= 4.6);
  const auto line = grid_space(1001, 1, 0.0, 1.0);
  const double K1 = doubling_constant(line, RadiiSchedule(0.1, 0.8, 4), {400, 500, 600});
  CHECK(K1 >= 1.8);
  CHECK(K1 <= 2.3);
  CHECK_THROWS_AS(doubling_constant(grid_space(5, 1, 0, 1), RadiiSchedule(0.1, 0.5, 3), {2}), PreconditionError);
}

TEST_CASE("ball comparison bound and full delta") {
  CHECK(ball_comparison_bound(2.0, 1.0) == 1.0);
  CHECK(ball_comparison_bound(2.0, 0.3) == 1.0);
  CHECK(ball_comparison_bound(2.0, 4.0) == 4.0);
  CHECK(ball_comparison_bound(3.0, 5.0) == 27.0);
  for (double t : {1.0, 1.5, 3.0, 6.0, 11.0}) {
    CHECK(ball_comparison_bound(2.5, 2 * t) <= 2.5 * ball_comparison_bound(2.5, t));
    CHECK(ball_comparison_bound(2.5, t) <= ball_comparison_bound(2.5, t + 0.5));
  }
  CHECK_THROWS_AS(ball_comparison_bound(0.5, 1.0), PreconditionError);
  CHECK(full_delta(1.0) == 0.25);
  CHECK(full_delta(2.0) == 0.1);
  CHECK(full_delta(3.0) == 0.05);
}

TEST_CASE("density ratio and interior points") {
  const int n = 101;
  const auto grid = grid_space(n, 2, 0.0, 1.0);
  std::vector<int> left;
  for (int y = 0; y < grid.size(); ++y) {
    if (grid.points()(0, y) <= 0.5) left.push_back(y);
  }
  const IndexSet L(left), all = IndexSet::range(grid.size());
  const int mid = 50 + n * 50;
  CHECK(density_ratio(grid, all, mid, 0.2) == 0.0);
  CHECK(density_ratio(grid, IndexSet{0}, mid, 0.2) == 1.0);
  const double half = density_ratio(grid, L, mid, 0.1);
  CHECK(half >= 0.45);
  CHECK(half <= 0.55);

  const RadiiSchedule sched(0.2, 0.5, 3);
  const int deep = 10 + n * 50;
  CHECK(classify_mu_interior(grid, L, deep, sched, 0.01));
  const int far = 95 + n * 50;
  CHECK_FALSE(classify_mu_interior(grid, L, far, sched, 0.5));
  CHECK_THROWS_AS(classify_mu_interior(grid, L, mid, RadiiSchedule(0.2, 0.1, 3), 0.1), PreconditionError);
}

TEST_CASE("cusp complement is a density point at the origin") {
  const int n = 201;
  const auto grid = grid_space(n, 2, -1.0, 1.0);
  std::vector<int> keep;
  for (int y = 0; y < grid.size(); ++y) {
    const double a = grid.points()(0, y), b = grid.points()(1, y);
    if (!(a > 0 && std::abs(b) <= a * a)) keep.push_back(y);
  }
  CHECK(classify_mu_interior(grid, IndexSet(keep), 100 + n * 100, RadiiSchedule(0.8, 0.5, 5), 0.1));
}

TEST_CASE("isolated points") {
  const auto pair = PointCloudSpace::from_points(Eigen::MatrixXd((Eigen::MatrixXd(1, 2) << 0, 5).finished()), {}, 1.0);
  CHECK(pair.atom_radius() == 1.0);
  CHECK(is_isolated(pair, 0));
  CHECK(is_isolated(pair, 1));

  Eigen::MatrixXd pts(2, 26);
  for (int i = 0; i < 25; ++i) pts.col(i) << (i % 5) * 0.1, (i / 5) * 0.1;
  pts.col(25) << 10, 10;
  const auto cloud = PointCloudSpace::from_points(pts);
  for (int i = 0; i < 26; ++i) CHECK(is_isolated(cloud, i) == (i == 25));
}

TEST_CASE("retraction") {
  const auto grid = grid_space(21, 2, 0.0, 1.0);
  std::vector<int> u;
  for (int y = 0; y < grid.size(); ++y) {
    if (grid.points()(1, y) < 0.5) u.push_back(y);
  }
  const IndexSet U(u);
  const auto r = retraction(grid, U, 0);
  for (int y : U) CHECK(r[y] == y);
  for (int y = 0; y < grid.size(); ++y) {
    CHECK(r[r[y]] == r[y]);
    // Exhaustive nearest point with smallest-index ties.
    int best = -1;
    double best_d = INFINITY;
    for (int z : U) {
      const double d = grid.distance(y, z);
      if (d < best_d) {
        best_d = d;
        best = z;
      }
    }
    CHECK(r[y] == best);
  }
  const auto c = retraction(grid, {7}, 0);
  CHECK(std::all_of(c.begin(), c.end(), [](int v) { return v == 7; }));
  CHECK_THROWS_AS(retraction(grid, {}, 0), PreconditionError);
}

TEST_CASE("fullness") {
  const int n = 101;
  const auto grid = grid_space(n, 2, 0.0, 1.0);
  const IndexSet all = IndexSet::range(grid.size());
  const int mid = 50 + n * 50;
  CHECK(is_full(grid, all, mid, 0.01, 0.3));
  CHECK_FALSE(is_full(grid, {mid}, mid, 0.1, 0.3));
  std::vector<int> left;
  for (int y = 0; y < grid.size(); ++y) {
    if (grid.points()(0, y) <= 0.5) left.push_back(y);
  }
  const IndexSet L(left);
  CHECK(is_full(grid, L, mid, 0.6, 0.2));
  CHECK_FALSE(is_full(grid, L, mid, 0.3, 0.2));
  CHECK_THROWS_AS(is_full(grid, L, 95 + n * 50, 0.5, 0.2), PreconditionError);
}

TEST_CASE("annulus bins and the finest third") {
  const auto grid = grid_space(41, 1, 0.0, 1.0);
  const RadiiSchedule s(0.4, 0.5, 3);
  const auto bins = annulus_bins(grid, 20, s);
  REQUIRE(bins.size() == 3);
  for (int k = 0; k < 3; ++k) {
    for (const auto& nb : bins[k]) {
      CHECK(nb.distance <= s.radius(k));
      CHECK(nb.distance > s.radius(k + 1));
    }
  }
  CHECK(bins[0].size() == 16);
  CHECK(finest_third_annuli({3, 0, 4, 5, 0, 6}) == std::vector<int>{3, 5});
  CHECK(finest_third_annuli({0, 0}).empty());
}
