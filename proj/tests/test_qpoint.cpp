#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <doctest.h>

#include "qstep/errors.hpp"
#include "qstep/qpoint.hpp"

using namespace qstep;

namespace {

QPoint line(std::initializer_list<double> xs) {
  Eigen::MatrixXd m(1, xs.size());
  int c = 0;
  for (double x : xs) m(0, c++) = x;
  return QPoint(m);
}

QPoint random_point(std::mt19937_64& rng, int q, int k) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::MatrixXd m(k, q);
  for (int i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return QPoint(m);
}

// Squared cost of matching column i of a to column perm[i] of b.
double cost(const QPoint& a, const QPoint& b, const std::vector<int>& perm) {
  double s = 0.0;
  for (int i = 0; i < a.q(); ++i) s += (a.point(i) - b.point(perm[i])).squaredNorm();
  return s;
}

double enumerate_min(const QPoint& a, const QPoint& b) {
  std::vector<int> perm(a.q());
  std::iota(perm.begin(), perm.end(), 0);
  double best = INFINITY;
  do best = std::min(best, cost(a, b, perm));
  while (std::next_permutation(perm.begin(), perm.end()));
  return std::sqrt(best);
}

}  // namespace

TEST_CASE("canonical order and equality") {
  CHECK(line({3, 1, 2}) == line({1, 2, 3}));
  CHECK(line({-0.0, 1}) == line({0.0, 1}));
  CHECK_THROWS_AS(line({NAN, 1}), PreconditionError);
  CHECK_THROWS_AS(QPoint(Eigen::MatrixXd(1, 0)), PreconditionError);
  const QPoint r = QPoint::repeated(3, Eigen::Vector2d(1, 2));
  CHECK(r.q() == 3);
  CHECK(r.k() == 2);
}

TEST_CASE("qdist hand values") {
  CHECK(qdist(line({0, 10}), line({1, 11})) == doctest::Approx(std::sqrt(2.0)));
  CHECK(enumerate_min(line({0, 10}), line({11, 1})) == doctest::Approx(std::sqrt(2.0)));
  CHECK(qdist(line({2}), line({-1.5})) == 3.5);
  CHECK(qdist_bruteforce(line({2}), line({-1.5})) == 3.5);
  CHECK(qdist(line({4, 4}), line({4, 4})) == 0.0);
  CHECK(qdist_bruteforce(line({4, 4}), line({4, 4})) == 0.0);
}

TEST_CASE("qdist rejects mismatched shapes") {
  CHECK_THROWS_AS(qdist(line({0, 1}), line({0, 1, 2})), PreconditionError);
  Eigen::MatrixXd two(2, 2);
  two.setZero();
  CHECK_THROWS_AS(qdist(line({0, 1}), QPoint(two)), PreconditionError);
  std::mt19937_64 rng(3);
  CHECK_THROWS_AS(qdist_bruteforce(random_point(rng, 9, 1), random_point(rng, 9, 1)), PreconditionError);
}

TEST_CASE("qdist matches permutation enumeration") {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 300; ++t) {
    const int q = 1 + t % 7, k = 1 + t % 3;
    const QPoint a = random_point(rng, q, k), b = random_point(rng, q, k);
    CHECK(qdist(a, b) == doctest::Approx(enumerate_min(a, b)).epsilon(1e-12));
    CHECK(qdist(a, b) == qdist(b, a));
  }
}

TEST_CASE("qdist handles large Q") {
  std::mt19937_64 rng(5);
  const QPoint a = random_point(rng, 20, 2);
  CHECK(qdist(a, a) == 0.0);
  // A translated copy matches column for column.
  Eigen::MatrixXd shifted = a.points();
  shifted.row(0).array() += 1e-3;
  CHECK(qdist(a, QPoint(shifted)) == doctest::Approx(std::sqrt(20.0) * 1e-3).epsilon(1e-9));
}

TEST_CASE("optimal_matching") {
  std::mt19937_64 rng(7);
  const QPoint a = random_point(rng, 4, 2);
  const auto id = optimal_matching(a, a);
  CHECK(id == std::vector<int>{0, 1, 2, 3});
  const QPoint same = QPoint::repeated(4, Eigen::Vector2d(1, 1));
  CHECK(optimal_matching(same, same) == std::vector<int>{0, 1, 2, 3});
  for (int t = 0; t < 50; ++t) {
    const QPoint x = random_point(rng, 4, 2), y = random_point(rng, 4, 2);
    const auto perm = optimal_matching(x, y);
    CHECK(cost(x, y, perm) == doctest::Approx(std::pow(qdist(x, y), 2)).epsilon(1e-12));
  }
  // Ties resolve to the lexicographically smallest permutation.
  const QPoint p = line({0, 2}), m = line({1, 1});
  CHECK(optimal_matching(p, m) == std::vector<int>{0, 1});
}

TEST_CASE("is_diagonal") {
  const Eigen::Vector2d p(0.5, -1.0);
  const auto d = is_diagonal(QPoint::repeated(3, p), 0.0);
  REQUIRE(d);
  CHECK(*d == p);
  CHECK_FALSE(is_diagonal(line({0, 1}), 0.5));
  const auto c = is_diagonal(line({1.0 - 0.2, 1.0 + 0.2}), 0.4);
  REQUIRE(c);
  CHECK((*c)[0] == doctest::Approx(1.0));
  CHECK_THROWS_AS(is_diagonal(line({0, 1}), -1.0), PreconditionError);
}

TEST_CASE("separation_split") {
  CHECK_FALSE(separation_split(QPoint::repeated(3, Eigen::Vector2d(1, 2))));

  const auto s = separation_split(line({0, 0, 9}));
  REQUIRE(s);
  CHECK(s->r == 2);
  CHECK(s->epsilon == 9.0);
  CHECK(s->cluster_sizes() == std::vector<int>{2, 1});

  const auto t = separation_split(line({0, 0.1, 10, 10.1}));
  REQUIRE(t);
  CHECK(t->r == 2);
  CHECK(t->cluster_sizes() == std::vector<int>{2, 2});
  CHECK(t->epsilon == doctest::Approx(9.9));
  const auto [first, second] = project_split(*t, t->base);
  CHECK(first == line({0, 0.1}));
  CHECK(second == line({10, 10.1}));
}

TEST_CASE("separation_split clusters satisfy the defining inequalities") {
  std::mt19937_64 rng(13);
  for (int t = 0; t < 100; ++t) {
    const QPoint P = random_point(rng, 2 + t % 5, 1 + t % 2);
    const auto s = separation_split(P);
    REQUIRE(s);
    for (int i = 0; i < P.q(); ++i) {
      for (int j = i + 1; j < P.q(); ++j) {
        const double d = (P.point(i) - P.point(j)).norm();
        if (s->labels[i] == s->labels[j]) {
          CHECK(d < s->epsilon / 3.0);
        } else {
          CHECK(d >= s->epsilon);
        }
      }
    }
    CHECK(s->labels[0] == 0);
  }
}

TEST_CASE("splitting neighborhood") {
  const auto s = separation_split(line({0, 0, 9}));
  REQUIRE(s);
  CHECK(in_neighborhood(*s, s->base));
  CHECK_FALSE(in_neighborhood(*s, line({0, 0, 20})));
  CHECK_FALSE(in_neighborhood(*s, line({0, 9, 9})));
  CHECK_THROWS_AS(project_split(*s, line({0, 9, 9})), PreconditionError);

  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double reach = s->epsilon / 6.0;
  for (int t = 0; t < 200; ++t) {
    const QPoint a = line({0.99 * reach * u(rng), 0.99 * reach * u(rng), 9 + 0.99 * reach * u(rng)});
    const QPoint b = line({0.99 * reach * u(rng), 0.99 * reach * u(rng), 9 + 0.99 * reach * u(rng)});
    REQUIRE(in_neighborhood(*s, a));
    const auto [a1, a2] = project_split(*s, a);
    const auto [b1, b2] = project_split(*s, b);
    const double g = enumerate_min(a, b), g1 = enumerate_min(a1, b1), g2 = enumerate_min(a2, b2);
    CHECK(std::abs(g * g - g1 * g1 - g2 * g2) <= 1e-12);
    CHECK(concatenate(a1, a2) == a);
  }
}
