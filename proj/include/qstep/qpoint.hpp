#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "qstep/detail/assignment.hpp"
#include "qstep/errors.hpp"

namespace qstep {

/// An unordered Q-tuple of points of R^k, stored as a k x Q matrix whose
/// columns are kept in lexicographic order so that multiset equality is
/// plain equality of the stored matrices.
template <typename Scalar>
class BasicQPoint {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  BasicQPoint() = default;

  /// `points` is k x Q; columns are canonicalized on construction.
  explicit BasicQPoint(Matrix points) : points_(std::move(points)) {
    if (points_.cols() == 0) throw PreconditionError("QPoint: Q must be positive");
    if (points_.rows() == 0) throw PreconditionError("QPoint: k must be positive");
    if (!points_.allFinite()) throw PreconditionError("QPoint: non-finite coordinate");
    canonicalize();
  }

  /// Q copies of p, i.e. Q[[p]].
  static BasicQPoint repeated(int q, const Vector& p) {
    return BasicQPoint(p.replicate(1, q));
  }

  int q() const { return static_cast<int>(points_.cols()); }
  int k() const { return static_cast<int>(points_.rows()); }
  const Matrix& points() const { return points_; }
  auto point(int i) const { return points_.col(i); }

  friend bool operator==(const BasicQPoint& a, const BasicQPoint& b) {
    return a.points_.rows() == b.points_.rows() && a.points_.cols() == b.points_.cols() &&
           a.points_ == b.points_;
  }

 private:
  void canonicalize() {
    // Map -0.0 to +0.0 so that equal values are also bitwise equal.
    points_ = points_.array() + Scalar(0);
    const int n = q();
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      for (int c = 0; c < k(); ++c) {
        if (points_(c, a) != points_(c, b)) return points_(c, a) < points_(c, b);
      }
      return false;
    });
    Matrix sorted(points_.rows(), n);
    for (int i = 0; i < n; ++i) sorted.col(i) = points_.col(order[i]);
    points_ = std::move(sorted);
  }

  Matrix points_;
};

using QPoint = BasicQPoint<double>;

namespace detail {

template <typename Scalar>
void check_compatible(const BasicQPoint<Scalar>& a, const BasicQPoint<Scalar>& b) {
  if (a.q() != b.q() || a.k() != b.k()) {
    throw PreconditionError("Q-points differ in shape: (Q=" + std::to_string(a.q()) +
                            ", k=" + std::to_string(a.k()) + ") vs (Q=" + std::to_string(b.q()) +
                            ", k=" + std::to_string(b.k()) + ")");
  }
}

template <typename Scalar>
bool lex_less(const BasicQPoint<Scalar>& a, const BasicQPoint<Scalar>& b) {
  return std::lexicographical_compare(a.points().data(), a.points().data() + a.points().size(),
                                      b.points().data(), b.points().data() + b.points().size());
}

template <typename Scalar>
Scalar squared_distance(const BasicQPoint<Scalar>& a, int i, const BasicQPoint<Scalar>& b, int j) {
  Scalar sum(0);
  for (int c = 0; c < a.k(); ++c) {
    const Scalar d = a.points()(c, i) - b.points()(c, j);
    sum += d * d;
  }
  return sum;
}

template <typename Scalar>
Scalar point_distance(const BasicQPoint<Scalar>& a, int i, const BasicQPoint<Scalar>& b, int j) {
  using std::sqrt;
  return sqrt(squared_distance(a, i, b, j));
}

// Squared-distance cost matrix, row-major, into `out` (size q*q).
template <typename Scalar>
void cost_matrix(const BasicQPoint<Scalar>& a, const BasicQPoint<Scalar>& b, std::span<Scalar> out) {
  const int q = a.q();
  for (int i = 0; i < q; ++i) {
    for (int j = 0; j < q; ++j) out[i * q + j] = squared_distance(a, i, b, j);
  }
}

}  // namespace detail

/// Matching metric: min over permutations s of sqrt(sum_i |A_i - B_s(i)|^2),
/// computed as a linear assignment on squared costs.
template <typename Scalar>
Scalar qdist(const BasicQPoint<Scalar>& a, const BasicQPoint<Scalar>& b) {
  using std::sqrt;
  detail::check_compatible(a, b);
  if (a == b) return Scalar(0);
  // Solve with the lexicographically smaller argument first so that the
  // result is symmetric bit for bit.
  if (detail::lex_less(b, a)) return qdist(b, a);
  const int q = a.q();
  if (q == 1) return sqrt(detail::squared_distance(a, 0, b, 0));
  if (q == 2) {
    const Scalar straight = detail::squared_distance(a, 0, b, 0) + detail::squared_distance(a, 1, b, 1);
    const Scalar crossed = detail::squared_distance(a, 0, b, 1) + detail::squared_distance(a, 1, b, 0);
    return sqrt(std::min(straight, crossed));
  }
  std::array<Scalar, 256> cost_s;
  std::array<int, 16> assign_s;
  std::vector<Scalar> cost_h;
  std::vector<int> assign_h;
  std::span<Scalar> cost;
  std::span<int> assignment;
  if (q <= 16) {
    cost = std::span<Scalar>(cost_s.data(), q * q);
    assignment = std::span<int>(assign_s.data(), q);
  } else {
    cost_h.resize(static_cast<std::size_t>(q) * q);
    assign_h.resize(q);
    cost = cost_h;
    assignment = assign_h;
  }
  detail::cost_matrix(a, b, cost);
  const Scalar total =
      detail::min_cost_assignment<Scalar>(q, std::span<const Scalar>(cost.data(), cost.size()), assignment);
  return sqrt(std::max(total, Scalar(0)));
}

/// Exact minimum over all Q! permutations. Guarded to Q <= 8.
template <typename Scalar>
Scalar qdist_bruteforce(const BasicQPoint<Scalar>& a, const BasicQPoint<Scalar>& b) {
  using std::sqrt;
  detail::check_compatible(a, b);
  if (a.q() > 8) throw PreconditionError("qdist_bruteforce: Q > 8 would enumerate too many permutations");
  std::vector<int> perm(a.q());
  std::iota(perm.begin(), perm.end(), 0);
  Scalar best = std::numeric_limits<Scalar>::infinity();
  do {
    Scalar sum(0);
    for (int i = 0; i < a.q(); ++i) sum += detail::squared_distance(a, i, b, perm[i]);
    best = std::min(best, sum);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return sqrt(best);
}

/// A permutation s (A_i -> B_s(i)) realizing qdist; among optimal
/// permutations, the lexicographically smallest.
template <typename Scalar>
std::vector<int> optimal_matching(const BasicQPoint<Scalar>& a, const BasicQPoint<Scalar>& b) {
  detail::check_compatible(a, b);
  const int q = a.q();
  std::vector<Scalar> cost(static_cast<std::size_t>(q) * q);
  detail::cost_matrix(a, b, std::span<Scalar>(cost));
  std::vector<int> scratch(q);
  const Scalar optimum = detail::min_cost_assignment<Scalar>(q, cost, scratch);
  Scalar scale(0);
  for (Scalar c : cost) scale = std::max(scale, c);
  const Scalar slack = Scalar(64) * std::numeric_limits<Scalar>::epsilon() * (optimum + scale) * q;

  // Fix rows in order, taking the smallest column that still admits an
  // optimal completion of the remaining rows.
  std::vector<int> perm(q, -1);
  std::vector<bool> taken(q, false);
  Scalar fixed(0);
  for (int i = 0; i < q; ++i) {
    for (int j = 0; j < q; ++j) {
      if (taken[j]) continue;
      const Scalar head = fixed + cost[i * q + j];
      Scalar rest(0);
      const int left = q - i - 1;
      if (left > 0) {
        std::vector<int> rows, cols;
        for (int r = i + 1; r < q; ++r) rows.push_back(r);
        for (int c = 0; c < q; ++c) {
          if (!taken[c] && c != j) cols.push_back(c);
        }
        std::vector<Scalar> sub(static_cast<std::size_t>(left) * left);
        for (int r = 0; r < left; ++r) {
          for (int c = 0; c < left; ++c) sub[r * left + c] = cost[rows[r] * q + cols[c]];
        }
        std::vector<int> sub_assign(left);
        rest = detail::min_cost_assignment<Scalar>(left, sub, sub_assign);
      }
      if (head + rest <= optimum + slack) {
        perm[i] = j;
        taken[j] = true;
        fixed = head;
        break;
      }
    }
    if (perm[i] < 0) {
      // Rounding pushed every candidate past the slack; fall back to the
      // solver's own assignment for the remaining rows.
      for (int r = i; r < q; ++r) perm[r] = scratch[r];
      break;
    }
  }
  return perm;
}

/// Common point (the centroid) when every pairwise distance is <= tol.
template <typename Scalar>
std::optional<typename BasicQPoint<Scalar>::Vector> is_diagonal(const BasicQPoint<Scalar>& a, Scalar tol) {
  if (!(tol >= Scalar(0))) throw PreconditionError("is_diagonal: tol must be >= 0");
  bool identical = true;
  for (int i = 0; i < a.q(); ++i) {
    for (int j = i + 1; j < a.q(); ++j) {
      const Scalar d = detail::point_distance(a, i, a, j);
      if (d > tol) return std::nullopt;
      if (d != Scalar(0)) identical = false;
    }
  }
  if (identical) return typename BasicQPoint<Scalar>::Vector(a.point(0));
  return typename BasicQPoint<Scalar>::Vector(a.points().rowwise().mean());
}

/// Local splitting of a non-diagonal Q-point into two groups of clusters.
/// Fine clusters have diameter < epsilon/3 and lie at least epsilon apart;
/// cluster 0 holds the lexicographically smallest point and forms the first
/// group (size r), every other cluster forms the second group.
template <typename Scalar>
struct Splitting {
  BasicQPoint<Scalar> base;
  std::vector<int> labels;  // fine-cluster label per canonical base point
  int r = 0;
  Scalar epsilon = Scalar(0);
  typename BasicQPoint<Scalar>::Matrix representatives;  // k x clusters

  int clusters() const { return static_cast<int>(representatives.cols()); }
  /// Radius of the neighborhood U around each base point.
  Scalar neighborhood_radius() const { return epsilon / Scalar(6); }
  std::vector<int> cluster_sizes() const {
    std::vector<int> sizes(clusters(), 0);
    for (int l : labels) ++sizes[l];
    return sizes;
  }
};

namespace detail {

struct DisjointSets {
  std::vector<int> parent;
  explicit DisjointSets(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (b < a) std::swap(a, b);
    parent[b] = a;
    return true;
  }
};

}  // namespace detail

/// Splitting of P by single linkage at the largest dendrogram gap, or none
/// when all Q points coincide.
template <typename Scalar>
std::optional<Splitting<Scalar>> separation_split(const BasicQPoint<Scalar>& P) {
  const int q = P.q();
  struct Edge {
    Scalar d;
    int i, j;
  };
  std::vector<Edge> edges;
  for (int i = 0; i < q; ++i) {
    for (int j = i + 1; j < q; ++j) edges.push_back({detail::point_distance(P, i, P, j), i, j});
  }
  std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
    if (a.d != b.d) return a.d < b.d;
    if (a.i != b.i) return a.i < b.i;
    return a.j < b.j;
  });
  // Kruskal: merge heights and the merging edge of every step.
  std::vector<Edge> merges;
  {
    detail::DisjointSets sets(q);
    for (const Edge& e : edges) {
      if (sets.unite(e.i, e.j)) merges.push_back(e);
    }
  }
  if (q == 1 || merges.back().d == Scalar(0)) return std::nullopt;

  // Cut after `a` merges: separation epsilon = height of merge a+1.
  std::vector<int> cuts;
  for (int a = 0; a + 1 < q; ++a) {
    if (merges[a].d > Scalar(0)) cuts.push_back(a);
  }
  auto gap = [&](int a) { return merges[a].d - (a == 0 ? Scalar(0) : merges[a - 1].d); };
  std::stable_sort(cuts.begin(), cuts.end(), [&](int a, int b) { return gap(a) > gap(b); });

  for (int a : cuts) {
    detail::DisjointSets sets(q);
    for (int s = 0; s < a; ++s) sets.unite(merges[s].i, merges[s].j);
    const Scalar eps = merges[a].d;
    std::vector<int> root(q);
    for (int i = 0; i < q; ++i) root[i] = sets.find(i);
    bool valid = true;
    for (int i = 0; i < q && valid; ++i) {
      for (int j = i + 1; j < q && valid; ++j) {
        const Scalar d = detail::point_distance(P, i, P, j);
        if (root[i] == root[j]) {
          valid = d < eps / Scalar(3);
        } else {
          valid = d >= eps;
        }
      }
    }
    if (!valid) continue;

    Splitting<Scalar> split;
    split.base = P;
    split.epsilon = eps;
    split.labels.assign(q, -1);
    std::vector<int> label_of_root(q, -1);
    int next = 0;
    std::vector<int> first_member;
    for (int i = 0; i < q; ++i) {
      if (label_of_root[root[i]] < 0) {
        label_of_root[root[i]] = next++;
        first_member.push_back(i);
      }
      split.labels[i] = label_of_root[root[i]];
    }
    split.representatives.resize(P.k(), next);
    for (int c = 0; c < next; ++c) split.representatives.col(c) = P.point(first_member[c]);
    split.r = static_cast<int>(std::count(split.labels.begin(), split.labels.end(), 0));
    return split;
  }
  // Unreachable: cutting right after the zero-height merges is always valid.
  throw PreconditionError("separation_split: no valid cut");
}

namespace detail {

// Fine-cluster label of every point of A (nearest base point, ties to the
// smallest index) or nullopt when some point is not within the
// neighborhood radius of the base.
template <typename Scalar>
std::optional<std::vector<int>> neighborhood_labels(const Splitting<Scalar>& split,
                                                    const BasicQPoint<Scalar>& a) {
  check_compatible(split.base, a);
  const Scalar radius = split.neighborhood_radius();
  std::vector<int> labels(a.q());
  std::vector<int> counts(split.clusters(), 0);
  for (int i = 0; i < a.q(); ++i) {
    int best = -1;
    Scalar best_d = std::numeric_limits<Scalar>::infinity();
    for (int j = 0; j < split.base.q(); ++j) {
      const Scalar d = point_distance(a, i, split.base, j);
      if (d < best_d) {
        best_d = d;
        best = j;
      }
    }
    if (!(best_d < radius)) return std::nullopt;
    labels[i] = split.labels[best];
    ++counts[labels[i]];
  }
  if (counts != split.cluster_sizes()) return std::nullopt;
  return labels;
}

}  // namespace detail

/// Membership of A in the splitting neighborhood U: every point of A lies
/// within epsilon/6 of a base point and each fine cluster receives exactly
/// as many points as it holds.
template <typename Scalar>
bool in_neighborhood(const Splitting<Scalar>& split, const BasicQPoint<Scalar>& a) {
  return detail::neighborhood_labels(split, a).has_value();
}

/// The maps pi_1, pi_2 on U: points of A near the first cluster, and the rest.
template <typename Scalar>
std::pair<BasicQPoint<Scalar>, BasicQPoint<Scalar>> project_split(const Splitting<Scalar>& split,
                                                                  const BasicQPoint<Scalar>& a) {
  const auto labels = detail::neighborhood_labels(split, a);
  if (!labels) throw PreconditionError("project_split: Q-point lies outside the splitting neighborhood");
  typename BasicQPoint<Scalar>::Matrix first(a.k(), split.r), second(a.k(), a.q() - split.r);
  int f = 0, s = 0;
  for (int i = 0; i < a.q(); ++i) {
    if ((*labels)[i] == 0) {
      first.col(f++) = a.point(i);
    } else {
      second.col(s++) = a.point(i);
    }
  }
  return {BasicQPoint<Scalar>(std::move(first)), BasicQPoint<Scalar>(std::move(second))};
}

/// Multiset union of two Q-points.
template <typename Scalar>
BasicQPoint<Scalar> concatenate(const BasicQPoint<Scalar>& a, const BasicQPoint<Scalar>& b) {
  if (a.k() != b.k()) throw PreconditionError("concatenate: k mismatch");
  typename BasicQPoint<Scalar>::Matrix all(a.k(), a.q() + b.q());
  all << a.points(), b.points();
  return BasicQPoint<Scalar>(std::move(all));
}

}  // namespace qstep
