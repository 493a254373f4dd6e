#include "qstep/metric_space.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "qstep/errors.hpp"

namespace qstep {

// ---------------------------------------------------------------- IndexSet

IndexSet::IndexSet(std::vector<int> indices) : indices_(std::move(indices)) {
  std::sort(indices_.begin(), indices_.end());
  indices_.erase(std::unique(indices_.begin(), indices_.end()), indices_.end());
  if (!indices_.empty() && indices_.front() < 0) {
    throw std::out_of_range("IndexSet: negative index");
  }
}

IndexSet IndexSet::range(int n) {
  std::vector<int> all(std::max(n, 0));
  std::iota(all.begin(), all.end(), 0);
  IndexSet s;
  s.indices_ = std::move(all);
  return s;
}

bool IndexSet::contains(int index) const {
  return std::binary_search(indices_.begin(), indices_.end(), index);
}

int IndexSet::position(int index) const {
  const auto it = std::lower_bound(indices_.begin(), indices_.end(), index);
  if (it == indices_.end() || *it != index) return -1;
  return static_cast<int>(it - indices_.begin());
}

IndexSet set_union(const IndexSet& a, const IndexSet& b) {
  std::vector<int> out;
  out.reserve(a.size() + b.size());
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return IndexSet(std::move(out));
}

IndexSet set_intersection(const IndexSet& a, const IndexSet& b) {
  std::vector<int> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return IndexSet(std::move(out));
}

IndexSet set_difference(const IndexSet& a, const IndexSet& b) {
  std::vector<int> out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return IndexSet(std::move(out));
}

// ----------------------------------------------------------- RadiiSchedule

RadiiSchedule::RadiiSchedule(double r0, double theta, int m) : theta_(theta), m_(m) {
  if (!(r0 > 0.0) || !std::isfinite(r0)) throw PreconditionError("RadiiSchedule: r0 must be > 0");
  if (!(theta > 0.0 && theta < 1.0)) throw PreconditionError("RadiiSchedule: theta must lie in (0,1)");
  if (m < 2) throw PreconditionError("RadiiSchedule: m must be >= 2");
  radii_.resize(m + 1);
  radii_[0] = r0;
  for (int k = 1; k <= m; ++k) radii_[k] = radii_[k - 1] * theta;
}

// --------------------------------------------------------- PointCloudSpace

struct PointCloudSpace::Data {
  Eigen::MatrixXd points;  // dim x n, embedded spaces
  Eigen::MatrixXd table;   // n x n, table spaces
  Eigen::VectorXd weights;
  int n = 0;
  int dim = 0;
  bool embedded = false;
  double total_weight = 0.0;
  double atom_radius = 0.0;
  double diameter = 0.0;
  std::vector<double> nn_distance;
  detail::KdTree tree;
};

namespace {

Eigen::VectorXd checked_weights(Eigen::VectorXd weights, int n) {
  if (weights.size() == 0) return Eigen::VectorXd::Ones(n);
  if (weights.size() != n) {
    throw PreconditionError("PointCloudSpace: " + std::to_string(weights.size()) +
                            " weights for " + std::to_string(n) + " points");
  }
  for (int i = 0; i < n; ++i) {
    if (!(weights[i] > 0.0) || !std::isfinite(weights[i])) {
      throw PreconditionError("PointCloudSpace: weights must be positive and finite");
    }
  }
  return weights;
}

}  // namespace

PointCloudSpace PointCloudSpace::from_points(Eigen::MatrixXd points, Eigen::VectorXd weights,
                                             std::optional<double> atom_radius) {
  if (points.cols() == 0) throw PreconditionError("PointCloudSpace: no points");
  if (points.rows() == 0) throw PreconditionError("PointCloudSpace: zero-dimensional points");
  if (!points.allFinite()) throw PreconditionError("PointCloudSpace: non-finite coordinate");
  auto data = std::make_shared<Data>();
  data->n = static_cast<int>(points.cols());
  data->dim = static_cast<int>(points.rows());
  data->embedded = true;
  data->weights = checked_weights(std::move(weights), data->n);
  data->points = std::move(points);
  std::vector<int> ids(data->n);
  std::iota(ids.begin(), ids.end(), 0);
  data->tree = detail::KdTree(data->points, std::move(ids));
  const Eigen::VectorXd extent = data->points.rowwise().maxCoeff() - data->points.rowwise().minCoeff();
  data->diameter = extent.norm();
  return PointCloudSpace(finish(std::move(data), atom_radius));
}

PointCloudSpace PointCloudSpace::from_distances(Eigen::MatrixXd table, Eigen::VectorXd weights,
                                                int dim, std::optional<double> atom_radius) {
  const int n = static_cast<int>(table.rows());
  if (n == 0) throw PreconditionError("PointCloudSpace: empty distance table");
  if (table.cols() != n) throw PreconditionError("PointCloudSpace: distance table is not square");
  if (!table.allFinite()) throw PreconditionError("PointCloudSpace: non-finite distance");
  const double scale = std::max(1.0, table.maxCoeff());
  for (int i = 0; i < n; ++i) {
    if (table(i, i) != 0.0) throw PreconditionError("PointCloudSpace: nonzero diagonal entry");
    for (int j = i + 1; j < n; ++j) {
      if (!(table(i, j) > 0.0)) throw PreconditionError("PointCloudSpace: zero or negative off-diagonal distance");
      if (std::abs(table(i, j) - table(j, i)) > 1e-9 * scale) {
        throw PreconditionError("PointCloudSpace: distance table is not symmetric");
      }
      table(j, i) = table(i, j);
    }
  }
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int l = 0; l < n; ++l) {
        if (table(i, l) > table(i, j) + table(j, l) + 1e-9 * scale) {
          throw PreconditionError("PointCloudSpace: triangle inequality fails on (" +
                                  std::to_string(i) + ", " + std::to_string(j) + ", " +
                                  std::to_string(l) + ")");
        }
      }
    }
  }
  auto data = std::make_shared<Data>();
  data->n = n;
  data->dim = dim;
  data->embedded = false;
  data->weights = checked_weights(std::move(weights), n);
  data->diameter = table.maxCoeff();
  data->table = std::move(table);
  return PointCloudSpace(finish(std::move(data), atom_radius));
}

std::shared_ptr<PointCloudSpace::Data> PointCloudSpace::finish(std::shared_ptr<Data> data,
                                                              std::optional<double> atom) {
  data->total_weight = data->weights.sum();
  data->nn_distance.assign(data->n, std::numeric_limits<double>::infinity());
  for (int i = 0; i < data->n; ++i) {
    if (data->embedded) {
      if (data->n > 1) data->nn_distance[i] = data->tree.nearest(data->points.col(i).data(), i).second;
    } else {
      for (int j = 0; j < data->n; ++j) {
        if (j != i) data->nn_distance[i] = std::min(data->nn_distance[i], data->table(i, j));
      }
    }
    if (data->nn_distance[i] == 0.0) {
      throw PreconditionError("PointCloudSpace: duplicate sample at index " + std::to_string(i));
    }
  }
  if (atom) {
    if (!(*atom >= 0.0)) throw PreconditionError("PointCloudSpace: atom radius must be >= 0");
    data->atom_radius = *atom;
  } else if (data->n > 1) {
    std::vector<double> nn = data->nn_distance;
    auto mid = nn.begin() + nn.size() / 2;
    std::nth_element(nn.begin(), mid, nn.end());
    data->atom_radius = 2.0 * *mid;
  }
  return data;
}

int PointCloudSpace::size() const { return data_->n; }
int PointCloudSpace::dim() const { return data_->dim; }
bool PointCloudSpace::embedded() const { return data_->embedded; }
const Eigen::MatrixXd& PointCloudSpace::points() const { return data_->points; }
const Eigen::MatrixXd& PointCloudSpace::distance_table() const { return data_->table; }
const Eigen::VectorXd& PointCloudSpace::weights() const { return data_->weights; }
double PointCloudSpace::weight(int i) const { return data_->weights[i]; }
double PointCloudSpace::total_weight() const { return data_->total_weight; }
double PointCloudSpace::atom_radius() const { return data_->atom_radius; }
double PointCloudSpace::diameter() const { return data_->diameter; }

double PointCloudSpace::nearest_neighbor_distance(int x) const {
  check_index(x);
  return data_->nn_distance[x];
}

void PointCloudSpace::check_index(int x) const {
  if (x < 0 || x >= data_->n) {
    throw std::out_of_range("point index " + std::to_string(x) + " outside [0, " +
                            std::to_string(data_->n) + ")");
  }
}

double PointCloudSpace::distance(int i, int j) const {
  if (data_->embedded) {
    return detail::euclidean(data_->points.col(i).data(), data_->points.col(j).data(), data_->dim);
  }
  return data_->table(i, j);
}

double PointCloudSpace::distance_to(int x, const double* location) const {
  if (!data_->embedded) throw PreconditionError("distance_to requires an embedded space");
  return detail::euclidean(location, data_->points.col(x).data(), data_->dim);
}

std::vector<Neighbor> PointCloudSpace::neighbors(int x, double r, bool closed) const {
  check_index(x);
  std::vector<Neighbor> out;
  if (data_->embedded) {
    std::vector<std::pair<int, double>> hits;
    data_->tree.radius_query(data_->points.col(x).data(), r, closed, hits);
    std::sort(hits.begin(), hits.end());
    out.reserve(hits.size());
    for (const auto& [id, d] : hits) out.push_back({id, d});
  } else {
    for (int y = 0; y < data_->n; ++y) {
      const double d = data_->table(x, y);
      if (d < r || (closed && d == r)) out.push_back({y, d});
    }
  }
  return out;
}

// ----------------------------------------------------------- SubsetLocator

SubsetLocator::SubsetLocator(const PointCloudSpace& space, const IndexSet& subset)
    : space_(space), subset_(subset) {
  if (subset_.empty()) throw PreconditionError("SubsetLocator: empty subset");
  space_.check_index(subset_.indices().back());
  if (space_.embedded()) tree_ = detail::KdTree(space_.points(), subset_.indices());
}

Neighbor SubsetLocator::nearest(int y) const {
  space_.check_index(y);
  if (space_.embedded()) {
    const auto [id, d] = tree_.nearest(space_.points().col(y).data());
    return {id, d};
  }
  Neighbor best{-1, std::numeric_limits<double>::infinity()};
  for (int u : subset_) {
    const double d = space_.distance(y, u);
    if (d < best.distance) best = {u, d};
  }
  return best;
}

// -------------------------------------------------------------- operations

IndexSet ball(const PointCloudSpace& space, int x, double r) {
  if (!(r > 0.0)) throw PreconditionError("ball: radius must be > 0");
  std::vector<int> ids;
  for (const auto& nb : space.neighbors(x, r)) ids.push_back(nb.index);
  return IndexSet(std::move(ids));
}

double measure(const PointCloudSpace& space, const IndexSet& s) {
  if (!s.empty()) space.check_index(s.indices().back());
  double total = 0.0;
  for (int i : s) total += space.weight(i);
  return total;
}

namespace {

double ball_measure(const PointCloudSpace& space, int x, double r, int* count = nullptr) {
  double total = 0.0;
  const auto nbs = space.neighbors(x, r);
  for (const auto& nb : nbs) total += space.weight(nb.index);
  if (count) *count = static_cast<int>(nbs.size());
  return total;
}

}  // namespace

double doubling_constant(const PointCloudSpace& space, const RadiiSchedule& schedule,
                         const IndexSet& centers) {
  if (centers.empty()) throw PreconditionError("doubling_constant: no centers");
  double worst = 1.0;
  for (int x : centers) {
    space.check_index(x);
    for (int k = 0; k < schedule.m(); ++k) {
      const double r = schedule.radius(k);
      int count = 0;
      const double inner = ball_measure(space, x, r, &count);
      if (count < 2 && space.size() > 1) {
        throw PreconditionError("doubling_constant: B(" + std::to_string(x) + ", " +
                                std::to_string(r) + ") holds no other sample");
      }
      worst = std::max(worst, ball_measure(space, x, 2.0 * r) / inner);
    }
  }
  return worst;
}

double ball_comparison_bound(double K, double t) {
  if (!(K >= 1.0)) throw PreconditionError("ball_comparison_bound: K must be >= 1");
  if (!(t > 0.0) || !std::isfinite(t)) throw PreconditionError("ball_comparison_bound: t must be > 0");
  int p = 0;
  while (std::ldexp(1.0, p) < t) ++p;
  return std::pow(K, p);
}

double density_ratio(const PointCloudSpace& space, const IndexSet& B, int x, double r) {
  if (!(r > 0.0)) throw PreconditionError("density_ratio: radius must be > 0");
  double total = 0.0;
  double outside = 0.0;
  for (const auto& nb : space.neighbors(x, r)) {
    const double w = space.weight(nb.index);
    total += w;
    if (!B.contains(nb.index)) outside += w;
  }
  if (total == 0.0) throw PreconditionError("density_ratio: empty ball");
  return outside / total;
}

bool classify_mu_interior(const PointCloudSpace& space, const IndexSet& B, int x,
                          const RadiiSchedule& schedule, double tol) {
  space.check_index(x);
  const int m = schedule.m();
  for (int k = m - finest_third(m); k < m; ++k) {
    const double r = schedule.radius(k);
    const auto nbs = space.neighbors(x, r);
    if (nbs.size() < 2 && space.size() > 1) {
      throw PreconditionError("classify_mu_interior: radius " + std::to_string(r) +
                              " is below the sampling resolution at " + std::to_string(x));
    }
    if (density_ratio(space, B, x, r) > tol) return false;
  }
  return true;
}

bool is_isolated(const PointCloudSpace& space, int x) {
  return space.nearest_neighbor_distance(x) > space.atom_radius();
}

std::vector<int> retraction(const PointCloudSpace& space, const IndexSet& U, int x) {
  space.check_index(x);
  if (U.empty()) throw PreconditionError("retraction: U is empty");
  const SubsetLocator locator(space, U);
  std::vector<int> map(space.size());
  for (int y = 0; y < space.size(); ++y) {
    map[y] = U.contains(y) ? y : locator.nearest(y).index;
  }
  return map;
}

double full_delta(double K) { return 1.0 / (2.0 * (1.0 + ball_comparison_bound(K, 4.0))); }

bool is_full(const PointCloudSpace& space, const IndexSet& B, int y, double delta, double eta) {
  space.check_index(y);
  if (!B.contains(y)) throw PreconditionError("is_full: y is not in B");
  auto nbs = space.neighbors(y, eta);
  std::sort(nbs.begin(), nbs.end(), [](const Neighbor& a, const Neighbor& b) {
    return a.distance < b.distance || (a.distance == b.distance && a.index < b.index);
  });
  double total = 0.0;
  double outside = 0.0;
  for (std::size_t i = 0; i < nbs.size(); ++i) {
    const double w = space.weight(nbs[i].index);
    total += w;
    if (!B.contains(nbs[i].index)) outside += w;
    const bool last_at_distance = i + 1 == nbs.size() || nbs[i + 1].distance > nbs[i].distance;
    if (last_at_distance && outside > delta * total) return false;
  }
  return true;
}

std::vector<std::vector<Neighbor>> annulus_bins(const PointCloudSpace& space, int x,
                                                const RadiiSchedule& schedule) {
  const auto& radii = schedule.radii();
  std::vector<std::vector<Neighbor>> bins(schedule.m());
  for (const auto& nb : space.neighbors(x, radii.front(), /*closed=*/true)) {
    if (nb.index == x) continue;
    for (int k = 0; k < schedule.m(); ++k) {
      if (nb.distance > radii[k + 1]) {
        bins[k].push_back(nb);
        break;
      }
    }
  }
  return bins;
}

std::vector<int> finest_third_annuli(const std::vector<int>& counts) {
  std::vector<int> nonempty;
  for (int k = 0; k < static_cast<int>(counts.size()); ++k) {
    if (counts[k] > 0) nonempty.push_back(k);
  }
  const int take = finest_third(static_cast<int>(nonempty.size()));
  return {nonempty.end() - take, nonempty.end()};
}

}  // namespace qstep
