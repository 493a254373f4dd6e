#pragma once

#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "qstep/detail/spatial_index.hpp"

namespace qstep {

/// Sorted, duplicate-free list of sample indices into a PointCloudSpace.
class IndexSet {
 public:
  IndexSet() = default;
  /// Sorts and removes duplicates. Negative indices are rejected.
  explicit IndexSet(std::vector<int> indices);
  IndexSet(std::initializer_list<int> indices) : IndexSet(std::vector<int>(indices)) {}

  static IndexSet range(int n);

  const std::vector<int>& indices() const { return indices_; }
  int size() const { return static_cast<int>(indices_.size()); }
  bool empty() const { return indices_.empty(); }
  int operator[](int i) const { return indices_[i]; }
  auto begin() const { return indices_.begin(); }
  auto end() const { return indices_.end(); }

  bool contains(int index) const;
  /// Position of `index` in the sorted list, or -1.
  int position(int index) const;

  friend bool operator==(const IndexSet&, const IndexSet&) = default;

 private:
  std::vector<int> indices_;
};

IndexSet set_union(const IndexSet& a, const IndexSet& b);
IndexSet set_intersection(const IndexSet& a, const IndexSet& b);
IndexSet set_difference(const IndexSet& a, const IndexSet& b);

/// Geometric radii r0, r0*theta, ..., discretizing every r -> 0+ limit.
/// Annulus k is (radius(k+1), radius(k)] for k = 0..m-1.
class RadiiSchedule {
 public:
  RadiiSchedule(double r0, double theta, int m);

  double r0() const { return radii_.front(); }
  double theta() const { return theta_; }
  int m() const { return m_; }
  /// radius(k) for k = 0..m; radius(m) is the inner edge of the finest annulus.
  double radius(int k) const { return radii_.at(k); }
  const std::vector<double>& radii() const { return radii_; }

 private:
  double theta_;
  int m_;
  std::vector<double> radii_;
};

struct Neighbor {
  int index;
  double distance;
};

/// Finite weighted sample (X, rho, mu): either points in R^n with the
/// Euclidean metric or an explicit symmetric distance table. Immutable;
/// copies share storage.
class PointCloudSpace {
 public:
  /// `points` is dim x n, one column per sample. Empty weights mean all 1.
  static PointCloudSpace from_points(Eigen::MatrixXd points, Eigen::VectorXd weights = {},
                                     std::optional<double> atom_radius = std::nullopt);
  /// Symmetric table with zero diagonal, positive off-diagonal entries and
  /// the triangle inequality holding up to 1e-9.
  static PointCloudSpace from_distances(Eigen::MatrixXd table, Eigen::VectorXd weights = {},
                                        int dim = 0,
                                        std::optional<double> atom_radius = std::nullopt);

  int size() const;
  int dim() const;
  bool embedded() const;
  const Eigen::MatrixXd& points() const;
  const Eigen::MatrixXd& distance_table() const;
  const Eigen::VectorXd& weights() const;
  double weight(int i) const;
  double total_weight() const;

  double distance(int i, int j) const;
  /// Distance from sample x to an arbitrary location (embedded spaces only).
  double distance_to(int x, const double* location) const;

  /// Radius below which a point with no other sample is an atom.
  /// Defaults to twice the median nearest-neighbor distance.
  double atom_radius() const;
  double nearest_neighbor_distance(int x) const;
  /// Largest pairwise distance; bounding-box diagonal for embedded spaces.
  double diameter() const;

  /// Samples y with rho(x, y) < r (<= r when closed), sorted by index.
  std::vector<Neighbor> neighbors(int x, double r, bool closed = false) const;

  void check_index(int x) const;

 private:
  struct Data;
  explicit PointCloudSpace(std::shared_ptr<const Data> data) : data_(std::move(data)) {}
  static std::shared_ptr<Data> finish(std::shared_ptr<Data> data, std::optional<double> atom);
  std::shared_ptr<const Data> data_;
};

/// Nearest-point queries restricted to a fixed subset U of a space.
class SubsetLocator {
 public:
  SubsetLocator(const PointCloudSpace& space, const IndexSet& subset);
  /// Nearest member of U to sample y; ties go to the smallest index.
  Neighbor nearest(int y) const;

 private:
  PointCloudSpace space_;
  IndexSet subset_;
  detail::KdTree tree_;
};

/// Open ball B_r(x).
IndexSet ball(const PointCloudSpace& space, int x, double r);

/// Sum of weights over s.
double measure(const PointCloudSpace& space, const IndexSet& s);

/// max over centers and scheduled radii of mu(B_2r(x)) / mu(B_r(x)).
/// Throws PreconditionError when some B_r(x) holds only x while the space
/// has other points.
double doubling_constant(const PointCloudSpace& space, const RadiiSchedule& schedule,
                         const IndexSet& centers);

/// K^P(t) with P(t) = max{0, ceil(log2 t)}.
double ball_comparison_bound(double K, double t);

/// mu(B_r(x) \ B) / mu(B_r(x)).
double density_ratio(const PointCloudSpace& space, const IndexSet& B, int x, double r);

/// Discrete density-point test: the density ratio stays <= tol on the finest
/// third of the scheduled radii.
bool classify_mu_interior(const PointCloudSpace& space, const IndexSet& B, int x,
                          const RadiiSchedule& schedule, double tol);

/// True iff every other sample is farther than the space's atom radius.
bool is_isolated(const PointCloudSpace& space, int x);

/// Nearest point of U for every sample (ties to the smallest index).
/// Fixes U pointwise. `x` is the density point the retraction is built for.
std::vector<int> retraction(const PointCloudSpace& space, const IndexSet& U, int x);

/// Half the admissible fullness level: 1 / (2 (1 + K^P(4))).
double full_delta(double K);

/// Exact sup over 0 < r < eta of the density ratio of B at y is <= delta.
bool is_full(const PointCloudSpace& space, const IndexSet& B, int y, double delta, double eta);

/// Neighbors of x (excluding x) binned into the schedule's annuli.
std::vector<std::vector<Neighbor>> annulus_bins(const PointCloudSpace& space, int x,
                                                const RadiiSchedule& schedule);

/// Number of annuli forming the "finest third" of `nonempty` annuli.
inline int finest_third(int nonempty) { return nonempty <= 0 ? 0 : (nonempty + 2) / 3; }

/// Indices of the finest third of the annuli with a positive count.
std::vector<int> finest_third_annuli(const std::vector<int>& counts);

}  // namespace qstep
