#pragma once

#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "qstep/metric_space.hpp"
#include "qstep/qpoint.hpp"

namespace qstep {

/// Lipschitz chart Phi: domain -> R^N on a sampled space.
class Chart {
 public:
  /// `values` is N x |domain|, column c belonging to domain[c].
  Chart(PointCloudSpace space, IndexSet domain, Eigen::MatrixXd values)
      : Chart(std::move(space), std::move(domain), std::move(values), -1.0) {}
  /// Identity chart of an embedded space on `domain` (all points when empty).
  static Chart identity(const PointCloudSpace& space, IndexSet domain = {});

  const PointCloudSpace& space() const { return space_; }
  const IndexSet& domain() const { return domain_; }
  int dim() const { return static_cast<int>(values_.rows()); }
  bool contains(int y) const;
  /// Phi(y); throws std::out_of_range outside the domain.
  Eigen::VectorXd value(int y) const;
  /// max |Phi(y) - Phi(z)| / rho(y, z) over sampled pairs.
  double lipschitz_constant() const { return lipschitz_; }

 private:
  // lipschitz < 0 means compute it from the sampled pairs.
  Chart(PointCloudSpace space, IndexSet domain, Eigen::MatrixXd values, double lipschitz);

  PointCloudSpace space_;
  IndexSet domain_;
  Eigen::MatrixXd values_;
  std::vector<int> position_;
  double lipschitz_ = 0.0;
};

using ChartPtr = std::shared_ptr<const Chart>;

/// y -> p + l (Phi(y) - Phi(x)).
struct AffineGerm {
  ChartPtr chart;
  int x = 0;
  Eigen::VectorXd p;
  Eigen::MatrixXd l;  // k x N

  Eigen::VectorXd operator()(int y) const;
};

struct GermComponent {
  Eigen::VectorXd p;
  Eigen::MatrixXd l;
};

/// Q affine germs over one chart and base point. `group[i]` is the eqty
/// group of component i; components in one group share p and l bitwise.
class AffineQGerm {
 public:
  AffineQGerm(ChartPtr chart, int x, std::vector<GermComponent> components, std::vector<int> group);

  const ChartPtr& chart() const { return chart_; }
  int base_index() const { return x_; }
  int q() const { return static_cast<int>(components_.size()); }
  int k() const { return static_cast<int>(components_.front().p.size()); }
  int chart_dim() const { return chart_->dim(); }
  const std::vector<GermComponent>& components() const { return components_; }
  const std::vector<int>& groups() const { return group_; }
  int group_count() const;
  AffineGerm component(int i) const;
  /// Sum of [[p_i]].
  QPoint base() const;

 private:
  ChartPtr chart_;
  int x_;
  std::vector<GermComponent> components_;
  std::vector<int> group_;
};

/// Groups components whose p lie within tol of each other (transitive
/// closure) and replaces p and l by their group means.
AffineQGerm enforce_eqty(ChartPtr chart, int x, std::vector<GermComponent> components, double tol);

/// 1e-8 * (diameter of the base Q-point + 1).
double default_eqty_tolerance(const QPoint& base);

/// Grouping used by enforce_eqty, exposed for the fitting code.
std::vector<int> eqty_groups(const std::vector<Eigen::VectorXd>& p, double tol);

QPoint eval_germ(const AffineQGerm& g, int y);

/// Estimate of limsup G(g1(y), g2(y)) / rho(y, x) over the finest third of
/// nonempty scheduled annuli around the common base point.
double germ_distance(const AffineQGerm& g1, const AffineQGerm& g2, const RadiiSchedule& schedule);

/// Same base, zero matrices.
AffineQGerm zero_germ(const AffineQGerm& g);

double germ_norm(const AffineQGerm& g, const RadiiSchedule& schedule);

}  // namespace qstep
