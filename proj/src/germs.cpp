#include "qstep/germs.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "qstep/errors.hpp"

namespace qstep {

Chart::Chart(PointCloudSpace space, IndexSet domain, Eigen::MatrixXd values, double lipschitz)
    : space_(std::move(space)), domain_(std::move(domain)), values_(std::move(values)), lipschitz_(lipschitz) {
  if (domain_.empty()) throw PreconditionError("Chart: empty domain");
  if (values_.cols() != domain_.size()) {
    throw PreconditionError("Chart: expected one value column per domain point");
  }
  if (values_.rows() == 0) throw PreconditionError("Chart: chart dimension must be positive");
  if (!values_.allFinite()) throw PreconditionError("Chart: non-finite value");
  position_.assign(space_.size(), -1);
  for (int c = 0; c < domain_.size(); ++c) {
    space_.check_index(domain_[c]);
    position_[domain_[c]] = c;
  }
  if (lipschitz_ >= 0.0) return;
  lipschitz_ = 0.0;
  for (int a = 0; a < domain_.size(); ++a) {
    for (int b = a + 1; b < domain_.size(); ++b) {
      const double num = (values_.col(a) - values_.col(b)).norm();
      lipschitz_ = std::max(lipschitz_, num / space_.distance(domain_[a], domain_[b]));
    }
  }
}

Chart Chart::identity(const PointCloudSpace& space, IndexSet domain) {
  if (!space.embedded()) throw PreconditionError("Chart::identity: space has no coordinates");
  if (domain.empty()) domain = IndexSet::range(space.size());
  Eigen::MatrixXd values(space.dim(), domain.size());
  for (int c = 0; c < domain.size(); ++c) values.col(c) = space.points().col(domain[c]);
  // Euclidean distances make the identity exactly 1-Lipschitz.
  const double lipschitz = domain.size() > 1 ? 1.0 : 0.0;
  return Chart(space, std::move(domain), std::move(values), lipschitz);
}

bool Chart::contains(int y) const { return y >= 0 && y < space_.size() && position_[y] >= 0; }

Eigen::VectorXd Chart::value(int y) const {
  if (!contains(y)) throw std::out_of_range("Chart: point " + std::to_string(y) + " outside the chart domain");
  return values_.col(position_[y]);
}

Eigen::VectorXd AffineGerm::operator()(int y) const {
  return p + l * (chart->value(y) - chart->value(x));
}

AffineQGerm::AffineQGerm(ChartPtr chart, int x, std::vector<GermComponent> components, std::vector<int> group)
    : chart_(std::move(chart)), x_(x), components_(std::move(components)), group_(std::move(group)) {
  if (!chart_) throw PreconditionError("AffineQGerm: null chart");
  if (!chart_->contains(x_)) throw PreconditionError("AffineQGerm: base point outside the chart domain");
  if (components_.empty()) throw PreconditionError("AffineQGerm: Q must be positive");
  if (group_.size() != components_.size()) throw PreconditionError("AffineQGerm: one group label per component");
  const auto k = components_.front().p.size();
  if (k == 0) throw PreconditionError("AffineQGerm: k must be positive");
  for (const auto& c : components_) {
    if (c.p.size() != k || c.l.rows() != k || c.l.cols() != chart_->dim()) {
      throw PreconditionError("AffineQGerm: component shapes disagree");
    }
  }
}

int AffineQGerm::group_count() const {
  return group_.empty() ? 0 : *std::max_element(group_.begin(), group_.end()) + 1;
}

AffineGerm AffineQGerm::component(int i) const {
  return AffineGerm{chart_, x_, components_.at(i).p, components_.at(i).l};
}

QPoint AffineQGerm::base() const {
  Eigen::MatrixXd pts(k(), q());
  for (int i = 0; i < q(); ++i) pts.col(i) = components_[i].p;
  return QPoint(std::move(pts));
}

std::vector<int> eqty_groups(const std::vector<Eigen::VectorXd>& p, double tol) {
  const int q = static_cast<int>(p.size());
  detail::DisjointSets sets(q);
  for (int i = 0; i < q; ++i) {
    for (int j = i + 1; j < q; ++j) {
      if ((p[i] - p[j]).norm() <= tol) sets.unite(i, j);
    }
  }
  std::vector<int> label(q, -1), group(q);
  int next = 0;
  for (int i = 0; i < q; ++i) {
    const int root = sets.find(i);
    if (label[root] < 0) label[root] = next++;
    group[i] = label[root];
  }
  return group;
}

AffineQGerm enforce_eqty(ChartPtr chart, int x, std::vector<GermComponent> components, double tol) {
  if (!(tol >= 0.0)) throw PreconditionError("enforce_eqty: tol must be >= 0");
  if (components.empty()) throw PreconditionError("enforce_eqty: Q must be positive");
  for (const auto& c : components) {
    const auto& f = components.front();
    if (c.p.size() != f.p.size() || c.l.rows() != f.l.rows() || c.l.cols() != f.l.cols()) {
      throw PreconditionError("enforce_eqty: component shapes disagree");
    }
  }
  std::vector<Eigen::VectorXd> p;
  for (const auto& c : components) p.push_back(c.p);
  const std::vector<int> group = eqty_groups(p, tol);
  const int groups = *std::max_element(group.begin(), group.end()) + 1;
  for (int g = 0; g < groups; ++g) {
    std::vector<int> members;
    for (int i = 0; i < static_cast<int>(group.size()); ++i) {
      if (group[i] == g) members.push_back(i);
    }
    const auto& first = components[members.front()];
    const bool same_p = std::all_of(members.begin(), members.end(), [&](int i) {
      return components[i].p == first.p;
    });
    const bool same_l = std::all_of(members.begin(), members.end(), [&](int i) {
      return components[i].l == first.l;
    });
    if (!same_p) {
      Eigen::VectorXd mean = Eigen::VectorXd::Zero(first.p.size());
      for (int i : members) mean += components[i].p;
      mean /= static_cast<double>(members.size());
      for (int i : members) components[i].p = mean;
    }
    if (!same_l) {
      Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(first.l.rows(), first.l.cols());
      for (int i : members) mean += components[i].l;
      mean /= static_cast<double>(members.size());
      for (int i : members) components[i].l = mean;
    }
  }
  return AffineQGerm(std::move(chart), x, std::move(components), group);
}

double default_eqty_tolerance(const QPoint& base) {
  double diam = 0.0;
  for (int i = 0; i < base.q(); ++i) {
    for (int j = i + 1; j < base.q(); ++j) diam = std::max(diam, (base.point(i) - base.point(j)).norm());
  }
  return 1e-8 * (diam + 1.0);
}

QPoint eval_germ(const AffineQGerm& g, int y) {
  const Eigen::VectorXd dphi = g.chart()->value(y) - g.chart()->value(g.base_index());
  Eigen::MatrixXd pts(g.k(), g.q());
  for (int i = 0; i < g.q(); ++i) {
    const auto& c = g.components()[i];
    pts.col(i) = c.p + c.l * dphi;
  }
  return QPoint(std::move(pts));
}

double germ_distance(const AffineQGerm& g1, const AffineQGerm& g2, const RadiiSchedule& schedule) {
  if (g1.chart() != g2.chart()) throw PreconditionError("germ_distance: germs live on different charts");
  if (g1.base_index() != g2.base_index()) throw PreconditionError("germ_distance: different base points");
  if (g1.q() != g2.q() || g1.k() != g2.k()) throw PreconditionError("germ_distance: Q or k mismatch");
  if (!(g1.base() == g2.base())) throw PreconditionError("germ_distance: base values differ");
  const Chart& chart = *g1.chart();
  const int x = g1.base_index();
  auto bins = annulus_bins(chart.space(), x, schedule);
  std::vector<int> counts(bins.size(), 0);
  for (std::size_t k = 0; k < bins.size(); ++k) {
    std::erase_if(bins[k], [&](const Neighbor& nb) { return !chart.contains(nb.index); });
    counts[k] = static_cast<int>(bins[k].size());
  }
  const auto finest = finest_third_annuli(counts);
  if (finest.empty()) throw PreconditionError("germ_distance: no chart points in the scheduled annuli");
  double best = 0.0;
  for (int k : finest) {
    for (const auto& nb : bins[k]) {
      best = std::max(best, qdist(eval_germ(g1, nb.index), eval_germ(g2, nb.index)) / nb.distance);
    }
  }
  return best;
}

AffineQGerm zero_germ(const AffineQGerm& g) {
  auto components = g.components();
  for (auto& c : components) c.l.setZero();
  return AffineQGerm(g.chart(), g.base_index(), std::move(components), g.groups());
}

double germ_norm(const AffineQGerm& g, const RadiiSchedule& schedule) {
  return germ_distance(g, zero_germ(g), schedule);
}

}  // namespace qstep
