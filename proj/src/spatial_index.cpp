#include "qstep/detail/spatial_index.hpp"

#include <algorithm>
#include <limits>

namespace qstep::detail {

namespace {
constexpr int kLeafSize = 16;
}

KdTree::KdTree(const Eigen::MatrixXd& coords, std::vector<int> ids)
    : coords_(&coords), dim_(static_cast<int>(coords.rows())), ids_(std::move(ids)) {
  if (!ids_.empty()) {
    nodes_.reserve(2 * ids_.size() / kLeafSize + 2);
    build(0, static_cast<int>(ids_.size()));
  }
}

int KdTree::build(int begin, int end) {
  const int node = static_cast<int>(nodes_.size());
  nodes_.push_back({begin, end, -1, -1});
  boxes_.resize(boxes_.size() + 2 * dim_);
  double* lo = boxes_.data() + 2 * dim_ * node;
  double* hi = lo + dim_;
  std::fill(lo, lo + dim_, std::numeric_limits<double>::infinity());
  std::fill(hi, hi + dim_, -std::numeric_limits<double>::infinity());
  for (int i = begin; i < end; ++i) {
    const double* p = coords_->col(ids_[i]).data();
    for (int c = 0; c < dim_; ++c) {
      lo[c] = std::min(lo[c], p[c]);
      hi[c] = std::max(hi[c], p[c]);
    }
  }
  if (end - begin <= kLeafSize) return node;

  int axis = 0;
  double spread = -1.0;
  for (int c = 0; c < dim_; ++c) {
    if (hi[c] - lo[c] > spread) {
      spread = hi[c] - lo[c];
      axis = c;
    }
  }
  if (spread <= 0.0) return node;

  const int mid = begin + (end - begin) / 2;
  std::nth_element(ids_.begin() + begin, ids_.begin() + mid, ids_.begin() + end,
                   [&](int a, int b) {
                     const double pa = (*coords_)(axis, a);
                     const double pb = (*coords_)(axis, b);
                     return pa < pb || (pa == pb && a < b);
                   });
  const int left = build(begin, mid);
  const int right = build(mid, end);
  nodes_[node].left = left;
  nodes_[node].right = right;
  return node;
}

double KdTree::box_distance(int node, const double* query) const {
  const double* lo = boxes_.data() + 2 * dim_ * node;
  const double* hi = lo + dim_;
  double sum = 0.0;
  for (int c = 0; c < dim_; ++c) {
    double d = 0.0;
    if (query[c] < lo[c]) {
      d = lo[c] - query[c];
    } else if (query[c] > hi[c]) {
      d = query[c] - hi[c];
    }
    sum += d * d;
  }
  return std::sqrt(sum);
}

void KdTree::radius_query(const double* query, double r, bool closed,
                          std::vector<std::pair<int, double>>& out) const {
  if (ids_.empty()) return;
  std::vector<int> stack{0};
  while (!stack.empty()) {
    const int node = stack.back();
    stack.pop_back();
    // The box bound is a lower bound up to rounding; keep a small margin so
    // that no point whose exact distance qualifies is skipped.
    if (box_distance(node, query) > r * (1.0 + 1e-12) + 1e-300) continue;
    const Node& n = nodes_[node];
    if (n.left < 0) {
      for (int i = n.begin; i < n.end; ++i) {
        const int id = ids_[i];
        const double d = euclidean(query, coords_->col(id).data(), dim_);
        if (d < r || (closed && d == r)) out.emplace_back(id, d);
      }
    } else {
      stack.push_back(n.left);
      stack.push_back(n.right);
    }
  }
}

std::pair<int, double> KdTree::nearest(const double* query, int exclude) const {
  int best = -1;
  double best_d = std::numeric_limits<double>::infinity();
  if (ids_.empty()) return {best, best_d};
  std::vector<int> stack{0};
  while (!stack.empty()) {
    const int node = stack.back();
    stack.pop_back();
    if (box_distance(node, query) > best_d * (1.0 + 1e-12)) continue;
    const Node& n = nodes_[node];
    if (n.left < 0) {
      for (int i = n.begin; i < n.end; ++i) {
        const int id = ids_[i];
        if (id == exclude) continue;
        const double d = euclidean(query, coords_->col(id).data(), dim_);
        if (d < best_d || (d == best_d && id < best)) {
          best = id;
          best_d = d;
        }
      }
    } else {
      // Visit the nearer child first.
      const double dl = box_distance(n.left, query);
      const double dr = box_distance(n.right, query);
      if (dl <= dr) {
        stack.push_back(n.right);
        stack.push_back(n.left);
      } else {
        stack.push_back(n.left);
        stack.push_back(n.right);
      }
    }
  }
  return {best, best_d};
}

}  // namespace qstep::detail
