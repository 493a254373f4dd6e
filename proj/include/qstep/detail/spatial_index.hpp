#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace qstep::detail {

// Euclidean distance with a fixed summation order. Every distance in the
// library goes through this so ball membership is bitwise reproducible.
inline double euclidean(const double* a, const double* b, int dim) {
  double sum = 0.0;
  for (int c = 0; c < dim; ++c) {
    const double d = a[c] - b[c];
    sum += d * d;
  }
  return std::sqrt(sum);
}

// Static kd-tree over a subset of columns of a dim x n coordinate matrix.
class KdTree {
 public:
  KdTree() = default;
  KdTree(const Eigen::MatrixXd& coords, std::vector<int> ids);

  bool empty() const { return ids_.empty(); }

  // Appends (id, distance) for every indexed point with distance < r
  // (or <= r when closed). Order is unspecified.
  void radius_query(const double* query, double r, bool closed,
                    std::vector<std::pair<int, double>>& out) const;

  // Nearest indexed point other than `exclude`; ties go to the smallest id.
  std::pair<int, double> nearest(const double* query, int exclude = -1) const;

 private:
  struct Node {
    int begin = 0;
    int end = 0;
    int left = -1;
    int right = -1;
  };

  int build(int begin, int end);
  double box_distance(int node, const double* query) const;

  const Eigen::MatrixXd* coords_ = nullptr;
  int dim_ = 0;
  std::vector<int> ids_;
  std::vector<Node> nodes_;
  std::vector<double> boxes_;  // per node: dim lows then dim highs
};

}  // namespace qstep::detail
