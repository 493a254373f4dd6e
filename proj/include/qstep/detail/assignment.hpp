#pragma once

#include <array>
#include <limits>
#include <span>
#include <vector>

namespace qstep::detail {

// Minimum-cost perfect assignment on an n x n cost matrix (row-major),
// shortest augmenting paths with row/column potentials, O(n^3).
// Writes column assigned to each row into `assignment` and returns the
// optimal cost as read off the dual potentials.
template <typename Scalar>
Scalar min_cost_assignment(int n, std::span<const Scalar> cost, std::span<int> assignment) {
  constexpr int kStack = 16;
  const Scalar inf = std::numeric_limits<Scalar>::infinity();
  std::array<Scalar, kStack + 1> u_s{}, v_s{}, minv_s{};
  std::array<int, kStack + 1> p_s{}, way_s{};
  std::array<bool, kStack + 1> used_s{};
  std::vector<Scalar> u_h, v_h, minv_h;
  std::vector<int> p_h, way_h;
  std::vector<char> used_h;
  Scalar *u, *v, *minv;
  int *p, *way;
  bool* used_b = nullptr;
  char* used_c = nullptr;
  if (n <= kStack) {
    u = u_s.data(); v = v_s.data(); minv = minv_s.data();
    p = p_s.data(); way = way_s.data(); used_b = used_s.data();
  } else {
    u_h.assign(n + 1, Scalar(0)); v_h.assign(n + 1, Scalar(0)); minv_h.assign(n + 1, Scalar(0));
    p_h.assign(n + 1, 0); way_h.assign(n + 1, 0); used_h.assign(n + 1, 0);
    u = u_h.data(); v = v_h.data(); minv = minv_h.data();
    p = p_h.data(); way = way_h.data(); used_c = used_h.data();
  }
  auto used = [&](int j) -> bool { return used_b ? used_b[j] : used_c[j] != 0; };
  auto set_used = [&](int j, bool value) {
    if (used_b) used_b[j] = value; else used_c[j] = value ? 1 : 0;
  };

  // 1-based indices; column 0 is the virtual source.
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    for (int j = 0; j <= n; ++j) {
      minv[j] = inf;
      set_used(j, false);
    }
    do {
      set_used(j0, true);
      const int i0 = p[j0];
      Scalar delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used(j)) continue;
        const Scalar cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used(j)) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  for (int j = 1; j <= n; ++j) assignment[p[j] - 1] = j - 1;
  return -v[0];
}

}  // namespace qstep::detail
