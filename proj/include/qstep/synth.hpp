#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qstep/diff.hpp"
#include "qstep/germs.hpp"

namespace qstep {

/// Parameters of a synthetic Q-valued function on a uniform grid.
///   affine           Q affine branches p_i + l_i y on [0,1]^dim, branch i offset by 10 i
///   diagonal         Q copies of a smooth map on [0,1]^dim
///   branchpoint      the two square roots of z^3 on [-1,1]^2 (Q = 2, k = 2)
///   weierstrass_mix  +-w(x1) for x1 < split, +-(1 + 0.1 sin(2 pi x1)) otherwise, on [0,1]^2
///   separated_smooth z^2 and -z^2 + (2, 0) on [-0.5,0.5]^2
struct SyntheticSpec {
  std::string generator = "affine";
  int grid = 32;  // points per axis
  int q = 2;
  int k = 1;
  int dim = 2;
  double noise = 0.0;
  double split = 0.5;
  bool zero = false;  // affine: all matrices zero
  std::uint64_t seed = 1;

  static SyntheticSpec from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  /// Throws PreconditionError on invalid parameters.
  void validate() const;
};

/// n^dim grid on [lo, hi]^dim, first axis fastest.
PointCloudSpace grid_space(int n, int dim, double lo, double hi);

/// Uniform doubles in [0, 1) from the top 53 bits of std::mt19937_64.
class UniformSource {
 public:
  explicit UniformSource(std::uint64_t seed) : engine_(seed) {}
  double next() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double next(double lo, double hi) { return lo + (hi - lo) * next(); }

 private:
  std::mt19937_64 engine_;
};

/// Branches (p_i, l_i) of the affine generator; value at y is sum [[p_i + l_i y]].
std::vector<GermComponent> affine_branches(const SyntheticSpec& spec);

/// sum_{n=0}^{20} 0.5^n cos(7^n pi x).
double weierstrass(double x);
/// 1 + 0.1 sin(2 pi x).
double smooth_profile(double x);
/// [[w]] + [[-w]] with w^2 = z^3.
QPoint branchpoint_value(double x, double y);

SampledQFunction synthesize(const SyntheticSpec& spec);

}  // namespace qstep
