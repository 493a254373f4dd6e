#include "qstep/synth.hpp"

#include <cmath>
#include <complex>
#include <numbers>

#include "qstep/errors.hpp"

namespace qstep {

namespace {

using nlohmann::json;

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("synthetic spec field \"") + key + "\": " + e.what());
  }
}

// Coordinates of grid point `index`, first axis fastest.
Eigen::VectorXd grid_point(int index, int n, int dim, double lo, double hi) {
  Eigen::VectorXd p(dim);
  for (int d = 0; d < dim; ++d) {
    p[d] = lo + (hi - lo) * (index % n) / (n - 1);
    index /= n;
  }
  return p;
}

struct Generator {
  double lo, hi;
  int q, k, dim;
};

Generator shape_of(const SyntheticSpec& s) {
  if (s.generator == "affine" || s.generator == "diagonal") return {0.0, 1.0, s.q, s.k, s.dim};
  if (s.generator == "branchpoint") return {-1.0, 1.0, 2, 2, 2};
  if (s.generator == "weierstrass_mix") return {0.0, 1.0, 2, 1, 2};
  if (s.generator == "separated_smooth") return {-0.5, 0.5, 2, 2, 2};
  throw PreconditionError("unknown generator \"" + s.generator + "\"");
}

// Smooth map for the diagonal generator: g_c(y) = sin(a_c . y + c), a_c = (c+1) (1, 1/2, 1/4).
Eigen::VectorXd diagonal_map(const Eigen::VectorXd& y, int k) {
  Eigen::VectorXd g(k);
  for (int c = 0; c < k; ++c) {
    double t = c;
    for (int d = 0; d < y.size(); ++d) t += (c + 1) * std::ldexp(1.0, -d) * y[d];
    g[c] = std::sin(t);
  }
  return g;
}

double diagonal_lipschitz(int q, int k, int dim) {
  double sum = 0.0;
  for (int c = 0; c < k; ++c) {
    for (int d = 0; d < dim; ++d) sum += std::pow((c + 1) * std::ldexp(1.0, -d), 2);
  }
  return std::sqrt(q * sum);
}

}  // namespace

SyntheticSpec SyntheticSpec::from_json(const json& j) {
  if (!j.is_object()) throw FormatError("synthetic spec: expected an object");
  SyntheticSpec s;
  read(j, "generator", s.generator);
  read(j, "grid", s.grid);
  read(j, "q", s.q);
  read(j, "k", s.k);
  read(j, "dim", s.dim);
  read(j, "noise", s.noise);
  read(j, "split", s.split);
  read(j, "zero", s.zero);
  read(j, "seed", s.seed);
  const bool fixed_shape = s.generator == "branchpoint" || s.generator == "weierstrass_mix" ||
                           s.generator == "separated_smooth";
  if (fixed_shape) {
    for (const char* key : {"q", "k", "dim"}) {
      if (j.contains(key)) {
        const Generator g = shape_of(s);
        const int expected = std::string(key) == "q" ? g.q : std::string(key) == "k" ? g.k : g.dim;
        if (j[key] != expected) {
          throw PreconditionError(s.generator + " requires " + key + " = " + std::to_string(expected));
        }
      }
    }
    const Generator g = shape_of(s);
    s.q = g.q;
    s.k = g.k;
    s.dim = g.dim;
  }
  s.validate();
  return s;
}

json SyntheticSpec::to_json() const {
  return {{"generator", generator}, {"grid", grid},   {"q", q},       {"k", k},      {"dim", dim},
          {"noise", noise},         {"split", split}, {"zero", zero}, {"seed", seed}};
}

void SyntheticSpec::validate() const {
  const Generator g = shape_of(*this);
  if (grid < 2) throw PreconditionError("grid must be >= 2");
  if (q < 1 || k < 1) throw PreconditionError("q and k must be >= 1");
  if (dim < 1 || dim > 3) throw PreconditionError("dim must be 1, 2 or 3");
  if (q != g.q || k != g.k || dim != g.dim) throw PreconditionError(generator + ": inconsistent q, k or dim");
  if (!(noise >= 0.0) || !std::isfinite(noise)) throw PreconditionError("noise must be >= 0");
  if (!(split >= 0.0 && split <= 1.0)) throw PreconditionError("split must lie in [0, 1]");
  if (std::pow(static_cast<double>(grid), dim) > 4e6) throw PreconditionError("grid too large");
}

PointCloudSpace grid_space(int n, int dim, double lo, double hi) {
  if (n < 2 || dim < 1) throw PreconditionError("grid_space: need n >= 2 and dim >= 1");
  int total = 1;
  for (int d = 0; d < dim; ++d) total *= n;
  Eigen::MatrixXd pts(dim, total);
  for (int i = 0; i < total; ++i) pts.col(i) = grid_point(i, n, dim, lo, hi);
  return PointCloudSpace::from_points(std::move(pts));
}

std::vector<GermComponent> affine_branches(const SyntheticSpec& spec) {
  UniformSource rng(spec.seed);
  std::vector<GermComponent> out(spec.q);
  for (int i = 0; i < spec.q; ++i) {
    out[i].p.resize(spec.k);
    for (int c = 0; c < spec.k; ++c) out[i].p[c] = rng.next(-1.0, 1.0);
    out[i].p[0] = 10.0 * i + 0.5 * out[i].p[0];
    out[i].l.resize(spec.k, spec.dim);
    for (int r = 0; r < spec.k; ++r) {
      for (int c = 0; c < spec.dim; ++c) out[i].l(r, c) = spec.zero ? 0.0 : rng.next(-1.0, 1.0);
    }
  }
  return out;
}

double weierstrass(double x) {
  double sum = 0.0;
  for (int n = 0; n <= 20; ++n) sum += std::pow(0.5, n) * std::cos(std::pow(7.0, n) * std::numbers::pi * x);
  return sum;
}

double smooth_profile(double x) { return 1.0 + 0.1 * std::sin(2.0 * std::numbers::pi * x); }

QPoint branchpoint_value(double x, double y) {
  const std::complex<double> z(x, y);
  const std::complex<double> w = std::sqrt(z * z * z);
  Eigen::MatrixXd pts(2, 2);
  pts << w.real(), -w.real(), w.imag(), -w.imag();
  return QPoint(std::move(pts));
}

SampledQFunction synthesize(const SyntheticSpec& spec) {
  spec.validate();
  const Generator g = shape_of(spec);
  PointCloudSpace space = grid_space(spec.grid, g.dim, g.lo, g.hi);
  const int n = space.size();
  const auto branches = spec.generator == "affine" ? affine_branches(spec) : std::vector<GermComponent>{};
  UniformSource noise(spec.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<QPoint> values;
  values.reserve(n);
  for (int idx = 0; idx < n; ++idx) {
    const Eigen::VectorXd y = space.points().col(idx);
    Eigen::MatrixXd pts(g.k, g.q);
    if (spec.generator == "affine") {
      for (int i = 0; i < g.q; ++i) pts.col(i) = branches[i].p + branches[i].l * y;
    } else if (spec.generator == "diagonal") {
      const Eigen::VectorXd v = diagonal_map(y, g.k);
      for (int i = 0; i < g.q; ++i) pts.col(i) = v;
    } else if (spec.generator == "branchpoint") {
      pts = branchpoint_value(y[0], y[1]).points();
    } else if (spec.generator == "weierstrass_mix") {
      const double w = y[0] < spec.split ? weierstrass(y[0]) : smooth_profile(y[0]);
      pts << w, -w;
    } else {
      const std::complex<double> z(y[0], y[1]);
      const std::complex<double> z2 = z * z;
      pts << z2.real(), 2.0 - z2.real(), z2.imag(), -z2.imag();
    }
    if (spec.noise > 0.0) {
      for (int i = 0; i < pts.size(); ++i) pts.data()[i] += noise.next(-spec.noise, spec.noise);
    }
    values.emplace_back(std::move(pts));
  }
  SampledQFunction f(std::move(space), IndexSet::range(n), std::move(values));
  if (spec.noise == 0.0) {
    if (spec.generator == "affine") {
      double sum = 0.0;
      for (const auto& b : branches) {
        const double op = b.l.size() ? Eigen::JacobiSVD<Eigen::MatrixXd>(b.l).singularValues()[0] : 0.0;
        sum += op * op;
      }
      f.lipschitz_hint = std::sqrt(sum);
    } else if (spec.generator == "diagonal") {
      f.lipschitz_hint = diagonal_lipschitz(g.q, g.k, g.dim);
    } else if (spec.generator == "branchpoint") {
      f.lipschitz_hint = std::sqrt(2.0) * 1.5 * std::pow(2.0, 0.25);
    } else if (spec.generator == "weierstrass_mix") {
      // Bound for the smooth branch; the rough branch has no finite one.
      f.lipschitz_hint = std::sqrt(2.0) * 0.2 * std::numbers::pi;
    } else {
      f.lipschitz_hint = 2.0;
    }
  }
  return f;
}

}  // namespace qstep
