#include "qstep/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>
#include <sstream>

#include <Eigen/SVD>

#include "qstep/commands.hpp"
#include "qstep/diff.hpp"
#include "qstep/errors.hpp"
#include "qstep/germs.hpp"
#include "qstep/io.hpp"
#include "qstep/metric_space.hpp"
#include "qstep/qpoint.hpp"
#include "qstep/stepanov.hpp"
#include "qstep/synth.hpp"

namespace qstep {

namespace {

struct Outcome {
  bool passed;
  std::string detail;
};

std::string num(double v) {
  std::ostringstream s;
  s.precision(4);
  s << v;
  return s.str();
}

QPoint random_qpoint(UniformSource& rng, int q, int k) {
  Eigen::MatrixXd m(k, q);
  for (int c = 0; c < q; ++c) {
    for (int r = 0; r < k; ++r) m(r, c) = rng.next(-1.0, 1.0);
  }
  return QPoint(std::move(m));
}

SyntheticSpec shaped(const std::string& generator, int grid, std::uint64_t seed) {
  SyntheticSpec s;
  s.generator = generator;
  s.grid = grid;
  s.seed = seed;
  if (generator == "branchpoint" || generator == "separated_smooth") {
    s.q = 2;
    s.k = 2;
    s.dim = 2;
  } else if (generator == "weierstrass_mix") {
    s.q = 2;
    s.k = 1;
    s.dim = 2;
  }
  return s;
}

ChartPtr identity_chart(const SampledQFunction& f) {
  return std::make_shared<const Chart>(Chart::identity(f.space(), f.domain()));
}

int grid_center(int n, int dim) {
  int index = 0, stride = 1;
  for (int d = 0; d < dim; ++d) {
    index += (n / 2) * stride;
    stride *= n;
  }
  return index;
}

double operator_norm(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  return Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues()(0);
}

// 1. qdist against the permutation oracle.
Outcome metric_oracle(const VerifyOptions& opt) {
  UniformSource rng(opt.seed);
  const auto start = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const int q = 2 + t % 5;
    const int k = 1 + (t / 5) % 3;
    const QPoint a = random_qpoint(rng, q, k);
    const QPoint b = random_qpoint(rng, q, k);
    worst = std::max(worst, std::abs(qdist(a, b) - qdist_bruteforce(a, b)));
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const bool ok = worst <= opt.metric_eq && seconds < 10.0;
  return {ok, "max |qdist - brute force| = " + num(worst) + " (allowed " + num(opt.metric_eq) + "), " +
                  num(seconds) + " s for 1000 pairs"};
}

// 2. Symmetry, triangle inequality and identity of indiscernibles.
Outcome metric_axioms(const VerifyOptions& opt) {
  UniformSource rng(opt.seed + 1);
  int asym = 0, triangle = 0, identity = 0;
  double worst_excess = -1.0;
  for (int t = 0; t < 1000; ++t) {
    const int q = 2 + t % 5;
    const int k = 1 + (t / 5) % 3;
    const QPoint a = random_qpoint(rng, q, k);
    const QPoint b = random_qpoint(rng, q, k);
    const QPoint c = random_qpoint(rng, q, k);
    if (qdist(a, b) != qdist(b, a) || qdist(a, c) != qdist(c, a) || qdist(b, c) != qdist(c, b)) ++asym;
    const double excess = qdist(a, c) - qdist(a, b) - qdist(b, c);
    worst_excess = std::max(worst_excess, excess);
    if (excess > 1e-9) ++triangle;

    Eigen::MatrixXd shuffled = a.points();
    for (int i = q - 1; i > 0; --i) {
      const int j = std::min(i, static_cast<int>(rng.next() * (i + 1)));
      shuffled.col(i).swap(shuffled.col(j));
    }
    Eigen::MatrixXd moved = a.points();
    moved(0, 0) += 1e-6;
    if (qdist(a, QPoint(shuffled)) != 0.0 || !(qdist(a, QPoint(moved)) > 0.0)) ++identity;
  }
  return {asym == 0 && triangle == 0 && identity == 0,
          "asymmetric " + std::to_string(asym) + ", triangle violations " + std::to_string(triangle) +
              " (max excess " + num(worst_excess) + "), indiscernibility failures " + std::to_string(identity)};
}

// 3. Splitting additivity on generated neighborhoods.
Outcome split_additivity(const VerifyOptions& opt) {
  UniformSource rng(opt.seed + 2);
  int splits = 0, pairs = 0, additivity = 0, recomposition = 0, outside = 0;
  double worst = 0.0;
  for (int s = 0; s < 20; ++s) {
    const int q = 2 + s % 5;
    const int k = 1 + s % 3;
    const int clusters = std::min(q, 2 + s % 2);
    Eigen::MatrixXd centers(k, clusters);
    for (int c = 0; c < clusters; ++c) {
      for (int r = 0; r < k; ++r) centers(r, c) = 4.0 * c + rng.next(-1.0, 1.0);
    }
    Eigen::MatrixXd pts(k, q);
    for (int i = 0; i < q; ++i) {
      const int c = i < clusters ? i : static_cast<int>(rng.next() * clusters);
      for (int r = 0; r < k; ++r) pts(r, i) = centers(r, c) + rng.next(-0.05, 0.05);
    }
    const QPoint base(pts);
    const auto split = separation_split(base);
    if (!split) continue;
    ++splits;
    const double reach = 0.99 * split->neighborhood_radius();
    auto near = [&] {
      Eigen::MatrixXd m = base.points();
      for (int i = 0; i < q; ++i) {
        Eigen::VectorXd v(k);
        for (int r = 0; r < k; ++r) v[r] = rng.next(-1.0, 1.0);
        const double len = v.norm();
        if (len > 0.0) v *= reach * rng.next() / len;
        m.col(i) += v;
      }
      for (int i = q - 1; i > 0; --i) {
        const int j = std::min(i, static_cast<int>(rng.next() * (i + 1)));
        m.col(i).swap(m.col(j));
      }
      return QPoint(std::move(m));
    };
    for (int p = 0; p < 200; ++p) {
      const QPoint a = near();
      const QPoint b = near();
      ++pairs;
      if (!in_neighborhood(*split, a) || !in_neighborhood(*split, b)) {
        ++outside;
        continue;
      }
      const auto [a1, a2] = project_split(*split, a);
      const auto [b1, b2] = project_split(*split, b);
      const double whole = qdist_bruteforce(a, b);
      const double g1 = qdist_bruteforce(a1, b1);
      const double g2 = qdist_bruteforce(a2, b2);
      const double err = std::abs(whole * whole - g1 * g1 - g2 * g2);
      worst = std::max(worst, err);
      if (err > 1e-9) ++additivity;
      if (!(concatenate(a1, a2) == a) || !(concatenate(b1, b2) == b)) ++recomposition;
    }
  }
  const bool ok = splits == 20 && outside == 0 && additivity == 0 && recomposition == 0;
  return {ok, std::to_string(splits) + " splittings, " + std::to_string(pairs) + " pairs, max |G^2 - G1^2 - G2^2| = " +
                  num(worst) + ", additivity failures " + std::to_string(additivity) + ", recomposition failures " +
                  std::to_string(recomposition) + ", outside U " + std::to_string(outside)};
}

// 4. Exact recovery of affine branches.
Outcome affine_recovery(const VerifyOptions& opt) {
  double worst_l = 0.0, worst_p = 0.0, worst_res = 0.0;
  int instances = 0, failures = 0;
  for (int q = 1; q <= 4; ++q) {
    for (int n = 1; n <= 3; ++n) {
      SyntheticSpec spec;
      spec.generator = "affine";
      spec.q = q;
      spec.k = 2;
      spec.dim = n;
      spec.grid = n == 1 ? 41 : n == 2 ? 21 : 9;
      spec.seed = opt.seed + 17 * q + n;
      const SampledQFunction f = synthesize(spec);
      const auto branches = affine_branches(spec);
      const int x = grid_center(spec.grid, n);
      const Eigen::VectorXd at = f.space().points().col(x);
      const auto chart = identity_chart(f);
      ++instances;
      try {
        const AffineQGerm g = fit_differential(f, x, 0.3, chart);
        for (int i = 0; i < q; ++i) {
          const GermComponent& c = g.components()[i];
          const Eigen::VectorXd p_true = branches[i].p + branches[i].l * at;
          worst_l = std::max(worst_l, (c.l - branches[i].l).cwiseAbs().maxCoeff());
          worst_p = std::max(worst_p, (c.p - p_true).cwiseAbs().maxCoeff());
        }
        const QuotientCurve res = residual(f, g, x, default_schedule(f.space()));
        for (const auto& pt : res.points) {
          if (pt.count > 0) worst_res = std::max(worst_res, pt.value);
        }
      } catch (const PreconditionError&) {
        ++failures;
      }
    }
  }
  const bool ok = failures == 0 && worst_l <= 1e-8 && worst_p <= 1e-8 && worst_res <= 1e-8;
  return {ok, std::to_string(instances) + " instances, max matrix error " + num(worst_l) + ", max base error " +
                  num(worst_p) + ", max residual " + num(worst_res) + ", fit failures " + std::to_string(failures)};
}

// 5. Diagonal functions collapse to one eqty group.
Outcome eqty_enforcement(const VerifyOptions& opt) {
  int fits = 0, split_groups = 0, not_identical = 0, failures = 0;
  double worst_identity = 0.0;
  for (int q : {2, 3}) {
    SyntheticSpec spec;
    spec.generator = "diagonal";
    spec.q = q;
    spec.k = 2;
    spec.dim = 2;
    spec.grid = 9;
    spec.seed = opt.seed;
    const SampledQFunction f = synthesize(spec);
    const auto chart = identity_chart(f);
    for (int x : f.domain()) {
      ++fits;
      try {
        const AffineQGerm g = fit_differential(f, x, 0.3, chart);
        if (g.group_count() != 1) ++split_groups;
        for (const auto& c : g.components()) {
          if (c.l != g.components()[0].l || c.p != g.components()[0].p) {
            ++not_identical;
            break;
          }
        }
      } catch (const PreconditionError&) {
        ++failures;
      }
      const Eigen::VectorXd y = f.space().points().col(x);
      Eigen::VectorXd F(2);
      F << y[0] * y[0], std::cos(y[1]);
      const Eigen::VectorXd fa = f.value(x).point(0);
      const double lhs = qdist(f.value(x), QPoint::repeated(q, F));
      worst_identity = std::max(worst_identity, std::abs(lhs - std::sqrt(double(q)) * (fa - F).norm()));
    }
  }
  const bool ok = failures == 0 && split_groups == 0 && not_identical == 0 && worst_identity <= 1e-9;
  return {ok, std::to_string(fits) + " fits, multi-group " + std::to_string(split_groups) + ", non-identical " +
                  std::to_string(not_identical) + ", failures " + std::to_string(failures) +
                  ", max identity error " + num(worst_identity)};
}

// 6. The z^{3/2} branch point is differentiable with a vanishing germ.
Outcome branch_point(const VerifyOptions& opt) {
  const SampledQFunction f = synthesize(shaped("branchpoint", 129, opt.seed));
  const int x = 64 * 129 + 64;
  const auto chart = identity_chart(f);
  const auto schedule = default_schedule(f.space());
  const DecisionRule decision;
  const DiffVerdict v = diff_verdict(f, x, schedule, chart, decision);
  if (!v.germ || !v.residual) return {false, "no germ: " + v.error};
  double norm = 0.0;
  for (const auto& c : v.germ->components()) norm = std::max(norm, operator_norm(c.l));
  const double slope = loglog_slope(*v.residual);
  const bool ok = norm <= 0.1 && slope >= 0.45 && v.differentiable;
  return {ok, "max matrix norm " + num(norm) + ", residual slope " + num(slope) + ", verdict " +
                  (v.differentiable ? "differentiable" : "not differentiable")};
}

// 7. Stratum certificates stay within 6i.
Outcome six_i(const VerifyOptions& opt) {
  struct Case {
    std::string generator;
    StratifyVariant variant;
  };
  const std::vector<Case> corpus = {{"affine", StratifyVariant::metric},
                                    {"separated_smooth", StratifyVariant::metric},
                                    {"branchpoint", StratifyVariant::metric},
                                    {"diagonal", StratifyVariant::metric},
                                    {"weierstrass_mix", StratifyVariant::metric},
                                    {"separated_smooth", StratifyVariant::approximate}};
  const int i_max = 3, j_max = 8;
  int strata = 0, violations = 0;
  long long far = 0, near = 0;
  double worst = 0.0;
  for (const auto& c : corpus) {
    SyntheticSpec spec = shaped(c.generator, 20, opt.seed);
    if (c.generator == "affine") {
      spec.q = 2;
      spec.k = 1;
    }
    const SampledQFunction f = synthesize(spec);
    CoverOptions cover;
    cover.threads = opt.threads;
    cover.stratify.threads = opt.threads;
    cover.stratify.variant = c.variant;
    if (c.variant == StratifyVariant::approximate) {
      cover.stratify.delta = default_delta(f, default_schedule(f.space()));
    }
    const auto net = value_net(f, 1.0 / (2.0 * j_max));
    const auto report = stepanov_cover(f, i_max, j_max, net, cover);
    for (const auto& s : report.strata) {
      if (s.members.size() < 2) continue;
      ++strata;
      worst = std::max(worst, s.lip_certificate / (6.0 * s.i));
      if (s.lip_certificate > 6.0 * s.i + 1e-9) ++violations;
      const double scale = 1.0 / s.j;
      const int first = s.members[0];
      for (int m : s.members) {
        if (m == first) continue;
        (f.space().distance(first, m) >= scale ? far : near) += 1;
      }
    }
  }
  const bool ok = strata > 0 && violations == 0 && far > 0 && near > 0;
  return {ok, std::to_string(strata) + " strata with two or more members, max certificate / 6i = " + num(worst) +
                  ", violations " + std::to_string(violations) + ", sampled pairs at >= 1/j: " +
                  std::to_string(far) + ", at < 1/j: " + std::to_string(near)};
}

// 8. The cover separates the smooth and rough halves of weierstrass_mix.
Outcome stepanov_cover_check(const VerifyOptions& opt) {
  std::string detail;
  bool ok = true;
  for (int grid : {64, 128}) {
    const SyntheticSpec spec = shaped("weierstrass_mix", grid, opt.seed);
    const SampledQFunction f = synthesize(spec);
    CoverOptions cover;
    cover.threads = opt.threads;
    cover.stratify.threads = opt.threads;
    cover.certificates = false;
    const auto net = value_net(f, 1.0 / 128.0);
    const auto report = stepanov_cover(f, 3, 64, net, cover);
    int counted = 0, correct = 0, leaked = 0;
    for (int x : f.domain()) {
      const double x1 = f.space().points()(0, x);
      if (std::abs(x1 - spec.split) <= 0.05) continue;
      ++counted;
      const bool smooth = x1 >= spec.split;
      correct += report.covered.contains(x) == smooth;
      leaked += report.direct_Af.contains(x) && report.uncovered.contains(x);
    }
    const double accuracy = double(correct) / counted;
    ok = ok && accuracy >= 0.95 && leaked == 0;
    detail += (detail.empty() ? "" : "; ") + std::to_string(grid) + "x" + std::to_string(grid) + ": accuracy " +
              num(100.0 * accuracy) + "%, uncovered A_f points outside the margin " + std::to_string(leaked);
  }
  return {ok, detail};
}

// 9. Extension by nearest point keeps f on C and at most triples abgr.
Outcome extension_bounds(const VerifyOptions& opt) {
  struct Instance {
    std::string name;
    SampledQFunction f;
    IndexSet C;
  };
  auto select = [](const SampledQFunction& f, auto&& keep) {
    std::vector<int> out;
    for (int x : f.domain()) {
      if (keep(f.space().points().col(x))) out.push_back(x);
    }
    return IndexSet(std::move(out));
  };
  auto line_function = [](int n, double lo, double hi, auto&& value) {
    PointCloudSpace space = grid_space(n, 1, lo, hi);
    std::vector<QPoint> values;
    for (int i = 0; i < n; ++i) values.push_back(value(space.points()(0, i)));
    return SampledQFunction(space, IndexSet::range(n), std::move(values));
  };

  std::vector<Instance> corpus;
  {
    SyntheticSpec s = shaped("affine", 24, opt.seed);
    const auto f = synthesize(s);
    corpus.push_back({"affine half-plane", f, select(f, [](const auto& p) { return p[0] < 0.5; })});
    corpus.push_back({"affine disc", f, select(f, [](const auto& p) { return (p.array() - 0.5).matrix().norm() < 0.3; })});
  }
  {
    SyntheticSpec s = shaped("affine", 24, opt.seed + 5);
    s.q = 3;
    s.k = 2;
    const auto f = synthesize(s);
    corpus.push_back({"affine square", f,
                      select(f, [](const auto& p) { return p.minCoeff() >= 0.2 && p.maxCoeff() <= 0.8; })});
  }
  {
    const auto f = synthesize(shaped("separated_smooth", 24, opt.seed));
    corpus.push_back({"separated half-plane", f, select(f, [](const auto& p) { return p[1] > 0.0; })});
    corpus.push_back({"separated disc", f, select(f, [](const auto& p) { return p.norm() < 0.35; })});
  }
  {
    const auto f = synthesize(shaped("branchpoint", 25, opt.seed));
    corpus.push_back({"branchpoint annulus", f, select(f, [](const auto& p) { return p.norm() >= 0.3; })});
  }
  {
    SyntheticSpec s = shaped("diagonal", 20, opt.seed);
    s.q = 2;
    s.k = 1;
    const auto f = synthesize(s);
    corpus.push_back({"diagonal triangle", f, select(f, [](const auto& p) { return p[0] + p[1] < 1.0; })});
  }
  {
    const auto f = synthesize(shaped("weierstrass_mix", 24, opt.seed));
    corpus.push_back({"weierstrass smooth side", f, select(f, [](const auto& p) { return p[0] > 0.6; })});
  }
  {
    const auto f = line_function(61, -1.0, 2.0, [](double t) {
      Eigen::MatrixXd m(1, 2);
      m << t * t, -t * t;
      return QPoint(m);
    });
    corpus.push_back({"parabola on [0,1]", f, select(f, [](const auto& p) { return p[0] >= 0.0 && p[0] <= 1.0; })});
  }
  {
    const auto f = line_function(51, 0.0, 1.0, [](double t) { return QPoint(Eigen::MatrixXd::Constant(1, 1, t)); });
    corpus.push_back({"identity on two intervals", f,
                      select(f, [](const auto& p) { return p[0] <= 0.4 + 1e-12 || p[0] >= 0.6 - 1e-12; })});
  }

  int changed = 0, tested = 0, violations = 0, skipped = 0, untested_instances = 0;
  double worst = 0.0;
  for (const auto& inst : corpus) {
    const SampledQFunction ext = extend(inst.f, inst.C);
    for (int c : inst.C) changed += !(ext.value(c) == inst.f.value(c));
    const auto schedule = default_schedule(inst.f.space());
    int here = 0;
    for (int x : boundary_points(inst.f.space(), inst.C)) {
      try {
        const auto check = extension_bound_check(inst.f, inst.C, ext, x, schedule);
        ++here;
        violations += !check.ok;
        if (check.rhs > 0.0) worst = std::max(worst, check.lhs / check.rhs);
      } catch (const PreconditionError&) {
        ++skipped;
      }
    }
    tested += here;
    untested_instances += here == 0;
  }
  const bool ok = changed == 0 && violations == 0 && untested_instances == 0;
  return {ok, std::to_string(corpus.size()) + " instances, values changed on C " + std::to_string(changed) + ", " +
                  std::to_string(tested) + " boundary points tested, violations " + std::to_string(violations) +
                  ", max lhs/rhs " + num(worst) + ", skipped " + std::to_string(skipped)};
}

// 10. Retraction onto the cusp complement decays at the origin.
Outcome retraction_decay(const VerifyOptions&) {
  const int n = 401;
  const PointCloudSpace space = grid_space(n, 2, -1.0, 1.0);
  std::vector<int> keep;
  for (int y = 0; y < space.size(); ++y) {
    const double a = space.points()(0, y), b = space.points()(1, y);
    if (!(a > 0.0 && std::abs(b) <= a * a)) keep.push_back(y);
  }
  const IndexSet U(std::move(keep));
  const int x = 200 * n + 200;
  const auto r = retraction(space, U, x);
  const RadiiSchedule schedule(0.8, 0.5, 4);
  const auto bins = annulus_bins(space, x, schedule);
  std::vector<double> ratios;
  for (const auto& bin : bins) {
    double worst = 0.0;
    for (const auto& nb : bin) worst = std::max(worst, space.distance(nb.index, r[nb.index]) / nb.distance);
    ratios.push_back(worst);
  }
  bool decreasing = true;
  for (std::size_t k = 1; k < ratios.size(); ++k) decreasing = decreasing && ratios[k] < ratios[k - 1];
  const bool ok = decreasing && ratios.back() <= 0.2;
  std::string list;
  for (double v : ratios) list += (list.empty() ? "" : ", ") + num(v);
  return {ok, "per-annulus ratios coarse to fine: " + list};
}

// 11. Doubling estimates on uniform grids.
Outcome doubling_estimates(const VerifyOptions&) {
  const RadiiSchedule schedule(0.1, 0.8, 4);
  auto central = [](const PointCloudSpace& s) {
    std::vector<int> out;
    for (int y = 0; y < s.size(); ++y) {
      const auto p = s.points().col(y);
      if (p.minCoeff() >= 0.3 && p.maxCoeff() <= 0.7) out.push_back(y);
    }
    return IndexSet(std::move(out));
  };
  const PointCloudSpace line = grid_space(1001, 1, 0.0, 1.0);
  const PointCloudSpace square = grid_space(256, 2, 0.0, 1.0);
  const double k1 = doubling_constant(line, schedule, central(line));
  const double k2 = doubling_constant(square, schedule, central(square));
  const double b1 = ball_comparison_bound(2.0, 4.0);
  const double b2 = ball_comparison_bound(3.0, 5.0);
  const bool ok = std::abs(k1 - 2.0) <= 0.4 && std::abs(k2 - 4.0) <= 0.8 && b1 == 4.0 && b2 == 27.0;
  return {ok, "K(line) = " + num(k1) + ", K(square) = " + num(k2) + ", L(2,4) = " + num(b1) + ", L(3,5) = " + num(b2)};
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// 12. Reports do not depend on the thread count.
Outcome determinism(const VerifyOptions& opt) {
  std::filesystem::path dir = opt.scratch;
  const bool temporary = dir.empty();
  if (temporary) dir = std::filesystem::temp_directory_path() / ("qstep-verify-" + std::to_string(opt.seed));
  std::filesystem::create_directories(dir);
  std::ostringstream sink;
  const auto fn = dir / "weierstrass.json";
  if (cmd_synth(shaped("weierstrass_mix", 40, opt.seed), fn, sink, sink) != kExitOk) {
    return {false, "synth failed: " + sink.str()};
  }
  ExperimentConfig config;
  config.i_max = 2;
  config.j_max = 16;
  bool ok = true;
  std::string detail;
  for (const std::string format : {"json", "csv"}) {
    config.format = format;
    std::vector<std::string> report, strat;
    for (int threads : {1, 8}) {
      config.threads = threads;
      const auto rp = dir / ("report-" + std::to_string(threads) + "." + format);
      const auto sp = dir / ("stratify-" + std::to_string(threads) + "." + format);
      if (cmd_report(fn, config, rp, sink, sink) != kExitOk || cmd_stratify(fn, config, sp, sink, sink) != kExitOk) {
        return {false, "command failed: " + sink.str()};
      }
      report.push_back(read_file(rp));
      strat.push_back(read_file(sp));
    }
    const bool same = report[0] == report[1] && strat[0] == strat[1] && !report[0].empty() && !strat[0].empty();
    ok = ok && same;
    detail += (detail.empty() ? "" : ", ") + format + (same ? " identical" : " differ");
  }
  if (temporary) std::filesystem::remove_all(dir);
  return {ok, "report and stratify outputs at 1 and 8 threads: " + detail};
}

struct Criterion {
  int id;
  const char* family;
  const char* name;
  Outcome (*run)(const VerifyOptions&);
};

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> all = {
      {1, "metric", "metric oracle equivalence", metric_oracle},
      {2, "metric", "metric axioms", metric_axioms},
      {3, "split", "splitting additivity", split_additivity},
      {4, "fit", "affine exact recovery", affine_recovery},
      {5, "fit", "eqty enforcement", eqty_enforcement},
      {6, "branchpoint", "branch-point differentiability", branch_point},
      {7, "stepanov", "6i certificate", six_i},
      {8, "stepanov", "stepanov cover", stepanov_cover_check},
      {9, "extension", "extension bounds", extension_bounds},
      {10, "space", "retraction decay", retraction_decay},
      {11, "space", "doubling estimates", doubling_estimates},
      {12, "determinism", "thread-count determinism", determinism},
  };
  return all;
}

}  // namespace

const std::vector<std::string>& acceptance_families() {
  static const std::vector<std::string> families = {"metric",   "split",     "fit",   "branchpoint",
                                                    "stepanov", "extension", "space", "determinism"};
  return families;
}

std::vector<CriterionResult> run_acceptance(const VerifyOptions& options, const std::string& filter,
                                            const std::function<void(const CriterionResult&)>& progress) {
  const auto& families = acceptance_families();
  if (filter != "all" && std::find(families.begin(), families.end(), filter) == families.end()) {
    throw PreconditionError("unknown criterion family \"" + filter + "\"");
  }
  std::vector<CriterionResult> results;
  for (const auto& c : criteria()) {
    if (filter != "all" && filter != c.family) continue;
    CriterionResult r;
    r.id = c.id;
    r.family = c.family;
    r.name = c.name;
    const auto start = std::chrono::steady_clock::now();
    try {
      const Outcome o = c.run(options);
      r.passed = o.passed;
      r.detail = o.detail;
    } catch (const std::exception& e) {
      r.passed = false;
      r.detail = std::string("error: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (progress) progress(r);
    results.push_back(std::move(r));
  }
  return results;
}

}  // namespace qstep
