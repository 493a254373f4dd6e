#include "qstep/stepanov.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "qstep/detail/parallel.hpp"
#include "qstep/detail/spatial_index.hpp"
#include "qstep/errors.hpp"

namespace qstep {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Largest j in [1, j_max] with d < 3/j, or 0.
int ball_scale(double d, int j_max) {
  int j = d > 0.0 ? static_cast<int>(std::min<double>(j_max, std::floor(3.0 / d))) : j_max;
  while (j >= 1 && !(d < 3.0 / j)) --j;
  while (j < j_max && d < 3.0 / (j + 1)) ++j;
  return j;
}

// For every j in [1, j_max]: the max quotient over other domain points of
// B(x, 3/j) and their number. Scales coarser than the first one whose
// quotient exceeds `cap` are left at +inf.
struct LocalProfile {
  std::vector<double> lip;
  std::vector<int> others;
};

LocalProfile local_profile(const SampledQFunction& f, int x, int j_max, double cap, int j_min = 1) {
  LocalProfile out{std::vector<double>(j_max, kInf), std::vector<int>(j_max, 0)};
  std::vector<double> bin_max(j_max + 1, 0.0);
  std::vector<int> bin_count(j_max + 1, 0);
  const QPoint& fx = f.value(x);
  double done = 0.0;
  double radius = 3.0 / j_max;
  int resolved = j_max + 1;
  double running = 0.0;
  int running_count = 0;
  while (true) {
    for (const auto& nb : f.space().neighbors(x, radius)) {
      if (nb.distance < done || nb.index == x || !f.contains(nb.index)) continue;
      const int J = ball_scale(nb.distance, j_max);
      if (J == 0) continue;
      bin_max[J] = std::max(bin_max[J], qdist(f.value(nb.index), fx) / nb.distance);
      ++bin_count[J];
    }
    for (int j = resolved - 1; j >= 1 && 3.0 / j <= radius; --j) {
      running = std::max(running, bin_max[j]);
      running_count += bin_count[j];
      out.lip[j - 1] = running;
      out.others[j - 1] = running_count;
      resolved = j;
    }
    if (resolved <= j_min) break;
    if (resolved <= j_max && out.lip[resolved - 1] > cap) break;
    done = radius;
    radius = std::min(2.0 * radius, 3.0);
  }
  return out;
}

// ok[(i-1) * j_max + (j-1)] for the approximate condition at fullness delta.
std::vector<char> approximate_profile(const SampledQFunction& f, int x, int i_max, int j_max, double delta) {
  const auto& space = f.space();
  auto nbs = space.neighbors(x, 3.0);
  std::stable_sort(nbs.begin(), nbs.end(), [](const Neighbor& a, const Neighbor& b) { return a.distance < b.distance; });
  const QPoint& fx = f.value(x);
  std::vector<double> quotient(nbs.size(), 0.0);
  for (std::size_t s = 0; s < nbs.size(); ++s) {
    const int y = nbs[s].index;
    if (y != x && f.contains(y)) quotient[s] = qdist(f.value(y), fx) / nbs[s].distance;
  }
  std::vector<char> ok(static_cast<std::size_t>(i_max) * j_max, 0);
  for (int i = 1; i <= i_max; ++i) {
    // worst[g]: max bad ratio over balls ending at distance group g.
    std::vector<std::pair<double, double>> worst;  // (group distance, running max ratio)
    double total = 0.0, bad = 0.0, running = 0.0;
    for (std::size_t s = 0; s < nbs.size();) {
      std::size_t e = s;
      while (e < nbs.size() && nbs[e].distance == nbs[s].distance) {
        const int y = nbs[e].index;
        const double w = space.weight(y);
        total += w;
        if (y != x && (!f.contains(y) || quotient[e] > i)) bad += w;
        ++e;
      }
      running = std::max(running, bad / total);
      worst.emplace_back(nbs[s].distance, running);
      s = e;
    }
    for (int j = 1; j <= j_max; ++j) {
      double sup = 0.0;
      for (const auto& [d, r] : worst) {
        if (!(d < 3.0 / j)) break;
        sup = r;
      }
      ok[(i - 1) * j_max + (j - 1)] = sup <= delta;
    }
  }
  return ok;
}

bool eligible(const SampledQFunction& f, int x) { return !is_isolated(f.space(), x); }

void check_scales(int i, int j) {
  if (i < 1 || j < 1) throw PreconditionError("stratify: i and j must be >= 1");
}

}  // namespace

double lipschitz_certificate(const SampledQFunction& f, const IndexSet& members) {
  if (members.size() < 2) throw PreconditionError("lipschitz_certificate: need at least 2 members");
  for (int m : members) f.value(m);
  const auto& space = f.space();
  const QPoint& anchor = f.value(members[0]);
  double spread = 0.0;
  for (int m : members) spread = std::max(spread, qdist(f.value(m), anchor));
  if (spread == 0.0) return 0.0;
  // Every pair has G <= 2 * spread, so pairs at distance >= 2 * spread / best
  // cannot raise the running maximum.
  const double bound = 2.0 * spread;
  double best = 0.0;
  if (!space.embedded()) {
    for (int a = 0; a < members.size(); ++a) {
      for (int b = a + 1; b < members.size(); ++b) {
        const int y = members[a], z = members[b];
        best = std::max(best, qdist(f.value(y), f.value(z)) / space.distance(y, z));
      }
    }
    return best;
  }
  detail::KdTree tree(space.points(), members.indices());
  for (int m : members) {
    const auto [nn, d] = tree.nearest(space.points().col(m).data(), m);
    if (nn >= 0) best = std::max(best, qdist(f.value(m), f.value(nn)) / d);
  }
  std::vector<std::pair<int, double>> hits;
  for (int m : members) {
    const double reach = best > 0.0 ? bound / best : kInf;
    hits.clear();
    tree.radius_query(space.points().col(m).data(), reach, false, hits);
    const QPoint& fm = f.value(m);
    for (const auto& [z, d] : hits) {
      if (z <= m) continue;
      best = std::max(best, qdist(fm, f.value(z)) / d);
    }
  }
  return best;
}

Stratum stratify(const SampledQFunction& f, const QPoint& P, int i, int j, const StratifyOptions& options) {
  check_scales(i, j);
  if (P.q() != f.q() || P.k() != f.k()) throw PreconditionError("stratify: base value differs in Q or k");
  if (options.variant == StratifyVariant::approximate && !(options.delta > 0.0)) {
    throw PreconditionError("stratify: approximate variant needs delta > 0");
  }
  const auto& domain = f.domain();
  std::vector<char> member(domain.size(), 0);
  detail::parallel_for(domain.size(), options.threads, [&](int c) {
    const int x = domain[c];
    if (!(qdist(f.value(x), P) < i / (2.0 * j)) || !eligible(f, x)) return;
    const auto profile = local_profile(f, x, j, options.variant == StratifyVariant::metric ? i : kInf, j);
    if (profile.others[j - 1] == 0) return;
    if (options.variant == StratifyVariant::metric) {
      member[c] = profile.lip[j - 1] <= i;
    } else {
      member[c] = approximate_profile(f, x, i, j, options.delta)[(i - 1) * j + (j - 1)];
    }
  });
  std::vector<int> members;
  for (int c = 0; c < domain.size(); ++c) {
    if (member[c]) members.push_back(domain[c]);
  }
  Stratum s{i, j, -1, P, IndexSet(std::move(members)), std::numeric_limits<double>::quiet_NaN()};
  if (s.members.size() >= 2) s.lip_certificate = lipschitz_certificate(f, s.members);
  return s;
}

std::vector<QPoint> value_net(const SampledQFunction& f, double spacing) {
  if (!(spacing > 0.0)) throw PreconditionError("value_net: spacing must be positive");
  std::vector<QPoint> net;
  for (const auto& v : f.values()) {
    const bool far = std::all_of(net.begin(), net.end(), [&](const QPoint& p) { return qdist(v, p) >= spacing; });
    if (far) net.push_back(v);
  }
  return net;
}

StratificationReport stepanov_cover(const SampledQFunction& f, int i_max, int j_max,
                                    const std::vector<QPoint>& base_points, const CoverOptions& options) {
  check_scales(i_max, j_max);
  const auto& sopt = options.stratify;
  if (sopt.variant == StratifyVariant::approximate && !(sopt.delta > 0.0)) {
    throw PreconditionError("stepanov_cover: approximate variant needs delta > 0");
  }
  for (const auto& P : base_points) {
    if (P.q() != f.q() || P.k() != f.k()) throw PreconditionError("stepanov_cover: base value differs in Q or k");
  }
  const auto& domain = f.domain();
  const int n = domain.size();
  const int np = static_cast<int>(base_points.size());

  StratificationReport report;
  report.i_max = i_max;
  report.j_max = j_max;
  report.base_points = base_points;
  report.variant = sopt.variant;
  report.delta = sopt.delta;
  report.schedule = options.schedule ? *options.schedule : default_schedule(f.space());
  ReportOptions ropt;
  ropt.infinity_threshold = options.infinity_threshold;
  report.infinity_threshold = infinity_threshold(f, ropt);

  // Per point: which (i, j) pass the local condition, and base points close
  // enough for the coarsest condition-1 ball.
  std::vector<std::vector<char>> local_ok(n);
  std::vector<std::vector<std::pair<int, double>>> near(n);
  std::vector<double> direct(n, kInf);
  detail::parallel_for(n, options.threads, [&](int c) {
    const int x = domain[c];
    try {
      direct[c] = abgr(f, x, report.schedule).headline;
    } catch (const PreconditionError&) {
    }
    if (!eligible(f, x)) return;
    const QPoint& fx = f.value(x);
    for (int p = 0; p < np; ++p) {
      const double d = qdist(fx, base_points[p]);
      if (d < i_max / 2.0) near[c].emplace_back(p, d);
    }
    if (near[c].empty()) return;
    auto& ok = local_ok[c];
    const bool metric = sopt.variant == StratifyVariant::metric;
    const auto profile = local_profile(f, x, j_max, metric ? i_max : kInf);
    if (metric) {
      ok.assign(static_cast<std::size_t>(i_max) * j_max, 0);
      for (int i = 1; i <= i_max; ++i) {
        for (int j = 1; j <= j_max; ++j) {
          ok[(i - 1) * j_max + (j - 1)] = profile.others[j - 1] > 0 && profile.lip[j - 1] <= i;
        }
      }
    } else {
      ok = approximate_profile(f, x, i_max, j_max, sopt.delta);
      for (int i = 1; i <= i_max; ++i) {
        for (int j = 1; j <= j_max; ++j) {
          if (profile.others[j - 1] == 0) ok[(i - 1) * j_max + (j - 1)] = 0;
        }
      }
    }
  });

  const auto slot = [&](int i, int j, int p) { return ((i - 1) * j_max + (j - 1)) * np + p; };
  std::vector<std::vector<int>> members(static_cast<std::size_t>(i_max) * j_max * np);
  for (int c = 0; c < n; ++c) {
    if (local_ok[c].empty()) continue;
    for (int i = 1; i <= i_max; ++i) {
      for (const auto& [p, d] : near[c]) {
        for (int j = 1; j <= j_max && d < i / (2.0 * j); ++j) {
          if (local_ok[c][(i - 1) * j_max + (j - 1)]) members[slot(i, j, p)].push_back(domain[c]);
        }
      }
    }
  }

  report.strata.resize(members.size());
  for (int i = 1; i <= i_max; ++i) {
    for (int j = 1; j <= j_max; ++j) {
      for (int p = 0; p < np; ++p) {
        Stratum& s = report.strata[slot(i, j, p)];
        s.i = i;
        s.j = j;
        s.base = p;
        s.base_point = base_points[p];
        s.members = IndexSet(std::move(members[slot(i, j, p)]));
        s.lip_certificate = std::numeric_limits<double>::quiet_NaN();
      }
    }
  }
  detail::parallel_for(static_cast<int>(report.strata.size()), options.threads, [&](int s) {
    Stratum& st = report.strata[s];
    if (options.certificates && st.members.size() >= 2) st.lip_certificate = lipschitz_certificate(f, st.members);
  });

  std::vector<char> in_union(n, 0);
  for (const auto& s : report.strata) {
    for (int x : s.members) in_union[domain.position(x)] = 1;
  }
  std::vector<int> covered, af;
  for (int c = 0; c < n; ++c) {
    if (in_union[c]) covered.push_back(domain[c]);
    if (direct[c] <= report.infinity_threshold) af.push_back(domain[c]);
  }
  report.covered = IndexSet(std::move(covered));
  report.direct_Af = IndexSet(std::move(af));
  report.uncovered = set_difference(report.direct_Af, report.covered);
  return report;
}

SampledQFunction extend(const SampledQFunction& f, const IndexSet& C) {
  if (C.empty()) throw PreconditionError("extend: C is empty");
  for (int c : C) {
    if (!f.contains(c)) throw PreconditionError("extend: C is not contained in the domain");
  }
  const auto& space = f.space();
  SubsetLocator locator(space, C);
  std::vector<QPoint> values;
  values.reserve(space.size());
  for (int y = 0; y < space.size(); ++y) {
    values.push_back(C.contains(y) ? f.value(y) : f.value(locator.nearest(y).index));
  }
  SampledQFunction out(space, IndexSet::range(space.size()), std::move(values));
  out.lipschitz_hint = f.lipschitz_hint;
  return out;
}

ExtensionCheck extension_bound_check(const SampledQFunction& f, const IndexSet& C, const SampledQFunction& f_ext,
                                     int x, const RadiiSchedule& schedule) {
  if (!C.contains(x)) throw PreconditionError("extension_bound_check: x is not in C");
  const double along = abgr(f.restrict_to(C), x, schedule).headline;
  if (!std::isfinite(along)) throw PreconditionError("extension_bound_check: abgr along C is infinite");
  const double lhs = abgr(f_ext, x, schedule).headline;
  const double rhs = 3.0 * along + 1e-9 * (1.0 + 3.0 * along);
  return {lhs, rhs, lhs <= rhs};
}

IndexSet diagonal_set(const SampledQFunction& f, double tol) {
  std::vector<int> out;
  for (int x : f.domain()) {
    if (is_diagonal(f.value(x), tol)) out.push_back(x);
  }
  return IndexSet(std::move(out));
}

}  // namespace qstep
