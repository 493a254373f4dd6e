#include "qstep/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "qstep/errors.hpp"

namespace qstep::io {

namespace {

template <typename T>
T get(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw FormatError(std::string("missing field \"") + key + "\"");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("field \"") + key + "\": " + e.what());
  }
}

double number(const json& j, const char* what) {
  if (!j.is_number()) throw FormatError(std::string(what) + ": expected a number");
  return j.get<double>();
}

Eigen::VectorXd vector_of(const json& j, int expected, const char* what) {
  if (!j.is_array()) throw FormatError(std::string(what) + ": expected an array");
  if (expected >= 0 && static_cast<int>(j.size()) != expected) {
    throw FormatError(std::string(what) + ": expected " + std::to_string(expected) + " entries, got " +
                      std::to_string(j.size()));
  }
  Eigen::VectorXd v(j.size());
  for (std::size_t c = 0; c < j.size(); ++c) v[c] = number(j[c], what);
  return v;
}

// Q x k nested list into a k x Q matrix.
Eigen::MatrixXd points_of(const json& j, int q, int k, const char* what) {
  if (!j.is_array() || static_cast<int>(j.size()) != q) {
    throw FormatError(std::string(what) + ": expected " + std::to_string(q) + " points");
  }
  Eigen::MatrixXd m(k, q);
  for (int i = 0; i < q; ++i) m.col(i) = vector_of(j[i], k, what);
  return m;
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

json load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void save_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out << text;
  if (!out) throw FormatError("failed writing " + path.string());
}

PointCloudSpace space_from_json(const json& j) {
  if (!j.is_object()) throw FormatError("space: expected an object");
  Eigen::VectorXd weights;
  if (j.contains("weights") && !j["weights"].is_null()) weights = vector_of(j["weights"], -1, "weights");
  try {
    if (j.contains("distance_matrix")) {
      const auto& rows = j["distance_matrix"];
      if (!rows.is_array() || rows.empty()) throw FormatError("distance_matrix: expected a nonempty array");
      const int n = static_cast<int>(rows.size());
      Eigen::MatrixXd table(n, n);
      for (int r = 0; r < n; ++r) table.row(r) = vector_of(rows[r], n, "distance_matrix").transpose();
      const int dim = j.contains("dim") ? get<int>(j, "dim") : 0;
      return PointCloudSpace::from_distances(std::move(table), std::move(weights), dim);
    }
    const int dim = get<int>(j, "dim");
    if (dim <= 0) throw FormatError("dim must be positive");
    const auto& pts = j.contains("points") ? j["points"] : json();
    if (!pts.is_array() || pts.empty()) throw FormatError("points: expected a nonempty array");
    Eigen::MatrixXd points(dim, pts.size());
    for (std::size_t c = 0; c < pts.size(); ++c) points.col(c) = vector_of(pts[c], dim, "points");
    return PointCloudSpace::from_points(std::move(points), std::move(weights));
  } catch (const PreconditionError& e) {
    // Invalid geometry in a file is a format problem of that file.
    throw FormatError(std::string("space: ") + e.what());
  }
}

json space_to_json(const PointCloudSpace& space) {
  json j;
  if (space.embedded()) {
    j["dim"] = space.dim();
    json pts = json::array();
    for (int c = 0; c < space.size(); ++c) {
      json p = json::array();
      for (int d = 0; d < space.dim(); ++d) p.push_back(space.points()(d, c));
      pts.push_back(std::move(p));
    }
    j["points"] = std::move(pts);
  } else {
    if (space.dim() > 0) j["dim"] = space.dim();
    json rows = json::array();
    for (int r = 0; r < space.size(); ++r) {
      json row = json::array();
      for (int c = 0; c < space.size(); ++c) row.push_back(space.distance_table()(r, c));
      rows.push_back(std::move(row));
    }
    j["distance_matrix"] = std::move(rows);
  }
  bool unit = true;
  for (int c = 0; c < space.size(); ++c) unit = unit && space.weight(c) == 1.0;
  if (!unit) {
    json w = json::array();
    for (int c = 0; c < space.size(); ++c) w.push_back(space.weight(c));
    j["weights"] = std::move(w);
  }
  return j;
}

QPoint qpoint_from_json(const json& j) {
  const int q = get<int>(j, "q");
  const int k = get<int>(j, "k");
  if (q <= 0 || k <= 0) throw FormatError("q and k must be positive");
  if (!j.contains("points")) throw FormatError("missing field \"points\"");
  return QPoint(points_of(j["points"], q, k, "points"));
}

json qpoint_points(const QPoint& p) {
  json pts = json::array();
  for (int i = 0; i < p.q(); ++i) {
    json v = json::array();
    for (int c = 0; c < p.k(); ++c) v.push_back(p.points()(c, i));
    pts.push_back(std::move(v));
  }
  return pts;
}

json qpoint_to_json(const QPoint& p) { return {{"q", p.q()}, {"k", p.k()}, {"points", qpoint_points(p)}}; }

AffineQGerm germ_from_json(const json& j, const ChartPtr& chart) {
  const int q = get<int>(j, "q");
  const int k = get<int>(j, "k");
  const int n = get<int>(j, "chart_dim");
  const int x = get<int>(j, "base_index");
  if (q <= 0 || k <= 0 || n <= 0) throw FormatError("germ: q, k and chart_dim must be positive");
  if (!chart || chart->dim() != n) throw FormatError("germ: chart_dim does not match the chart");
  const Eigen::MatrixXd p = points_of(j.contains("p") ? j["p"] : json(), q, k, "p");
  const auto& l = j.contains("l") ? j["l"] : json();
  if (!l.is_array() || static_cast<int>(l.size()) != q) throw FormatError("l: expected one matrix per component");
  std::vector<GermComponent> components(q);
  for (int i = 0; i < q; ++i) {
    components[i].p = p.col(i);
    components[i].l = points_of(l[i], k, n, "l").transpose();
  }
  try {
    const double tol = default_eqty_tolerance(QPoint(p));
    return enforce_eqty(chart, x, std::move(components), tol);
  } catch (const PreconditionError& e) {
    throw FormatError(std::string("germ: ") + e.what());
  }
}

json germ_to_json(const AffineQGerm& g) {
  json p = json::array(), l = json::array();
  for (const auto& c : g.components()) {
    json pv = json::array();
    for (int r = 0; r < g.k(); ++r) pv.push_back(c.p[r]);
    p.push_back(std::move(pv));
    json m = json::array();
    for (int r = 0; r < g.k(); ++r) {
      json row = json::array();
      for (int s = 0; s < g.chart_dim(); ++s) row.push_back(c.l(r, s));
      m.push_back(std::move(row));
    }
    l.push_back(std::move(m));
  }
  return {{"q", g.q()}, {"k", g.k()}, {"chart_dim", g.chart_dim()}, {"base_index", g.base_index()},
          {"p", std::move(p)}, {"l", std::move(l)}, {"groups", g.groups()}};
}

SampledQFunction function_from_json(const json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw FormatError("function: expected an object");
  if (!j.contains("space")) throw FormatError("missing field \"space\"");
  const json space_json = j["space"].is_string() ? load_json(base_dir / j["space"].get<std::string>()) : j["space"];
  PointCloudSpace space = space_from_json(space_json);
  const int q = get<int>(j, "q");
  const int k = get<int>(j, "k");
  if (q <= 0 || k <= 0) throw FormatError("q and k must be positive");
  std::vector<int> domain;
  if (j.contains("domain")) {
    domain = get<std::vector<int>>(j, "domain");
    if (domain.empty()) throw FormatError("domain is empty");
    for (int x : domain) {
      if (x < 0 || x >= space.size()) throw FormatError("domain index " + std::to_string(x) + " out of range");
    }
    for (std::size_t c = 1; c < domain.size(); ++c) {
      if (domain[c] <= domain[c - 1]) throw FormatError("domain must be strictly increasing");
    }
  } else {
    domain = IndexSet::range(space.size()).indices();
  }
  const auto& values = j.contains("values") ? j["values"] : json();
  if (!values.is_array() || values.size() != domain.size()) {
    throw FormatError("values: expected one Q-point per domain index");
  }
  std::vector<QPoint> qv;
  qv.reserve(values.size());
  for (const auto& v : values) {
    Eigen::MatrixXd m = points_of(v, q, k, "values");
    if (!m.allFinite()) throw FormatError("values: non-finite coordinate");
    qv.emplace_back(std::move(m));
  }
  SampledQFunction f(std::move(space), IndexSet(std::move(domain)), std::move(qv));
  if (j.contains("lipschitz_hint") && !j["lipschitz_hint"].is_null()) {
    f.lipschitz_hint = number(j["lipschitz_hint"], "lipschitz_hint");
  }
  return f;
}

json function_to_json(const SampledQFunction& f) {
  json values = json::array();
  for (const auto& v : f.values()) values.push_back(qpoint_points(v));
  json j = {{"space", space_to_json(f.space())},
            {"domain", f.domain().indices()},
            {"q", f.q()},
            {"k", f.k()},
            {"values", std::move(values)}};
  if (f.lipschitz_hint) j["lipschitz_hint"] = *f.lipschitz_hint;
  return j;
}

SampledQFunction load_function(const std::filesystem::path& path) {
  return function_from_json(load_json(path), path.parent_path());
}

IndexSet load_indices(const std::filesystem::path& path) {
  const json j = load_json(path);
  const json& arr = j.is_object() ? (j.contains("indices") ? j["indices"] : json()) : j;
  if (!arr.is_array()) throw FormatError(path.string() + ": expected an index array");
  std::vector<int> out;
  for (const auto& v : arr) {
    if (!v.is_number_integer() || v.get<long long>() < 0) throw FormatError(path.string() + ": invalid index");
    out.push_back(v.get<int>());
  }
  return IndexSet(std::move(out));
}

json curve_to_json(const QuotientCurve& curve) {
  json pts = json::array();
  for (const auto& p : curve.points) pts.push_back(json::array({p.radius, p.value, p.count}));
  return pts;
}

json report_to_json(const std::vector<DiffVerdict>& verdicts, double threshold) {
  json points = json::array();
  int in_af = 0, diff = 0, interior = 0, interior_diff = 0;
  for (const auto& v : verdicts) {
    json p = {{"index", v.index},
              {"in_Af", v.in_Af},
              {"abgr", number_or_null(v.abgr_estimate)},
              {"abgr_infinite", !std::isfinite(v.abgr_estimate)},
              {"abgr_curve", curve_to_json(v.abgr_curve)},
              {"germ", v.germ ? germ_to_json(*v.germ) : json(nullptr)},
              {"residual", v.residual ? curve_to_json(*v.residual) : json(nullptr)},
              {"differentiable", v.differentiable},
              {"boundary", v.boundary}};
    if (!v.error.empty()) p["error"] = v.error;
    points.push_back(std::move(p));
    in_af += v.in_Af;
    diff += v.differentiable;
    if (v.in_Af && !v.boundary) {
      ++interior;
      interior_diff += v.differentiable;
    }
  }
  return {{"infinity_threshold", threshold},
          {"summary",
           {{"points", verdicts.size()},
            {"in_Af", in_af},
            {"differentiable", diff},
            {"interior", interior},
            {"interior_differentiable", interior_diff}}},
          {"points", std::move(points)}};
}

void write_report_csv(std::ostream& out, const std::vector<DiffVerdict>& verdicts) {
  out << "index,in_Af,abgr,abgr_infinite,differentiable,boundary,residual_finest,residual_slope,groups,error\n";
  for (const auto& v : verdicts) {
    std::string finest, slope, groups;
    if (v.residual) {
      for (const auto& p : v.residual->points) {
        if (p.count > 0) finest = format_double(p.value);
      }
      slope = format_double(loglog_slope(*v.residual));
    }
    if (v.germ) groups = std::to_string(v.germ->group_count());
    std::string error = v.error;
    for (char& c : error) {
      if (c == ',' || c == '\n' || c == '"') c = ' ';
    }
    out << v.index << ',' << v.in_Af << ',' << (std::isfinite(v.abgr_estimate) ? format_double(v.abgr_estimate) : "")
        << ',' << !std::isfinite(v.abgr_estimate) << ',' << v.differentiable << ',' << v.boundary << ',' << finest
        << ',' << slope << ',' << groups << ',' << error << '\n';
  }
}

json stratification_to_json(const StratificationReport& report) {
  json base = json::array();
  for (const auto& p : report.base_points) base.push_back(qpoint_points(p));
  json strata = json::array();
  for (const auto& s : report.strata) {
    strata.push_back({{"i", s.i},
                      {"j", s.j},
                      {"base", s.base},
                      {"members", s.members.indices()},
                      {"certificate", number_or_null(s.lip_certificate)}});
  }
  return {{"config",
           {{"i_max", report.i_max},
            {"j_max", report.j_max},
            {"variant", report.variant == StratifyVariant::metric ? "metric" : "approximate"},
            {"delta", report.delta},
            {"schedule",
             {{"r0", report.schedule.r0()}, {"theta", report.schedule.theta()}, {"m", report.schedule.m()}}},
            {"infinity_threshold", report.infinity_threshold}}},
          {"base_points", std::move(base)},
          {"strata", std::move(strata)},
          {"covered", report.covered.indices()},
          {"direct_Af", report.direct_Af.indices()},
          {"uncovered", report.uncovered.indices()}};
}

void write_stratification_csv(std::ostream& out, const StratificationReport& report) {
  out << "i,j,base,members,certificate\n";
  for (const auto& s : report.strata) {
    out << s.i << ',' << s.j << ',' << s.base << ',' << s.members.size() << ','
        << (std::isnan(s.lip_certificate) ? "" : format_double(s.lip_certificate)) << '\n';
  }
}

}  // namespace qstep::io
