#include "qstep/commands.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "qstep/errors.hpp"
#include "qstep/io.hpp"
#include "qstep/verify.hpp"

namespace qstep {

using nlohmann::json;

namespace {

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key) || j[key].is_null()) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("config field \"") + key + "\": " + e.what());
  }
}

template <typename T>
void read(const json& j, const char* key, std::optional<T>& out) {
  if (!j.contains(key) || j[key].is_null()) return;
  T v;
  read(j, key, v);
  out = v;
}

const json& section(const json& j, const char* key) {
  static const json empty = json::object();
  if (!j.contains(key)) return empty;
  if (!j[key].is_object()) throw FormatError(std::string("config section \"") + key + "\" must be an object");
  return j[key];
}

// Runs `body`, mapping library exceptions to exit codes.
template <typename Body>
int guarded(std::ostream& err, Body&& body) {
  try {
    return body();
  } catch (const FormatError& e) {
    err << "format error: " << e.what() << '\n';
    return kExitFormat;
  } catch (const PreconditionError& e) {
    err << "precondition failed: " << e.what() << '\n';
    return kExitPrecondition;
  } catch (const std::out_of_range& e) {
    err << "precondition failed: " << e.what() << '\n';
    return kExitPrecondition;
  }
}

std::string percent(int part, int whole) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(1) << (whole > 0 ? 100.0 * part / whole : 0.0) << '%';
  return s.str();
}

RadiiSchedule schedule_for(const ExperimentConfig& config, const PointCloudSpace& space) {
  return config.schedule ? *config.schedule : default_schedule(space);
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  if (!j.is_object()) throw FormatError("config: expected an object");
  ExperimentConfig c;
  const json& sched = section(j, "schedule");
  if (!sched.empty()) {
    double r0 = 0.0, theta = 0.5;
    int m = 8;
    if (!sched.contains("r0")) throw FormatError("config schedule needs r0");
    read(sched, "r0", r0);
    read(sched, "theta", theta);
    read(sched, "m", m);
    try {
      c.schedule = RadiiSchedule(r0, theta, m);
    } catch (const PreconditionError& e) {
      throw FormatError(std::string("config schedule: ") + e.what());
    }
  }
  const json& tol = section(j, "tolerances");
  read(tol, "metric_eq", c.metric_eq);
  read(tol, "eqty_tol", c.eqty_tol);
  read(tol, "floor", c.decision.floor);
  read(tol, "slope", c.decision.slope);
  read(tol, "infinity_threshold", c.infinity_threshold);
  read(tol, "diagonal", c.diagonal_tol);
  const json& strat = section(j, "stratify");
  read(strat, "i_max", c.i_max);
  read(strat, "j_max", c.j_max);
  std::string variant = "metric";
  read(strat, "variant", variant);
  if (variant == "metric") {
    c.variant = StratifyVariant::metric;
  } else if (variant == "approximate") {
    c.variant = StratifyVariant::approximate;
  } else {
    throw FormatError("config stratify.variant must be \"metric\" or \"approximate\"");
  }
  read(strat, "delta", c.delta);
  read(strat, "net_spacing", c.net_spacing);
  read(j, "fit_radius", c.fit_radius);
  read(j, "seed", c.seed);
  read(j, "threads", c.threads);
  read(j, "format", c.format);
  try {
    c.validate();
  } catch (const PreconditionError& e) {
    throw FormatError(std::string("config: ") + e.what());
  }
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) { return from_json(io::load_json(path)); }

void ExperimentConfig::validate() const {
  if (!(metric_eq >= 0.0)) throw PreconditionError("metric_eq must be >= 0");
  if (eqty_tol && !(*eqty_tol > 0.0)) throw PreconditionError("eqty_tol must be positive");
  if (!(decision.floor > 0.0)) throw PreconditionError("floor must be positive");
  if (!(decision.slope > 0.0)) throw PreconditionError("slope threshold must be positive");
  if (infinity_threshold && !(*infinity_threshold > 0.0)) throw PreconditionError("infinity_threshold must be positive");
  if (fit_radius && !(*fit_radius > 0.0)) throw PreconditionError("fit_radius must be positive");
  if (!(diagonal_tol > 0.0)) throw PreconditionError("diagonal tolerance must be positive");
  if (i_max < 1 || j_max < 1) throw PreconditionError("i_max and j_max must be >= 1");
  if (delta && !(*delta > 0.0 && *delta < 1.0)) throw PreconditionError("delta must lie in (0, 1)");
  if (net_spacing && !(*net_spacing > 0.0)) throw PreconditionError("net_spacing must be positive");
  if (threads < 1) throw PreconditionError("threads must be >= 1");
  if (format != "json" && format != "csv") throw PreconditionError("format must be json or csv");
}

double default_delta(const SampledQFunction& f, const RadiiSchedule& schedule) {
  double K = 1.0;
  try {
    K = doubling_constant(f.space(), schedule, f.domain());
  } catch (const PreconditionError&) {
    // Scales finer than the sampling: fall back on the finest resolvable K.
    const RadiiSchedule coarse(schedule.r0(), schedule.theta(), 2);
    K = doubling_constant(f.space(), coarse, f.domain());
  }
  return full_delta(K);
}

IndexSet boundary_points(const PointCloudSpace& space, const IndexSet& C) {
  std::vector<int> out;
  for (int x : C) {
    const double reach = 1.5 * space.nearest_neighbor_distance(x);
    for (const auto& nb : space.neighbors(x, reach)) {
      if (!C.contains(nb.index)) {
        out.push_back(x);
        break;
      }
    }
  }
  return IndexSet(std::move(out));
}

int cmd_qdist(const std::filesystem::path& a, const std::filesystem::path& b, bool oracle, std::ostream& out,
              std::ostream& err) {
  return guarded(err, [&] {
    const QPoint A = io::qpoint_from_json(io::load_json(a));
    const QPoint B = io::qpoint_from_json(io::load_json(b));
    const double d = qdist(A, B);
    out << "qdist " << io::format_double(d) << '\n';
    if (oracle) {
      if (A.q() > 8) {
        out << "bruteforce skipped (Q > 8)\n";
      } else {
        const double bf = qdist_bruteforce(A, B);
        out << "bruteforce " << io::format_double(bf) << '\n';
        out << "difference " << io::format_double(std::abs(d - bf)) << '\n';
      }
    }
    return int(kExitOk);
  });
}

int cmd_synth(const SyntheticSpec& spec, const std::filesystem::path& out_path, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const SampledQFunction f = synthesize(spec);
    const std::string text = io::function_to_json(f).dump() + "\n";
    if (out_path.empty()) {
      out << text;
    } else {
      io::save_text(out_path, text);
      out << "wrote " << spec.generator << " function with " << f.domain().size() << " points to "
          << out_path.string() << '\n';
    }
    return int(kExitOk);
  });
}

int cmd_report(const std::filesystem::path& function_file, const ExperimentConfig& config,
               const std::filesystem::path& out_path, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    config.validate();
    const SampledQFunction f = io::load_function(function_file);
    if (!f.space().embedded()) throw PreconditionError("report: the identity chart needs an embedded space");
    const RadiiSchedule schedule = schedule_for(config, f.space());
    const auto chart = std::make_shared<const Chart>(Chart::identity(f.space()));
    ReportOptions options;
    options.infinity_threshold = config.infinity_threshold;
    options.eqty_tol = config.eqty_tol;
    options.fit_radius = config.fit_radius;
    options.threads = config.threads;
    const auto verdicts = differentiability_report(f, schedule, chart, config.decision, options);
    const double threshold = infinity_threshold(f, options);

    int in_af = 0, interior = 0, interior_diff = 0;
    for (const auto& v : verdicts) {
      in_af += v.in_Af;
      if (v.in_Af && !v.boundary) {
        ++interior;
        interior_diff += v.differentiable;
      }
    }
    std::string text;
    if (config.format == "csv") {
      std::ostringstream s;
      io::write_report_csv(s, verdicts);
      text = s.str();
    } else {
      text = io::report_to_json(verdicts, threshold).dump() + "\n";
    }
    if (out_path.empty()) {
      out << text;
    } else {
      io::save_text(out_path, text);
    }
    out << "in_Af: " << percent(in_af, static_cast<int>(verdicts.size())) << " (" << in_af << "/" << verdicts.size()
        << ")\n";
    out << "differentiable: " << percent(interior_diff, interior) << " of interior (" << interior_diff << "/"
        << interior << ")\n";
    return int(kExitOk);
  });
}

int cmd_stratify(const std::filesystem::path& function_file, const ExperimentConfig& config,
                 const std::filesystem::path& out_path, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    config.validate();
    const SampledQFunction f = io::load_function(function_file);
    const RadiiSchedule schedule = schedule_for(config, f.space());
    CoverOptions options;
    options.schedule = schedule;
    options.infinity_threshold = config.infinity_threshold;
    options.threads = config.threads;
    options.stratify.variant = config.variant;
    options.stratify.threads = config.threads;
    if (config.variant == StratifyVariant::approximate) {
      options.stratify.delta = config.delta ? *config.delta : default_delta(f, schedule);
    }
    const double spacing = config.net_spacing ? *config.net_spacing : 1.0 / (2.0 * config.j_max);
    const auto net = value_net(f, spacing);
    const auto report = stepanov_cover(f, config.i_max, config.j_max, net, options);

    std::string text;
    if (config.format == "csv") {
      std::ostringstream s;
      io::write_stratification_csv(s, report);
      text = s.str();
    } else {
      text = io::stratification_to_json(report).dump() + "\n";
    }
    if (out_path.empty()) {
      out << text;
    } else {
      io::save_text(out_path, text);
    }
    int nonempty = 0;
    double worst = 0.0;
    for (const auto& s : report.strata) {
      nonempty += !s.members.empty();
      if (!std::isnan(s.lip_certificate)) worst = std::max(worst, s.lip_certificate / (6.0 * s.i));
    }
    out << "strata: " << report.strata.size() << " (" << nonempty << " nonempty), base points: " << net.size()
        << '\n';
    out << "covered: " << report.covered.size() << ", direct A_f: " << report.direct_Af.size()
        << ", uncovered: " << report.uncovered.size() << '\n';
    out << "max certificate / 6i: " << io::format_double(worst) << '\n';
    return int(kExitOk);
  });
}

int cmd_extend(const std::filesystem::path& function_file, const std::filesystem::path& c_file,
               const ExperimentConfig& config, const std::filesystem::path& out_path, std::ostream& out,
               std::ostream& err) {
  return guarded(err, [&] {
    config.validate();
    const SampledQFunction f = io::load_function(function_file);
    const IndexSet C = io::load_indices(c_file);
    for (int c : C) {
      if (!f.contains(c)) throw PreconditionError("extend: index " + std::to_string(c) + " of C is not in the domain");
    }
    const SampledQFunction ext = extend(f, C);
    const RadiiSchedule schedule = schedule_for(config, f.space());

    json rows = json::array();
    std::ostringstream csv;
    csv << "index,lhs,rhs,ok\n";
    int checked = 0, failed = 0, skipped = 0;
    for (int x : boundary_points(f.space(), C)) {
      try {
        const auto check = extension_bound_check(f, C, ext, x, schedule);
        rows.push_back({{"index", x}, {"lhs", check.lhs}, {"rhs", check.rhs}, {"ok", check.ok}});
        csv << x << ',' << io::format_double(check.lhs) << ',' << io::format_double(check.rhs) << ',' << check.ok
            << '\n';
        ++checked;
        failed += !check.ok;
      } catch (const PreconditionError&) {
        ++skipped;
      }
    }
    const std::string fn_text = io::function_to_json(ext).dump() + "\n";
    const std::string table = config.format == "csv" ? csv.str() : rows.dump() + "\n";
    if (out_path.empty()) {
      out << fn_text << table;
    } else {
      io::save_text(out_path, fn_text);
      std::filesystem::path table_path = out_path;
      table_path += config.format == "csv" ? ".checks.csv" : ".checks.json";
      io::save_text(table_path, table);
    }
    out << "boundary points checked: " << checked << ", bound violations: " << failed
        << ", skipped: " << skipped << '\n';
    return int(kExitOk);
  });
}

int cmd_verify(const ExperimentConfig& config, const std::string& filter, const std::filesystem::path& out_path,
               std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    config.validate();
    VerifyOptions options;
    options.metric_eq = config.metric_eq;
    options.seed = config.seed;
    options.threads = config.threads;
    const auto results = run_acceptance(options, filter, [&](const CriterionResult& r) {
      out << (r.passed ? "PASS" : "FAIL") << " [" << r.id << "] " << r.name << ": " << r.detail << '\n';
      out.flush();
    });
    bool all = true;
    json ledger = json::array();
    for (const auto& r : results) {
      all = all && r.passed;
      ledger.push_back({{"id", r.id},
                        {"family", r.family},
                        {"name", r.name},
                        {"passed", r.passed},
                        {"detail", r.detail},
                        {"seconds", r.seconds}});
    }
    const json doc = {{"filter", filter}, {"passed", all}, {"criteria", std::move(ledger)}};
    if (!out_path.empty()) io::save_text(out_path, doc.dump(2) + "\n");
    out << (all ? "all criteria passed" : "some criteria failed") << " (" << results.size() << " run)\n";
    return int(all ? kExitOk : kExitAcceptance);
  });
}

}  // namespace qstep
