#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qstep/diff.hpp"
#include "qstep/germs.hpp"
#include "qstep/metric_space.hpp"
#include "qstep/qpoint.hpp"
#include "qstep/stepanov.hpp"

namespace qstep::io {

using nlohmann::json;

/// Parses a JSON file; FormatError when unreadable or malformed.
json load_json(const std::filesystem::path& path);
void save_text(const std::filesystem::path& path, const std::string& text);

PointCloudSpace space_from_json(const json& j);
json space_to_json(const PointCloudSpace& space);

QPoint qpoint_from_json(const json& j);
json qpoint_to_json(const QPoint& p);
/// Bare [[f64; k] x Q] value list.
json qpoint_points(const QPoint& p);

AffineQGerm germ_from_json(const json& j, const ChartPtr& chart);
json germ_to_json(const AffineQGerm& g);

/// `space` may be inline or a path relative to `base_dir`.
SampledQFunction function_from_json(const json& j, const std::filesystem::path& base_dir = {});
json function_to_json(const SampledQFunction& f);
SampledQFunction load_function(const std::filesystem::path& path);

/// A JSON array of indices or an object with an "indices" array.
IndexSet load_indices(const std::filesystem::path& path);

json curve_to_json(const QuotientCurve& curve);

json report_to_json(const std::vector<DiffVerdict>& verdicts, double threshold);
void write_report_csv(std::ostream& out, const std::vector<DiffVerdict>& verdicts);

json stratification_to_json(const StratificationReport& report);
void write_stratification_csv(std::ostream& out, const StratificationReport& report);

/// Shortest round-trip decimal form, as used in every emitted file.
std::string format_double(double v);

}  // namespace qstep::io
