#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <tuple>

#include <json.hpp>

#include "cheegerlab/error.hpp"
#include "cheegerlab/iso_comparison.hpp"
#include "cheegerlab/model_space.hpp"

namespace cheegerlab {

using Json = nlohmann::ordered_json;

/// Parsed comparison-constellation file.
///
///   { "m": 2,
///     "ambient": {"b": -1} | {"w_csv": "w.csv"} | {"w": "exp-r2"},
///     "h": {"kind": "zero"} | {"kind": "constant", "C": 1.5}
///        | {"kind": "hab", "a": -4, "b": -1} | {"kind": "csv", "path": "h.csv"},
///     "R": 40,
///     "balance_wrt": <ambient-style object, optional> }
///
/// Relative CSV paths resolve against the directory of the file.
struct ConstellationSpec {
  int m = 2;
  WarpingFunction w;
  /// Curvature bound b when the ambient is a space form.
  std::optional<double> ambient_b;
  BoundingFunction h = BoundingFunction::zero();
  double R = 0.0;
  std::optional<WarpingFunction> balance_wrt;
};

namespace detail {

inline double json_number(const Json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) throw ParseError(where + ": missing \"" + key + "\"");
  const auto& v = obj.at(key);
  if (!v.is_number()) throw ParseError(where + ": \"" + key + "\" must be a number");
  return v.get<double>();
}

inline std::string json_string(const Json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) throw ParseError(where + ": missing \"" + key + "\"");
  const auto& v = obj.at(key);
  if (!v.is_string()) throw ParseError(where + ": \"" + key + "\" must be a string");
  return v.get<std::string>();
}

inline std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

inline std::pair<WarpingFunction, std::optional<double>> parse_warping(const Json& obj, const std::string& where,
                                                                       const std::filesystem::path& base) {
  if (!obj.is_object()) throw ParseError(where + " must be an object");
  if (obj.size() != 1) throw ParseError(where + ": expected exactly one of \"b\", \"w_csv\", \"w\"");
  if (obj.contains("b")) {
    const double b = json_number(obj, "b", where);
    return {WarpingFunction::space_form(b), b};
  }
  if (obj.contains("w_csv")) return {WarpingFunction::from_csv(resolve(base, json_string(obj, "w_csv", where))), {}};
  if (obj.contains("w")) return {WarpingFunction::named(json_string(obj, "w", where)), {}};
  throw ParseError(where + ": expected one of \"b\", \"w_csv\", \"w\"");
}

inline BoundingFunction parse_bounding(const Json& obj, const std::filesystem::path& base) {
  if (!obj.is_object()) throw ParseError("\"h\" must be an object");
  const auto kind = json_string(obj, "kind", "h");
  if (kind == "zero") return BoundingFunction::zero();
  if (kind == "constant") return BoundingFunction::constant(json_number(obj, "C", "h"));
  if (kind == "hab") return BoundingFunction::hab(json_number(obj, "a", "h"), json_number(obj, "b", "h"));
  if (kind == "csv") return BoundingFunction::from_csv(resolve(base, json_string(obj, "path", "h")));
  throw ParseError("h: unknown kind \"" + kind + "\"");
}

} // namespace detail

inline ConstellationSpec parse_constellation(const Json& j, const std::filesystem::path& base = ".") {
  if (!j.is_object()) throw ParseError("constellation must be a JSON object");
  ConstellationSpec spec;
  if (!j.contains("m") || !j.at("m").is_number_integer()) throw ParseError("\"m\" must be an integer");
  spec.m = j.at("m").get<int>();
  if (spec.m < 2) throw ParseError("\"m\" must be >= 2");
  if (!j.contains("ambient")) throw ParseError("missing \"ambient\"");
  std::tie(spec.w, spec.ambient_b) = detail::parse_warping(j.at("ambient"), "ambient", base);
  if (j.contains("h")) spec.h = detail::parse_bounding(j.at("h"), base);
  spec.R = detail::json_number(j, "R", "constellation");
  if (!(spec.R > 0.0)) throw ParseError("\"R\" must be positive");
  if (j.contains("balance_wrt"))
    spec.balance_wrt = detail::parse_warping(j.at("balance_wrt"), "balance_wrt", base).first;
  return spec;
}

inline ConstellationSpec load_constellation(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return parse_constellation(j, path.parent_path());
}

inline IsoComparisonSpace build_space(const ConstellationSpec& spec) {
  return construct_W(spec.m, spec.w, spec.h, spec.R, spec.balance_wrt);
}

inline Json to_json(const BalanceWitness& w) {
  return Json{{"r", w.r}, {"inequality", w.inequality}, {"lhs", w.lhs}, {"rhs", w.rhs}};
}

inline Json optional_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

inline Json to_json(const BalanceVerdict& v) {
  Json j;
  j["grid"] = Json{{"r_min", v.r_min}, {"r_max", v.r_max}, {"points", v.grid_points}};
  j["balanced_above"] = v.balanced_above;
  j["balanced_below"] = v.balanced_below;
  j["witness_above"] = v.witness_above ? to_json(*v.witness_above) : Json(nullptr);
  j["witness_below"] = v.witness_below ? to_json(*v.witness_below) : Json(nullptr);
  j["warnings"] = v.warnings;
  return j;
}

inline Json to_json(const CheegerBound& b) {
  Json j;
  j["value"] = optional_json(b.value);
  j["converged"] = b.estimate.converged;
  j["last"] = b.estimate.last;
  j["extrapolated"] = optional_json(b.estimate.extrapolated);
  j["error_estimate"] = b.estimate.error_estimate;
  j["contraction"] = b.estimate.contraction;
  j["probe_radii"] = b.estimate.radii;
  j["probe_values"] = b.estimate.values;
  j["hypothesis_holds"] = b.hypothesis_holds;
  j["warnings"] = b.warnings;
  return j;
}

/// Full constellation report: construction, both verdicts, both Cheeger values.
inline Json constellation_report(const IsoComparisonSpace& space) {
  Json j;
  j["m"] = space.m;
  j["w"] = space.w.describe();
  j["h"] = space.h.describe();
  j["W"] = space.W.describe();
  j["balance_wrt"] = space.balance_wrt.describe();
  j["R"] = space.R;
  j["construction"] = Json{{"method", to_string(space.method)},
                           {"cross_check_max_rel", space.cross_check_max_rel}};
  j["balance"] = to_json(check_balance(space, default_balance_grid(space.R)));
  j["cheeger_upper"] = to_json(cheeger_upper_value(space, space.R));
  j["cheeger_lower"] = to_json(cheeger_lower_value(space, space.R));
  return j;
}

} // namespace cheegerlab
