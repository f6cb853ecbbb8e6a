#pragma once

// All pipeline tunables in one place, with a JSON form for the config echo.

#include <filesystem>
#include <fstream>
#include <string>

#include "json.hpp"

#include "aiskg/error.hpp"
#include "aiskg/estimator.hpp"
#include "aiskg/evaluation.hpp"
#include "aiskg/gmm.hpp"
#include "aiskg/knowledge_graph.hpp"
#include "aiskg/segmentation.hpp"
#include "aiskg/transmitter.hpp"

namespace aiskg {

struct RunConfig {
  SegmentationConfig segmentation;
  GmmOptions gmm;
  FitUnit fit_unit = FitUnit::Vessel;
  bool select_transmitters = true;  // off: every vessel counts as primary
  BuildOptions build;
  EstimatorConfig estimator;
  SplitSpec split;
  double long_haul_cut_km = 150.0;
  unsigned jobs = 1;
};

inline nlohmann::json to_json(const RunConfig& c) {
  using nlohmann::json;
  json levels = json::array();
  for (auto l : c.estimator.levels) levels.push_back(std::string(to_string(l)));
  return json{
      {"segmentation",
       {{"max_gap_minutes", c.segmentation.max_gap_minutes},
        {"min_sog_knots", c.segmentation.min_sog_knots},
        {"max_sog_knots", c.segmentation.max_sog_knots},
        {"min_messages", c.segmentation.min_messages},
        {"min_time_span_minutes", c.segmentation.min_time_span_minutes},
        {"min_displacement_km", c.segmentation.min_displacement_km},
        {"reapply_gap_after_filter", c.segmentation.reapply_gap_after_filter}}},
      {"gmm",
       {{"components", c.gmm.components},
        {"seed", c.gmm.seed},
        {"max_iter", c.gmm.max_iter},
        {"tol", c.gmm.tol},
        {"reg_floor", c.gmm.reg_floor},
        {"fit_unit", c.fit_unit == FitUnit::Vessel ? "vessel" : "subtrajectory"},
        {"enabled", c.select_transmitters}}},
      {"graph", {{"precision", c.build.precision}, {"record_final_run", c.build.record_final_run}}},
      {"estimator",
       {{"reliability_threshold", c.estimator.reliability_threshold},
        {"fallback",
         {{"cargo", c.estimator.fallback(ShipClass::Cargo)},
          {"tanker", c.estimator.fallback(ShipClass::Tanker)},
          {"other", c.estimator.fallback(ShipClass::Other)}}},
        {"levels", levels},
        {"strict", c.estimator.strict}}},
      {"split", {{"held_out_days", c.split.held_out_days}}},
      {"long_haul_cut_km", c.long_haul_cut_km},
      {"jobs", c.jobs},
  };
}

/// Overlays the fields present in `j` onto `c`; absent fields keep their value.
inline void apply_json(RunConfig& c, const nlohmann::json& j) {
  try {
    if (j.contains("segmentation")) {
      const auto& s = j["segmentation"];
      auto& o = c.segmentation;
      o.max_gap_minutes = s.value("max_gap_minutes", o.max_gap_minutes);
      o.min_sog_knots = s.value("min_sog_knots", o.min_sog_knots);
      o.max_sog_knots = s.value("max_sog_knots", o.max_sog_knots);
      o.min_messages = s.value("min_messages", o.min_messages);
      o.min_time_span_minutes = s.value("min_time_span_minutes", o.min_time_span_minutes);
      o.min_displacement_km = s.value("min_displacement_km", o.min_displacement_km);
      o.reapply_gap_after_filter = s.value("reapply_gap_after_filter", o.reapply_gap_after_filter);
    }
    if (j.contains("gmm")) {
      const auto& s = j["gmm"];
      c.gmm.components = s.value("components", c.gmm.components);
      c.gmm.seed = s.value("seed", c.gmm.seed);
      c.gmm.max_iter = s.value("max_iter", c.gmm.max_iter);
      c.gmm.tol = s.value("tol", c.gmm.tol);
      c.gmm.reg_floor = s.value("reg_floor", c.gmm.reg_floor);
      c.select_transmitters = s.value("enabled", c.select_transmitters);
      if (s.contains("fit_unit")) {
        const auto u = s["fit_unit"].get<std::string>();
        if (u == "vessel") c.fit_unit = FitUnit::Vessel;
        else if (u == "subtrajectory") c.fit_unit = FitUnit::SubTrajectory;
        else throw InvalidArgument("unknown fit_unit '" + u + "'");
      }
    }
    if (j.contains("graph")) {
      const auto& s = j["graph"];
      c.build.precision = s.value("precision", c.build.precision);
      c.build.record_final_run = s.value("record_final_run", c.build.record_final_run);
    }
    if (j.contains("estimator")) {
      const auto& s = j["estimator"];
      auto& e = c.estimator;
      e.reliability_threshold = s.value("reliability_threshold", e.reliability_threshold);
      e.strict = s.value("strict", e.strict);
      if (s.contains("fallback")) {
        for (const auto& [name, v] : s["fallback"].items()) e.fallback[parse_ship_class(name)] = v.get<double>();
      }
      if (s.contains("levels")) {
        e.levels.clear();
        for (const auto& l : s["levels"]) e.levels.push_back(parse_priority_level(l.get<std::string>()));
      }
    }
    if (j.contains("split")) c.split.held_out_days = j["split"].value("held_out_days", c.split.held_out_days);
    c.long_haul_cut_km = j.value("long_haul_cut_km", c.long_haul_cut_km);
    c.jobs = j.value("jobs", c.jobs);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("bad config: ") + e.what());
  }
  if (c.build.precision < 1 || c.build.precision > kMaxPrecision) throw InvalidArgument("precision out of range");
  if (c.gmm.components < 1) throw InvalidArgument("gmm components must be positive");
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw UnreadableSource("cannot open config " + path.string());
  RunConfig c;
  try {
    apply_json(c, nlohmann::json::parse(is));
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("bad config: ") + e.what());
  }
  return c;
}

}  // namespace aiskg
