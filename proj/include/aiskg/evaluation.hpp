#pragma once

// Temporal hold-out, segment replay against the graph, and error metrics.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "aiskg/error.hpp"
#include "aiskg/estimator.hpp"
#include "aiskg/knowledge_graph.hpp"
#include "aiskg/parallel.hpp"
#include "aiskg/segmentation.hpp"
#include "aiskg/text.hpp"
#include "aiskg/time.hpp"

namespace aiskg {

struct SplitSpec {
  unsigned held_out_days = 7;  // last N calendar days of every month

  friend bool operator==(const SplitSpec&, const SplitSpec&) = default;
};

inline bool is_held_out(UnixSeconds t, const SplitSpec& spec = {}) {
  const CivilTime c = to_civil(t);
  return c.day + spec.held_out_days > c.days_in_month;
}

struct TemporalSplit {
  std::vector<SubTrajectory> train;
  std::vector<SubTrajectory> test;
};

/// Assigns each sub-trajectory by the UTC date of its first message.
inline TemporalSplit temporal_split(std::vector<SubTrajectory> all, const SplitSpec& spec = {}) {
  TemporalSplit out;
  for (auto& t : all) {
    (is_held_out(t.start_time(), spec) ? out.test : out.train).push_back(std::move(t));
  }
  return out;
}

struct SegmentRecord {
  VesselId vessel_id = 0;
  std::string trajectory_id;
  ShipClass ship_class = ShipClass::Other;
  GeohashCell cell;
  UnixSeconds entry_time = 0;
  double actual_minutes = 0.0;
  double predicted_minutes = 0.0;
  double distance_km = 0.0;
  PriorityLevel level = PriorityLevel::Fallback;
  bool reliable = false;
  bool used_fallback = true;
  double trajectory_displacement_km = 0.0;

  double error_minutes() const { return predicted_minutes - actual_minutes; }
};

struct ReplayedSegment {
  Segment segment;
  double actual_minutes = 0.0;
};

/// Replay segments of one test sub-trajectory: every run followed by a
/// transition, with observed entry time and within-run path length. Runs of
/// zero duration carry no travel time and are skipped.
inline std::vector<ReplayedSegment> replay_segments(const SubTrajectory& t, int precision = kDefaultPrecision) {
  const auto runs = extract_cell_runs(t, precision);
  std::vector<ReplayedSegment> out;
  std::optional<Direction> prev;
  for (std::size_t i = 0; i + 1 < runs.size(); ++i) {
    const CellRun& r = runs[i];
    auto dir = run_direction(r, prev);
    prev = dir;
    if (!(r.exit_time > r.entry_time) || !(r.path_length_km > 0.0)) continue;
    if (!dir) dir = quantize_direction(initial_bearing(r.entry_position, runs[i + 1].entry_position));
    out.push_back({{r.cell, r.path_length_km, r.entry_time, *dir}, r.duration_minutes()});
  }
  return out;
}

inline std::vector<SegmentRecord> evaluate_trajectory(const KnowledgeGraph& g, const SubTrajectory& t,
                                                      const EstimatorConfig& cfg) {
  const auto replayed = replay_segments(t, g.meta.precision);
  std::vector<Segment> segments;
  segments.reserve(replayed.size());
  for (const auto& r : replayed) segments.push_back(r.segment);
  const auto pred = predict_segments(g, segments, t.ship_class, t.start_time(), cfg);
  std::vector<SegmentRecord> out;
  out.reserve(segments.size());
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const auto& p = pred.segments[i];
    SegmentRecord rec;
    rec.vessel_id = t.vessel_id;
    rec.trajectory_id = t.id();
    rec.ship_class = t.ship_class;
    rec.cell = p.cell;
    rec.entry_time = *segments[i].entry_time;
    rec.actual_minutes = replayed[i].actual_minutes;
    rec.predicted_minutes = p.minutes;
    rec.distance_km = p.distance_km;
    rec.level = p.estimate.level;
    rec.reliable = p.estimate.reliable;
    rec.used_fallback = p.estimate.level == PriorityLevel::Fallback;
    rec.trajectory_displacement_km = t.summary.displacement_km;
    out.push_back(std::move(rec));
  }
  return out;
}

/// Records for every test sub-trajectory, in input order.
inline std::vector<SegmentRecord> evaluate_segments(const KnowledgeGraph& g, std::span<const SubTrajectory> test,
                                                    const EstimatorConfig& cfg = {}, unsigned jobs = 1) {
  std::vector<std::vector<SegmentRecord>> per(test.size());
  parallel_for(test.size(), jobs, [&](std::size_t i) { per[i] = evaluate_trajectory(g, test[i], cfg); });
  std::vector<SegmentRecord> out;
  for (auto& v : per) {
    for (auto& r : v) out.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Metrics

struct MedianMean {
  double median = 0.0;
  double mean = 0.0;

  friend bool operator==(const MedianMean&, const MedianMean&) = default;
};

inline MedianMean median_mean(std::vector<double> v) {
  if (v.empty()) return {};
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  const double median = n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
  double sum = 0.0;
  for (double x : v) sum += x;
  return {median, sum / static_cast<double>(n)};
}

struct WithinFractions {
  double p5 = 0.0;
  double p10 = 0.0;
  double p20 = 0.0;

  friend bool operator==(const WithinFractions&, const WithinFractions&) = default;
};

struct SegmentLevelMetrics {
  std::size_t segments = 0;
  std::size_t trajectories = 0;
  MedianMean mae;   // per-trajectory mean |error|, then across trajectories
  MedianMean rmse;  // per-trajectory root-mean-square error, then across trajectories
  WithinFractions within;
  double coverage = 0.0;  // segments resolved without the fallback speed

  friend bool operator==(const SegmentLevelMetrics&, const SegmentLevelMetrics&) = default;
};

struct TrajectoryLevelMetrics {
  std::size_t trajectories = 0;
  MedianMean abs_error;  // |sum predicted - sum actual| per trajectory
  WithinFractions within;
  double coverage = 0.0;  // trajectories with no fallback segment

  friend bool operator==(const TrajectoryLevelMetrics&, const TrajectoryLevelMetrics&) = default;
};

struct SliceMetrics {
  SegmentLevelMetrics segment;
  TrajectoryLevelMetrics trajectory;

  friend bool operator==(const SliceMetrics&, const SliceMetrics&) = default;
};

struct NodeError {
  GeohashCell cell;
  double mean_abs_error_minutes = 0.0;
  std::size_t count = 0;

  friend bool operator==(const NodeError&, const NodeError&) = default;
};

struct MetricsReport {
  SliceMetrics all;
  SliceMetrics long_haul;  // trajectories with displacement above the cut
  double long_haul_cut_km = 150.0;
  std::vector<NodeError> nodes;  // ascending cell

  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

namespace detail {

struct TrajectoryGroup {
  std::vector<const SegmentRecord*> segments;
  double displacement_km = 0.0;
};

inline SliceMetrics slice_metrics(const std::vector<const TrajectoryGroup*>& groups) {
  SliceMetrics m;
  std::vector<double> mae, rmse, traj_err;
  std::size_t seg_total = 0, seg_covered = 0, traj_covered = 0;
  std::size_t w5 = 0, w10 = 0, w20 = 0, tw5 = 0, tw10 = 0, tw20 = 0;
  for (const auto* g : groups) {
    double abs_sum = 0.0, sq_sum = 0.0, pred_sum = 0.0, actual_sum = 0.0;
    bool covered = true;
    for (const auto* r : g->segments) {
      const double e = r->error_minutes();
      abs_sum += std::abs(e);
      sq_sum += e * e;
      pred_sum += r->predicted_minutes;
      actual_sum += r->actual_minutes;
      const double rel = std::abs(e) / r->actual_minutes;
      w5 += rel <= 0.05;
      w10 += rel <= 0.10;
      w20 += rel <= 0.20;
      seg_covered += !r->used_fallback;
      covered = covered && !r->used_fallback;
    }
    const double n = static_cast<double>(g->segments.size());
    seg_total += g->segments.size();
    mae.push_back(abs_sum / n);
    rmse.push_back(std::sqrt(sq_sum / n));
    const double te = std::abs(pred_sum - actual_sum);
    traj_err.push_back(te);
    const double trel = te / actual_sum;
    tw5 += trel <= 0.05;
    tw10 += trel <= 0.10;
    tw20 += trel <= 0.20;
    traj_covered += covered;
  }
  const double segs = static_cast<double>(seg_total);
  const double trajs = static_cast<double>(groups.size());
  m.segment.segments = seg_total;
  m.segment.trajectories = groups.size();
  m.trajectory.trajectories = groups.size();
  if (groups.empty()) return m;
  m.segment.mae = median_mean(mae);
  m.segment.rmse = median_mean(rmse);
  m.segment.within = {static_cast<double>(w5) / segs, static_cast<double>(w10) / segs, static_cast<double>(w20) / segs};
  m.segment.coverage = static_cast<double>(seg_covered) / segs;
  m.trajectory.abs_error = median_mean(traj_err);
  m.trajectory.within = {static_cast<double>(tw5) / trajs, static_cast<double>(tw10) / trajs,
                         static_cast<double>(tw20) / trajs};
  m.trajectory.coverage = static_cast<double>(traj_covered) / trajs;
  return m;
}

}  // namespace detail

/// Groups records by trajectory; throws EmptyInput for no records.
inline MetricsReport compute_metrics(std::span<const SegmentRecord> records, double long_haul_cut_km = 150.0) {
  if (records.empty()) throw EmptyInput("no segment records to score");
  std::map<std::string, detail::TrajectoryGroup> groups;
  std::map<GeohashCell, std::pair<double, std::size_t>> per_cell;
  for (const auto& r : records) {
    if (!(r.actual_minutes > 0.0)) throw InvalidArgument("segment with non-positive actual time");
    auto& g = groups[r.trajectory_id];
    g.segments.push_back(&r);
    g.displacement_km = r.trajectory_displacement_km;
    auto& c = per_cell[r.cell];
    c.first += std::abs(r.error_minutes());
    ++c.second;
  }
  std::vector<const detail::TrajectoryGroup*> all, long_haul;
  for (const auto& [id, g] : groups) {
    all.push_back(&g);
    if (g.displacement_km > long_haul_cut_km) long_haul.push_back(&g);
  }
  MetricsReport rep;
  rep.long_haul_cut_km = long_haul_cut_km;
  rep.all = detail::slice_metrics(all);
  rep.long_haul = detail::slice_metrics(long_haul);
  for (const auto& [cell, acc] : per_cell) {
    rep.nodes.push_back({cell, acc.first / static_cast<double>(acc.second), acc.second});
  }
  return rep;
}

inline void write_report_text(std::ostream& os, const MetricsReport& r) {
  auto line = [&](const char* label, const std::string& value) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "  %-50s %s\n", label, value.c_str());
    os << buf;
  };
  auto num = [](double v, int prec = 2) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", prec, v);
    return std::string(buf);
  };
  auto pct = [&](double v) { return num(100.0 * v, 2) + " %"; };
  auto slice = [&](const char* title, const SliceMetrics& s) {
    os << title << '\n';
    line("segments", std::to_string(s.segment.segments));
    line("trajectories", std::to_string(s.segment.trajectories));
    line("segment MAE per trajectory, median / mean (min)", num(s.segment.mae.median) + " / " + num(s.segment.mae.mean));
    line("segment RMSE per trajectory, median / mean (min)", num(s.segment.rmse.median) + " / " + num(s.segment.rmse.mean));
    line("segments within 5 / 10 / 20 %",
         pct(s.segment.within.p5) + " / " + pct(s.segment.within.p10) + " / " + pct(s.segment.within.p20));
    line("segment coverage (no fallback)", pct(s.segment.coverage));
    line("trajectory |total error|, median / mean (min)",
         num(s.trajectory.abs_error.median) + " / " + num(s.trajectory.abs_error.mean));
    line("trajectories within 5 / 10 / 20 %",
         pct(s.trajectory.within.p5) + " / " + pct(s.trajectory.within.p10) + " / " + pct(s.trajectory.within.p20));
    line("trajectory coverage (no fallback)", pct(s.trajectory.coverage));
  };
  os << "mode: replay (observed entry times, within-run path lengths)\n";
  slice("all trajectories", r.all);
  const std::string title = "long trajectories (> " + num(r.long_haul_cut_km, 0) + " km)";
  slice(title.c_str(), r.long_haul);
  os << "nodes with test segments: " << r.nodes.size() << '\n';
}

inline void write_report_records(std::ostream& os, const MetricsReport& r) {
  os << "slice,metric,value\n";
  auto slice = [&](const char* name, const SliceMetrics& s) {
    auto put = [&](const char* metric, double v) { os << name << ',' << metric << ',' << text::fmt(v) << '\n'; };
    put("segments", static_cast<double>(s.segment.segments));
    put("trajectories", static_cast<double>(s.segment.trajectories));
    put("segment_mae_median_min", s.segment.mae.median);
    put("segment_mae_mean_min", s.segment.mae.mean);
    put("segment_rmse_median_min", s.segment.rmse.median);
    put("segment_rmse_mean_min", s.segment.rmse.mean);
    put("segment_within_5", s.segment.within.p5);
    put("segment_within_10", s.segment.within.p10);
    put("segment_within_20", s.segment.within.p20);
    put("segment_coverage", s.segment.coverage);
    put("trajectory_abs_error_median_min", s.trajectory.abs_error.median);
    put("trajectory_abs_error_mean_min", s.trajectory.abs_error.mean);
    put("trajectory_within_5", s.trajectory.within.p5);
    put("trajectory_within_10", s.trajectory.within.p10);
    put("trajectory_within_20", s.trajectory.within.p20);
    put("trajectory_coverage", s.trajectory.coverage);
  };
  slice("all", r.all);
  slice("long", r.long_haul);
}

/// GeoJSON FeatureCollection: one polygon per test-traversed cell.
inline nlohmann::json node_errors_geojson(const MetricsReport& r) {
  using nlohmann::json;
  json features = json::array();
  for (const auto& n : r.nodes) {
    const BoundingBox b = n.cell.bbox();
    const Position c = b.center();
    json ring = json::array({json::array({b.lon_min, b.lat_min}), json::array({b.lon_max, b.lat_min}),
                             json::array({b.lon_max, b.lat_max}), json::array({b.lon_min, b.lat_max}),
                             json::array({b.lon_min, b.lat_min})});
    features.push_back({{"type", "Feature"},
                        {"geometry", {{"type", "Polygon"}, {"coordinates", json::array({ring})}}},
                        {"properties",
                         {{"cell", n.cell.str()},
                          {"mean_error", n.mean_abs_error_minutes},
                          {"count", n.count},
                          {"center_lat", c.lat},
                          {"center_lon", c.lon}}}});
  }
  return {{"type", "FeatureCollection"}, {"features", features}};
}

inline void export_node_errors(const std::filesystem::path& path, const MetricsReport& r) {
  std::ofstream os(path);
  if (!os) throw UnreadableSource("cannot write " + path.string());
  os << node_errors_geojson(r).dump(1) << '\n';
}

inline void export_node_errors(const std::filesystem::path& path, std::span<const SegmentRecord> records) {
  export_node_errors(path, compute_metrics(records));
}

}  // namespace aiskg
