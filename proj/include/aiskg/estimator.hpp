#pragma once

// Hierarchical speed estimation over the knowledge graph and segment-level
// travel-time prediction.

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "aiskg/ais.hpp"
#include "aiskg/error.hpp"
#include "aiskg/geo.hpp"
#include "aiskg/knowledge_graph.hpp"

namespace aiskg {

// Lookup levels in scan order, most specific first.
enum class PriorityLevel : std::uint8_t {
  DirClassHour,   // L1a
  DirClassDow,    // L1b
  DirClassMonth,  // L1c
  DirClass,       // L2a
  Dir,            // L2b (also Group 4's direction-only level)
  ClassHour,      // L3a
  ClassDow,       // L3b
  ClassMonth,     // L3c
  Class,          // L4a
  Hour,           // L4b
  Dow,            // L4c
  Month,          // L4d
  Node,           // L4e, every sample of the node
  Fallback,
};

inline constexpr std::size_t kLookupLevelCount = 13;

inline constexpr std::array<PriorityLevel, kLookupLevelCount> kLookupOrder{
    PriorityLevel::DirClassHour, PriorityLevel::DirClassDow, PriorityLevel::DirClassMonth,
    PriorityLevel::DirClass,     PriorityLevel::Dir,         PriorityLevel::ClassHour,
    PriorityLevel::ClassDow,     PriorityLevel::ClassMonth,  PriorityLevel::Class,
    PriorityLevel::Hour,         PriorityLevel::Dow,         PriorityLevel::Month,
    PriorityLevel::Node};

inline std::string_view to_string(PriorityLevel l) {
  static constexpr std::array<std::string_view, kLookupLevelCount + 1> names{
      "L1a", "L1b", "L1c", "L2a", "L2b", "L3a", "L3b", "L3c", "L4a", "L4b", "L4c", "L4d", "L4e", "fallback"};
  return names[static_cast<std::size_t>(l)];
}

inline PriorityLevel parse_priority_level(std::string_view s) {
  for (std::size_t i = 0; i <= kLookupLevelCount; ++i) {
    const auto l = static_cast<PriorityLevel>(i);
    if (to_string(l) == s) return l;
  }
  throw InvalidArgument("unknown priority level '" + std::string(s) + "'");
}

struct QueryContext {
  ShipClass ship_class = ShipClass::Other;
  UnixSeconds timestamp = 0;
  Direction direction = Direction::N;
};

// Which part of a node's tables a level aggregates.
struct StratumSlice {
  TemporalAxis axis = TemporalAxis::Hour;
  std::optional<Direction> direction;
  std::optional<ShipClass> ship_class;
  std::optional<std::uint8_t> bin;

  bool matches(const StratumKey& k) const {
    return (!direction || k.direction == *direction) && (!ship_class || k.ship_class == *ship_class) &&
           (!bin || k.bin == *bin);
  }
};

inline StratumSlice slice_for(PriorityLevel level, const QueryContext& ctx) {
  const TemporalBins b = TemporalBins::at(ctx.timestamp);
  using L = PriorityLevel;
  using A = TemporalAxis;
  const auto d = ctx.direction;
  const auto c = ctx.ship_class;
  switch (level) {
    case L::DirClassHour: return {A::Hour, d, c, b.hour};
    case L::DirClassDow: return {A::DayOfWeek, d, c, b.dow};
    case L::DirClassMonth: return {A::Month, d, c, b.month};
    case L::DirClass: return {A::Hour, d, c, std::nullopt};
    case L::Dir: return {A::Hour, d, std::nullopt, std::nullopt};
    case L::ClassHour: return {A::Hour, std::nullopt, c, b.hour};
    case L::ClassDow: return {A::DayOfWeek, std::nullopt, c, b.dow};
    case L::ClassMonth: return {A::Month, std::nullopt, c, b.month};
    case L::Class: return {A::Hour, std::nullopt, c, std::nullopt};
    case L::Hour: return {A::Hour, std::nullopt, std::nullopt, b.hour};
    case L::Dow: return {A::DayOfWeek, std::nullopt, std::nullopt, b.dow};
    case L::Month: return {A::Month, std::nullopt, std::nullopt, b.month};
    case L::Node:
    case L::Fallback: break;
  }
  return {A::Hour, std::nullopt, std::nullopt, std::nullopt};
}

struct SliceStats {
  double mean = 0.0;
  std::uint64_t count = 0;
};

inline std::optional<SliceStats> aggregate(const StratifiedStats& node, const StratumSlice& slice) {
  SpeedAccumulator total;
  for (const auto& [k, acc] : node.table(slice.axis)) {
    if (slice.matches(k)) total.merge(acc);
  }
  if (total.empty()) return std::nullopt;
  return SliceStats{total.mean(), total.count};
}

/// Aggregate for the stratum slice a level defines. Throws UnknownCell when
/// the cell is not a node of the graph.
inline std::optional<SliceStats> lookup_stats(const KnowledgeGraph& g, const GeohashCell& cell, PriorityLevel level,
                                              const QueryContext& ctx) {
  if (level == PriorityLevel::Fallback) return std::nullopt;
  const StratifiedStats* node = g.find_node(cell);
  if (node == nullptr) throw UnknownCell("cell " + cell.str() + " not in graph");
  return aggregate(*node, slice_for(level, ctx));
}

struct FallbackSpeeds {
  std::array<double, kShipClassCount> knots{14.0, 12.5, 12.0};  // cargo, tanker, other

  double operator()(ShipClass c) const { return knots[static_cast<std::size_t>(c)]; }
  double& operator[](ShipClass c) { return knots[static_cast<std::size_t>(c)]; }

  friend bool operator==(const FallbackSpeeds&, const FallbackSpeeds&) = default;
};

struct EstimatorConfig {
  std::uint64_t reliability_threshold = 8;  // samples
  FallbackSpeeds fallback;
  // Levels consulted, in order. Restricting this gives e.g. a time-aggregated-only estimator.
  std::vector<PriorityLevel> levels{kLookupOrder.begin(), kLookupOrder.end()};
  // Unknown cells raise UnknownCell instead of using the fallback speed.
  bool strict = false;

  friend bool operator==(const EstimatorConfig&, const EstimatorConfig&) = default;
};

struct SpeedEstimate {
  double speed = 0.0;  // knots
  PriorityLevel level = PriorityLevel::Fallback;
  std::uint64_t sample_count = 0;
  bool reliable = false;
};

/// First level with at least `reliability_threshold` samples wins; failing
/// that, the most specific populated level (unreliable); failing that, the
/// class fallback speed. `trace`, when given, receives every level consulted.
inline SpeedEstimate estimate_speed(const KnowledgeGraph& g, const GeohashCell& cell, const QueryContext& ctx,
                                    const EstimatorConfig& cfg = {}, std::vector<PriorityLevel>* trace = nullptr) {
  const SpeedEstimate fallback{cfg.fallback(ctx.ship_class), PriorityLevel::Fallback, 0, false};
  const StratifiedStats* node = g.find_node(cell);
  if (node == nullptr) return fallback;
  std::optional<SpeedEstimate> best_unreliable;
  for (PriorityLevel level : cfg.levels) {
    if (level == PriorityLevel::Fallback) break;
    if (trace != nullptr) trace->push_back(level);
    const auto s = aggregate(*node, slice_for(level, ctx));
    if (!s || !(s->mean > 0.0)) continue;
    if (s->count >= cfg.reliability_threshold) return {s->mean, level, s->count, true};
    if (!best_unreliable) best_unreliable = SpeedEstimate{s->mean, level, s->count, false};
  }
  return best_unreliable ? *best_unreliable : fallback;
}

/// Minutes to cover distance_km at speed_knots.
inline double travel_minutes(double distance_km, double speed_knots) {
  return distance_km / (speed_knots * kKmPerNauticalMile) * 60.0;
}

struct Segment {
  GeohashCell cell;
  double distance_km = 0.0;
  std::optional<UnixSeconds> entry_time;  // set in replay mode
  Direction direction = Direction::N;
};

struct SegmentPrediction {
  GeohashCell cell;
  double distance_km = 0.0;
  SpeedEstimate estimate;
  double minutes = 0.0;
  UnixSeconds context_time = 0;  // instant used for the temporal bins
};

struct TravelPrediction {
  std::vector<SegmentPrediction> segments;
  double total_minutes = 0.0;
};

/// Per-segment estimates and times. The temporal context is the segment's
/// observed entry time when given, else the rolling predicted clock.
inline TravelPrediction predict_segments(const KnowledgeGraph& g, std::span<const Segment> segments,
                                         ShipClass ship_class, UnixSeconds departure, const EstimatorConfig& cfg = {}) {
  TravelPrediction out;
  double elapsed_minutes = 0.0;
  for (const auto& seg : segments) {
    if (seg.distance_km < 0.0) throw InvalidArgument("negative segment distance");
    if (cfg.strict && g.find_node(seg.cell) == nullptr) throw UnknownCell("cell " + seg.cell.str() + " not in graph");
    const UnixSeconds clock =
        seg.entry_time ? *seg.entry_time : departure + static_cast<UnixSeconds>(std::floor(elapsed_minutes * 60.0));
    SegmentPrediction p;
    p.cell = seg.cell;
    p.distance_km = seg.distance_km;
    p.context_time = clock;
    p.estimate = estimate_speed(g, seg.cell, {ship_class, clock, seg.direction}, cfg);
    p.minutes = travel_minutes(seg.distance_km, p.estimate.speed);
    elapsed_minutes += p.minutes;
    out.total_minutes += p.minutes;
    out.segments.push_back(p);
  }
  return out;
}

}  // namespace aiskg
