#pragma once

// Geohash-cell knowledge graph: nodes and directed edges carrying speed
// statistics stratified by ship class, direction and a temporal bin.

#include <algorithm>
#include <array>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <tuple>
#include <utility>
#include <vector>

#include "aiskg/accumulator.hpp"
#include "aiskg/ais.hpp"
#include "aiskg/error.hpp"
#include "aiskg/geo.hpp"
#include "aiskg/parallel.hpp"
#include "aiskg/segmentation.hpp"
#include "aiskg/time.hpp"

namespace aiskg {

inline constexpr int kGraphFormatVersion = 1;

enum class TemporalAxis : std::uint8_t { Hour, DayOfWeek, Month };

inline constexpr std::array<TemporalAxis, 3> kAllAxes{TemporalAxis::Hour, TemporalAxis::DayOfWeek,
                                                      TemporalAxis::Month};

inline std::string_view to_string(TemporalAxis a) {
  switch (a) {
    case TemporalAxis::Hour: return "hour";
    case TemporalAxis::DayOfWeek: return "dow";
    case TemporalAxis::Month: return "month";
  }
  return "hour";
}

// hour 0-23, dow 0-6 (Monday = 0), month 1-12; all UTC.
struct TemporalBins {
  std::uint8_t hour = 0;
  std::uint8_t dow = 0;
  std::uint8_t month = 1;

  static TemporalBins at(UnixSeconds t) {
    const CivilTime c = to_civil(t);
    return {static_cast<std::uint8_t>(c.hour), static_cast<std::uint8_t>(c.weekday),
            static_cast<std::uint8_t>(c.month)};
  }

  std::uint8_t bin(TemporalAxis a) const {
    switch (a) {
      case TemporalAxis::Hour: return hour;
      case TemporalAxis::DayOfWeek: return dow;
      case TemporalAxis::Month: return month;
    }
    return hour;
  }
};

inline bool valid_bin(TemporalAxis a, int bin) {
  switch (a) {
    case TemporalAxis::Hour: return bin >= 0 && bin <= 23;
    case TemporalAxis::DayOfWeek: return bin >= 0 && bin <= 6;
    case TemporalAxis::Month: return bin >= 1 && bin <= 12;
  }
  return false;
}

struct StratumKey {
  ShipClass ship_class = ShipClass::Other;
  Direction direction = Direction::N;
  std::uint8_t bin = 0;

  friend auto operator<=>(const StratumKey&, const StratumKey&) = default;
};

using StratumTable = std::map<StratumKey, SpeedAccumulator>;

/// Three parallel tables, one per temporal axis. Every recorded sample lands
/// in exactly one bin of each table.
struct StratifiedStats {
  std::array<StratumTable, 3> tables;

  const StratumTable& table(TemporalAxis a) const { return tables[static_cast<std::size_t>(a)]; }
  StratumTable& table(TemporalAxis a) { return tables[static_cast<std::size_t>(a)]; }

  void record(ShipClass cls, Direction dir, TemporalBins bins, const SpeedAccumulator& acc) {
    if (acc.empty()) return;
    for (TemporalAxis a : kAllAxes) table(a)[StratumKey{cls, dir, bins.bin(a)}].merge(acc);
  }

  void merge(const StratifiedStats& o) {
    for (std::size_t i = 0; i < tables.size(); ++i) {
      for (const auto& [k, acc] : o.tables[i]) tables[i][k].merge(acc);
    }
  }

  std::size_t entry_count() const { return tables[0].size() + tables[1].size() + tables[2].size(); }

  std::uint64_t sample_count() const {
    std::uint64_t n = 0;
    for (const auto& [k, acc] : tables[0]) n += acc.count;
    return n;
  }

  bool empty() const { return tables[0].empty() && tables[1].empty() && tables[2].empty(); }

  friend bool operator==(const StratifiedStats&, const StratifiedStats&) = default;
};

struct EdgeStats {
  StratifiedStats stats;
  std::uint64_t transitions = 0;

  void merge(const EdgeStats& o) {
    stats.merge(o.stats);
    transitions += o.transitions;
  }

  friend bool operator==(const EdgeStats&, const EdgeStats&) = default;
};

using CellPair = std::pair<GeohashCell, GeohashCell>;

struct GraphMetadata {
  int format_version = kGraphFormatVersion;
  int precision = kDefaultPrecision;
  std::uint64_t trajectory_count = 0;  // multi-cell sub-trajectories that contributed
  std::uint64_t ignored_trajectories = 0;  // never left their first cell
  std::uint64_t run_count = 0;
  std::uint64_t sample_count = 0;  // sog samples recorded into node tables
  std::uint64_t skipped_samples = 0;  // runs with no usable direction
  std::optional<UnixSeconds> first_sample;
  std::optional<UnixSeconds> last_sample;
  // UTC days (since epoch) on which contributing sub-trajectories started.
  std::set<std::int64_t> start_days;

  void merge(const GraphMetadata& o) {
    trajectory_count += o.trajectory_count;
    ignored_trajectories += o.ignored_trajectories;
    run_count += o.run_count;
    sample_count += o.sample_count;
    skipped_samples += o.skipped_samples;
    if (o.first_sample) first_sample = first_sample ? std::min(*first_sample, *o.first_sample) : *o.first_sample;
    if (o.last_sample) last_sample = last_sample ? std::max(*last_sample, *o.last_sample) : *o.last_sample;
    start_days.insert(o.start_days.begin(), o.start_days.end());
  }

  friend bool operator==(const GraphMetadata&, const GraphMetadata&) = default;
};

struct KnowledgeGraph {
  std::map<GeohashCell, StratifiedStats> nodes;
  std::map<CellPair, EdgeStats> edges;
  GraphMetadata meta;

  const StratifiedStats* find_node(const GeohashCell& c) const {
    auto it = nodes.find(c);
    return it == nodes.end() ? nullptr : &it->second;
  }

  const EdgeStats* find_edge(const GeohashCell& from, const GeohashCell& to) const {
    auto it = edges.find({from, to});
    return it == edges.end() ? nullptr : &it->second;
  }

  std::size_t strata_entries() const {
    std::size_t n = 0;
    for (const auto& [c, s] : nodes) n += s.entry_count();
    for (const auto& [c, e] : edges) n += e.stats.entry_count();
    return n;
  }

  friend bool operator==(const KnowledgeGraph&, const KnowledgeGraph&) = default;
};

// ---------------------------------------------------------------------------
// Cell runs

/// Maximal sequence of consecutive messages inside one geohash cell.
struct CellRun {
  GeohashCell cell;
  UnixSeconds entry_time = 0;
  UnixSeconds exit_time = 0;
  Position entry_position;
  Position exit_position;
  std::vector<double> sog;
  double path_length_km = 0.0;  // sum of hops between the run's own messages

  double duration_minutes() const { return static_cast<double>(exit_time - entry_time) / 60.0; }
};

inline std::vector<CellRun> extract_cell_runs(std::span<const AisMessage> messages,
                                              int precision = kDefaultPrecision) {
  std::vector<CellRun> runs;
  for (std::size_t i = 0; i < messages.size(); ++i) {
    const auto& m = messages[i];
    const GeohashCell cell = GeohashCell::from_position(m.position, precision);
    if (runs.empty() || runs.back().cell != cell) {
      CellRun r;
      r.cell = cell;
      r.entry_time = r.exit_time = m.timestamp;
      r.entry_position = r.exit_position = m.position;
      runs.push_back(std::move(r));
    } else {
      CellRun& r = runs.back();
      r.path_length_km += haversine_km(r.exit_position, m.position);
      r.exit_time = m.timestamp;
      r.exit_position = m.position;
    }
    runs.back().sog.push_back(m.sog);
  }
  return runs;
}

inline std::vector<CellRun> extract_cell_runs(const SubTrajectory& t, int precision = kDefaultPrecision) {
  return extract_cell_runs(std::span<const AisMessage>(t.messages), precision);
}

/// Net direction of a run (entry to exit), or `previous` when the run did not move.
inline std::optional<Direction> run_direction(const CellRun& r, std::optional<Direction> previous) {
  if (normalized(r.entry_position) == normalized(r.exit_position)) return previous;
  return quantize_direction(initial_bearing(r.entry_position, r.exit_position));
}

// ---------------------------------------------------------------------------
// Build

struct BuildOptions {
  int precision = kDefaultPrecision;
  // The last run of a sub-trajectory has no outgoing transition; when set its
  // samples still update its node.
  bool record_final_run = true;

  friend bool operator==(const BuildOptions&, const BuildOptions&) = default;
};

/// Adds one sub-trajectory. Each run is flushed into its node and, when a
/// transition follows, into the directed edge to the next cell.
inline void add_trajectory(KnowledgeGraph& g, const SubTrajectory& t, const BuildOptions& opt = {}) {
  const auto runs = extract_cell_runs(t, opt.precision);
  if (runs.size() < 2) {
    if (!runs.empty()) ++g.meta.ignored_trajectories;
    return;
  }
  ++g.meta.trajectory_count;
  g.meta.start_days.insert(days_since_epoch(t.start_time()));
  std::optional<Direction> prev;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const CellRun& run = runs[i];
    const bool last = i + 1 == runs.size();
    StratifiedStats& node = g.nodes[run.cell];
    EdgeStats* edge = nullptr;
    if (!last) {
      edge = &g.edges[{run.cell, runs[i + 1].cell}];
      ++edge->transitions;
    }
    const auto dir = run_direction(run, prev);
    prev = dir;
    if (last && !opt.record_final_run) break;
    ++g.meta.run_count;
    if (!dir) {
      g.meta.skipped_samples += run.sog.size();
      continue;
    }
    const SpeedAccumulator acc = accumulate({}, run.sog);
    const TemporalBins bins = TemporalBins::at(run.entry_time);
    node.record(t.ship_class, *dir, bins, acc);
    if (edge != nullptr) edge->stats.record(t.ship_class, *dir, bins, acc);
    g.meta.sample_count += acc.count;
    g.meta.first_sample = g.meta.first_sample ? std::min(*g.meta.first_sample, run.entry_time) : run.entry_time;
    g.meta.last_sample = g.meta.last_sample ? std::max(*g.meta.last_sample, run.exit_time) : run.exit_time;
  }
}

/// In-place merge: node/edge union, accumulators combined field-wise.
inline void merge_into(KnowledgeGraph& into, const KnowledgeGraph& from) {
  if (into.meta.format_version != from.meta.format_version || into.meta.precision != from.meta.precision) {
    throw VersionMismatch("cannot merge graphs with format/precision " + std::to_string(into.meta.format_version) +
                          "/" + std::to_string(into.meta.precision) + " and " +
                          std::to_string(from.meta.format_version) + "/" + std::to_string(from.meta.precision));
  }
  for (const auto& [cell, stats] : from.nodes) into.nodes[cell].merge(stats);
  for (const auto& [pair, e] : from.edges) into.edges[pair].merge(e);
  into.meta.merge(from.meta);
}

inline KnowledgeGraph merge_graphs(KnowledgeGraph a, const KnowledgeGraph& b) {
  merge_into(a, b);
  return a;
}

inline KnowledgeGraph empty_graph(int precision = kDefaultPrecision) {
  KnowledgeGraph g;
  g.meta.precision = precision;
  return g;
}

inline constexpr std::size_t kBuildShards = 64;

/// Builds from sub-trajectories in a fixed order: vessels are hashed into a
/// fixed number of shards, each shard is built in (vessel, index) order and
/// the shards are merged in shard order. The result is independent of the
/// input order and of `jobs`.
inline KnowledgeGraph build_graph(std::span<const SubTrajectory> trajectories, const BuildOptions& opt = {},
                                  unsigned jobs = 1) {
  std::array<std::vector<const SubTrajectory*>, kBuildShards> shards;
  for (const auto& t : trajectories) shards[t.vessel_id % kBuildShards].push_back(&t);
  std::array<KnowledgeGraph, kBuildShards> partial;
  parallel_for(kBuildShards, jobs, [&](std::size_t s) {
    auto& list = shards[s];
    std::sort(list.begin(), list.end(), [](const SubTrajectory* a, const SubTrajectory* b) {
      return std::tie(a->vessel_id, a->index) < std::tie(b->vessel_id, b->index);
    });
    partial[s] = empty_graph(opt.precision);
    for (const SubTrajectory* t : list) add_trajectory(partial[s], *t, opt);
  });
  KnowledgeGraph g = empty_graph(opt.precision);
  for (const auto& p : partial) merge_into(g, p);
  return g;
}

inline bool approx_equal(const StratifiedStats& a, const StratifiedStats& b, double rel) {
  for (std::size_t i = 0; i < a.tables.size(); ++i) {
    if (a.tables[i].size() != b.tables[i].size()) return false;
    auto ib = b.tables[i].begin();
    for (auto ia = a.tables[i].begin(); ia != a.tables[i].end(); ++ia, ++ib) {
      if (ia->first != ib->first || !approx_equal(ia->second, ib->second, rel)) return false;
    }
  }
  return true;
}

/// Structural equality with accumulator sums compared to `rel`; everything else exact.
inline bool approx_equal(const KnowledgeGraph& a, const KnowledgeGraph& b, double rel = 1e-9) {
  if (!(a.meta == b.meta) || a.nodes.size() != b.nodes.size() || a.edges.size() != b.edges.size()) return false;
  for (auto ia = a.nodes.begin(), ib = b.nodes.begin(); ia != a.nodes.end(); ++ia, ++ib) {
    if (ia->first != ib->first || !approx_equal(ia->second, ib->second, rel)) return false;
  }
  for (auto ia = a.edges.begin(), ib = b.edges.begin(); ia != a.edges.end(); ++ia, ++ib) {
    if (ia->first != ib->first || ia->second.transitions != ib->second.transitions ||
        !approx_equal(ia->second.stats, ib->second.stats, rel)) {
      return false;
    }
  }
  return true;
}

}  // namespace aiskg
