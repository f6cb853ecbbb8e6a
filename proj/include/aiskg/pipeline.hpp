#pragma once

// End-to-end composition: segment, split, select, build, evaluate.

#include <algorithm>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "aiskg/config.hpp"
#include "aiskg/evaluation.hpp"
#include "aiskg/ingest.hpp"
#include "aiskg/knowledge_graph.hpp"
#include "aiskg/parallel.hpp"
#include "aiskg/segmentation.hpp"
#include "aiskg/transmitter.hpp"

namespace aiskg {

/// Segments every stream; output is ordered by (vessel_id, index).
inline std::vector<SubTrajectory> segment_streams(std::span<const VesselStream> streams,
                                                  const SegmentationConfig& cfg, unsigned jobs = 1) {
  std::vector<std::vector<SubTrajectory>> per(streams.size());
  parallel_for(streams.size(), jobs, [&](std::size_t i) { per[i] = segment_vessel(streams[i], cfg); });
  std::vector<SubTrajectory> out;
  for (auto& v : per) {
    for (auto& t : v) out.push_back(std::move(t));
  }
  std::stable_sort(out.begin(), out.end(), [](const SubTrajectory& a, const SubTrajectory& b) {
    return std::tie(a.vessel_id, a.index) < std::tie(b.vessel_id, b.index);
  });
  return out;
}

struct Selection {
  std::optional<TransmitterModel> model;  // empty when selection was skipped
  std::string skipped_reason;
};

/// Fits the transmitter model on training sub-trajectories. Too few distinct
/// feature vectors, or selection disabled, leaves the model empty.
inline Selection fit_selection(std::span<const SubTrajectory> train, const RunConfig& cfg) {
  Selection s;
  if (!cfg.select_transmitters) {
    s.skipped_reason = "transmitter selection disabled";
    return s;
  }
  try {
    s.model = fit_transmitter_model(train, cfg.gmm, cfg.fit_unit);
  } catch (const DegenerateData& e) {
    s.skipped_reason = e.what();
  }
  return s;
}

inline std::vector<TransmitterLabel> label_vessels(const Selection& s, std::span<const SubTrajectory> ts) {
  if (s.model) return classify_vessels(*s.model, ts);
  std::set<VesselId> ids;
  for (const auto& t : ts) ids.insert(t.vessel_id);
  std::vector<TransmitterLabel> out;
  for (VesselId id : ids) out.push_back({id, TransmitterKind::Primary, 1.0});
  return out;
}

inline std::vector<SubTrajectory> keep_primary(std::vector<SubTrajectory> ts,
                                               std::span<const TransmitterLabel> labels) {
  std::set<VesselId> primary;
  for (const auto& l : labels) {
    if (l.label == TransmitterKind::Primary) primary.insert(l.vessel_id);
  }
  std::erase_if(ts, [&](const SubTrajectory& t) { return !primary.contains(t.vessel_id); });
  return ts;
}

struct PipelineResult {
  IngestReport ingest;
  std::size_t subtrajectories = 0;
  std::size_t train_count = 0;
  std::size_t test_count = 0;
  Selection selection;
  std::vector<TransmitterLabel> train_labels;
  std::vector<TransmitterLabel> test_labels;
  KnowledgeGraph graph;
  std::vector<SubTrajectory> evaluated;  // primary test sub-trajectories
  std::vector<SegmentRecord> records;
  std::optional<MetricsReport> metrics;  // empty when no test segment survived
};

/// Graph from the primary training slice; evaluation on the primary test
/// slice, labelled with the frozen training model.
inline PipelineResult run_pipeline(const IngestResult& ingested, const RunConfig& cfg) {
  PipelineResult r;
  r.ingest = ingested.report;
  auto all = segment_streams(ingested.streams, cfg.segmentation, cfg.jobs);
  r.subtrajectories = all.size();
  auto split = temporal_split(std::move(all), cfg.split);
  r.train_count = split.train.size();
  r.test_count = split.test.size();
  r.selection = fit_selection(split.train, cfg);
  r.train_labels = label_vessels(r.selection, split.train);
  r.test_labels = label_vessels(r.selection, split.test);
  const auto train = keep_primary(std::move(split.train), r.train_labels);
  r.graph = build_graph(train, cfg.build, cfg.jobs);
  r.evaluated = keep_primary(std::move(split.test), r.test_labels);
  r.records = evaluate_segments(r.graph, r.evaluated, cfg.estimator, cfg.jobs);
  if (!r.records.empty()) r.metrics = compute_metrics(r.records, cfg.long_haul_cut_km);
  return r;
}

}  // namespace aiskg
