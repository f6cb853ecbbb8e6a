#pragma once

// Gap splitting, speed filtering and eligibility of sub-trajectories.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "aiskg/ais.hpp"
#include "aiskg/geo.hpp"

namespace aiskg {

struct SegmentationConfig {
  double max_gap_minutes = 90.0;
  double min_sog_knots = 3.0;
  double max_sog_knots = 50.0;
  std::size_t min_messages = 10;
  double min_time_span_minutes = 30.0;
  double min_displacement_km = 100.0;
  // Off by default: the gap rule runs only on the unfiltered stream.
  bool reapply_gap_after_filter = false;

  friend bool operator==(const SegmentationConfig&, const SegmentationConfig&) = default;
};

struct TrajectorySummary {
  double displacement_km = 0.0;  // first to last message, great circle
  double time_span_minutes = 0.0;
  std::size_t num_messages = 0;

  friend bool operator==(const TrajectorySummary&, const TrajectorySummary&) = default;
};

struct SubTrajectory {
  VesselId vessel_id = 0;
  std::uint32_t index = 0;  // ordinal among the vessel's eligible sub-trajectories
  ShipClass ship_class = ShipClass::Other;
  std::vector<AisMessage> messages;
  TrajectorySummary summary;

  std::string id() const { return std::to_string(vessel_id) + ":" + std::to_string(index); }
  UnixSeconds start_time() const { return messages.empty() ? 0 : messages.front().timestamp; }
  UnixSeconds end_time() const { return messages.empty() ? 0 : messages.back().timestamp; }

  friend bool operator==(const SubTrajectory&, const SubTrajectory&) = default;
};

/// Starts a new segment wherever the gap to the previous message is strictly
/// greater than max_gap_minutes. Segments are views into `messages`.
inline std::vector<std::span<const AisMessage>> split_by_gap(std::span<const AisMessage> messages,
                                                              double max_gap_minutes = 90.0) {
  std::vector<std::span<const AisMessage>> out;
  if (messages.empty()) return out;
  const double max_gap_seconds = max_gap_minutes * 60.0;
  std::size_t begin = 0;
  for (std::size_t i = 1; i < messages.size(); ++i) {
    const double gap = static_cast<double>(messages[i].timestamp - messages[i - 1].timestamp);
    if (gap > max_gap_seconds) {
      out.push_back(messages.subspan(begin, i - begin));
      begin = i;
    }
  }
  out.push_back(messages.subspan(begin));
  return out;
}

/// Keeps messages with min <= sog <= max, order preserved.
inline std::vector<AisMessage> filter_speed(std::span<const AisMessage> messages, double min_knots = 3.0,
                                            double max_knots = 50.0) {
  std::vector<AisMessage> out;
  out.reserve(messages.size());
  for (const auto& m : messages) {
    if (m.sog >= min_knots && m.sog <= max_knots) out.push_back(m);
  }
  return out;
}

inline TrajectorySummary summarize(std::span<const AisMessage> messages) {
  TrajectorySummary s;
  s.num_messages = messages.size();
  if (messages.empty()) return s;
  s.displacement_km = haversine_km(messages.front().position, messages.back().position);
  s.time_span_minutes = static_cast<double>(messages.back().timestamp - messages.front().timestamp) / 60.0;
  return s;
}

struct Eligibility {
  bool eligible = false;
  TrajectorySummary summary;
};

inline Eligibility check_eligibility(std::span<const AisMessage> filtered, const SegmentationConfig& cfg = {}) {
  Eligibility e;
  e.summary = summarize(filtered);
  e.eligible = e.summary.num_messages >= cfg.min_messages &&
               e.summary.time_span_minutes >= cfg.min_time_span_minutes &&
               e.summary.displacement_km >= cfg.min_displacement_km;
  return e;
}

/// split_by_gap -> filter_speed -> check_eligibility, keeping eligible segments.
inline std::vector<SubTrajectory> segment_vessel(const VesselStream& stream, const SegmentationConfig& cfg = {}) {
  std::vector<SubTrajectory> out;
  auto emit = [&](std::vector<AisMessage> msgs) {
    const Eligibility e = check_eligibility(msgs, cfg);
    if (!e.eligible) return;
    SubTrajectory t;
    t.vessel_id = stream.vessel_id;
    t.index = static_cast<std::uint32_t>(out.size());
    t.ship_class = stream.ship_class;
    t.messages = std::move(msgs);
    t.summary = e.summary;
    out.push_back(std::move(t));
  };
  for (auto segment : split_by_gap(stream.messages, cfg.max_gap_minutes)) {
    auto filtered = filter_speed(segment, cfg.min_sog_knots, cfg.max_sog_knots);
    if (cfg.reapply_gap_after_filter) {
      for (auto piece : split_by_gap(filtered, cfg.max_gap_minutes)) {
        emit(std::vector<AisMessage>(piece.begin(), piece.end()));
      }
    } else {
      emit(std::move(filtered));
    }
  }
  return out;
}

}  // namespace aiskg
