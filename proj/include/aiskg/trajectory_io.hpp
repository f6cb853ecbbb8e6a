#pragma once

// Sub-trajectory files. One `T` summary line per sub-trajectory, followed by
// its `M` message lines when messages are included:
//
//   # aiskg-subtraj 1
//   T,<vessel>:<index>,<vessel>,<index>,<class>,<n>,<displacement_km>,<span_min>
//   M,<unix_seconds>,<lat>,<lon>,<sog>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "aiskg/error.hpp"
#include "aiskg/segmentation.hpp"
#include "aiskg/text.hpp"

namespace aiskg {

inline constexpr std::string_view kSubTrajectoryHeader = "# aiskg-subtraj 1";

inline void write_subtrajectories(std::ostream& os, std::span<const SubTrajectory> ts, bool with_messages = true) {
  os << kSubTrajectoryHeader << '\n';
  for (const auto& t : ts) {
    os << "T," << t.id() << ',' << t.vessel_id << ',' << t.index << ',' << to_string(t.ship_class) << ','
       << t.summary.num_messages << ',' << text::fmt(t.summary.displacement_km) << ','
       << text::fmt(t.summary.time_span_minutes) << '\n';
    if (!with_messages) continue;
    for (const auto& m : t.messages) {
      os << "M," << m.timestamp << ',' << text::fmt(m.position.lat) << ',' << text::fmt(m.position.lon) << ','
         << text::fmt(m.sog) << '\n';
    }
  }
}

inline void write_subtrajectories(const std::filesystem::path& path, std::span<const SubTrajectory> ts,
                                  bool with_messages = true) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw UnreadableSource("cannot write " + path.string());
  write_subtrajectories(os, ts, with_messages);
}

inline std::vector<SubTrajectory> read_subtrajectories(std::istream& is, const std::string& source = "<stream>") {
  std::vector<SubTrajectory> out;
  std::string line;
  std::size_t lineno = 0;
  auto fail = [&](const std::string& what) {
    throw UnreadableSource(source + ":" + std::to_string(lineno) + ": " + what);
  };
  if (!std::getline(is, line) || text::trim(line) != kSubTrajectoryHeader) {
    throw UnreadableSource(source + ": not a sub-trajectory file");
  }
  ++lineno;
  while (std::getline(is, line)) {
    ++lineno;
    const auto body = text::trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto f = text::split(body, ',');
    if (f[0] == "T") {
      if (f.size() != 8) fail("bad summary line");
      SubTrajectory t;
      const auto vid = text::to_int<VesselId>(f[2]);
      const auto idx = text::to_int<std::uint32_t>(f[3]);
      const auto n = text::to_int<std::size_t>(f[5]);
      const auto disp = text::to_double(f[6]);
      const auto span = text::to_double(f[7]);
      if (!vid || !idx || !n || !disp || !span) fail("bad summary field");
      t.vessel_id = *vid;
      t.index = *idx;
      try {
        t.ship_class = parse_ship_class(f[4]);
      } catch (const InvalidArgument&) {
        fail("bad ship class");
      }
      t.summary = {*disp, *span, *n};
      out.push_back(std::move(t));
    } else if (f[0] == "M") {
      if (out.empty()) fail("message line before any summary line");
      if (f.size() != 5) fail("bad message line");
      const auto ts = text::to_int<UnixSeconds>(f[1]);
      const auto lat = text::to_double(f[2]);
      const auto lon = text::to_double(f[3]);
      const auto sog = text::to_double(f[4]);
      if (!ts || !lat || !lon || !sog) fail("bad message field");
      auto& t = out.back();
      t.messages.push_back({t.vessel_id, *ts, {*lat, *lon}, *sog, std::nullopt});
    } else {
      fail("unknown record tag");
    }
  }
  for (const auto& t : out) {
    if (!t.messages.empty() && t.messages.size() != t.summary.num_messages) {
      throw UnreadableSource(source + ": message count disagrees with summary for " + t.id());
    }
  }
  return out;
}

/// Reads one file, or every *.traj file of a directory in name order.
inline std::vector<SubTrajectory> read_subtrajectories(const std::filesystem::path& path) {
  namespace fs = std::filesystem;
  std::vector<fs::path> files;
  if (fs::is_directory(path)) {
    for (const auto& e : fs::directory_iterator(path)) {
      if (e.is_regular_file() && e.path().extension() == ".traj") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
  } else {
    files.push_back(path);
  }
  std::vector<SubTrajectory> out;
  for (const auto& f : files) {
    std::ifstream is(f, std::ios::binary);
    if (!is) throw UnreadableSource("cannot open " + f.string());
    auto part = read_subtrajectories(is, f.string());
    for (auto& t : part) out.push_back(std::move(t));
  }
  return out;
}

}  // namespace aiskg
