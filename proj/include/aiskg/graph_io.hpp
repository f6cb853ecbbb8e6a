#pragma once

// Graph persistence: a magic line, a metadata record, one JSON record per
// node and per edge listing only present strata, and a trailing CRC-32 of
// every preceding byte.

#include <zlib.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "aiskg/error.hpp"
#include "aiskg/knowledge_graph.hpp"

namespace aiskg {

inline constexpr std::string_view kGraphMagic = "AISKG-GRAPH";
inline constexpr std::string_view kChecksumPrefix = "#crc32 ";

namespace detail {

using nlohmann::json;

inline json table_to_json(const StratumTable& t) {
  json rows = json::array();
  for (const auto& [k, a] : t) {
    rows.push_back(json::array({std::string(to_string(k.ship_class)), std::string(to_string(k.direction)), k.bin,
                                a.sum, a.sum_sq, a.min, a.max, a.count}));
  }
  return rows;
}

inline StratumTable table_from_json(const json& rows, TemporalAxis axis) {
  StratumTable t;
  for (const auto& r : rows) {
    if (!r.is_array() || r.size() != 8) throw CorruptFile("bad stratum row");
    StratumKey k{parse_ship_class(r[0].get<std::string>()), parse_direction(r[1].get<std::string>()),
                 r[2].get<std::uint8_t>()};
    if (!valid_bin(axis, k.bin)) throw CorruptFile("stratum bin out of range");
    SpeedAccumulator a;
    a.sum = r[3].get<double>();
    a.sum_sq = r[4].get<double>();
    a.min = r[5].get<double>();
    a.max = r[6].get<double>();
    a.count = r[7].get<std::uint64_t>();
    if (a.count == 0) throw CorruptFile("empty stratum stored");
    t.emplace(k, a);
  }
  return t;
}

inline void stats_to_json(json& rec, const StratifiedStats& s) {
  for (TemporalAxis a : kAllAxes) rec[std::string(to_string(a))] = table_to_json(s.table(a));
}

inline StratifiedStats stats_from_json(const json& rec) {
  StratifiedStats s;
  for (TemporalAxis a : kAllAxes) {
    const auto key = std::string(to_string(a));
    if (rec.contains(key)) s.table(a) = table_from_json(rec.at(key), a);
  }
  return s;
}

inline json meta_to_json(const KnowledgeGraph& g) {
  const auto& m = g.meta;
  json j{{"type", "meta"},
         {"format_version", m.format_version},
         {"precision", m.precision},
         {"nodes", g.nodes.size()},
         {"edges", g.edges.size()},
         {"trajectory_count", m.trajectory_count},
         {"ignored_trajectories", m.ignored_trajectories},
         {"run_count", m.run_count},
         {"sample_count", m.sample_count},
         {"skipped_samples", m.skipped_samples},
         {"start_days", m.start_days}};
  j["first_sample"] = m.first_sample ? json(*m.first_sample) : json(nullptr);
  j["last_sample"] = m.last_sample ? json(*m.last_sample) : json(nullptr);
  return j;
}

class CrcWriter {
 public:
  explicit CrcWriter(std::ostream& os) : os_(os) {}
  void line(const std::string& s) {
    os_ << s << '\n';
    crc_ = crc32(crc_, reinterpret_cast<const Bytef*>(s.data()), static_cast<uInt>(s.size()));
    crc_ = crc32(crc_, reinterpret_cast<const Bytef*>("\n"), 1);
  }
  uLong crc() const { return crc_; }

 private:
  std::ostream& os_;
  uLong crc_ = crc32(0L, Z_NULL, 0);
};

inline std::string crc_hex(uLong crc) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%08lx", static_cast<unsigned long>(crc & 0xffffffffUL));
  return buf;
}

}  // namespace detail

inline void save_graph(std::ostream& os, const KnowledgeGraph& g) {
  using detail::json;
  detail::CrcWriter w(os);
  w.line(std::string(kGraphMagic));
  w.line(detail::meta_to_json(g).dump());
  for (const auto& [cell, stats] : g.nodes) {
    json rec{{"type", "node"}, {"cell", cell.str()}};
    detail::stats_to_json(rec, stats);
    w.line(rec.dump());
  }
  for (const auto& [pair, e] : g.edges) {
    json rec{{"type", "edge"}, {"from", pair.first.str()}, {"to", pair.second.str()}, {"transitions", e.transitions}};
    detail::stats_to_json(rec, e.stats);
    w.line(rec.dump());
  }
  os << kChecksumPrefix << detail::crc_hex(w.crc()) << '\n';
}

inline void save_graph(const std::filesystem::path& path, const KnowledgeGraph& g) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw UnreadableSource("cannot write " + path.string());
  save_graph(os, g);
  if (!os) throw UnreadableSource("write failed for " + path.string());
}

inline KnowledgeGraph load_graph(std::istream& is) {
  using detail::json;
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(is, line)) lines.push_back(line);
  if (lines.empty() || lines.front() != kGraphMagic) throw CorruptFile("missing graph magic line");
  if (lines.size() < 3) throw CorruptFile("graph file truncated");

  json meta;
  try {
    meta = json::parse(lines[1]);
  } catch (const json::exception& e) {
    throw CorruptFile(std::string("metadata record unreadable: ") + e.what());
  }
  if (!meta.is_object() || meta.value("type", "") != "meta" || !meta.contains("format_version")) {
    throw CorruptFile("metadata record malformed");
  }
  const int version = meta["format_version"].get<int>();
  if (version != kGraphFormatVersion) {
    throw VersionMismatch("graph format version " + std::to_string(version) + " is not supported (this build reads " +
                          std::to_string(kGraphFormatVersion) + ")");
  }

  const std::string& tail = lines.back();
  if (tail.rfind(kChecksumPrefix, 0) != 0) throw CorruptFile("checksum line missing (truncated file?)");
  uLong crc = crc32(0L, Z_NULL, 0);
  for (std::size_t i = 0; i + 1 < lines.size(); ++i) {
    crc = crc32(crc, reinterpret_cast<const Bytef*>(lines[i].data()), static_cast<uInt>(lines[i].size()));
    crc = crc32(crc, reinterpret_cast<const Bytef*>("\n"), 1);
  }
  if (tail.substr(kChecksumPrefix.size()) != detail::crc_hex(crc)) throw CorruptFile("checksum mismatch");

  KnowledgeGraph g;
  try {
    auto& m = g.meta;
    m.format_version = version;
    m.precision = meta.at("precision").get<int>();
    m.trajectory_count = meta.at("trajectory_count").get<std::uint64_t>();
    m.ignored_trajectories = meta.at("ignored_trajectories").get<std::uint64_t>();
    m.run_count = meta.at("run_count").get<std::uint64_t>();
    m.sample_count = meta.at("sample_count").get<std::uint64_t>();
    m.skipped_samples = meta.at("skipped_samples").get<std::uint64_t>();
    m.start_days = meta.at("start_days").get<std::set<std::int64_t>>();
    if (!meta.at("first_sample").is_null()) m.first_sample = meta["first_sample"].get<UnixSeconds>();
    if (!meta.at("last_sample").is_null()) m.last_sample = meta["last_sample"].get<UnixSeconds>();
    for (std::size_t i = 2; i + 1 < lines.size(); ++i) {
      const json rec = json::parse(lines[i]);
      const std::string type = rec.at("type").get<std::string>();
      if (type == "node") {
        g.nodes.emplace(GeohashCell::parse(rec.at("cell").get<std::string>()), detail::stats_from_json(rec));
      } else if (type == "edge") {
        EdgeStats e;
        e.stats = detail::stats_from_json(rec);
        e.transitions = rec.at("transitions").get<std::uint64_t>();
        g.edges.emplace(CellPair{GeohashCell::parse(rec.at("from").get<std::string>()),
                                 GeohashCell::parse(rec.at("to").get<std::string>())},
                        std::move(e));
      } else {
        throw CorruptFile("unknown record type '" + type + "'");
      }
    }
    if (g.nodes.size() != meta.at("nodes").get<std::size_t>() || g.edges.size() != meta.at("edges").get<std::size_t>()) {
      throw CorruptFile("node/edge counts disagree with metadata");
    }
  } catch (const json::exception& e) {
    throw CorruptFile(std::string("record unreadable: ") + e.what());
  } catch (const InvalidGeohash& e) {
    throw CorruptFile(e.what());
  } catch (const InvalidArgument& e) {
    throw CorruptFile(e.what());
  }
  for (const auto& [pair, e] : g.edges) {
    if (!g.nodes.contains(pair.first) || !g.nodes.contains(pair.second)) throw CorruptFile("edge endpoint missing");
  }
  return g;
}

inline KnowledgeGraph load_graph(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw UnreadableSource("cannot open " + path.string());
  return load_graph(is);
}

}  // namespace aiskg
