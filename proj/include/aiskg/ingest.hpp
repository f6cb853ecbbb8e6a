#pragma once

// Streaming ingestion of delimiter-separated AIS dynamic reports into
// per-vessel, time-ordered streams.

#include <zlib.h>

#include <algorithm>
#include <array>
#include <filesystem>
#include <fstream>
#include <istream>
#include <memory>
#include <ostream>
#include <string>
#include <unordered_map>
#include <vector>

#include "aiskg/ais.hpp"
#include "aiskg/error.hpp"
#include "aiskg/text.hpp"

namespace aiskg {

/// Reads lines from a plain or gzip file (".gz" suffix) without loading it whole.
class LineReader {
 public:
  explicit LineReader(const std::filesystem::path& path) : path_(path) {
    if (path.extension() == ".gz") {
      gz_ = gzopen(path.string().c_str(), "rb");
      if (gz_ == nullptr) throw UnreadableSource("cannot open " + path.string());
      gzbuffer(gz_, 1 << 17);
    } else {
      file_.open(path, std::ios::binary);
      if (!file_) throw UnreadableSource("cannot open " + path.string());
    }
  }

  LineReader(const LineReader&) = delete;
  LineReader& operator=(const LineReader&) = delete;

  ~LineReader() {
    if (gz_ != nullptr) gzclose(gz_);
  }

  bool next(std::string& line) {
    line.clear();
    if (gz_ == nullptr) {
      if (!std::getline(file_, line)) {
        if (file_.bad()) throw UnreadableSource("read error on " + path_.string());
        return false;
      }
      strip_cr(line);
      return true;
    }
    std::array<char, 8192> buf;
    bool got_any = false;
    while (gzgets(gz_, buf.data(), static_cast<int>(buf.size())) != nullptr) {
      got_any = true;
      line.append(buf.data());
      if (!line.empty() && line.back() == '\n') {
        line.pop_back();
        strip_cr(line);
        return true;
      }
    }
    int err = 0;
    gzerror(gz_, &err);
    if (err != Z_OK && err != Z_STREAM_END) throw UnreadableSource("gzip error on " + path_.string());
    strip_cr(line);
    return got_any;
  }

 private:
  static void strip_cr(std::string& s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
  }

  std::filesystem::path path_;
  std::ifstream file_;
  gzFile gz_ = nullptr;
};

struct IngestReport {
  std::uint64_t records = 0;
  std::uint64_t messages = 0;
  std::uint64_t malformed = 0;
  std::uint64_t duplicates = 0;
  std::uint64_t vessels = 0;

  friend bool operator==(const IngestReport&, const IngestReport&) = default;
};

inline void write_report(std::ostream& os, const IngestReport& r) {
  os << "records " << r.records << '\n'
     << "messages " << r.messages << '\n'
     << "malformed " << r.malformed << '\n'
     << "duplicates " << r.duplicates << '\n'
     << "vessels " << r.vessels << '\n';
}

struct IngestResult {
  std::vector<VesselStream> streams;  // ascending vessel_id
  IngestReport report;
};

/// Groups records by vessel as they arrive; finish() sorts and deduplicates.
class StreamCollector {
 public:
  // Consumes a header line first, then records. Returns false for a malformed record.
  bool add_line(std::string_view line) {
    if (!have_header_) {
      parse_header(line);
      return true;
    }
    if (text::trim(line).empty()) return true;
    ++report_.records;
    text::split(line, delim_, fields_);
    auto msg = parse_record();
    if (!msg) {
      ++report_.malformed;
      return false;
    }
    buffers_[msg->vessel_id].push_back(*msg);
    return true;
  }

  void add(const AisMessage& m) {
    ++report_.records;
    if (!is_valid(m)) {
      ++report_.malformed;
      return;
    }
    AisMessage copy = m;
    copy.position = normalized(copy.position);
    buffers_[m.vessel_id].push_back(copy);
  }

  // A new file starts with its own header.
  void reset_header() { have_header_ = false; }

  IngestResult finish() {
    IngestResult out;
    out.streams.reserve(buffers_.size());
    for (auto& [id, msgs] : buffers_) {
      VesselStream s;
      s.vessel_id = id;
      std::stable_sort(msgs.begin(), msgs.end(),
                       [](const AisMessage& a, const AisMessage& b) { return a.timestamp < b.timestamp; });
      // keep first occurrence of each timestamp
      auto last = std::unique(msgs.begin(), msgs.end(), [](const AisMessage& a, const AisMessage& b) {
        return a.timestamp == b.timestamp;
      });
      report_.duplicates += static_cast<std::uint64_t>(std::distance(last, msgs.end()));
      msgs.erase(last, msgs.end());
      msgs.shrink_to_fit();
      for (const auto& m : msgs) {
        if (m.ship_type) {
          s.ship_class = classify_ship_type(m.ship_type);
          break;
        }
      }
      report_.messages += msgs.size();
      s.messages = std::move(msgs);
      out.streams.push_back(std::move(s));
    }
    buffers_.clear();
    std::sort(out.streams.begin(), out.streams.end(),
              [](const VesselStream& a, const VesselStream& b) { return a.vessel_id < b.vessel_id; });
    report_.vessels = out.streams.size();
    out.report = report_;
    return out;
  }

 private:
  enum Column { kVessel, kTime, kLat, kLon, kSog, kType, kColumnCount };

  void parse_header(std::string_view line) {
    for (char d : {',', '\t', ';', '|'}) {
      if (line.find(d) != std::string_view::npos) {
        delim_ = d;
        break;
      }
    }
    columns_.fill(-1);
    const auto names = text::split(line, delim_);
    for (std::size_t i = 0; i < names.size(); ++i) {
      const std::string n = text::to_lower(text::trim(names[i]));
      const int idx = static_cast<int>(i);
      if (n == "vessel_id" || n == "mmsi") columns_[kVessel] = idx;
      else if (n == "timestamp_utc" || n == "timestamp" || n == "time") columns_[kTime] = idx;
      else if (n == "lat" || n == "latitude") columns_[kLat] = idx;
      else if (n == "lon" || n == "longitude") columns_[kLon] = idx;
      else if (n == "sog_knots" || n == "sog") columns_[kSog] = idx;
      else if (n == "ship_type" || n == "ship_type_code") columns_[kType] = idx;
    }
    for (int c = 0; c < kType; ++c) {
      if (columns_[static_cast<std::size_t>(c)] < 0) {
        throw UnreadableSource("header lacks required columns (vessel_id,timestamp_utc,lat,lon,sog_knots): '" +
                               std::string(line) + "'");
      }
    }
    width_ = names.size();
    have_header_ = true;
  }

  std::string_view field(Column c) const {
    const int idx = columns_[static_cast<std::size_t>(c)];
    return idx < 0 ? std::string_view{} : fields_[static_cast<std::size_t>(idx)];
  }

  std::optional<AisMessage> parse_record() const {
    if (fields_.size() != width_) return std::nullopt;
    AisMessage m;
    auto id = text::to_int<VesselId>(field(kVessel));
    auto ts = parse_timestamp(field(kTime));
    auto lat = text::to_double(field(kLat));
    auto lon = text::to_double(field(kLon));
    auto sog = text::to_double(field(kSog));
    if (!id || !ts || !lat || !lon || !sog) return std::nullopt;
    m.vessel_id = *id;
    m.timestamp = *ts;
    m.position = {*lat, *lon};
    m.sog = *sog;
    if (columns_[kType] >= 0) {
      auto code = text::to_int<int>(field(kType));
      if (code && *code >= 0 && *code <= 99) m.ship_type = *code;
    }
    if (!is_valid(m)) return std::nullopt;
    m.position = normalized(m.position);
    return m;
  }

  bool have_header_ = false;
  char delim_ = ',';
  std::size_t width_ = 0;
  std::array<int, kColumnCount> columns_{};
  std::vector<std::string_view> fields_;
  std::unordered_map<VesselId, std::vector<AisMessage>> buffers_;
  IngestReport report_;
};

inline IngestResult ingest(std::istream& in) {
  StreamCollector collector;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    collector.add_line(line);
  }
  return collector.finish();
}

inline IngestResult ingest(const std::vector<std::filesystem::path>& sources) {
  StreamCollector collector;
  std::string line;
  for (const auto& path : sources) {
    LineReader reader(path);
    collector.reset_header();
    while (reader.next(line)) collector.add_line(line);
  }
  return collector.finish();
}

inline IngestResult ingest(const std::filesystem::path& source) {
  return ingest(std::vector<std::filesystem::path>{source});
}

/// Writes messages in the ingest input format (epoch-second timestamps).
inline void write_messages_csv(std::ostream& os, const std::vector<VesselStream>& streams) {
  os << "vessel_id,timestamp_utc,lat,lon,sog_knots,ship_type\n";
  for (const auto& s : streams) {
    for (const auto& m : s.messages) {
      os << m.vessel_id << ',' << m.timestamp << ',' << text::fmt(m.position.lat) << ','
         << text::fmt(m.position.lon) << ',' << text::fmt(m.sog) << ',';
      if (m.ship_type) os << *m.ship_type;
      os << '\n';
    }
  }
}

}  // namespace aiskg
