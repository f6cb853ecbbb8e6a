#pragma once

// Synthetic AIS world generator with a ground-truth sidecar. Vessels sail
// great-circle legs between waypoints; each report's speed comes from a small
// family of speed laws plus clamped Gaussian noise.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"

#include "aiskg/ais.hpp"
#include "aiskg/error.hpp"
#include "aiskg/geo.hpp"
#include "aiskg/ingest.hpp"
#include "aiskg/knowledge_graph.hpp"
#include "aiskg/parallel.hpp"
#include "aiskg/text.hpp"
#include "aiskg/time.hpp"

namespace aiskg::synth {

enum class SpeedLawKind : std::uint8_t { Constant, HourStep, DirectionStep, ClassOffset };

struct SpeedLaw {
  SpeedLawKind kind = SpeedLawKind::Constant;
  // hour_step: base speed inside [day_start_hour, day_end_hour) UTC, night_speed outside.
  double night_speed = 10.0;
  unsigned day_start_hour = 6;
  unsigned day_end_hour = 18;
  // direction_step: slow_speed while heading in one of slow_directions.
  std::vector<Direction> slow_directions;
  double slow_speed = 10.0;
  // class_offset: base + offset[class].
  std::array<double, kShipClassCount> class_offset{0.0, 0.0, 0.0};

  bool is_day(unsigned hour) const { return hour >= day_start_hour && hour < day_end_hour; }

  double eval(double base, unsigned hour, Direction dir, ShipClass cls) const {
    switch (kind) {
      case SpeedLawKind::Constant: return base;
      case SpeedLawKind::HourStep: return is_day(hour) ? base : night_speed;
      case SpeedLawKind::DirectionStep:
        return std::find(slow_directions.begin(), slow_directions.end(), dir) != slow_directions.end() ? slow_speed
                                                                                                        : base;
      case SpeedLawKind::ClassOffset: return base + class_offset[static_cast<std::size_t>(cls)];
    }
    return base;
  }
};

struct GapInjection {
  double route_fraction = 0.5;  // silence starts once this fraction of the route is sailed
  double minutes = 120.0;
};

struct FleetSpec {
  ShipClass ship_class = ShipClass::Cargo;
  std::optional<int> ship_type_code;  // defaults from ship_class
  std::size_t count = 1;
  std::vector<Position> route;
  double base_speed = 12.0;
  SpeedLaw speed_law;
  double noise_sd = 0.0;
  double report_interval_minutes = 10.0;
  std::vector<GapInjection> gaps;
  unsigned voyages = 1;
  bool bidirectional = false;  // odd voyages sail the route backwards
  double departure_align_minutes = 0.0;  // round departures to this grid when > 0
  double rest_hours_min = 12.0;
  double rest_hours_max = 48.0;
};

struct WorldSpec {
  std::uint64_t seed = 1;
  UnixSeconds start = 0;
  UnixSeconds end = 0;
  VesselId first_vessel_id = 200000000;
  std::vector<FleetSpec> fleets;
};

struct TruthRun {
  VesselId vessel_id = 0;
  std::uint32_t voyage = 0;
  GeohashCell cell;
  UnixSeconds entry_time = 0;
  UnixSeconds exit_time = 0;
  double true_mean_speed = 0.0;  // noise-free law, averaged over the run's reports
  std::size_t messages = 0;
};

struct World {
  std::vector<AisMessage> messages;  // ascending (timestamp, vessel_id)
  std::vector<TruthRun> truth;       // ascending (vessel_id, voyage, entry_time)
};

inline void validate(const WorldSpec& spec) {
  if (spec.end <= spec.start) throw InvalidSpec("time range end must follow start");
  if (spec.fleets.empty()) throw InvalidSpec("world has no fleets");
  for (const auto& f : spec.fleets) {
    if (f.route.size() < 2) throw InvalidSpec("fleet route needs at least two waypoints");
    for (const auto& p : f.route) {
      if (!is_valid(p)) throw InvalidSpec("route waypoint out of range");
    }
    for (std::size_t i = 1; i < f.route.size(); ++i) {
      if (f.route[i] == f.route[i - 1]) throw InvalidSpec("repeated route waypoint");
    }
    if (!(f.base_speed >= 3.0 && f.base_speed <= 50.0)) throw InvalidSpec("base_speed must lie in [3, 50] knots");
    if (!(f.report_interval_minutes > 0.0)) throw InvalidSpec("report_interval must be positive");
    if (f.noise_sd < 0.0) throw InvalidSpec("noise_sd must be non-negative");
    if (f.voyages == 0 || f.count == 0) throw InvalidSpec("fleet count and voyages must be positive");
    if (f.speed_law.day_start_hour > 24 || f.speed_law.day_end_hour > 24) throw InvalidSpec("day hours out of range");
    if (f.rest_hours_max < f.rest_hours_min || f.rest_hours_min < 0.0) throw InvalidSpec("bad rest interval");
    for (const auto& g : f.gaps) {
      if (g.route_fraction < 0.0 || g.route_fraction > 1.0 || g.minutes < 0.0) throw InvalidSpec("bad gap injection");
    }
  }
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

namespace detail {

inline int default_type_code(ShipClass c) {
  switch (c) {
    case ShipClass::Cargo: return 70;
    case ShipClass::Tanker: return 80;
    case ShipClass::Other: return 60;
  }
  return 60;
}

struct VesselOutput {
  std::vector<AisMessage> messages;
  std::vector<TruthRun> truth;
};

inline void add_truth(VesselOutput& out, VesselId id, std::uint32_t voyage, std::span<const AisMessage> msgs,
                      std::span<const double> true_speeds) {
  std::size_t i = 0;
  while (i < msgs.size()) {
    const GeohashCell cell = GeohashCell::from_position(msgs[i].position);
    std::size_t j = i;
    double sum = 0.0;
    while (j < msgs.size() && GeohashCell::from_position(msgs[j].position) == cell) sum += true_speeds[j++];
    out.truth.push_back({id, voyage, cell, msgs[i].timestamp, msgs[j - 1].timestamp,
                         sum / static_cast<double>(j - i), j - i});
    i = j;
  }
}

inline VesselOutput simulate_vessel(const WorldSpec& spec, const FleetSpec& fleet, VesselId id,
                                    std::uint64_t vessel_seed) {
  VesselOutput out;
  std::mt19937_64 rng(vessel_seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 1.0);
  const std::optional<int> type_code = fleet.ship_type_code ? fleet.ship_type_code
                                                            : std::optional<int>(default_type_code(fleet.ship_class));
  const auto dt = static_cast<UnixSeconds>(std::llround(fleet.report_interval_minutes * 60.0));
  const UnixSeconds step = std::max<UnixSeconds>(dt, 1);

  auto align = [&](double t) {
    if (fleet.departure_align_minutes <= 0.0) return static_cast<UnixSeconds>(std::floor(t));
    const double grid = fleet.departure_align_minutes * 60.0;
    return static_cast<UnixSeconds>(std::ceil(t / grid) * grid);
  };

  UnixSeconds t = align(static_cast<double>(spec.start) + unit(rng) * static_cast<double>(spec.end - spec.start));
  for (std::uint32_t voyage = 0; voyage < fleet.voyages && t < spec.end; ++voyage) {
    std::vector<Position> route = fleet.route;
    if (fleet.bidirectional && voyage % 2 == 1) std::reverse(route.begin(), route.end());
    std::vector<double> leg_km(route.size() - 1);
    double total_km = 0.0;
    for (std::size_t i = 0; i + 1 < route.size(); ++i) total_km += (leg_km[i] = haversine_km(route[i], route[i + 1]));

    std::vector<AisMessage> msgs;
    std::vector<double> truth_speed;
    std::size_t leg = 0;
    double along_leg = 0.0;  // km sailed on the current leg
    double sailed = 0.0;
    Position pos = route.front();
    std::vector<std::optional<UnixSeconds>> silence_until(fleet.gaps.size());
    bool arrived = false;
    while (!arrived && t < spec.end) {
      const Direction dir = quantize_direction(initial_bearing(pos, route[leg + 1]));
      const unsigned hour = to_civil(t).hour;
      const double true_speed = fleet.speed_law.eval(fleet.base_speed, hour, dir, fleet.ship_class);
      const double sog = std::clamp(true_speed + fleet.noise_sd * noise(rng), 3.0, 50.0);

      bool silent = false;
      for (std::size_t g = 0; g < fleet.gaps.size(); ++g) {
        if (!silence_until[g] && sailed >= fleet.gaps[g].route_fraction * total_km) {
          silence_until[g] = t + static_cast<UnixSeconds>(std::llround(fleet.gaps[g].minutes * 60.0));
        }
        if (silence_until[g] && t < *silence_until[g]) silent = true;
      }
      if (!silent) {
        msgs.push_back({id, t, pos, sog, type_code});
        truth_speed.push_back(true_speed);
      }

      double remaining = sog * kKmPerNauticalMile * static_cast<double>(step) / 3600.0;
      if (sailed + remaining >= total_km) {
        arrived = true;
        t += step;
        break;
      }
      sailed += remaining;
      while (remaining > 0.0) {
        const double left_on_leg = leg_km[leg] - along_leg;
        if (remaining < left_on_leg) {
          along_leg += remaining;
          remaining = 0.0;
        } else {
          remaining -= left_on_leg;
          ++leg;
          along_leg = 0.0;
        }
      }
      pos = interpolate(route[leg], route[leg + 1], along_leg / leg_km[leg]);
      t += step;
    }
    add_truth(out, id, voyage, msgs, truth_speed);
    out.messages.insert(out.messages.end(), msgs.begin(), msgs.end());
    const double rest_h = fleet.rest_hours_min + unit(rng) * (fleet.rest_hours_max - fleet.rest_hours_min);
    t = align(static_cast<double>(t) + rest_h * 3600.0);
  }
  return out;
}

}  // namespace detail

/// Deterministic given spec.seed; each vessel draws from its own seed derived
/// from the master seed, so results do not depend on `jobs`.
inline World generate(const WorldSpec& spec, unsigned jobs = 1) {
  validate(spec);
  struct Job {
    const FleetSpec* fleet;
    VesselId id;
  };
  std::vector<Job> vessels;
  VesselId next = spec.first_vessel_id;
  for (const auto& f : spec.fleets) {
    for (std::size_t i = 0; i < f.count; ++i) vessels.push_back({&f, next++});
  }
  std::vector<detail::VesselOutput> outputs(vessels.size());
  parallel_for(vessels.size(), jobs, [&](std::size_t i) {
    outputs[i] = detail::simulate_vessel(spec, *vessels[i].fleet, vessels[i].id,
                                         splitmix64(spec.seed ^ splitmix64(vessels[i].id)));
  });
  World w;
  for (auto& o : outputs) {
    w.messages.insert(w.messages.end(), o.messages.begin(), o.messages.end());
    w.truth.insert(w.truth.end(), o.truth.begin(), o.truth.end());
  }
  std::stable_sort(w.messages.begin(), w.messages.end(), [](const AisMessage& a, const AisMessage& b) {
    return std::tie(a.timestamp, a.vessel_id) < std::tie(b.timestamp, b.vessel_id);
  });
  return w;
}

// ---------------------------------------------------------------------------
// Spec file (JSON) and output files

namespace detail {

using nlohmann::json;

inline UnixSeconds time_field(const json& j, const char* key) {
  const auto& v = j.at(key);
  if (v.is_number_integer()) return v.get<UnixSeconds>();
  const auto t = parse_timestamp(v.get<std::string>());
  if (!t) throw InvalidSpec(std::string("bad time for '") + key + "'");
  return *t;
}

inline SpeedLaw parse_law(const json& j) {
  SpeedLaw law;
  const std::string kind = j.value("kind", "constant");
  if (kind == "constant") law.kind = SpeedLawKind::Constant;
  else if (kind == "hour_step") law.kind = SpeedLawKind::HourStep;
  else if (kind == "direction_step") law.kind = SpeedLawKind::DirectionStep;
  else if (kind == "class_offset") law.kind = SpeedLawKind::ClassOffset;
  else throw InvalidSpec("unknown speed law '" + kind + "'");
  law.night_speed = j.value("night_speed", law.night_speed);
  law.day_start_hour = j.value("day_start_hour", law.day_start_hour);
  law.day_end_hour = j.value("day_end_hour", law.day_end_hour);
  law.slow_speed = j.value("slow_speed", law.slow_speed);
  if (j.contains("slow_directions")) {
    for (const auto& d : j["slow_directions"]) law.slow_directions.push_back(parse_direction(d.get<std::string>()));
  }
  if (j.contains("class_offset")) {
    for (const auto& [name, v] : j["class_offset"].items()) {
      law.class_offset[static_cast<std::size_t>(parse_ship_class(name))] = v.get<double>();
    }
  }
  return law;
}

}  // namespace detail

/// Parses the declarative world document. Throws InvalidSpec on bad fields.
inline WorldSpec parse_world_spec(const nlohmann::json& j) {
  using detail::json;
  WorldSpec spec;
  try {
    spec.seed = j.value("seed", spec.seed);
    spec.start = detail::time_field(j, "start");
    spec.end = detail::time_field(j, "end");
    spec.first_vessel_id = j.value("first_vessel_id", spec.first_vessel_id);
    for (const auto& f : j.at("fleets")) {
      FleetSpec fleet;
      fleet.ship_class = parse_ship_class(f.value("ship_class", "cargo"));
      if (f.contains("ship_type_code") && !f["ship_type_code"].is_null()) fleet.ship_type_code = f["ship_type_code"].get<int>();
      fleet.count = f.value("count", fleet.count);
      for (const auto& p : f.at("route")) fleet.route.push_back(normalized({p.at(0).get<double>(), p.at(1).get<double>()}));
      fleet.base_speed = f.value("base_speed", fleet.base_speed);
      if (f.contains("speed_law")) fleet.speed_law = detail::parse_law(f["speed_law"]);
      fleet.noise_sd = f.value("noise_sd", fleet.noise_sd);
      fleet.report_interval_minutes = f.value("report_interval", fleet.report_interval_minutes);
      if (f.contains("gaps")) {
        for (const auto& g : f["gaps"]) fleet.gaps.push_back({g.at(0).get<double>(), g.at(1).get<double>()});
      }
      fleet.voyages = f.value("voyages", fleet.voyages);
      fleet.bidirectional = f.value("bidirectional", fleet.bidirectional);
      fleet.departure_align_minutes = f.value("departure_align_minutes", fleet.departure_align_minutes);
      fleet.rest_hours_min = f.value("rest_hours_min", fleet.rest_hours_min);
      fleet.rest_hours_max = f.value("rest_hours_max", fleet.rest_hours_max);
      spec.fleets.push_back(std::move(fleet));
    }
  } catch (const json::exception& e) {
    throw InvalidSpec(e.what());
  } catch (const InvalidArgument& e) {
    throw InvalidSpec(e.what());
  }
  validate(spec);
  return spec;
}

inline WorldSpec load_world_spec(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw UnreadableSource("cannot open " + path.string());
  try {
    return parse_world_spec(nlohmann::json::parse(is));
  } catch (const nlohmann::json::exception& e) {
    throw InvalidSpec(e.what());
  }
}

inline void write_messages(std::ostream& os, const World& w) {
  os << "vessel_id,timestamp_utc,lat,lon,sog_knots,ship_type\n";
  for (const auto& m : w.messages) {
    os << m.vessel_id << ',' << m.timestamp << ',' << text::fmt(m.position.lat) << ',' << text::fmt(m.position.lon)
       << ',' << text::fmt(m.sog) << ',';
    if (m.ship_type) os << *m.ship_type;
    os << '\n';
  }
}

inline void write_truth(std::ostream& os, const World& w) {
  os << "vessel_id,voyage,cell,entry_time,exit_time,true_mean_speed,messages\n";
  for (const auto& r : w.truth) {
    os << r.vessel_id << ',' << r.voyage << ',' << r.cell.str() << ',' << r.entry_time << ',' << r.exit_time << ','
       << text::fmt(r.true_mean_speed) << ',' << r.messages << '\n';
  }
}

/// Writes <dir>/ais.csv and <dir>/truth.csv.
inline void write_world(const World& w, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream ais(dir / "ais.csv", std::ios::binary);
  std::ofstream truth(dir / "truth.csv", std::ios::binary);
  if (!ais || !truth) throw UnreadableSource("cannot write into " + dir.string());
  write_messages(ais, w);
  write_truth(truth, w);
}

}  // namespace aiskg::synth
