#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "aiskg/error.hpp"
#include "aiskg/geo.hpp"
#include "aiskg/text.hpp"
#include "aiskg/time.hpp"

namespace aiskg {

using VesselId = std::uint64_t;

enum class ShipClass : std::uint8_t { Cargo, Tanker, Other };

inline constexpr int kShipClassCount = 3;
inline constexpr std::array<ShipClass, kShipClassCount> kAllShipClasses{ShipClass::Cargo, ShipClass::Tanker,
                                                                        ShipClass::Other};

inline std::string_view to_string(ShipClass c) {
  switch (c) {
    case ShipClass::Cargo: return "cargo";
    case ShipClass::Tanker: return "tanker";
    case ShipClass::Other: return "other";
  }
  return "other";
}

inline ShipClass parse_ship_class(std::string_view s) {
  const std::string lower = text::to_lower(text::trim(s));
  for (ShipClass c : kAllShipClasses) {
    if (to_string(c) == lower) return c;
  }
  throw InvalidArgument("unknown ship class '" + std::string(s) + "'");
}

/// AIS type-code decades: 70-79 cargo, 80-89 tanker, everything else other.
inline ShipClass classify_ship_type(std::optional<int> code) {
  if (!code) return ShipClass::Other;
  if (*code >= 70 && *code <= 79) return ShipClass::Cargo;
  if (*code >= 80 && *code <= 89) return ShipClass::Tanker;
  return ShipClass::Other;
}

struct AisMessage {
  VesselId vessel_id = 0;
  UnixSeconds timestamp = 0;
  Position position;
  double sog = 0.0;  // knots
  std::optional<int> ship_type;

  friend bool operator==(const AisMessage&, const AisMessage&) = default;
};

inline bool is_valid(const AisMessage& m) {
  return m.timestamp > 0 && std::isfinite(m.sog) && m.sog >= 0.0 && is_valid(m.position);
}

struct VesselStream {
  VesselId vessel_id = 0;
  std::vector<AisMessage> messages;  // ascending timestamps, no duplicates
  ShipClass ship_class = ShipClass::Other;

  friend bool operator==(const VesselStream&, const VesselStream&) = default;
};

}  // namespace aiskg
