#pragma once

// Shortest cell path over the directed edge set, for point-to-point queries.

#include <algorithm>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <queue>
#include <string>
#include <vector>

#include "aiskg/error.hpp"
#include "aiskg/estimator.hpp"
#include "aiskg/geo.hpp"
#include "aiskg/knowledge_graph.hpp"

namespace aiskg {

struct RouteOptions {
  // With strict off, an endpoint outside the graph snaps to the nearest node
  // whose centre lies within snap_radius_km.
  bool strict = false;
  double snap_radius_km = 250.0;
};

struct Route {
  std::vector<GeohashCell> cells;  // visited nodes, origin first
  std::vector<Segment> steps;      // one per hop, keyed by the cell being left
  double distance_km = 0.0;
};

inline std::optional<GeohashCell> nearest_node(const KnowledgeGraph& g, const Position& p, double radius_km) {
  std::optional<GeohashCell> best;
  double best_d = std::numeric_limits<double>::infinity();
  for (const auto& [cell, stats] : g.nodes) {
    const double d = haversine_km(p, cell.center());
    if (d <= radius_km && d < best_d) {
      best_d = d;
      best = cell;
    }
  }
  return best;
}

inline GeohashCell resolve_endpoint(const KnowledgeGraph& g, const Position& p, const RouteOptions& opt,
                                    const char* which) {
  const GeohashCell cell = GeohashCell::from_position(p, g.meta.precision);
  if (g.nodes.contains(cell)) return cell;
  if (!opt.strict) {
    if (auto snapped = nearest_node(g, p, opt.snap_radius_km)) return *snapped;
  }
  throw NoRoute(std::string(which) + " cell " + cell.str() + " is not a graph node");
}

/// Minimum-distance path with edge weight = great-circle distance between
/// cell centres. Same-cell queries give one step of the direct distance.
inline Route find_route(const KnowledgeGraph& g, const Position& origin, const Position& destination,
                        const RouteOptions& opt = {}) {
  const GeohashCell from = resolve_endpoint(g, origin, opt, "origin");
  const GeohashCell to = resolve_endpoint(g, destination, opt, "destination");
  Route route;
  if (from == to) {
    route.cells = {from};
    const double d = haversine_km(origin, destination);
    const Direction dir = d > 0.0 ? quantize_direction(initial_bearing(origin, destination)) : Direction::N;
    route.steps.push_back({from, d, std::nullopt, dir});
    route.distance_km = d;
    return route;
  }

  std::map<GeohashCell, std::vector<GeohashCell>> adjacency;
  for (const auto& [pair, e] : g.edges) adjacency[pair.first].push_back(pair.second);

  std::map<GeohashCell, double> dist;
  std::map<GeohashCell, GeohashCell> parent;
  using Item = std::pair<double, GeohashCell>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
  dist[from] = 0.0;
  queue.push({0.0, from});
  while (!queue.empty()) {
    const auto [d, u] = queue.top();
    queue.pop();
    if (d > dist[u]) continue;
    if (u == to) break;
    auto it = adjacency.find(u);
    if (it == adjacency.end()) continue;
    const Position cu = u.center();
    for (const GeohashCell& v : it->second) {
      const double nd = d + haversine_km(cu, v.center());
      auto dv = dist.find(v);
      if (dv == dist.end() || nd < dv->second) {
        dist[v] = nd;
        parent[v] = u;
        queue.push({nd, v});
      }
    }
  }
  if (!dist.contains(to)) throw NoRoute("no directed path from " + from.str() + " to " + to.str());

  for (GeohashCell c = to;; c = parent.at(c)) {
    route.cells.push_back(c);
    if (c == from) break;
  }
  std::reverse(route.cells.begin(), route.cells.end());
  for (std::size_t i = 0; i + 1 < route.cells.size(); ++i) {
    const Position a = route.cells[i].center();
    const Position b = route.cells[i + 1].center();
    const double d = haversine_km(a, b);
    route.steps.push_back({route.cells[i], d, std::nullopt, quantize_direction(initial_bearing(a, b))});
    route.distance_km += d;
  }
  return route;
}

}  // namespace aiskg
