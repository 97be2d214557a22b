#ifndef RAILTRACE_CONFIRM_HPP
#define RAILTRACE_CONFIRM_HPP

#include <algorithm>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "railtrace/error.hpp"
#include "railtrace/ingest.hpp"
#include "railtrace/network.hpp"
#include "railtrace/parallel.hpp"

namespace railtrace {

/// 320 ft, the outer proximity bound for photo sightings.
inline constexpr double kDefaultSnapThresholdM = feet_to_m(320.0);
/// 160 ft, the stricter bound.
inline constexpr double kStrictSnapThresholdM = feet_to_m(160.0);
/// Terminals are facility centroids rather than track points.
inline constexpr double kDefaultTerminalSnapThresholdM = 500.0;

inline constexpr const char* kExpansionOrigin = "expansion";

struct SnapResult {
  std::string observation_id;
  LinkId link_id;
  double distance_m = 0.0;
  friend bool operator==(const SnapResult&, const SnapResult&) = default;
};

struct SnapOutcome {
  std::vector<SnapResult> snapped;
  std::vector<std::string> rejected;
};

struct SnapOptions {
  double threshold_m = kDefaultSnapThresholdM;
  double terminal_threshold_m = kDefaultTerminalSnapThresholdM;
  std::size_t workers = 1;
};

/// Snaps each observation to its nearest link within the threshold for its
/// kind. Observations beyond the threshold are rejected, never force-snapped.
/// Both lists come back ordered by observation id.
inline SnapOutcome snap_all(const RailNetwork& net, std::span<const Observation> obs, const SnapOptions& opts) {
  if (!(opts.threshold_m > 0.0) || !(opts.terminal_threshold_m > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "snap thresholds must be > 0");
  }
  std::vector<std::optional<LinkHit>> hits(obs.size());
  parallel_for(obs.size(), opts.workers, [&](std::size_t i) {
    const double limit = obs[i].kind == ObservationKind::Terminal ? opts.terminal_threshold_m : opts.threshold_m;
    hits[i] = net.nearest_link(obs[i].location, limit);
  });

  std::vector<std::size_t> order(obs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return obs[a].id < obs[b].id; });

  SnapOutcome out;
  for (std::size_t i : order) {
    if (hits[i]) {
      out.snapped.push_back({obs[i].id, hits[i]->link_id, hits[i]->distance_m});
    } else {
      out.rejected.push_back(obs[i].id);
    }
  }
  return out;
}

inline SnapOutcome snap_all(const RailNetwork& net, std::span<const Observation> obs, double threshold_m) {
  SnapOptions opts;
  opts.threshold_m = threshold_m;
  return snap_all(net, obs, opts);
}

/// Cumulative share of observations whose nearest link lies within each
/// threshold. Thresholds must be ascending.
inline std::vector<double> proximity_stats(const RailNetwork& net, std::span<const Observation> obs,
                                           std::span<const double> thresholds_m, std::size_t workers = 1) {
  if (thresholds_m.empty()) return {};
  if (!std::is_sorted(thresholds_m.begin(), thresholds_m.end()) || !(thresholds_m.front() > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "thresholds must be positive and ascending");
  }
  std::vector<std::optional<LinkHit>> hits(obs.size());
  parallel_for(obs.size(), workers,
               [&](std::size_t i) { hits[i] = net.nearest_link(obs[i].location, thresholds_m.back()); });
  std::vector<double> fractions;
  fractions.reserve(thresholds_m.size());
  for (double t : thresholds_m) {
    std::size_t within = 0;
    for (const auto& h : hits) {
      if (h && h->distance_m <= t) ++within;
    }
    fractions.push_back(obs.empty() ? 0.0 : static_cast<double>(within) / static_cast<double>(obs.size()));
  }
  return fractions;
}

struct ConfirmedSet {
  std::set<LinkId> links;
  /// Observation ids that confirmed each link, or {"expansion"}.
  std::map<LinkId, std::set<std::string>> origin;

  void add(const LinkId& link, const std::string& source) {
    links.insert(link);
    origin[link].insert(source);
  }

  friend bool operator==(const ConfirmedSet&, const ConfirmedSet&) = default;
};

inline ConfirmedSet confirmed_from_snaps(std::span<const SnapResult> snaps) {
  ConfirmedSet set;
  for (const auto& s : snaps) set.add(s.link_id, s.observation_id);
  return set;
}

/// Grows the confirmed set through every node of degree 2: the only other
/// link at such a node joins the set. Runs to a fixpoint; cycles terminate
/// because each link is queued at most once.
inline ConfirmedSet expand(const RailNetwork& net, const ConfirmedSet& confirmed) {
  for (const auto& l : confirmed.links) {
    if (!net.contains(l)) throw Error(ErrorCode::UnknownLink, "confirmed link " + l + " not in network");
  }
  ConfirmedSet out = confirmed;
  std::deque<LinkId> queue(confirmed.links.begin(), confirmed.links.end());
  while (!queue.empty()) {
    const LinkId current = std::move(queue.front());
    queue.pop_front();
    const auto [a, b] = net.endpoints(current);
    for (NodeId n : {a, b}) {
      const Node& node = net.node(n);
      if (node.degree() != 2) continue;
      const LinkId& other = node.incident_links[0] == current ? node.incident_links[1] : node.incident_links[0];
      if (out.links.count(other)) continue;
      out.add(other, kExpansionOrigin);
      queue.push_back(other);
    }
  }
  return out;
}

struct RouteComponent {
  std::string component_id;  // smallest contained link id
  std::set<LinkId> links;
  std::set<NodeId> nodes;
  friend bool operator==(const RouteComponent&, const RouteComponent&) = default;
};

/// Connected pieces of the confirmed subgraph (links sharing a node belong
/// together), ordered by component id.
inline std::vector<RouteComponent> components(const RailNetwork& net, const ConfirmedSet& confirmed) {
  std::vector<LinkId> ids(confirmed.links.begin(), confirmed.links.end());
  for (const auto& l : ids) {
    if (!net.contains(l)) throw Error(ErrorCode::UnknownLink, "confirmed link " + l + " not in network");
  }
  detail::UnionFind uf(ids.size());
  std::map<NodeId, std::size_t> first_at_node;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto [a, b] = net.endpoints(ids[i]);
    for (NodeId n : {a, b}) {
      auto [it, fresh] = first_at_node.emplace(n, i);
      if (!fresh) uf.unite(it->second, i);
    }
  }
  std::map<std::size_t, RouteComponent> by_root;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    auto& comp = by_root[uf.find(i)];
    comp.links.insert(ids[i]);
    const auto [a, b] = net.endpoints(ids[i]);
    comp.nodes.insert(a);
    comp.nodes.insert(b);
  }
  std::vector<RouteComponent> out;
  out.reserve(by_root.size());
  for (auto& [root, comp] : by_root) {
    comp.component_id = *comp.links.begin();
    out.push_back(std::move(comp));
  }
  std::sort(out.begin(), out.end(),
            [](const RouteComponent& a, const RouteComponent& b) { return a.component_id < b.component_id; });
  return out;
}

}  // namespace railtrace

#endif  // RAILTRACE_CONFIRM_HPP
