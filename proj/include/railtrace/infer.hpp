#ifndef RAILTRACE_INFER_HPP
#define RAILTRACE_INFER_HPP

#include <algorithm>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "railtrace/confirm.hpp"
#include "railtrace/error.hpp"
#include "railtrace/ingest.hpp"
#include "railtrace/network.hpp"
#include "railtrace/parallel.hpp"

namespace railtrace {

/// A loading/unloading terminal and the link it snapped to, if any.
struct TerminalSite {
  std::string terminal_id;
  std::optional<LinkId> snapped_link;
};

/// Anything that can sit at either end of a gap: a confirmed component, a
/// terminal, or a group produced by earlier merges.
struct RouteGroup {
  std::string label;
  std::set<LinkId> links;
  std::set<NodeId> nodes;
};

inline RouteGroup to_group(const RouteComponent& c) {
  return {"component:" + c.component_id, c.links, c.nodes};
}

inline RouteGroup to_group(const RailNetwork& net, const TerminalSite& t) {
  if (!t.snapped_link) {
    throw Error(ErrorCode::UnsnappedTerminal, "terminal " + t.terminal_id + " did not snap to any link");
  }
  const auto [a, b] = net.endpoints(*t.snapped_link);
  return {"terminal:" + t.terminal_id, {*t.snapped_link}, {a, b}};
}

/// Every carrier that owns or holds trackage rights on any link of either group.
inline CarrierSet carrier_set(const RailNetwork& net, const RouteGroup& a, const RouteGroup& b) {
  if (a.label == b.label) throw Error(ErrorCode::InvalidArgument, "carrier_set needs two distinct endpoints");
  CarrierSet out;
  for (const auto* g : {&a, &b}) {
    for (const auto& l : g->links) {
      const auto& link = net.link(l);
      out.insert(link.owners().begin(), link.owners().end());
      out.insert(link.trackage_rights().begin(), link.trackage_rights().end());
    }
  }
  return out;
}

struct GapCandidate {
  std::string from;
  std::string to;
  std::vector<LinkId> path;  // ordered from the `from` side
  double length_m = 0.0;
  CarrierSet carriers_used;
  NodeId from_node;
  NodeId to_node;
  GeoPoint from_location;
  GeoPoint to_location;
};

/// Adjacency over node positions, built once per network.
class RoutingGraph {
 public:
  struct Edge {
    std::uint32_t link;  // index into net.links(), so index order is id order
    std::uint32_t to;    // position in net.nodes()
  };

  explicit RoutingGraph(const RailNetwork& net) : net_(&net), adj_(net.nodes().size()) {
    for (std::uint32_t li = 0; li < net.links().size(); ++li) {
      const auto [a, b] = net.endpoints(li);
      const auto pa = position(a);
      const auto pb = position(b);
      adj_[pa].push_back({li, pb});
      adj_[pb].push_back({li, pa});
    }
  }

  const RailNetwork& network() const { return *net_; }
  std::span<const Edge> edges(std::uint32_t pos) const { return adj_[pos]; }
  std::size_t size() const { return adj_.size(); }

  std::uint32_t position(NodeId id) const {
    auto nodes = net_->nodes();
    auto it = std::lower_bound(nodes.begin(), nodes.end(), id, [](const Node& n, NodeId v) { return n.id < v; });
    if (it == nodes.end() || it->id != id) {
      throw Error(ErrorCode::InvalidArgument, "node " + std::to_string(id.value) + " not in network");
    }
    return static_cast<std::uint32_t>(it - nodes.begin());
  }

 private:
  const RailNetwork* net_;
  std::vector<std::vector<Edge>> adj_;
};

/// Minimum-length path over links accessible to `carriers`, from any node in
/// `from_nodes` to any node in `to_nodes`. Equal lengths resolve to the
/// lexicographically smallest link-id sequence. If the node sets share a
/// node the gap is empty and has length zero.
inline std::optional<GapCandidate> shortest_gap(const RoutingGraph& graph, const CarrierSet& carriers,
                                                const std::set<NodeId>& from_nodes, const std::set<NodeId>& to_nodes) {
  if (from_nodes.empty() || to_nodes.empty()) {
    throw Error(ErrorCode::InvalidArgument, "shortest_gap needs non-empty node sets");
  }
  const RailNetwork& net = graph.network();
  for (NodeId n : from_nodes) {
    if (to_nodes.count(n)) {
      const GeoPoint at = net.node(n).location;
      return GapCandidate{{}, {}, {}, 0.0, {}, n, n, at, at};
    }
  }

  constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();
  const std::size_t n = graph.size();
  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  std::vector<std::uint32_t> parent_link(n, kNone);
  std::vector<std::uint32_t> parent_node(n, kNone);
  std::vector<char> settled(n, 0);
  std::vector<char> is_target(n, 0);
  for (NodeId t : to_nodes) is_target[graph.position(t)] = 1;

  auto sequence = [&](std::uint32_t v) {
    std::vector<std::uint32_t> seq;
    while (parent_link[v] != kNone) {
      seq.push_back(parent_link[v]);
      v = parent_node[v];
    }
    std::reverse(seq.begin(), seq.end());
    return seq;
  };

  using Entry = std::pair<double, std::uint32_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
  for (NodeId s : from_nodes) {
    const auto p = graph.position(s);
    dist[p] = 0.0;
    heap.push({0.0, p});
  }

  std::optional<std::uint32_t> best_target;
  double best_dist = std::numeric_limits<double>::infinity();
  while (!heap.empty()) {
    const auto [d, u] = heap.top();
    heap.pop();
    if (settled[u] || d != dist[u]) continue;
    if (d > best_dist) break;
    settled[u] = 1;
    if (is_target[u]) {
      if (!best_target || sequence(u) < sequence(*best_target)) best_target = u;
      best_dist = d;
      continue;  // paths through a target are never shorter than stopping at it
    }
    for (const auto& e : graph.edges(u)) {
      if (settled[e.to]) continue;
      const RailLink& link = net.links()[e.link];
      if (!link.accessible_to(carriers)) continue;
      const double nd = d + link.length_m();
      if (nd < dist[e.to]) {
        dist[e.to] = nd;
        parent_link[e.to] = e.link;
        parent_node[e.to] = u;
        heap.push({nd, e.to});
      } else if (nd == dist[e.to]) {
        auto candidate = sequence(u);
        candidate.push_back(e.link);
        if (candidate < sequence(e.to)) {
          parent_link[e.to] = e.link;
          parent_node[e.to] = u;
        }
      }
    }
  }
  if (!best_target) return std::nullopt;

  std::vector<std::uint32_t> seq = sequence(*best_target);
  std::uint32_t start = *best_target;
  while (parent_link[start] != kNone) start = parent_node[start];

  GapCandidate gap{{}, {}, {}, 0.0, {}, net.nodes()[start].id, net.nodes()[*best_target].id,
                   net.nodes()[start].location, net.nodes()[*best_target].location};
  for (std::uint32_t li : seq) {
    const RailLink& link = net.links()[li];
    gap.path.push_back(link.id());
    gap.length_m += link.length_m();
    for (const auto& c : link.operators()) {
      if (carriers.count(c)) gap.carriers_used.insert(c);
    }
  }
  return gap;
}

inline std::optional<GapCandidate> shortest_gap(const RailNetwork& net, const CarrierSet& carriers,
                                                const std::set<NodeId>& from_nodes, const std::set<NodeId>& to_nodes) {
  return shortest_gap(RoutingGraph(net), carriers, from_nodes, to_nodes);
}

/// PADD number (1..5) of the region containing p; overlapping regions
/// resolve to the lowest number.
inline int padd_of(const GeoPoint& p, std::span<const RegionPolygon> padds) {
  int best = 0;
  for (const auto& r : padds) {
    auto id = detail::padd_label(r.region_id);
    if (!id) continue;
    if ((best == 0 || *id < best) && r.contains(p)) best = *id;
  }
  if (best == 0) {
    throw Error(ErrorCode::PointOutsideAllPadds, "point (" + fixed6(p.lat()) + ", " + fixed6(p.lon()) +
                                                     ") lies outside every PADD region");
  }
  return best;
}

/// Flow-direction test between two PADDs. Gaps are undirected, so movement
/// in either orientation qualifies. Within one PADD the diagonal volume
/// decides; a zero diagonal still passes when the PADD originates flow to
/// any region.
inline bool direction_consistent(int from_padd, int to_padd, const OdMatrix& od) {
  if (from_padd != to_padd) {
    return od.volume(from_padd, to_padd) > 0.0 || od.volume(to_padd, from_padd) > 0.0;
  }
  if (od.volume(from_padd, from_padd) > 0.0) return true;
  for (int d = 1; d <= OdMatrix::kRegions; ++d) {
    if (od.volume(from_padd, d) > 0.0) return true;
  }
  return false;
}

inline bool direction_consistent(const GapCandidate& gap, const OdMatrix& od, std::span<const RegionPolygon> padds) {
  return direction_consistent(padd_of(gap.from_location, padds), padd_of(gap.to_location, padds), od);
}

enum class LinkStatus { Confirmed, Inferred };

inline std::string_view to_string(LinkStatus s) { return s == LinkStatus::Confirmed ? "confirmed" : "inferred"; }

struct InferredNetwork {
  std::map<LinkId, LinkStatus> links;
  std::map<LinkId, std::string> provenance;

  std::vector<LinkId> with_status(LinkStatus s) const {
    std::vector<LinkId> out;
    for (const auto& [id, st] : links) {
      if (st == s) out.push_back(id);
    }
    return out;
  }

  friend bool operator==(const InferredNetwork&, const InferredNetwork&) = default;
};

struct AcceptedGap {
  std::size_t round = 0;
  std::string gap_id;
  GapCandidate gap;
  CarrierSet carrier_set;  // the constraint the path was searched under
  int from_padd = 0;
  int to_padd = 0;
};

struct InferenceResult {
  InferredNetwork network;
  std::vector<AcceptedGap> accepted;
  /// Groups left at the end, by label; more than one means something stayed isolated.
  std::vector<std::string> remaining_groups;
  std::vector<std::string> unsnapped_terminals;
  std::size_t initial_groups = 0;
  /// Per round: lengths of every feasible, direction-consistent candidate.
  std::vector<std::vector<double>> feasible_lengths;
};

struct InferOptions {
  std::optional<std::size_t> max_rounds;  // defaults to the initial group count
  std::size_t workers = 1;
  const ConfirmedSet* origins = nullptr;  // provenance for confirmed links, if known
};

namespace detail {

inline std::string join(const std::set<std::string>& items, char sep) {
  std::string out;
  for (const auto& s : items) {
    if (!out.empty()) out.push_back(sep);
    out += s;
  }
  return out;
}

struct PairEval {
  std::optional<GapCandidate> gap;
  CarrierSet carriers;
  bool consistent = false;
  int from_padd = 0;
  int to_padd = 0;
};

}  // namespace detail

/// Greedy merging of broken routes. Every round evaluates the carrier-
/// constrained shortest gap between each pair of groups, drops gaps that run
/// against inter-PADD flow, and accepts the single shortest survivor. The two
/// groups it joins become one group that also holds the gap's links.
inline InferenceResult infer_routes(const RailNetwork& net, std::span<const RouteComponent> comps,
                                    std::span<const TerminalSite> terminals, const OdMatrix& od,
                                    std::span<const RegionPolygon> padds, const InferOptions& opts = {}) {
  InferenceResult result;

  for (const auto& c : comps) {
    for (const auto& l : c.links) {
      result.network.links[l] = LinkStatus::Confirmed;
      std::string prov = "confirmed";
      if (opts.origins) {
        auto it = opts.origins->origin.find(l);
        if (it != opts.origins->origin.end()) prov = detail::join(it->second, ';');
      }
      result.network.provenance[l] = prov;
    }
  }

  std::vector<RouteGroup> groups;
  for (const auto& c : comps) groups.push_back(to_group(c));
  std::map<LinkId, std::size_t> terminal_group_by_link;
  for (const auto& t : terminals) {
    if (!t.snapped_link) {
      result.unsnapped_terminals.push_back(t.terminal_id);
      continue;
    }
    if (result.network.links.count(*t.snapped_link)) continue;  // already inside a component
    auto it = terminal_group_by_link.find(*t.snapped_link);
    if (it != terminal_group_by_link.end()) continue;  // same link as an earlier terminal
    terminal_group_by_link[*t.snapped_link] = groups.size();
    groups.push_back(to_group(net, t));
  }
  if (groups.empty()) throw Error(ErrorCode::InvalidArgument, "inference needs at least one component or terminal");
  result.initial_groups = groups.size();
  const std::size_t max_rounds = opts.max_rounds.value_or(groups.size());

  const RoutingGraph graph(net);
  // Stable handles so cached pair results survive merges of unrelated groups.
  std::vector<std::size_t> handle(groups.size());
  for (std::size_t i = 0; i < handle.size(); ++i) handle[i] = i;
  std::size_t next_handle = groups.size();
  std::map<std::pair<std::size_t, std::size_t>, detail::PairEval> cache;

  auto ordered = [&](std::size_t i, std::size_t j) {
    return groups[i].label < groups[j].label ? std::make_pair(i, j) : std::make_pair(j, i);
  };

  std::size_t gap_counter = 0;
  for (std::size_t round = 1; round <= max_rounds && groups.size() > 1; ++round) {
    std::vector<std::pair<std::size_t, std::size_t>> todo;
    for (std::size_t i = 0; i < groups.size(); ++i) {
      for (std::size_t j = i + 1; j < groups.size(); ++j) {
        auto [a, b] = ordered(i, j);
        if (!cache.count({handle[a], handle[b]})) todo.emplace_back(a, b);
      }
    }
    std::vector<detail::PairEval> evals(todo.size());
    parallel_for(todo.size(), opts.workers, [&](std::size_t k) {
      const auto [a, b] = todo[k];
      auto& ev = evals[k];
      ev.carriers = carrier_set(net, groups[a], groups[b]);
      ev.gap = shortest_gap(graph, ev.carriers, groups[a].nodes, groups[b].nodes);
      if (!ev.gap) return;
      ev.gap->from = groups[a].label;
      ev.gap->to = groups[b].label;
      try {
        ev.from_padd = padd_of(ev.gap->from_location, padds);
        ev.to_padd = padd_of(ev.gap->to_location, padds);
        ev.consistent = direction_consistent(ev.from_padd, ev.to_padd, od);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::PointOutsideAllPadds) throw;
        ev.consistent = false;
      }
    });
    for (std::size_t k = 0; k < todo.size(); ++k) {
      cache[{handle[todo[k].first], handle[todo[k].second]}] = std::move(evals[k]);
    }

    const detail::PairEval* best = nullptr;
    std::pair<std::size_t, std::size_t> best_pair{0, 0};
    std::vector<double> feasible;
    for (std::size_t i = 0; i < groups.size(); ++i) {
      for (std::size_t j = i + 1; j < groups.size(); ++j) {
        auto [a, b] = ordered(i, j);
        const auto& ev = cache.at({handle[a], handle[b]});
        if (!ev.gap || !ev.consistent) continue;
        feasible.push_back(ev.gap->length_m);
        bool better = !best;
        if (best) {
          const auto& g = *ev.gap;
          const auto& h = *best->gap;
          better = std::tie(g.length_m, g.from, g.to, g.path) < std::tie(h.length_m, h.from, h.to, h.path);
        }
        if (better) {
          best = &ev;
          best_pair = {a, b};
        }
      }
    }
    std::sort(feasible.begin(), feasible.end());
    result.feasible_lengths.push_back(std::move(feasible));
    if (!best) break;

    char id_buf[32];
    std::snprintf(id_buf, sizeof id_buf, "gap-%04zu", ++gap_counter);
    AcceptedGap acc{round, id_buf, *best->gap, best->carriers, best->from_padd, best->to_padd};
    for (const auto& l : acc.gap.path) {
      auto [it, fresh] = result.network.links.emplace(l, LinkStatus::Inferred);
      if (fresh) {
        result.network.provenance[l] = acc.gap_id;
      } else if (it->second == LinkStatus::Inferred) {
        result.network.provenance[l] += ";" + acc.gap_id;
      }
    }

    auto [a, b] = best_pair;
    RouteGroup merged;
    merged.label = std::min(groups[a].label, groups[b].label);
    merged.links = groups[a].links;
    merged.links.insert(groups[b].links.begin(), groups[b].links.end());
    merged.nodes = groups[a].nodes;
    merged.nodes.insert(groups[b].nodes.begin(), groups[b].nodes.end());
    for (const auto& l : acc.gap.path) {
      merged.links.insert(l);
      const auto [na, nb] = net.endpoints(l);
      merged.nodes.insert(na);
      merged.nodes.insert(nb);
    }
    result.accepted.push_back(std::move(acc));

    const std::size_t hi = std::max(a, b);
    const std::size_t lo = std::min(a, b);
    groups.erase(groups.begin() + static_cast<std::ptrdiff_t>(hi));
    handle.erase(handle.begin() + static_cast<std::ptrdiff_t>(hi));
    groups[lo] = std::move(merged);
    handle[lo] = next_handle++;
  }

  for (const auto& g : groups) result.remaining_groups.push_back(g.label);
  std::sort(result.remaining_groups.begin(), result.remaining_groups.end());
  return result;
}

}  // namespace railtrace

#endif  // RAILTRACE_INFER_HPP
