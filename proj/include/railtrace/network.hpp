#ifndef RAILTRACE_NETWORK_HPP
#define RAILTRACE_NETWORK_HPP

#include <algorithm>
#include <cctype>
#include <cmath>
#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "railtrace/error.hpp"
#include "railtrace/geo.hpp"

namespace railtrace {

using LinkId = std::string;

/// Railroad reporting mark, stored trimmed and upper-cased.
class CarrierId {
 public:
  explicit CarrierId(std::string_view code) {
    auto begin = code.find_first_not_of(" \t\r\n");
    auto end = code.find_last_not_of(" \t\r\n");
    if (begin == std::string_view::npos) {
      throw Error(ErrorCode::InvalidArgument, "carrier code is empty");
    }
    code_.assign(code.substr(begin, end - begin + 1));
    for (char& c : code_) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  }

  const std::string& str() const noexcept { return code_; }

  friend auto operator<=>(const CarrierId&, const CarrierId&) = default;

 private:
  std::string code_;
};

using CarrierSet = std::set<CarrierId>;

inline bool intersects(const CarrierSet& a, const CarrierSet& b) {
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (*ia < *ib) {
      ++ia;
    } else if (*ib < *ia) {
      ++ib;
    } else {
      return true;
    }
  }
  return false;
}

enum class NetClass { MainLine, Siding, Branch, Yard, Other };

inline std::string_view to_string(NetClass c) {
  switch (c) {
    case NetClass::MainLine: return "MainLine";
    case NetClass::Siding: return "Siding";
    case NetClass::Branch: return "Branch";
    case NetClass::Yard: return "Yard";
    case NetClass::Other: return "Other";
  }
  return "Other";
}

/// Maps raw NET attribute codes onto NetClass. Codes missing from the table
/// resolve to Other, never MainLine.
class NetClassTable {
 public:
  NetClassTable() : table_{{"M", NetClass::MainLine}, {"S", NetClass::Siding},
                           {"B", NetClass::Branch}, {"Y", NetClass::Yard}} {}
  explicit NetClassTable(std::map<std::string, NetClass> table) : table_(std::move(table)) {}

  NetClass classify(std::string_view code) const {
    auto it = table_.find(std::string(code));
    return it == table_.end() ? NetClass::Other : it->second;
  }

  /// Canonical code for a class, used when writing networks back out.
  std::string code_for(NetClass c) const {
    for (const auto& [code, cls] : table_) {
      if (cls == c) return code;
    }
    return "O";
  }

 private:
  std::map<std::string, NetClass> table_;
};

class RailLink {
 public:
  RailLink(LinkId id, Polyline geometry, CarrierSet owners, CarrierSet trackage_rights,
           NetClass net_class)
      : id_(std::move(id)),
        geometry_(std::move(geometry)),
        owners_(std::move(owners)),
        trackage_rights_(std::move(trackage_rights)),
        net_class_(net_class) {
    if (id_.empty()) throw Error(ErrorCode::InvalidArgument, "link id is empty");
    if (owners_.empty()) {
      throw Error(ErrorCode::InvalidArgument, "link " + id_ + " has no owners");
    }
    if (!(geometry_.length_m() > 0.0)) {
      throw Error(ErrorCode::InvalidGeometry, "link " + id_ + " has zero length");
    }
  }

  const LinkId& id() const noexcept { return id_; }
  const Polyline& geometry() const noexcept { return geometry_; }
  const CarrierSet& owners() const noexcept { return owners_; }
  const CarrierSet& trackage_rights() const noexcept { return trackage_rights_; }
  NetClass net_class() const noexcept { return net_class_; }
  double length_m() const noexcept { return geometry_.length_m(); }

  bool accessible_to(const CarrierSet& carriers) const {
    return intersects(owners_, carriers) || intersects(trackage_rights_, carriers);
  }

  /// owners ∪ trackage_rights
  CarrierSet operators() const {
    CarrierSet all = owners_;
    all.insert(trackage_rights_.begin(), trackage_rights_.end());
    return all;
  }

 private:
  LinkId id_;
  Polyline geometry_;
  CarrierSet owners_;
  CarrierSet trackage_rights_;
  NetClass net_class_;
};

struct NodeId {
  std::uint32_t value = 0;
  friend auto operator<=>(const NodeId&, const NodeId&) = default;
};

struct Node {
  NodeId id;
  GeoPoint location;
  std::vector<LinkId> incident_links;  // sorted by id
  std::size_t degree() const noexcept { return incident_links.size(); }
};

struct LinkHit {
  LinkId link_id;
  double distance_m;
  friend bool operator==(const LinkHit&, const LinkHit&) = default;
};

/// Uniform lon/lat grid over segment bounding boxes. Lookups are exact: the
/// search widens ring by ring until no unvisited cell can hold anything
/// closer than the current best.
class LinkIndex {
 public:
  static constexpr double kDefaultCellDeg = 0.05;

  LinkIndex() = default;

  explicit LinkIndex(std::span<const RailLink> links, double cell_deg = kDefaultCellDeg)
      : cell_deg_(cell_deg) {
    for (std::uint32_t i = 0; i < links.size(); ++i) {
      auto v = links[i].geometry().vertices();
      for (std::size_t s = 0; s + 1 < v.size(); ++s) {
        const int x0 = cell(std::min(v[s].lon(), v[s + 1].lon()));
        const int x1 = cell(std::max(v[s].lon(), v[s + 1].lon()));
        const int y0 = cell(std::min(v[s].lat(), v[s + 1].lat()));
        const int y1 = cell(std::max(v[s].lat(), v[s + 1].lat()));
        for (int x = x0; x <= x1; ++x) {
          for (int y = y0; y <= y1; ++y) {
            auto& bucket = cells_[key(x, y)];
            if (bucket.empty() || bucket.back() != i) bucket.push_back(i);
            min_x_ = std::min(min_x_, x);
            max_x_ = std::max(max_x_, x);
            min_y_ = std::min(min_y_, y);
            max_y_ = std::max(max_y_, y);
          }
        }
      }
    }
  }

  /// Index into `links` of the nearest link within max_dist_m, ties to the
  /// lower index. `links` must be the span the index was built from.
  std::optional<std::pair<std::uint32_t, double>> nearest(std::span<const RailLink> links,
                                                          const GeoPoint& p,
                                                          double max_dist_m) const {
    if (cells_.empty()) return std::nullopt;
    const int cx = cell(p.lon());
    const int cy = cell(p.lat());
    std::unordered_set<std::uint32_t> seen;
    std::optional<std::pair<std::uint32_t, double>> best;

    for (int k = 0;; ++k) {
      auto visit = [&](int x, int y) {
        auto it = cells_.find(key(x, y));
        if (it == cells_.end()) return;
        for (std::uint32_t idx : it->second) {
          if (!seen.insert(idx).second) continue;
          const double d = point_to_polyline_m(p, links[idx].geometry()).distance_m;
          if (d > max_dist_m) continue;
          if (!best || d < best->second || (d == best->second && idx < best->first)) {
            best = std::make_pair(idx, d);
          }
        }
      };
      if (k == 0) {
        visit(cx, cy);
      } else {
        for (int x = cx - k; x <= cx + k; ++x) {
          visit(x, cy - k);
          visit(x, cy + k);
        }
        for (int y = cy - k + 1; y <= cy + k - 1; ++y) {
          visit(cx - k, y);
          visit(cx + k, y);
        }
      }
      const double bound = outside_bound_m(p, cx, cy, k);
      if (bound > max_dist_m) break;
      if (best && bound > best->second) break;
      if (cx - k <= min_x_ && cx + k >= max_x_ && cy - k <= min_y_ && cy + k >= max_y_) break;
    }
    return best;
  }

 private:
  int cell(double deg) const { return static_cast<int>(std::floor(deg / cell_deg_)); }

  static std::int64_t key(int x, int y) {
    return (static_cast<std::int64_t>(x) << 32) ^ static_cast<std::uint32_t>(y);
  }

  // Lower bound on the distance from p to any point outside the
  // (2k+1)x(2k+1) block of cells centred on (cx, cy).
  double outside_bound_m(const GeoPoint& p, int cx, int cy, int k) const {
    const double south = (cy - k) * cell_deg_;
    const double north = (cy + k + 1) * cell_deg_;
    const double west = (cx - k) * cell_deg_;
    const double east = (cx + k + 1) * cell_deg_;
    auto meridian = [&](double dlon_deg) {
      const double dl = deg_to_rad(std::min(dlon_deg, 90.0));
      const double s = std::min(1.0, std::sin(dl) * std::cos(deg_to_rad(p.lat())));
      return kEarthRadiusM * std::asin(s);
    };
    const double d_south = south <= -90.0 ? INFINITY : kEarthRadiusM * deg_to_rad(p.lat() - south);
    const double d_north = north >= 90.0 ? INFINITY : kEarthRadiusM * deg_to_rad(north - p.lat());
    return std::min({d_south, d_north, meridian(p.lon() - west), meridian(east - p.lon())});
  }

  double cell_deg_ = kDefaultCellDeg;
  std::unordered_map<std::int64_t, std::vector<std::uint32_t>> cells_;
  int min_x_ = std::numeric_limits<int>::max();
  int max_x_ = std::numeric_limits<int>::min();
  int min_y_ = std::numeric_limits<int>::max();
  int max_y_ = std::numeric_limits<int>::min();
};

namespace detail {

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (b < a) std::swap(a, b);
    parent_[b] = a;
  }

 private:
  std::vector<std::size_t> parent_;
};

}  // namespace detail

class RailNetwork;
RailNetwork build_topology(std::vector<RailLink> links, double weld_tolerance_m);

/// Immutable link-level rail graph. Links are kept sorted by id; node ids are
/// assigned at build time and survive filtering into subnetworks.
class RailNetwork {
 public:
  std::span<const RailLink> links() const noexcept { return links_; }
  std::span<const Node> nodes() const noexcept { return nodes_; }
  double weld_tolerance_m() const noexcept { return weld_tolerance_m_; }

  std::optional<std::size_t> find_link(std::string_view id) const {
    auto it = std::lower_bound(links_.begin(), links_.end(), id,
                               [](const RailLink& l, std::string_view v) { return l.id() < v; });
    if (it == links_.end() || it->id() != id) return std::nullopt;
    return static_cast<std::size_t>(it - links_.begin());
  }

  bool contains(std::string_view id) const { return find_link(id).has_value(); }

  const RailLink& link(std::string_view id) const { return links_[link_index(id)]; }

  std::size_t link_index(std::string_view id) const {
    auto idx = find_link(id);
    if (!idx) throw Error(ErrorCode::UnknownLink, "link " + std::string(id) + " not in network");
    return *idx;
  }

  /// Both endpoint nodes of the link at `index`: (start, end) of its geometry.
  std::pair<NodeId, NodeId> endpoints(std::size_t index) const { return endpoints_.at(index); }
  std::pair<NodeId, NodeId> endpoints(std::string_view id) const { return endpoints_[link_index(id)]; }

  const Node* find_node(NodeId id) const {
    auto it = std::lower_bound(nodes_.begin(), nodes_.end(), id,
                               [](const Node& n, NodeId v) { return n.id < v; });
    if (it == nodes_.end() || it->id != id) return nullptr;
    return &*it;
  }

  const Node& node(NodeId id) const {
    const Node* n = find_node(id);
    if (!n) throw Error(ErrorCode::InvalidArgument, "node " + std::to_string(id.value) + " not in network");
    return *n;
  }

  std::size_t degree(NodeId id) const { return node(id).degree(); }

  std::optional<LinkHit> nearest_link(const GeoPoint& p, double max_dist_m) const {
    if (!(max_dist_m > 0.0)) throw Error(ErrorCode::InvalidArgument, "max_dist_m must be > 0");
    auto hit = index_.nearest(links_, p, max_dist_m);
    if (!hit) return std::nullopt;
    return LinkHit{links_[hit->first].id(), hit->second};
  }

  /// Subnetwork of links satisfying `keep`. Node ids and locations are
  /// inherited; nodes left with no links are dropped.
  template <typename Pred>
  RailNetwork filtered(Pred keep) const {
    RailNetwork out;
    out.weld_tolerance_m_ = weld_tolerance_m_;
    std::set<LinkId> kept;
    for (std::size_t i = 0; i < links_.size(); ++i) {
      if (keep(links_[i])) {
        out.links_.push_back(links_[i]);
        out.endpoints_.push_back(endpoints_[i]);
        kept.insert(links_[i].id());
      }
    }
    if (out.links_.empty()) throw Error(ErrorCode::EmptyNetwork, "no links left after filtering");
    for (const Node& n : nodes_) {
      Node copy{n.id, n.location, {}};
      for (const auto& l : n.incident_links) {
        if (kept.count(l)) copy.incident_links.push_back(l);
      }
      if (!copy.incident_links.empty()) out.nodes_.push_back(std::move(copy));
    }
    out.index_ = LinkIndex(out.links_);
    return out;
  }

 private:
  friend RailNetwork build_topology(std::vector<RailLink> links, double weld_tolerance_m);

  RailNetwork() = default;

  std::vector<RailLink> links_;
  std::vector<std::pair<NodeId, NodeId>> endpoints_;
  std::vector<Node> nodes_;
  LinkIndex index_;
  double weld_tolerance_m_ = 0.0;
};

inline constexpr double kDefaultWeldToleranceM = 10.0;

/// Welds link endpoints lying within weld_tolerance_m of each other
/// (transitively) into shared nodes located at the endpoint centroid.
inline RailNetwork build_topology(std::vector<RailLink> links, double weld_tolerance_m) {
  if (!(weld_tolerance_m > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "weld tolerance must be > 0");
  }
  if (links.empty()) throw Error(ErrorCode::EmptyNetwork, "no links supplied");
  std::sort(links.begin(), links.end(),
            [](const RailLink& a, const RailLink& b) { return a.id() < b.id(); });
  for (std::size_t i = 1; i < links.size(); ++i) {
    if (links[i].id() == links[i - 1].id()) {
      throw Error(ErrorCode::DuplicateLinkId, "link id " + links[i].id() + " appears twice");
    }
  }

  const std::size_t n_end = links.size() * 2;
  auto endpoint = [&](std::size_t e) -> const GeoPoint& {
    const auto& g = links[e / 2].geometry();
    return e % 2 == 0 ? g.front() : g.back();
  };

  const double cell = weld_tolerance_m / (kEarthRadiusM * deg_to_rad(1.0));
  auto cell_of = [&](double deg) { return static_cast<std::int64_t>(std::floor(deg / cell)); };
  std::unordered_map<std::int64_t, std::vector<std::size_t>> grid;
  auto key = [](std::int64_t x, std::int64_t y) { return (x << 32) ^ (y & 0xffffffff); };
  for (std::size_t e = 0; e < n_end; ++e) {
    grid[key(cell_of(endpoint(e).lon()), cell_of(endpoint(e).lat()))].push_back(e);
  }

  detail::UnionFind uf(n_end);
  for (std::size_t e = 0; e < n_end; ++e) {
    const GeoPoint& p = endpoint(e);
    const double lat_edge = std::min(89.0, std::abs(p.lat()) + cell);
    const auto lon_span = static_cast<std::int64_t>(std::ceil(1.0 / std::cos(deg_to_rad(lat_edge)))) + 1;
    const auto gx = cell_of(p.lon());
    const auto gy = cell_of(p.lat());
    for (auto x = gx - lon_span; x <= gx + lon_span; ++x) {
      for (auto y = gy - 1; y <= gy + 1; ++y) {
        auto it = grid.find(key(x, y));
        if (it == grid.end()) continue;
        for (std::size_t other : it->second) {
          if (other > e && haversine_m(p, endpoint(other)) <= weld_tolerance_m) uf.unite(e, other);
        }
      }
    }
  }

  for (std::size_t i = 0; i < links.size(); ++i) {
    if (uf.find(2 * i) == uf.find(2 * i + 1)) {
      throw Error(ErrorCode::SelfLoopLink, "link " + links[i].id() + " starts and ends at one node");
    }
  }

  struct Cluster {
    double lat_sum = 0.0;
    double lon_sum = 0.0;
    std::size_t count = 0;
    std::size_t first_link = std::numeric_limits<std::size_t>::max();
    std::vector<std::size_t> members;
  };
  std::map<std::size_t, Cluster> clusters;
  for (std::size_t e = 0; e < n_end; ++e) {
    auto& c = clusters[uf.find(e)];
    c.lat_sum += endpoint(e).lat();
    c.lon_sum += endpoint(e).lon();
    ++c.count;
    c.first_link = std::min(c.first_link, e / 2);
    c.members.push_back(e);
  }

  struct Pending {
    GeoPoint location;
    std::size_t first_link;
    const Cluster* cluster;
  };
  std::vector<Pending> pending;
  pending.reserve(clusters.size());
  for (const auto& [root, c] : clusters) {
    const auto n = static_cast<double>(c.count);
    pending.push_back({GeoPoint(c.lat_sum / n, c.lon_sum / n), c.first_link, &c});
  }
  std::sort(pending.begin(), pending.end(), [&](const Pending& a, const Pending& b) {
    if (a.location.lat() != b.location.lat()) return a.location.lat() < b.location.lat();
    if (a.location.lon() != b.location.lon()) return a.location.lon() < b.location.lon();
    return links[a.first_link].id() < links[b.first_link].id();
  });

  RailNetwork net;
  net.weld_tolerance_m_ = weld_tolerance_m;
  net.endpoints_.resize(links.size());
  for (std::uint32_t id = 0; id < pending.size(); ++id) {
    Node node{NodeId{id}, pending[id].location, {}};
    std::vector<std::size_t> link_idx;
    for (std::size_t e : pending[id].cluster->members) {
      link_idx.push_back(e / 2);
      if (e % 2 == 0) {
        net.endpoints_[e / 2].first = NodeId{id};
      } else {
        net.endpoints_[e / 2].second = NodeId{id};
      }
    }
    std::sort(link_idx.begin(), link_idx.end());
    for (std::size_t li : link_idx) node.incident_links.push_back(links[li].id());
    net.nodes_.push_back(std::move(node));
  }
  net.links_ = std::move(links);
  net.index_ = LinkIndex(net.links_);
  return net;
}

/// Links incident to `node` other than `link`.
inline std::vector<LinkId> neighbors_via(const RailNetwork& net, std::string_view link, NodeId node) {
  auto [a, b] = net.endpoints(link);
  if (node != a && node != b) {
    throw Error(ErrorCode::NodeNotOnLink,
                "node " + std::to_string(node.value) + " is not an endpoint of link " + std::string(link));
  }
  std::vector<LinkId> out;
  for (const auto& l : net.node(node).incident_links) {
    if (l != link) out.push_back(l);
  }
  return out;
}

inline RailNetwork mainline_subnet(const RailNetwork& net) {
  return net.filtered([](const RailLink& l) { return l.net_class() == NetClass::MainLine; });
}

inline RailNetwork accessible_subnet(const RailNetwork& net, const CarrierSet& carriers) {
  if (carriers.empty()) throw Error(ErrorCode::InvalidArgument, "carrier set is empty");
  return net.filtered([&](const RailLink& l) { return l.accessible_to(carriers); });
}

inline std::optional<LinkHit> nearest_link(const RailNetwork& net, const GeoPoint& p, double max_dist_m) {
  return net.nearest_link(p, max_dist_m);
}

}  // namespace railtrace

#endif  // RAILTRACE_NETWORK_HPP
