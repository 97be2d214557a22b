// Test fixtures: hand-built and randomly generated rail networks.
#ifndef RAILTRACE_TESTS_FIXTURES_HPP
#define RAILTRACE_TESTS_FIXTURES_HPP

#include <cstdio>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "railtrace/ingest.hpp"
#include "railtrace/network.hpp"

namespace railtrace::testing {

inline CarrierSet carriers(std::initializer_list<const char*> codes) {
  CarrierSet out;
  for (const char* c : codes) out.insert(CarrierId(c));
  return out;
}

inline RailLink make_link(const std::string& id, std::vector<std::pair<double, double>> latlon,
                          CarrierSet owners = carriers({"BNSF"}), CarrierSet rights = {},
                          NetClass cls = NetClass::MainLine) {
  std::vector<GeoPoint> pts;
  for (auto [lat, lon] : latlon) pts.emplace_back(lat, lon);
  return RailLink(id, Polyline(std::move(pts)), std::move(owners), std::move(rights), cls);
}

/// Six links: 1 and 2 meet link 3 at a junction; 3-4-5-6 run in a chain of
/// degree-2 nodes; link 6 ends at a dead end.
inline std::vector<RailLink> junction_chain_links() {
  return {
      make_link("1", {{40.01, -100.01}, {40.0, -100.0}}),
      make_link("2", {{39.99, -100.01}, {40.0, -100.0}}),
      make_link("3", {{40.0, -100.0}, {40.0, -99.99}}),
      make_link("4", {{40.0, -99.99}, {40.0, -99.98}}),
      make_link("5", {{40.0, -99.98}, {40.0, -99.97}}),
      make_link("6", {{40.0, -99.97}, {40.0, -99.96}}),
  };
}

/// The junction chain plus two links meeting link 6's far end, so that end is a junction too.
inline std::vector<RailLink> junction_chain_far_junction() {
  auto links = junction_chain_links();
  links.push_back(make_link("7", {{40.0, -99.96}, {40.01, -99.95}}));
  links.push_back(make_link("8", {{40.0, -99.96}, {39.99, -99.95}}));
  return links;
}

struct RandomGraphSpec {
  std::size_t max_nodes = 12;
  std::size_t max_links = 20;
  std::size_t min_nodes = 3;
  bool subdivide = false;  // turn links into chains joined by degree-2 nodes
};

inline std::string link_name(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "L%03zu", i);
  return buf;
}

/// Random multigraph with straight or single-bend links, random owners and
/// trackage rights drawn from {A, B, C}. Nodes are at least ~500 m apart so
/// welding never merges distinct nodes.
inline std::vector<RailLink> random_graph(std::mt19937_64& rng, const RandomGraphSpec& spec = {}) {
  std::uniform_int_distribution<std::size_t> nn(spec.min_nodes, spec.max_nodes);
  const std::size_t n = nn(rng);
  std::uniform_real_distribution<double> lat(40.0, 40.5);
  std::uniform_real_distribution<double> lon(-100.0, -99.5);
  std::vector<std::pair<double, double>> pos;
  while (pos.size() < n) {
    std::pair<double, double> p{lat(rng), lon(rng)};
    bool ok = true;
    for (const auto& q : pos) {
      if (haversine_m(GeoPoint(p.first, p.second), GeoPoint(q.first, q.second)) < 500.0) ok = false;
    }
    if (ok) pos.push_back(p);
  }
  std::uniform_int_distribution<std::size_t> mm(1, spec.max_links);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::uniform_int_distribution<int> coin(0, 1);
  std::uniform_int_distribution<int> carrier(0, 2);
  std::uniform_real_distribution<double> bend(-0.02, 0.02);
  const char* names[] = {"A", "B", "C"};

  const std::size_t m = mm(rng);
  std::vector<RailLink> links;
  std::size_t next_id = 0;
  for (std::size_t i = 0; i < m; ++i) {
    std::size_t a = pick(rng);
    std::size_t b = pick(rng);
    while (b == a) b = pick(rng);
    CarrierSet owners{CarrierId(names[carrier(rng)])};
    CarrierSet rights;
    if (coin(rng)) rights.insert(CarrierId(names[carrier(rng)]));

    std::vector<std::pair<double, double>> pts{pos[a]};
    if (coin(rng)) {
      pts.push_back({(pos[a].first + pos[b].first) / 2 + bend(rng), (pos[a].second + pos[b].second) / 2 + bend(rng)});
    }
    pts.push_back(pos[b]);

    if (!spec.subdivide) {
      links.push_back(make_link(link_name(next_id++), pts, owners, rights));
      continue;
    }
    // Split into 1..3 pieces at interpolated points along the first leg.
    std::uniform_int_distribution<int> pieces_d(1, 3);
    const int pieces = pieces_d(rng);
    std::vector<std::pair<double, double>> cuts{pts.front()};
    for (int k = 1; k < pieces; ++k) {
      const double t = static_cast<double>(k) / pieces;
      cuts.push_back({pts[0].first + t * (pts[1].first - pts[0].first), pts[0].second + t * (pts[1].second - pts[0].second)});
    }
    std::vector<std::pair<double, double>> tail(pts.begin() + 1, pts.end());
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
      links.push_back(make_link(link_name(next_id++), {cuts[k], cuts[k + 1]}, owners, rights));
    }
    std::vector<std::pair<double, double>> last{cuts.back()};
    last.insert(last.end(), tail.begin(), tail.end());
    links.push_back(make_link(link_name(next_id++), last, owners, rights));
  }
  return links;
}

/// Annual PADD-to-PADD crude volumes (thousand barrels), rows are origins.
inline OdMatrix padd_flows() {
  return OdMatrix({{
      {0, 0, 0, 0, 0},
      {48140, 6846, 24891, 34, 37283},
      {11, 1756, 5822, 678, 997},
      {1492, 553, 9841, 45, 1052},
      {0, 0, 0, 0, 1805},
  }});
}

/// Five PADDs as 2-degree longitude strips over lat 35..45, PADD1 westmost
/// at lon -105..-103; lon -100 falls in PADD3.
inline std::vector<RegionPolygon> strip_padds() {
  std::vector<RegionPolygon> out;
  for (int k = 1; k <= 5; ++k) {
    const double w = -105.0 + 2.0 * (k - 1);
    const double e = w + 2.0;
    Ring r({GeoPoint(35, w), GeoPoint(35, e), GeoPoint(45, e), GeoPoint(45, w), GeoPoint(35, w)});
    out.push_back(RegionPolygon{"PADD" + std::to_string(k), {Polygon(r)}});
  }
  return out;
}

}  // namespace railtrace::testing

#endif  // RAILTRACE_TESTS_FIXTURES_HPP
