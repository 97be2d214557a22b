#include <random>

#include "fixtures.hpp"
#include "gtest/gtest.h"
#include "oracles.hpp"
#include "railtrace/network.hpp"
#include "railtrace/network_io.hpp"

namespace railtrace {
namespace {

using testing::carriers;
using testing::make_link;

const Node& node_at(const RailNetwork& net, double lat, double lon) {
  for (const auto& n : net.nodes()) {
    if (haversine_m(n.location, GeoPoint(lat, lon)) < 1.0) return n;
  }
  throw std::runtime_error("no node there");
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorCode::InvalidArgument;
}

TEST(BuildTopology, SharedEndpoint) {
  auto net = build_topology({make_link("a", {{40, -100}, {40, -99.99}}), make_link("b", {{40, -99.99}, {40, -99.98}})},
                            kDefaultWeldToleranceM);
  EXPECT_EQ(net.nodes().size(), 3u);
  EXPECT_EQ(node_at(net, 40, -99.99).degree(), 2u);
}

TEST(BuildTopology, JunctionChainDegrees) {
  auto net = build_topology(testing::junction_chain_links(), kDefaultWeldToleranceM);
  EXPECT_EQ(net.links().size(), 6u);
  EXPECT_EQ(net.nodes().size(), 7u);
  EXPECT_EQ(node_at(net, 40.0, -99.99).degree(), 2u);  // between 3 and 4
  EXPECT_EQ(node_at(net, 40.0, -100.0).degree(), 3u);  // far end of 3
}

TEST(BuildTopology, WeldingBoundary) {
  const double tol = 10.0;
  const double step = 2 * tol / 111194.92664455873;  // 20 m of latitude
  auto apart = build_topology(
      {make_link("a", {{40, -100}, {40.01, -100}}), make_link("b", {{40.01 + step, -100}, {40.02, -100}})}, tol);
  EXPECT_EQ(apart.nodes().size(), 4u);

  const double near = 0.4 * step;  // 8 m
  auto welded = build_topology(
      {make_link("a", {{40, -100}, {40.01, -100}}), make_link("b", {{40.01 + near, -100}, {40.02, -100}})}, tol);
  ASSERT_EQ(welded.nodes().size(), 3u);
  const Node& shared = node_at(welded, 40.01 + near / 2, -100);
  EXPECT_EQ(shared.degree(), 2u);
  EXPECT_NEAR(shared.location.lat(), 40.01 + near / 2, 1e-12);
}

TEST(BuildTopology, Errors) {
  EXPECT_EQ(code_of([] { build_topology({}, 10.0); }), ErrorCode::EmptyNetwork);
  EXPECT_EQ(code_of([] {
              build_topology({make_link("a", {{40, -100}, {40, -99.9}}), make_link("a", {{41, -100}, {41, -99.9}})}, 10.0);
            }),
            ErrorCode::DuplicateLinkId);
  EXPECT_EQ(code_of([] {
              build_topology({make_link("loop", {{40, -100}, {40.01, -100}, {40.01, -99.99}, {40.00003, -100}})}, 10.0);
            }),
            ErrorCode::SelfLoopLink);
}

TEST(BuildTopology, NodeIdsFollowLatLonOrder) {
  auto net = build_topology(testing::junction_chain_links(), kDefaultWeldToleranceM);
  auto nodes = net.nodes();
  for (std::size_t i = 1; i < nodes.size(); ++i) {
    EXPECT_EQ(nodes[i].id.value, i);
    const auto& a = nodes[i - 1].location;
    const auto& b = nodes[i].location;
    EXPECT_TRUE(a.lat() < b.lat() || (a.lat() == b.lat() && a.lon() <= b.lon()));
  }
}

TEST(BuildTopology, DegreeSumAndSymmetry) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    auto net = build_topology(testing::random_graph(rng, {.subdivide = trial % 2 == 1}), kDefaultWeldToleranceM);
    std::size_t sum = 0;
    for (const auto& n : net.nodes()) {
      EXPECT_GE(n.degree(), 1u);
      sum += n.degree();
      for (const auto& l : n.incident_links) {
        auto [a, b] = net.endpoints(l);
        EXPECT_TRUE(a == n.id || b == n.id);
      }
    }
    EXPECT_EQ(sum, 2 * net.links().size());
    for (std::size_t i = 0; i < net.links().size(); ++i) {
      auto [a, b] = net.endpoints(i);
      EXPECT_NE(a, b);
      EXPECT_LE(haversine_m(net.node(a).location, net.links()[i].geometry().front()), net.weld_tolerance_m());
      EXPECT_LE(haversine_m(net.node(b).location, net.links()[i].geometry().back()), net.weld_tolerance_m());
    }
  }
}

TEST(BuildTopology, StableUnderSerialization) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    auto first = build_topology(testing::random_graph(rng, {.subdivide = true}), kDefaultWeldToleranceM);
    auto second = build_topology(parse_network_text(serialize_network(first.links()), "roundtrip"), kDefaultWeldToleranceM);
    ASSERT_EQ(first.links().size(), second.links().size());
    ASSERT_EQ(first.nodes().size(), second.nodes().size());
    for (std::size_t i = 0; i < first.links().size(); ++i) {
      const auto& id = first.links()[i].id();
      auto [a1, b1] = first.endpoints(id);
      auto [a2, b2] = second.endpoints(id);
      std::set<LinkId> n1, n2;
      for (NodeId n : {a1, b1}) {
        for (const auto& l : neighbors_via(first, id, n)) n1.insert(l);
      }
      for (NodeId n : {a2, b2}) {
        for (const auto& l : neighbors_via(second, id, n)) n2.insert(l);
      }
      EXPECT_EQ(n1, n2) << id;
      EXPECT_EQ(first.degree(a1) + first.degree(b1), second.degree(a2) + second.degree(b2));
    }
  }
}

TEST(NeighborsVia, JunctionChain) {
  auto net = build_topology(testing::junction_chain_links(), kDefaultWeldToleranceM);
  const NodeId left = node_at(net, 40.0, -99.99).id;
  EXPECT_EQ(neighbors_via(net, "4", left), std::vector<LinkId>{"3"});
  const NodeId dead_end = node_at(net, 40.0, -99.96).id;
  EXPECT_TRUE(neighbors_via(net, "6", dead_end).empty());
  const NodeId junction = node_at(net, 40.0, -100.0).id;
  EXPECT_EQ(neighbors_via(net, "3", junction), (std::vector<LinkId>{"1", "2"}));
  EXPECT_EQ(code_of([&] { neighbors_via(net, "6", junction); }), ErrorCode::NodeNotOnLink);
}

TEST(NeighborsVia, DegreeFourJunction) {
  auto net = build_topology({make_link("n", {{40, -100}, {40.01, -100}}), make_link("s", {{40, -100}, {39.99, -100}}),
                             make_link("e", {{40, -100}, {40, -99.99}}), make_link("w", {{40, -100}, {40, -100.01}})},
                            kDefaultWeldToleranceM);
  const NodeId centre = node_at(net, 40, -100).id;
  EXPECT_EQ(net.degree(centre), 4u);
  EXPECT_EQ(neighbors_via(net, "n", centre).size(), 3u);
}

std::vector<RailLink> mixed_classes() {
  const NetClass classes[] = {NetClass::MainLine, NetClass::Siding, NetClass::MainLine, NetClass::Yard,
                              NetClass::Branch,   NetClass::MainLine, NetClass::Other, NetClass::MainLine,
                              NetClass::Siding,   NetClass::MainLine};
  std::vector<RailLink> links;
  for (int i = 0; i < 10; ++i) {
    links.push_back(make_link("m" + std::to_string(i), {{40, -100 + 0.01 * i}, {40, -100 + 0.01 * (i + 1)}},
                              carriers({"UP"}), {}, classes[i]));
  }
  return links;
}

TEST(MainlineSubnet, FilterMatchesEnumeration) {
  auto links = mixed_classes();
  std::set<LinkId> expected;
  for (const auto& l : links) {
    if (l.net_class() == NetClass::MainLine) expected.insert(l.id());
  }
  auto net = build_topology(links, kDefaultWeldToleranceM);
  auto main = mainline_subnet(net);
  std::set<LinkId> got;
  for (const auto& l : main.links()) got.insert(l.id());
  EXPECT_EQ(got, expected);
  std::size_t sum = 0;
  for (const auto& n : main.nodes()) {
    EXPECT_GE(n.degree(), 1u);
    sum += n.degree();
  }
  EXPECT_EQ(sum, 2 * main.links().size());
}

TEST(MainlineSubnet, IdentityAndEmpty) {
  auto net = build_topology(testing::junction_chain_links(), kDefaultWeldToleranceM);
  auto main = mainline_subnet(net);
  EXPECT_EQ(main.links().size(), net.links().size());
  EXPECT_EQ(main.nodes().size(), net.nodes().size());

  auto sidings = build_topology({make_link("s", {{40, -100}, {40, -99.9}}, carriers({"UP"}), {}, NetClass::Siding)}, 10.0);
  EXPECT_EQ(code_of([&] { mainline_subnet(sidings); }), ErrorCode::EmptyNetwork);
}

TEST(NetClassTable, UnknownCodesNeverMainLine) {
  NetClassTable table;
  EXPECT_EQ(table.classify("M"), NetClass::MainLine);
  EXPECT_EQ(table.classify("Y"), NetClass::Yard);
  EXPECT_EQ(table.classify("m"), NetClass::Other);
  EXPECT_EQ(table.classify("Q"), NetClass::Other);
  EXPECT_EQ(table.classify(""), NetClass::Other);
}

TEST(AccessibleSubnet, FilterSemantics) {
  std::vector<RailLink> links{
      make_link("x1", {{40, -100}, {40, -99.99}}, carriers({"BNSF"})),
      make_link("x2", {{40, -99.99}, {40, -99.98}}, carriers({"UP"}), carriers({"BNSF"})),
      make_link("x3", {{40, -99.98}, {40, -99.97}}, carriers({"CSXT"})),
  };
  auto net = build_topology(links, kDefaultWeldToleranceM);

  auto all = accessible_subnet(net, carriers({"BNSF", "UP", "CSXT"}));
  EXPECT_EQ(all.links().size(), 3u);

  auto bnsf = accessible_subnet(net, carriers({"BNSF"}));
  ASSERT_EQ(bnsf.links().size(), 2u);
  EXPECT_TRUE(bnsf.contains("x2"));  // trackage rights only
  EXPECT_FALSE(bnsf.contains("x3"));

  EXPECT_EQ(code_of([&] { accessible_subnet(net, carriers({"KCS"})); }), ErrorCode::EmptyNetwork);
}

TEST(AccessibleSubnet, MonotoneInCarriers) {
  std::mt19937_64 rng(8);
  const char* names[] = {"A", "B", "C"};
  for (int trial = 0; trial < 50; ++trial) {
    auto net = build_topology(testing::random_graph(rng), kDefaultWeldToleranceM);
    for (int mask1 = 1; mask1 < 8; ++mask1) {
      for (int mask2 = 1; mask2 < 8; ++mask2) {
        CarrierSet c1, c12;
        for (int b = 0; b < 3; ++b) {
          if (mask1 & (1 << b)) c1.insert(CarrierId(names[b]));
          if ((mask1 | mask2) & (1 << b)) c12.insert(CarrierId(names[b]));
        }
        std::set<LinkId> small, big;
        for (const auto& l : net.links()) {
          if (l.accessible_to(c1)) small.insert(l.id());
          if (l.accessible_to(c12)) big.insert(l.id());
        }
        if (!small.empty()) {
          auto sub = accessible_subnet(net, c1);
          std::set<LinkId> got;
          for (const auto& l : sub.links()) got.insert(l.id());
          EXPECT_EQ(got, small);
        }
        EXPECT_TRUE(std::includes(big.begin(), big.end(), small.begin(), small.end()));
      }
    }
  }
}

TEST(NearestLink, Basics) {
  auto net = build_topology(testing::junction_chain_links(), kDefaultWeldToleranceM);
  auto hit = net.nearest_link(GeoPoint(40.0, -99.985), 10.0);
  ASSERT_TRUE(hit);
  EXPECT_EQ(hit->link_id, "4");
  EXPECT_EQ(hit->distance_m, 0.0);
  EXPECT_FALSE(net.nearest_link(GeoPoint(40.5, -99.985), 1000.0));
  EXPECT_EQ(code_of([&] { net.nearest_link(GeoPoint(40, -100), 0.0); }), ErrorCode::InvalidArgument);
}

TEST(NearestLink, IndexMatchesLinearScan) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> lat(39.5, 41.0);
  std::uniform_real_distribution<double> lon(-101.0, -99.0);
  std::uniform_real_distribution<double> step(-0.08, 0.08);
  std::vector<RailLink> links;
  for (int i = 0; i < 50; ++i) {
    double a = lat(rng), b = lon(rng);
    std::vector<std::pair<double, double>> pts{{a, b}};
    for (int k = 0; k < 4; ++k) pts.push_back({pts.back().first + step(rng), pts.back().second + step(rng)});
    links.push_back(make_link(testing::link_name(i), pts));
  }
  auto net = build_topology(links, kDefaultWeldToleranceM);
  std::uniform_real_distribution<double> qlat(39.0, 41.5);
  std::uniform_real_distribution<double> qlon(-101.5, -98.5);
  const double radii[] = {100.0, 2'000.0, 25'000.0, 400'000.0};
  for (int i = 0; i < 500; ++i) {
    const GeoPoint p(qlat(rng), qlon(rng));
    const double r = radii[i % 4];
    EXPECT_EQ(net.nearest_link(p, r), oracle::nearest_by_scan(net.links(), p, r)) << "query " << i;
  }
}

}  // namespace
}  // namespace railtrace
