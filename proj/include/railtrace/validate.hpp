#ifndef RAILTRACE_VALIDATE_HPP
#define RAILTRACE_VALIDATE_HPP

#include <algorithm>
#include <cmath>
#include <map>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "railtrace/error.hpp"
#include "railtrace/infer.hpp"
#include "railtrace/ingest.hpp"
#include "railtrace/network.hpp"
#include "railtrace/parallel.hpp"

namespace railtrace {

/// Stand-in for "same city": no fixed radius exists for that criterion.
inline constexpr double kDefaultAlignmentRadiusM = 25'000.0;
inline constexpr double kMetroSampleSpacingM = 500.0;

struct MissedCity {
  std::string city;
  std::string state;
  std::size_t count = 0;
  friend bool operator==(const MissedCity&, const MissedCity&) = default;
};

struct AlignmentReport {
  std::size_t total_incidents = 0;
  std::size_t aligned = 0;
  std::vector<MissedCity> missed;  // sorted by (state, city)
  double fraction_aligned = 0.0;
  double radius_m = 0.0;
  friend bool operator==(const AlignmentReport&, const AlignmentReport&) = default;
};

struct CoverageReport {
  std::size_t metros_traversed = 0;
  std::size_t metros_total = 0;
  std::vector<std::string> traversed_ids;  // sorted
};

/// Geometry of the links carried in an inferred network, in id order.
inline std::vector<RailLink> links_of(const RailNetwork& net, const InferredNetwork& inferred) {
  std::vector<RailLink> out;
  out.reserve(inferred.links.size());
  for (const auto& [id, status] : inferred.links) out.push_back(net.link(id));
  return out;
}

namespace detail {

inline AlignmentReport summarize(std::span<const IncidentRecord> incidents, const std::vector<char>& aligned,
                                 double radius_m) {
  AlignmentReport report;
  report.total_incidents = incidents.size();
  report.radius_m = radius_m;
  std::map<std::pair<std::string, std::string>, std::size_t> missed;
  for (std::size_t i = 0; i < incidents.size(); ++i) {
    if (aligned[i]) {
      ++report.aligned;
    } else {
      ++missed[{incidents[i].state, incidents[i].city}];
    }
  }
  for (const auto& [key, count] : missed) report.missed.push_back({key.second, key.first, count});
  report.fraction_aligned =
      incidents.empty() ? 0.0 : static_cast<double>(report.aligned) / static_cast<double>(incidents.size());
  return report;
}

}  // namespace detail

/// An incident is aligned when any link passes within radius_m of it.
inline AlignmentReport incident_alignment(std::span<const RailLink> links, std::span<const IncidentRecord> incidents,
                                          double radius_m, std::size_t workers = 1) {
  if (!(radius_m > 0.0)) throw Error(ErrorCode::InvalidArgument, "alignment radius must be > 0");
  const LinkIndex index(links);
  std::vector<char> aligned(incidents.size(), 0);
  parallel_for(incidents.size(), workers, [&](std::size_t i) {
    aligned[i] = index.nearest(links, incidents[i].location, radius_m).has_value() ? 1 : 0;
  });
  return detail::summarize(incidents, aligned, radius_m);
}

/// Same metric evaluated once per distinct (city, state, location) and
/// expanded back by count, the way incidents sharing a city are plotted.
inline AlignmentReport incident_alignment_by_city(std::span<const RailLink> links,
                                                  std::span<const IncidentRecord> incidents, double radius_m) {
  if (!(radius_m > 0.0)) throw Error(ErrorCode::InvalidArgument, "alignment radius must be > 0");
  const LinkIndex index(links);
  using Key = std::tuple<std::string, std::string, double, double>;
  std::map<Key, char> group_aligned;
  std::vector<char> aligned(incidents.size(), 0);
  for (std::size_t i = 0; i < incidents.size(); ++i) {
    const auto& inc = incidents[i];
    Key key{inc.state, inc.city, inc.location.lat(), inc.location.lon()};
    auto it = group_aligned.find(key);
    if (it == group_aligned.end()) {
      it = group_aligned.emplace(key, index.nearest(links, inc.location, radius_m) ? 1 : 0).first;
    }
    aligned[i] = it->second;
  }
  return detail::summarize(incidents, aligned, radius_m);
}

/// Points along a link at no more than spacing_m apart, endpoints included.
inline std::vector<GeoPoint> sample_link(const RailLink& link, double spacing_m = kMetroSampleSpacingM) {
  auto v = link.geometry().vertices();
  std::vector<GeoPoint> out;
  out.push_back(v.front());
  for (std::size_t s = 0; s + 1 < v.size(); ++s) {
    const double len = haversine_m(v[s], v[s + 1]);
    const auto steps = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(len / spacing_m)));
    for (std::size_t k = 1; k <= steps; ++k) {
      out.push_back(lerp(v[s], v[s + 1], static_cast<double>(k) / static_cast<double>(steps)));
    }
  }
  return out;
}

/// A metro is traversed when a sampled point of any link falls inside it.
inline CoverageReport metro_coverage(std::span<const RailLink> links, std::span<const RegionPolygon> metros,
                                     std::size_t workers = 1) {
  if (metros.empty()) throw Error(ErrorCode::InvalidArgument, "metro list is empty");
  std::vector<std::vector<GeoPoint>> samples;
  std::vector<BoundingBox> link_boxes;
  samples.reserve(links.size());
  for (const auto& l : links) {
    samples.push_back(sample_link(l));
    link_boxes.push_back(bounds_of(samples.back()));
  }

  std::vector<char> hit(metros.size(), 0);
  parallel_for(metros.size(), workers, [&](std::size_t m) {
    BoundingBox box;
    for (const auto& poly : metros[m].polygons) {
      for (const auto& p : poly.exterior().vertices()) box.extend(p);
    }
    for (std::size_t l = 0; l < links.size() && !hit[m]; ++l) {
      const auto& lb = link_boxes[l];
      if (lb.max_lat < box.min_lat || lb.min_lat > box.max_lat || lb.max_lon < box.min_lon || lb.min_lon > box.max_lon) {
        continue;
      }
      for (const auto& p : samples[l]) {
        if (box.contains(p) && metros[m].contains(p)) {
          hit[m] = 1;
          break;
        }
      }
    }
  });

  CoverageReport report;
  report.metros_total = metros.size();
  for (std::size_t m = 0; m < metros.size(); ++m) {
    if (hit[m]) report.traversed_ids.push_back(metros[m].region_id);
  }
  std::sort(report.traversed_ids.begin(), report.traversed_ids.end());
  report.metros_traversed = report.traversed_ids.size();
  return report;
}

}  // namespace railtrace

#endif  // RAILTRACE_VALIDATE_HPP
