#ifndef RAILTRACE_NETWORK_IO_HPP
#define RAILTRACE_NETWORK_IO_HPP

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "railtrace/error.hpp"
#include "railtrace/io.hpp"
#include "railtrace/network.hpp"

namespace railtrace {

namespace detail {

inline CarrierSet carriers_from_json(const nlohmann::json& v, const std::string& where) {
  CarrierSet out;
  if (v.is_null()) return out;
  if (!v.is_array()) throw Error(ErrorCode::MalformedRow, where + ": carrier list is not an array");
  for (const auto& c : v) {
    if (!c.is_string()) throw Error(ErrorCode::MalformedRow, where + ": carrier is not a string");
    const auto s = c.get<std::string>();
    if (s.find_first_not_of(" \t") == std::string::npos) continue;
    out.insert(CarrierId(s));
  }
  return out;
}

}  // namespace detail

/// Reads a FeatureCollection of LineString features carrying `id`, `owners`,
/// `trackage_rights` and `net` properties. Coordinates are [lon, lat].
inline std::vector<RailLink> parse_network_text(std::string_view text, std::string_view source,
                                                const NetClassTable& table = {}) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedRow, std::string(source) + ": " + e.what());
  }
  if (!doc.contains("features") || !doc["features"].is_array()) {
    throw Error(ErrorCode::MalformedRow, std::string(source) + ": not a FeatureCollection");
  }
  std::vector<RailLink> links;
  links.reserve(doc["features"].size());
  std::size_t index = 0;
  for (const auto& feat : doc["features"]) {
    const std::string where = std::string(source) + " feature " + std::to_string(index++);
    try {
      const auto& props = feat.at("properties");
      const auto& geom = feat.at("geometry");
      if (geom.value("type", "") != "LineString") {
        throw Error(ErrorCode::MalformedRow, where + ": geometry is not a LineString");
      }
      const auto& idv = props.at("id");
      std::string id = idv.is_string() ? idv.get<std::string>() : idv.dump();
      std::vector<GeoPoint> pts;
      for (const auto& c : geom.at("coordinates")) {
        GeoPoint p(c.at(1).get<double>(), c.at(0).get<double>());
        if (pts.empty() || !(pts.back() == p)) pts.push_back(p);  // collapse repeated vertices
      }
      const std::string net = props.contains("net") && props["net"].is_string() ? props["net"].get<std::string>() : "";
      links.emplace_back(std::move(id), Polyline(std::move(pts)),
                         detail::carriers_from_json(props.value("owners", nlohmann::json()), where),
                         detail::carriers_from_json(props.value("trackage_rights", nlohmann::json()), where),
                         table.classify(net));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::MalformedRow, where + ": " + e.what());
    } catch (const Error& e) {
      if (e.code() == ErrorCode::MalformedRow) throw;
      throw Error(e.code(), where + ": " + e.what());
    }
  }
  return links;
}

inline std::vector<RailLink> parse_network(const std::filesystem::path& path, const NetClassTable& table = {}) {
  return parse_network_text(read_file(path), path.string(), table);
}

inline void write_carriers(JsonWriter& w, const CarrierSet& set) {
  w.begin_array();
  for (const auto& c : set) w.value(c.str());
  w.end_array();
}

/// Network GeoJSON with coordinates at 6 decimals, links in id order.
inline std::string serialize_network(std::span<const RailLink> links, const NetClassTable& table = {}) {
  JsonWriter w;
  w.begin_object().field("type", "FeatureCollection").key("features").begin_array();
  for (const auto& l : links) {
    w.begin_object().field("type", "Feature");
    w.key("properties").begin_object().field("id", l.id());
    w.key("owners");
    write_carriers(w, l.owners());
    w.key("trackage_rights");
    write_carriers(w, l.trackage_rights());
    w.field("net", table.code_for(l.net_class())).end_object();
    w.key("geometry").begin_object().field("type", "LineString").key("coordinates").begin_array();
    for (const auto& p : l.geometry().vertices()) w.begin_array().value(p.lon()).value(p.lat()).end_array();
    w.end_array().end_object().end_object();
  }
  w.end_array().end_object();
  return w.str() + "\n";
}

}  // namespace railtrace

#endif  // RAILTRACE_NETWORK_IO_HPP
