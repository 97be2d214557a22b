#ifndef RAILTRACE_INGEST_HPP
#define RAILTRACE_INGEST_HPP

#include <algorithm>
#include <array>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "railtrace/csv.hpp"
#include "railtrace/error.hpp"
#include "railtrace/geo.hpp"
#include "railtrace/io.hpp"

namespace railtrace {

using Timestamp = std::chrono::sys_seconds;
using Date = std::chrono::year_month_day;

enum class ObservationKind { Photo, Terminal };
enum class TerminalRole { Loading, Unloading, Both };

struct Observation {
  std::string id;
  GeoPoint location;
  std::optional<Timestamp> timestamp;
  ObservationKind kind = ObservationKind::Photo;
  std::optional<TerminalRole> terminal_role;

  friend bool operator==(const Observation&, const Observation&) = default;
};

enum class IncidentPhase { InTransit, Storage, Other };

struct IncidentRecord {
  Date date;
  std::string city;
  std::string state;
  GeoPoint location;
  IncidentPhase phase = IncidentPhase::Other;

  friend bool operator==(const IncidentRecord&, const IncidentRecord&) = default;
};

/// Annual volumes in thousand barrels between the five PADDs, 1-based.
class OdMatrix {
 public:
  static constexpr int kRegions = 5;

  OdMatrix() = default;
  explicit OdMatrix(const std::array<std::array<double, kRegions>, kRegions>& v) : v_(v) {
    for (const auto& row : v_) {
      for (double x : row) {
        if (!(x >= 0.0)) throw Error(ErrorCode::NegativeVolume, "volume must be >= 0");
      }
    }
  }

  double volume(int origin, int dest) const { return v_.at(origin - 1).at(dest - 1); }

  friend bool operator==(const OdMatrix&, const OdMatrix&) = default;

 private:
  std::array<std::array<double, kRegions>, kRegions> v_{};
};

struct RegionPolygon {
  std::string region_id;
  std::vector<Polygon> polygons;  // one for Polygon features, several for MultiPolygon

  bool contains(const GeoPoint& p) const {
    return std::any_of(polygons.begin(), polygons.end(),
                       [&](const Polygon& poly) { return point_in_polygon(p, poly); });
  }

  friend bool operator==(const RegionPolygon&, const RegionPolygon&) = default;
};

struct IngestOptions {
  Date earliest_photo{std::chrono::year{2008}, std::chrono::January, std::chrono::day{1}};
  Date harvest_date{std::chrono::year{2022}, std::chrono::June, std::chrono::day{1}};
};

namespace detail {

[[noreturn]] inline void malformed(std::string_view source, std::size_t line, const std::string& why) {
  throw Error(ErrorCode::MalformedRow, std::string(source) + ":" + std::to_string(line) + ": " + why);
}

inline std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

inline std::string upper(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

inline std::optional<double> to_double(std::string_view s) {
  std::string cleaned;
  for (char c : csv::trim(s)) {
    if (c != ',') cleaned.push_back(c);  // thousands separators inside quoted numbers
  }
  if (cleaned.empty()) return std::nullopt;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(cleaned.data(), cleaned.data() + cleaned.size(), v);
  if (ec != std::errc() || ptr != cleaned.data() + cleaned.size()) return std::nullopt;
  return v;
}

inline std::optional<int> to_int(std::string_view s) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

inline GeoPoint point_at(std::string_view source, std::size_t line, std::string_view lat_s,
                         std::string_view lon_s) {
  auto lat = to_double(lat_s);
  auto lon = to_double(lon_s);
  if (!lat || !lon) malformed(source, line, "non-numeric coordinate");
  try {
    return GeoPoint(*lat, *lon);
  } catch (const Error& e) {
    throw Error(ErrorCode::CoordinateOutOfRange,
                std::string(source) + ":" + std::to_string(line) + ": " + e.what());
  }
}

inline void check_header(std::string_view source, const csv::Row& row,
                         std::initializer_list<std::string_view> required) {
  std::size_t i = 0;
  for (auto name : required) {
    if (i >= row.fields.size() || lower(csv::trim(row.fields[i])) != name) {
      malformed(source, row.line, "expected header column '" + std::string(name) + "'");
    }
    ++i;
  }
}

}  // namespace detail

/// Accepts YYYY-MM-DD and M/D/YYYY.
inline std::optional<Date> parse_date(std::string_view s) {
  using namespace std::chrono;
  int y = 0;
  int m = 0;
  int d = 0;
  char tail = 0;
  const std::string str(s);
  if (std::sscanf(str.c_str(), "%4d-%2d-%2d%c", &y, &m, &d, &tail) == 3 && str.size() == 10) {
  } else if (std::sscanf(str.c_str(), "%d/%d/%4d%c", &m, &d, &y, &tail) == 3) {
  } else {
    return std::nullopt;
  }
  Date date{year{y}, month{static_cast<unsigned>(m)}, day{static_cast<unsigned>(d)}};
  if (!date.ok()) return std::nullopt;
  return date;
}

/// Accepts YYYY-MM-DDTHH:MM:SS with an optional trailing Z (UTC).
inline std::optional<Timestamp> parse_timestamp(std::string_view s) {
  using namespace std::chrono;
  if (!s.empty() && (s.back() == 'Z' || s.back() == 'z')) s.remove_suffix(1);
  if (s.size() != 19 || (s[10] != 'T' && s[10] != ' ')) return std::nullopt;
  auto date = parse_date(s.substr(0, 10));
  if (!date || s[13] != ':' || s[16] != ':') return std::nullopt;
  auto hh = detail::to_int(s.substr(11, 2));
  auto mm = detail::to_int(s.substr(14, 2));
  auto ss = detail::to_int(s.substr(17, 2));
  if (!hh || !mm || !ss || *hh > 23 || *mm > 59 || *ss > 59 || *hh < 0 || *mm < 0 || *ss < 0) {
    return std::nullopt;
  }
  return sys_days(*date) + hours{*hh} + minutes{*mm} + seconds{*ss};
}

inline std::string format_date(const Date& d) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()),
                static_cast<unsigned>(d.month()), static_cast<unsigned>(d.day()));
  return buf;
}

inline std::string format_timestamp(const Timestamp& t) {
  using namespace std::chrono;
  const auto day_point = floor<days>(t);
  const hh_mm_ss<seconds> tod{t - day_point};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%sT%02d:%02d:%02dZ", format_date(Date{day_point}).c_str(),
                static_cast<int>(tod.hours().count()), static_cast<int>(tod.minutes().count()),
                static_cast<int>(tod.seconds().count()));
  return buf;
}

// ---------------------------------------------------------------------------
// Observations

inline std::vector<Observation> parse_observations_text(std::string_view text, std::string_view source,
                                                        const IngestOptions& opts = {}) {
  using namespace std::chrono;
  auto rows = csv::parse(text, source);
  if (rows.empty()) detail::malformed(source, 1, "missing header row");
  detail::check_header(source, rows[0], {"id", "lat", "lon", "timestamp", "kind"});

  const auto earliest = sys_days(opts.earliest_photo);
  const auto latest = sys_days(opts.harvest_date) + days{1};
  std::vector<Observation> out;
  out.reserve(rows.size() - 1);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    const auto& f = row.fields;
    if (f.size() != 5 && f.size() != 6) {
      detail::malformed(source, row.line, "expected 5 or 6 fields, got " + std::to_string(f.size()));
    }
    const std::string id = csv::trim(f[0]);
    if (id.empty()) detail::malformed(source, row.line, "empty id");
    GeoPoint loc = detail::point_at(source, row.line, f[1], f[2]);

    const std::string kind_s = detail::lower(csv::trim(f[4]));
    ObservationKind kind;
    if (kind_s == "photo") {
      kind = ObservationKind::Photo;
    } else if (kind_s == "terminal") {
      kind = ObservationKind::Terminal;
    } else {
      detail::malformed(source, row.line, "unknown kind '" + kind_s + "'");
    }

    std::optional<Timestamp> ts;
    const std::string ts_s = csv::trim(f[3]);
    if (!ts_s.empty()) {
      ts = parse_timestamp(ts_s);
      if (!ts) detail::malformed(source, row.line, "bad timestamp '" + ts_s + "'");
    }
    if (kind == ObservationKind::Photo) {
      if (!ts) {
        throw Error(ErrorCode::MissingTimestamp,
                    std::string(source) + ":" + std::to_string(row.line) + ": photo " + id + " has no timestamp");
      }
      if (*ts < earliest || *ts >= latest) {
        detail::malformed(source, row.line, "photo timestamp " + ts_s + " outside harvest window");
      }
    }

    std::optional<TerminalRole> role;
    const std::string role_s = f.size() == 6 ? detail::lower(csv::trim(f[5])) : std::string{};
    if (!role_s.empty()) {
      if (kind != ObservationKind::Terminal) detail::malformed(source, row.line, "terminal_role on a photo row");
      if (role_s == "loading") {
        role = TerminalRole::Loading;
      } else if (role_s == "unloading") {
        role = TerminalRole::Unloading;
      } else if (role_s == "both") {
        role = TerminalRole::Both;
      } else {
        detail::malformed(source, row.line, "unknown terminal_role '" + role_s + "'");
      }
    }
    out.push_back(Observation{id, loc, ts, kind, role});
  }
  return out;
}

inline std::vector<Observation> parse_observations(const std::filesystem::path& path,
                                                   const IngestOptions& opts = {}) {
  return parse_observations_text(read_file(path), path.string(), opts);
}

inline std::string serialize_observations(std::span<const Observation> obs) {
  std::string out = "id,lat,lon,timestamp,kind,terminal_role\n";
  for (const auto& o : obs) {
    out += csv::quote(o.id) + "," + exact_double(o.location.lat()) + "," + exact_double(o.location.lon()) + ",";
    if (o.timestamp) out += format_timestamp(*o.timestamp);
    out += o.kind == ObservationKind::Photo ? ",photo," : ",terminal,";
    if (o.terminal_role) {
      switch (*o.terminal_role) {
        case TerminalRole::Loading: out += "loading"; break;
        case TerminalRole::Unloading: out += "unloading"; break;
        case TerminalRole::Both: out += "both"; break;
      }
    }
    out += "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Incidents

inline bool is_contiguous_us_state(std::string_view code) {
  static const std::set<std::string_view> states = {
      "AL", "AZ", "AR", "CA", "CO", "CT", "DE", "DC", "FL", "GA", "ID", "IL", "IN", "IA", "KS", "KY", "LA",
      "ME", "MD", "MA", "MI", "MN", "MS", "MO", "MT", "NE", "NV", "NH", "NJ", "NM", "NY", "NC", "ND", "OH",
      "OK", "OR", "PA", "RI", "SC", "SD", "TN", "TX", "UT", "VT", "VA", "WA", "WV", "WI", "WY"};
  return states.count(code) > 0;
}

inline IncidentPhase parse_phase(std::string_view s) {
  const std::string u = detail::upper(csv::trim(s));
  if (u == "IN TRANSIT") return IncidentPhase::InTransit;
  if (u.find("STORAGE") != std::string::npos) return IncidentPhase::Storage;
  return IncidentPhase::Other;
}

inline std::string_view phase_label(IncidentPhase p) {
  switch (p) {
    case IncidentPhase::InTransit: return "IN TRANSIT";
    case IncidentPhase::Storage: return "STORAGE";
    case IncidentPhase::Other: return "OTHER";
  }
  return "OTHER";
}

/// Rows sharing (date, city, state) are all kept; each is a separate incident.
inline std::vector<IncidentRecord> parse_incidents_text(std::string_view text, std::string_view source) {
  auto rows = csv::parse(text, source);
  if (rows.empty()) detail::malformed(source, 1, "missing header row");
  detail::check_header(source, rows[0], {"date", "city", "state", "lat", "lon", "phase"});
  std::vector<IncidentRecord> out;
  out.reserve(rows.size() - 1);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    const auto& f = row.fields;
    if (f.size() != 6) detail::malformed(source, row.line, "expected 6 fields, got " + std::to_string(f.size()));
    auto date = parse_date(csv::trim(f[0]));
    if (!date) detail::malformed(source, row.line, "bad date '" + f[0] + "'");
    const std::string city = csv::trim(f[1]);
    if (city.empty()) detail::malformed(source, row.line, "empty city");
    const std::string state = detail::upper(csv::trim(f[2]));
    if (!is_contiguous_us_state(state)) detail::malformed(source, row.line, "state '" + state + "' not in contiguous US");
    GeoPoint loc = detail::point_at(source, row.line, f[3], f[4]);
    out.push_back(IncidentRecord{*date, city, state, loc, parse_phase(f[5])});
  }
  return out;
}

inline std::vector<IncidentRecord> parse_incidents(const std::filesystem::path& path) {
  return parse_incidents_text(read_file(path), path.string());
}

inline std::string serialize_incidents(std::span<const IncidentRecord> incidents) {
  std::string out = "date,city,state,lat,lon,phase\n";
  for (const auto& i : incidents) {
    out += format_date(i.date) + "," + csv::quote(i.city) + "," + i.state + "," + exact_double(i.location.lat()) +
           "," + exact_double(i.location.lon()) + "," + std::string(phase_label(i.phase)) + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// PADD origin-destination matrix

namespace detail {

inline std::optional<int> padd_label(std::string_view s) {
  std::string u = upper(csv::trim(s));
  if (u.rfind("PADD", 0) == 0) u = csv::trim(u.substr(4));
  auto v = to_int(u);
  if (!v || *v < 1 || *v > OdMatrix::kRegions) return std::nullopt;
  return v;
}

}  // namespace detail

/// Header row `padd,1,2,3,4,5`; each data row starts with its origin PADD.
/// Labels may be written `PADD2` or `2`, in any order.
inline OdMatrix parse_od_matrix_text(std::string_view text, std::string_view source) {
  constexpr int n = OdMatrix::kRegions;
  auto rows = csv::parse(text, source);
  auto wrong = [&](const std::string& why) {
    throw Error(ErrorCode::WrongShape, std::string(source) + ": " + why);
  };
  if (rows.size() != n + 1) wrong("expected header plus 5 rows, got " + std::to_string(rows.size()) + " rows");
  for (const auto& row : rows) {
    if (row.fields.size() != n + 1) {
      wrong("line " + std::to_string(row.line) + " has " + std::to_string(row.fields.size()) + " fields, expected 6");
    }
  }
  std::array<int, n> col_padd{};
  std::set<int> seen_cols;
  for (int c = 0; c < n; ++c) {
    auto p = detail::padd_label(rows[0].fields[c + 1]);
    if (!p || !seen_cols.insert(*p).second) wrong("bad or repeated column label '" + rows[0].fields[c + 1] + "'");
    col_padd[c] = *p;
  }
  std::array<std::array<double, n>, n> v{};
  std::set<int> seen_rows;
  for (int r = 1; r <= n; ++r) {
    const auto& row = rows[r];
    auto origin = detail::padd_label(row.fields[0]);
    if (!origin || !seen_rows.insert(*origin).second) wrong("bad or repeated row label '" + row.fields[0] + "'");
    for (int c = 0; c < n; ++c) {
      auto x = detail::to_double(row.fields[c + 1]);
      if (!x) detail::malformed(source, row.line, "non-numeric volume '" + row.fields[c + 1] + "'");
      if (*x < 0.0) {
        throw Error(ErrorCode::NegativeVolume,
                    std::string(source) + ":" + std::to_string(row.line) + ": negative volume " + row.fields[c + 1]);
      }
      v[*origin - 1][col_padd[c] - 1] = *x;
    }
  }
  return OdMatrix(v);
}

inline OdMatrix parse_od_matrix(const std::filesystem::path& path) {
  return parse_od_matrix_text(read_file(path), path.string());
}

inline std::string serialize_od_matrix(const OdMatrix& od) {
  std::string out = "padd,1,2,3,4,5\n";
  for (int o = 1; o <= OdMatrix::kRegions; ++o) {
    out += std::to_string(o);
    for (int d = 1; d <= OdMatrix::kRegions; ++d) out += "," + exact_double(od.volume(o, d));
    out += "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Region polygons (GeoJSON)

namespace detail {

inline Ring ring_from_json(const nlohmann::json& coords, std::string_view where) {
  if (!coords.is_array()) throw Error(ErrorCode::InvalidRing, std::string(where) + ": ring is not an array");
  std::vector<GeoPoint> pts;
  pts.reserve(coords.size());
  for (const auto& c : coords) {
    if (!c.is_array() || c.size() < 2 || !c[0].is_number() || !c[1].is_number()) {
      throw Error(ErrorCode::InvalidRing, std::string(where) + ": bad coordinate");
    }
    pts.emplace_back(c[1].get<double>(), c[0].get<double>());
  }
  try {
    Ring ring(std::move(pts));
    if (!ring_is_simple(ring)) throw Error(ErrorCode::InvalidRing, "ring self-intersects");
    return ring;
  } catch (const Error& e) {
    throw Error(ErrorCode::InvalidRing, std::string(where) + ": " + e.what());
  }
}

inline Polygon polygon_from_json(const nlohmann::json& rings, std::string_view where) {
  if (!rings.is_array() || rings.empty()) throw Error(ErrorCode::InvalidRing, std::string(where) + ": empty polygon");
  Ring exterior = ring_from_json(rings[0], where);
  std::vector<Ring> holes;
  for (std::size_t i = 1; i < rings.size(); ++i) holes.push_back(ring_from_json(rings[i], where));
  return Polygon(std::move(exterior), std::move(holes));
}

inline void ring_to_json(JsonWriter& w, const Ring& ring) {
  w.begin_array();
  for (const auto& p : ring.vertices()) {
    w.begin_array().raw(exact_double(p.lon())).raw(exact_double(p.lat())).end_array();
  }
  w.end_array();
}

}  // namespace detail

inline std::vector<RegionPolygon> parse_regions_text(std::string_view text, std::string_view source) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedRow, std::string(source) + ": " + e.what());
  }
  if (!doc.contains("features") || !doc["features"].is_array()) {
    throw Error(ErrorCode::MalformedRow, std::string(source) + ": not a FeatureCollection");
  }
  std::vector<RegionPolygon> out;
  std::set<std::string> ids;
  std::size_t index = 0;
  for (const auto& feat : doc["features"]) {
    const std::string where = std::string(source) + " feature " + std::to_string(index++);
    const auto& props = feat.value("properties", nlohmann::json::object());
    if (!props.contains("region_id")) throw Error(ErrorCode::MalformedRow, where + ": missing region_id");
    std::string id = props["region_id"].is_string() ? props["region_id"].get<std::string>()
                                                    : props["region_id"].dump();
    if (!ids.insert(id).second) throw Error(ErrorCode::DuplicateRegionId, where + ": region_id " + id + " repeated");
    const auto& geom = feat.value("geometry", nlohmann::json::object());
    const std::string type = geom.value("type", "");
    RegionPolygon region{id, {}};
    if (type == "Polygon") {
      region.polygons.push_back(detail::polygon_from_json(geom["coordinates"], where));
    } else if (type == "MultiPolygon") {
      for (const auto& poly : geom["coordinates"]) region.polygons.push_back(detail::polygon_from_json(poly, where));
      if (region.polygons.empty()) throw Error(ErrorCode::InvalidRing, where + ": empty MultiPolygon");
    } else {
      throw Error(ErrorCode::MalformedRow, where + ": geometry type '" + type + "' is not Polygon/MultiPolygon");
    }
    out.push_back(std::move(region));
  }
  return out;
}

inline std::vector<RegionPolygon> parse_regions(const std::filesystem::path& path) {
  return parse_regions_text(read_file(path), path.string());
}

inline std::string serialize_regions(std::span<const RegionPolygon> regions) {
  JsonWriter w;
  w.begin_object().field("type", "FeatureCollection").key("features").begin_array();
  for (const auto& r : regions) {
    w.begin_object().field("type", "Feature");
    w.key("properties").begin_object().field("region_id", r.region_id).end_object();
    w.key("geometry").begin_object().field("type", "MultiPolygon").key("coordinates").begin_array();
    for (const auto& poly : r.polygons) {
      w.begin_array();
      detail::ring_to_json(w, poly.exterior());
      for (const auto& hole : poly.holes()) detail::ring_to_json(w, hole);
      w.end_array();
    }
    w.end_array().end_object().end_object();
  }
  w.end_array().end_object();
  return w.str() + "\n";
}

}  // namespace railtrace

#endif  // RAILTRACE_INGEST_HPP
