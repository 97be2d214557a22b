#ifndef RAILTRACE_PIPELINE_HPP
#define RAILTRACE_PIPELINE_HPP

#include <cstdlib>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "railtrace/confirm.hpp"
#include "railtrace/csv.hpp"
#include "railtrace/error.hpp"
#include "railtrace/infer.hpp"
#include "railtrace/ingest.hpp"
#include "railtrace/io.hpp"
#include "railtrace/network.hpp"
#include "railtrace/network_io.hpp"
#include "railtrace/validate.hpp"

namespace railtrace {

namespace fs = std::filesystem;

struct PipelineConfig {
  fs::path network;
  fs::path observations;
  fs::path incidents;
  fs::path od_matrix;
  fs::path padd_regions;
  fs::path metro_regions;  // optional
  fs::path output_dir = "railtrace_out";
  double snap_threshold_m = kDefaultSnapThresholdM;
  double terminal_snap_threshold_m = kDefaultTerminalSnapThresholdM;
  double weld_tolerance_m = kDefaultWeldToleranceM;
  double alignment_radius_m = kDefaultAlignmentRadiusM;
  std::size_t max_rounds = 0;  // 0: one round per initial group
  std::size_t workers = 1;

  void validate() const {
    auto positive = [](double v, const char* name) {
      if (!(v > 0.0)) throw Error(ErrorCode::InvalidArgument, std::string(name) + " must be > 0");
    };
    positive(snap_threshold_m, "snap_threshold_m");
    positive(terminal_snap_threshold_m, "terminal_snap_threshold_m");
    positive(weld_tolerance_m, "weld_tolerance_m");
    positive(alignment_radius_m, "alignment_radius_m");
    if (workers == 0) throw Error(ErrorCode::InvalidArgument, "workers must be >= 1");
  }
};

/// Flat `key = value` document: `#` comments, optional double quotes around
/// strings. Relative paths resolve against `base_dir`.
inline PipelineConfig parse_config_text(std::string_view text, const fs::path& base_dir,
                                        std::string_view source = "<config>") {
  PipelineConfig cfg;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto eol = std::min(text.find('\n', pos), text.size());
    std::string line(text.substr(pos, eol - pos));
    pos = eol + 1;
    ++line_no;
    auto where = [&] { return std::string(source) + ":" + std::to_string(line_no); };

    bool in_quotes = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') in_quotes = !in_quotes;
      if (line[i] == '#' && !in_quotes) {
        line.resize(i);
        break;
      }
    }
    line = csv::trim(line);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::InvalidArgument, where() + ": expected key = value");
    const std::string key = csv::trim(line.substr(0, eq));
    std::string value = csv::trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);

    auto path = [&] { return fs::path(value).is_absolute() ? fs::path(value) : base_dir / value; };
    auto number = [&] {
      auto v = detail::to_double(value);
      if (!v) throw Error(ErrorCode::InvalidArgument, where() + ": '" + key + "' needs a number");
      return *v;
    };
    auto count = [&] {
      const double v = number();
      if (v < 0 || v != std::floor(v)) throw Error(ErrorCode::InvalidArgument, where() + ": '" + key + "' needs a whole number");
      return static_cast<std::size_t>(v);
    };

    if (key == "network") cfg.network = path();
    else if (key == "observations") cfg.observations = path();
    else if (key == "incidents") cfg.incidents = path();
    else if (key == "od_matrix") cfg.od_matrix = path();
    else if (key == "padd_regions") cfg.padd_regions = path();
    else if (key == "metro_regions") cfg.metro_regions = path();
    else if (key == "output_dir") cfg.output_dir = path();
    else if (key == "snap_threshold_m") cfg.snap_threshold_m = number();
    else if (key == "terminal_snap_threshold_m") cfg.terminal_snap_threshold_m = number();
    else if (key == "weld_tolerance_m") cfg.weld_tolerance_m = number();
    else if (key == "alignment_radius_m") cfg.alignment_radius_m = number();
    else if (key == "max_rounds") cfg.max_rounds = count();
    else if (key == "workers") cfg.workers = count();
    else throw Error(ErrorCode::InvalidArgument, where() + ": unknown key '" + key + "'");
  }
  return cfg;
}

inline PipelineConfig load_config(const fs::path& path) {
  if (!fs::exists(path)) throw Error(ErrorCode::Io, "config file not found: " + path.string());
  return parse_config_text(read_file(path), path.parent_path(), path.string());
}

/// Artifact names inside the output directory.
namespace artifact {
inline constexpr const char* kMainline = "mainline.geojson";
inline constexpr const char* kSummary = "network_summary.json";
inline constexpr const char* kSnaps = "snaps.csv";
inline constexpr const char* kRejected = "rejected.csv";
inline constexpr const char* kConfirmed = "confirmed.json";
inline constexpr const char* kInferred = "inferred.geojson";
inline constexpr const char* kAudit = "merge_audit.json";
inline constexpr const char* kValidation = "validation.json";
inline constexpr const char* kMissed = "missed_incidents.csv";
inline constexpr const char* kStats = "proximity_stats.json";
}  // namespace artifact

namespace detail {

inline fs::path stage_input(const PipelineConfig& cfg, const char* name, const char* producer) {
  fs::path p = cfg.output_dir / name;
  if (!fs::exists(p)) {
    throw Error(ErrorCode::MissingStageInput,
                p.string() + " not found; run `railtrace " + std::string(producer) + "` first");
  }
  return p;
}

inline fs::path input_file(const fs::path& p, const char* key) {
  if (p.empty()) throw Error(ErrorCode::InvalidArgument, std::string("config key '") + key + "' is not set");
  if (!fs::exists(p)) throw Error(ErrorCode::Io, "input file not found: " + p.string());
  return p;
}

inline RailNetwork load_mainline(const PipelineConfig& cfg) {
  return build_topology(parse_network(stage_input(cfg, artifact::kMainline, "build")), cfg.weld_tolerance_m);
}

inline std::vector<SnapResult> read_snaps(const fs::path& path) {
  auto rows = csv::parse(read_file(path), path.string());
  std::vector<SnapResult> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& f = rows[r].fields;
    if (f.size() != 3) detail::malformed(path.string(), rows[r].line, "expected 3 fields");
    auto d = to_double(f[2]);
    if (!d) detail::malformed(path.string(), rows[r].line, "bad distance");
    out.push_back({f[0], f[1], *d});
  }
  return out;
}

inline void write_string_array(JsonWriter& w, const auto& items) {
  w.begin_array();
  for (const auto& s : items) w.value(std::string_view(s));
  w.end_array();
}

inline void write_carrier_array(JsonWriter& w, const CarrierSet& set) {
  w.begin_array();
  for (const auto& c : set) w.value(c.str());
  w.end_array();
}

}  // namespace detail

struct NetworkSummary {
  std::size_t links = 0;
  std::size_t nodes = 0;
  std::size_t mainline_links = 0;
  std::size_t mainline_nodes = 0;
  double mainline_share = 0.0;  // by link count
  double mainline_length_share = 0.0;
};

inline NetworkSummary cmd_build(const PipelineConfig& cfg, std::ostream& log) {
  cfg.validate();
  const NetClassTable table;
  auto full = build_topology(parse_network(detail::input_file(cfg.network, "network"), table), cfg.weld_tolerance_m);
  auto main = mainline_subnet(full);

  NetworkSummary s;
  s.links = full.links().size();
  s.nodes = full.nodes().size();
  s.mainline_links = main.links().size();
  s.mainline_nodes = main.nodes().size();
  s.mainline_share = static_cast<double>(s.mainline_links) / static_cast<double>(s.links);
  double total_len = 0.0;
  double main_len = 0.0;
  for (const auto& l : full.links()) total_len += l.length_m();
  for (const auto& l : main.links()) main_len += l.length_m();
  s.mainline_length_share = main_len / total_len;

  JsonWriter w;
  w.begin_object()
      .field("links", s.links)
      .field("nodes", s.nodes)
      .field("mainline_links", s.mainline_links)
      .field("mainline_nodes", s.mainline_nodes)
      .field("mainline_share", s.mainline_share)
      .field("mainline_length_share", s.mainline_length_share)
      .field("weld_tolerance_m", cfg.weld_tolerance_m)
      .end_object();
  write_file_atomic(cfg.output_dir / artifact::kSummary, w.str() + "\n");
  write_file_atomic(cfg.output_dir / artifact::kMainline, serialize_network(main.links(), table));
  log << "network: " << s.links << " links, " << s.nodes << " nodes; main line: " << s.mainline_links << " links, "
      << s.mainline_nodes << " nodes\n";
  return s;
}

inline SnapOutcome cmd_snap(const PipelineConfig& cfg, std::ostream& log) {
  cfg.validate();
  auto main = detail::load_mainline(cfg);
  auto obs = parse_observations(detail::input_file(cfg.observations, "observations"));
  SnapOptions opts{cfg.snap_threshold_m, cfg.terminal_snap_threshold_m, cfg.workers};
  auto outcome = snap_all(main, obs, opts);

  std::string snaps = "observation_id,link_id,distance_m\n";
  for (const auto& s : outcome.snapped) {
    snaps += csv::quote(s.observation_id) + "," + csv::quote(s.link_id) + "," + fixed6(s.distance_m) + "\n";
  }
  std::string rejected = "observation_id\n";
  for (const auto& id : outcome.rejected) rejected += csv::quote(id) + "\n";
  write_file_atomic(cfg.output_dir / artifact::kSnaps, snaps);
  write_file_atomic(cfg.output_dir / artifact::kRejected, rejected);
  log << "snap: " << obs.size() << " observations, " << outcome.snapped.size() << " snapped, "
      << outcome.rejected.size() << " rejected\n";
  return outcome;
}

inline std::vector<RouteComponent> cmd_confirm(const PipelineConfig& cfg, std::ostream& log) {
  cfg.validate();
  auto main = detail::load_mainline(cfg);
  auto snaps = detail::read_snaps(detail::stage_input(cfg, artifact::kSnaps, "snap"));
  const ConfirmedSet seeded = confirmed_from_snaps(snaps);
  const ConfirmedSet expanded = expand(main, seeded);
  auto comps = components(main, expanded);

  JsonWriter w;
  w.begin_object().key("links").begin_array();
  for (const auto& l : expanded.links) {
    w.begin_object().field("id", l).key("origin");
    detail::write_string_array(w, expanded.origin.at(l));
    w.end_object();
  }
  w.end_array().key("components").begin_array();
  for (const auto& c : comps) {
    w.begin_object().field("id", c.component_id).key("links");
    detail::write_string_array(w, c.links);
    w.end_object();
  }
  w.end_array().end_object();
  write_file_atomic(cfg.output_dir / artifact::kConfirmed, w.str() + "\n");
  log << "confirm: " << seeded.links.size() << " snapped links expanded to " << expanded.links.size() << " in "
      << comps.size() << " components\n";
  return comps;
}

inline std::string serialize_inferred(const RailNetwork& net, const InferredNetwork& inferred,
                                      const NetClassTable& table = {}) {
  JsonWriter w;
  w.begin_object().field("type", "FeatureCollection").key("features").begin_array();
  for (const auto& [id, status] : inferred.links) {
    const RailLink& l = net.link(id);
    w.begin_object().field("type", "Feature");
    w.key("properties").begin_object().field("id", id).field("status", to_string(status));
    w.field("provenance", inferred.provenance.at(id));
    w.key("owners");
    detail::write_carrier_array(w, l.owners());
    w.key("trackage_rights");
    detail::write_carrier_array(w, l.trackage_rights());
    w.field("net", table.code_for(l.net_class())).end_object();
    w.key("geometry").begin_object().field("type", "LineString").key("coordinates").begin_array();
    for (const auto& p : l.geometry().vertices()) w.begin_array().value(p.lon()).value(p.lat()).end_array();
    w.end_array().end_object().end_object();
  }
  w.end_array().end_object();
  return w.str() + "\n";
}

inline std::string serialize_audit(const InferenceResult& r) {
  JsonWriter w;
  w.begin_object().field("initial_groups", r.initial_groups).key("accepted").begin_array();
  for (const auto& a : r.accepted) {
    w.begin_object()
        .field("round", a.round)
        .field("gap_id", a.gap_id)
        .field("from", a.gap.from)
        .field("to", a.gap.to)
        .field("length_m", a.gap.length_m)
        .field("from_padd", a.from_padd)
        .field("to_padd", a.to_padd);
    w.key("carriers_used");
    detail::write_carrier_array(w, a.gap.carriers_used);
    w.key("carrier_set");
    detail::write_carrier_array(w, a.carrier_set);
    w.key("path");
    detail::write_string_array(w, a.gap.path);
    w.end_object();
  }
  w.end_array().key("remaining_groups");
  detail::write_string_array(w, r.remaining_groups);
  w.key("unsnapped_terminals");
  detail::write_string_array(w, r.unsnapped_terminals);
  w.end_object();
  return w.str() + "\n";
}

inline InferenceResult cmd_infer(const PipelineConfig& cfg, std::ostream& log) {
  cfg.validate();
  const fs::path confirmed_path = detail::stage_input(cfg, artifact::kConfirmed, "confirm");
  auto main = detail::load_mainline(cfg);
  auto snaps = detail::read_snaps(detail::stage_input(cfg, artifact::kSnaps, "snap"));
  auto obs = parse_observations(detail::input_file(cfg.observations, "observations"));
  auto od = parse_od_matrix(detail::input_file(cfg.od_matrix, "od_matrix"));
  auto padds = parse_regions(detail::input_file(cfg.padd_regions, "padd_regions"));

  ConfirmedSet confirmed;
  try {
    auto doc = nlohmann::json::parse(read_file(confirmed_path));
    for (const auto& l : doc.at("links")) {
      for (const auto& o : l.at("origin")) confirmed.add(l.at("id").get<std::string>(), o.get<std::string>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedRow, confirmed_path.string() + ": " + e.what());
  }
  auto comps = components(main, confirmed);

  std::map<std::string, LinkId> snapped;
  for (const auto& s : snaps) snapped[s.observation_id] = s.link_id;
  std::vector<TerminalSite> terminals;
  for (const auto& o : obs) {
    if (o.kind != ObservationKind::Terminal) continue;
    auto it = snapped.find(o.id);
    terminals.push_back({o.id, it == snapped.end() ? std::nullopt : std::optional<LinkId>(it->second)});
  }
  std::sort(terminals.begin(), terminals.end(),
            [](const TerminalSite& a, const TerminalSite& b) { return a.terminal_id < b.terminal_id; });

  InferOptions opts;
  if (cfg.max_rounds > 0) opts.max_rounds = cfg.max_rounds;
  opts.workers = cfg.workers;
  opts.origins = &confirmed;
  auto result = infer_routes(main, comps, terminals, od, padds, opts);

  write_file_atomic(cfg.output_dir / artifact::kInferred, serialize_inferred(main, result.network));
  write_file_atomic(cfg.output_dir / artifact::kAudit, serialize_audit(result));
  log << "infer: " << result.initial_groups << " groups, " << result.accepted.size() << " gaps accepted, "
      << result.network.with_status(LinkStatus::Inferred).size() << " links inferred, "
      << result.remaining_groups.size() << " groups remain\n";
  return result;
}

struct ValidationOutcome {
  AlignmentReport alignment;
  std::optional<CoverageReport> coverage;
};

inline ValidationOutcome cmd_validate(const PipelineConfig& cfg, std::ostream& log) {
  cfg.validate();
  auto links = parse_network(detail::stage_input(cfg, artifact::kInferred, "infer"));
  auto incidents = parse_incidents(detail::input_file(cfg.incidents, "incidents"));
  ValidationOutcome out;
  out.alignment = incident_alignment(links, incidents, cfg.alignment_radius_m, cfg.workers);
  if (!cfg.metro_regions.empty()) {
    auto metros = parse_regions(detail::input_file(cfg.metro_regions, "metro_regions"));
    out.coverage = metro_coverage(links, metros, cfg.workers);
  }

  JsonWriter w;
  const auto& a = out.alignment;
  w.begin_object().key("alignment").begin_object();
  w.field("total_incidents", a.total_incidents)
      .field("aligned", a.aligned)
      .field("fraction_aligned", a.fraction_aligned)
      .field("radius_m", a.radius_m)
      .key("missed")
      .begin_array();
  for (const auto& m : a.missed) {
    w.begin_object().field("city", m.city).field("state", m.state).field("count", m.count).end_object();
  }
  w.end_array().end_object().key("coverage");
  if (out.coverage) {
    w.begin_object()
        .field("metros_traversed", out.coverage->metros_traversed)
        .field("metros_total", out.coverage->metros_total)
        .key("traversed_ids");
    detail::write_string_array(w, out.coverage->traversed_ids);
    w.end_object();
  } else {
    w.null();
  }
  w.end_object();
  write_file_atomic(cfg.output_dir / artifact::kValidation, w.str() + "\n");

  std::string missed = "city,state,count\n";
  for (const auto& m : a.missed) missed += csv::quote(m.city) + "," + m.state + "," + std::to_string(m.count) + "\n";
  write_file_atomic(cfg.output_dir / artifact::kMissed, missed);

  log << "validate: " << a.aligned << "/" << a.total_incidents << " incidents aligned (" << fixed6(a.fraction_aligned)
      << ") at radius " << fixed6(a.radius_m) << " m";
  if (out.coverage) log << "; " << out.coverage->metros_traversed << "/" << out.coverage->metros_total << " metros traversed";
  log << "\n";
  return out;
}

struct ProximityReport {
  std::vector<double> thresholds_m;
  std::vector<double> all_lines;
  std::vector<double> main_lines;
  std::size_t photos = 0;
};

inline ProximityReport cmd_stats(const PipelineConfig& cfg, std::ostream& log) {
  cfg.validate();
  auto main = detail::load_mainline(cfg);
  auto full = build_topology(parse_network(detail::input_file(cfg.network, "network")), cfg.weld_tolerance_m);
  auto obs = parse_observations(detail::input_file(cfg.observations, "observations"));
  std::vector<Observation> photos;
  for (const auto& o : obs) {
    if (o.kind == ObservationKind::Photo) photos.push_back(o);
  }
  ProximityReport r;
  r.thresholds_m = {kStrictSnapThresholdM, kDefaultSnapThresholdM};
  r.photos = photos.size();
  r.all_lines = proximity_stats(full, photos, r.thresholds_m, cfg.workers);
  r.main_lines = proximity_stats(main, photos, r.thresholds_m, cfg.workers);

  JsonWriter w;
  w.begin_object().field("photos", r.photos).key("thresholds").begin_array();
  for (std::size_t i = 0; i < r.thresholds_m.size(); ++i) {
    w.begin_object()
        .field("threshold_m", r.thresholds_m[i])
        .field("all_lines", r.all_lines[i])
        .field("main_lines", r.main_lines[i])
        .end_object();
  }
  w.end_array().end_object();
  write_file_atomic(cfg.output_dir / artifact::kStats, w.str() + "\n");
  for (std::size_t i = 0; i < r.thresholds_m.size(); ++i) {
    log << "stats: within " << fixed6(r.thresholds_m[i]) << " m: all lines " << fixed6(r.all_lines[i])
        << ", main lines " << fixed6(r.main_lines[i]) << "\n";
  }
  return r;
}

}  // namespace railtrace

#endif  // RAILTRACE_PIPELINE_HPP
