// aiskg command-line driver.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "aiskg/aiskg.hpp"

namespace fs = std::filesystem;
using namespace aiskg;

namespace {

enum class Format { Text, Records };

struct Common {
  std::optional<std::uint64_t> seed;
  unsigned jobs = 1;
  std::string format = "text";
  std::string config_path;

  Format fmt() const { return format == "records" ? Format::Records : Format::Text; }
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--seed", c.seed, "Seed for every random choice");
  app->add_option("--jobs", c.jobs, "Worker threads")->check(CLI::Range(1u, 1024u));
  app->add_option("--format", c.format, "Output format")->check(CLI::IsMember({"text", "records"}));
  app->add_option("--config", c.config_path, "JSON run configuration")->check(CLI::ExistingFile);
}

RunConfig effective_config(const Common& c) {
  RunConfig cfg = c.config_path.empty() ? RunConfig{} : load_config(c.config_path);
  if (c.seed) cfg.gmm.seed = *c.seed;
  cfg.jobs = c.jobs;
  return cfg;
}

void echo_config(const RunConfig& cfg) { std::cerr << "config " << to_json(cfg).dump() << '\n'; }

void warn(const std::string& msg) { std::cerr << "warning: " << msg << '\n'; }

// A segment output directory holds train.traj and test.traj; pick the named one when present.
fs::path traj_source(const fs::path& p, const char* preferred) {
  if (fs::is_directory(p) && fs::exists(p / preferred)) return p / preferred;
  return p;
}

std::vector<SubTrajectory> read_trajectories(const fs::path& p, const char* preferred) {
  if (!fs::exists(p)) throw UnreadableSource("no such file or directory: " + p.string());
  return read_subtrajectories(traj_source(p, preferred));
}

std::vector<TransmitterLabel> read_label_file(const fs::path& p) {
  std::ifstream is(p);
  if (!is) throw UnreadableSource("cannot open " + p.string());
  return read_labels(is);
}

Position parse_position(const std::string& s) {
  const auto parts = text::split(s, ',');
  if (parts.size() != 2) throw InvalidArgument("position must be lat,lon: '" + s + "'");
  const auto lat = text::to_double(parts[0]);
  const auto lon = text::to_double(parts[1]);
  if (!lat || !lon) throw InvalidArgument("position must be lat,lon: '" + s + "'");
  return make_position(*lat, *lon);
}

void print_kv(std::ostream& os, Format f, const std::vector<std::pair<std::string, std::string>>& rows) {
  std::size_t width = 0;
  for (const auto& [k, v] : rows) width = std::max(width, k.size());
  for (const auto& [k, v] : rows) {
    if (f == Format::Records) {
      os << k << ',' << v << '\n';
    } else {
      os << std::left << std::setw(static_cast<int>(width) + 2) << k << v << '\n';
    }
  }
}

std::string num(std::uint64_t v) { return std::to_string(v); }

void print_graph_counts(const KnowledgeGraph& g, Format f) {
  std::size_t strata = 0;
  for (const auto& [c, s] : g.nodes) strata += s.entry_count();
  print_kv(std::cout, f,
           {{"nodes", num(g.nodes.size())},
            {"edges", num(g.edges.size())},
            {"strata", num(strata)},
            {"samples", num(g.meta.sample_count)},
            {"trajectories", num(g.meta.trajectory_count)}});
}

// ---------------------------------------------------------------------------

int cmd_ingest(const Common& c, const std::vector<std::string>& inputs, const std::string& out) {
  echo_config(effective_config(c));
  std::vector<fs::path> paths(inputs.begin(), inputs.end());
  const IngestResult r = ingest(paths);
  if (!out.empty()) {
    std::ofstream os(out, std::ios::binary);
    if (!os) throw UnreadableSource("cannot write " + out);
    write_messages_csv(os, r.streams);
  }
  print_kv(std::cout, c.fmt(),
           {{"records", num(r.report.records)},
            {"messages", num(r.report.messages)},
            {"malformed", num(r.report.malformed)},
            {"duplicates", num(r.report.duplicates)},
            {"vessels", num(r.report.vessels)}});
  return 0;
}

int cmd_segment(const Common& c, const std::vector<std::string>& inputs, const std::string& out, bool no_split,
                bool summary_only) {
  const RunConfig cfg = effective_config(c);
  echo_config(cfg);
  std::vector<fs::path> paths(inputs.begin(), inputs.end());
  const IngestResult r = ingest(paths);
  auto all = segment_streams(r.streams, cfg.segmentation, cfg.jobs);
  fs::create_directories(out);
  const std::size_t total = all.size();
  if (no_split) {
    write_subtrajectories(fs::path(out) / "all.traj", all, !summary_only);
    print_kv(std::cout, c.fmt(), {{"messages", num(r.report.messages)}, {"subtrajectories", num(total)}});
    return 0;
  }
  const auto split = temporal_split(std::move(all), cfg.split);
  write_subtrajectories(fs::path(out) / "train.traj", split.train, !summary_only);
  write_subtrajectories(fs::path(out) / "test.traj", split.test, !summary_only);
  print_kv(std::cout, c.fmt(),
           {{"messages", num(r.report.messages)},
            {"subtrajectories", num(total)},
            {"train", num(split.train.size())},
            {"test", num(split.test.size())}});
  return 0;
}

int cmd_select(const Common& c, const std::string& input, const std::string& apply, const std::string& model_in,
               const std::string& model_out, const std::string& out) {
  const RunConfig cfg = effective_config(c);
  echo_config(cfg);
  Selection sel;
  if (!model_in.empty()) {
    std::ifstream is(model_in);
    if (!is) throw UnreadableSource("cannot open " + model_in);
    sel.model = load_model(is);
  } else {
    if (input.empty()) throw InvalidArgument("select needs --input or --model");
    const auto train = read_trajectories(input, "train.traj");
    sel = fit_selection(train, cfg);
    if (!sel.model) warn("transmitter selection skipped (" + sel.skipped_reason + "); all vessels primary");
  }
  if (!model_out.empty()) {
    if (!sel.model) throw DegenerateData("no model to save");
    std::ofstream os(model_out);
    if (!os) throw UnreadableSource("cannot write " + model_out);
    save_model(os, *sel.model);
  }
  const std::string target = apply.empty() ? input : apply;
  if (target.empty()) return 0;
  const auto ts = read_trajectories(target, apply.empty() ? "train.traj" : "test.traj");
  const auto labels = label_vessels(sel, ts);
  if (out.empty()) {
    write_labels(std::cout, labels);
  } else {
    std::ofstream os(out);
    if (!os) throw UnreadableSource("cannot write " + out);
    write_labels(os, labels);
    std::size_t primary = 0;
    for (const auto& l : labels) primary += l.label == TransmitterKind::Primary ? 1 : 0;
    print_kv(std::cout, c.fmt(), {{"vessels", num(labels.size())}, {"primary", num(primary)}});
  }
  return 0;
}

int cmd_build(const Common& c, const std::string& input, const std::string& labels_path, const std::string& out) {
  const RunConfig cfg = effective_config(c);
  echo_config(cfg);
  auto ts = read_trajectories(input, "train.traj");
  if (!labels_path.empty()) ts = keep_primary(std::move(ts), read_label_file(labels_path));
  if (ts.empty()) warn("no sub-trajectories in input; writing an empty graph");
  const KnowledgeGraph g = build_graph(ts, cfg.build, cfg.jobs);
  save_graph(fs::path(out), g);
  print_graph_counts(g, c.fmt());
  return 0;
}

int cmd_merge(const Common& c, const std::vector<std::string>& inputs, const std::string& out) {
  echo_config(effective_config(c));
  KnowledgeGraph g = load_graph(fs::path(inputs.front()));
  for (std::size_t i = 1; i < inputs.size(); ++i) merge_into(g, load_graph(fs::path(inputs[i])));
  save_graph(fs::path(out), g);
  print_graph_counts(g, c.fmt());
  return 0;
}

int cmd_eta(const Common& c, const std::string& from, const std::string& to, const std::string& cls,
            const std::string& depart, const std::string& graph_path, bool strict) {
  RunConfig cfg = effective_config(c);
  if (strict) cfg.estimator.strict = true;
  echo_config(cfg);
  const KnowledgeGraph g = load_graph(fs::path(graph_path));
  const auto t0 = parse_timestamp(depart);
  if (!t0) throw InvalidArgument("bad departure time '" + depart + "'");
  const ShipClass ship_class = parse_ship_class(cls);
  RouteOptions ropt;
  ropt.strict = cfg.estimator.strict;
  const Route route = find_route(g, parse_position(from), parse_position(to), ropt);
  const TravelPrediction p = predict_segments(g, route.steps, ship_class, *t0, cfg.estimator);

  if (c.fmt() == Format::Records) {
    std::cout << "segment,cell,distance_km,speed_knots,level,reliable,samples,minutes\n";
    for (std::size_t i = 0; i < p.segments.size(); ++i) {
      const auto& s = p.segments[i];
      std::cout << i << ',' << s.cell.str() << ',' << text::fmt(s.distance_km) << ',' << text::fmt(s.estimate.speed)
                << ',' << to_string(s.estimate.level) << ',' << (s.estimate.reliable ? 1 : 0) << ','
                << s.estimate.sample_count << ',' << text::fmt(s.minutes) << '\n';
    }
    std::cout << "total,,," << text::fmt(route.distance_km) << ",,,," << text::fmt(p.total_minutes) << '\n';
    return 0;
  }
  std::cout << std::left << std::setw(6) << "cell" << std::right << std::setw(12) << "dist_km" << std::setw(10)
            << "speed_kn" << std::setw(10) << "level" << std::setw(10) << "reliable" << std::setw(10) << "minutes"
            << '\n';
  std::cout << std::fixed << std::setprecision(2);
  for (const auto& s : p.segments) {
    std::cout << std::left << std::setw(6) << s.cell.str() << std::right << std::setw(12) << s.distance_km
              << std::setw(10) << s.estimate.speed << std::setw(10) << to_string(s.estimate.level) << std::setw(10)
              << (s.estimate.reliable ? "yes" : "no") << std::setw(10) << s.minutes << '\n';
  }
  std::cout << "distance_km " << route.distance_km << '\n'
            << "eta_minutes " << p.total_minutes << '\n'
            << "arrival " << format_iso8601(*t0 + static_cast<UnixSeconds>(p.total_minutes * 60.0)) << '\n';
  return 0;
}

int cmd_evaluate(const Common& c, const std::string& graph_path, const std::string& test, const std::string& labels,
                 const std::string& report_path, const std::string& node_errors) {
  const RunConfig cfg = effective_config(c);
  echo_config(cfg);
  const KnowledgeGraph g = load_graph(fs::path(graph_path));
  auto ts = read_trajectories(test, "test.traj");
  if (!labels.empty()) ts = keep_primary(std::move(ts), read_label_file(labels));
  const auto records = evaluate_segments(g, ts, cfg.estimator, cfg.jobs);
  const MetricsReport r = compute_metrics(records, cfg.long_haul_cut_km);
  auto emit = [&](std::ostream& os) {
    if (c.fmt() == Format::Records) write_report_records(os, r);
    else write_report_text(os, r);
  };
  emit(std::cout);
  if (!report_path.empty()) {
    std::ofstream os(report_path, std::ios::binary);
    if (!os) throw UnreadableSource("cannot write " + report_path);
    emit(os);
  }
  if (!node_errors.empty()) export_node_errors(node_errors, r);
  return 0;
}

int cmd_synth(const Common& c, const std::string& spec_path, const std::string& out) {
  echo_config(effective_config(c));
  synth::WorldSpec spec = synth::load_world_spec(spec_path);
  if (c.seed) spec.seed = *c.seed;
  const synth::World w = synth::generate(spec, c.jobs);
  synth::write_world(w, out);
  print_kv(std::cout, c.fmt(),
           {{"messages", num(w.messages.size())}, {"truth_runs", num(w.truth.size())}, {"seed", num(spec.seed)}});
  return 0;
}

int cmd_inspect(const Common& c, const std::string& graph_path, const std::string& node) {
  const KnowledgeGraph g = load_graph(fs::path(graph_path));
  const auto& m = g.meta;
  auto opt_time = [](const std::optional<UnixSeconds>& t) { return t ? format_iso8601(*t) : std::string("-"); };
  std::size_t strata = 0;
  for (const auto& [cell, s] : g.nodes) strata += s.entry_count();
  print_kv(std::cout, c.fmt(),
           {{"format_version", std::to_string(m.format_version)},
            {"precision", std::to_string(m.precision)},
            {"nodes", num(g.nodes.size())},
            {"edges", num(g.edges.size())},
            {"strata", num(strata)},
            {"trajectories", num(m.trajectory_count)},
            {"ignored_trajectories", num(m.ignored_trajectories)},
            {"runs", num(m.run_count)},
            {"samples", num(m.sample_count)},
            {"skipped_samples", num(m.skipped_samples)},
            {"first_sample", opt_time(m.first_sample)},
            {"last_sample", opt_time(m.last_sample)}});
  if (node.empty()) return 0;
  const GeohashCell cell = GeohashCell::parse(node);
  const StratifiedStats* s = g.find_node(cell);
  if (s == nullptr) throw UnknownCell("cell " + node + " not in graph");
  if (c.fmt() == Format::Records) {
    std::cout << "axis,class,direction,bin,count,mean,variance,min,max\n";
  } else {
    std::cout << "\nnode " << cell.str() << '\n';
  }
  for (TemporalAxis a : kAllAxes) {
    for (const auto& [k, acc] : s->table(a)) {
      if (c.fmt() == Format::Records) {
        std::cout << to_string(a) << ',' << to_string(k.ship_class) << ',' << to_string(k.direction) << ','
                  << int(k.bin) << ',' << acc.count << ',' << text::fmt(acc.mean()) << ','
                  << text::fmt(acc.variance()) << ',' << text::fmt(acc.min) << ',' << text::fmt(acc.max) << '\n';
      } else {
        std::cout << std::left << std::setw(6) << to_string(a) << std::setw(8) << to_string(k.ship_class)
                  << std::setw(4) << to_string(k.direction) << std::right << std::setw(4) << int(k.bin)
                  << std::setw(8) << acc.count << std::fixed << std::setprecision(3) << std::setw(10) << acc.mean()
                  << std::setw(10) << acc.variance() << std::setw(9) << acc.min << std::setw(9) << acc.max
                  << std::defaultfloat << '\n';
      }
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"AIS knowledge-graph toolkit: build speed graphs from AIS data and predict travel times"};
  app.require_subcommand(1);
  Common common;

  std::vector<std::string> inputs;
  std::string out, input, apply, model_in, model_out, labels, graph, test, report, node_errors, spec, node;
  std::string from, to, ship_class = "other", depart;
  bool strict = false, no_split = false, summary_only = false;

  auto* ingest_cmd = app.add_subcommand("ingest", "Parse AIS files and report record counts");
  ingest_cmd->add_option("inputs", inputs, "AIS CSV files (optionally .gz)")->required()->check(CLI::ExistingPath);
  ingest_cmd->add_option("--out", out, "Write the cleaned, per-vessel sorted messages here");

  auto* segment_cmd = app.add_subcommand("segment", "Split vessel streams into eligible sub-trajectories");
  segment_cmd->add_option("inputs", inputs, "AIS CSV files")->required()->check(CLI::ExistingPath);
  segment_cmd->add_option("--out", out, "Output directory (train.traj, test.traj)")->required();
  segment_cmd->add_flag("--no-split", no_split, "Write all.traj without the temporal split");
  segment_cmd->add_flag("--summary-only", summary_only, "Omit message lines");

  auto* select_cmd = app.add_subcommand("select", "Fit or apply the transmitter-selection model");
  select_cmd->add_option("--input", input, "Training sub-trajectories (file or directory)");
  select_cmd->add_option("--apply", apply, "Label these sub-trajectories instead of the training set");
  select_cmd->add_option("--model", model_in, "Use a saved model instead of fitting")->check(CLI::ExistingFile);
  select_cmd->add_option("--save-model", model_out, "Write the fitted model");
  select_cmd->add_option("--out", out, "Write labels here instead of stdout");

  auto* build_cmd = app.add_subcommand("build-graph", "Build a knowledge graph from sub-trajectories");
  build_cmd->add_option("--input", input, "Sub-trajectories (file or directory)")->required();
  build_cmd->add_option("--labels", labels, "Keep only vessels labelled primary")->check(CLI::ExistingFile);
  build_cmd->add_option("--out", out, "Graph file")->required();

  auto* merge_cmd = app.add_subcommand("merge-graph", "Merge graph files");
  merge_cmd->add_option("inputs", inputs, "Graph files")->required()->check(CLI::ExistingFile);
  merge_cmd->add_option("--out", out, "Merged graph file")->required();

  auto* eta_cmd = app.add_subcommand("eta", "Predict travel time between two positions");
  eta_cmd->add_option("--from", from, "Origin lat,lon")->required();
  eta_cmd->add_option("--to", to, "Destination lat,lon")->required();
  eta_cmd->add_option("--ship-class", ship_class, "cargo, tanker or other");
  eta_cmd->add_option("--depart", depart, "Departure time (ISO-8601 or epoch seconds)")->required();
  eta_cmd->add_option("--graph", graph, "Graph file")->required();
  eta_cmd->add_flag("--strict", strict, "Fail instead of snapping or falling back");

  auto* eval_cmd = app.add_subcommand("evaluate", "Replay held-out sub-trajectories against a graph");
  eval_cmd->add_option("--graph", graph, "Graph file")->required();
  eval_cmd->add_option("--test", test, "Test sub-trajectories (file or directory)")->required();
  eval_cmd->add_option("--labels", labels, "Keep only vessels labelled primary")->check(CLI::ExistingFile);
  eval_cmd->add_option("--report", report, "Also write the report here");
  eval_cmd->add_option("--node-errors", node_errors, "GeoJSON per-node error export");

  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic AIS world");
  synth_cmd->add_option("--spec", spec, "World spec (JSON)")->required()->check(CLI::ExistingFile);
  synth_cmd->add_option("--out", out, "Output directory (ais.csv, truth.csv)")->required();

  auto* inspect_cmd = app.add_subcommand("inspect", "Print graph metadata and a node's strata");
  inspect_cmd->add_option("--graph", graph, "Graph file")->required();
  inspect_cmd->add_option("--node", node, "Geohash cell to dump");

  for (auto* sub : {ingest_cmd, segment_cmd, select_cmd, build_cmd, merge_cmd, eta_cmd, eval_cmd, synth_cmd,
                    inspect_cmd}) {
    add_common(sub, common);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*ingest_cmd) return cmd_ingest(common, inputs, out);
    if (*segment_cmd) return cmd_segment(common, inputs, out, no_split, summary_only);
    if (*select_cmd) return cmd_select(common, input, apply, model_in, model_out, out);
    if (*build_cmd) return cmd_build(common, input, labels, out);
    if (*merge_cmd) return cmd_merge(common, inputs, out);
    if (*eta_cmd) return cmd_eta(common, from, to, ship_class, depart, graph, strict);
    if (*eval_cmd) return cmd_evaluate(common, graph, test, labels, report, node_errors);
    if (*synth_cmd) return cmd_synth(common, spec, out);
    if (*inspect_cmd) return cmd_inspect(common, graph, node);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
