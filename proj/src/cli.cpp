// SPDX-License-Identifier: Apache-2.0
#include "gcnm/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>

#include "gcnm/checkpoint.hpp"
#include "gcnm/config.hpp"
#include "gcnm/data.hpp"
#include "gcnm/error.hpp"
#include "gcnm/forecaster.hpp"
#include "gcnm/masking.hpp"
#include "gcnm/metrics.hpp"
#include "gcnm/stats.hpp"
#include "gcnm/trainer.hpp"
#include "gcnm/window.hpp"

namespace gcnm {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fnv1a_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::uint64_t h = 1469598103934665603ULL;
  char buf[1 << 14];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ULL;
    }
  }
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
  return hex;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw DataError(path.string() + " is not valid JSON: " + e.what());
  }
}

void require_file(const fs::path& path, const std::string& what) {
  if (!fs::is_regular_file(path)) throw UsageError(what + " not found: " + path.string());
}

void prepare_out(const fs::path& out) {
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw DataError("cannot create output directory " + out.string() + ": " + ec.message());
}

json file_index(const fs::path& dir, std::initializer_list<const char*> names) {
  json files = json::object();
  for (const char* n : names)
    if (fs::exists(dir / n)) files[n] = fnv1a_file(dir / n);
  return files;
}

struct Bundle {
  TrafficSeries input;
  TrafficSeries original;
  PredefinedGraph graph;
  double scale = 1.0;
  json manifest;
};

Bundle load_bundle(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw UsageError("bundle directory not found: " + dir.string());
  require_file(dir / "series.csv", "bundle series");
  require_file(dir / "graph.csv", "bundle graph");
  require_file(dir / "scale.json", "bundle scale sidecar");
  Bundle b;
  b.input = read_series_csv(dir / "series.csv");
  b.original = fs::exists(dir / "original.csv") ? read_series_csv(dir / "original.csv") : b.input;
  if (b.original.nodes != b.input.nodes || b.original.steps != b.input.steps)
    throw SchemaError("bundle original.csv does not match series.csv");
  b.graph = read_graph_csv(dir / "graph.csv", b.input.node_ids);
  b.scale = read_scale_sidecar(dir / "scale.json");
  if (fs::exists(dir / "manifest.json")) b.manifest = read_json(dir / "manifest.json");
  return b;
}

json window_summary(const TrafficSeries& s, const ModelConfig& cfg) {
  try {
    const auto w = make_windows(s.steps, cfg.tau, cfg.horizon, cfg.segment_params(s.step_minutes));
    return {{"tau", cfg.tau},
            {"horizon", cfg.horizon},
            {"train", w.train.size()},
            {"val", w.val.size()},
            {"test", w.test.size()},
            {"first_anchor", w.train.anchors.front()}};
  } catch (const std::exception& e) {
    return {{"tau", cfg.tau}, {"horizon", cfg.horizon}, {"error", e.what()}};
  }
}

bool small_enough_to_cache(std::size_t windows, const TrafficSeries& s, const ModelConfig& cfg) {
  const std::size_t per_window =
      s.nodes * s.features * static_cast<std::size_t>(cfg.tau * 9 + (cfg.n_h + cfg.n_d + cfg.n_w) * cfg.tau);
  return windows * per_window <= 50'000'000;
}

int cmd_prepare(const std::string& series, const std::string& graph, const std::string& out, std::ostream& log) {
  require_file(series, "series file");
  require_file(graph, "graph file");
  auto [s, g] = ingest_series(series, graph);
  const double scale = normalize(s, 0.7).scale_factor;
  prepare_out(out);
  write_series_csv(s, fs::path(out) / "series.csv");
  {
    std::ofstream gout(fs::path(out) / "graph.csv", std::ios::binary);
    write_graph_csv(g, s.node_ids, gout);
  }
  write_scale_sidecar(scale, fs::path(out) / "scale.json");
  json m{{"command", "prepare"},
         {"nodes", s.nodes},
         {"steps", s.steps},
         {"step_minutes", s.step_minutes},
         {"scale_factor", scale},
         {"zero_or_missing_ratio", zero_or_missing_ratio(s)},
         {"missing_fraction", mask_stats(s).missing_fraction},
         {"windows", window_summary(s, ModelConfig{})},
         {"files", file_index(out, {"series.csv", "graph.csv", "scale.json"})}};
  write_json(fs::path(out) / "manifest.json", m);
  log << "prepared " << s.nodes << " nodes x " << s.steps << " steps into " << out << '\n';
  return 0;
}

int cmd_inject(const std::string& bundle_dir, const std::string& scenario, double rate, std::uint64_t seed, int tau,
               const std::string& out, std::ostream& log) {
  if (!(rate > 0.0 && rate < 1.0)) throw UsageError("--rate must lie strictly between 0 and 1");
  const MissingKind kind = parse_missing_kind(scenario);
  Bundle b = load_bundle(bundle_dir);
  const TrafficSeries injected = inject_per_split(b.input, MissingScenario{kind, rate, seed}, tau);
  prepare_out(out);
  write_series_csv(injected, fs::path(out) / "series.csv");
  write_series_csv(b.original, fs::path(out) / "original.csv");
  {
    std::ofstream gout(fs::path(out) / "graph.csv", std::ios::binary);
    write_graph_csv(b.graph, b.input.node_ids, gout);
  }
  write_scale_sidecar(b.scale, fs::path(out) / "scale.json");
  const MaskStats st = mask_stats(injected);
  json hist = json::object();
  for (const auto& [len, count] : st.block_length_histogram) hist[std::to_string(len)] = count;
  json m{{"command", "inject"},
         {"scenario", missing_kind_name(kind)},
         {"rate", rate},
         {"seed", seed},
         {"tau", tau},
         {"missing_fraction", st.missing_fraction},
         {"block_length_histogram", hist},
         {"files", file_index(out, {"series.csv", "original.csv", "graph.csv", "scale.json"})}};
  write_json(fs::path(out) / "manifest.json", m);
  log << "injected " << missing_kind_name(kind) << "-range missing; realized fraction " << st.missing_fraction
      << '\n';
  return 0;
}

struct TrainOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> epochs;
  std::optional<double> lr;
};

int cmd_train(const std::string& bundle_dir, const std::string& config_path, const std::string& out,
              const std::string& resume, const TrainOverrides& over, std::ostream& log) {
  require_file(config_path, "config file");
  const RunConfig run = RunConfig::load(config_path);
  ModelConfig cfg = run.model;
  if (over.seed) cfg.seed = *over.seed;
  if (over.epochs) {
    if (*over.epochs < 1) throw UsageError("--epochs must be at least 1");
    cfg.max_epochs = *over.epochs;
  }
  if (over.lr) {
    if (!(*over.lr > 0.0)) throw UsageError("--lr must be positive");
    cfg.learning_rate = *over.lr;
  }
  Bundle b = load_bundle(bundle_dir);
  const TrafficSeries input = normalize_with(b.input, b.scale);
  const auto windows = make_windows(input.steps, cfg.tau, cfg.horizon, cfg.segment_params(input.step_minutes));
  const WindowAssembler assembler(input, input, b.graph, cfg.assembler_options(input.step_minutes));
  const bool cache = small_enough_to_cache(windows.train.size() + windows.val.size(), input, cfg);
  const WindowSet train(assembler, windows.train.anchors, cache);
  const WindowSet val(assembler, windows.val.anchors, cache);

  auto model = make_model(cfg, input.nodes, input.features, b.graph);
  TrainOptions opts = TrainOptions::from_config(cfg);
  opts.on_epoch = [&log](const EpochRecord& r) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "epoch %d  train_mae %.6f  val_mae %.6f  (%.1fs)\n", r.epoch, r.train_mae,
                  r.val_mae, r.seconds);
    log << buf << std::flush;
  };
  Trainer trainer(*model, opts);
  if (!resume.empty()) {
    require_file(resume, "resume checkpoint");
    trainer.resume(read_checkpoint(resume));
    log << "resuming after epoch " << trainer.epochs_done() << '\n';
  }
  const TrainResult result = trainer.fit(train, val);

  prepare_out(out);
  json meta{{"config", cfg.to_json()},
            {"nodes", input.nodes},
            {"features", input.features},
            {"step_minutes", input.step_minutes},
            {"scale_factor", b.scale},
            {"node_ids", input.node_ids}};
  write_checkpoint(fs::path(out) / "checkpoint.gcnm", trainer.checkpoint(meta));
  {
    std::ofstream h(fs::path(out) / "history.csv", std::ios::binary);
    write_history_csv(trainer.history(), h);
  }
  json m{{"command", "train"},
         {"model", model->name()},
         {"epochs", trainer.epochs_done()},
         {"best_epoch", result.best_epoch},
         {"best_val_mae", std::isfinite(result.best_val) ? json(result.best_val) : json(nullptr)},
         {"diverged", result.diverged},
         {"files", file_index(out, {"checkpoint.gcnm", "history.csv"})}};
  write_json(fs::path(out) / "manifest.json", m);
  if (result.diverged) {
    log << "training diverged (" << result.message << "); last good parameters saved\n";
    return 4;
  }
  log << "best validation MAE " << result.best_val << " at epoch " << result.best_epoch << '\n';
  return 0;
}

int cmd_evaluate(const std::string& checkpoint_path, const std::string& bundle_dir, const std::string& out,
                 std::ostream& log) {
  require_file(checkpoint_path, "checkpoint");
  const Checkpoint cp = read_checkpoint(checkpoint_path);
  if (!cp.meta.contains("config")) throw SchemaError("checkpoint lacks its model config");
  const ModelConfig cfg = ModelConfig::from_json(cp.meta.at("config"));
  Bundle b = load_bundle(bundle_dir);
  if (cp.meta.value("nodes", std::size_t{0}) != b.input.nodes)
    throw SchemaError("checkpoint node count does not match the bundle");
  const TrafficSeries input = normalize_with(b.input, b.scale);
  const TrafficSeries original = normalize_with(b.original, b.scale);
  const auto windows = make_windows(input.steps, cfg.tau, cfg.horizon, cfg.segment_params(input.step_minutes));
  const WindowAssembler assembler(input, original, b.graph, cfg.assembler_options(input.step_minutes));
  auto model = make_model(cfg, input.nodes, input.features, b.graph);
  load_parameters(model->parameters(), cp);

  MetricAccumulator acc(static_cast<std::size_t>(cfg.horizon));
  for (auto anchor : windows.test.anchors) {
    const WindowTensors w = assembler.assemble(anchor);
    Matrix y = model->predict(w);
    Matrix target = w.target;
    for (double& v : y.values()) v *= b.scale;
    for (double& v : target.values()) v *= b.scale;
    acc.add(y.values(), target.values(), w.target_mask.values());
  }
  std::string scenario = "none";
  double rate = 0.0;
  if (b.manifest.is_object() && b.manifest.value("command", "") == "inject") {
    scenario = b.manifest.value("scenario", "none");
    rate = b.manifest.value("rate", 0.0);
  }
  const MetricReport report = make_report(model->name(), scenario, rate, acc);
  prepare_out(out);
  write_json(fs::path(out) / "report.json", report.to_json());
  write_json(fs::path(out) / "manifest.json",
             {{"command", "evaluate"},
              {"model", model->name()},
              {"test_windows", windows.test.size()},
              {"files", file_index(out, {"report.json"})}});
  const auto avg = acc.at(0);
  log << model->name() << " test MAE " << (avg.mae ? std::to_string(*avg.mae) : "null") << '\n';
  return 0;
}

int cmd_compare(const std::vector<std::string>& report_paths, const std::string& out, double alpha,
                std::ostream& log) {
  struct Entry {
    std::string model;
    std::string stem;
    MetricReport report;
  };
  std::vector<Entry> entries;
  for (const auto& p : report_paths) {
    require_file(p, "report");
    entries.push_back({"", fs::path(p).stem().string(), MetricReport::from_json(read_json(p))});
    if (fs::path(p).stem() == "report") entries.back().stem = fs::path(p).parent_path().filename().string();
  }
  // Model name per file; the same name from different files gets the file stem appended.
  std::map<std::string, int> name_count;
  for (auto& e : entries) {
    std::set<std::string> names;
    for (const auto& r : e.report.records) names.insert(r.model);
    for (const auto& n : names) ++name_count[n];
  }
  std::map<std::string, std::map<std::string, double>> cells;
  std::vector<std::string> order;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    for (const auto& r : entries[i].report.records) {
      if (r.horizon == "avg" || !r.values.mae) continue;
      std::string name = r.model;
      if (name_count[name] > 1) name += "@" + (entries[i].stem.empty() ? std::to_string(i) : entries[i].stem);
      if (!cells.contains(name)) order.push_back(name);
      char key[128];
      std::snprintf(key, sizeof key, "%s|%.6f|%s", r.scenario.c_str(), r.rate, r.horizon.c_str());
      cells[name][key] = *r.values.mae;
    }
  }
  if (order.size() < 2) throw UsageError("compare needs at least 2 models, got " + std::to_string(order.size()));
  std::vector<std::string> shared;
  for (const auto& [key, v] : cells[order.front()]) {
    bool all = true;
    for (const auto& m : order) all = all && cells[m].contains(key);
    if (all) shared.push_back(key);
  }
  if (shared.size() < 2) throw UsageError("compare needs at least 2 evaluation cells shared by all models");
  std::vector<std::vector<double>> scores;
  for (const auto& m : order) {
    std::vector<double> row;
    for (const auto& key : shared) row.push_back(cells[m][key]);
    scores.push_back(std::move(row));
  }
  const ComparisonResult result = compare_models(order, scores, alpha);
  prepare_out(out);
  write_json(fs::path(out) / "comparison.json", result.to_json());
  emit_cd_diagram(result, fs::path(out) / "cd.svg");
  write_json(fs::path(out) / "manifest.json",
             {{"command", "compare"}, {"reports", report_paths}, {"cells", shared},
              {"files", file_index(out, {"comparison.json", "cd.svg"})}});
  log << "compared " << order.size() << " models over " << shared.size() << " cells; " << result.cliques.size()
      << " clique(s)\n";
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"GCN-M traffic forecasting with missing values", "gcnm"};
  app.require_subcommand(1);

  std::string series, graph, out_dir, bundle, scenario, config, checkpoint, resume;
  double rate = 0.0, alpha = 0.05;
  std::uint64_t seed = 0;
  int tau = 12;
  std::vector<std::string> reports;

  auto* prep = app.add_subcommand("prepare", "ingest a series CSV and edge list into a bundle");
  prep->add_option("--series", series, "series CSV (timestamp column + one column per node)")->required();
  prep->add_option("--graph", graph, "edge list CSV with header from,to,distance")->required();
  prep->add_option("--out", out_dir, "output bundle directory")->required();

  auto* inj = app.add_subcommand("inject", "inject a missing-value scenario into a bundle");
  inj->add_option("--bundle", bundle, "input bundle directory")->required();
  inj->add_option("--scenario", scenario, "short | long | mix")->required();
  inj->add_option("--rate", rate, "target missing fraction in (0, 1)")->required();
  inj->add_option("--seed", seed, "random seed")->required();
  inj->add_option("--tau", tau, "input window length (block length of long-range gaps)");
  inj->add_option("--out", out_dir, "output bundle directory")->required();

  auto* tr = app.add_subcommand("train", "train a model on a bundle");
  tr->add_option("--bundle", bundle, "bundle directory")->required();
  tr->add_option("--config", config, "run config JSON")->required();
  tr->add_option("--out", out_dir, "output directory")->required();
  tr->add_option("--resume", resume, "checkpoint to continue from");
  TrainOverrides over;
  tr->add_option("--seed", over.seed, "override the config seed");
  tr->add_option("--epochs", over.epochs, "override the epoch budget");
  tr->add_option("--lr", over.lr, "override the learning rate");

  auto* ev = app.add_subcommand("evaluate", "masked test metrics for a checkpoint");
  ev->add_option("--checkpoint", checkpoint, "checkpoint written by train")->required();
  ev->add_option("--bundle", bundle, "bundle directory")->required();
  ev->add_option("--out", out_dir, "output directory")->required();

  auto* cmp = app.add_subcommand("compare", "Friedman / Wilcoxon / Holm comparison of reports");
  cmp->add_option("--reports", reports, "report.json files")->required()->expected(1, -1);
  cmp->add_option("--out", out_dir, "output directory")->required();
  cmp->add_option("--alpha", alpha, "family-wise significance level");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 2;
  }

  try {
    if (*prep) return cmd_prepare(series, graph, out_dir, err);
    if (*inj) return cmd_inject(bundle, scenario, rate, seed, tau, out_dir, err);
    if (*tr) return cmd_train(bundle, config, out_dir, resume, over, err);
    if (*ev) return cmd_evaluate(checkpoint, bundle, out_dir, err);
    if (*cmp) return cmd_compare(reports, out_dir, alpha, err);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return 3;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace gcnm
