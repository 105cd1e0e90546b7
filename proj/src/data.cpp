// SPDX-License-Identifier: Apache-2.0
#include "gcnm/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "gcnm/error.hpp"

namespace gcnm {
namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return out;
}

std::string_view chomp(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

double parse_number(std::string_view text, std::size_t line_no) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (!text.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || !std::isfinite(v)) {
    throw DataError("line " + std::to_string(line_no) + ": cannot parse number '" +
                    std::string(text) + "'");
  }
  return v;
}

std::string format_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw std::runtime_error("format_number failed");
  return std::string(buf, ptr);
}

// YYYY-MM-DD[T ]HH:MM[:SS[.fff]][Z|+hh:mm]; offsets are ignored.
std::array<long long, 6> parse_timestamp(std::string_view text, std::size_t line_no) {
  std::array<long long, 6> parts{0, 0, 0, 0, 0, 0};
  std::string s(text);
  int y = 0, mo = 0, d = 0, h = 0, mi = 0;
  double sec = 0.0;
  char sep = 0;
  const int got = std::sscanf(s.c_str(), "%d-%d-%d%c%d:%d:%lf", &y, &mo, &d, &sep, &h, &mi, &sec);
  if (got < 3 || (got > 3 && got < 6) || (got >= 4 && sep != 'T' && sep != ' ')) {
    throw DataError("line " + std::to_string(line_no) + ": malformed ISO-8601 timestamp '" + s + "'");
  }
  parts = {y, mo, d, h, mi, static_cast<long long>(std::llround(sec * 1000.0))};
  return parts;
}

}  // namespace

Matrix TrafficSeries::snapshot(std::size_t t) const {
  Matrix m(nodes, features);
  std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(index(t, 0)), nodes * features, m.data());
  return m;
}

Matrix TrafficSeries::mask_snapshot(std::size_t t) const {
  Matrix m(nodes, features);
  std::copy_n(mask.begin() + static_cast<std::ptrdiff_t>(index(t, 0)), nodes * features, m.data());
  return m;
}

double PredefinedGraph::max_distance() const {
  double best = 0.0;
  for (const auto& e : edges) best = std::max(best, e.distance);
  return best;
}

PredefinedGraph build_predefined_graph(std::size_t nodes, std::vector<Edge> edges, double kappa) {
  PredefinedGraph g;
  g.kappa = kappa;
  g.adjacency = Matrix(nodes, nodes);
  double mean = 0.0;
  for (const auto& e : edges) {
    if (e.from >= nodes || e.to >= nodes) throw SchemaError("edge references unknown node index");
    if (!(e.distance >= 0.0) || !std::isfinite(e.distance))
      throw DataError("edge distance must be finite and >= 0");
    mean += e.distance;
  }
  if (!edges.empty()) mean /= static_cast<double>(edges.size());
  double var = 0.0;
  for (const auto& e : edges) var += (e.distance - mean) * (e.distance - mean);
  if (!edges.empty()) var /= static_cast<double>(edges.size());
  g.sigma = std::sqrt(var);
  for (const auto& e : edges) {
    double w = 1.0;
    if (g.sigma > 0.0) w = std::exp(-(e.distance * e.distance) / (g.sigma * g.sigma));
    if (w < kappa) w = 0.0;
    g.adjacency(e.from, e.to) = w;
  }
  for (std::size_t i = 0; i < nodes; ++i) g.adjacency(i, i) = 1.0;
  g.edges = std::move(edges);
  return g;
}

TrafficSeries read_series_csv(std::istream& in) {
  TrafficSeries s;
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("series file is empty");
  const auto header = split_fields(chomp(line));
  if (header.size() < 2) throw SchemaError("series header needs a time column and at least one node");
  s.time_column = std::string(header[0]);
  std::unordered_map<std::string, std::size_t> seen;
  for (std::size_t c = 1; c < header.size(); ++c) {
    std::string id(header[c]);
    if (id.empty()) throw SchemaError("empty node id in series header column " + std::to_string(c));
    if (!seen.emplace(id, c).second) throw SchemaError("duplicate node id in series header: " + id);
    s.node_ids.push_back(std::move(id));
  }
  s.nodes = s.node_ids.size();
  s.features = 1;
  std::size_t line_no = 1;
  std::array<long long, 6> prev{};
  bool have_prev = false;
  while (std::getline(in, line)) {
    ++line_no;
    const auto row = chomp(line);
    if (row.empty()) continue;
    const auto fields = split_fields(row);
    if (fields.size() != header.size()) {
      throw SchemaError("line " + std::to_string(line_no) + ": expected " +
                        std::to_string(header.size()) + " fields, got " + std::to_string(fields.size()));
    }
    const auto ts = parse_timestamp(fields[0], line_no);
    if (have_prev && !(prev < ts)) {
      throw OrderingError("line " + std::to_string(line_no) + ": timestamp '" + std::string(fields[0]) +
                          "' is not after the previous row");
    }
    prev = ts;
    have_prev = true;
    s.timestamps.emplace_back(fields[0]);
    for (std::size_t c = 1; c < fields.size(); ++c) {
      if (fields[c].empty()) {
        s.values.push_back(0.0);
        s.mask.push_back(0.0);
      } else {
        s.values.push_back(parse_number(fields[c], line_no));
        s.mask.push_back(1.0);
      }
    }
  }
  s.steps = s.timestamps.size();
  if (s.steps >= 2) {
    // Step from the first two stamps; fall back to 5 minutes if unparseable.
    const auto a = parse_timestamp(s.timestamps[0], 2);
    const auto b = parse_timestamp(s.timestamps[1], 3);
    if (a[0] == b[0] && a[1] == b[1] && a[2] == b[2]) {
      const long long minutes = (b[3] * 60 + b[4]) - (a[3] * 60 + a[4]);
      if (minutes > 0) s.step_minutes = static_cast<int>(minutes);
    }
  }
  return s;
}

TrafficSeries read_series_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open series file: " + path.string());
  return read_series_csv(in);
}

void write_series_csv(const TrafficSeries& series, std::ostream& out) {
  out << series.time_column;
  for (const auto& id : series.node_ids) out << ',' << id;
  out << '\n';
  for (std::size_t t = 0; t < series.steps; ++t) {
    out << (t < series.timestamps.size() ? series.timestamps[t] : std::to_string(t));
    for (std::size_t n = 0; n < series.nodes; ++n) {
      out << ',';
      if (series.observed(t, n)) out << format_number(series.value(t, n));
    }
    out << '\n';
  }
}

void write_series_csv(const TrafficSeries& series, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write series file: " + path.string());
  write_series_csv(series, out);
}

PredefinedGraph read_graph_csv(std::istream& in, const std::vector<std::string>& node_ids) {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < node_ids.size(); ++i) index.emplace(node_ids[i], i);
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("graph file is empty");
  if (chomp(line) != "from,to,distance") throw SchemaError("graph header must be 'from,to,distance'");
  std::vector<Edge> edges;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto row = chomp(line);
    if (row.empty()) continue;
    const auto f = split_fields(row);
    if (f.size() != 3) throw SchemaError("graph line " + std::to_string(line_no) + ": expected 3 fields");
    const auto a = index.find(std::string(f[0]));
    const auto b = index.find(std::string(f[1]));
    if (a == index.end() || b == index.end()) {
      throw SchemaError("graph line " + std::to_string(line_no) + ": node '" +
                        std::string(a == index.end() ? f[0] : f[1]) + "' is not a series column");
    }
    edges.push_back(Edge{a->second, b->second, parse_number(f[2], line_no)});
  }
  return build_predefined_graph(node_ids.size(), std::move(edges));
}

PredefinedGraph read_graph_csv(const std::filesystem::path& path, const std::vector<std::string>& node_ids) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open graph file: " + path.string());
  return read_graph_csv(in, node_ids);
}

void write_graph_csv(const PredefinedGraph& graph, const std::vector<std::string>& node_ids,
                     std::ostream& out) {
  out << "from,to,distance\n";
  for (const auto& e : graph.edges)
    out << node_ids.at(e.from) << ',' << node_ids.at(e.to) << ',' << format_number(e.distance) << '\n';
}

std::pair<TrafficSeries, PredefinedGraph> ingest_series(const std::filesystem::path& series_file,
                                                        const std::filesystem::path& graph_file) {
  auto series = read_series_csv(series_file);
  auto graph = read_graph_csv(graph_file, series.node_ids);
  return {std::move(series), std::move(graph)};
}

double zero_or_missing_ratio(const TrafficSeries& series) {
  if (series.entry_count() == 0) return 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < series.entry_count(); ++i)
    if (series.mask[i] == 0.0 || series.values[i] == 0.0) ++count;
  return static_cast<double>(count) / static_cast<double>(series.entry_count());
}

std::size_t train_steps(std::size_t steps, double train_fraction) {
  return static_cast<std::size_t>(std::floor(static_cast<double>(steps) * train_fraction + 1e-9));
}

TrafficSeries normalize_with(const TrafficSeries& series, double scale_factor) {
  if (!(scale_factor > 0.0) || !std::isfinite(scale_factor))
    throw DataError("scale factor must be positive and finite");
  TrafficSeries out = series;
  for (std::size_t i = 0; i < out.entry_count(); ++i)
    out.values[i] = out.mask[i] != 0.0 ? series.values[i] / scale_factor : 0.0;
  out.scale_factor = series.scale_factor * scale_factor;
  return out;
}

TrafficSeries normalize(const TrafficSeries& series, double train_fraction) {
  const std::size_t limit = train_steps(series.steps, train_fraction);
  bool any = false;
  double best = 0.0;
  for (std::size_t t = 0; t < limit; ++t) {
    for (std::size_t n = 0; n < series.nodes; ++n) {
      for (std::size_t f = 0; f < series.features; ++f) {
        if (!series.observed(t, n, f)) continue;
        best = any ? std::max(best, series.value(t, n, f)) : series.value(t, n, f);
        any = true;
      }
    }
  }
  if (!any) throw DataError("training split has no observed values; cannot normalize");
  if (!(best > 0.0)) throw DataError("training split maximum must be positive to normalize");
  return normalize_with(series, best);
}

TrafficSeries denormalize(const TrafficSeries& series) {
  TrafficSeries out = series;
  for (std::size_t i = 0; i < out.entry_count(); ++i)
    out.values[i] = out.mask[i] != 0.0 ? series.values[i] * series.scale_factor : 0.0;
  out.scale_factor = 1.0;
  return out;
}

void write_scale_sidecar(double scale_factor, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write scale sidecar: " + path.string());
  out << nlohmann::json{{"scale_factor", scale_factor}}.dump() << '\n';
}

double read_scale_sidecar(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open scale sidecar: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed scale sidecar: " + std::string(e.what()));
  }
  if (!j.contains("scale_factor") || !j["scale_factor"].is_number())
    throw DataError("scale sidecar lacks numeric 'scale_factor'");
  const double s = j["scale_factor"].get<double>();
  if (!(s > 0.0)) throw DataError("scale sidecar factor must be > 0");
  return s;
}

SegmentParams SegmentParams::for_step(int step_minutes, int tau, int n_h, int n_d, int n_w) {
  if (step_minutes <= 0 || 1440 % step_minutes != 0)
    throw UsageError("step_minutes must divide a day evenly");
  SegmentParams p;
  p.tau = tau;
  p.n_h = n_h;
  p.n_d = n_d;
  p.n_w = n_w;
  p.samples_per_day = 1440 / step_minutes;
  p.samples_per_week = 7 * p.samples_per_day;
  return p;
}

std::vector<std::int64_t> SegmentIndex::concatenated() const {
  std::vector<std::int64_t> out = hourly;
  out.insert(out.end(), daily.begin(), daily.end());
  out.insert(out.end(), weekly.begin(), weekly.end());
  return out;
}

SegmentIndex segment_index(std::int64_t anchor, const SegmentParams& p) {
  SegmentIndex idx;
  const std::int64_t tau = p.tau;
  const std::int64_t half = p.half_window();
  for (std::int64_t k = 0; k < p.n_h * tau; ++k) idx.hourly.push_back(anchor - p.n_h * tau + k);
  for (std::int64_t j = p.n_d; j >= 1; --j)
    for (std::int64_t k = 0; k < tau; ++k) idx.daily.push_back(anchor - j * p.samples_per_day - half + k);
  for (std::int64_t j = p.n_w; j >= 1; --j)
    for (std::int64_t k = 0; k < tau; ++k) idx.weekly.push_back(anchor - j * p.samples_per_week - half + k);
  return idx;
}

std::int64_t first_admissible_anchor(const SegmentParams& p) {
  std::int64_t t = p.tau;
  t = std::max<std::int64_t>(t, static_cast<std::int64_t>(p.n_h) * p.tau);
  if (p.n_d > 0) t = std::max<std::int64_t>(t, static_cast<std::int64_t>(p.n_d) * p.samples_per_day + p.half_window());
  if (p.n_w > 0) t = std::max<std::int64_t>(t, static_cast<std::int64_t>(p.n_w) * p.samples_per_week + p.half_window());
  return t;
}

const char* split_name(Split split) {
  switch (split) {
    case Split::train:
      return "train";
    case Split::val:
      return "val";
    case Split::test:
      return "test";
  }
  return "?";
}

const WindowedDataset& SplitDatasets::get(Split s) const {
  switch (s) {
    case Split::train:
      return train;
    case Split::val:
      return val;
    case Split::test:
      return test;
  }
  return train;
}

SplitDatasets make_windows(std::size_t steps, int tau, int horizon, const SegmentParams& segments,
                           std::array<double, 3> ratios) {
  if (tau < 1 || horizon < 1) throw UsageError("tau and horizon must be >= 1");
  if (segments.tau != tau) throw UsageError("segment tau must equal the model input length");
  if (segments.slot_count() == 0) throw UsageError("memory needs at least one segment (n_h + n_d + n_w > 0)");
  const std::int64_t first = first_admissible_anchor(segments);
  const std::int64_t last = static_cast<std::int64_t>(steps) - horizon;
  std::vector<std::size_t> anchors;
  for (std::int64_t t = first; t <= last; ++t) anchors.push_back(static_cast<std::size_t>(t));

  const std::size_t n = anchors.size();
  const auto n_train = static_cast<std::size_t>(std::llround(ratios[0] * static_cast<double>(n)));
  const auto n_val = static_cast<std::size_t>(std::llround(ratios[1] * static_cast<double>(n)));
  if (n_train == 0 || n_val == 0 || n_train + n_val >= n) {
    throw DataError("insufficient history: " + std::to_string(n) + " admissible windows (first anchor " +
                    std::to_string(first) + ", " + std::to_string(steps) +
                    " steps) cannot fill non-empty train/val/test splits");
  }
  SplitDatasets out;
  for (auto* ds : {&out.train, &out.val, &out.test}) {
    ds->tau = tau;
    ds->horizon = horizon;
    ds->segments = segments;
  }
  out.train.split = Split::train;
  out.val.split = Split::val;
  out.test.split = Split::test;
  out.train.anchors.assign(anchors.begin(), anchors.begin() + static_cast<std::ptrdiff_t>(n_train));
  out.val.anchors.assign(anchors.begin() + static_cast<std::ptrdiff_t>(n_train),
                         anchors.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  out.test.anchors.assign(anchors.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), anchors.end());
  return out;
}

SplitDatasets make_windows(const TrafficSeries& series, int tau, int horizon, const SegmentParams& segments) {
  return make_windows(series.steps, tau, horizon, segments);
}

}  // namespace gcnm
