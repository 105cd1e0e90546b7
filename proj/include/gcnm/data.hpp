// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "gcnm/matrix.hpp"

namespace gcnm {

// Observation tensor with its mask. Missing entries are stored as exactly 0
// with mask 0; a genuine zero reading has mask 1.
// Storage is timestamp-major ([T][N][F]) so one snapshot is contiguous.
struct TrafficSeries {
  std::size_t nodes = 0;
  std::size_t features = 1;
  std::size_t steps = 0;
  std::vector<double> values;
  std::vector<double> mask;
  std::vector<std::string> node_ids;
  std::vector<std::string> timestamps;
  std::string time_column = "timestamp";
  int step_minutes = 5;
  // Divisor applied by normalize(); 1 for raw data.
  double scale_factor = 1.0;

  TrafficSeries() = default;
  TrafficSeries(std::size_t n, std::size_t f, std::size_t t)
      : nodes(n), features(f), steps(t), values(n * f * t, 0.0), mask(n * f * t, 1.0) {}

  std::size_t index(std::size_t t, std::size_t n, std::size_t f = 0) const {
    return (t * nodes + n) * features + f;
  }
  double value(std::size_t t, std::size_t n, std::size_t f = 0) const { return values[index(t, n, f)]; }
  bool observed(std::size_t t, std::size_t n, std::size_t f = 0) const {
    return mask[index(t, n, f)] != 0.0;
  }
  void set_missing(std::size_t t, std::size_t n, std::size_t f = 0) {
    values[index(t, n, f)] = 0.0;
    mask[index(t, n, f)] = 0.0;
  }
  std::size_t entry_count() const { return values.size(); }
  // N x F snapshot of values (or mask) at one timestamp.
  Matrix snapshot(std::size_t t) const;
  Matrix mask_snapshot(std::size_t t) const;
};

struct Edge {
  std::size_t from = 0;
  std::size_t to = 0;
  double distance = 0.0;
};

struct PredefinedGraph {
  Matrix adjacency;
  std::vector<Edge> edges;
  // Kernel bandwidth: population std-dev of the edge distances.
  double sigma = 0.0;
  double kappa = 0.1;

  std::size_t nodes() const { return adjacency.rows(); }
  double max_distance() const;
};

// Gaussian kernel exp(-dist^2 / sigma^2), weights below kappa dropped,
// unit diagonal.
PredefinedGraph build_predefined_graph(std::size_t nodes, std::vector<Edge> edges, double kappa = 0.1);

TrafficSeries read_series_csv(std::istream& in);
TrafficSeries read_series_csv(const std::filesystem::path& path);
void write_series_csv(const TrafficSeries& series, std::ostream& out);
void write_series_csv(const TrafficSeries& series, const std::filesystem::path& path);

PredefinedGraph read_graph_csv(std::istream& in, const std::vector<std::string>& node_ids);
PredefinedGraph read_graph_csv(const std::filesystem::path& path,
                               const std::vector<std::string>& node_ids);
void write_graph_csv(const PredefinedGraph& graph, const std::vector<std::string>& node_ids,
                     std::ostream& out);

std::pair<TrafficSeries, PredefinedGraph> ingest_series(const std::filesystem::path& series_file,
                                                        const std::filesystem::path& graph_file);

// Fraction of cells that are missing or observed as exactly zero.
double zero_or_missing_ratio(const TrafficSeries& series);

// Number of leading timestamps in the training split.
std::size_t train_steps(std::size_t steps, double train_fraction);

// Divides by the maximum observed value within the first train_fraction of
// timestamps. Masked entries stay 0.
TrafficSeries normalize(const TrafficSeries& series, double train_fraction = 0.7);
TrafficSeries denormalize(const TrafficSeries& series);
// Applies an existing scale factor (e.g. one computed on the uninjected data).
TrafficSeries normalize_with(const TrafficSeries& series, double scale_factor);

void write_scale_sidecar(double scale_factor, const std::filesystem::path& path);
double read_scale_sidecar(const std::filesystem::path& path);

struct SegmentParams {
  int tau = 12;
  int n_h = 2;
  int n_d = 2;
  int n_w = 2;
  int samples_per_day = 288;
  int samples_per_week = 2016;

  static SegmentParams for_step(int step_minutes, int tau = 12, int n_h = 2, int n_d = 2, int n_w = 2);
  int slot_count() const { return (n_h + n_d + n_w) * tau; }
  int half_window() const { return tau / 2; }
};

struct SegmentIndex {
  std::vector<std::int64_t> hourly;
  std::vector<std::int64_t> daily;
  std::vector<std::int64_t> weekly;

  // [hourly || daily || weekly], the memory slot order.
  std::vector<std::int64_t> concatenated() const;
};

// Recent steps [t - n_h*tau, t); for j = n..1 the periodic segments
// [t - j*T - tau/2, t - j*T - tau/2 + tau).
SegmentIndex segment_index(std::int64_t anchor, const SegmentParams& params);

// Smallest anchor whose every segment index is >= 0 and whose input window fits.
std::int64_t first_admissible_anchor(const SegmentParams& params);

enum class Split { train = 0, val = 1, test = 2 };
const char* split_name(Split split);

struct WindowedDataset {
  Split split = Split::train;
  int tau = 12;
  int horizon = 12;
  SegmentParams segments;
  // Anchor t: input covers [t - tau, t), target covers [t, t + horizon).
  std::vector<std::size_t> anchors;

  std::size_t size() const { return anchors.size(); }
};

struct SplitDatasets {
  WindowedDataset train;
  WindowedDataset val;
  WindowedDataset test;

  const WindowedDataset& get(Split s) const;
};

// Admissible anchors in chronological order, split 70/10/20 by count into
// contiguous blocks.
SplitDatasets make_windows(std::size_t steps, int tau, int horizon, const SegmentParams& segments,
                           std::array<double, 3> ratios = {0.7, 0.1, 0.2});
SplitDatasets make_windows(const TrafficSeries& series, int tau, int horizon,
                           const SegmentParams& segments);

}  // namespace gcnm
