// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace gcnm {

struct MetricValues {
  std::optional<double> mae;
  std::optional<double> rmse;
  std::optional<double> mape;  // fraction, not percent
  std::size_t n = 0;           // entries in MAE/RMSE
  std::size_t n_mape = 0;      // entries in MAPE (nonzero targets)
};

// Entries count when mask != 0 and, with zero_masking, target != 0.
// MAPE always skips zero targets. Empty sets give nullopt, never 0.
MetricValues masked_metrics(std::span<const double> pred, std::span<const double> target,
                            std::span<const double> mask, bool zero_masking = true);

// Streams predictions window by window and slices by horizon.
class MetricAccumulator {
 public:
  explicit MetricAccumulator(std::size_t horizon, bool zero_masking = true);

  // pred/target/mask are N x horizon, row-major, in original units.
  void add(std::span<const double> pred, std::span<const double> target, std::span<const double> mask);

  // 1-based horizon; 0 means the average over all horizons.
  MetricValues at(std::size_t horizon) const;
  std::size_t horizon() const { return horizon_; }

 private:
  struct Sums {
    double abs = 0.0, sq = 0.0, pct = 0.0;
    std::size_t n = 0, n_pct = 0;
  };
  static MetricValues finish(const Sums& s);

  std::size_t horizon_;
  bool zero_masking_;
  std::vector<Sums> per_h_;
  Sums total_;
};

struct MetricRecord {
  std::string model;
  std::string scenario;
  double rate = 0.0;
  std::string horizon;  // "1".."T_p" or "avg"
  MetricValues values;
};

struct MetricReport {
  std::vector<MetricRecord> records;

  nlohmann::json to_json() const;
  static MetricReport from_json(const nlohmann::json& j);
};

MetricReport make_report(const std::string& model, const std::string& scenario, double rate,
                         const MetricAccumulator& acc);

}  // namespace gcnm
