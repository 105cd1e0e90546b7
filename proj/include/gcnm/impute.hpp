// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "gcnm/data.hpp"

namespace gcnm {

enum class ImputeKind { none, mean, knn };

ImputeKind parse_impute_kind(std::string_view text);  // none|mean|knn
std::string_view impute_kind_name(ImputeKind kind);

// Single column (one node, one feature, consecutive steps). Observed entries
// are copied unchanged. A column with nothing observed is filled with
// `fallback` and reported through *flagged.
std::vector<double> impute_mean_column(std::span<const double> values, std::span<const double> mask,
                                       double fallback, bool* flagged = nullptr);
// Linear interpolation between the previous and next observed values; runs
// touching the start or end copy the nearest observed value.
std::vector<double> impute_knn_column(std::span<const double> values, std::span<const double> mask,
                                      double fallback, bool* flagged = nullptr);

std::vector<double> impute_column(ImputeKind kind, std::span<const double> values, std::span<const double> mask,
                                  double fallback, bool* flagged = nullptr);

// Whole-series imputation per node and feature; all masks become 1.
// Fully missing nodes fall back to the global observed mean and are listed
// in *flagged_nodes.
TrafficSeries impute_mean(const TrafficSeries& series, std::vector<std::size_t>* flagged_nodes = nullptr);
TrafficSeries impute_knn(const TrafficSeries& series, std::vector<std::size_t>* flagged_nodes = nullptr);

}  // namespace gcnm
