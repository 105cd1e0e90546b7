// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "gcnm/matrix.hpp"

namespace gcnm {

// 1-based ascending ranks, ties share their average rank.
std::vector<double> average_ranks(std::span<const double> values);

struct FriedmanResult {
  double statistic = 0.0;
  double p = 1.0;
  std::vector<double> average_ranks;  // per model, lower = better
};

// scores[model][dataset]; lower is better. Needs k >= 2 models and n >= 2 datasets.
FriedmanResult friedman_test(const std::vector<std::vector<double>>& scores);

// Two-sided p. Zero differences are dropped; none left gives 1. Exact null
// distribution for n <= 12, normal approximation with tie correction above.
// Throws UsageError for 1..4 nonzero differences.
double wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b);

// Holm step-down adjusted p-values, same order as the input.
std::vector<double> holm_adjust(std::span<const double> p);

// pairwise_p is k x k symmetric (diagonal ignored). Cliques are maximal runs of
// rank-adjacent models with no Holm-rejected pair inside; each lists model
// indices in rank order. Singletons appear when a model joins no larger run.
std::vector<std::vector<std::size_t>> holm_cliques(const Matrix& pairwise_p, std::span<const double> ranks,
                                                   double alpha = 0.05);

struct ComparisonResult {
  std::vector<std::string> models;
  std::size_t datasets = 0;
  double friedman_statistic = 0.0;
  double friedman_p = 1.0;
  std::vector<double> average_ranks;
  Matrix pairwise_p;
  std::vector<std::vector<std::size_t>> cliques;
  double alpha = 0.05;

  nlohmann::json to_json() const;
};

ComparisonResult compare_models(const std::vector<std::string>& models,
                                const std::vector<std::vector<double>>& scores, double alpha = 0.05);

// Critical-difference style SVG: rank axis, labelled models, one thick bar per
// clique of two or more models. Output depends only on the result.
void emit_cd_diagram(const ComparisonResult& result, std::ostream& out);
void emit_cd_diagram(const ComparisonResult& result, const std::filesystem::path& path);

}  // namespace gcnm
