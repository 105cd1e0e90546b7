// SPDX-License-Identifier: Apache-2.0
#include "gcnm/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/special_functions/gamma.hpp>

#include "gcnm/error.hpp"

namespace gcnm {

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

FriedmanResult friedman_test(const std::vector<std::vector<double>>& scores) {
  const std::size_t k = scores.size();
  if (k < 2) throw UsageError("Friedman test needs at least 2 models");
  const std::size_t n = scores.front().size();
  if (n < 2) throw UsageError("Friedman test needs at least 2 datasets");
  for (const auto& row : scores)
    if (row.size() != n) throw UsageError("Friedman test: ragged score matrix");

  FriedmanResult r;
  r.average_ranks.assign(k, 0.0);
  bool all_tied = true;
  std::vector<double> column(k);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < k; ++i) column[i] = scores[i][j];
    for (std::size_t i = 1; i < k; ++i) all_tied = all_tied && column[i] == column[0];
    const auto ranks = average_ranks(column);
    for (std::size_t i = 0; i < k; ++i) r.average_ranks[i] += ranks[i];
  }
  for (double& v : r.average_ranks) v /= static_cast<double>(n);
  if (all_tied) return r;

  const double kd = static_cast<double>(k), nd = static_cast<double>(n);
  double sum_sq = 0.0;
  for (double v : r.average_ranks) sum_sq += v * v;
  r.statistic = std::max(0.0, 12.0 * nd / (kd * (kd + 1.0)) * (sum_sq - kd * (kd + 1.0) * (kd + 1.0) / 4.0));
  r.p = r.statistic > 0.0 ? boost::math::gamma_q((kd - 1.0) / 2.0, r.statistic / 2.0) : 1.0;
  return r;
}

double wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw UsageError("Wilcoxon test needs paired samples of equal length");
  std::vector<double> diff;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] - b[i] != 0.0) diff.push_back(a[i] - b[i]);
  const std::size_t n = diff.size();
  if (n == 0) return 1.0;
  if (n < 5) throw UsageError("Wilcoxon test needs at least 5 nonzero differences, got " + std::to_string(n));

  std::vector<double> mags(n);
  for (std::size_t i = 0; i < n; ++i) mags[i] = std::abs(diff[i]);
  const auto ranks = average_ranks(mags);

  if (n <= 12) {
    // Doubled ranks are integers even with ties.
    std::vector<std::size_t> r2(n);
    std::size_t total = 0, w = 0;
    for (std::size_t i = 0; i < n; ++i) {
      r2[i] = static_cast<std::size_t>(std::llround(2.0 * ranks[i]));
      total += r2[i];
      if (diff[i] > 0.0) w += r2[i];
    }
    std::vector<double> count(total + 1, 0.0);
    count[0] = 1.0;
    for (std::size_t r : r2)
      for (std::size_t s = total; s >= r; --s) {
        count[s] += count[s - r];
        if (s == r) break;
      }
    const double all = std::ldexp(1.0, static_cast<int>(n));
    double le = 0.0, ge = 0.0;
    for (std::size_t s = 0; s <= total; ++s) {
      if (s <= w) le += count[s];
      if (s >= w) ge += count[s];
    }
    return std::min(1.0, 2.0 * std::min(le, ge) / all);
  }

  double w = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    if (diff[i] > 0.0) w += ranks[i];
  const double nd = static_cast<double>(n);
  const double mean = nd * (nd + 1.0) / 4.0;
  double var = nd * (nd + 1.0) * (2.0 * nd + 1.0) / 24.0;
  std::vector<double> sorted = mags;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && sorted[j + 1] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i + 1);
    var -= (t * t * t - t) / 48.0;
    i = j + 1;
  }
  if (var <= 0.0) return 1.0;
  const double z = (w - mean) / std::sqrt(var);
  return std::min(1.0, std::erfc(std::abs(z) / std::sqrt(2.0)));
}

std::vector<double> holm_adjust(std::span<const double> p) {
  const std::size_t m = p.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p[a] < p[b]; });
  std::vector<double> adj(m);
  double running = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double v = std::min(1.0, static_cast<double>(m - i) * p[order[i]]);
    running = std::max(running, v);
    adj[order[i]] = running;
  }
  return adj;
}

std::vector<std::vector<std::size_t>> holm_cliques(const Matrix& pairwise_p, std::span<const double> ranks,
                                                   double alpha) {
  const std::size_t k = ranks.size();
  if (pairwise_p.rows() != k || pairwise_p.cols() != k) throw UsageError("pairwise p matrix must be k x k");
  std::vector<double> flat;
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = i + 1; j < k; ++j) flat.push_back(pairwise_p(i, j));
  const auto adj = holm_adjust(flat);
  std::vector<std::vector<bool>> reject(k, std::vector<bool>(k, false));
  std::size_t idx = 0;
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = i + 1; j < k; ++j) {
      reject[i][j] = reject[j][i] = adj[idx] <= alpha;
      ++idx;
    }

  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return ranks[a] < ranks[b]; });

  std::vector<std::vector<std::size_t>> cliques;
  std::size_t last_end = 0;
  bool any = false;
  for (std::size_t a = 0; a < k; ++a) {
    std::size_t b = a;
    while (b + 1 < k) {
      bool ok = true;
      for (std::size_t x = a; x <= b && ok; ++x) ok = !reject[order[x]][order[b + 1]];
      if (!ok) break;
      ++b;
    }
    if (any && b <= last_end) continue;  // contained in the previous run
    cliques.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(a),
                         order.begin() + static_cast<std::ptrdiff_t>(b + 1));
    last_end = b;
    any = true;
  }
  return cliques;
}

nlohmann::json ComparisonResult::to_json() const {
  nlohmann::json j;
  j["models"] = models;
  j["datasets"] = datasets;
  j["friedman_statistic"] = friedman_statistic;
  j["friedman_p"] = friedman_p;
  j["alpha"] = alpha;
  nlohmann::json ranks = nlohmann::json::object();
  for (std::size_t i = 0; i < models.size(); ++i) ranks[models[i]] = average_ranks[i];
  j["average_ranks"] = ranks;
  nlohmann::json pairs = nlohmann::json::array();
  for (std::size_t i = 0; i < models.size(); ++i)
    for (std::size_t k = i + 1; k < models.size(); ++k)
      pairs.push_back({{"a", models[i]}, {"b", models[k]}, {"p", pairwise_p(i, k)}});
  j["pairwise_p"] = pairs;
  nlohmann::json cl = nlohmann::json::array();
  for (const auto& c : cliques) {
    nlohmann::json names = nlohmann::json::array();
    for (auto idx : c) names.push_back(models[idx]);
    cl.push_back(names);
  }
  j["cliques"] = cl;
  return j;
}

ComparisonResult compare_models(const std::vector<std::string>& models,
                                const std::vector<std::vector<double>>& scores, double alpha) {
  if (models.size() != scores.size()) throw UsageError("one score row per model is required");
  ComparisonResult r;
  r.models = models;
  r.alpha = alpha;
  const auto f = friedman_test(scores);
  r.datasets = scores.front().size();
  r.friedman_statistic = f.statistic;
  r.friedman_p = f.p;
  r.average_ranks = f.average_ranks;
  const std::size_t k = models.size();
  r.pairwise_p = Matrix(k, k, 1.0);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = i + 1; j < k; ++j) r.pairwise_p(i, j) = r.pairwise_p(j, i) = wilcoxon_signed_rank(scores[i], scores[j]);
  r.cliques = holm_cliques(r.pairwise_p, r.average_ranks, alpha);
  return r;
}

}  // namespace gcnm
