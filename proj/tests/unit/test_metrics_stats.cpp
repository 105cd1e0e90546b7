// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "gcnm/error.hpp"
#include "gcnm/metrics.hpp"
#include "gcnm/rng.hpp"
#include "gcnm/stats.hpp"

using namespace gcnm;

namespace {

// Independent oracle: sign enumeration over all 2^n assignments.
double enumerate_wilcoxon(const std::vector<double>& d) {
  const std::size_t n = d.size();
  std::vector<double> mag(n);
  for (std::size_t i = 0; i < n; ++i) mag[i] = std::abs(d[i]);
  const auto r = average_ranks(mag);
  double w_obs = 0.0, total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    total += r[i];
    if (d[i] > 0) w_obs += r[i];
  }
  std::size_t le = 0, ge = 0;
  for (std::size_t s = 0; s < (std::size_t{1} << n); ++s) {
    double w = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      if (s >> i & 1) w += r[i];
    if (w <= w_obs + 1e-9) ++le;
    if (w >= w_obs - 1e-9) ++ge;
  }
  (void)total;
  return std::min(1.0, 2.0 * static_cast<double>(std::min(le, ge)) / static_cast<double>(std::size_t{1} << n));
}

ComparisonResult fixed_result() {
  ComparisonResult r;
  r.models = {"GCN-M", "GCN-M-obs", "MEAN-GCN-M", "KNN-GCN-M"};
  r.datasets = 12;
  r.friedman_statistic = 21.3;
  r.friedman_p = 9.1e-5;
  r.average_ranks = {1.25, 2.0, 3.25, 3.5};
  r.pairwise_p = Matrix(4, 4, 1.0);
  r.cliques = {{0, 1}, {2, 3}};
  return r;
}

std::string render(const ComparisonResult& r) {
  std::ostringstream out;
  emit_cd_diagram(r, out);
  return out.str();
}

std::size_t count(const std::string& s, const std::string& what) {
  std::size_t n = 0;
  for (auto pos = s.find(what); pos != std::string::npos; pos = s.find(what, pos + 1)) ++n;
  return n;
}

}  // namespace

TEST(Metrics, Examples) {
  const std::vector<double> pred{2, 4, 9, 1}, target{1, 2, 0, 4}, mask{1, 1, 1, 0};
  const auto m = masked_metrics(pred, target, mask);
  EXPECT_EQ(m.n, 2u);
  EXPECT_DOUBLE_EQ(*m.mae, 1.5);
  EXPECT_DOUBLE_EQ(*m.rmse, std::sqrt(2.5));
  EXPECT_DOUBLE_EQ(*m.mape, 0.5 * (1.0 + 1.0));
  const auto none = masked_metrics(pred, target, std::vector<double>(4, 0.0));
  EXPECT_FALSE(none.mae.has_value());
  EXPECT_FALSE(none.mape.has_value());
}

TEST(Metrics, ZeroTargetsKeptWithoutZeroMasking) {
  const std::vector<double> pred{2, 3}, target{1, 0}, mask{1, 1};
  const auto m = masked_metrics(pred, target, mask, false);
  EXPECT_EQ(m.n, 2u);
  EXPECT_EQ(m.n_mape, 1u);
  EXPECT_DOUBLE_EQ(*m.mae, 2.0);
}

TEST(Metrics, RandomAgainstBruteForce) {
  Rng rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> p(30), t(30), m(30);
    for (std::size_t i = 0; i < 30; ++i) {
      p[i] = rng.uniform(0, 70);
      t[i] = rng.uniform(0, 1) < 0.1 ? 0.0 : rng.uniform(0, 70);
      m[i] = rng.uniform(0, 1) < 0.3 ? 0.0 : 1.0;
    }
    double a = 0, s = 0, pc = 0;
    std::size_t n = 0, np = 0;
    for (std::size_t i = 0; i < 30; ++i) {
      if (m[i] == 0 || t[i] == 0) continue;
      a += std::abs(p[i] - t[i]);
      s += (p[i] - t[i]) * (p[i] - t[i]);
      pc += std::abs(p[i] - t[i]) / std::abs(t[i]);
      ++n;
      ++np;
    }
    const auto r = masked_metrics(p, t, m);
    ASSERT_EQ(r.n, n);
    EXPECT_EQ(*r.mae, a / n);
    EXPECT_EQ(*r.rmse, std::sqrt(s / n));
    EXPECT_EQ(*r.mape, pc / np);
    EXPECT_GE(*r.rmse, *r.mae);
  }
}

TEST(Metrics, ReportJsonUsesNullForUndefined) {
  MetricAccumulator acc(2);
  const std::vector<double> pred{1, 2}, target{3, 5}, mask{1, 0};  // horizon 2 empty
  acc.add(pred, target, mask);
  const auto report = make_report("M", "mix", 0.4, acc);
  const auto j = report.to_json();
  bool saw_null = false;
  for (const auto& rec : report.records)
    if (rec.horizon == "2") saw_null = !rec.values.mae.has_value();
  EXPECT_TRUE(saw_null);
  EXPECT_NE(j.dump().find("null"), std::string::npos);
  EXPECT_EQ(MetricReport::from_json(j).to_json(), j);
}

TEST(Stats, FriedmanExamples) {
  const auto r = friedman_test({{1, 1}, {2, 2}, {3, 3}});
  EXPECT_DOUBLE_EQ(r.statistic, 4.0);
  const auto tie = friedman_test({{5, 5, 5}, {5, 5, 5}});
  EXPECT_EQ(tie.statistic, 0.0);
  EXPECT_EQ(tie.p, 1.0);
  double sum = 0;
  for (double x : r.average_ranks) sum += x;
  EXPECT_DOUBLE_EQ(sum / 3.0, 2.0);
}

TEST(Stats, FriedmanMonotoneInvariance) {
  const std::vector<std::vector<double>> s{{1.0, 4.0, 2.5, 9.0}, {2.0, 3.0, 2.4, 1.0}, {3.0, 1.0, 7.0, 2.0}};
  auto t = s;
  for (auto& row : t)
    for (double& v : row) v = std::exp(v) + 3.0;
  EXPECT_DOUBLE_EQ(friedman_test(s).statistic, friedman_test(t).statistic);
}

TEST(Stats, WilcoxonExamples) {
  const std::vector<double> a{2, 3, 4, 5, 6}, b{1, 1, 1, 1, 1};
  EXPECT_DOUBLE_EQ(wilcoxon_signed_rank(a, b), 2.0 / 32.0);
  EXPECT_EQ(wilcoxon_signed_rank(a, a), 1.0);
  const std::vector<double> c{1, 2, 3}, d{0, 0, 0};
  EXPECT_THROW(wilcoxon_signed_rank(c, d), UsageError);
}

TEST(Stats, WilcoxonExactMatchesEnumeration) {
  Rng rng(3);
  for (std::size_t n = 5; n <= 10; ++n)
    for (int trial = 0; trial < 10; ++trial) {
      std::vector<double> a(n), b(n, 0.0), diff(n);
      for (std::size_t i = 0; i < n; ++i) {
        // Quantised so that ties occur.
        diff[i] = std::round(rng.uniform(-4, 4) * 2.0) / 2.0;
        if (diff[i] == 0.0) diff[i] = 0.5;
        a[i] = diff[i];
      }
      EXPECT_NEAR(wilcoxon_signed_rank(a, b), enumerate_wilcoxon(diff), 1e-12) << "n=" << n;
    }
}

TEST(Stats, HolmAdjust) {
  const std::vector<double> p{0.01, 0.04, 0.03};
  const auto adj = holm_adjust(p);
  EXPECT_DOUBLE_EQ(adj[0], 0.03);
  EXPECT_DOUBLE_EQ(adj[2], 0.06);
  EXPECT_DOUBLE_EQ(adj[1], 0.06);
}

TEST(Stats, HolmCliqueExamples) {
  const std::vector<double> ranks{1.0, 2.0, 3.0};
  EXPECT_EQ(holm_cliques(Matrix(3, 3, 1.0), ranks),
            (std::vector<std::vector<std::size_t>>{{0, 1, 2}}));
  EXPECT_EQ(holm_cliques(Matrix(3, 3, 0.0), ranks),
            (std::vector<std::vector<std::size_t>>{{0}, {1}, {2}}));
  Matrix p(3, 3, 0.001);
  p(0, 1) = p(1, 0) = 0.8;
  EXPECT_EQ(holm_cliques(p, ranks), (std::vector<std::vector<std::size_t>>{{0, 1}, {2}}));
}

TEST(CdDiagram, BarsFollowCliques) {
  ComparisonResult r = fixed_result();
  r.models = {"A", "B"};
  r.average_ranks = {1.4, 1.6};
  r.pairwise_p = Matrix(2, 2, 1.0);
  r.cliques = {{0, 1}};
  EXPECT_EQ(count(render(r), "stroke-width=\"4\""), 1u);
  r.cliques = {{0}, {1}};
  EXPECT_EQ(count(render(r), "stroke-width=\"4\""), 0u);
  EXPECT_EQ(render(r), render(r));
}

TEST(CdDiagram, GoldenFile) {
  const std::string svg = render(fixed_result());
  const std::string path = std::string(GCNM_TEST_DATA_DIR) + "/cd_golden.svg";
  if (std::getenv("GCNM_UPDATE_GOLDEN")) std::ofstream(path, std::ios::binary) << svg;
  std::ifstream in(path, std::ios::binary);
  ASSERT_TRUE(in) << path;
  std::ostringstream golden;
  golden << in.rdbuf();
  EXPECT_EQ(svg, golden.str());
}
