// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "gcnm/data.hpp"
#include "gcnm/forecaster.hpp"
#include "gcnm/masking.hpp"
#include "gcnm/params.hpp"
#include "gcnm/rng.hpp"
#include "gcnm/synthetic.hpp"
#include "gcnm/window.hpp"

namespace gcnm::test {

// Normalized synthetic series with optional injected gaps plus an assembler
// over it. Heap-allocated so the assembler's references stay put.
struct Fixture {
  TrafficSeries series;
  PredefinedGraph graph;
  std::unique_ptr<WindowAssembler> assembler;
  SplitDatasets windows;
};

inline std::unique_ptr<Fixture> make_fixture(const ModelConfig& cfg, std::size_t nodes, std::size_t days,
                                             int step_minutes, double missing_rate, std::uint64_t seed) {
  auto fx = std::make_unique<Fixture>();
  SyntheticData data = make_daily_periodic(nodes, days, step_minutes, seed);
  TrafficSeries s = data.series;
  if (missing_rate > 0.0) s = inject(s, MissingScenario{MissingKind::mix_range, missing_rate, seed + 1}, cfg.tau);
  fx->series = normalize(s);
  fx->graph = data.graph;
  fx->assembler = std::make_unique<WindowAssembler>(fx->series, fx->series, fx->graph,
                                                    cfg.assembler_options(step_minutes));
  fx->windows = make_windows(fx->series.steps, cfg.tau, cfg.horizon, cfg.segment_params(step_minutes));
  return fx;
}

// Parameter group used when reporting gradient checks.
inline std::string parameter_group(const std::string& name) {
  if (name.rfind("memory.decay", 0) == 0) return "decay";
  if (name.rfind("memory.", 0) == 0) return "memory";
  if (name.find("tcn_") != std::string::npos) return "tcn";
  if (name.rfind("skip", 0) == 0 || name.rfind("head.", 0) == 0) return "head";
  if (name.rfind("gru.", 0) == 0) return "gru";
  return "graph";
}

struct GroupCheck {
  double relative_error = 0.0;  // ||analytic - numeric|| / max(||analytic||, ||numeric||)
  double norm = 0.0;
  std::size_t entries = 0;
};

// Central differences of the model's training loss on one window.
inline std::map<std::string, GroupCheck> check_gradients(Model& model, const WindowTensors& w, double eps = 1e-5) {
  ParameterSet& params = model.parameters();
  params.zero_grad();
  model.accumulate_gradients(w, 1.0);
  std::map<std::string, std::vector<double>> analytic, numeric;
  for (Parameter* p : params.all()) {
    const std::string g = parameter_group(p->name);
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      double& v = p->value.data()[i];
      const double saved = v;
      v = saved + eps;
      const double up = model.objective(w);
      v = saved - eps;
      const double down = model.objective(w);
      v = saved;
      analytic[g].push_back(p->grad.data()[i]);
      numeric[g].push_back((up - down) / (2.0 * eps));
    }
  }
  std::map<std::string, GroupCheck> out;
  for (const auto& [g, a] : analytic) {
    const auto& n = numeric[g];
    double diff = 0.0, na = 0.0, nn = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      diff += (a[i] - n[i]) * (a[i] - n[i]);
      na += a[i] * a[i];
      nn += n[i] * n[i];
    }
    const double denom = std::max(std::sqrt(na), std::sqrt(nn));
    out[g] = {denom > 0.0 ? std::sqrt(diff) / denom : 0.0, std::sqrt(na), a.size()};
  }
  return out;
}

// Brute-force masked metrics used as an oracle against the library.
struct BruteMetrics {
  double mae = NAN, rmse = NAN, mape = NAN;
  std::size_t n = 0, n_mape = 0;
};

inline BruteMetrics brute_metrics(const std::vector<double>& pred, const std::vector<double>& target,
                                  const std::vector<double>& mask) {
  BruteMetrics b;
  double abs = 0.0, sq = 0.0, pct = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (mask[i] == 0.0 || target[i] == 0.0) continue;
    const double e = pred[i] - target[i];
    abs += std::fabs(e);
    sq += e * e;
    ++b.n;
    pct += std::fabs(e) / std::fabs(target[i]);
    ++b.n_mape;
  }
  if (b.n > 0) {
    b.mae = abs / static_cast<double>(b.n);
    b.rmse = std::sqrt(sq / static_cast<double>(b.n));
  }
  if (b.n_mape > 0) b.mape = pct / static_cast<double>(b.n_mape);
  return b;
}

}  // namespace gcnm::test
