// SPDX-License-Identifier: Apache-2.0
#include "gcnm/synthetic.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "gcnm/rng.hpp"

namespace gcnm {

std::string synthetic_timestamp(std::size_t step, int step_minutes) {
  using namespace std::chrono;
  const long long minutes = static_cast<long long>(step) * step_minutes;
  const sys_days day = sys_days{year{2024} / January / 1} + days{minutes / 1440};
  const year_month_day ymd{day};
  const long long rem = minutes % 1440;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02lld:%02lld:00", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), rem / 60, rem % 60);
  return buf;
}

namespace {

TrafficSeries blank_series(std::size_t nodes, std::size_t steps, int step_minutes) {
  TrafficSeries s(nodes, 1, steps);
  s.step_minutes = step_minutes;
  for (std::size_t n = 0; n < nodes; ++n) s.node_ids.push_back("s" + std::to_string(n));
  for (std::size_t t = 0; t < steps; ++t) s.timestamps.push_back(synthetic_timestamp(t, step_minutes));
  return s;
}

}  // namespace

PredefinedGraph make_corridor_graph(std::size_t nodes, std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0x67726170ULL));
  std::vector<double> pos(nodes, 0.0);
  for (std::size_t i = 1; i < nodes; ++i) pos[i] = pos[i - 1] + rng.uniform(0.5, 2.0);
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < nodes; ++i) {
    for (std::size_t j = i + 1; j < nodes && j <= i + 2; ++j) {
      const double dist = pos[j] - pos[i];
      edges.push_back({i, j, dist});
      edges.push_back({j, i, dist});
    }
  }
  return build_predefined_graph(nodes, std::move(edges));
}

SyntheticData make_sinusoidal(std::size_t nodes, std::size_t steps, int period, std::uint64_t seed,
                              int step_minutes) {
  Rng rng(derive_seed(seed, 0x73696eULL));
  SyntheticData d{blank_series(nodes, steps, step_minutes), make_corridor_graph(nodes, seed)};
  for (std::size_t n = 0; n < nodes; ++n) {
    const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    for (std::size_t t = 0; t < steps; ++t)
      d.series.values[d.series.index(t, n)] =
          50.0 + 20.0 * std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / period + phase);
  }
  return d;
}

SyntheticData make_daily_periodic(std::size_t nodes, std::size_t days, int step_minutes, std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0x6461696cULL));
  const std::size_t per_day = static_cast<std::size_t>(1440 / step_minutes);
  const std::size_t steps = days * per_day;
  SyntheticData d{blank_series(nodes, steps, step_minutes), make_corridor_graph(nodes, seed)};

  std::vector<double> depth(nodes), lag(nodes), free_flow(nodes);
  for (std::size_t n = 0; n < nodes; ++n) {
    depth[n] = rng.uniform(15.0, 30.0);
    lag[n] = 1.5 * static_cast<double>(n) / static_cast<double>(nodes);
    free_flow[n] = rng.uniform(58.0, 68.0);
  }
  std::vector<double> day_scale(days);
  for (auto& s : day_scale) s = rng.uniform(0.85, 1.15);

  std::vector<double> local(nodes, 0.0);
  double shared = 0.0;
  for (std::size_t t = 0; t < steps; ++t) {
    const double hour = static_cast<double>(t % per_day) * step_minutes / 60.0;
    shared = 0.8 * shared + rng.normal() * 1.0;
    for (std::size_t n = 0; n < nodes; ++n) {
      local[n] = 0.6 * local[n] + rng.normal() * 1.0;
      const double am = hour - 8.0 - lag[n];
      const double pm = hour - 17.5 - lag[n];
      const double dip = std::exp(-am * am / (2.0 * 1.5 * 1.5)) + 0.8 * std::exp(-pm * pm / (2.0 * 2.0 * 2.0));
      const double v = free_flow[n] - depth[n] * day_scale[t / per_day] * dip + shared + local[n];
      d.series.values[d.series.index(t, n)] = std::max(5.0, v);
    }
  }
  return d;
}

}  // namespace gcnm
