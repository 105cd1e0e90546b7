// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "gcnm/data.hpp"

namespace gcnm {

struct SyntheticData {
  TrafficSeries series;
  PredefinedGraph graph;
};

// Nodes on a line with random spacing; directed edges both ways to the next
// one and two nodes.
PredefinedGraph make_corridor_graph(std::size_t nodes, std::uint64_t seed);

// 50 + 20 sin(2 pi t / period + phase_n), noise free, fully observed.
SyntheticData make_sinusoidal(std::size_t nodes, std::size_t steps, int period, std::uint64_t seed,
                              int step_minutes = 5);

// Speed-like series with morning and evening dips that drift along the
// corridor, day-to-day amplitude jitter and spatially shared AR(1) noise.
SyntheticData make_daily_periodic(std::size_t nodes, std::size_t days, int step_minutes, std::uint64_t seed);

// ISO-8601 stamps from 2024-01-01T00:00:00.
std::string synthetic_timestamp(std::size_t step, int step_minutes);

}  // namespace gcnm
