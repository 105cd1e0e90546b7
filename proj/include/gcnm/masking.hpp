// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "gcnm/data.hpp"

namespace gcnm {

enum class MissingKind { short_range, long_range, mix_range };

MissingKind parse_missing_kind(std::string_view text);  // short|long|mix
std::string_view missing_kind_name(MissingKind kind);

struct MissingScenario {
  MissingKind kind = MissingKind::mix_range;
  double rate = 0.1;
  std::uint64_t seed = 0;
};

// One drawn block: `length` consecutive steps on each listed node.
struct InjectionEvent {
  std::size_t start = 0;
  std::size_t length = 0;
  std::vector<std::size_t> nodes;
};

// Removes random (node subset x all features x time block) cuboids until
// the missing fraction of the series first reaches `rate`. Existing missing
// entries count toward the rate and are never restored.
// `events`, when given, receives every drawn block.
TrafficSeries inject(const TrafficSeries& series, const MissingScenario& scenario, int tau,
                     std::vector<InjectionEvent>* events = nullptr);

// Same procedure restricted to timestamps [t_begin, t_end); the rate is
// measured within that range only.
void inject_range(TrafficSeries& series, std::size_t t_begin, std::size_t t_end,
                  const MissingScenario& scenario, int tau, std::vector<InjectionEvent>* events = nullptr);

// Injects into the train/val/test timestamp ranges independently (seed
// derived per split).
TrafficSeries inject_per_split(const TrafficSeries& series, const MissingScenario& scenario, int tau,
                               std::array<double, 3> ratios = {0.7, 0.1, 0.2});

struct MaskStats {
  double missing_fraction = 0.0;
  // run length -> number of maximal consecutive missing runs (per node and feature)
  std::map<std::size_t, std::size_t> block_length_histogram;
};

MaskStats mask_stats(const TrafficSeries& series);

}  // namespace gcnm
