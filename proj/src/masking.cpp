// SPDX-License-Identifier: Apache-2.0
#include "gcnm/masking.hpp"

#include <cmath>
#include <sstream>

#include "gcnm/error.hpp"
#include "gcnm/rng.hpp"

namespace gcnm {

MissingKind parse_missing_kind(std::string_view text) {
  if (text == "short" || text == "short_range") return MissingKind::short_range;
  if (text == "long" || text == "long_range") return MissingKind::long_range;
  if (text == "mix" || text == "mix_range") return MissingKind::mix_range;
  throw UsageError("unknown scenario '" + std::string(text) + "' (expected short, long or mix)");
}

std::string_view missing_kind_name(MissingKind kind) {
  switch (kind) {
    case MissingKind::short_range:
      return "short";
    case MissingKind::long_range:
      return "long";
    case MissingKind::mix_range:
      return "mix";
  }
  return "?";
}

void inject_range(TrafficSeries& series, std::size_t t_begin, std::size_t t_end,
                  const MissingScenario& scenario, int tau, std::vector<InjectionEvent>* events) {
  if (!(scenario.rate > 0.0 && scenario.rate < 1.0))
    throw UsageError("missing rate must lie strictly between 0 and 1");
  if (tau < 1) throw UsageError("tau must be >= 1");
  if (t_end > series.steps || t_begin >= t_end) throw UsageError("inject: empty or invalid time range");

  const std::size_t span = t_end - t_begin;
  const std::size_t per_step = series.nodes * series.features;
  const std::size_t total = span * per_step;
  std::size_t missing = 0;
  for (std::size_t t = t_begin; t < t_end; ++t)
    for (std::size_t i = 0; i < per_step; ++i)
      if (series.mask[t * per_step + i] == 0.0) ++missing;

  const double existing = static_cast<double>(missing) / static_cast<double>(total);
  if (existing >= scenario.rate) {
    std::ostringstream msg;
    msg << "requested missing rate " << scenario.rate << " does not exceed the existing missing fraction "
        << existing << "; choose a larger rate or data with fewer gaps";
    throw DataError(msg.str());
  }

  Rng rng(scenario.seed);
  const auto target = static_cast<double>(total) * scenario.rate;
  while (static_cast<double>(missing) < target) {
    const auto n_nodes = static_cast<std::size_t>(rng.uniform_int(1, static_cast<std::int64_t>(series.nodes)));
    std::size_t length = 1;
    switch (scenario.kind) {
      case MissingKind::short_range:
        length = 1;
        break;
      case MissingKind::long_range:
        length = static_cast<std::size_t>(tau);
        break;
      case MissingKind::mix_range:
        length = static_cast<std::size_t>(rng.uniform_int(1, tau));
        break;
    }
    length = std::min(length, span);
    const auto start = t_begin + static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(span - length)));
    const auto nodes = rng.sample_without_replacement(series.nodes, n_nodes);
    if (events) events->push_back({start, length, nodes});
    for (std::size_t n : nodes) {
      for (std::size_t t = start; t < start + length; ++t) {
        for (std::size_t f = 0; f < series.features; ++f) {
          const std::size_t i = series.index(t, n, f);
          if (series.mask[i] != 0.0) {
            series.mask[i] = 0.0;
            series.values[i] = 0.0;
            ++missing;
          }
        }
      }
    }
  }
}

TrafficSeries inject(const TrafficSeries& series, const MissingScenario& scenario, int tau,
                     std::vector<InjectionEvent>* events) {
  TrafficSeries out = series;
  inject_range(out, 0, out.steps, scenario, tau, events);
  return out;
}

TrafficSeries inject_per_split(const TrafficSeries& series, const MissingScenario& scenario, int tau,
                               std::array<double, 3> ratios) {
  TrafficSeries out = series;
  const std::size_t t_train = train_steps(series.steps, ratios[0]);
  const std::size_t t_val = train_steps(series.steps, ratios[0] + ratios[1]);
  const std::size_t bounds[4] = {0, t_train, t_val, series.steps};
  for (std::size_t s = 0; s < 3; ++s) {
    if (bounds[s] >= bounds[s + 1]) continue;
    MissingScenario part = scenario;
    part.seed = derive_seed(scenario.seed, s);
    inject_range(out, bounds[s], bounds[s + 1], part, tau);
  }
  return out;
}

MaskStats mask_stats(const TrafficSeries& series) {
  MaskStats stats;
  if (series.entry_count() == 0) return stats;
  std::size_t missing = 0;
  for (double m : series.mask) missing += m == 0.0 ? 1 : 0;
  stats.missing_fraction = static_cast<double>(missing) / static_cast<double>(series.entry_count());
  for (std::size_t n = 0; n < series.nodes; ++n) {
    for (std::size_t f = 0; f < series.features; ++f) {
      std::size_t run = 0;
      for (std::size_t t = 0; t < series.steps; ++t) {
        if (!series.observed(t, n, f)) {
          ++run;
        } else if (run > 0) {
          ++stats.block_length_histogram[run];
          run = 0;
        }
      }
      if (run > 0) ++stats.block_length_histogram[run];
    }
  }
  return stats;
}

}  // namespace gcnm
