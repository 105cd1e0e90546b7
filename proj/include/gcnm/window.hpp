// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "gcnm/data.hpp"
#include "gcnm/impute.hpp"
#include "gcnm/matrix.hpp"
#include "gcnm/memory.hpp"

namespace gcnm {

// Everything a model needs for one anchor, already in normalized units.
struct WindowTensors {
  std::size_t anchor = 0;
  std::vector<LocalStats> steps;  // tau entries, input order
  Sequence inputs;                // tau raw snapshots (N x F), missing as 0
  Sequence slots;                 // memory slots, [hourly | daily | weekly]
  Matrix target;                  // N x horizon, feature 0
  Matrix target_mask;
};

struct AssemblerOptions {
  int tau = 12;
  int horizon = 12;
  SegmentParams segments;
  int L = 12;
  int S = 5;
  // Two-step mode: every tau-long block (input and each memory segment) is
  // imputed on its own and then treated as fully observed.
  ImputeKind impute = ImputeKind::none;
  // Per-timestamp statistics are memoized when T*N*F is below this.
  std::size_t stats_cache_limit = 4'000'000;
};

class WindowAssembler {
 public:
  // `input` feeds the model inputs and memory; `target` supplies targets
  // (the un-injected series for test windows).
  WindowAssembler(const TrafficSeries& input, const TrafficSeries& target, const PredefinedGraph& graph,
                  AssemblerOptions options);

  WindowTensors assemble(std::size_t anchor) const;
  const AssemblerOptions& options() const { return options_; }
  const NeighborTable& neighbors() const { return neighbors_; }
  const LocalStatsOptions& stats_options() const { return stats_options_; }

 private:
  const LocalStats& stats_at(std::size_t t) const;
  void fill_block(std::span<const std::int64_t> indices, Sequence& out) const;

  const TrafficSeries& input_;
  const TrafficSeries& target_;
  AssemblerOptions options_;
  NeighborTable neighbors_;
  LocalStatsOptions stats_options_;
  bool cache_enabled_ = false;
  mutable std::vector<std::optional<LocalStats>> cache_;
  mutable LocalStats scratch_;
};

// Materialized or lazily assembled windows for one split.
class WindowSet {
 public:
  WindowSet(const WindowAssembler& assembler, std::vector<std::size_t> anchors, bool precompute);

  std::size_t size() const { return anchors_.size(); }
  std::size_t anchor(std::size_t i) const { return anchors_[i]; }
  // Reference stays valid until the next call when not precomputed.
  const WindowTensors& at(std::size_t i) const;

 private:
  const WindowAssembler& assembler_;
  std::vector<std::size_t> anchors_;
  std::vector<WindowTensors> windows_;
  mutable WindowTensors scratch_;
};

}  // namespace gcnm
