// SPDX-License-Identifier: Apache-2.0
#include "gcnm/window.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "gcnm/error.hpp"

namespace gcnm {

namespace {

Matrix masked_snapshot(const TrafficSeries& s, std::size_t t) {
  Matrix m(s.nodes, s.features);
  for (std::size_t n = 0; n < s.nodes; ++n)
    for (std::size_t f = 0; f < s.features; ++f)
      if (s.observed(t, n, f)) m(n, f) = s.value(t, n, f);
  return m;
}

LocalStats complete_stats(const Matrix& x) {
  const std::size_t r = x.rows(), c = x.cols();
  return LocalStats{x, Matrix(r, c, 1.0), Matrix(r, c), Matrix(r, c), Matrix(r, c), Matrix(r, c), Matrix(r, c),
                    Matrix(r, c)};
}

}  // namespace

WindowAssembler::WindowAssembler(const TrafficSeries& input, const TrafficSeries& target,
                                 const PredefinedGraph& graph, AssemblerOptions options)
    : input_(input), target_(target), options_(std::move(options)), neighbors_(graph) {
  if (input.nodes != target.nodes || input.steps != target.steps || input.features != target.features)
    throw DataError("input and target series differ in shape");
  if (graph.nodes() != input.nodes) throw SchemaError("graph node count does not match the series");
  if (options_.tau < 1 || options_.horizon < 1) throw UsageError("tau and horizon must be >= 1");
  stats_options_.L = options_.L;
  stats_options_.S = options_.S;
  stats_options_.spatial_scale = graph.sigma > 0.0 ? graph.sigma : 1.0;
  cache_enabled_ = input.entry_count() <= options_.stats_cache_limit;
  if (cache_enabled_) cache_.resize(input.steps);
}

const LocalStats& WindowAssembler::stats_at(std::size_t t) const {
  if (cache_enabled_) {
    if (!cache_[t]) cache_[t] = compute_local_stats(input_, t, neighbors_, stats_options_);
    return *cache_[t];
  }
  scratch_ = compute_local_stats(input_, t, neighbors_, stats_options_);
  return scratch_;
}

void WindowAssembler::fill_block(std::span<const std::int64_t> indices, Sequence& out) const {
  const std::size_t N = input_.nodes, F = input_.features, len = indices.size();
  if (options_.impute == ImputeKind::none) {
    for (auto t : indices) out.push_back(masked_snapshot(input_, static_cast<std::size_t>(t)));
    return;
  }
  double total = 0.0, count = 0.0;
  for (auto t : indices)
    for (std::size_t n = 0; n < N; ++n)
      for (std::size_t f = 0; f < F; ++f)
        if (input_.observed(t, n, f)) {
          total += input_.value(t, n, f);
          count += 1.0;
        }
  const double fallback = count > 0.0 ? total / count : 0.0;
  const std::size_t base = out.size();
  for (std::size_t k = 0; k < len; ++k) out.emplace_back(N, F);
  std::vector<double> v(len), m(len);
  for (std::size_t n = 0; n < N; ++n) {
    for (std::size_t f = 0; f < F; ++f) {
      for (std::size_t k = 0; k < len; ++k) {
        const auto t = static_cast<std::size_t>(indices[k]);
        m[k] = input_.observed(t, n, f) ? 1.0 : 0.0;
        v[k] = m[k] != 0.0 ? input_.value(t, n, f) : 0.0;
      }
      const auto filled = impute_column(options_.impute, v, m, fallback);
      for (std::size_t k = 0; k < len; ++k) out[base + k](n, f) = filled[k];
    }
  }
}

WindowTensors WindowAssembler::assemble(std::size_t anchor) const {
  const auto tau = static_cast<std::size_t>(options_.tau);
  const auto horizon = static_cast<std::size_t>(options_.horizon);
  if (anchor < tau || anchor + horizon > input_.steps)
    throw DataError("anchor " + std::to_string(anchor) + " has no complete input/target window");
  const auto segments = segment_index(static_cast<std::int64_t>(anchor), options_.segments).concatenated();
  for (auto s : segments)
    if (s < 0 || static_cast<std::size_t>(s) >= input_.steps)
      throw DataError("anchor " + std::to_string(anchor) + " lacks memory history");

  WindowTensors w;
  w.anchor = anchor;
  std::vector<std::int64_t> input_idx(tau);
  for (std::size_t k = 0; k < tau; ++k) input_idx[k] = static_cast<std::int64_t>(anchor - tau + k);
  fill_block(input_idx, w.inputs);
  w.steps.reserve(tau);
  if (options_.impute == ImputeKind::none) {
    for (std::size_t k = 0; k < tau; ++k) w.steps.push_back(stats_at(anchor - tau + k));
  } else {
    for (const auto& x : w.inputs) w.steps.push_back(complete_stats(x));
  }

  w.slots.reserve(segments.size());
  if (options_.impute == ImputeKind::none) {
    fill_block(segments, w.slots);
  } else {
    for (std::size_t b = 0; b < segments.size(); b += tau) {
      const std::size_t len = std::min(tau, segments.size() - b);
      fill_block(std::span<const std::int64_t>(segments).subspan(b, len), w.slots);
    }
  }

  w.target = Matrix(target_.nodes, horizon);
  w.target_mask = Matrix(target_.nodes, horizon);
  for (std::size_t n = 0; n < target_.nodes; ++n) {
    for (std::size_t k = 0; k < horizon; ++k) {
      if (target_.observed(anchor + k, n, 0)) {
        w.target(n, k) = target_.value(anchor + k, n, 0);
        w.target_mask(n, k) = 1.0;
      }
    }
  }
  return w;
}

WindowSet::WindowSet(const WindowAssembler& assembler, std::vector<std::size_t> anchors, bool precompute)
    : assembler_(assembler), anchors_(std::move(anchors)) {
  if (precompute) {
    windows_.reserve(anchors_.size());
    for (auto a : anchors_) windows_.push_back(assembler_.assemble(a));
  }
}

const WindowTensors& WindowSet::at(std::size_t i) const {
  if (!windows_.empty()) return windows_[i];
  scratch_ = assembler_.assemble(anchors_[i]);
  return scratch_;
}

}  // namespace gcnm
