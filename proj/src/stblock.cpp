// SPDX-License-Identifier: Apache-2.0
#include "gcnm/stblock.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "gcnm/error.hpp"

namespace gcnm {

namespace {

std::size_t reach(int kernel, int dilation) { return static_cast<std::size_t>(dilation) * (kernel - 1); }

Sequence zeros_like(const Sequence& s) {
  Sequence out;
  out.reserve(s.size());
  for (const auto& m : s) out.emplace_back(m.rows(), m.cols());
  return out;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

Sequence dilated_causal_conv(const Sequence& in, std::span<const Matrix* const> taps, const Matrix* bias,
                             int dilation) {
  if (taps.empty()) throw std::invalid_argument("convolution needs at least one tap");
  if (dilation < 1) throw std::invalid_argument("dilation must be positive");
  const std::size_t r = reach(static_cast<int>(taps.size()), dilation);
  if (in.size() <= r)
    throw std::length_error("sequence of length " + std::to_string(in.size()) + " too short; need at least " +
                            std::to_string(r + 1));
  const std::size_t out_len = in.size() - r;
  Sequence out;
  out.reserve(out_len);
  for (std::size_t j = 0; j < out_len; ++j) {
    Matrix o(in[0].rows(), taps[0]->cols());
    if (bias != nullptr) add_row_broadcast(bias->row(0), o);
    for (std::size_t s = 0; s < taps.size(); ++s) matmul_acc(in[j + r - dilation * s], *taps[s], o);
    out.push_back(std::move(o));
  }
  return out;
}

void dilated_causal_conv_backward(const Sequence& in, const TemporalLayer& layer, const Sequence& dout,
                                  Sequence& din) {
  const std::size_t r = reach(static_cast<int>(layer.taps.size()), layer.dilation);
  for (std::size_t j = 0; j < dout.size(); ++j) {
    if (layer.bias != nullptr) accumulate_column_sums(dout[j], layer.bias->grad);
    for (std::size_t s = 0; s < layer.taps.size(); ++s) {
      const std::size_t idx = j + r - layer.dilation * s;
      matmul_tn_acc(in[idx], dout[j], layer.taps[s]->grad);
      matmul_nt_acc(dout[j], layer.taps[s]->value, din[idx]);
    }
  }
}

std::size_t conv_output_length(std::size_t in_length, int kernel, std::span<const int> dilations) {
  std::size_t total = 0;
  for (int d : dilations) total += reach(kernel, d);
  if (in_length <= total)
    throw std::length_error("sequence of length " + std::to_string(in_length) + " too short; need at least " +
                            std::to_string(total + 1));
  return in_length - total;
}

GatedTcn::GatedTcn(ParameterSet& params, const std::string& prefix, std::size_t d, int kernel,
                   std::vector<int> dilations, Rng& rng)
    : kernel_(kernel), dilations_(std::move(dilations)) {
  if (kernel < 1) throw UsageError("model.kernel must be >= 1");
  if (dilations_.empty()) throw UsageError("model.dilations must not be empty");
  for (int dil : dilations_)
    if (dil < 1) throw UsageError("model.dilations must be positive");
  const std::size_t fan_in = d * static_cast<std::size_t>(kernel);
  for (const char* branch : {"filter", "gate"}) {
    auto& stack = std::string(branch) == "filter" ? filter : gate;
    for (std::size_t l = 0; l < dilations_.size(); ++l) {
      TemporalLayer layer;
      layer.dilation = dilations_[l];
      const std::string base = prefix + branch + std::to_string(l) + "_";
      for (int s = 0; s < kernel; ++s) {
        layer.taps.push_back(&params.create(base + "tap" + std::to_string(s), d, d));
        init_uniform_fan_in(layer.taps.back()->value, fan_in, rng);
      }
      layer.bias = &params.create(base + "bias", 1, d);
      init_uniform_fan_in(layer.bias->value, fan_in, rng);
      stack.push_back(layer);
    }
  }
}

std::size_t GatedTcn::output_length(std::size_t in_length) const {
  return conv_output_length(in_length, kernel_, dilations_);
}

Sequence GatedTcn::forward(const Sequence& in, Cache& cache) const {
  auto run = [](const std::vector<TemporalLayer>& stack, const Sequence& x, std::vector<Sequence>& inputs) {
    inputs.clear();
    Sequence cur = x;
    for (const auto& layer : stack) {
      std::vector<const Matrix*> taps;
      for (auto* t : layer.taps) taps.push_back(&t->value);
      Sequence next = dilated_causal_conv(cur, taps, &layer.bias->value, layer.dilation);
      inputs.push_back(std::move(cur));
      cur = std::move(next);
    }
    return cur;
  };
  Sequence f = run(filter, in, cache.filter_in);
  Sequence g = run(gate, in, cache.gate_in);
  Sequence out;
  out.reserve(f.size());
  for (std::size_t j = 0; j < f.size(); ++j) {
    for (double& v : f[j].values()) v = std::tanh(v);
    for (double& v : g[j].values()) v = sigmoid(v);
    Matrix o(f[j].rows(), f[j].cols());
    for (std::size_t i = 0; i < o.size(); ++i) o.data()[i] = f[j].data()[i] * g[j].data()[i];
    out.push_back(std::move(o));
  }
  cache.filter_act = std::move(f);
  cache.gate_act = std::move(g);
  return out;
}

void GatedTcn::backward(const Cache& cache, const Sequence& dout, Sequence& din) {
  Sequence df = zeros_like(dout);
  Sequence dg = zeros_like(dout);
  for (std::size_t j = 0; j < dout.size(); ++j) {
    const Matrix& fa = cache.filter_act[j];
    const Matrix& ga = cache.gate_act[j];
    for (std::size_t i = 0; i < fa.size(); ++i) {
      const double go = dout[j].data()[i];
      const double f = fa.data()[i], g = ga.data()[i];
      df[j].data()[i] = go * g * (1.0 - f * f);
      dg[j].data()[i] = go * f * g * (1.0 - g);
    }
  }
  auto back = [&din](const std::vector<TemporalLayer>& stack, const std::vector<Sequence>& inputs, Sequence grad) {
    for (std::size_t l = stack.size(); l-- > 0;) {
      Sequence dprev = zeros_like(inputs[l]);
      dilated_causal_conv_backward(inputs[l], stack[l], grad, dprev);
      grad = std::move(dprev);
    }
    for (std::size_t t = 0; t < grad.size(); ++t) axpy(1.0, grad[t], din[t]);
  };
  back(filter, cache.filter_in, std::move(df));
  back(gate, cache.gate_in, std::move(dg));
}

Sequence dynamic_graph_conv(const Sequence& h, const Sequence& graphs, std::span<Parameter* const> w) {
  if (h.size() != graphs.size())
    throw std::invalid_argument("graph/sequence alignment: " + std::to_string(graphs.size()) + " graphs for " +
                                std::to_string(h.size()) + " steps");
  Sequence out;
  out.reserve(h.size());
  for (std::size_t t = 0; t < h.size(); ++t) out.push_back(diffuse(row_normalize(graphs[t]), h[t], w, nullptr));
  return out;
}

STBlock::STBlock(ParameterSet& params, const std::string& prefix, const BlockOptions& options, Rng& rng)
    : options_(options), tcn_(params, prefix + "tcn_", options.d, options.kernel, options.dilations, rng) {
  if (options.K < 0) throw UsageError("graph.K must be >= 0");
  for (int k = 0; k <= options.K; ++k) {
    conv_weights.push_back(&params.create(prefix + "gconv_w" + std::to_string(k), options.d, options.d));
    init_uniform_fan_in(conv_weights.back()->value, options.d, rng);
  }
  switch (options.mode) {
    case GraphMode::dynamic:
    case GraphMode::obs: {
      GraphOptions g{options.nodes, options.d, options.K, options.alpha, options.shared_filter};
      constructor_ = std::make_unique<GraphConstructor>(params, prefix + "graph_", g, rng);
      break;
    }
    case GraphMode::adp:
      adaptive_ = std::make_unique<AdaptiveGraph>(params, prefix + "adp_", options.nodes, options.d, rng);
      break;
    case GraphMode::com:
      adaptive_ = std::make_unique<AdaptiveGraph>(params, prefix + "adp_", options.nodes, options.d, rng);
      for (int k = 0; k <= options.K; ++k) {
        conv_weights_adaptive.push_back(
            &params.create(prefix + "gconv_adp_w" + std::to_string(k), options.d, options.d));
        init_uniform_fan_in(conv_weights_adaptive.back()->value, options.d, rng);
      }
      break;
    case GraphMode::pre:
      break;
  }
}

STBlock::Output STBlock::forward(const Sequence& in, const Sequence* graph_inputs,
                                 const Matrix& predefined_transition, Cache& cache) const {
  Output result;
  cache.in_len = in.size();
  cache.out_len = tcn_.output_length(in.size());
  const std::size_t out_len = cache.out_len;
  const std::size_t offset = cache.in_len - out_len;
  cache.h = tcn_.forward(in, cache.tcn);
  cache.graphs.clear();
  cache.transitions.clear();
  cache.constructor.assign(constructor_ ? out_len : 0, GraphConstructor::Cache{});
  cache.diff.assign(out_len, DiffusionCache{});
  cache.diff_adaptive.assign(options_.mode == GraphMode::com ? out_len : 0, DiffusionCache{});

  if (options_.mode == GraphMode::obs && (graph_inputs == nullptr || graph_inputs->size() != out_len))
    throw std::invalid_argument("obs graph mode needs one graph input per surviving step");
  if (adaptive_) {
    const Matrix a = adaptive_->forward(cache.adaptive);
    cache.adaptive_transition = row_normalize(a);
  }

  result.out.reserve(out_len);
  for (std::size_t j = 0; j < out_len; ++j) {
    Matrix conv;
    switch (options_.mode) {
      case GraphMode::dynamic:
      case GraphMode::obs: {
        const Matrix& src = options_.mode == GraphMode::dynamic ? in[offset + j] : (*graph_inputs)[j];
        cache.graphs.push_back(constructor_->forward(src, predefined_transition, cache.constructor[j]));
        cache.transitions.push_back(row_normalize(cache.graphs.back()));
        conv = diffuse(cache.transitions.back(), cache.h[j], conv_weights, &cache.diff[j]);
        break;
      }
      case GraphMode::adp:
        conv = diffuse(cache.adaptive_transition, cache.h[j], conv_weights, &cache.diff[j]);
        break;
      case GraphMode::pre:
        conv = diffuse(predefined_transition, cache.h[j], conv_weights, &cache.diff[j]);
        break;
      case GraphMode::com:
        conv = diffuse(predefined_transition, cache.h[j], conv_weights, &cache.diff[j]);
        axpy(1.0, diffuse(cache.adaptive_transition, cache.h[j], conv_weights_adaptive, &cache.diff_adaptive[j]),
             conv);
        break;
    }
    axpy(1.0, in[offset + j], conv);
    result.out.push_back(std::move(conv));
  }
  result.skip = cache.h;
  return result;
}

void STBlock::backward(const Cache& cache, const Sequence& in, const Sequence* graph_inputs,
                       const Matrix& predefined_transition, const Sequence& dout, const Sequence& dskip,
                       Sequence& din, Sequence* dgraph_inputs) {
  (void)graph_inputs;
  const std::size_t out_len = cache.out_len;
  const std::size_t offset = cache.in_len - out_len;
  const std::size_t n = options_.nodes;
  Sequence dh = dskip;
  Matrix dadaptive_transition(adaptive_ ? n : 0, adaptive_ ? n : 0);

  for (std::size_t j = 0; j < out_len; ++j) {
    axpy(1.0, dout[j], din[offset + j]);
    switch (options_.mode) {
      case GraphMode::dynamic:
      case GraphMode::obs: {
        Matrix dp(n, n);
        diffuse_backward(cache.transitions[j], conv_weights, cache.diff[j], dout[j], &dh[j], &dp);
        const Matrix da = row_normalize_backward(cache.graphs[j], dp);
        Matrix& target = options_.mode == GraphMode::dynamic ? din[offset + j] : (*dgraph_inputs)[j];
        constructor_->backward(cache.constructor[j], predefined_transition, da, target);
        break;
      }
      case GraphMode::adp:
        diffuse_backward(cache.adaptive_transition, conv_weights, cache.diff[j], dout[j], &dh[j],
                         &dadaptive_transition);
        break;
      case GraphMode::pre:
        diffuse_backward(predefined_transition, conv_weights, cache.diff[j], dout[j], &dh[j], nullptr);
        break;
      case GraphMode::com:
        diffuse_backward(predefined_transition, conv_weights, cache.diff[j], dout[j], &dh[j], nullptr);
        diffuse_backward(cache.adaptive_transition, conv_weights_adaptive, cache.diff_adaptive[j], dout[j], &dh[j],
                         &dadaptive_transition);
        break;
    }
  }
  if (adaptive_) adaptive_->backward(cache.adaptive, row_normalize_backward(cache.adaptive.a, dadaptive_transition));
  tcn_.backward(cache.tcn, dh, din);
  (void)in;
}

}  // namespace gcnm
