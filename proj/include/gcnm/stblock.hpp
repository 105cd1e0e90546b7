// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "gcnm/graph.hpp"
#include "gcnm/matrix.hpp"
#include "gcnm/params.hpp"

namespace gcnm {

struct TemporalLayer {
  std::vector<Parameter*> taps;  // kernel x (d x d); taps[s] reads H(t - dilation * s)
  Parameter* bias = nullptr;     // 1 x d
  int dilation = 1;
};

// Output step j reads input steps j + dilation*(K-1) - dilation*s. Output
// length is in.size() - dilation*(K-1); throws std::length_error when that is < 1.
Sequence dilated_causal_conv(const Sequence& in, std::span<const Matrix* const> taps, const Matrix* bias,
                             int dilation);
void dilated_causal_conv_backward(const Sequence& in, const TemporalLayer& layer, const Sequence& dout,
                                  Sequence& din);

std::size_t conv_output_length(std::size_t in_length, int kernel, std::span<const int> dilations);

// tanh(filter stack) .* sigmoid(gate stack); each stack is a chain of
// dilated causal convolutions without intermediate activation.
class GatedTcn {
 public:
  GatedTcn(ParameterSet& params, const std::string& prefix, std::size_t d, int kernel, std::vector<int> dilations,
           Rng& rng);

  struct Cache {
    std::vector<Sequence> filter_in;  // input of each filter layer
    std::vector<Sequence> gate_in;
    Sequence filter_act;  // tanh branch
    Sequence gate_act;    // sigmoid branch
  };

  Sequence forward(const Sequence& in, Cache& cache) const;
  // din must be sized like in; gradients are added.
  void backward(const Cache& cache, const Sequence& dout, Sequence& din);

  std::size_t output_length(std::size_t in_length) const;

  std::vector<TemporalLayer> filter;
  std::vector<TemporalLayer> gate;

 private:
  int kernel_;
  std::vector<int> dilations_;
};

// H'(t) = sum_k (row_normalize(A_t))^k h(t) W_k for each step.
Sequence dynamic_graph_conv(const Sequence& h, const Sequence& graphs, std::span<Parameter* const> w);

struct BlockOptions {
  std::size_t nodes = 0;
  std::size_t d = 32;
  int K = 2;
  int kernel = 2;
  std::vector<int> dilations{1, 2};
  GraphMode mode = GraphMode::dynamic;
  double alpha = 3.0;
  bool shared_filter = false;
};

class STBlock {
 public:
  STBlock(ParameterSet& params, const std::string& prefix, const BlockOptions& options, Rng& rng);

  struct Cache {
    std::size_t in_len = 0;
    std::size_t out_len = 0;
    GatedTcn::Cache tcn;
    Sequence h;            // gated TCN output, also the skip tap
    Sequence graphs;       // raw adjacency per surviving step (dynamic/obs)
    Sequence transitions;  // row-normalized graphs actually diffused over
    std::vector<GraphConstructor::Cache> constructor;
    AdaptiveGraph::Cache adaptive;
    Matrix adaptive_transition;
    std::vector<DiffusionCache> diff;
    std::vector<DiffusionCache> diff_adaptive;
  };

  struct Output {
    Sequence skip;  // h_i
    Sequence out;   // H_{i+1}
  };

  // graph_inputs: per surviving step, the N x d matrix the dynamic graph is
  // built from (obs mode only; dynamic mode uses the tail of `in`).
  Output forward(const Sequence& in, const Sequence* graph_inputs, const Matrix& predefined_transition,
                 Cache& cache) const;
  void backward(const Cache& cache, const Sequence& in, const Sequence* graph_inputs,
                const Matrix& predefined_transition, const Sequence& dout, const Sequence& dskip, Sequence& din,
                Sequence* dgraph_inputs);

  std::size_t output_length(std::size_t in_length) const { return tcn_.output_length(in_length); }
  const BlockOptions& options() const { return options_; }
  GatedTcn& tcn() { return tcn_; }
  GraphConstructor* constructor() { return constructor_.get(); }

  std::vector<Parameter*> conv_weights;           // W_k
  std::vector<Parameter*> conv_weights_adaptive;  // com mode only

 private:
  BlockOptions options_;
  GatedTcn tcn_;
  std::unique_ptr<GraphConstructor> constructor_;
  std::unique_ptr<AdaptiveGraph> adaptive_;
};

}  // namespace gcnm
