// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "gcnm/data.hpp"
#include "gcnm/graph.hpp"
#include "gcnm/impute.hpp"
#include "gcnm/memory.hpp"
#include "gcnm/params.hpp"
#include "gcnm/stblock.hpp"
#include "gcnm/window.hpp"

namespace gcnm {

enum class ModelKind { gcnm, gru, gru_i };
ModelKind parse_model_kind(std::string_view text);
std::string_view model_kind_name(ModelKind kind);

struct ModelConfig {
  ModelKind kind = ModelKind::gcnm;
  int tau = 12;
  int horizon = 12;
  std::size_t d = 32;
  int blocks = 4;
  int kernel = 2;
  std::vector<int> dilations{1, 2};
  int L = 12;
  int S = 5;
  int n_h = 2;
  int n_d = 2;
  int n_w = 2;
  std::size_t head_hidden = 128;
  std::size_t gru_hidden = 64;
  ImputeKind impute = ImputeKind::none;
  // Halve the four decay-weighted estimates (their weights sum to 2 otherwise).
  bool normalize_local = false;

  GraphMode graph_mode = GraphMode::dynamic;
  int K = 2;
  double alpha = 3.0;
  bool shared_filter = false;

  double learning_rate = 0.001;
  int batch_size = 64;
  int max_epochs = 100;
  int patience = 15;
  std::uint64_t seed = 0;

  // Input length after left zero-padding so the block stack ends at length 1.
  int padded_length() const;
  // e.g. "GCN-M", "GCN-M-obs", "MEAN-GCN-M", "GRU-I".
  std::string display_name() const;
  SegmentParams segment_params(int step_minutes) const;
  AssemblerOptions assembler_options(int step_minutes) const;

  nlohmann::json to_json() const;
  // Missing keys keep their defaults; the nested layout mirrors the run config.
  static ModelConfig from_json(const nlohmann::json& j);
};

// Common surface for the main model and the baselines.
class Model {
 public:
  virtual ~Model() = default;
  virtual std::string name() const = 0;
  virtual ParameterSet& parameters() = 0;
  virtual const ParameterSet& parameters() const = 0;
  virtual Matrix predict(const WindowTensors& window) const = 0;
  // Adds weight * dLoss/dparams into the parameter gradients; returns the loss.
  virtual double accumulate_gradients(const WindowTensors& window, double weight) = 0;
  // The exact function accumulate_gradients differentiates (forecast MAE
  // plus any auxiliary terms).
  virtual double objective(const WindowTensors& window) const;
};

// Mean |pred - target| over entries with mask 1; 0 when nothing is observed.
double masked_mae(const Matrix& pred, const Matrix& target, const Matrix& mask);
// Gradient of masked_mae w.r.t. pred (sign(0) = 0).
Matrix masked_mae_grad(const Matrix& pred, const Matrix& target, const Matrix& mask);
// Plain MAE over all entries; throws std::invalid_argument on shape mismatch.
double mae_loss(const Matrix& pred, const Matrix& target);

struct PipelineShapes {
  int input_length = 0;
  int padded_length = 0;
  std::vector<int> block_lengths;  // output length of each block
  std::size_t skip_width = 0;      // columns of O
  std::size_t output_rows = 0;
  std::size_t output_cols = 0;
};

class GcnmModel : public Model {
 public:
  GcnmModel(const ModelConfig& config, std::size_t nodes, std::size_t features, const PredefinedGraph& graph);

  std::string name() const override { return config_.display_name(); }
  ParameterSet& parameters() override { return params_; }
  const ParameterSet& parameters() const override { return params_; }
  Matrix predict(const WindowTensors& window) const override;
  double accumulate_gradients(const WindowTensors& window, double weight) override;

  struct Cache {
    MemoryModule::Cache memory;
    std::vector<Sequence> block_inputs;  // H_0 (padded) .. H_{l-1}
    Sequence final_state;                // H_l
    std::vector<Sequence> graph_inputs;  // obs mode only
    std::vector<STBlock::Cache> blocks;
    std::vector<Sequence> skips;
    std::vector<Matrix> flat;            // flattened skip taps (l+1)
    Matrix o;
    Matrix hidden_pre;
    Matrix hidden;
  };
  Matrix forward(const WindowTensors& window, Cache& cache) const;
  // Accumulates parameter gradients for dLoss/dY = dy.
  void backward(const WindowTensors& window, const Cache& cache, const Matrix& dy);

  PipelineShapes shapes() const;
  const ModelConfig& config() const { return config_; }
  MemoryModule& memory() { return *memory_; }
  std::vector<STBlock>& blocks() { return blocks_; }
  const Matrix& predefined_transition() const { return transition_; }

 private:
  ModelConfig config_;
  std::size_t nodes_;
  std::size_t features_;
  ParameterSet params_;
  Matrix transition_;
  std::unique_ptr<MemoryModule> memory_;
  std::vector<STBlock> blocks_;
  std::vector<int> lengths_;  // lengths_[i] = input length of block i; back() = final
  Parameter* w_obs_ = nullptr;
  std::vector<Parameter*> skip_w_;
  std::vector<Parameter*> skip_b_;
  Parameter* fc1_w_;
  Parameter* fc1_b_;
  Parameter* fc2_w_;
  Parameter* fc2_b_;
};

// GCN-M variants and baselines by config.kind.
std::unique_ptr<Model> make_model(const ModelConfig& config, std::size_t nodes, std::size_t features,
                                  const PredefinedGraph& graph);

}  // namespace gcnm
