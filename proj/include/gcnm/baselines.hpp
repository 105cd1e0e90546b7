// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>

#include "gcnm/forecaster.hpp"
#include "gcnm/impute.hpp"

namespace gcnm {

// GRU cell shared by all nodes (each node is one row of the batch), dense
// head from the last hidden state to the horizon. The GRU-I variant replaces
// missing inputs with a one-step prediction from the previous hidden state
// and trains that predictor with an extra MAE term on observed inputs.
class GruModel : public Model {
 public:
  GruModel(const ModelConfig& config, std::size_t nodes, std::size_t features);

  std::string name() const override { return config_.display_name(); }
  ParameterSet& parameters() override { return params_; }
  const ParameterSet& parameters() const override { return params_; }
  Matrix predict(const WindowTensors& window) const override;
  // Returns the forecast MAE; GRU-I also back-propagates its imputation term.
  double accumulate_gradients(const WindowTensors& window, double weight) override;
  double objective(const WindowTensors& window) const override;

  bool imputes() const { return impute_; }

  struct Step {
    Matrix h_prev, x_in, x_hat, r, z, n, hn;
  };
  struct Cache {
    std::vector<Step> steps;
    Matrix h_last;
    double aux_loss = 0.0;
  };
  Matrix forward(const WindowTensors& window, Cache& cache) const;
  void backward(const WindowTensors& window, const Cache& cache, const Matrix& dy, double aux_weight);

  Parameter *w_ir, *w_iz, *w_in, *w_hr, *w_hz, *w_hn;
  Parameter *b_ir, *b_iz, *b_in, *b_hr, *b_hz, *b_hn;
  Parameter *w_o, *b_o;
  Parameter* w_p = nullptr;
  Parameter* b_p = nullptr;

 private:
  ModelConfig config_;
  std::size_t nodes_;
  std::size_t features_;
  std::size_t hidden_;
  bool impute_;
  ParameterSet params_;
};

}  // namespace gcnm
