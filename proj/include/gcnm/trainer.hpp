// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "gcnm/checkpoint.hpp"
#include "gcnm/forecaster.hpp"
#include "gcnm/window.hpp"

namespace gcnm {

struct EpochRecord {
  int epoch = 0;
  double train_mae = 0.0;
  double val_mae = 0.0;
  double seconds = 0.0;
};

struct TrainOptions {
  double learning_rate = 0.001;
  int batch_size = 64;
  int max_epochs = 100;
  int patience = 15;
  std::uint64_t seed = 0;
  // Stop as soon as an epoch's training MAE (measured after the epoch) drops below this.
  std::optional<double> target_train_mae;
  std::function<void(const EpochRecord&)> on_epoch;

  static TrainOptions from_config(const ModelConfig& config);
};

struct TrainResult {
  std::vector<EpochRecord> history;
  int best_epoch = 0;
  double best_val = std::numeric_limits<double>::infinity();
  bool diverged = false;
  std::string message;
};

// Pooled masked MAE over all windows (sum |e| over observed targets / count).
double evaluate_mae(const Model& model, const WindowSet& windows);

class Trainer {
 public:
  Trainer(Model& model, TrainOptions options);

  // Trains until max_epochs or patience runs out; the model ends holding the
  // best-validation parameters. A non-finite loss stops training with the
  // last good parameters restored and result.diverged set.
  TrainResult fit(const WindowSet& train, const WindowSet& val);

  // Parameters, optimizer moments and progress counters.
  Checkpoint checkpoint(const nlohmann::json& extra_meta = {}) const;
  // Restores a checkpoint written by checkpoint(); later fit() calls continue
  // the epoch numbering.
  void resume(const Checkpoint& cp);

  int epochs_done() const { return epochs_done_; }
  const std::vector<EpochRecord>& history() const { return history_; }

 private:
  Model& model_;
  TrainOptions options_;
  Adam adam_;
  int epochs_done_ = 0;
  int best_epoch_ = 0;
  double best_val_ = std::numeric_limits<double>::infinity();
  int wait_ = 0;
  std::vector<EpochRecord> history_;
};

void write_history_csv(const std::vector<EpochRecord>& history, std::ostream& out);

// Copies "param/<name>" tensors into the model; throws SchemaError on mismatch.
void load_parameters(ParameterSet& params, const Checkpoint& cp);

}  // namespace gcnm
