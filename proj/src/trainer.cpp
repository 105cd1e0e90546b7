// SPDX-License-Identifier: Apache-2.0
#include "gcnm/trainer.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <ostream>

#include "gcnm/error.hpp"

namespace gcnm {

TrainOptions TrainOptions::from_config(const ModelConfig& config) {
  TrainOptions o;
  o.learning_rate = config.learning_rate;
  o.batch_size = config.batch_size;
  o.max_epochs = config.max_epochs;
  o.patience = config.patience;
  o.seed = config.seed;
  return o;
}

double evaluate_mae(const Model& model, const WindowSet& windows) {
  double sum = 0.0, count = 0.0;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const WindowTensors& w = windows.at(i);
    const Matrix y = model.predict(w);
    for (std::size_t k = 0; k < y.size(); ++k) {
      if (w.target_mask.data()[k] == 0.0) continue;
      sum += std::abs(y.data()[k] - w.target.data()[k]);
      count += 1.0;
    }
  }
  return count > 0.0 ? sum / count : 0.0;
}

Trainer::Trainer(Model& model, TrainOptions options)
    : model_(model), options_(std::move(options)), adam_(model.parameters(), AdamOptions{options_.learning_rate}) {
  if (options_.batch_size < 1) throw UsageError("train.batch_size must be >= 1");
  if (options_.max_epochs < 1) throw UsageError("train.max_epochs must be >= 1");
  if (options_.patience < 0) throw UsageError("train.patience must be >= 0");
}

TrainResult Trainer::fit(const WindowSet& train, const WindowSet& val) {
  if (train.size() == 0 || val.size() == 0) throw DataError("train and validation splits must be non-empty");
  ParameterSet& params = model_.parameters();
  std::vector<Matrix> best = params.snapshot();
  TrainResult result;
  std::vector<std::size_t> order(train.size());

  while (epochs_done_ < options_.max_epochs) {
    const int epoch = epochs_done_ + 1;
    const auto start = std::chrono::steady_clock::now();
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(options_.seed, static_cast<std::uint64_t>(epoch)));
    rng.shuffle(order);

    double loss_sum = 0.0;
    bool bad = false;
    try {
      for (std::size_t b = 0; b < order.size(); b += static_cast<std::size_t>(options_.batch_size)) {
        const std::size_t e = std::min(order.size(), b + static_cast<std::size_t>(options_.batch_size));
        const double weight = 1.0 / static_cast<double>(e - b);
        params.zero_grad();
        for (std::size_t i = b; i < e; ++i) loss_sum += model_.accumulate_gradients(train.at(order[i]), weight);
        if (!std::isfinite(loss_sum)) throw NumericError("training loss is not finite");
        for (const Parameter* p : std::as_const(params).all())
          if (!all_finite(p->grad)) throw NumericError("gradient of " + p->name + " is not finite");
        adam_.step();
      }
    } catch (const NumericError& e) {
      bad = true;
      result.message = "epoch " + std::to_string(epoch) + ": " + e.what();
    }
    double val_mae = 0.0;
    if (!bad) {
      try {
        val_mae = evaluate_mae(model_, val);
        if (!std::isfinite(val_mae)) throw NumericError("validation MAE is not finite");
      } catch (const NumericError& e) {
        bad = true;
        result.message = "epoch " + std::to_string(epoch) + ": " + e.what();
      }
    }
    if (bad) {
      params.restore(best);
      result.diverged = true;
      break;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_mae = loss_sum / static_cast<double>(order.size());
    rec.val_mae = val_mae;
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    epochs_done_ = epoch;
    history_.push_back(rec);
    if (options_.on_epoch) options_.on_epoch(rec);

    if (val_mae < best_val_) {
      best_val_ = val_mae;
      best_epoch_ = epoch;
      best = params.snapshot();
      wait_ = 0;
    } else if (++wait_ > options_.patience) {
      break;
    }
    if (options_.target_train_mae && evaluate_mae(model_, train) < *options_.target_train_mae) {
      best = params.snapshot();
      best_epoch_ = epoch;
      break;
    }
  }
  params.restore(best);
  result.history = history_;
  result.best_epoch = best_epoch_;
  result.best_val = best_val_;
  return result;
}

Checkpoint Trainer::checkpoint(const nlohmann::json& extra_meta) const {
  Checkpoint cp;
  cp.meta = extra_meta.is_object() ? extra_meta : nlohmann::json::object();
  cp.meta["model"] = model_.name();
  cp.meta["epochs_done"] = epochs_done_;
  cp.meta["best_epoch"] = best_epoch_;
  cp.meta["best_val"] = std::isfinite(best_val_) ? nlohmann::json(best_val_) : nlohmann::json(nullptr);
  cp.meta["wait"] = wait_;
  cp.meta["adam_steps"] = adam_.steps();
  auto& hist = cp.meta["history"] = nlohmann::json::array();
  for (const auto& r : history_)
    hist.push_back({{"epoch", r.epoch}, {"train_mae", r.train_mae}, {"val_mae", r.val_mae}, {"seconds", r.seconds}});
  const auto params = model_.parameters().all();
  for (const Parameter* p : params) cp.tensors.emplace_back("param/" + p->name, p->value);
  for (std::size_t i = 0; i < params.size(); ++i) {
    cp.tensors.emplace_back("adam.m/" + params[i]->name, adam_.first_moments()[i]);
    cp.tensors.emplace_back("adam.v/" + params[i]->name, adam_.second_moments()[i]);
  }
  return cp;
}

void load_parameters(ParameterSet& params, const Checkpoint& cp) {
  for (Parameter* p : params.all()) {
    const Matrix* m = cp.find("param/" + p->name);
    if (m == nullptr) throw SchemaError("checkpoint lacks parameter " + p->name);
    if (!m->same_shape(p->value)) throw SchemaError("checkpoint shape mismatch for " + p->name);
    p->value = *m;
  }
}

void Trainer::resume(const Checkpoint& cp) {
  load_parameters(model_.parameters(), cp);
  const auto params = model_.parameters().all();
  std::vector<Matrix> m, v;
  for (const Parameter* p : params) {
    const Matrix* mm = cp.find("adam.m/" + p->name);
    const Matrix* vv = cp.find("adam.v/" + p->name);
    if (mm == nullptr || vv == nullptr) throw SchemaError("checkpoint lacks optimizer state for " + p->name);
    m.push_back(*mm);
    v.push_back(*vv);
  }
  adam_.load_state(cp.meta.value("adam_steps", std::int64_t{0}), std::move(m), std::move(v));
  epochs_done_ = cp.meta.value("epochs_done", 0);
  best_epoch_ = cp.meta.value("best_epoch", 0);
  const auto& bv = cp.meta.contains("best_val") ? cp.meta.at("best_val") : nlohmann::json(nullptr);
  best_val_ = bv.is_number() ? bv.get<double>() : std::numeric_limits<double>::infinity();
  wait_ = cp.meta.value("wait", 0);
  history_.clear();
  if (cp.meta.contains("history"))
    for (const auto& r : cp.meta.at("history"))
      history_.push_back({r.at("epoch").get<int>(), r.at("train_mae").get<double>(), r.at("val_mae").get<double>(),
                          r.at("seconds").get<double>()});
}

void write_history_csv(const std::vector<EpochRecord>& history, std::ostream& out) {
  out << "epoch,train_mae,val_mae,seconds\n";
  char buf[128];
  for (const auto& r : history) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.3f\n", r.epoch, r.train_mae, r.val_mae, r.seconds);
    out << buf;
  }
}

}  // namespace gcnm
