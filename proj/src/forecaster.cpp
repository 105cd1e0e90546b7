// SPDX-License-Identifier: Apache-2.0
#include "gcnm/forecaster.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "gcnm/baselines.hpp"
#include "gcnm/error.hpp"

namespace gcnm {

using nlohmann::json;

ModelKind parse_model_kind(std::string_view text) {
  if (text == "gcnm") return ModelKind::gcnm;
  if (text == "gru") return ModelKind::gru;
  if (text == "gru_i") return ModelKind::gru_i;
  throw UsageError("unknown model kind '" + std::string(text) + "' (expected gcnm|gru|gru_i)");
}

std::string_view model_kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::gcnm: return "gcnm";
    case ModelKind::gru: return "gru";
    case ModelKind::gru_i: return "gru_i";
  }
  return "gcnm";
}

int ModelConfig::padded_length() const {
  int reach = 0;
  for (int dil : dilations) reach += dil * (kernel - 1);
  return std::max(tau, 1 + blocks * reach);
}

std::string ModelConfig::display_name() const {
  if (kind == ModelKind::gru) return "GRU";
  if (kind == ModelKind::gru_i) return "GRU-I";
  std::string name = "GCN-M";
  if (graph_mode != GraphMode::dynamic) name += "-" + std::string(graph_mode_name(graph_mode));
  if (impute == ImputeKind::mean) name = "MEAN-" + name;
  if (impute == ImputeKind::knn) name = "KNN-" + name;
  return name;
}

SegmentParams ModelConfig::segment_params(int step_minutes) const {
  return SegmentParams::for_step(step_minutes, tau, n_h, n_d, n_w);
}

AssemblerOptions ModelConfig::assembler_options(int step_minutes) const {
  AssemblerOptions o;
  o.tau = tau;
  o.horizon = horizon;
  o.segments = segment_params(step_minutes);
  o.L = L;
  o.S = S;
  o.impute = impute;
  return o;
}

json ModelConfig::to_json() const {
  return json{{"model",
               {{"kind", model_kind_name(kind)},
                {"tau", tau},
                {"horizon", horizon},
                {"d", d},
                {"blocks", blocks},
                {"kernel", kernel},
                {"dilations", dilations},
                {"L", L},
                {"S", S},
                {"n_h", n_h},
                {"n_d", n_d},
                {"n_w", n_w},
                {"head_hidden", head_hidden},
                {"gru_hidden", gru_hidden},
                {"impute", impute_kind_name(impute)},
                {"normalize_local", normalize_local}}},
              {"graph", {{"mode", graph_mode_name(graph_mode)}, {"K", K}, {"alpha", alpha}, {"shared_filter", shared_filter}}},
              {"train",
               {{"learning_rate", learning_rate},
                {"batch_size", batch_size},
                {"max_epochs", max_epochs},
                {"patience", patience}}},
              {"seed", seed}};
}

ModelConfig ModelConfig::from_json(const json& j) {
  ModelConfig c;
  auto get = [](const json& obj, const char* key, auto& out) {
    if (obj.contains(key)) out = obj.at(key).get<std::decay_t<decltype(out)>>();
  };
  if (j.contains("model")) {
    const auto& m = j.at("model");
    if (m.contains("kind")) c.kind = parse_model_kind(m.at("kind").get<std::string>());
    get(m, "tau", c.tau);
    get(m, "horizon", c.horizon);
    get(m, "d", c.d);
    get(m, "blocks", c.blocks);
    get(m, "kernel", c.kernel);
    get(m, "dilations", c.dilations);
    get(m, "L", c.L);
    get(m, "S", c.S);
    get(m, "n_h", c.n_h);
    get(m, "n_d", c.n_d);
    get(m, "n_w", c.n_w);
    get(m, "head_hidden", c.head_hidden);
    get(m, "gru_hidden", c.gru_hidden);
    get(m, "normalize_local", c.normalize_local);
    if (m.contains("impute")) c.impute = parse_impute_kind(m.at("impute").get<std::string>());
  }
  if (j.contains("graph")) {
    const auto& g = j.at("graph");
    if (g.contains("mode")) c.graph_mode = parse_graph_mode(g.at("mode").get<std::string>());
    get(g, "K", c.K);
    get(g, "alpha", c.alpha);
    get(g, "shared_filter", c.shared_filter);
  }
  if (j.contains("train")) {
    const auto& t = j.at("train");
    get(t, "learning_rate", c.learning_rate);
    get(t, "batch_size", c.batch_size);
    get(t, "max_epochs", c.max_epochs);
    get(t, "patience", c.patience);
  }
  get(j, "seed", c.seed);
  return c;
}

double Model::objective(const WindowTensors& window) const {
  return masked_mae(predict(window), window.target, window.target_mask);
}

double masked_mae(const Matrix& pred, const Matrix& target, const Matrix& mask) {
  if (!pred.same_shape(target) || !pred.same_shape(mask)) throw std::invalid_argument("masked_mae: shape mismatch");
  double sum = 0.0, count = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (mask.data()[i] == 0.0) continue;
    sum += std::abs(pred.data()[i] - target.data()[i]);
    count += 1.0;
  }
  return count > 0.0 ? sum / count : 0.0;
}

Matrix masked_mae_grad(const Matrix& pred, const Matrix& target, const Matrix& mask) {
  Matrix g(pred.rows(), pred.cols());
  double count = 0.0;
  for (double m : mask.values()) count += m != 0.0 ? 1.0 : 0.0;
  if (count == 0.0) return g;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (mask.data()[i] == 0.0) continue;
    const double diff = pred.data()[i] - target.data()[i];
    g.data()[i] = (diff > 0.0 ? 1.0 : diff < 0.0 ? -1.0 : 0.0) / count;
  }
  return g;
}

double mae_loss(const Matrix& pred, const Matrix& target) {
  return masked_mae(pred, target, Matrix(pred.rows(), pred.cols(), 1.0));
}

namespace {

void check_finite(const Matrix& m, const std::string& stage) {
  if (!all_finite(m)) throw NumericError("non-finite values after " + stage);
}

void check_finite(const Sequence& s, const std::string& stage) {
  for (const auto& m : s) check_finite(m, stage);
}

// Row n of the result is [s[0].row(n) | s[1].row(n) | ...].
Matrix flatten(const Sequence& s) {
  const std::size_t n = s.front().rows(), d = s.front().cols();
  Matrix out(n, d * s.size());
  for (std::size_t t = 0; t < s.size(); ++t)
    for (std::size_t r = 0; r < n; ++r) std::copy_n(s[t].row(r).data(), d, out.row(r).data() + t * d);
  return out;
}

Sequence unflatten(const Matrix& m, std::size_t steps, std::size_t d) {
  Sequence out(steps, Matrix(m.rows(), d));
  for (std::size_t t = 0; t < steps; ++t)
    for (std::size_t r = 0; r < m.rows(); ++r) std::copy_n(m.row(r).data() + t * d, d, out[t].row(r).data());
  return out;
}

}  // namespace

GcnmModel::GcnmModel(const ModelConfig& config, std::size_t nodes, std::size_t features,
                     const PredefinedGraph& graph)
    : config_(config), nodes_(nodes), features_(features) {
  if (config.kind != ModelKind::gcnm) throw UsageError("GcnmModel needs model.kind = gcnm");
  if (config.tau < 1 || config.horizon < 1 || config.d < 1 || config.blocks < 1 || config.head_hidden < 1)
    throw UsageError("model sizes must be positive");
  if (graph.nodes() != nodes) throw SchemaError("graph node count does not match the series");
  const std::size_t d = config.d;
  Rng rng(derive_seed(config.seed, 0x6d6f64656cULL));
  transition_ = row_normalize(graph.adjacency);
  memory_ = std::make_unique<MemoryModule>(params_, "memory.", MemoryShape{nodes, features, d, config.normalize_local}, rng);
  if (config.graph_mode == GraphMode::obs) {
    w_obs_ = &params_.create("graph_obs.w", features, d);
    init_uniform_fan_in(w_obs_->value, features, rng);
  }
  BlockOptions bo{nodes, d, config.K, config.kernel, config.dilations, config.graph_mode, config.alpha,
                  config.shared_filter};
  lengths_.push_back(config.padded_length());
  blocks_.reserve(static_cast<std::size_t>(config.blocks));
  for (int i = 0; i < config.blocks; ++i) {
    blocks_.emplace_back(params_, "block" + std::to_string(i) + ".", bo, rng);
    lengths_.push_back(static_cast<int>(blocks_.back().output_length(static_cast<std::size_t>(lengths_.back()))));
  }
  for (int i = 0; i <= config.blocks; ++i) {
    const std::size_t len = static_cast<std::size_t>(lengths_[static_cast<std::size_t>(i == config.blocks ? i : i + 1)]);
    const std::string prefix = "skip" + std::to_string(i) + ".";
    skip_w_.push_back(&params_.create(prefix + "w", len * d, d));
    skip_b_.push_back(&params_.create(prefix + "b", 1, d));
    init_uniform_fan_in(skip_w_.back()->value, len * d, rng);
    init_uniform_fan_in(skip_b_.back()->value, len * d, rng);
  }
  const std::size_t width = static_cast<std::size_t>(config.blocks + 1) * d;
  fc1_w_ = &params_.create("head.fc1_w", width, config.head_hidden);
  fc1_b_ = &params_.create("head.fc1_b", 1, config.head_hidden);
  fc2_w_ = &params_.create("head.fc2_w", config.head_hidden, static_cast<std::size_t>(config.horizon));
  fc2_b_ = &params_.create("head.fc2_b", 1, static_cast<std::size_t>(config.horizon));
  init_uniform_fan_in(fc1_w_->value, width, rng);
  init_uniform_fan_in(fc1_b_->value, width, rng);
  init_uniform_fan_in(fc2_w_->value, config.head_hidden, rng);
  init_uniform_fan_in(fc2_b_->value, config.head_hidden, rng);
}

PipelineShapes GcnmModel::shapes() const {
  PipelineShapes s;
  s.input_length = config_.tau;
  s.padded_length = lengths_.front();
  s.block_lengths.assign(lengths_.begin() + 1, lengths_.end());
  s.skip_width = fc1_w_->value.rows();
  s.output_rows = nodes_;
  s.output_cols = static_cast<std::size_t>(config_.horizon);
  return s;
}

Matrix GcnmModel::forward(const WindowTensors& w, Cache& cache) const {
  const std::size_t d = config_.d;
  const auto tau = static_cast<std::size_t>(config_.tau);
  const auto P = static_cast<std::size_t>(lengths_.front());
  if (w.steps.size() != tau) throw std::invalid_argument("window length does not match tau");

  Sequence h = memory_->forward(w.steps, w.slots, cache.memory);
  check_finite(h, "memory module");

  cache.block_inputs.assign(blocks_.size(), Sequence{});
  Sequence padded(P - tau, Matrix(nodes_, d));
  for (auto& m : h) padded.push_back(std::move(m));
  cache.block_inputs[0] = std::move(padded);
  cache.blocks.assign(blocks_.size(), STBlock::Cache{});
  cache.skips.assign(blocks_.size(), Sequence{});
  cache.graph_inputs.assign(blocks_.size(), Sequence{});

  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    const Sequence* gi = nullptr;
    if (w_obs_ != nullptr) {
      const auto out_len = static_cast<std::size_t>(lengths_[i + 1]);
      for (std::size_t j = 0; j < out_len; ++j) {
        const std::size_t p = P - out_len + j;
        Matrix g(nodes_, d);
        if (p + tau >= P) matmul_acc(w.inputs[p + tau - P], w_obs_->value, g);
        cache.graph_inputs[i].push_back(std::move(g));
      }
      gi = &cache.graph_inputs[i];
    }
    auto out = blocks_[i].forward(cache.block_inputs[i], gi, transition_, cache.blocks[i]);
    check_finite(out.out, "block " + std::to_string(i));
    cache.skips[i] = std::move(out.skip);
    if (i + 1 < blocks_.size())
      cache.block_inputs[i + 1] = std::move(out.out);
    else
      cache.final_state = std::move(out.out);
  }

  cache.flat.clear();
  cache.o = Matrix(nodes_, (blocks_.size() + 1) * d);
  for (std::size_t i = 0; i <= blocks_.size(); ++i) {
    cache.flat.push_back(flatten(i < blocks_.size() ? cache.skips[i] : cache.final_state));
    Matrix proj(nodes_, d);
    add_row_broadcast(skip_b_[i]->value.row(0), proj);
    matmul_acc(cache.flat.back(), skip_w_[i]->value, proj);
    for (std::size_t r = 0; r < nodes_; ++r) std::copy_n(proj.row(r).data(), d, cache.o.row(r).data() + i * d);
  }
  cache.hidden_pre = Matrix(nodes_, config_.head_hidden);
  add_row_broadcast(fc1_b_->value.row(0), cache.hidden_pre);
  matmul_acc(cache.o, fc1_w_->value, cache.hidden_pre);
  cache.hidden = cache.hidden_pre;
  for (double& v : cache.hidden.values()) v = std::max(0.0, v);
  Matrix y(nodes_, static_cast<std::size_t>(config_.horizon));
  add_row_broadcast(fc2_b_->value.row(0), y);
  matmul_acc(cache.hidden, fc2_w_->value, y);
  check_finite(y, "output head");
  return y;
}

void GcnmModel::backward(const WindowTensors& w, const Cache& cache, const Matrix& dy) {
  const std::size_t d = config_.d;
  const auto tau = static_cast<std::size_t>(config_.tau);
  const auto P = static_cast<std::size_t>(lengths_.front());
  const std::size_t l = blocks_.size();

  matmul_tn_acc(cache.hidden, dy, fc2_w_->grad);
  accumulate_column_sums(dy, fc2_b_->grad);
  Matrix dhidden(nodes_, config_.head_hidden);
  matmul_nt_acc(dy, fc2_w_->value, dhidden);
  for (std::size_t i = 0; i < dhidden.size(); ++i)
    if (cache.hidden_pre.data()[i] <= 0.0) dhidden.data()[i] = 0.0;
  matmul_tn_acc(cache.o, dhidden, fc1_w_->grad);
  accumulate_column_sums(dhidden, fc1_b_->grad);
  Matrix d_o(nodes_, cache.o.cols());
  matmul_nt_acc(dhidden, fc1_w_->value, d_o);

  std::vector<Sequence> dskip(l + 1);
  for (std::size_t i = 0; i <= l; ++i) {
    Matrix dproj(nodes_, d);
    for (std::size_t r = 0; r < nodes_; ++r) std::copy_n(d_o.row(r).data() + i * d, d, dproj.row(r).data());
    matmul_tn_acc(cache.flat[i], dproj, skip_w_[i]->grad);
    accumulate_column_sums(dproj, skip_b_[i]->grad);
    Matrix dflat(nodes_, cache.flat[i].cols());
    matmul_nt_acc(dproj, skip_w_[i]->value, dflat);
    dskip[i] = unflatten(dflat, cache.flat[i].cols() / d, d);
  }

  Sequence dstate = std::move(dskip[l]);
  for (std::size_t i = l; i-- > 0;) {
    const Sequence& in = cache.block_inputs[i];
    Sequence din(in.size(), Matrix(nodes_, d));
    Sequence dgi;
    const Sequence* gi = nullptr;
    if (w_obs_ != nullptr) {
      gi = &cache.graph_inputs[i];
      dgi.assign(gi->size(), Matrix(nodes_, d));
    }
    blocks_[i].backward(cache.blocks[i], in, gi, transition_, dstate, dskip[i], din,
                        w_obs_ != nullptr ? &dgi : nullptr);
    if (w_obs_ != nullptr) {
      const std::size_t out_len = dgi.size();
      for (std::size_t j = 0; j < out_len; ++j) {
        const std::size_t p = P - out_len + j;
        if (p + tau >= P) matmul_tn_acc(w.inputs[p + tau - P], dgi[j], w_obs_->grad);
      }
    }
    dstate = std::move(din);
  }
  Sequence dh(dstate.end() - static_cast<std::ptrdiff_t>(tau), dstate.end());
  memory_->backward(cache.memory, dh);
}

Matrix GcnmModel::predict(const WindowTensors& window) const {
  Cache cache;
  return forward(window, cache);
}

double GcnmModel::accumulate_gradients(const WindowTensors& window, double weight) {
  Cache cache;
  const Matrix y = forward(window, cache);
  const double loss = masked_mae(y, window.target, window.target_mask);
  Matrix dy = masked_mae_grad(y, window.target, window.target_mask);
  for (double& v : dy.values()) v *= weight;
  backward(window, cache, dy);
  return loss;
}

std::unique_ptr<Model> make_model(const ModelConfig& config, std::size_t nodes, std::size_t features,
                                  const PredefinedGraph& graph) {
  if (config.kind == ModelKind::gcnm) return std::make_unique<GcnmModel>(config, nodes, features, graph);
  return std::make_unique<GruModel>(config, nodes, features);
}

}  // namespace gcnm
