// SPDX-License-Identifier: Apache-2.0
#include "gcnm/baselines.hpp"

#include <cmath>
#include <stdexcept>
#include <tuple>

#include "gcnm/error.hpp"

namespace gcnm {

ImputeKind parse_impute_kind(std::string_view text) {
  if (text == "none") return ImputeKind::none;
  if (text == "mean") return ImputeKind::mean;
  if (text == "knn") return ImputeKind::knn;
  throw UsageError("unknown imputer '" + std::string(text) + "' (expected none|mean|knn)");
}

std::string_view impute_kind_name(ImputeKind kind) {
  switch (kind) {
    case ImputeKind::none: return "none";
    case ImputeKind::mean: return "mean";
    case ImputeKind::knn: return "knn";
  }
  return "none";
}

std::vector<double> impute_mean_column(std::span<const double> values, std::span<const double> mask,
                                       double fallback, bool* flagged) {
  double sum = 0.0, count = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i)
    if (mask[i] != 0.0) {
      sum += values[i];
      count += 1.0;
    }
  const bool empty = count == 0.0;
  if (flagged != nullptr) *flagged = empty;
  const double fill = empty ? fallback : sum / count;
  std::vector<double> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = mask[i] != 0.0 ? values[i] : fill;
  return out;
}

std::vector<double> impute_knn_column(std::span<const double> values, std::span<const double> mask,
                                      double fallback, bool* flagged) {
  const std::size_t n = values.size();
  std::vector<double> out(n);
  std::ptrdiff_t prev = -1;
  for (std::size_t i = 0; i < n; ++i) {
    if (mask[i] != 0.0) {
      out[i] = values[i];
      prev = static_cast<std::ptrdiff_t>(i);
    }
  }
  if (prev < 0) {
    if (flagged != nullptr) *flagged = true;
    std::fill(out.begin(), out.end(), fallback);
    return out;
  }
  if (flagged != nullptr) *flagged = false;
  prev = -1;
  for (std::size_t i = 0; i < n; ++i) {
    if (mask[i] != 0.0) {
      prev = static_cast<std::ptrdiff_t>(i);
      continue;
    }
    std::size_t next = i + 1;
    while (next < n && mask[next] == 0.0) ++next;
    for (std::size_t k = i; k < next; ++k) {
      if (prev < 0) {
        out[k] = values[next];
      } else if (next >= n) {
        out[k] = values[static_cast<std::size_t>(prev)];
      } else {
        const double a = values[static_cast<std::size_t>(prev)], b = values[next];
        const double frac = static_cast<double>(k - static_cast<std::size_t>(prev)) /
                            static_cast<double>(next - static_cast<std::size_t>(prev));
        out[k] = a + (b - a) * frac;
      }
    }
    i = next - 1;
  }
  return out;
}

std::vector<double> impute_column(ImputeKind kind, std::span<const double> values, std::span<const double> mask,
                                  double fallback, bool* flagged) {
  switch (kind) {
    case ImputeKind::mean: return impute_mean_column(values, mask, fallback, flagged);
    case ImputeKind::knn: return impute_knn_column(values, mask, fallback, flagged);
    case ImputeKind::none: break;
  }
  if (flagged != nullptr) *flagged = false;
  return {values.begin(), values.end()};
}

namespace {

TrafficSeries impute_series(const TrafficSeries& series, ImputeKind kind, std::vector<std::size_t>* flagged_nodes) {
  double sum = 0.0, count = 0.0;
  for (std::size_t i = 0; i < series.entry_count(); ++i)
    if (series.mask[i] != 0.0) {
      sum += series.values[i];
      count += 1.0;
    }
  const double global = count > 0.0 ? sum / count : 0.0;
  TrafficSeries out = series;
  std::vector<double> v(series.steps), m(series.steps);
  if (flagged_nodes != nullptr) flagged_nodes->clear();
  for (std::size_t n = 0; n < series.nodes; ++n) {
    bool node_flagged = false;
    for (std::size_t f = 0; f < series.features; ++f) {
      for (std::size_t t = 0; t < series.steps; ++t) {
        v[t] = series.values[series.index(t, n, f)];
        m[t] = series.mask[series.index(t, n, f)];
      }
      bool flagged = false;
      const auto filled = impute_column(kind, v, m, global, &flagged);
      node_flagged = node_flagged || flagged;
      for (std::size_t t = 0; t < series.steps; ++t) {
        out.values[series.index(t, n, f)] = filled[t];
        out.mask[series.index(t, n, f)] = 1.0;
      }
    }
    if (node_flagged && flagged_nodes != nullptr) flagged_nodes->push_back(n);
  }
  return out;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Matrix affine(const Matrix& x, const Parameter* w, const Parameter* b) {
  Matrix out(x.rows(), w->value.cols());
  add_row_broadcast(b->value.row(0), out);
  matmul_acc(x, w->value, out);
  return out;
}

}  // namespace

TrafficSeries impute_mean(const TrafficSeries& series, std::vector<std::size_t>* flagged_nodes) {
  return impute_series(series, ImputeKind::mean, flagged_nodes);
}

TrafficSeries impute_knn(const TrafficSeries& series, std::vector<std::size_t>* flagged_nodes) {
  return impute_series(series, ImputeKind::knn, flagged_nodes);
}

GruModel::GruModel(const ModelConfig& config, std::size_t nodes, std::size_t features)
    : config_(config),
      nodes_(nodes),
      features_(features),
      hidden_(config.gru_hidden),
      impute_(config.kind == ModelKind::gru_i) {
  if (config.kind == ModelKind::gcnm) throw UsageError("GruModel needs model.kind = gru or gru_i");
  if (hidden_ < 1) throw UsageError("model.gru_hidden must be >= 1");
  Rng rng(derive_seed(config.seed, 0x677275ULL));
  const std::size_t H = hidden_, F = features;
  auto make = [&](const char* name, std::size_t r, std::size_t c) {
    Parameter* p = &params_.create(std::string("gru.") + name, r, c);
    init_uniform_fan_in(p->value, H, rng);
    return p;
  };
  w_ir = make("w_ir", F, H);
  w_iz = make("w_iz", F, H);
  w_in = make("w_in", F, H);
  w_hr = make("w_hr", H, H);
  w_hz = make("w_hz", H, H);
  w_hn = make("w_hn", H, H);
  b_ir = make("b_ir", 1, H);
  b_iz = make("b_iz", 1, H);
  b_in = make("b_in", 1, H);
  b_hr = make("b_hr", 1, H);
  b_hz = make("b_hz", 1, H);
  b_hn = make("b_hn", 1, H);
  w_o = make("w_o", H, static_cast<std::size_t>(config.horizon));
  b_o = make("b_o", 1, static_cast<std::size_t>(config.horizon));
  if (impute_) {
    w_p = make("w_p", H, F);
    b_p = make("b_p", 1, F);
  }
}

Matrix GruModel::forward(const WindowTensors& w, Cache& cache) const {
  cache.steps.clear();
  cache.aux_loss = 0.0;
  Matrix h(nodes_, hidden_);
  double aux_sum = 0.0, aux_count = 0.0;
  for (const auto& s : w.steps) {
    Step st;
    st.h_prev = h;
    st.x_in = s.x;
    if (impute_) {
      st.x_hat = affine(h, w_p, b_p);
      for (std::size_t i = 0; i < st.x_in.size(); ++i) {
        if (s.m.data()[i] != 0.0) {
          aux_sum += std::abs(st.x_hat.data()[i] - s.x.data()[i]);
          aux_count += 1.0;
        } else {
          st.x_in.data()[i] = st.x_hat.data()[i];
        }
      }
    }
    Matrix ar = affine(st.x_in, w_ir, b_ir);
    matmul_acc(h, w_hr->value, ar);
    add_row_broadcast(b_hr->value.row(0), ar);
    Matrix az = affine(st.x_in, w_iz, b_iz);
    matmul_acc(h, w_hz->value, az);
    add_row_broadcast(b_hz->value.row(0), az);
    st.hn = affine(h, w_hn, b_hn);
    Matrix an = affine(st.x_in, w_in, b_in);
    st.r = Matrix(nodes_, hidden_);
    st.z = Matrix(nodes_, hidden_);
    st.n = Matrix(nodes_, hidden_);
    Matrix next(nodes_, hidden_);
    for (std::size_t i = 0; i < next.size(); ++i) {
      const double r = sigmoid(ar.data()[i]);
      const double z = sigmoid(az.data()[i]);
      const double n = std::tanh(an.data()[i] + r * st.hn.data()[i]);
      st.r.data()[i] = r;
      st.z.data()[i] = z;
      st.n.data()[i] = n;
      next.data()[i] = (1.0 - z) * n + z * h.data()[i];
    }
    h = std::move(next);
    cache.steps.push_back(std::move(st));
  }
  if (aux_count > 0.0) cache.aux_loss = aux_sum / aux_count;
  cache.h_last = h;
  Matrix y = affine(h, w_o, b_o);
  if (!all_finite(y)) throw NumericError("non-finite values after recurrent baseline");
  return y;
}

void GruModel::backward(const WindowTensors& w, const Cache& cache, const Matrix& dy, double aux_weight) {
  matmul_tn_acc(cache.h_last, dy, w_o->grad);
  accumulate_column_sums(dy, b_o->grad);
  Matrix dh(nodes_, hidden_);
  matmul_nt_acc(dy, w_o->value, dh);

  double aux_count = 0.0;
  if (impute_)
    for (const auto& s : w.steps)
      for (double m : s.m.values()) aux_count += m != 0.0 ? 1.0 : 0.0;

  for (std::size_t t = cache.steps.size(); t-- > 0;) {
    const Step& st = cache.steps[t];
    const LocalStats& s = w.steps[t];
    Matrix dar(nodes_, hidden_), daz(nodes_, hidden_), dan(nodes_, hidden_), dhn(nodes_, hidden_);
    Matrix dprev(nodes_, hidden_);
    for (std::size_t i = 0; i < dh.size(); ++i) {
      const double g = dh.data()[i];
      const double r = st.r.data()[i], z = st.z.data()[i], n = st.n.data()[i];
      const double dn = g * (1.0 - z);
      const double dz = g * (st.h_prev.data()[i] - n);
      dprev.data()[i] = g * z;
      const double da_n = dn * (1.0 - n * n);
      dan.data()[i] = da_n;
      dhn.data()[i] = da_n * r;
      const double dr = da_n * st.hn.data()[i];
      dar.data()[i] = dr * r * (1.0 - r);
      daz.data()[i] = dz * z * (1.0 - z);
    }
    Matrix dx(nodes_, features_);
    for (auto [da, wi, bi, wh, bh] : {std::tuple{&dar, w_ir, b_ir, w_hr, b_hr}, std::tuple{&daz, w_iz, b_iz, w_hz, b_hz}}) {
      matmul_tn_acc(st.x_in, *da, wi->grad);
      accumulate_column_sums(*da, bi->grad);
      matmul_nt_acc(*da, wi->value, dx);
      matmul_tn_acc(st.h_prev, *da, wh->grad);
      accumulate_column_sums(*da, bh->grad);
      matmul_nt_acc(*da, wh->value, dprev);
    }
    matmul_tn_acc(st.x_in, dan, w_in->grad);
    accumulate_column_sums(dan, b_in->grad);
    matmul_nt_acc(dan, w_in->value, dx);
    matmul_tn_acc(st.h_prev, dhn, w_hn->grad);
    accumulate_column_sums(dhn, b_hn->grad);
    matmul_nt_acc(dhn, w_hn->value, dprev);

    if (impute_) {
      Matrix dxhat(nodes_, features_);
      for (std::size_t i = 0; i < dxhat.size(); ++i) {
        if (s.m.data()[i] == 0.0) {
          dxhat.data()[i] = dx.data()[i];
        } else if (aux_count > 0.0) {
          const double diff = st.x_hat.data()[i] - s.x.data()[i];
          dxhat.data()[i] = aux_weight * (diff > 0.0 ? 1.0 : diff < 0.0 ? -1.0 : 0.0) / aux_count;
        }
      }
      matmul_tn_acc(st.h_prev, dxhat, w_p->grad);
      accumulate_column_sums(dxhat, b_p->grad);
      matmul_nt_acc(dxhat, w_p->value, dprev);
    }
    dh = std::move(dprev);
  }
}

Matrix GruModel::predict(const WindowTensors& window) const {
  Cache cache;
  return forward(window, cache);
}

double GruModel::accumulate_gradients(const WindowTensors& window, double weight) {
  Cache cache;
  const Matrix y = forward(window, cache);
  const double loss = masked_mae(y, window.target, window.target_mask);
  Matrix dy = masked_mae_grad(y, window.target, window.target_mask);
  for (double& v : dy.values()) v *= weight;
  backward(window, cache, dy, weight);
  return loss;
}

double GruModel::objective(const WindowTensors& window) const {
  Cache cache;
  const Matrix y = forward(window, cache);
  return masked_mae(y, window.target, window.target_mask) + cache.aux_loss;
}

}  // namespace gcnm
