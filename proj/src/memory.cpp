// SPDX-License-Identifier: Apache-2.0
#include "gcnm/memory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include "gcnm/kernels.hpp"

namespace gcnm {

LocalMean temporal_mean(const TrafficSeries& series, std::size_t node, std::size_t t, int L,
                        std::size_t feature) {
  const std::size_t begin = t > static_cast<std::size_t>(L) ? t - static_cast<std::size_t>(L) : 0;
  double sum = 0.0;
  double count = 0.0;
  for (std::size_t l = begin; l < t; ++l) {
    if (series.observed(l, node, feature)) {
      sum += series.value(l, node, feature);
      count += 1.0;
    }
  }
  if (count == 0.0) return {0.0, true};
  return {sum / count, false};
}

LastObservation last_temporal(const TrafficSeries& series, std::size_t node, std::size_t t, int L,
                              std::size_t feature) {
  for (std::size_t k = 1; k <= static_cast<std::size_t>(L) && k <= t; ++k) {
    if (series.observed(t - k, node, feature)) return {series.value(t - k, node, feature), static_cast<double>(k)};
  }
  return {0.0, static_cast<double>(L)};
}

NeighborTable::NeighborTable(const PredefinedGraph& graph) : neighbors_(graph.nodes()) {
  std::vector<std::map<std::size_t, double>> best(graph.nodes());
  for (const auto& e : graph.edges) {
    if (e.from == e.to) continue;
    for (auto [a, b] : {std::pair{e.from, e.to}, std::pair{e.to, e.from}}) {
      auto it = best[a].find(b);
      if (it == best[a].end() || e.distance < it->second) best[a][b] = e.distance;
    }
    max_distance_ = std::max(max_distance_, e.distance);
  }
  for (std::size_t i = 0; i < best.size(); ++i) {
    for (const auto& [j, dist] : best[i]) neighbors_[i].push_back({j, dist});
    std::stable_sort(neighbors_[i].begin(), neighbors_[i].end(),
                     [](const Neighbor& a, const Neighbor& b) { return a.distance < b.distance; });
  }
}

SpatialMean spatial_mean(const TrafficSeries& series, std::size_t node, std::size_t t, int S,
                         const NeighborTable& neighbors, std::size_t feature) {
  const auto& nb = neighbors.of(node);
  if (nb.empty()) return {0.0, true, true};
  double sum = 0.0;
  double count = 0.0;
  const std::size_t limit = std::min(nb.size(), static_cast<std::size_t>(S));
  for (std::size_t s = 0; s < limit; ++s) {
    if (series.observed(t, nb[s].node, feature)) {
      sum += series.value(t, nb[s].node, feature);
      count += 1.0;
    }
  }
  if (count == 0.0) return {0.0, true, false};
  return {sum / count, false, false};
}

LastObservation nearest_spatial(const TrafficSeries& series, std::size_t node, std::size_t t,
                                const NeighborTable& neighbors, std::size_t feature) {
  for (const auto& n : neighbors.of(node)) {
    if (series.observed(t, n.node, feature)) return {series.value(t, n.node, feature), n.distance};
  }
  return {0.0, neighbors.max_distance()};
}

double decay(double delta, double w, double b) { return std::exp(-std::max(0.0, w * delta + b)); }

double local_feature(double x, double m, double last_temporal, double last_spatial, double mean_temporal,
                     double mean_spatial, double gamma_temporal, double gamma_spatial, double scale) {
  if (m != 0.0) return x;
  return scale * (gamma_temporal * last_temporal + gamma_spatial * last_spatial + (1.0 - gamma_temporal) * mean_temporal +
         (1.0 - gamma_spatial) * mean_spatial);
}

LocalStats compute_local_stats(const TrafficSeries& series, std::size_t t, const NeighborTable& neighbors,
                               const LocalStatsOptions& options) {
  const std::size_t N = series.nodes;
  const std::size_t F = series.features;
  LocalStats s{Matrix(N, F), Matrix(N, F), Matrix(N, F), Matrix(N, F),
               Matrix(N, F), Matrix(N, F), Matrix(N, F), Matrix(N, F)};
  const double scale = options.spatial_scale > 0.0 ? options.spatial_scale : 1.0;
  for (std::size_t n = 0; n < N; ++n) {
    for (std::size_t f = 0; f < F; ++f) {
      const bool obs = series.observed(t, n, f);
      s.m(n, f) = obs ? 1.0 : 0.0;
      s.x(n, f) = obs ? series.value(t, n, f) : 0.0;
      const auto lt = last_temporal(series, n, t, options.L, f);
      s.last_t(n, f) = lt.value;
      s.delta_t(n, f) = lt.distance;
      s.mean_t(n, f) = temporal_mean(series, n, t, options.L, f).value;
      const auto ls = nearest_spatial(series, n, t, neighbors, f);
      s.last_s(n, f) = ls.value;
      s.delta_s(n, f) = ls.distance / scale;
      s.mean_s(n, f) = spatial_mean(series, n, t, options.S, neighbors, f).value;
    }
  }
  return s;
}

MemoryModule::MemoryModule(ParameterSet& params, const std::string& prefix, MemoryShape shape, Rng& rng)
    : shape_(shape) {
  const std::size_t N = shape.nodes, F = shape.features, d = shape.d;
  if (N == 0 || F == 0 || d == 0) throw std::invalid_argument("memory module needs N, F, d >= 1");
  w_q = &params.create(prefix + "w_q", F, d);
  b_q = &params.create(prefix + "b_q", N, d);
  w_m = &params.create(prefix + "w_m", F, d);
  b_m = &params.create(prefix + "b_m", N, d);
  w_c = &params.create(prefix + "w_c", F, d);
  b_c = &params.create(prefix + "b_c", N, d);
  w_h = &params.create(prefix + "w_h", 2 * d, d);
  b_h = &params.create(prefix + "b_h", 1, d);
  decay_temporal = &params.create(prefix + "decay_temporal", 1, 2);
  decay_spatial = &params.create(prefix + "decay_spatial", 1, 2);
  for (auto* p : {w_q, b_q, w_m, b_m, w_c, b_c}) init_uniform_fan_in(p->value, F, rng);
  init_uniform_fan_in(w_h->value, 2 * d, rng);
  init_uniform_fan_in(b_h->value, 2 * d, rng);
  // Start with gentle decays: gamma ~ exp(-0.1 * steps), exp(-0.5 * scaled distance).
  decay_temporal->value(0, 0) = 0.1;
  decay_temporal->value(0, 1) = 0.0;
  decay_spatial->value(0, 0) = 0.5;
  decay_spatial->value(0, 1) = 0.0;
}

Matrix MemoryModule::local_features(const LocalStats& s) const {
  const double wt = decay_temporal->value(0, 0), bt = decay_temporal->value(0, 1);
  const double ws = decay_spatial->value(0, 0), bs = decay_spatial->value(0, 1);
  Matrix z(s.x.rows(), s.x.cols());
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double gt = decay(s.delta_t.data()[i], wt, bt);
    const double gs = decay(s.delta_s.data()[i], ws, bs);
    z.data()[i] = local_feature(s.x.data()[i], s.m.data()[i], s.last_t.data()[i], s.last_s.data()[i],
                                s.mean_t.data()[i], s.mean_s.data()[i], gt, gs, local_scale());
  }
  return z;
}

void MemoryModule::embed_slots(const Sequence& slots, std::vector<Matrix>& keys,
                               std::vector<Matrix>& contents) const {
  const std::size_t N = shape_.nodes, d = shape_.d, S = slots.size();
  if (S == 0) throw std::invalid_argument("memory attention needs at least one slot");
  keys.assign(N, Matrix(S, d));
  contents.assign(N, Matrix(S, d));
  for (std::size_t i = 0; i < S; ++i) {
    Matrix mk = b_m->value;
    matmul_acc(slots[i], w_m->value, mk);
    Matrix mc = b_c->value;
    matmul_acc(slots[i], w_c->value, mc);
    for (std::size_t n = 0; n < N; ++n) {
      std::copy_n(mk.row(n).data(), d, keys[n].row(i).data());
      std::copy_n(mc.row(n).data(), d, contents[n].row(i).data());
    }
  }
}

Matrix MemoryModule::attend_cached(const Matrix& z, const std::vector<Matrix>& keys,
                                   const std::vector<Matrix>& contents, StepCache& sc) const {
  const auto& k = kernels::active();
  const std::size_t N = shape_.nodes, d = shape_.d;
  const std::size_t S = keys.front().rows();
  Matrix q = b_q->value;
  matmul_acc(z, w_q->value, q);
  sc.qo = Matrix(N, 2 * d);
  sc.attention = Matrix(N, S);
  for (std::size_t n = 0; n < N; ++n) {
    double* qo = sc.qo.row(n).data();
    std::copy_n(q.row(n).data(), d, qo);
    double* p = sc.attention.row(n).data();
    k.gemm_nt(1, S, d, qo, keys[n].data(), p);
    const double top = *std::max_element(p, p + S);
    double total = 0.0;
    for (std::size_t i = 0; i < S; ++i) {
      p[i] = std::exp(p[i] - top);
      total += p[i];
    }
    for (std::size_t i = 0; i < S; ++i) p[i] /= total;
    k.gemm_nn(1, d, S, p, contents[n].data(), qo + d);
  }
  Matrix h(N, d);
  for (std::size_t n = 0; n < N; ++n) std::copy_n(b_h->value.data(), d, h.row(n).data());
  matmul_acc(sc.qo, w_h->value, h);
  return h;
}

Matrix MemoryModule::attend(const Matrix& z, const Sequence& slots, Matrix* attention) const {
  std::vector<Matrix> keys, contents;
  embed_slots(slots, keys, contents);
  StepCache sc;
  Matrix h = attend_cached(z, keys, contents, sc);
  if (attention != nullptr) *attention = sc.attention;
  return h;
}

Sequence MemoryModule::forward(const std::vector<LocalStats>& steps, const Sequence& slots, Cache& cache) const {
  cache.steps = &steps;
  cache.slots = &slots;
  embed_slots(slots, cache.keys, cache.contents);
  cache.step.assign(steps.size(), StepCache{});
  const double wt = decay_temporal->value(0, 0), bt = decay_temporal->value(0, 1);
  const double ws = decay_spatial->value(0, 0), bs = decay_spatial->value(0, 1);
  Sequence out;
  out.reserve(steps.size());
  for (std::size_t t = 0; t < steps.size(); ++t) {
    const LocalStats& s = steps[t];
    StepCache& sc = cache.step[t];
    const std::size_t count = s.x.size();
    sc.gamma_t = Matrix(s.x.rows(), s.x.cols());
    sc.gamma_s = Matrix(s.x.rows(), s.x.cols());
    sc.u_t = Matrix(s.x.rows(), s.x.cols());
    sc.u_s = Matrix(s.x.rows(), s.x.cols());
    sc.z = Matrix(s.x.rows(), s.x.cols());
    for (std::size_t i = 0; i < count; ++i) {
      const double ut = wt * s.delta_t.data()[i] + bt;
      const double us = ws * s.delta_s.data()[i] + bs;
      const double gt = std::exp(-std::max(0.0, ut));
      const double gs = std::exp(-std::max(0.0, us));
      sc.u_t.data()[i] = ut;
      sc.u_s.data()[i] = us;
      sc.gamma_t.data()[i] = gt;
      sc.gamma_s.data()[i] = gs;
      sc.z.data()[i] = local_feature(s.x.data()[i], s.m.data()[i], s.last_t.data()[i], s.last_s.data()[i],
                                     s.mean_t.data()[i], s.mean_s.data()[i], gt, gs, local_scale());
    }
    out.push_back(attend_cached(sc.z, cache.keys, cache.contents, sc));
  }
  return out;
}

void MemoryModule::backward(const Cache& cache, const Sequence& dh) {
  const auto& k = kernels::active();
  const std::size_t N = shape_.nodes, d = shape_.d;
  const std::size_t S = cache.keys.front().rows();
  std::vector<Matrix> dkeys(N, Matrix(S, d));
  std::vector<Matrix> dcontents(N, Matrix(S, d));
  std::vector<double> dp(S), ds(S);
  double dwt = 0.0, dbt = 0.0, dws = 0.0, dbs = 0.0;

  for (std::size_t t = 0; t < dh.size(); ++t) {
    const StepCache& sc = cache.step[t];
    const LocalStats& s = (*cache.steps)[t];
    const Matrix& g = dh[t];
    matmul_tn_acc(sc.qo, g, w_h->grad);
    accumulate_column_sums(g, b_h->grad);
    Matrix dqo(N, 2 * d);
    matmul_nt_acc(g, w_h->value, dqo);

    Matrix dq(N, d);
    for (std::size_t n = 0; n < N; ++n) {
      const double* q = sc.qo.row(n).data();
      const double* dout = dqo.row(n).data() + d;
      const double* p = sc.attention.row(n).data();
      std::fill(dp.begin(), dp.end(), 0.0);
      // dp = contents[n] * dout
      k.gemm_nt(1, S, d, dout, cache.contents[n].data(), dp.data());
      // dcontents[n] += p^T dout
      k.gemm_nn(S, d, 1, p, dout, dcontents[n].data());
      const double mean = k.dot(S, p, dp.data());
      for (std::size_t i = 0; i < S; ++i) ds[i] = p[i] * (dp[i] - mean);
      double* dqn = dq.row(n).data();
      std::copy_n(dqo.row(n).data(), d, dqn);
      k.gemm_nn(1, d, S, ds.data(), cache.keys[n].data(), dqn);
      k.gemm_nn(S, d, 1, ds.data(), q, dkeys[n].data());
    }
    matmul_tn_acc(sc.z, dq, w_q->grad);
    axpy(1.0, dq, b_q->grad);
    Matrix dz(sc.z.rows(), sc.z.cols());
    matmul_nt_acc(dq, w_q->value, dz);

    for (std::size_t i = 0; i < dz.size(); ++i) {
      if (s.m.data()[i] != 0.0) continue;
      const double dgt = local_scale() * dz.data()[i] * (s.last_t.data()[i] - s.mean_t.data()[i]);
      const double dgs = local_scale() * dz.data()[i] * (s.last_s.data()[i] - s.mean_s.data()[i]);
      if (sc.u_t.data()[i] > 0.0) {
        const double du = -sc.gamma_t.data()[i] * dgt;
        dwt += du * s.delta_t.data()[i];
        dbt += du;
      }
      if (sc.u_s.data()[i] > 0.0) {
        const double du = -sc.gamma_s.data()[i] * dgs;
        dws += du * s.delta_s.data()[i];
        dbs += du;
      }
    }
  }
  decay_temporal->grad(0, 0) += dwt;
  decay_temporal->grad(0, 1) += dbt;
  decay_spatial->grad(0, 0) += dws;
  decay_spatial->grad(0, 1) += dbs;

  const Sequence& slots = *cache.slots;
  Matrix dmk(N, d), dmc(N, d);
  for (std::size_t i = 0; i < S; ++i) {
    for (std::size_t n = 0; n < N; ++n) {
      std::copy_n(dkeys[n].row(i).data(), d, dmk.row(n).data());
      std::copy_n(dcontents[n].row(i).data(), d, dmc.row(n).data());
    }
    matmul_tn_acc(slots[i], dmk, w_m->grad);
    axpy(1.0, dmk, b_m->grad);
    matmul_tn_acc(slots[i], dmc, w_c->grad);
    axpy(1.0, dmc, b_c->grad);
  }
}

}  // namespace gcnm
