// SPDX-License-Identifier: Apache-2.0
#include "gcnm/graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "gcnm/error.hpp"

namespace gcnm {

GraphMode parse_graph_mode(std::string_view text) {
  if (text == "dynamic") return GraphMode::dynamic;
  if (text == "obs") return GraphMode::obs;
  if (text == "adp") return GraphMode::adp;
  if (text == "pre") return GraphMode::pre;
  if (text == "com") return GraphMode::com;
  throw UsageError("unknown graph mode '" + std::string(text) + "' (expected dynamic|obs|adp|pre|com)");
}

std::string_view graph_mode_name(GraphMode mode) {
  switch (mode) {
    case GraphMode::dynamic: return "dynamic";
    case GraphMode::obs: return "obs";
    case GraphMode::adp: return "adp";
    case GraphMode::pre: return "pre";
    case GraphMode::com: return "com";
  }
  return "dynamic";
}

double saturating_tanh(double x) {
  static const double kBelowOne = std::nextafter(1.0, 0.0);
  return std::clamp(std::tanh(x), -kBelowOne, kBelowOne);
}

Matrix row_normalize(const Matrix& a) {
  Matrix p(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double r = 0.0;
    for (double v : a.row(i)) r += v;
    if (r == 0.0) continue;
    auto src = a.row(i);
    auto dst = p.row(i);
    for (std::size_t j = 0; j < a.cols(); ++j) dst[j] = src[j] / r;
  }
  return p;
}

Matrix row_normalize_backward(const Matrix& a, const Matrix& dp) {
  Matrix da(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double r = 0.0;
    for (double v : a.row(i)) r += v;
    if (r == 0.0) continue;
    auto ai = a.row(i);
    auto gi = dp.row(i);
    double inner = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) inner += gi[j] * ai[j];
    inner /= r;
    auto out = da.row(i);
    for (std::size_t j = 0; j < a.cols(); ++j) out[j] = (gi[j] - inner) / r;
  }
  return da;
}

std::vector<Matrix> transition_powers(const Matrix& p, int K) {
  if (K < 0) throw std::invalid_argument("diffusion depth must be >= 0");
  if (p.rows() != p.cols()) throw std::invalid_argument("transition matrix must be square");
  std::vector<Matrix> out;
  out.push_back(Matrix::identity(p.rows()));
  for (int k = 1; k <= K; ++k) out.push_back(matmul(p, out.back()));
  return out;
}

Matrix diffuse(const Matrix& p, const Matrix& h, std::span<Parameter* const> w, DiffusionCache* cache) {
  Matrix out(h.rows(), w.front()->value.cols());
  Matrix v = h;
  matmul_acc(v, w[0]->value, out);
  if (cache != nullptr) {
    cache->v.clear();
    cache->v.push_back(v);
  }
  for (std::size_t k = 1; k < w.size(); ++k) {
    v = matmul(p, v);
    matmul_acc(v, w[k]->value, out);
    if (cache != nullptr) cache->v.push_back(v);
  }
  return out;
}

void diffuse_backward(const Matrix& p, std::span<Parameter* const> w, const DiffusionCache& cache,
                      const Matrix& dout, Matrix* dh, Matrix* dp) {
  const std::size_t K = w.size() - 1;
  Matrix dv(cache.v[K].rows(), cache.v[K].cols());
  for (std::size_t k = K + 1; k-- > 0;) {
    matmul_tn_acc(cache.v[k], dout, w[k]->grad);
    matmul_nt_acc(dout, w[k]->value, dv);
    if (k == 0) break;
    if (dp != nullptr) matmul_nt_acc(dv, cache.v[k - 1], *dp);
    Matrix prev(dv.rows(), dv.cols());
    matmul_tn_acc(p, dv, prev);
    dv = std::move(prev);
  }
  if (dh != nullptr) axpy(1.0, dv, *dh);
}

Matrix dynamic_filter(const Matrix& h, const Matrix& transition, std::span<Parameter* const> w) {
  return diffuse(transition, h, w, nullptr);
}

Matrix build_dynamic_graph(const Matrix& e1_hat, const Matrix& e2_hat, double alpha, Matrix* s_out,
                           Matrix* t_out) {
  const std::size_t n = e1_hat.rows();
  Matrix g(n, n);
  matmul_nt_acc(e1_hat, e2_hat, g);
  Matrix s(n, n), t(n, n), a(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double sij = g(i, j) - g(j, i);
      s(i, j) = sij;
      t(i, j) = saturating_tanh(alpha * sij);
      a(i, j) = sij > 0.0 ? t(i, j) : 0.0;
    }
  }
  if (s_out != nullptr) *s_out = std::move(s);
  if (t_out != nullptr) *t_out = std::move(t);
  return a;
}

GraphConstructor::GraphConstructor(ParameterSet& params, const std::string& prefix, const GraphOptions& options,
                                   Rng& rng)
    : options_(options) {
  const std::size_t n = options.nodes, d = options.d;
  if (options.K < 0) throw UsageError("graph.K must be >= 0");
  if (!(options.alpha > 0.0)) throw UsageError("graph.alpha must be > 0");
  e1 = &params.create(prefix + "e1", n, d);
  e2 = &params.create(prefix + "e2", n, d);
  init_uniform_fan_in(e1->value, d, rng);
  init_uniform_fan_in(e2->value, d, rng);
  for (int k = 0; k <= options.K; ++k) {
    w1.push_back(&params.create(prefix + "w1_" + std::to_string(k), d, d));
    init_uniform_fan_in(w1.back()->value, d, rng);
  }
  if (!options.shared_filter) {
    for (int k = 0; k <= options.K; ++k) {
      w2.push_back(&params.create(prefix + "w2_" + std::to_string(k), d, d));
      init_uniform_fan_in(w2.back()->value, d, rng);
    }
  }
}

namespace {

Matrix gated_embedding(const Matrix& f, const Matrix& e, double alpha) {
  Matrix out(f.rows(), f.cols());
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = std::tanh(alpha * f.data()[i] * e.data()[i]);
  return out;
}

// Backward of tanh(alpha * f .* e): adds into df and de.
void gated_embedding_backward(const Matrix& f, const Matrix& e, const Matrix& y, const Matrix& dy, double alpha,
                              Matrix& df, Matrix& de) {
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double du = alpha * dy.data()[i] * (1.0 - y.data()[i] * y.data()[i]);
    df.data()[i] += du * e.data()[i];
    de.data()[i] += du * f.data()[i];
  }
}

}  // namespace

Matrix GraphConstructor::forward(const Matrix& h, const Matrix& transition, Cache& cache) const {
  cache.f1 = diffuse(transition, h, w1, &cache.diff1);
  cache.f2 = diffuse(transition, h, second_bank(), &cache.diff2);
  cache.e1_hat = gated_embedding(cache.f1, e1->value, options_.alpha);
  cache.e2_hat = gated_embedding(cache.f2, e2->value, options_.alpha);
  return build_dynamic_graph(cache.e1_hat, cache.e2_hat, options_.alpha, &cache.s, &cache.t);
}

void GraphConstructor::backward(const Cache& cache, const Matrix& transition, const Matrix& da, Matrix& dh) {
  const std::size_t n = da.rows();
  const double alpha = options_.alpha;
  Matrix ds(n, n);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (cache.s.data()[i] > 0.0) {
      const double t = cache.t.data()[i];
      ds.data()[i] = da.data()[i] * (1.0 - t * t) * alpha;
    }
  }
  Matrix dg = ds;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) dg(i, j) -= ds(j, i);

  Matrix de1_hat(cache.e1_hat.rows(), cache.e1_hat.cols());
  Matrix de2_hat(cache.e2_hat.rows(), cache.e2_hat.cols());
  matmul_acc(dg, cache.e2_hat, de1_hat);
  matmul_tn_acc(dg, cache.e1_hat, de2_hat);

  Matrix df1(cache.f1.rows(), cache.f1.cols());
  Matrix df2(cache.f2.rows(), cache.f2.cols());
  gated_embedding_backward(cache.f1, e1->value, cache.e1_hat, de1_hat, alpha, df1, e1->grad);
  gated_embedding_backward(cache.f2, e2->value, cache.e2_hat, de2_hat, alpha, df2, e2->grad);
  diffuse_backward(transition, w1, cache.diff1, df1, &dh, nullptr);
  diffuse_backward(transition, second_bank(), cache.diff2, df2, &dh, nullptr);
}

AdaptiveGraph::AdaptiveGraph(ParameterSet& params, const std::string& prefix, std::size_t nodes, std::size_t d,
                             Rng& rng) {
  e1 = &params.create(prefix + "e1", nodes, d);
  e2 = &params.create(prefix + "e2", nodes, d);
  init_uniform_fan_in(e1->value, d, rng);
  init_uniform_fan_in(e2->value, d, rng);
}

Matrix AdaptiveGraph::forward(Cache& cache) const {
  const std::size_t n = e1->value.rows();
  cache.logits = Matrix(n, n);
  matmul_nt_acc(e1->value, e2->value, cache.logits);
  cache.a = Matrix(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    auto l = cache.logits.row(i);
    auto a = cache.a.row(i);
    double top = 0.0;
    for (double v : l) top = std::max(top, v);
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      a[j] = std::exp(std::max(0.0, l[j]) - top);
      total += a[j];
    }
    for (double& v : a) v /= total;
  }
  return cache.a;
}

void AdaptiveGraph::backward(const Cache& cache, const Matrix& da) {
  const std::size_t n = da.rows();
  Matrix dl(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    auto a = cache.a.row(i);
    auto g = da.row(i);
    double inner = 0.0;
    for (std::size_t j = 0; j < n; ++j) inner += a[j] * g[j];
    for (std::size_t j = 0; j < n; ++j)
      if (cache.logits(i, j) > 0.0) dl(i, j) = a[j] * (g[j] - inner);
  }
  matmul_acc(dl, e2->value, e1->grad);
  matmul_tn_acc(dl, e1->value, e2->grad);
}

}  // namespace gcnm
