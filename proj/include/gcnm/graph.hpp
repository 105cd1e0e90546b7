// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gcnm/matrix.hpp"
#include "gcnm/params.hpp"

namespace gcnm {

// dynamic: graphs from the enriched embeddings (default)
// obs:     graphs from projected raw observations
// adp:     one learned static graph
// pre:     the predefined road graph only
// com:     predefined + learned static graph, summed
enum class GraphMode { dynamic, obs, adp, pre, com };

GraphMode parse_graph_mode(std::string_view text);
std::string_view graph_mode_name(GraphMode mode);

// tanh clamped to the largest double below 1 in magnitude, so a
// saturated entry still lies inside the open interval.
double saturating_tanh(double x);

// Rows scaled to sum to 1; all-zero rows stay zero.
Matrix row_normalize(const Matrix& a);
// Gradient w.r.t. a given the gradient w.r.t. row_normalize(a).
Matrix row_normalize_backward(const Matrix& a, const Matrix& dp);

// P^0 .. P^K.
std::vector<Matrix> transition_powers(const Matrix& p, int K);

// sum_k P^k h W_k, evaluated as v_k = P v_{k-1}. W holds K+1 matrices.
struct DiffusionCache {
  std::vector<Matrix> v;  // v_k = P^k h
};
Matrix diffuse(const Matrix& p, const Matrix& h, std::span<Parameter* const> w, DiffusionCache* cache);
// Accumulates into W grads, *dh and *dp (either may be null).
void diffuse_backward(const Matrix& p, std::span<Parameter* const> w, const DiffusionCache& cache,
                      const Matrix& dout, Matrix* dh, Matrix* dp);

// F_t = sum_k P^k h_t W_k with P the row-normalized predefined adjacency.
Matrix dynamic_filter(const Matrix& h, const Matrix& transition, std::span<Parameter* const> w);

// relu(tanh(alpha (E1h E2h^T - E2h E1h^T))). The argument is formed as G - G^T
// so it is exactly antisymmetric and at most one of A[i][j], A[j][i] is nonzero.
Matrix build_dynamic_graph(const Matrix& e1_hat, const Matrix& e2_hat, double alpha, Matrix* s_out = nullptr,
                           Matrix* t_out = nullptr);

struct GraphOptions {
  std::size_t nodes = 0;
  std::size_t d = 32;
  int K = 2;
  double alpha = 3.0;
  // Literal reading: the first filter bank feeds both embeddings.
  bool shared_filter = false;
};

class GraphConstructor {
 public:
  GraphConstructor(ParameterSet& params, const std::string& prefix, const GraphOptions& options, Rng& rng);

  struct Cache {
    DiffusionCache diff1, diff2;
    Matrix f1, f2;
    Matrix e1_hat, e2_hat;
    Matrix s, t;  // antisymmetric argument and its saturating tanh
  };

  Matrix forward(const Matrix& h, const Matrix& transition, Cache& cache) const;
  // Adds the gradient w.r.t. h into dh.
  void backward(const Cache& cache, const Matrix& transition, const Matrix& da, Matrix& dh);

  const GraphOptions& options() const { return options_; }

  Parameter* e1;
  Parameter* e2;
  std::vector<Parameter*> w1;
  std::vector<Parameter*> w2;

 private:
  std::span<Parameter* const> second_bank() const { return options_.shared_filter ? w1 : w2; }

  GraphOptions options_;
};

// softmax(relu(E1 E2^T)) row-wise; time-invariant.
class AdaptiveGraph {
 public:
  AdaptiveGraph(ParameterSet& params, const std::string& prefix, std::size_t nodes, std::size_t d, Rng& rng);

  struct Cache {
    Matrix logits;  // E1 E2^T before relu
    Matrix a;
  };
  Matrix forward(Cache& cache) const;
  void backward(const Cache& cache, const Matrix& da);

  Parameter* e1;
  Parameter* e2;
};

}  // namespace gcnm
