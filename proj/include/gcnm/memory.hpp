// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "gcnm/data.hpp"
#include "gcnm/matrix.hpp"
#include "gcnm/params.hpp"

namespace gcnm {

// ---- Parameter-free local statistics over the observed history ----

struct LocalMean {
  double value = 0.0;
  bool all_missing = false;
};

struct LastObservation {
  double value = 0.0;
  double distance = 0.0;
};

// Mean of the observed values in [t - L, t) (clipped at the series start).
LocalMean temporal_mean(const TrafficSeries& series, std::size_t node, std::size_t t, int L,
                        std::size_t feature = 0);

// Most recent observed value strictly before t, at most L steps back.
// Nothing observed gives (0, L).
LastObservation last_temporal(const TrafficSeries& series, std::size_t node, std::size_t t, int L,
                              std::size_t feature = 0);

// Neighbours of every node ordered by road distance (ties by index). An edge
// in either direction makes two nodes neighbours; the shorter distance wins.
class NeighborTable {
 public:
  struct Neighbor {
    std::size_t node;
    double distance;
  };

  NeighborTable() = default;
  explicit NeighborTable(const PredefinedGraph& graph);

  const std::vector<Neighbor>& of(std::size_t node) const { return neighbors_.at(node); }
  bool isolated(std::size_t node) const { return neighbors_.at(node).empty(); }
  std::size_t nodes() const { return neighbors_.size(); }
  double max_distance() const { return max_distance_; }

 private:
  std::vector<std::vector<Neighbor>> neighbors_;
  double max_distance_ = 0.0;
};

struct SpatialMean {
  double value = 0.0;
  bool all_missing = false;
  bool isolated = false;
};

// Mean of the observed readings at time t among the S nearest neighbours.
SpatialMean spatial_mean(const TrafficSeries& series, std::size_t node, std::size_t t, int S,
                         const NeighborTable& neighbors, std::size_t feature = 0);

// Closest neighbour with an observed reading at t; none gives (0, max distance).
LastObservation nearest_spatial(const TrafficSeries& series, std::size_t node, std::size_t t,
                                const NeighborTable& neighbors, std::size_t feature = 0);

// exp(-max(0, w * delta + b)), in (0, 1].
double decay(double delta, double w, double b);

// `scale` multiplies the estimate used when m = 0.
double local_feature(double x, double m, double last_temporal, double last_spatial, double mean_temporal,
                     double mean_spatial, double gamma_temporal, double gamma_spatial, double scale = 1.0);

// Per-timestep statistics feeding the local-feature layer. All N x F.
struct LocalStats {
  Matrix x;
  Matrix m;
  Matrix last_t;   // x-dot
  Matrix delta_t;  // temporal distance, steps
  Matrix mean_t;   // x-bar
  Matrix last_s;   // x-double-dot
  Matrix delta_s;  // spatial distance, scaled
  Matrix mean_s;   // x-double-bar
};

struct LocalStatsOptions {
  int L = 12;
  int S = 5;
  // Spatial distances are divided by this before entering the decay.
  double spatial_scale = 1.0;
};

LocalStats compute_local_stats(const TrafficSeries& series, std::size_t t, const NeighborTable& neighbors,
                               const LocalStatsOptions& options);

// ---- Learnable multi-scale attention memory ----

struct MemoryShape {
  std::size_t nodes = 0;
  std::size_t features = 1;
  std::size_t d = 32;
  bool normalize_local = false;
};

class MemoryModule {
 public:
  MemoryModule(ParameterSet& params, const std::string& prefix, MemoryShape shape, Rng& rng);

  struct StepCache {
    Matrix gamma_t, gamma_s;  // decay rates
    Matrix u_t, u_s;          // pre-rectifier arguments
    Matrix z;                 // local features
    Matrix qo;                // [q | o], N x 2d
    Matrix attention;         // N x slots
  };
  struct Cache {
    const std::vector<LocalStats>* steps = nullptr;
    const Sequence* slots = nullptr;
    // Per-node slot embeddings, each slots x d.
    std::vector<Matrix> keys;
    std::vector<Matrix> contents;
    std::vector<StepCache> step;
  };

  // Z_t for one timestep (no cache).
  Matrix local_features(const LocalStats& stats) const;

  // Enriched embeddings h_t (N x d) for every step of the window.
  Sequence forward(const std::vector<LocalStats>& steps, const Sequence& slots, Cache& cache) const;
  void backward(const Cache& cache, const Sequence& dh);

  // Attention memory for an already-computed Z_t; fills attention (N x slots).
  Matrix attend(const Matrix& z, const Sequence& slots, Matrix* attention = nullptr) const;

  const MemoryShape& shape() const { return shape_; }

  Parameter* w_q;
  Parameter* b_q;
  Parameter* w_m;
  Parameter* b_m;
  Parameter* w_c;
  Parameter* b_c;
  Parameter* w_h;
  Parameter* b_h;
  Parameter* decay_temporal;  // 1 x 2: (w, b)
  Parameter* decay_spatial;   // 1 x 2: (w, b)

 private:
  void embed_slots(const Sequence& slots, std::vector<Matrix>& keys, std::vector<Matrix>& contents) const;
  Matrix attend_cached(const Matrix& z, const std::vector<Matrix>& keys, const std::vector<Matrix>& contents,
                       StepCache& sc) const;

  double local_scale() const { return shape_.normalize_local ? 0.5 : 1.0; }

  MemoryShape shape_;
};

}  // namespace gcnm
