// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <deque>
#include <string>
#include <vector>

#include "gcnm/matrix.hpp"
#include "gcnm/rng.hpp"

namespace gcnm {

struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;
};

// Owns named parameters with stable addresses; layers keep raw pointers.
class ParameterSet {
 public:
  ParameterSet() = default;
  ParameterSet(const ParameterSet&) = delete;
  ParameterSet& operator=(const ParameterSet&) = delete;

  Parameter& create(std::string name, std::size_t rows, std::size_t cols);
  Parameter* find(const std::string& name);
  const Parameter* find(const std::string& name) const;

  std::vector<Parameter*> all();
  std::vector<const Parameter*> all() const;
  std::size_t count() const { return params_.size(); }
  std::size_t scalar_count() const;

  void zero_grad();
  void scale_grad(double factor);
  // Copies values from another set with identical names and shapes.
  void copy_values_from(const ParameterSet& other);
  std::vector<Matrix> snapshot() const;
  void restore(const std::vector<Matrix>& values);
  // FNV-1a over the raw bytes of every value, in creation order.
  std::uint64_t checksum() const;

 private:
  std::deque<Parameter> params_;
};

// uniform(-bound, bound) with bound = 1/sqrt(fan_in).
void init_uniform_fan_in(Matrix& m, std::size_t fan_in, Rng& rng);
void init_uniform(Matrix& m, double bound, Rng& rng);

struct AdamOptions {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class Adam {
 public:
  Adam(ParameterSet& params, AdamOptions options);

  void step();
  std::int64_t steps() const { return t_; }

  // Moments are exposed for checkpointing, in parameter order.
  const std::vector<Matrix>& first_moments() const { return m_; }
  const std::vector<Matrix>& second_moments() const { return v_; }
  void load_state(std::int64_t steps, std::vector<Matrix> m, std::vector<Matrix> v);

 private:
  std::vector<Parameter*> params_;
  AdamOptions options_;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
  std::int64_t t_ = 0;
};

}  // namespace gcnm
