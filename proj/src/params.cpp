// SPDX-License-Identifier: Apache-2.0
#include "gcnm/params.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

namespace gcnm {

Parameter& ParameterSet::create(std::string name, std::size_t rows, std::size_t cols) {
  if (find(name) != nullptr) throw std::logic_error("duplicate parameter name: " + name);
  params_.push_back(Parameter{std::move(name), Matrix(rows, cols), Matrix(rows, cols)});
  return params_.back();
}

Parameter* ParameterSet::find(const std::string& name) {
  for (auto& p : params_)
    if (p.name == name) return &p;
  return nullptr;
}

const Parameter* ParameterSet::find(const std::string& name) const {
  for (const auto& p : params_)
    if (p.name == name) return &p;
  return nullptr;
}

std::vector<Parameter*> ParameterSet::all() {
  std::vector<Parameter*> out;
  out.reserve(params_.size());
  for (auto& p : params_) out.push_back(&p);
  return out;
}

std::vector<const Parameter*> ParameterSet::all() const {
  std::vector<const Parameter*> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(&p);
  return out;
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

void ParameterSet::zero_grad() {
  for (auto& p : params_) p.grad.set_zero();
}

void ParameterSet::scale_grad(double factor) {
  for (auto& p : params_)
    for (double& g : p.grad.values()) g *= factor;
}

void ParameterSet::copy_values_from(const ParameterSet& other) {
  for (auto& p : params_) {
    const Parameter* src = other.find(p.name);
    if (src == nullptr || !src->value.same_shape(p.value))
      throw std::invalid_argument("parameter mismatch on copy: " + p.name);
    p.value = src->value;
  }
}

std::vector<Matrix> ParameterSet::snapshot() const {
  std::vector<Matrix> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p.value);
  return out;
}

void ParameterSet::restore(const std::vector<Matrix>& values) {
  if (values.size() != params_.size()) throw std::invalid_argument("restore: count mismatch");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!values[i].same_shape(params_[i].value))
      throw std::invalid_argument("restore: shape mismatch for " + params_[i].name);
    params_[i].value = values[i];
  }
}

std::uint64_t ParameterSet::checksum() const {
  std::uint64_t h = 1469598103934665603ULL;
  for (const auto& p : params_) {
    for (double v : p.value.values()) {
      unsigned char bytes[sizeof(double)];
      std::memcpy(bytes, &v, sizeof(double));
      for (unsigned char b : bytes) {
        h ^= b;
        h *= 1099511628211ULL;
      }
    }
  }
  return h;
}

void init_uniform(Matrix& m, double bound, Rng& rng) {
  for (double& v : m.values()) v = rng.uniform(-bound, bound);
}

void init_uniform_fan_in(Matrix& m, std::size_t fan_in, Rng& rng) {
  init_uniform(m, 1.0 / std::sqrt(static_cast<double>(fan_in == 0 ? 1 : fan_in)), rng);
}

Adam::Adam(ParameterSet& params, AdamOptions options)
    : params_(params.all()), options_(options) {
  for (const auto* p : params_) {
    m_.emplace_back(p->value.rows(), p->value.cols());
    v_.emplace_back(p->value.rows(), p->value.cols());
  }
}

void Adam::step() {
  ++t_;
  const double b1 = options_.beta1;
  const double b2 = options_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto value = params_[i]->value.values();
    auto grad = params_[i]->grad.values();
    auto m = m_[i].values();
    auto v = v_[i].values();
    for (std::size_t j = 0; j < value.size(); ++j) {
      m[j] = b1 * m[j] + (1.0 - b1) * grad[j];
      v[j] = b2 * v[j] + (1.0 - b2) * grad[j] * grad[j];
      const double mhat = m[j] / c1;
      const double vhat = v[j] / c2;
      value[j] -= options_.learning_rate * mhat / (std::sqrt(vhat) + options_.epsilon);
    }
  }
}

void Adam::load_state(std::int64_t steps, std::vector<Matrix> m, std::vector<Matrix> v) {
  if (m.size() != m_.size() || v.size() != v_.size())
    throw std::invalid_argument("Adam::load_state: moment count mismatch");
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (!m[i].same_shape(m_[i]) || !v[i].same_shape(v_[i]))
      throw std::invalid_argument("Adam::load_state: moment shape mismatch");
  }
  t_ = steps;
  m_ = std::move(m);
  v_ = std::move(v);
}

}  // namespace gcnm
