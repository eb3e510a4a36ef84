#pragma once

#include <cmath>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "acrkn/rng.hpp"
#include "acrkn/tensor.hpp"

namespace acrkn {

/// Named parameter tensors with per-parameter gradient accumulators.
/// Iteration order is insertion order, which is what makes checkpoints,
/// optimizers and gradient reports stable across runs.
class ParamStore {
 public:
  int add(const std::string& name, Tensor init) {
    if (index_.count(name)) throw Error("param '" + name + "' already exists");
    int id = static_cast<int>(values_.size());
    index_.emplace(name, id);
    names_.push_back(name);
    grads_.push_back(Tensor::zeros(init.shape));
    values_.push_back(std::move(init));
    return id;
  }

  bool has(std::string_view name) const {
    return index_.count(std::string(name)) > 0;
  }
  int index(std::string_view name) const {
    auto it = index_.find(std::string(name));
    if (it == index_.end()) throw Error("unknown param '" + std::string(name) + "'");
    return it->second;
  }

  std::size_t count() const { return values_.size(); }
  const std::string& name(int id) const { return names_.at(id); }

  Tensor& value(int id) { return values_.at(id); }
  const Tensor& value(int id) const { return values_.at(id); }
  Tensor& grad(int id) { return grads_.at(id); }
  const Tensor& grad(int id) const { return grads_.at(id); }

  std::size_t total_size() const {
    std::size_t n = 0;
    for (const auto& t : values_) n += t.size();
    return n;
  }

  void zero_grads() {
    for (auto& g : grads_) std::fill(g.v.begin(), g.v.end(), 0.0);
  }

  double grad_norm() const {
    double s = 0.0;
    for (const auto& g : grads_)
      for (double x : g.v) s += x * x;
    return std::sqrt(s);
  }

  void scale_grads(double factor) {
    for (auto& g : grads_)
      for (double& x : g.v) x *= factor;
  }

  std::vector<Tensor> snapshot_values() const { return values_; }
  void restore_values(const std::vector<Tensor>& snap) {
    if (snap.size() != values_.size()) throw Error("snapshot size mismatch");
    for (std::size_t i = 0; i < snap.size(); ++i) {
      if (!same_shape(snap[i], values_[i])) throw Error("snapshot shape mismatch");
      values_[i] = snap[i];
    }
  }

 private:
  std::vector<std::string> names_;
  std::vector<Tensor> values_;
  std::vector<Tensor> grads_;
  std::unordered_map<std::string, int> index_;
};

/// Weight matrix with fan-in scaled uniform entries, the default init for
/// every dense layer in this library.
inline Tensor uniform_fan_in(std::size_t rows, std::size_t cols, Rng& rng) {
  double s = 1.0 / std::sqrt(static_cast<double>(cols));
  Tensor w = Tensor::zeros({rows, cols});
  for (double& x : w.v) x = rng.uniform(-s, s);
  return w;
}

}  // namespace acrkn
