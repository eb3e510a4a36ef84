#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "acrkn/params.hpp"

namespace acrkn {

enum class OptRule { kSgd, kAdam };

inline const char* opt_rule_name(OptRule r) {
  return r == OptRule::kSgd ? "sgd" : "adam";
}
inline OptRule opt_rule_from_name(const std::string& s) {
  if (s == "sgd") return OptRule::kSgd;
  if (s == "adam") return OptRule::kAdam;
  throw Error("unknown optimizer rule '" + s + "'");
}

struct OptConfig {
  OptRule rule = OptRule::kAdam;
  double lr = 1e-3;
  double momentum = 0.0;  // sgd only
  double beta1 = 0.9;     // adam
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// SGD with optional momentum, or Adam with bias correction. State vectors
/// are keyed by store index; the store must not grow after construction.
class Optimizer {
 public:
  Optimizer(const ParamStore& params, OptConfig cfg) : cfg_(cfg) {
    m_.reserve(params.count());
    v_.reserve(params.count());
    for (std::size_t i = 0; i < params.count(); ++i) {
      m_.push_back(Tensor::zeros(params.value(static_cast<int>(i)).shape));
      v_.push_back(Tensor::zeros(params.value(static_cast<int>(i)).shape));
    }
  }

  const OptConfig& config() const { return cfg_; }
  long step_count() const { return step_; }

  /// One update from the accumulated gradients; zeroes them afterwards.
  /// A non-finite gradient aborts before any parameter is touched.
  void step(ParamStore& params) {
    if (params.count() != m_.size()) throw Error("optimizer: store size changed");
    for (std::size_t i = 0; i < params.count(); ++i) {
      if (!params.grad(static_cast<int>(i)).all_finite())
        throw Error("optimizer: non-finite gradient for param '" +
                    params.name(static_cast<int>(i)) + "'");
    }
    ++step_;
    for (std::size_t i = 0; i < params.count(); ++i) {
      Tensor& p = params.value(static_cast<int>(i));
      const Tensor& g = params.grad(static_cast<int>(i));
      if (cfg_.rule == OptRule::kSgd) {
        Tensor& mom = m_[i];
        for (std::size_t k = 0; k < p.size(); ++k) {
          mom.v[k] = cfg_.momentum * mom.v[k] + g.v[k];
          p.v[k] -= cfg_.lr * mom.v[k];
        }
      } else {
        Tensor& m = m_[i];
        Tensor& v = v_[i];
        double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
        double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
        for (std::size_t k = 0; k < p.size(); ++k) {
          m.v[k] = cfg_.beta1 * m.v[k] + (1.0 - cfg_.beta1) * g.v[k];
          v.v[k] = cfg_.beta2 * v.v[k] + (1.0 - cfg_.beta2) * g.v[k] * g.v[k];
          double mhat = m.v[k] / bc1;
          double vhat = v.v[k] / bc2;
          p.v[k] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
        }
      }
    }
    params.zero_grads();
  }

 private:
  OptConfig cfg_;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
  long step_ = 0;
};

/// Scales gradients so their global norm is at most max_norm. Returns the
/// norm before clipping. max_norm <= 0 disables clipping.
inline double clip_grad_norm(ParamStore& params, double max_norm) {
  double norm = params.grad_norm();
  if (max_norm > 0.0 && norm > max_norm) params.scale_grads(max_norm / norm);
  return norm;
}

}  // namespace acrkn
