#pragma once

#include <string>
#include <vector>

#include "acrkn/cell.hpp"
#include "acrkn/graph.hpp"
#include "acrkn/mlp.hpp"

namespace acrkn {

/// Observation encoder: shared ReLU trunk, then a linear mean head and a
/// linear variance head squashed through elu_plus_one, so sigma_obs > 0 for
/// every finite input.
class Encoder {
 public:
  Encoder() = default;

  Encoder(ParamStore& ps, const std::string& prefix, std::size_t d_in,
          const std::vector<std::size_t>& hidden, std::size_t m, Rng& rng)
      : d_in_(d_in), m_(m) {
    if (hidden.empty()) throw Error("encoder: at least one hidden layer required");
    std::size_t prev = d_in;
    for (std::size_t l = 0; l < hidden.size(); ++l) {
      trunk_w_.push_back(ps.add(prefix + "/w" + std::to_string(l),
                                uniform_fan_in(hidden[l], prev, rng)));
      trunk_b_.push_back(ps.add(prefix + "/b" + std::to_string(l), Tensor::zeros({hidden[l]})));
      prev = hidden[l];
    }
    mean_w_ = ps.add(prefix + "/mean_w", uniform_fan_in(m, prev, rng));
    mean_b_ = ps.add(prefix + "/mean_b", Tensor::zeros({m}));
    var_w_ = ps.add(prefix + "/var_w", uniform_fan_in(m, prev, rng));
    var_b_ = ps.add(prefix + "/var_b", Tensor::zeros({m}));
  }

  LatentObs encode(Graph& g, Var o) const {
    if (o.val().size() != d_in_)
      throw Error("encoder: input length " + std::to_string(o.val().size()) +
                  ", expected " + std::to_string(d_in_));
    Var h = o;
    for (std::size_t l = 0; l < trunk_w_.size(); ++l)
      h = relu(matvec(make_param(g, trunk_w_[l]), h) + make_param(g, trunk_b_[l]));
    LatentObs out;
    out.w = matvec(make_param(g, mean_w_), h) + make_param(g, mean_b_);
    out.sigma_obs = elu_plus_one(matvec(make_param(g, var_w_), h) + make_param(g, var_b_));
    return out;
  }

  std::size_t input_dim() const { return d_in_; }
  std::size_t latent_dim() const { return m_; }

 private:
  std::vector<int> trunk_w_, trunk_b_;
  int mean_w_ = -1, mean_b_ = -1, var_w_ = -1, var_b_ = -1;
  std::size_t d_in_ = 0;
  std::size_t m_ = 0;
};

/// Decodes the prior mean into a normalized observation delta.
class ObsDecoder {
 public:
  ObsDecoder() = default;
  ObsDecoder(ParamStore& ps, const std::string& prefix, std::size_t n,
             const std::vector<std::size_t>& hidden, std::size_t d_o, Rng& rng)
      : mlp_(ps, prefix, n, hidden, d_o, rng) {}

  Var decode(Graph& g, Var z) const { return mlp_.forward(g, z); }

  std::size_t state_dim() const { return mlp_.input_dim(); }
  std::size_t obs_dim() const { return mlp_.output_dim(); }

 private:
  Mlp mlp_;
};

/// Decodes the belief variance diagonals into a strictly positive
/// predictive variance per observation channel.
class VarDecoder {
 public:
  VarDecoder() = default;
  VarDecoder(ParamStore& ps, const std::string& prefix, std::size_t m,
             const std::vector<std::size_t>& hidden, std::size_t d_o, Rng& rng)
      : mlp_(ps, prefix, 2 * m, hidden, d_o, rng) {}

  Var decode(Graph& g, const Belief& belief) const {
    return elu_plus_one(mlp_.forward(g, concat({belief.sigma_u, belief.sigma_l})));
  }

  std::size_t obs_dim() const { return mlp_.output_dim(); }

 private:
  Mlp mlp_;
};

/// Decodes the posterior mean plus the desired next observation into a
/// normalized action delta relative to the previously executed action.
class ActionDecoder {
 public:
  ActionDecoder() = default;
  ActionDecoder(ParamStore& ps, const std::string& prefix, std::size_t n, std::size_t d_o,
                const std::vector<std::size_t>& hidden, std::size_t d_a, Rng& rng)
      : mlp_(ps, prefix, n + d_o, hidden, d_a, rng) {}

  Var decode(Graph& g, Var posterior_mean, Var desired_next_obs) const {
    return mlp_.forward(g, concat({posterior_mean, desired_next_obs}));
  }

  std::size_t action_dim() const { return mlp_.output_dim(); }

 private:
  Mlp mlp_;
};

}  // namespace acrkn
