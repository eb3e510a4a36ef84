#pragma once

#include <string>
#include <vector>

#include "acrkn/graph.hpp"
#include "acrkn/params.hpp"
#include "acrkn/rng.hpp"

namespace acrkn {

/// Dense stack: ReLU hidden layers, linear output. Weights are fan-in
/// scaled uniform, biases zero.
class Mlp {
 public:
  Mlp() = default;

  Mlp(ParamStore& ps, const std::string& prefix, std::size_t in,
      const std::vector<std::size_t>& hidden, std::size_t out, Rng& rng)
      : in_(in), out_(out) {
    std::size_t prev = in;
    std::vector<std::size_t> widths = hidden;
    widths.push_back(out);
    for (std::size_t l = 0; l < widths.size(); ++l) {
      std::string tag = prefix + "/w" + std::to_string(l);
      w_.push_back(ps.add(tag, uniform_fan_in(widths[l], prev, rng)));
      b_.push_back(ps.add(prefix + "/b" + std::to_string(l), Tensor::zeros({widths[l]})));
      prev = widths[l];
    }
  }

  Var forward(Graph& g, Var x) const {
    if (x.val().size() != in_)
      throw Error("mlp: input length " + std::to_string(x.val().size()) +
                  ", expected " + std::to_string(in_));
    Var h = x;
    for (std::size_t l = 0; l < w_.size(); ++l) {
      h = matvec(make_param(g, w_[l]), h) + make_param(g, b_[l]);
      if (l + 1 < w_.size()) h = relu(h);
    }
    return h;
  }

  std::size_t input_dim() const { return in_; }
  std::size_t output_dim() const { return out_; }
  const std::vector<int>& weight_ids() const { return w_; }
  const std::vector<int>& bias_ids() const { return b_; }

 private:
  std::vector<int> w_;
  std::vector<int> b_;
  std::size_t in_ = 0;
  std::size_t out_ = 0;
};

}  // namespace acrkn
