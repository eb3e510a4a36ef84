#pragma once

#include <string>
#include <vector>

#include "acrkn/graph.hpp"
#include "acrkn/mlp.hpp"
#include "acrkn/params.hpp"
#include "acrkn/rng.hpp"

namespace acrkn {

enum class ControlKind { kLinear, kLocallyLinear, kNonlinear };

inline const char* control_kind_name(ControlKind k) {
  switch (k) {
    case ControlKind::kLinear: return "linear";
    case ControlKind::kLocallyLinear: return "locally-linear";
    case ControlKind::kNonlinear: return "nonlinear";
  }
  return "?";
}
inline ControlKind control_kind_from_name(const std::string& s) {
  if (s == "linear") return ControlKind::kLinear;
  if (s == "locally-linear") return ControlKind::kLocallyLinear;
  if (s == "nonlinear") return ControlKind::kNonlinear;
  throw Error("unknown control kind '" + s + "'");
}

/// Maps an action to a latent increment added during predict.
///   linear:         B a
///   locally-linear: (sum_k beta_k(z) B^(k)) a, beta = softmax of a linear net
///   nonlinear:      MLP(a), independent of the latent state
class ControlModel {
 public:
  ControlModel() = default;

  static ControlModel linear(ParamStore& ps, const std::string& prefix, std::size_t n,
                             std::size_t d_a, Rng& rng) {
    ControlModel c;
    c.kind_ = ControlKind::kLinear;
    c.n_ = n;
    c.d_a_ = d_a;
    c.b_ids_.push_back(ps.add(prefix + "/b_matrix", uniform_fan_in(n, d_a, rng)));
    return c;
  }

  static ControlModel locally_linear(ParamStore& ps, const std::string& prefix, std::size_t n,
                                     std::size_t d_a, std::size_t num_models, Rng& rng) {
    if (num_models < 1) throw Error("locally-linear control: need at least one model");
    ControlModel c;
    c.kind_ = ControlKind::kLocallyLinear;
    c.n_ = n;
    c.d_a_ = d_a;
    for (std::size_t k = 0; k < num_models; ++k)
      c.b_ids_.push_back(ps.add(prefix + "/b_matrix" + std::to_string(k),
                                uniform_fan_in(n, d_a, rng)));
    c.beta_w_ = ps.add(prefix + "/beta_w", uniform_fan_in(num_models, n, rng));
    c.beta_b_ = ps.add(prefix + "/beta_b", Tensor::zeros({num_models}));
    return c;
  }

  static ControlModel nonlinear(ParamStore& ps, const std::string& prefix, std::size_t n,
                                std::size_t d_a, const std::vector<std::size_t>& hidden,
                                Rng& rng) {
    ControlModel c;
    c.kind_ = ControlKind::kNonlinear;
    c.n_ = n;
    c.d_a_ = d_a;
    c.mlp_ = Mlp(ps, prefix + "/mlp", d_a, hidden, n, rng);
    return c;
  }

  /// Latent increment b(a). The latent mean z is consulted only by the
  /// locally-linear kind.
  Var increment(Graph& g, Var action, Var z) const {
    if (action.val().size() != d_a_)
      throw Error("control: action length " + std::to_string(action.val().size()) +
                  ", expected " + std::to_string(d_a_));
    switch (kind_) {
      case ControlKind::kLinear:
        return matvec(make_param(g, b_ids_[0]), action);
      case ControlKind::kLocallyLinear: {
        Var beta = softmax(matvec(make_param(g, beta_w_), z) + make_param(g, beta_b_));
        std::vector<Var> terms;
        for (int id : b_ids_) terms.push_back(make_param(g, id));
        return matvec(lin_comb(beta, terms), action);
      }
      case ControlKind::kNonlinear:
        return mlp_.forward(g, action);
    }
    throw Error("control: unknown kind");
  }

  ControlKind kind() const { return kind_; }
  std::size_t state_dim() const { return n_; }
  std::size_t action_dim() const { return d_a_; }
  std::size_t num_models() const { return b_ids_.size(); }
  const Mlp& mlp() const { return mlp_; }

 private:
  ControlKind kind_ = ControlKind::kNonlinear;
  std::size_t n_ = 0;
  std::size_t d_a_ = 0;
  std::vector<int> b_ids_;
  int beta_w_ = -1;
  int beta_b_ = -1;
  Mlp mlp_;
};

/// Hidden widths of the nonlinear control net for the named presets.
inline std::vector<std::size_t> control_preset_hidden(const std::string& preset) {
  if (preset == "pam") return {120, 120, 120};
  if (preset == "brokk") return {120};
  if (preset == "panda-fwd") return {30, 30, 30};
  if (preset == "panda-inv") return {45};
  if (preset == "barrett-inv") return {45};
  if (preset == "pendulum") return {32, 32, 32};
  throw Error("unknown control preset '" + preset + "'");
}

/// Control model with the preset's architecture. d_a and n come from the
/// caller; the preset decides the hidden widths of the nonlinear kind.
inline ControlModel default_architecture(ParamStore& ps, const std::string& prefix,
                                         ControlKind kind, std::size_t d_a, std::size_t n,
                                         const std::string& preset, Rng& rng,
                                         std::size_t locally_linear_models = 0) {
  switch (kind) {
    case ControlKind::kLinear:
      control_preset_hidden(preset);  // validates the preset name
      return ControlModel::linear(ps, prefix, n, d_a, rng);
    case ControlKind::kLocallyLinear: {
      control_preset_hidden(preset);
      std::size_t k = locally_linear_models ? locally_linear_models : 4;
      return ControlModel::locally_linear(ps, prefix, n, d_a, k, rng);
    }
    case ControlKind::kNonlinear:
      return ControlModel::nonlinear(ps, prefix, n, d_a, control_preset_hidden(preset), rng);
  }
  throw Error("control: unknown kind");
}

}  // namespace acrkn
