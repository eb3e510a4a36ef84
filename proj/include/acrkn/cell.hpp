#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "acrkn/graph.hpp"
#include "acrkn/params.hpp"
#include "acrkn/rng.hpp"

namespace acrkn {

// Latent state layout: the mean z has length n = 2m. The upper half is
// linearly observed (H = [I 0]); the lower half stores information inferred
// over time. The covariance is kept as three length-m diagonals
// (sigma_u, sigma_l, sigma_s) of the 2x2 block-of-diagonals matrix
//   [ diag(sigma_u)  diag(sigma_s) ]
//   [ diag(sigma_s)  diag(sigma_l) ].

struct Belief {
  Var mean;     // length n = 2m
  Var sigma_u;  // length m
  Var sigma_l;  // length m
  Var sigma_s;  // length m

  std::size_t half_dim() const { return sigma_u.val().size(); }
  std::size_t state_dim() const { return mean.val().size(); }
};

struct LatentObs {
  Var w;          // length m
  Var sigma_obs;  // length m, strictly positive
};

struct KalmanGain {
  Var q_u;  // in [0, 1] elementwise for valid beliefs
  Var q_l;
};

inline Var upper_mean(Belief b) { return slice(b.mean, 0, b.half_dim()); }

inline Belief initial_belief(Graph& g, std::size_t m, double init_var) {
  if (m < 1) throw Error("initial_belief: m must be >= 1");
  if (init_var <= 0.0) throw Error("initial_belief: init_var must be positive");
  Belief b;
  b.mean = make_constant(g, Tensor::zeros({2 * m}));
  b.sigma_u = make_constant(g, Tensor::full({m}, init_var));
  b.sigma_l = make_constant(g, Tensor::full({m}, init_var));
  b.sigma_s = make_constant(g, Tensor::zeros({m}));
  return b;
}

/// Scalar-form gain: q_u = sigma_u / (sigma_u + sigma_obs),
/// q_l = sigma_s / (sigma_u + sigma_obs), elementwise.
inline KalmanGain compute_gain(const Belief& prior, const LatentObs& obs) {
  if (obs.w.val().size() != prior.half_dim())
    throw Error("compute_gain: observation length mismatch");
  Var denom = prior.sigma_u + obs.sigma_obs;
  for (double x : denom.val().v) {
    if (x <= 0.0) throw Error("compute_gain: non-positive innovation variance");
  }
  return {ewise_div(prior.sigma_u, denom), ewise_div(prior.sigma_s, denom)};
}

/// Kalman update in scalar form. The innovation w - z_u corrects both
/// halves of the mean through (q_u, q_l); the covariance diagonals shrink by
/// the same gains. sigma_l may round slightly negative and is clamped at
/// -1e-12 tolerance.
inline Belief update(const Belief& prior, const LatentObs& obs) {
  std::size_t m = prior.half_dim();
  KalmanGain q = compute_gain(prior, obs);
  Var innovation = obs.w - slice(prior.mean, 0, m);
  Var correction = concat({q.q_u, q.q_l}) * concat({innovation, innovation});

  Belief post;
  post.mean = prior.mean + correction;
  Var one_minus_qu = add_scalar(mul_scalar(q.q_u, -1.0), 1.0);
  post.sigma_u = one_minus_qu * prior.sigma_u;
  post.sigma_s = one_minus_qu * prior.sigma_s;
  post.sigma_l = clamp_nonneg(prior.sigma_l - q.q_l * prior.sigma_s, 1e-12);
  return post;
}

/// Missing observation: the posterior is the prior, untouched. Gradients
/// flow through with identity Jacobian because the very same nodes are
/// reused.
inline Belief update_skip(const Belief& prior) { return prior; }

/// Learned transition bank: K basis matrices, each made of four banded m x m
/// blocks, mixed by a softmax coefficient net over the latent mean, plus a
/// learned positive transition noise vector.
class TransitionCell {
 public:
  TransitionCell() = default;

  TransitionCell(ParamStore& ps, const std::string& prefix, std::size_t m,
                 std::size_t num_basis, std::size_t bandwidth, Rng& rng,
                 double sigma_trans_init = 0.05)
      : m_(m), k_(num_basis), bandwidth_(bandwidth) {
    if (m < 1 || num_basis < 1 || bandwidth < 1)
      throw Error("transition cell: m, K and bandwidth must be >= 1");
    std::size_t n = 2 * m;
    mask_ = band_mask(m, bandwidth);
    for (std::size_t k = 0; k < num_basis; ++k) {
      Tensor a = Tensor::zeros({n, n});
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          if (mask_.v[i * n + j] == 0.0) continue;
          bool diag_block = (i < m) == (j < m);
          double x = rng.normal(0.0, 0.05);
          if (!diag_block) x *= 0.2;  // weaker cross-block coupling at init
          if (diag_block && i % m == j % m) x += 1.0;
          a.v[i * n + j] = x;
        }
      }
      basis_.push_back(ps.add(prefix + "/basis" + std::to_string(k), std::move(a)));
    }
    alpha_w_ = ps.add(prefix + "/alpha_w", uniform_fan_in(num_basis, n, rng));
    alpha_b_ = ps.add(prefix + "/alpha_b", Tensor::zeros({num_basis}));
    double raw = sigma_trans_raw_from(sigma_trans_init);
    sigma_trans_raw_ = ps.add(prefix + "/sigma_trans_raw", Tensor::full({n}, raw));
  }

  /// Band pattern of the four m x m blocks: |i - j| < bandwidth within each
  /// block. bandwidth 1 means strictly diagonal blocks.
  static Tensor band_mask(std::size_t m, std::size_t bandwidth) {
    std::size_t n = 2 * m;
    Tensor mask = Tensor::zeros({n, n});
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        std::size_t bi = i % m, bj = j % m;
        std::size_t dist = bi > bj ? bi - bj : bj - bi;
        if (dist < bandwidth) mask.v[i * n + j] = 1.0;
      }
    }
    return mask;
  }

  static double sigma_trans_raw_from(double target) {
    // inverse of elu_plus_one
    if (target <= 0.0) throw Error("sigma_trans init must be positive");
    return target >= 1.0 ? target - 1.0 : std::log(target);
  }

  /// Per-graph node bundle: masked bases and the positive noise vector are
  /// built once and reused by every predict step on that graph.
  struct Prepared {
    std::vector<Var> basis;
    Var sigma_trans;
  };

  Prepared prepare(Graph& g) const {
    Prepared p;
    Var mask = make_constant(g, mask_);
    for (int id : basis_) p.basis.push_back(make_param(g, id) * mask);
    p.sigma_trans = elu_plus_one(make_param(g, sigma_trans_raw_));
    return p;
  }

  /// A_t = sum_k alpha_k(z) A^(k); the coefficient net is a single linear
  /// layer under softmax.
  Var compose(Graph& g, const Prepared& prep, Var z) const {
    Var logits = matvec(make_param(g, alpha_w_), z) + make_param(g, alpha_b_);
    Var alpha = softmax(logits);
    return lin_comb(alpha, prep.basis);
  }

  Var coefficients(Graph& g, Var z) const {
    return softmax(matvec(make_param(g, alpha_w_), z) + make_param(g, alpha_b_));
  }

  /// Predict: mean = A_t z + control; covariance = A_t Sigma A_t^T + noise,
  /// materialized densely and projected back onto the three diagonals. The
  /// projection is exact at bandwidth 1; for wider bands it keeps the
  /// per-dimension 2x2 marginals, which stay PSD because they are principal
  /// submatrices of the dense PSD result. Rounding-level violations are
  /// clamped and counted on the graph.
  Belief predict(Graph& g, const Prepared& prep, const Belief& post, Var control) const {
    std::size_t m = m_, n = 2 * m_;
    if (post.half_dim() != m) throw Error("predict: belief dimension mismatch");
    if (control.val().size() != n)
      throw Error("predict: control length " + std::to_string(control.val().size()) +
                  ", expected " + std::to_string(n));
    Var a_t = compose(g, prep, post.mean);

    Belief prior;
    prior.mean = matvec(a_t, post.mean) + control;

    Var cov = embed_diag(post.sigma_u, n, n, 0, 0) + embed_diag(post.sigma_s, n, n, 0, m) +
              embed_diag(post.sigma_s, n, n, m, 0) + embed_diag(post.sigma_l, n, n, m, m);
    Var propagated =
        matmul(matmul(a_t, cov), transpose(a_t)) + embed_diag(prep.sigma_trans, n, n, 0, 0);
    prior.sigma_u = clamp_nonneg(take_diag(propagated, 0, 0, m), 1e-12);
    prior.sigma_l = clamp_nonneg(take_diag(propagated, m, m, m), 1e-12);
    prior.sigma_s =
        psd_clamp_sigma(take_diag(propagated, 0, m, m), prior.sigma_u, prior.sigma_l, 1e-12);
    return prior;
  }

  std::size_t half_dim() const { return m_; }
  std::size_t state_dim() const { return 2 * m_; }
  std::size_t num_basis() const { return k_; }
  std::size_t bandwidth() const { return bandwidth_; }
  const Tensor& mask() const { return mask_; }
  const std::vector<int>& basis_ids() const { return basis_; }
  int sigma_trans_id() const { return sigma_trans_raw_; }

 private:
  std::vector<int> basis_;
  int alpha_w_ = -1;
  int alpha_b_ = -1;
  int sigma_trans_raw_ = -1;
  Tensor mask_;
  std::size_t m_ = 0;
  std::size_t k_ = 0;
  std::size_t bandwidth_ = 0;
};

}  // namespace acrkn
