#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "acrkn/graph.hpp"
#include "acrkn/params.hpp"

namespace acrkn {

/// Builds a scalar loss against the store bound to the given graph. Must be
/// deterministic and re-invokable: the checker calls it once for the
/// analytic gradient and 2N more times for central differences.
using LossBuilder = std::function<Var(Graph&)>;

struct GradCheckEntry {
  std::string param;
  double max_rel_err = 0.0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  bool pass = true;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double max_rel_err = 0.0;
  bool pass = true;

  const GradCheckEntry& entry(const std::string& param) const {
    for (const auto& e : entries)
      if (e.param == param) return e;
    throw Error("gradcheck: no entry for param '" + param + "'");
  }
};

inline double rel_err(double a, double b) {
  double scale = std::max({1.0, std::abs(a), std::abs(b)});
  return std::abs(a - b) / scale;
}

/// Central-difference gradient oracle: compares (f(p+eps)-f(p-eps))/(2 eps)
/// against the reverse-mode gradient, entry by entry, under the convention
/// |a-b| / max(1, |a|, |b|) <= tol.
inline GradCheckReport finite_diff_check(const LossBuilder& build, ParamStore& params,
                                         double eps = 1e-5, double tol = 1e-6) {
  if (eps <= 0.0) throw Error("finite_diff_check: eps must be positive");

  params.zero_grads();
  Graph g(&params);
  Var loss = build(g);
  g.backward(loss.id);
  std::vector<Tensor> analytic;
  analytic.reserve(params.count());
  for (std::size_t i = 0; i < params.count(); ++i)
    analytic.push_back(params.grad(static_cast<int>(i)));

  auto eval_loss = [&]() {
    Graph h(&params);
    Var l = build(h);
    double x = l.val().v[0];
    if (!std::isfinite(x)) throw Error("finite_diff_check: non-finite loss at perturbed point");
    return x;
  };

  GradCheckReport report;
  for (std::size_t i = 0; i < params.count(); ++i) {
    Tensor& p = params.value(static_cast<int>(i));
    GradCheckEntry e;
    e.param = params.name(static_cast<int>(i));
    for (std::size_t k = 0; k < p.size(); ++k) {
      double saved = p.v[k];
      p.v[k] = saved + eps;
      double fp = eval_loss();
      p.v[k] = saved - eps;
      double fm = eval_loss();
      p.v[k] = saved;
      double numeric = (fp - fm) / (2.0 * eps);
      double err = rel_err(analytic[i].v[k], numeric);
      if (err >= e.max_rel_err) {
        e.max_rel_err = err;
        e.worst_index = k;
        e.analytic = analytic[i].v[k];
        e.numeric = numeric;
      }
    }
    e.pass = e.max_rel_err <= tol;
    report.max_rel_err = std::max(report.max_rel_err, e.max_rel_err);
    report.pass = report.pass && e.pass;
    report.entries.push_back(std::move(e));
  }
  params.zero_grads();
  return report;
}

}  // namespace acrkn
