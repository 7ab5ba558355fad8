#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "rsafe/mdp_core.hpp"

namespace rsafe {

enum class RegularizerKind { None, KlToReference };

struct RegularizerSpec {
  RegularizerKind kind = RegularizerKind::None;
  Policy<double> reference;
  double lambda = 0.0;

  static RegularizerSpec kl(Policy<double> ref, double lambda) {
    return RegularizerSpec{RegularizerKind::KlToReference, std::move(ref), lambda};
  }
};

inline void validate_regularizer(const RegularizerSpec& reg, std::size_t n, std::size_t m) {
  if (!(reg.lambda >= 0.0) || !std::isfinite(reg.lambda)) fail(Errc::InvalidArgument, "lambda must be >= 0");
  if (reg.kind != RegularizerKind::KlToReference) return;
  validate_policy(reg.reference, n, m);
  for (double p : reg.reference.probs)
    if (!(p > 0.0)) fail(Errc::NonPositiveReference, "reference policy must be strictly positive");
}

// Occupancy-weighted KL: sum_s d(s) KL(pi(s) || ref(s)) with d the normalized state occupancy.
inline double omega_kl(const TabularMdp<double>& mdp, const Policy<double>& pi, const Policy<double>& ref) {
  auto d = state_occupancy(mdp, pi);
  double total = 0.0;
  for (std::size_t s = 0; s < mdp.n_states; ++s) {
    double ds = (1.0 - mdp.gamma) * d[s];
    if (!(ds > 0.0)) continue;
    double kl = 0.0;
    for (std::size_t a = 0; a < mdp.n_actions; ++a) {
      double p = pi(s, a);
      if (p <= 0.0) continue;
      double q = ref(s, a);
      if (!(q > 0.0)) fail(Errc::SupportViolation, "policy puts mass where the reference is zero");
      kl += p * std::log(p / q);
    }
    total += ds * kl;
  }
  return std::max(total, 0.0);
}

inline double regularized_objective(const TabularMdp<double>& mdp, const RewardTable<double>& r,
                                    const Policy<double>& pi, const RegularizerSpec& reg) {
  double j = policy_eval(mdp, pi, r);
  if (reg.kind == RegularizerKind::None || reg.lambda == 0.0) return j;
  return j - reg.lambda * omega_kl(mdp, pi, reg.reference);
}

namespace detail {

// beta * log sum_a ref(a) exp(q_a / beta), shifted by the row maximum.
inline double soft_max(const double* q, const double* ref, std::size_t m, double beta) {
  double hi = q[0];
  for (std::size_t a = 1; a < m; ++a) hi = std::max(hi, q[a]);
  double acc = 0.0;
  for (std::size_t a = 0; a < m; ++a) acc += ref[a] * std::exp((q[a] - hi) / beta);
  return hi + beta * std::log(acc);
}

}  // namespace detail

struct SoftSolution {
  Policy<double> policy;
  std::vector<double> values;
  std::vector<double> q;
  std::size_t iterations = 0;
};

// Maximizes J(pi) - lambda * omega_kl(pi). With omega weighted by the normalized occupancy
// the per-step penalty carries temperature beta = lambda * (1 - gamma).
inline SoftSolution solve_kl_regularized_full(const TabularMdp<double>& mdp, const RewardTable<double>& r,
                                              const RegularizerSpec& reg, const SolveOptions& opt = {}) {
  if (reg.kind != RegularizerKind::KlToReference) fail(Errc::InvalidArgument, "KL solver needs a reference policy");
  if (!(reg.lambda > 0.0)) fail(Errc::InvalidArgument, "KL solver needs lambda > 0");
  validate_regularizer(reg, mdp.n_states, mdp.n_actions);
  const std::size_t n = mdp.n_states, m = mdp.n_actions;
  const double beta = reg.lambda * (1.0 - mdp.gamma);
  SoftSolution out;
  std::vector<double> v(n, 0.0), next(n);
  for (std::size_t it = 0;; ++it) {
    if (it >= opt.max_iter) fail(Errc::NonConvergence, "soft value iteration hit the iteration cap");
    auto q = q_values(mdp, r, v);
    double res = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
      next[s] = detail::soft_max(&q[s * m], &reg.reference.probs[s * m], m, beta);
      res = std::max(res, std::fabs(next[s] - v[s]));
    }
    v.swap(next);
    if (res < opt.residual * std::max(1.0, detail::inf_norm(v))) {
      out.iterations = it + 1;
      break;
    }
  }
  out.q = q_values(mdp, r, v);
  out.values = v;
  out.policy = Policy<double>(n, m);
  for (std::size_t s = 0; s < n; ++s) {
    double vs = detail::soft_max(&out.q[s * m], &reg.reference.probs[s * m], m, beta);
    double z = 0.0;
    for (std::size_t a = 0; a < m; ++a) {
      double w = reg.reference(s, a) * std::exp((out.q[s * m + a] - vs) / beta);
      out.policy(s, a) = w;
      z += w;
    }
    for (std::size_t a = 0; a < m; ++a) out.policy(s, a) /= z;
  }
  return out;
}

inline Policy<double> solve_kl_regularized(const TabularMdp<double>& mdp, const RewardTable<double>& r,
                                           const RegularizerSpec& reg, const SolveOptions& opt = {}) {
  return solve_kl_regularized_full(mdp, r, reg, opt).policy;
}

}  // namespace rsafe
