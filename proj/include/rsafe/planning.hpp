#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "rsafe/occupancy.hpp"

namespace rsafe {

struct SolveOptions {
  double residual = 1e-12;       // Bellman residual, relative to max(1, |V|_inf)
  std::size_t max_iter = 1000000;
  double tie_tol = 1e-10;        // float-mode greedy ties, relative
};

template <class T>
struct ValueRange {
  T max_j{0};
  T min_j{0};
  DeterministicPolicy best;
  DeterministicPolicy worst;
  T range() const {
    T r = max_j - min_j;
    return r;
  }
};

template <class T>
TabularMdp<double> to_double_mdp(const TabularMdp<T>& mdp) {
  TabularMdp<double> d(mdp.n_states, mdp.n_actions);
  for (std::size_t i = 0; i < mdp.transitions.size(); ++i) d.transitions[i] = to_double(mdp.transitions[i]);
  for (std::size_t i = 0; i < mdp.mu0.size(); ++i) d.mu0[i] = to_double(mdp.mu0[i]);
  for (std::size_t i = 0; i < mdp.reward.size(); ++i) d.reward[i] = to_double(mdp.reward[i]);
  d.gamma = to_double(mdp.gamma);
  d.state_names = mdp.state_names;
  d.action_names = mdp.action_names;
  return d;
}

template <class T>
std::vector<double> to_double_vec(const std::vector<T>& v) {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = to_double(v[i]);
  return out;
}

namespace detail {

inline double inf_norm(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s = std::max(s, std::fabs(x));
  return s;
}

inline std::vector<double> value_iteration(const TabularMdp<double>& mdp, const std::vector<double>& r,
                                           const SolveOptions& opt) {
  const std::size_t n = mdp.n_states, m = mdp.n_actions;
  std::vector<double> v(n, 0.0), next(n);
  for (std::size_t it = 0; it < opt.max_iter; ++it) {
    auto q = q_values(mdp, r, v);
    double res = 0;
    for (std::size_t s = 0; s < n; ++s) {
      double best = q[s * m];
      for (std::size_t a = 1; a < m; ++a) best = std::max(best, q[s * m + a]);
      next[s] = best;
      res = std::max(res, std::fabs(best - v[s]));
    }
    v.swap(next);
    if (res < opt.residual * std::max(1.0, inf_norm(v))) return v;
  }
  fail(Errc::NonConvergence, "value iteration hit the iteration cap");
}

template <class T>
DeterministicPolicy greedy(const TabularMdp<T>& mdp, const std::vector<T>& q, double tie_tol) {
  DeterministicPolicy p;
  p.action_of.resize(mdp.n_states);
  for (std::size_t s = 0; s < mdp.n_states; ++s) {
    T best = q[mdp.idx(s, 0)];
    for (std::size_t a = 1; a < mdp.n_actions; ++a)
      if (q[mdp.idx(s, a)] > best) best = q[mdp.idx(s, a)];
    std::size_t pick = 0;
    for (std::size_t a = 0; a < mdp.n_actions; ++a) {
      bool tie;
      if constexpr (Num<T>::exact) {
        tie = q[mdp.idx(s, a)] == best;
      } else {
        tie = q[mdp.idx(s, a)] >= best - tie_tol * std::max(1.0, std::fabs(best));
      }
      if (tie) { pick = a; break; }
    }
    p.action_of[s] = pick;
  }
  return p;
}

}  // namespace detail

// Deterministic optimal policy, lowest action index among maximizers. Float mode runs
// value iteration; rational mode polishes the float answer with exact policy iteration.
template <class T>
DeterministicPolicy solve_unregularized(const TabularMdp<T>& mdp, const RewardTable<T>& r,
                                        const SolveOptions& opt = {}) {
  if constexpr (!Num<T>::exact) {
    auto v = detail::value_iteration(mdp, r, opt);
    return detail::greedy(mdp, q_values(mdp, r, v), opt.tie_tol);
  } else {
    auto dm = to_double_mdp(mdp);
    auto dr = to_double_vec(r);
    auto v0 = detail::value_iteration(dm, dr, opt);
    DeterministicPolicy pol = detail::greedy(dm, q_values(dm, dr, v0), opt.tie_tol);
    for (std::size_t it = 0; it < opt.max_iter; ++it) {
      auto v = state_values(mdp, pol.template to_policy<T>(mdp.n_actions), r);
      auto q = q_values(mdp, r, v);
      bool changed = false;
      for (std::size_t s = 0; s < mdp.n_states; ++s) {
        T cur = q[mdp.idx(s, pol.action_of[s])];
        std::size_t arg = pol.action_of[s];
        T best = cur;
        for (std::size_t a = 0; a < mdp.n_actions; ++a)
          if (q[mdp.idx(s, a)] > best) { best = q[mdp.idx(s, a)]; arg = a; }
        if (best > cur) {
          pol.action_of[s] = arg;
          changed = true;
        }
      }
      if (!changed) return detail::greedy(mdp, q, 0.0);
    }
    fail(Errc::NonConvergence, "policy iteration hit the iteration cap");
  }
}

template <class T>
ValueRange<T> value_range(const TabularMdp<T>& mdp, const RewardTable<T>& r, const SolveOptions& opt = {}) {
  ValueRange<T> out;
  RewardTable<T> neg(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) neg[i] = -r[i];
  out.best = solve_unregularized(mdp, r, opt);
  out.worst = solve_unregularized(mdp, neg, opt);
  out.max_j = policy_eval(mdp, out.best.template to_policy<T>(mdp.n_actions), r);
  out.min_j = policy_eval(mdp, out.worst.template to_policy<T>(mdp.n_actions), r);
  return out;
}

}  // namespace rsafe
