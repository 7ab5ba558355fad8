#pragma once

#include <cstddef>
#include <deque>
#include <limits>
#include <string>
#include <vector>

#include "rsafe/occupancy.hpp"
#include "rsafe/planning.hpp"

namespace rsafe {

inline constexpr double kSimplexTol = 1e-9;
inline constexpr std::size_t kDefaultCap = 1000000;

namespace detail {

template <class T>
void check_simplex(const std::vector<T>& p, const std::string& what) {
  T sum(0);
  for (const T& x : p) {
    if (sign_of(x, kSimplexTol) < 0) fail(Errc::StochasticityViolation, what + " has a negative entry");
    sum += x;
  }
  T gap = sum - T(1);
  if (!is_zero(gap, kSimplexTol)) fail(Errc::StochasticityViolation, what + " does not sum to 1");
}

}  // namespace detail

template <class T>
void validate_distribution(const std::vector<T>& d, std::size_t size, const std::string& what = "distribution") {
  if (d.size() != size)
    fail(Errc::InvalidArgument, what + " has " + std::to_string(d.size()) + " entries, expected " + std::to_string(size));
  detail::check_simplex(d, what);
}

template <class T>
void validate_policy(const Policy<T>& pi, std::size_t n, std::size_t m) {
  if (pi.n_states != n || pi.n_actions != m || pi.probs.size() != n * m)
    fail(Errc::InvalidArgument, "policy shape does not match the model");
  for (std::size_t s = 0; s < n; ++s) {
    std::vector<T> row(pi.probs.begin() + s * m, pi.probs.begin() + (s + 1) * m);
    detail::check_simplex(row, "policy row " + std::to_string(s));
  }
}

// States reachable from supp(mu0) when any action may be taken at each step.
template <class T>
std::vector<bool> reachable_states(const TabularMdp<T>& mdp) {
  std::vector<bool> seen(mdp.n_states, false);
  std::deque<std::size_t> queue;
  for (std::size_t s = 0; s < mdp.n_states; ++s)
    if (mdp.mu0[s] > T(0)) {
      seen[s] = true;
      queue.push_back(s);
    }
  while (!queue.empty()) {
    std::size_t s = queue.front();
    queue.pop_front();
    for (std::size_t a = 0; a < mdp.n_actions; ++a)
      for (std::size_t s2 = 0; s2 < mdp.n_states; ++s2)
        if (!seen[s2] && mdp.tau(s, a, s2) > T(0)) {
          seen[s2] = true;
          queue.push_back(s2);
        }
  }
  return seen;
}

// Shape, stochasticity, discount and reachability. No reward checks.
template <class T>
void validate_structure(const TabularMdp<T>& mdp) {
  const std::size_t n = mdp.n_states, m = mdp.n_actions;
  if (n == 0 || m == 0) fail(Errc::InvalidArgument, "need at least one state and one action");
  if (mdp.transitions.size() != n * m * n || mdp.mu0.size() != n || mdp.reward.size() != n * m)
    fail(Errc::InvalidArgument, "array sizes do not match n_states/n_actions");
  if (mdp.gamma < T(0) || !(mdp.gamma < T(1))) fail(Errc::InvalidArgument, "gamma must lie in [0,1)");
  detail::check_simplex(mdp.mu0, "mu0");
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t a = 0; a < m; ++a) {
      auto first = mdp.transitions.begin() + mdp.idx(s, a) * n;
      detail::check_simplex(std::vector<T>(first, first + n),
                            "transitions[" + std::to_string(s) + "][" + std::to_string(a) + "]");
    }
  auto seen = reachable_states(mdp);
  for (std::size_t s = 0; s < n; ++s)
    if (!seen[s]) fail(Errc::UnreachableState, "state " + std::to_string(s) + " is unreachable from supp(mu0)");
}

template <class T>
ValueRange<T> checked_value_range(const TabularMdp<T>& mdp, const RewardTable<T>& r) {
  if (is_zero(range_of(r), 0.0)) fail(Errc::TrivialReward, "reward range is zero");
  auto vr = value_range(mdp, r);
  if (is_zero(vr.range(), 1e-12 * std::max(1.0, to_double(abs_of(vr.max_j)))))
    fail(Errc::TrivialReward, "max J equals min J");
  return vr;
}

template <class T>
void validate(const TabularMdp<T>& mdp) {
  validate_structure(mdp);
  checked_value_range(mdp, mdp.reward);
}

template <class T>
void validate(const ContextualBandit<T>& b) {
  if (b.n_states == 0 || b.n_actions == 0) fail(Errc::InvalidArgument, "need at least one state and one action");
  if (b.mu0.size() != b.n_states || b.reward.size() != b.pairs())
    fail(Errc::InvalidArgument, "array sizes do not match n_states/n_actions");
  detail::check_simplex(b.mu0, "mu0");
  if (is_zero(range_of(b.reward), 0.0)) fail(Errc::TrivialReward, "reward range is zero");
}

template <class T>
T regret(const TabularMdp<T>& mdp, const RewardTable<T>& r, const Policy<T>& pi, const ValueRange<T>& vr) {
  T reg = (vr.max_j - policy_eval(mdp, pi, r)) / vr.range();
  return reg;
}

template <class T>
T regret(const TabularMdp<T>& mdp, const RewardTable<T>& r, const Policy<T>& pi) {
  return regret(mdp, r, pi, checked_value_range(mdp, r));
}

template <class T>
T mae_distance(const DataDistribution<T>& d, const RewardTable<T>& r, const RewardTable<T>& rhat) {
  T range = range_of(r);
  if (is_zero(range, 0.0)) fail(Errc::TrivialReward, "reward range is zero");
  T acc(0);
  for (std::size_t i = 0; i < d.size(); ++i) acc += d[i] * abs_of(T(rhat[i] - r[i]));
  T out = acc / range;
  return out;
}

template <class T>
T mse_distance(const DataDistribution<T>& d, const RewardTable<T>& r, const RewardTable<T>& rhat) {
  T range = range_of(r);
  if (is_zero(range, 0.0)) fail(Errc::TrivialReward, "reward range is zero");
  T acc(0);
  for (std::size_t i = 0; i < d.size(); ++i) {
    T e = (rhat[i] - r[i]) / range;
    acc += d[i] * e * e;
  }
  return acc;
}

// m^n, or max size_t on overflow.
inline std::size_t policy_count(std::size_t n, std::size_t m) {
  std::size_t c = 1;
  for (std::size_t i = 0; i < n; ++i) {
    if (c > std::numeric_limits<std::size_t>::max() / m) return std::numeric_limits<std::size_t>::max();
    c *= m;
  }
  return c;
}

// All m^n deterministic policies; state 0 is the most significant digit.
inline std::vector<DeterministicPolicy> enumerate_deterministic_policies(std::size_t n, std::size_t m,
                                                                        std::size_t cap = kDefaultCap) {
  std::size_t count = policy_count(n, m);
  if (count > cap)
    fail(Errc::EnumerationCapExceeded,
         std::to_string(m) + "^" + std::to_string(n) + " policies exceeds cap " + std::to_string(cap));
  std::vector<DeterministicPolicy> out;
  out.reserve(count);
  DeterministicPolicy p;
  p.action_of.assign(n, 0);
  for (std::size_t k = 0; k < count; ++k) {
    out.push_back(p);
    for (std::size_t s = n; s-- > 0;) {
      if (++p.action_of[s] < m) break;
      p.action_of[s] = 0;
    }
  }
  return out;
}

template <class T>
std::vector<DeterministicPolicy> enumerate_deterministic_policies(const TabularMdp<T>& mdp,
                                                                 std::size_t cap = kDefaultCap) {
  return enumerate_deterministic_policies(mdp.n_states, mdp.n_actions, cap);
}

// Bandit return: sum_s mu0(s) sum_a pi(a|s) r(s,a).
template <class T>
T bandit_return(const ContextualBandit<T>& b, const Policy<T>& pi, const RewardTable<T>& r) {
  T j(0);
  for (std::size_t s = 0; s < b.n_states; ++s)
    for (std::size_t a = 0; a < b.n_actions; ++a) j += b.mu0[s] * pi(s, a) * r[b.idx(s, a)];
  return j;
}

template <class T>
ValueRange<T> bandit_value_range(const ContextualBandit<T>& b, const RewardTable<T>& r) {
  ValueRange<T> vr;
  vr.best.action_of.resize(b.n_states);
  vr.worst.action_of.resize(b.n_states);
  for (std::size_t s = 0; s < b.n_states; ++s) {
    std::size_t hi = 0, lo = 0;
    for (std::size_t a = 1; a < b.n_actions; ++a) {
      if (r[b.idx(s, a)] > r[b.idx(s, hi)]) hi = a;
      if (r[b.idx(s, a)] < r[b.idx(s, lo)]) lo = a;
    }
    vr.best.action_of[s] = hi;
    vr.worst.action_of[s] = lo;
    vr.max_j += b.mu0[s] * r[b.idx(s, hi)];
    vr.min_j += b.mu0[s] * r[b.idx(s, lo)];
  }
  return vr;
}

template <class T>
T bandit_regret(const ContextualBandit<T>& b, const RewardTable<T>& r, const Policy<T>& pi) {
  auto vr = bandit_value_range(b, r);
  if (is_zero(vr.range(), 0.0)) fail(Errc::TrivialReward, "max J equals min J");
  T reg = (vr.max_j - bandit_return(b, pi, r)) / vr.range();
  return reg;
}

}  // namespace rsafe
