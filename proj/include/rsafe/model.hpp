#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "rsafe/scalar.hpp"

namespace rsafe {

// Vectors over state-action pairs are flat, state-major and action-minor: index s*m + a.
template <class T>
using SAVector = std::vector<T>;

template <class T>
using RewardTable = SAVector<T>;

template <class T>
using DataDistribution = SAVector<T>;

template <class T>
struct TabularMdp {
  std::size_t n_states = 0;
  std::size_t n_actions = 0;
  std::vector<T> transitions;  // [(s*m + a)*n + s']
  std::vector<T> mu0;
  T gamma = T(0);
  RewardTable<T> reward;
  std::vector<std::string> state_names;
  std::vector<std::string> action_names;

  TabularMdp() = default;
  TabularMdp(std::size_t n, std::size_t m)
      : n_states(n), n_actions(m), transitions(n * m * n, T(0)), mu0(n, T(0)), reward(n * m, T(0)) {}

  std::size_t pairs() const { return n_states * n_actions; }
  std::size_t idx(std::size_t s, std::size_t a) const { return s * n_actions + a; }
  T& tau(std::size_t s, std::size_t a, std::size_t s2) { return transitions[idx(s, a) * n_states + s2]; }
  const T& tau(std::size_t s, std::size_t a, std::size_t s2) const {
    return transitions[idx(s, a) * n_states + s2];
  }
};

template <class T>
struct ContextualBandit {
  std::size_t n_states = 0;
  std::size_t n_actions = 0;
  std::vector<T> mu0;
  RewardTable<T> reward;
  std::vector<std::string> state_names;
  std::vector<std::string> action_names;

  ContextualBandit() = default;
  ContextualBandit(std::size_t n, std::size_t m) : n_states(n), n_actions(m), mu0(n, T(0)), reward(n * m, T(0)) {}

  std::size_t pairs() const { return n_states * n_actions; }
  std::size_t idx(std::size_t s, std::size_t a) const { return s * n_actions + a; }
};

template <class T>
struct Policy {
  std::size_t n_states = 0;
  std::size_t n_actions = 0;
  std::vector<T> probs;  // [s*m + a]

  Policy() = default;
  Policy(std::size_t n, std::size_t m) : n_states(n), n_actions(m), probs(n * m, T(0)) {}

  T& operator()(std::size_t s, std::size_t a) { return probs[s * n_actions + a]; }
  const T& operator()(std::size_t s, std::size_t a) const { return probs[s * n_actions + a]; }

  static Policy uniform(std::size_t n, std::size_t m) {
    Policy p(n, m);
    for (auto& v : p.probs) v = T(1) / T(static_cast<long>(m));
    return p;
  }
};

struct DeterministicPolicy {
  std::vector<std::size_t> action_of;

  bool operator==(const DeterministicPolicy&) const = default;

  template <class T>
  Policy<T> to_policy(std::size_t n_actions) const {
    Policy<T> p(action_of.size(), n_actions);
    for (std::size_t s = 0; s < action_of.size(); ++s) p(s, action_of[s]) = T(1);
    return p;
  }
};

// One-step embedding: next state drawn from mu0, discount 0. Returns and occupancies
// then coincide with the bandit's expected reward and mu0 x pi.
template <class T>
TabularMdp<T> embed_bandit(const ContextualBandit<T>& b, const T& gamma = T(0)) {
  TabularMdp<T> m(b.n_states, b.n_actions);
  m.mu0 = b.mu0;
  m.reward = b.reward;
  m.gamma = gamma;
  m.state_names = b.state_names;
  m.action_names = b.action_names;
  for (std::size_t s = 0; s < b.n_states; ++s)
    for (std::size_t a = 0; a < b.n_actions; ++a)
      for (std::size_t s2 = 0; s2 < b.n_states; ++s2) m.tau(s, a, s2) = b.mu0[s2];
  return m;
}

template <class T>
T max_of(const std::vector<T>& v) {
  T x = v.front();
  for (const T& y : v)
    if (y > x) x = y;
  return x;
}

template <class T>
T min_of(const std::vector<T>& v) {
  T x = v.front();
  for (const T& y : v)
    if (y < x) x = y;
  return x;
}

template <class T>
T range_of(const std::vector<T>& v) {
  T r = max_of(v) - min_of(v);
  return r;
}

template <class T>
std::vector<bool> support_of(const std::vector<T>& v, double tol = 1e-12) {
  std::vector<bool> s(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) s[i] = sign_of(v[i], tol) > 0;
  return s;
}

template <class T>
T mass_on(const std::vector<T>& d, const std::vector<bool>& supp) {
  T m(0);
  for (std::size_t i = 0; i < d.size(); ++i)
    if (supp[i]) m += d[i];
  return m;
}

}  // namespace rsafe
