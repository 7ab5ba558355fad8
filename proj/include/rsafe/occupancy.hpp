#pragma once

#include <vector>

#include "rsafe/error.hpp"
#include "rsafe/linalg.hpp"
#include "rsafe/model.hpp"

namespace rsafe {

// Discounted state visitation d solving d = mu0 + gamma * P_pi^T d.
template <class T>
std::vector<T> state_occupancy(const TabularMdp<T>& mdp, const Policy<T>& pi) {
  const std::size_t n = mdp.n_states, m = mdp.n_actions;
  Matrix<T> a(n, n);
  for (std::size_t s = 0; s < n; ++s) a(s, s) = T(1);
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t act = 0; act < m; ++act) {
      if (pi(s, act) == T(0)) continue;
      for (std::size_t s2 = 0; s2 < n; ++s2) {
        const T& t = mdp.tau(s, act, s2);
        if (t == T(0)) continue;
        a(s2, s) -= mdp.gamma * pi(s, act) * t;
      }
    }
  auto d = solve(std::move(a), mdp.mu0, 1e-12);
  if (!d) fail(Errc::SingularSystem, "flow system (I - gamma P^T) is singular");
  return *d;
}

template <class T>
SAVector<T> occupancy_measure(const TabularMdp<T>& mdp, const Policy<T>& pi) {
  auto d = state_occupancy(mdp, pi);
  SAVector<T> eta(mdp.pairs(), T(0));
  for (std::size_t s = 0; s < mdp.n_states; ++s)
    for (std::size_t a = 0; a < mdp.n_actions; ++a) eta[mdp.idx(s, a)] = d[s] * pi(s, a);
  return eta;
}

template <class T>
DataDistribution<T> policy_induced_distribution(const TabularMdp<T>& mdp, const Policy<T>& pi) {
  auto eta = occupancy_measure(mdp, pi);
  T scale = T(1) - mdp.gamma;
  for (auto& v : eta) v *= scale;
  return eta;
}

template <class T>
T policy_eval(const TabularMdp<T>& mdp, const Policy<T>& pi, const RewardTable<T>& r) {
  return dot(occupancy_measure(mdp, pi), r);
}

// State values V^pi solving (I - gamma P_pi) V = r_pi.
template <class T>
std::vector<T> state_values(const TabularMdp<T>& mdp, const Policy<T>& pi, const RewardTable<T>& r) {
  const std::size_t n = mdp.n_states, m = mdp.n_actions;
  Matrix<T> a(n, n);
  std::vector<T> b(n, T(0));
  for (std::size_t s = 0; s < n; ++s) {
    a(s, s) = T(1);
    for (std::size_t act = 0; act < m; ++act) {
      if (pi(s, act) == T(0)) continue;
      b[s] += pi(s, act) * r[mdp.idx(s, act)];
      for (std::size_t s2 = 0; s2 < n; ++s2) a(s, s2) -= mdp.gamma * pi(s, act) * mdp.tau(s, act, s2);
    }
  }
  auto v = solve(std::move(a), std::move(b), 1e-12);
  if (!v) fail(Errc::SingularSystem, "evaluation system (I - gamma P) is singular");
  return *v;
}

template <class T>
std::vector<T> q_values(const TabularMdp<T>& mdp, const RewardTable<T>& r, const std::vector<T>& v) {
  std::vector<T> q(mdp.pairs(), T(0));
  for (std::size_t s = 0; s < mdp.n_states; ++s)
    for (std::size_t a = 0; a < mdp.n_actions; ++a) {
      T acc(0);
      for (std::size_t s2 = 0; s2 < mdp.n_states; ++s2) acc += mdp.tau(s, a, s2) * v[s2];
      q[mdp.idx(s, a)] = r[mdp.idx(s, a)] + mdp.gamma * acc;
    }
  return q;
}

}  // namespace rsafe
