#pragma once

#include "rsafe/safe_set.hpp"

namespace rsafe {

template <class T>
struct TightnessInstance {
  TabularMdp<T> mdp;
  RewardTable<T> rhat;
  DeterministicPolicy pi_hat;
  DataDistribution<T> d;
};

// One state, actions a, b, c with R = (1, 0, 1 - 1/U) and rhat = (1/2, 1/2, R(c)).
// Picking b is optimal for rhat and has regret exactly U under R.
template <class T>
TightnessInstance<T> tightness_example(const T& U, const T& gamma) {
  if (!(U > T(0)) || U > T(1)) fail(Errc::InvalidArgument, "U must lie in (0,1]");
  TightnessInstance<T> ex;
  ex.mdp = TabularMdp<T>(1, 3);
  ex.mdp.state_names = {"star"};
  ex.mdp.action_names = {"a", "b", "c"};
  ex.mdp.gamma = gamma;
  ex.mdp.mu0 = {T(1)};
  for (std::size_t a = 0; a < 3; ++a) ex.mdp.tau(0, a, 0) = T(1);
  T rc = T(1) - T(1) / U;
  ex.mdp.reward = {T(1), T(0), rc};
  ex.rhat = {T(1) / T(2), T(1) / T(2), rc};
  ex.pi_hat = DeterministicPolicy{{1}};
  ex.d = {T(1) / T(3), T(1) / T(3), T(1) / T(3)};
  return ex;
}

// One state and three actions with self loops, used to show the matrix construction by hand.
template <class T>
TabularMdp<T> worked_example() {
  TabularMdp<T> m(1, 3);
  m.state_names = {"s"};
  m.action_names = {"a1", "a2", "a3"};
  m.gamma = T(1) / T(2);
  m.mu0 = {T(1)};
  for (std::size_t a = 0; a < 3; ++a) m.tau(0, a, 0) = T(1);
  m.reward = {T(1), T(0), T(-1)};
  return m;
}

}  // namespace rsafe
