#pragma once

// Seeded random instances. Probabilities and rewards use small denominators so the same
// instance is exact in rational mode and well-conditioned in float mode.

#include <cstdint>
#include <random>
#include <vector>

#include "rsafe/rsafe.hpp"

namespace gen {

using rsafe::ContextualBandit;
using rsafe::DataDistribution;
using rsafe::Policy;
using rsafe::TabularMdp;

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}
  long integer(long lo, long hi) { return std::uniform_int_distribution<long>(lo, hi)(eng_); }
  double real(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(eng_); }
  bool coin(double p = 0.5) { return real(0.0, 1.0) < p; }
  std::mt19937_64& engine() { return eng_; }

 private:
  std::mt19937_64 eng_;
};

// Integer weights normalized to a simplex point; at least one weight is positive.
template <class T>
std::vector<T> simplex(Rng& rng, std::size_t k, long max_w = 4, double zero_p = 0.0) {
  std::vector<long> w(k);
  long total = 0;
  while (total == 0) {
    total = 0;
    for (auto& x : w) {
      x = rng.coin(zero_p) ? 0 : rng.integer(1, max_w);
      total += x;
    }
  }
  std::vector<T> out(k);
  for (std::size_t i = 0; i < k; ++i) out[i] = rsafe::ratio<T>(w[i], total);
  return out;
}

template <class T>
std::vector<T> positive_simplex(Rng& rng, std::size_t k, long max_w = 4) {
  return simplex<T>(rng, k, max_w, 0.0);
}

struct MdpShape {
  std::size_t max_states = 3;
  std::size_t max_actions = 3;
  double sparse_p = 0.3;  // chance a transition weight is zero
};

// Random MDP with positive mu0 (so every state is reachable), gamma in {0, 1/4, 1/2, 3/4, 9/10}
// and integer-over-2 rewards, redrawn until the reward is non-trivial.
template <class T>
TabularMdp<T> mdp(Rng& rng, const MdpShape& shape = {}) {
  static const std::int64_t gnum[] = {0, 1, 1, 3, 9}, gden[] = {1, 4, 2, 4, 10};
  for (;;) {
    std::size_t n = static_cast<std::size_t>(rng.integer(1, static_cast<long>(shape.max_states)));
    std::size_t m = static_cast<std::size_t>(rng.integer(2, static_cast<long>(shape.max_actions)));
    TabularMdp<T> out(n, m);
    for (std::size_t s = 0; s < n; ++s) out.state_names.push_back("s" + std::to_string(s));
    for (std::size_t a = 0; a < m; ++a) out.action_names.push_back("a" + std::to_string(a));
    long gi = rng.integer(0, 4);
    out.gamma = rsafe::ratio<T>(gnum[gi], gden[gi]);
    out.mu0 = positive_simplex<T>(rng, n);
    for (std::size_t s = 0; s < n; ++s)
      for (std::size_t a = 0; a < m; ++a) {
        auto row = simplex<T>(rng, n, 4, shape.sparse_p);
        for (std::size_t s2 = 0; s2 < n; ++s2) out.tau(s, a, s2) = row[s2];
      }
    for (auto& r : out.reward) r = rsafe::ratio<T>(rng.integer(-4, 4), 2);
    if (rsafe::max_of(out.reward) == rsafe::min_of(out.reward)) continue;
    try {
      rsafe::validate(out);
    } catch (const rsafe::Error&) {
      continue;
    }
    return out;
  }
}

template <class T>
Policy<T> policy(Rng& rng, std::size_t n, std::size_t m, bool positive = true) {
  Policy<T> p(n, m);
  for (std::size_t s = 0; s < n; ++s) {
    auto row = simplex<T>(rng, m, 4, positive ? 0.0 : 0.4);
    for (std::size_t a = 0; a < m; ++a) p(s, a) = row[a];
  }
  return p;
}

template <class T>
DataDistribution<T> distribution(Rng& rng, std::size_t pairs, bool positive = true, long max_w = 6) {
  return simplex<T>(rng, pairs, max_w, positive ? 0.0 : 0.4);
}

// Float reward table with entries in [lo, hi].
inline std::vector<double> real_vector(Rng& rng, std::size_t k, double lo, double hi) {
  std::vector<double> v(k);
  for (auto& x : v) x = rng.real(lo, hi);
  return v;
}

inline ContextualBandit<double> bandit(Rng& rng, std::size_t max_states = 3, std::size_t max_actions = 4) {
  for (;;) {
    std::size_t n = static_cast<std::size_t>(rng.integer(1, static_cast<long>(max_states)));
    std::size_t m = static_cast<std::size_t>(rng.integer(2, static_cast<long>(max_actions)));
    ContextualBandit<double> b(n, m);
    for (std::size_t s = 0; s < n; ++s) b.state_names.push_back("s" + std::to_string(s));
    for (std::size_t a = 0; a < m; ++a) b.action_names.push_back("a" + std::to_string(a));
    b.mu0 = positive_simplex<double>(rng, n);
    b.reward = real_vector(rng, n * m, -1.0, 1.0);
    if (rsafe::range_of(b.reward) > 0.1) return b;
  }
}

}  // namespace gen
