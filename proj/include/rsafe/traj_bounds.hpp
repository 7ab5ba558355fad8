#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "rsafe/mdp_core.hpp"
#include "rsafe/rlhf.hpp"

namespace rsafe {

struct Trajectory {
  std::vector<std::size_t> states;   // s_0 .. s_{T-1}
  std::vector<std::size_t> actions;  // a_0 .. a_{T-1}
  double prob = 0.0;
};

struct TrajectorySet {
  std::size_t horizon = 0;
  std::vector<Trajectory> trajectories;
};

// G(xi) = sum_{t<T} gamma^t r(s_t, a_t).
inline double trajectory_return(const TabularMdp<double>& mdp, const Trajectory& xi, const RewardTable<double>& r) {
  double g = 0.0, disc = 1.0;
  for (std::size_t t = 0; t < xi.states.size(); ++t) {
    g += disc * r[mdp.idx(xi.states[t], xi.actions[t])];
    disc *= mdp.gamma;
  }
  return g;
}

// Every positive-probability trajectory of length T under (mu0, tau, pi), depth first.
inline TrajectorySet enumerate_trajectories(const TabularMdp<double>& mdp, const Policy<double>& pi, std::size_t T,
                                            std::size_t cap = kDefaultCap) {
  if (T == 0) fail(Errc::InvalidArgument, "horizon must be >= 1");
  double bound = std::pow(static_cast<double>(mdp.pairs()), static_cast<double>(T));
  if (bound > static_cast<double>(cap))
    fail(Errc::EnumerationCapExceeded, "(n*m)^T = " + std::to_string(static_cast<long long>(bound)) +
                                           " exceeds cap " + std::to_string(cap));
  TrajectorySet out;
  out.horizon = T;
  Trajectory cur;
  auto extend = [&](auto&& self, std::size_t s, double p) -> void {
    for (std::size_t a = 0; a < mdp.n_actions; ++a) {
      double pa = p * pi(s, a);
      if (!(pa > 0.0)) continue;
      cur.states.push_back(s);
      cur.actions.push_back(a);
      if (cur.states.size() == T) {
        out.trajectories.push_back(Trajectory{cur.states, cur.actions, pa});
      } else {
        for (std::size_t s2 = 0; s2 < mdp.n_states; ++s2) {
          double pt = pa * mdp.tau(s, a, s2);
          if (pt > 0.0) self(self, s2, pt);
        }
      }
      cur.states.pop_back();
      cur.actions.pop_back();
    }
  };
  for (std::size_t s = 0; s < mdp.n_states; ++s)
    if (mdp.mu0[s] > 0.0) extend(extend, s, mdp.mu0[s]);
  return out;
}

// D(s,a) = (1-gamma)/(1-gamma^T) * sum_xi P(xi) sum_t gamma^t [s_t = s, a_t = a].
inline DataDistribution<double> finite_horizon_distribution(const TabularMdp<double>& mdp, const TrajectorySet& ts) {
  DataDistribution<double> d(mdp.pairs(), 0.0);
  for (const auto& xi : ts.trajectories) {
    double disc = 1.0;
    for (std::size_t t = 0; t < xi.states.size(); ++t) {
      d[mdp.idx(xi.states[t], xi.actions[t])] += xi.prob * disc;
      disc *= mdp.gamma;
    }
  }
  const double T = static_cast<double>(ts.horizon);
  const double norm = mdp.gamma == 0.0 ? 1.0 : (1.0 - mdp.gamma) / (1.0 - std::pow(mdp.gamma, T));
  for (auto& x : d) x *= norm;
  return d;
}

struct BoundCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
};

inline double mean_abs_return_gap(const TabularMdp<double>& mdp, const TrajectorySet& ts, const RewardTable<double>& r,
                                  const RewardTable<double>& rhat) {
  double acc = 0.0;
  for (const auto& xi : ts.trajectories)
    acc += xi.prob * std::fabs(trajectory_return(mdp, xi, r) - trajectory_return(mdp, xi, rhat));
  return acc;
}

// E|G_r - G_rhat| <= (1-gamma^T)/(1-gamma) * E_D |r - rhat|.
inline BoundCheck verify_return_bound(const TabularMdp<double>& mdp, const Policy<double>& pi,
                                      const RewardTable<double>& r, const RewardTable<double>& rhat, std::size_t T,
                                      std::size_t cap = kDefaultCap, double slack = kTol) {
  auto ts = enumerate_trajectories(mdp, pi, T, cap);
  auto d = finite_horizon_distribution(mdp, ts);
  BoundCheck b;
  b.lhs = mean_abs_return_gap(mdp, ts, r, rhat);
  double e = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) e += d[i] * std::fabs(r[i] - rhat[i]);
  const double horizon_mass =
      mdp.gamma == 0.0 ? 1.0 : (1.0 - std::pow(mdp.gamma, static_cast<double>(T))) / (1.0 - mdp.gamma);
  b.rhs = horizon_mass * e;
  b.holds = b.lhs <= b.rhs + slack;
  return b;
}

namespace detail {

// sum over ordered pairs of weight(i, j) * KL of the Bradley-Terry trajectory choice.
template <class W>
double pairwise_choice_kl(const std::vector<double>& g, const std::vector<double>& ghat, W weight) {
  double acc = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i)
    for (std::size_t j = 0; j < g.size(); ++j) {
      double w = weight(i, j);
      if (w == 0.0) continue;
      acc += w * binary_choice_kl(g[i] - g[j], ghat[i] - ghat[j]);
    }
  return acc;
}

inline void returns_of(const TabularMdp<double>& mdp, const TrajectorySet& ts, const RewardTable<double>& r,
                       const RewardTable<double>& rhat, std::vector<double>& g, std::vector<double>& ghat) {
  g.clear();
  ghat.clear();
  for (const auto& xi : ts.trajectories) {
    g.push_back(trajectory_return(mdp, xi, r));
    ghat.push_back(trajectory_return(mdp, xi, rhat));
  }
}

inline void check_pair_count(std::size_t count, std::size_t cap) {
  if (static_cast<double>(count) * static_cast<double>(count) > static_cast<double>(cap) * 100.0)
    fail(Errc::EnumerationCapExceeded, "trajectory pair count exceeds cap");
}

}  // namespace detail

// E_{xi1, xi2} KL(p_r || p_rhat) <= 2 E|G_r - G_rhat|.
inline BoundCheck verify_choice_bound(const TabularMdp<double>& mdp, const Policy<double>& pi,
                                      const RewardTable<double>& r, const RewardTable<double>& rhat, std::size_t T,
                                      std::size_t cap = kDefaultCap, double slack = kTol) {
  auto ts = enumerate_trajectories(mdp, pi, T, cap);
  detail::check_pair_count(ts.trajectories.size(), cap);
  std::vector<double> g, ghat;
  detail::returns_of(mdp, ts, r, rhat, g, ghat);
  const auto& tr = ts.trajectories;
  BoundCheck b;
  b.lhs = detail::pairwise_choice_kl(g, ghat, [&](std::size_t i, std::size_t j) { return tr[i].prob * tr[j].prob; });
  b.rhs = 2.0 * mean_abs_return_gap(mdp, ts, r, rhat);
  b.holds = b.lhs <= b.rhs + slack;
  return b;
}

// Pairs sharing s_0, weighted by mu0(s_0) and the conditional trajectory law, against the
// unconditional pairwise KL divided by the least positive mu0 mass.
inline BoundCheck verify_common_prefix_bound(const TabularMdp<double>& mdp, const Policy<double>& pi,
                                             const RewardTable<double>& r, const RewardTable<double>& rhat,
                                             std::size_t T, std::size_t cap = kDefaultCap, double slack = kTol) {
  auto ts = enumerate_trajectories(mdp, pi, T, cap);
  detail::check_pair_count(ts.trajectories.size(), cap);
  std::vector<double> g, ghat;
  detail::returns_of(mdp, ts, r, rhat, g, ghat);
  const auto& tr = ts.trajectories;
  BoundCheck b;
  b.lhs = detail::pairwise_choice_kl(g, ghat, [&](std::size_t i, std::size_t j) {
    std::size_t s0 = tr[i].states[0];
    if (tr[j].states[0] != s0) return 0.0;
    double m = mdp.mu0[s0];
    return m * (tr[i].prob / m) * (tr[j].prob / m);
  });
  double min_mu = std::numeric_limits<double>::infinity();
  for (double m : mdp.mu0)
    if (m > 0.0) min_mu = std::min(min_mu, m);
  double uncond =
      detail::pairwise_choice_kl(g, ghat, [&](std::size_t i, std::size_t j) { return tr[i].prob * tr[j].prob; });
  b.rhs = uncond / min_mu;
  b.holds = b.lhs <= b.rhs + slack;
  return b;
}

struct FiniteHorizonRange {
  double max_j = 0.0;
  double min_j = 0.0;
  double range() const { return max_j - min_j; }
};

// Extremes of E[G] over time-dependent Markov policies, by backward induction.
inline FiniteHorizonRange finite_horizon_range(const TabularMdp<double>& mdp, const RewardTable<double>& r,
                                               std::size_t T) {
  const std::size_t n = mdp.n_states, m = mdp.n_actions;
  std::vector<double> hi(n, 0.0), lo(n, 0.0);
  for (std::size_t t = T; t-- > 0;) {
    std::vector<double> nh(n), nl(n);
    for (std::size_t s = 0; s < n; ++s) {
      double bh = -std::numeric_limits<double>::infinity(), bl = std::numeric_limits<double>::infinity();
      for (std::size_t a = 0; a < m; ++a) {
        double eh = 0.0, el = 0.0;
        for (std::size_t s2 = 0; s2 < n; ++s2) {
          eh += mdp.tau(s, a, s2) * hi[s2];
          el += mdp.tau(s, a, s2) * lo[s2];
        }
        bh = std::max(bh, r[mdp.idx(s, a)] + mdp.gamma * eh);
        bl = std::min(bl, r[mdp.idx(s, a)] + mdp.gamma * el);
      }
      nh[s] = bh;
      nl[s] = bl;
    }
    hi.swap(nh);
    lo.swap(nl);
  }
  FiniteHorizonRange out;
  for (std::size_t s = 0; s < n; ++s) {
    out.max_j += mdp.mu0[s] * hi[s];
    out.min_j += mdp.mu0[s] * lo[s];
  }
  return out;
}

// Largest finite-horizon regret under r among policies optimal for rhat: backward induction
// that keeps only rhat-greedy actions and picks the one worst for r.
inline double worst_optimal_regret_finite(const TabularMdp<double>& mdp, const RewardTable<double>& r,
                                          const RewardTable<double>& rhat, std::size_t T, double tol = kTol) {
  const std::size_t n = mdp.n_states, m = mdp.n_actions;
  std::vector<double> vhat(n, 0.0), w(n, 0.0);
  for (std::size_t t = T; t-- > 0;) {
    std::vector<double> nv(n), nw(n);
    for (std::size_t s = 0; s < n; ++s) {
      std::vector<double> qh(m), qr(m);
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t a = 0; a < m; ++a) {
        double eh = 0.0, er = 0.0;
        for (std::size_t s2 = 0; s2 < n; ++s2) {
          eh += mdp.tau(s, a, s2) * vhat[s2];
          er += mdp.tau(s, a, s2) * w[s2];
        }
        qh[a] = rhat[mdp.idx(s, a)] + mdp.gamma * eh;
        qr[a] = r[mdp.idx(s, a)] + mdp.gamma * er;
        best = std::max(best, qh[a]);
      }
      double worst = std::numeric_limits<double>::infinity();
      for (std::size_t a = 0; a < m; ++a)
        if (qh[a] >= best - tol * std::max(1.0, std::fabs(best))) worst = std::min(worst, qr[a]);
      nv[s] = best;
      nw[s] = worst;
    }
    vhat.swap(nv);
    w.swap(nw);
  }
  auto fr = finite_horizon_range(mdp, r, T);
  double j = 0.0;
  for (std::size_t s = 0; s < n; ++s) j += mdp.mu0[s] * w[s];
  return (fr.max_j - j) / fr.range();
}

// (e^sigma - 1) * min{ 1/(1/q + e^sigma/(1-q)), 1/(1/(1-q) + e^sigma/q) }.
inline double choice_delta(double q, double sigma) {
  double e = std::exp(sigma);
  double a = 1.0 / (1.0 / q + e / (1.0 - q));
  double b = 1.0 / (1.0 / (1.0 - q) + e / q);
  return std::expm1(sigma) * std::min(a, b);
}

struct ChoiceEpsilon {
  double range_j = 0.0;
  double sigma = 0.0;
  double delta = 0.0;
  double mu = 0.0;
  double min_mass = 0.0;
  double epsilon = 0.0;
};

// Chains sigma(U) -> delta -> mu -> epsilon for a trajectory distribution that must be
// positive on every feasible trajectory of length T.
inline ChoiceEpsilon choice_safe_epsilon(const TabularMdp<double>& mdp, const TrajectorySet& dist, double U,
                                         std::size_t cap = kDefaultCap) {
  if (!(U > 0.0 && U <= 1.0)) fail(Errc::InvalidArgument, "U must lie in (0,1]");
  const std::size_t T = dist.horizon;
  auto feasible = enumerate_trajectories(mdp, Policy<double>::uniform(mdp.n_states, mdp.n_actions), T, cap);
  if (dist.trajectories.size() != feasible.trajectories.size())
    fail(Errc::NonPositiveDistribution, "trajectory distribution does not cover every feasible trajectory");
  for (const auto& xi : dist.trajectories)
    if (!(xi.prob > 0.0)) fail(Errc::NonPositiveDistribution, "trajectory distribution has a zero entry");
  ChoiceEpsilon out;
  auto fr = finite_horizon_range(mdp, mdp.reward, T);
  if (!(fr.range() > 0.0)) fail(Errc::TrivialReward, "finite-horizon max J equals min J");
  out.range_j = fr.range();
  out.sigma = fr.range() / 2.0 * U;
  std::vector<double> g;
  out.min_mass = std::numeric_limits<double>::infinity();
  for (const auto& xi : dist.trajectories) {
    g.push_back(trajectory_return(mdp, xi, mdp.reward));
    out.min_mass = std::min(out.min_mass, xi.prob);
  }
  out.delta = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < g.size(); ++i)
    for (std::size_t j = 0; j < g.size(); ++j) out.delta = std::min(out.delta, choice_delta(sigmoid(g[i] - g[j]), out.sigma));
  out.mu = 2.0 * out.delta * out.delta;
  out.epsilon = out.mu * out.min_mass * out.min_mass;
  return out;
}

inline ChoiceEpsilon choice_safe_epsilon(const TabularMdp<double>& mdp, const Policy<double>& pi, std::size_t T,
                                         double U, std::size_t cap = kDefaultCap) {
  return choice_safe_epsilon(mdp, enumerate_trajectories(mdp, pi, T, cap), U, cap);
}

// Pairwise Bradley-Terry KL between r and rhat under a trajectory distribution.
inline double trajectory_choice_distance(const TabularMdp<double>& mdp, const TrajectorySet& dist,
                                         const RewardTable<double>& r, const RewardTable<double>& rhat) {
  std::vector<double> g, ghat;
  detail::returns_of(mdp, dist, r, rhat, g, ghat);
  const auto& tr = dist.trajectories;
  return detail::pairwise_choice_kl(g, ghat, [&](std::size_t i, std::size_t j) { return tr[i].prob * tr[j].prob; });
}

}  // namespace rsafe
