#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "rsafe/adversary.hpp"

namespace rsafe {

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

// log(sigmoid(x)) without overflow.
inline double log_sigmoid(double x) {
  if (x >= 0.0) return -std::log1p(std::exp(-x));
  return x - std::log1p(std::exp(x));
}

struct ChoiceModel {
  RewardTable<double> reward;
  std::size_t n_actions = 0;
};

// P(a1 preferred over a2 | s) under Bradley-Terry.
inline double bt_prob(const ChoiceModel& cm, std::size_t s, std::size_t a1, std::size_t a2) {
  return sigmoid(cm.reward[s * cm.n_actions + a1] - cm.reward[s * cm.n_actions + a2]);
}

// KL between Bernoulli(sigmoid(x)) and Bernoulli(sigmoid(y)).
inline double binary_choice_kl(double x, double y) {
  if (x == y) return 0.0;
  double kl = sigmoid(x) * (log_sigmoid(x) - log_sigmoid(y)) + sigmoid(-x) * (log_sigmoid(-x) - log_sigmoid(-y));
  return std::max(kl, 0.0);
}

inline void require_positive_reference(const Policy<double>& pi_ref, std::size_t n, std::size_t m) {
  validate_policy(pi_ref, n, m);
  for (double p : pi_ref.probs)
    if (!(p > 0.0)) fail(Errc::NonPositiveReference, "reference policy must be strictly positive");
}

// pi(a|s) proportional to pi_ref(a|s) exp(rhat(s,a)/lambda), normalized in log space.
inline Policy<double> rlhf_optimal_policy(const ContextualBandit<double>& b, const RewardTable<double>& rhat,
                                          const Policy<double>& pi_ref, double lambda) {
  if (!(lambda > 0.0)) fail(Errc::InvalidArgument, "lambda must be > 0");
  require_positive_reference(pi_ref, b.n_states, b.n_actions);
  const std::size_t m = b.n_actions;
  Policy<double> out(b.n_states, m);
  std::vector<double> logits(m);
  for (std::size_t s = 0; s < b.n_states; ++s) {
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < m; ++a) {
      logits[a] = std::log(pi_ref(s, a)) + rhat[b.idx(s, a)] / lambda;
      hi = std::max(hi, logits[a]);
    }
    double z = 0.0;
    for (std::size_t a = 0; a < m; ++a) z += std::exp(logits[a] - hi);
    double log_z = hi + std::log(z);
    for (std::size_t a = 0; a < m; ++a) out(s, a) = std::exp(logits[a] - log_z);
  }
  return out;
}

// J_rhat(pi) - lambda * E_mu0 KL(pi(s) || pi_ref(s)).
inline double rlhf_objective(const ContextualBandit<double>& b, const RewardTable<double>& rhat,
                             const Policy<double>& pi, const Policy<double>& pi_ref, double lambda) {
  double j = bandit_return(b, pi, rhat);
  double kl = 0.0;
  for (std::size_t s = 0; s < b.n_states; ++s)
    for (std::size_t a = 0; a < b.n_actions; ++a) {
      double p = pi(s, a);
      if (p > 0.0) kl += b.mu0[s] * p * std::log(p / pi_ref(s, a));
    }
  return j - lambda * kl;
}

// E_{s ~ mu0, a1, a2 ~ pi_ref} KL(p_r(.|s,a1,a2) || p_rhat(.|s,a1,a2)), summed exactly.
inline double choice_kl_distance(const ContextualBandit<double>& b, const Policy<double>& pi_ref,
                                 const RewardTable<double>& r, const RewardTable<double>& rhat) {
  double total = 0.0;
  for (std::size_t s = 0; s < b.n_states; ++s) {
    if (b.mu0[s] == 0.0) continue;
    double acc = 0.0;
    for (std::size_t a1 = 0; a1 < b.n_actions; ++a1)
      for (std::size_t a2 = 0; a2 < b.n_actions; ++a2) {
        double x = r[b.idx(s, a1)] - r[b.idx(s, a2)];
        double y = rhat[b.idx(s, a1)] - rhat[b.idx(s, a2)];
        acc += pi_ref(s, a1) * pi_ref(s, a2) * binary_choice_kl(x, y);
      }
    total += b.mu0[s] * acc;
  }
  return total;
}

// R_L(s) = (1-L) max_a R(s,a) + L min_a R(s,a).
inline std::vector<double> reward_threshold(const ContextualBandit<double>& b, double L) {
  std::vector<double> out(b.n_states);
  for (std::size_t s = 0; s < b.n_states; ++s) {
    double hi = b.reward[b.idx(s, 0)], lo = hi;
    for (std::size_t a = 1; a < b.n_actions; ++a) {
      hi = std::max(hi, b.reward[b.idx(s, a)]);
      lo = std::min(lo, b.reward[b.idx(s, a)]);
    }
    out[s] = (1.0 - L) * hi + L * lo;
  }
  return out;
}

enum class RlhfMetric { ChoiceKl, Mae };

struct RlhfStateEntry {
  std::size_t state = 0;
  std::optional<std::size_t> action;  // a_s, or the best candidate when none qualifies
  double r_l = 0.0;
  double pi_ref_mass = 0.0;
  double log_threshold = -std::numeric_limits<double>::infinity();
  double threshold = 0.0;
  bool satisfied = false;
};

struct RlhfThresholdReport {
  std::vector<RlhfStateEntry> per_state;
  bool satisfied = false;
};

// Per state, looks for a_s with R(s,a_s) < R_L(s) and
//   pi_ref(a_s|s) <= (R_L - R(s,a_s)) range R / (L exp(range R / lambda)) * eps^2 / (4 lambda^2)
// (no factor 4 for the MAE metric). Compared in log space. Among qualifying actions the one
// with the smallest reference mass is kept.
inline RlhfThresholdReport check_rlhf_threshold(const ContextualBandit<double>& b, const Policy<double>& pi_ref,
                                                double lambda, double eps, double L,
                                                RlhfMetric metric = RlhfMetric::ChoiceKl) {
  if (!(lambda > 0.0)) fail(Errc::InvalidArgument, "lambda must be > 0");
  if (!(eps > 0.0)) fail(Errc::InvalidArgument, "epsilon must be > 0");
  if (!(L > 0.0 && L < 1.0)) fail(Errc::InvalidArgument, "L must lie in (0,1)");
  require_positive_reference(pi_ref, b.n_states, b.n_actions);
  const double range = range_of(b.reward);
  if (!(range > 0.0)) fail(Errc::TrivialReward, "reward range is zero");
  auto r_l = reward_threshold(b, L);
  const double shared = std::log(range) - std::log(L) - range / lambda + 2.0 * std::log(eps) -
                        (metric == RlhfMetric::ChoiceKl ? std::log(4.0) : 0.0) - 2.0 * std::log(lambda);
  RlhfThresholdReport rep;
  rep.satisfied = true;
  for (std::size_t s = 0; s < b.n_states; ++s) {
    RlhfStateEntry e;
    e.state = s;
    e.r_l = r_l[s];
    std::optional<std::size_t> best_any;
    for (std::size_t a = 0; a < b.n_actions; ++a) {
      double gap = r_l[s] - b.reward[b.idx(s, a)];
      if (!(gap > 0.0)) continue;
      double log_thr = std::log(gap) + shared;
      bool ok = std::log(pi_ref(s, a)) <= log_thr;
      auto better = [&](std::optional<std::size_t> cur) { return !cur || pi_ref(s, a) < pi_ref(s, *cur); };
      if (ok && (!e.satisfied || better(e.action))) {
        e.action = a;
        e.log_threshold = log_thr;
        e.satisfied = true;
      }
      if (!e.satisfied && better(best_any)) {
        best_any = a;
        e.log_threshold = log_thr;
      }
    }
    if (!e.satisfied) e.action = best_any;
    if (e.action) e.pi_ref_mass = pi_ref(s, *e.action);
    e.threshold = std::exp(e.log_threshold);
    rep.satisfied = rep.satisfied && e.satisfied;
    rep.per_state.push_back(e);
  }
  return rep;
}

// c_s raises rhat(s, a_s) until the regularized optimum's expected true reward at s
// drops to R_L(s). Computed with the state maximum M factored out of the exponentials.
inline double rlhf_bad_reward(const ContextualBandit<double>& b, const Policy<double>& pi_ref, double lambda,
                              std::size_t s, std::size_t a_s, double r_l) {
  double hi = b.reward[b.idx(s, 0)];
  for (std::size_t a = 1; a < b.n_actions; ++a) hi = std::max(hi, b.reward[b.idx(s, a)]);
  double num = 0.0;
  for (std::size_t a = 0; a < b.n_actions; ++a) {
    if (a == a_s) continue;
    double r = b.reward[b.idx(s, a)];
    num += (r - r_l) * pi_ref(s, a) * std::exp((r - hi) / lambda);
  }
  double base = b.reward[b.idx(s, a_s)];
  if (!(num > 0.0)) return base;
  double c = hi + lambda * std::log(num / ((r_l - base) * pi_ref(s, a_s)));
  return std::max(base, c);
}

namespace detail {

inline AttackReport<double> rlhf_attack(const ContextualBandit<double>& b, const Policy<double>& pi_ref,
                                        double lambda, double eps, double L, RlhfMetric metric, double tol) {
  validate(b);
  auto chk = check_rlhf_threshold(b, pi_ref, lambda, eps, L, metric);
  if (!chk.satisfied) {
    std::string where;
    for (const auto& e : chk.per_state)
      if (!e.satisfied) where += " " + (b.state_names.size() > e.state ? b.state_names[e.state] : std::to_string(e.state));
    fail(Errc::ConditionNotMet,
         std::string("pi_ref(a_s|s) <= (R_L(s) - R(s,a_s)) range R / (L exp(range R/lambda)) * eps^2/") +
             (metric == RlhfMetric::ChoiceKl ? "(4 lambda^2)" : "lambda^2") + " fails at state(s):" + where);
  }
  const double range = range_of(b.reward);
  AttackReport<double> rep;
  rep.kind = metric == RlhfMetric::ChoiceKl ? "rlhf" : "rlhf-mae";
  rep.metric = metric == RlhfMetric::ChoiceKl ? "choice_kl" : "mae";
  rep.rhat = b.reward;
  for (const auto& e : chk.per_state) {
    double c = rlhf_bad_reward(b, pi_ref, lambda, e.state, *e.action, e.r_l);
    rep.rhat[b.idx(e.state, *e.action)] = c;
    rep.constants.emplace_back("c_" + std::to_string(e.state), c);
  }
  rep.bad_policy = rlhf_optimal_policy(b, rep.rhat, pi_ref, lambda);
  DataDistribution<double> d(b.pairs());
  for (std::size_t s = 0; s < b.n_states; ++s)
    for (std::size_t a = 0; a < b.n_actions; ++a) d[b.idx(s, a)] = b.mu0[s] * pi_ref(s, a);
  rep.mae = mae_distance(d, b.reward, rep.rhat);
  rep.eps_budget = eps;
  rep.L_target = L;
  if (metric == RlhfMetric::ChoiceKl) {
    rep.error = choice_kl_distance(b, pi_ref, b.reward, rep.rhat);
    rep.error_budget = eps * range;
  } else {
    rep.error = rep.mae;
    rep.error_budget = eps;
  }
  rep.error_ok = rep.error <= rep.error_budget + tol;
  rep.regret_achieved = bandit_regret(b, b.reward, rep.bad_policy);
  rep.regret_ok = rep.regret_achieved >= L - tol;
  double obj = rlhf_objective(b, rep.rhat, rep.bad_policy, pi_ref, lambda);
  double ref_obj = rlhf_objective(b, rep.rhat, pi_ref, pi_ref, lambda);
  rep.optimal = obj >= ref_obj - tol * std::max(1.0, std::fabs(obj));
  rep.certificates.push_back({"J_rhat(pi) >= J_rhat(pi_ref)", bandit_return(b, rep.bad_policy, rep.rhat),
                              bandit_return(b, pi_ref, rep.rhat),
                              bandit_return(b, rep.bad_policy, rep.rhat) >= bandit_return(b, pi_ref, rep.rhat) - tol});
  rep.finish();
  if (!rep.certified) {
    std::string why;
    if (!rep.error_ok) why += " " + rep.metric;
    if (!rep.regret_ok) why += " regret";
    if (!rep.optimal) why += " optimality";
    fail(Errc::VerificationFailed, "certificate failed:" + why);
  }
  return rep;
}

}  // namespace detail

inline AttackReport<double> attack_rlhf(const ContextualBandit<double>& b, const Policy<double>& pi_ref,
                                        double lambda, double eps, double L, double tol = kTol) {
  return detail::rlhf_attack(b, pi_ref, lambda, eps, L, RlhfMetric::ChoiceKl, tol);
}

inline AttackReport<double> attack_rlhf_mae(const ContextualBandit<double>& b, const Policy<double>& pi_ref,
                                            double lambda, double eps, double L, double tol = kTol) {
  return detail::rlhf_attack(b, pi_ref, lambda, eps, L, RlhfMetric::Mae, tol);
}

// Two prompts (safe, unsafe) and N help / N refuse styles. Actions 0..N-1 help, N..2N-1 refuse.
template <class T = double>
ContextualBandit<T> chatbot_example(const T& damage, std::size_t n_styles, const T& mu_unsafe) {
  if (!(damage > T(0))) fail(Errc::InvalidArgument, "damage C must be > 0");
  if (n_styles == 0) fail(Errc::InvalidArgument, "need at least one style");
  if (mu_unsafe < T(0) || mu_unsafe > T(1)) fail(Errc::InvalidArgument, "mu_unsafe must lie in [0,1]");
  ContextualBandit<T> b(2, 2 * n_styles);
  b.state_names = {"q_safe", "q_unsafe"};
  for (std::size_t i = 0; i < n_styles; ++i) b.action_names.push_back("help_" + std::to_string(i));
  for (std::size_t i = 0; i < n_styles; ++i) b.action_names.push_back("refuse_" + std::to_string(i));
  b.mu0 = {T(1) - mu_unsafe, mu_unsafe};
  for (std::size_t i = 0; i < n_styles; ++i) {
    b.reward[b.idx(0, i)] = T(1);
    b.reward[b.idx(0, n_styles + i)] = T(0);
    b.reward[b.idx(1, i)] = -damage;
    b.reward[b.idx(1, n_styles + i)] = T(0);
  }
  return b;
}

// Regret of any always-helping policy: mu C / (1 - mu + mu C).
template <class T>
T chatbot_regret(const T& damage, const T& mu_unsafe) {
  T r = mu_unsafe * damage / (T(1) - mu_unsafe + mu_unsafe * damage);
  return r;
}

// Smallest unsafe-query frequency at which always helping reaches regret L.
template <class T>
T chatbot_mu_threshold(const T& damage, const T& L) {
  T r = L / ((T(1) - L) * damage + L);
  return r;
}

// Style count above which some help style on the unsafe prompt has D-mass below (1+C) eps / (B+C).
inline double chatbot_style_bound(double d_unsafe, double bonus, double damage, double eps) {
  return d_unsafe * (bonus + damage) / (eps * (1.0 + damage));
}

}  // namespace rsafe
