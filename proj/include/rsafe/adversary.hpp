#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "rsafe/policy_opt.hpp"
#include "rsafe/safe_set.hpp"

namespace rsafe {

// One verified inequality lhs <= rhs (or >=, as named).
struct Certificate {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
};

template <class T>
struct AttackReport {
  std::string kind;
  std::string metric = "mae";  // what `error` measures: mae or choice_kl
  RewardTable<T> rhat;
  Policy<T> bad_policy;
  T error{0};
  T error_budget{0};           // error must not exceed this
  T mae{0};
  T eps_budget{0};
  T regret_achieved{0};
  T L_target{0};
  bool error_ok = false;
  bool optimal = false;
  bool regret_ok = false;
  bool certified = false;
  std::vector<Certificate> certificates;
  std::vector<std::pair<std::string, double>> constants;

  void finish() {
    certified = error_ok && optimal && regret_ok;
    for (const auto& c : certificates) certified = certified && c.holds;
  }
};

template <class T>
struct BadPolicyChoice {
  DeterministicPolicy policy;
  T support_mass{0};
  T regret{0};
};

// Deterministic policy with regret >= L and the least D-mass on its occupancy support.
template <class T>
std::optional<BadPolicyChoice<T>> find_bad_policy(const TabularMdp<T>& mdp, const DataDistribution<T>& d, const T& L,
                                                  std::size_t cap = kDefaultCap, double tol = kTol) {
  auto vr = checked_value_range(mdp, mdp.reward);
  std::optional<BadPolicyChoice<T>> best;
  for (const auto& p : enumerate_deterministic_policies(mdp, cap)) {
    auto eta = occupancy_measure(mdp, p.template to_policy<T>(mdp.n_actions));
    T reg = (vr.max_j - dot(eta, mdp.reward)) / vr.range();
    if (!geq(reg, L, tol)) continue;
    T mass = mass_on(d, support_of(eta));
    if (!best || mass < best->support_mass) best = BadPolicyChoice<T>{p, mass, reg};
  }
  return best;
}

// rhat = R off supp D^bad and max R on it. Any policy whose occupancy stays on that support
// attains the maximal rhat-return, so bad_pi is optimal for rhat.
template <class T>
AttackReport<T> attack_unregularized(const TabularMdp<T>& mdp, const DataDistribution<T>& d, const Policy<T>& bad_pi,
                                     const T& eps, const T& L, double tol = kTol) {
  validate_policy(bad_pi, mdp.n_states, mdp.n_actions);
  auto vr = checked_value_range(mdp, mdp.reward);
  T reg = regret(mdp, mdp.reward, bad_pi, vr);
  if (!geq(reg, L, tol))
    fail(Errc::PreconditionFailed, "bad policy regret " + Num<T>::str(reg) + " is below L = " + Num<T>::str(L));
  auto eta = occupancy_measure(mdp, bad_pi);
  auto supp = support_of(eta);
  T mass = mass_on(d, supp);
  if (!(mass < eps))
    fail(Errc::PreconditionFailed,
         "D(supp D^pi) = " + Num<T>::str(mass) + " is not below epsilon = " + Num<T>::str(eps));
  const T top = max_of(mdp.reward);
  AttackReport<T> rep;
  rep.kind = "unreg";
  rep.rhat = mdp.reward;
  for (std::size_t i = 0; i < supp.size(); ++i)
    if (supp[i]) rep.rhat[i] = top;
  rep.bad_policy = bad_pi;
  rep.mae = mae_distance(d, mdp.reward, rep.rhat);
  rep.error = rep.mae;
  rep.eps_budget = eps;
  rep.error_budget = eps;
  rep.L_target = L;
  rep.error_ok = geq(mass, rep.mae, tol) && geq(eps, rep.mae, tol);
  auto hat = value_range(mdp, rep.rhat);
  T j_bad = dot(eta, rep.rhat);
  rep.optimal = geq(j_bad, hat.max_j, tol * std::max(1.0, to_double(abs_of(hat.max_j))));
  rep.regret_achieved = reg;
  rep.regret_ok = geq(reg, L, tol);
  rep.certificates.push_back({"mae <= D(supp D^pi)", to_double(rep.mae), to_double(mass), geq(mass, rep.mae, tol)});
  rep.constants.emplace_back("support_mass", to_double(mass));
  rep.finish();
  return rep;
}

template <class T>
AttackReport<T> attack_unregularized(const TabularMdp<T>& mdp, const DataDistribution<T>& d,
                                     const DeterministicPolicy& bad, const T& eps, const T& L, double tol = kTol) {
  return attack_unregularized(mdp, d, bad.template to_policy<T>(mdp.n_actions), eps, L, tol);
}

struct DeltaConstants {
  double delta = 0.0;      // min(1, (1-gamma)(1-L) range J_n / (sqrt|SA| |R|))
  double radius = 0.0;     // (1-L) range J_n / |R|
  double range_j = 0.0;    // range of the normalized return (1-gamma) * eta . R
};

// Returns use the normalized occupancy D^pi here; with J = eta . R that is (1-gamma) * range J.
inline DeltaConstants compute_delta(const TabularMdp<double>& mdp, double L) {
  if (!(L >= 0.0 && L < 1.0)) fail(Errc::InvalidArgument, "L must lie in [0,1)");
  auto vr = checked_value_range(mdp, mdp.reward);
  double norm = 0.0;
  for (double x : mdp.reward) norm += x * x;
  norm = std::sqrt(norm);
  DeltaConstants c;
  c.range_j = (1.0 - mdp.gamma) * vr.range();
  c.radius = (1.0 - L) * c.range_j / norm;
  c.delta = std::min(1.0, (1.0 - mdp.gamma) * c.radius / std::sqrt(static_cast<double>(mdp.pairs())));
  return c;
}

struct InnerConstant {
  double value = 0.0;
  std::size_t t0 = 0;
  std::vector<std::vector<double>> weights;  // weights[t][s], negative when no prefix reaches s at t
};

// min over t <= t0 and pi*-compatible prefixes ending anywhere at time t of
// gamma^t * tau(prefix) * (1-delta)^t * delta, where tau(prefix) includes mu0(s_0).
// w(t,s) is the least prefix weight reaching s at time t.
inline InnerConstant compute_inner_constant(const TabularMdp<double>& mdp, const DeterministicPolicy& pi_star,
                                            double delta) {
  if (!(delta > 0.0 && delta <= 1.0)) fail(Errc::InvalidArgument, "delta must lie in (0,1]");
  const std::size_t n = mdp.n_states;
  InnerConstant out;
  std::vector<double> w(n, -1.0);
  std::vector<bool> reached(n, false);
  for (std::size_t s = 0; s < n; ++s)
    if (mdp.mu0[s] > 0.0) {
      w[s] = mdp.mu0[s];
      reached[s] = true;
    }
  out.weights.push_back(w);
  if (mdp.gamma > 0.0) {
    for (;;) {
      std::vector<double> next(n, -1.0);
      for (std::size_t s = 0; s < n; ++s) {
        if (w[s] < 0.0) continue;
        std::size_t a = pi_star.action_of[s];
        for (std::size_t s2 = 0; s2 < n; ++s2) {
          double p = mdp.tau(s, a, s2);
          if (p <= 0.0) continue;
          double cand = w[s] * p;
          if (next[s2] < 0.0 || cand < next[s2]) next[s2] = cand;
        }
      }
      bool grew = false;
      for (std::size_t s = 0; s < n; ++s)
        if (next[s] >= 0.0 && !reached[s]) {
          reached[s] = true;
          grew = true;
        }
      if (!grew) break;
      w = next;
      out.weights.push_back(w);
    }
  }
  out.t0 = out.weights.size() - 1;
  out.value = delta;
  bool first = true;
  for (std::size_t t = 0; t <= out.t0; ++t) {
    double scale = std::pow(mdp.gamma, static_cast<double>(t)) * std::pow(1.0 - delta, static_cast<double>(t)) * delta;
    for (double x : out.weights[t]) {
      if (x < 0.0) continue;
      double v = scale * x;
      if (first || v < out.value) out.value = v;
      first = false;
    }
  }
  return out;
}

struct RegularizedAttackConstants {
  double delta = 0.0;
  double radius = 0.0;
  double c_inner = 0.0;
  double c_outer = 0.0;
  double omega_at_pistar = 0.0;
  std::size_t t0 = 0;
  double support_mass = 0.0;
  double condition_rhs = 0.0;  // eps / (1 + c_outer)
  DeterministicPolicy pi_star;
};

inline RegularizedAttackConstants regularized_attack_constants(const TabularMdp<double>& mdp,
                                                               const DataDistribution<double>& d,
                                                               const RegularizerSpec& reg, double L, double eps) {
  RegularizedAttackConstants k;
  auto dc = compute_delta(mdp, L);
  k.delta = dc.delta;
  k.radius = dc.radius;
  RewardTable<double> neg(mdp.reward.size());
  for (std::size_t i = 0; i < neg.size(); ++i) neg[i] = -mdp.reward[i];
  k.pi_star = solve_unregularized(mdp, neg);
  auto inner = compute_inner_constant(mdp, k.pi_star, k.delta);
  k.c_inner = inner.value;
  k.t0 = inner.t0;
  auto star = k.pi_star.to_policy<double>(mdp.n_actions);
  k.omega_at_pistar = reg.kind == RegularizerKind::KlToReference ? omega_kl(mdp, star, reg.reference) : 0.0;
  k.c_outer = reg.lambda * k.omega_at_pistar / (range_of(mdp.reward) * k.c_inner);
  k.support_mass = mass_on(d, support_of(occupancy_measure(mdp, star)));
  k.condition_rhs = eps / (1.0 + k.c_outer);
  return k;
}

// Attack against a KL-regularized learner. pi* is a worst-case deterministic policy; rhat lifts
// its support to max R + (lambda / C_inner) * omega(pi*), which forces the regularized optimum
// to put mass >= 1 - delta on pi*'s actions.
inline AttackReport<double> attack_regularized(const TabularMdp<double>& mdp, const DataDistribution<double>& d,
                                               const RegularizerSpec& reg, double L, double eps,
                                               double mass_slack = 1e-6, double tol = kTol) {
  if (reg.kind != RegularizerKind::KlToReference || !(reg.lambda > 0.0))
    fail(Errc::InvalidArgument, "regularized attack needs a KL regularizer with lambda > 0");
  if (!(eps > 0.0)) fail(Errc::InvalidArgument, "epsilon must be > 0");
  validate_regularizer(reg, mdp.n_states, mdp.n_actions);
  validate_distribution(d, mdp.pairs(), "data distribution");
  auto k = regularized_attack_constants(mdp, d, reg, L, eps);
  if (!(k.support_mass <= k.condition_rhs))
    fail(Errc::ConditionNotMet, "D(supp D^pi*) <= eps/(1+C) fails: " + Num<double>::str(k.support_mass) + " > " +
                                    Num<double>::str(k.condition_rhs));
  auto star = k.pi_star.to_policy<double>(mdp.n_actions);
  auto eta_star = occupancy_measure(mdp, star);
  auto supp = support_of(eta_star);
  const double lift = max_of(mdp.reward) + reg.lambda / k.c_inner * k.omega_at_pistar;

  AttackReport<double> rep;
  rep.kind = "reg";
  rep.rhat = mdp.reward;
  for (std::size_t i = 0; i < supp.size(); ++i)
    if (supp[i]) rep.rhat[i] = lift;
  rep.bad_policy = solve_kl_regularized(mdp, rep.rhat, reg);
  rep.mae = mae_distance(d, mdp.reward, rep.rhat);
  rep.error = rep.mae;
  rep.eps_budget = eps;
  rep.error_budget = eps;
  rep.L_target = L;
  rep.error_ok = rep.mae <= eps + tol;

  auto vr = checked_value_range(mdp, mdp.reward);
  rep.regret_achieved = regret(mdp, mdp.reward, rep.bad_policy, vr);
  rep.regret_ok = rep.regret_achieved >= L - tol;

  // Optimality: objective dominance over pi_ref, pi* and mixtures with pi*.
  const double obj = regularized_objective(mdp, rep.rhat, rep.bad_policy, reg);
  const double slack = tol * std::max(1.0, std::fabs(obj));
  double best_other = regularized_objective(mdp, rep.rhat, reg.reference, reg);
  for (double mix : {0.0, 0.25, 0.5, 0.75, 0.9, 0.99}) {
    Policy<double> p(mdp.n_states, mdp.n_actions);
    for (std::size_t i = 0; i < p.probs.size(); ++i)
      p.probs[i] = mix * reg.reference.probs[i] + (1.0 - mix) * star.probs[i];
    best_other = std::max(best_other, regularized_objective(mdp, rep.rhat, p, reg));
  }
  rep.optimal = obj >= best_other - slack;

  double min_mass = 1.0;
  for (std::size_t s = 0; s < mdp.n_states; ++s)
    for (std::size_t a = 0; a < mdp.n_actions; ++a)
      if (supp[mdp.idx(s, a)]) min_mass = std::min(min_mass, rep.bad_policy(s, a));
  rep.certificates.push_back({"pi_hat(a|s) >= 1 - delta on supp D^pi*", min_mass, 1.0 - k.delta,
                              min_mass >= 1.0 - k.delta - mass_slack});
  auto d_hat = policy_induced_distribution(mdp, rep.bad_policy);
  auto d_star = policy_induced_distribution(mdp, star);
  double on_supp = mass_on(d_hat, supp);
  double floor_mass = 1.0 - k.delta / (1.0 - mdp.gamma);
  rep.certificates.push_back({"D^pi_hat(supp D^pi*) >= 1 - delta/(1-gamma)", on_supp, floor_mass,
                              on_supp >= floor_mass - tol});
  double dist = 0.0;
  for (std::size_t i = 0; i < d_hat.size(); ++i) dist += (d_hat[i] - d_star[i]) * (d_hat[i] - d_star[i]);
  dist = std::sqrt(dist);
  double cap = std::sqrt(static_cast<double>(mdp.pairs())) * k.delta / (1.0 - mdp.gamma);
  rep.certificates.push_back({"|D^pi_hat - D^pi*| <= sqrt|SA| delta/(1-gamma)", dist, cap, dist <= cap + tol});
  rep.certificates.push_back({"D(supp D^pi*) <= eps/(1+C)", k.support_mass, k.condition_rhs, true});

  rep.constants = {{"delta", k.delta},
                   {"radius", k.radius},
                   {"c_inner", k.c_inner},
                   {"c_outer", k.c_outer},
                   {"omega_at_pistar", k.omega_at_pistar},
                   {"t0", static_cast<double>(k.t0)},
                   {"support_mass", k.support_mass},
                   {"lifted_reward", lift}};
  rep.finish();
  if (!rep.certified) {
    std::string why;
    if (!rep.error_ok) why += " mae";
    if (!rep.optimal) why += " optimality";
    if (!rep.regret_ok) why += " regret";
    for (const auto& c : rep.certificates)
      if (!c.holds) why += " [" + c.name + "]";
    fail(Errc::VerificationFailed, "certificate failed:" + why);
  }
  return rep;
}

struct SelfRefKlCheck {
  bool holds = false;
  double min_mass = 0.0;  // min of D^ref over supp D^pi*
  double K = 0.0;
  double bound = 0.0;     // (eps / (K |S| (1 + lambda/(range R C_inner))))^2
  double c_inner = 0.0;
};

// Sufficient condition for the general support condition when D = D^ref and omega is KL to ref.
inline SelfRefKlCheck check_selfref_kl_condition(const TabularMdp<double>& mdp, const Policy<double>& pi_ref,
                                                 double lambda, double eps, double L) {
  validate_policy(pi_ref, mdp.n_states, mdp.n_actions);
  for (double p : pi_ref.probs)
    if (!(p > 0.0)) fail(Errc::NonPositiveReference, "reference policy must be strictly positive");
  auto d_ref = policy_induced_distribution(mdp, pi_ref);
  auto dc = compute_delta(mdp, L);
  RewardTable<double> neg(mdp.reward.size());
  for (std::size_t i = 0; i < neg.size(); ++i) neg[i] = -mdp.reward[i];
  auto star = solve_unregularized(mdp, neg);
  auto supp = support_of(occupancy_measure(mdp, star.to_policy<double>(mdp.n_actions)));
  SelfRefKlCheck out;
  out.c_inner = compute_inner_constant(mdp, star, dc.delta).value;
  double hi = 0.0, lo = 0.0;
  bool first = true;
  for (std::size_t i = 0; i < supp.size(); ++i) {
    if (!supp[i]) continue;
    if (first || d_ref[i] > hi) hi = d_ref[i];
    if (first || d_ref[i] < lo) lo = d_ref[i];
    first = false;
  }
  if (!(lo > 0.0)) fail(Errc::NonPositiveReference, "reference distribution vanishes on supp D^pi*");
  out.min_mass = lo;
  out.K = hi / lo;
  double denom = out.K * static_cast<double>(mdp.n_states) * (1.0 + lambda / (range_of(mdp.reward) * out.c_inner));
  out.bound = (eps / denom) * (eps / denom);
  out.holds = out.min_mass <= out.bound;
  return out;
}

}  // namespace rsafe
