#include <gtest/gtest.h>

#include <cmath>

#include "support/generators.hpp"
#include "support/oracles.hpp"

using namespace rsafe;

namespace {

TabularMdp<double> one_state(double gamma, std::vector<double> r) {
  TabularMdp<double> m(1, r.size());
  m.gamma = gamma;
  m.mu0 = {1.0};
  for (std::size_t a = 0; a < r.size(); ++a) m.tau(0, a, 0) = 1.0;
  m.reward = std::move(r);
  return m;
}

std::vector<double> negated(const std::vector<double>& r) {
  std::vector<double> out(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) out[i] = -r[i];
  return out;
}

// Puts total mass rho on supp and spreads the rest uniformly elsewhere.
std::vector<double> mass_split(const std::vector<bool>& supp, double rho) {
  std::size_t k = std::count(supp.begin(), supp.end(), true), rest = supp.size() - k;
  std::vector<double> d(supp.size());
  for (std::size_t i = 0; i < supp.size(); ++i) d[i] = supp[i] ? rho / k : (1.0 - rho) / rest;
  return d;
}

}  // namespace

TEST(AttackUnregularized, TwoArmedBandit) {
  auto m = one_state(0.0, {1.0, 0.0});
  std::vector<double> d{0.95, 0.05};
  auto rep = attack_unregularized(m, d, DeterministicPolicy{{1}}, 0.1, 1.0);
  EXPECT_TRUE(rep.certified);
  EXPECT_NEAR(rep.mae, 0.05, 1e-15);
  EXPECT_DOUBLE_EQ(rep.rhat[1], 1.0);
}

TEST(AttackUnregularized, OptimalPolicyIsRejected) {
  auto m = one_state(0.0, {1.0, 0.0});
  try {
    attack_unregularized(m, std::vector<double>{0.5, 0.5}, DeterministicPolicy{{0}}, 0.6, 0.5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::PreconditionFailed);
  }
}

TEST(AttackUnregularized, MaeIsSupportGapSum) {
  gen::Rng rng(50);
  int done = 0;
  for (int t = 0; t < 200 && done < 40; ++t) {
    auto m = gen::mdp<Rational>(rng);
    auto d = gen::distribution<Rational>(rng, m.pairs(), false);
    auto bad = find_bad_policy(m, d, Rational(1, 2));
    if (!bad) continue;
    Rational eps = bad->support_mass + Rational(1, 100);
    auto rep = attack_unregularized(m, d, bad->policy, eps, Rational(1, 2));
    auto supp = support_of(occupancy_measure(m, bad->policy.to_policy<Rational>(m.n_actions)));
    Rational expect(0);
    for (std::size_t i = 0; i < supp.size(); ++i)
      if (supp[i]) expect += d[i] * (max_of(m.reward) - m.reward[i]);
    expect /= range_of(m.reward);
    EXPECT_EQ(rep.mae, expect);
    EXPECT_LE(rep.mae, bad->support_mass);
    EXPECT_TRUE(rep.certified);
    ++done;
  }
  EXPECT_GE(done, 20);
}

TEST(Delta, PositiveAndDirectFormula) {
  auto m = one_state(0.5, {1.0, 0.0, -1.0});
  auto dc = compute_delta(m, 0.5);
  EXPECT_NEAR(dc.delta, 0.5 / std::sqrt(6.0), 1e-15);
  gen::Rng rng(51);
  for (int t = 0; t < 20; ++t) {
    auto g = gen::mdp<double>(rng);
    EXPECT_GT(compute_delta(g, rng.real(0.0, 0.99)).delta, 0.0);
  }
}

TEST(Delta, CloseOccupanciesKeepHighRegret) {
  gen::Rng rng(52);
  for (int t = 0; t < 30; ++t) {
    auto m = gen::mdp<double>(rng);
    double L = rng.real(0.1, 0.9);
    auto dc = compute_delta(m, L);
    auto star = solve_unregularized(m, negated(m.reward)).to_policy<double>(m.n_actions);
    auto d_star = policy_induced_distribution(m, star);
    for (int k = 0; k < 20; ++k) {
      auto other = gen::policy<double>(rng, m.n_states, m.n_actions);
      double mix = rng.real(0.0, 0.3);
      Policy<double> p(m.n_states, m.n_actions);
      for (std::size_t i = 0; i < p.probs.size(); ++i) p.probs[i] = (1 - mix) * star.probs[i] + mix * other.probs[i];
      auto d = policy_induced_distribution(m, p);
      double dist = 0.0;
      for (std::size_t i = 0; i < d.size(); ++i) dist += (d[i] - d_star[i]) * (d[i] - d_star[i]);
      if (std::sqrt(dist) <= dc.radius) {
        EXPECT_GE(regret(m, m.reward, p), L - 1e-9);
      }
    }
  }
}

TEST(InnerConstant, OneStateIsDelta) {
  auto m = one_state(0.5, {1.0, 0.0});
  auto ic = compute_inner_constant(m, DeterministicPolicy{{1}}, 0.2);
  EXPECT_EQ(ic.t0, 0u);
  EXPECT_DOUBLE_EQ(ic.value, 0.2);
}

TEST(InnerConstant, ChainMatchesPrefixEnumeration) {
  TabularMdp<double> m(2, 2);
  m.gamma = 0.5;
  m.mu0 = {1.0, 0.0};
  m.tau(0, 0, 0) = 1.0;
  m.tau(0, 1, 1) = 1.0;
  m.tau(1, 0, 1) = 1.0;
  m.tau(1, 1, 0) = 1.0;
  m.reward = {0.0, 1.0, 0.5, -1.0};
  DeterministicPolicy star{{1, 0}};
  const double delta = 0.1;
  auto ic = compute_inner_constant(m, star, delta);
  EXPECT_EQ(ic.t0, 1u);
  // Prefixes under star: (s0) weight 1 at t=0, (s0,s1) weight 1 at t=1.
  double expect = std::min(delta, 0.5 * (1 - delta) * delta);
  EXPECT_NEAR(ic.value, expect, 1e-15);
}

TEST(InnerConstant, NeverAboveDelta) {
  gen::Rng rng(53);
  for (int t = 0; t < 30; ++t) {
    auto m = gen::mdp<double>(rng);
    double delta = rng.real(0.01, 1.0);
    auto star = solve_unregularized(m, negated(m.reward));
    EXPECT_LE(compute_inner_constant(m, star, delta).value, delta);
  }
}

TEST(AttackRegularized, SkewedReferenceBandit) {
  auto m = one_state(0.0, {1.0, 0.0});
  Policy<double> ref(1, 2);
  ref(0, 0) = 1 - 1e-6;
  ref(0, 1) = 1e-6;
  auto d = policy_induced_distribution(m, ref);
  auto rep = attack_regularized(m, d, RegularizerSpec::kl(ref, 1.0), 0.9, 0.05);
  EXPECT_TRUE(rep.certified);
  EXPECT_GE(rep.regret_achieved, 0.9);
}

TEST(AttackRegularized, VanishingLambdaLiftsToMaxReward) {
  auto m = one_state(0.0, {1.0, 0.0, 0.5});
  auto ref = Policy<double>::uniform(1, 3);
  std::vector<double> d{0.6, 1e-7, 0.4 - 1e-7};
  auto rep = attack_regularized(m, d, RegularizerSpec::kl(ref, 1e-9), 0.9, 0.05);
  EXPECT_NEAR(rep.rhat[1], 1.0, 1e-6);
}

TEST(AttackRegularized, ConditionNotMetIsNamed) {
  auto m = one_state(0.0, {1.0, 0.0});
  auto ref = Policy<double>::uniform(1, 2);
  try {
    attack_regularized(m, std::vector<double>{0.5, 0.5}, RegularizerSpec::kl(ref, 1.0), 0.5, 0.05);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::ConditionNotMet);
    EXPECT_NE(std::string(e.what()).find("D(supp D^pi*) <= eps/(1+C)"), std::string::npos);
  }
}

TEST(AttackRegularized, EngineeredInstancesCertify) {
  gen::Rng rng(54);
  for (int t = 0; t < 20; ++t) {
    auto m = gen::mdp<double>(rng, gen::MdpShape{2, 3, 0.3});
    auto ref = gen::policy<double>(rng, m.n_states, m.n_actions);
    double lambda = rng.real(0.05, 1.0), L = rng.real(0.3, 0.9), eps = 0.1;
    auto reg = RegularizerSpec::kl(ref, lambda);
    auto probe = regularized_attack_constants(m, std::vector<double>(m.pairs(), 1.0 / m.pairs()), reg, L, eps);
    auto supp = support_of(occupancy_measure(m, probe.pi_star.to_policy<double>(m.n_actions)));
    auto d = mass_split(supp, 0.5 * probe.condition_rhs);
    auto rep = attack_regularized(m, d, reg, L, eps);
    EXPECT_TRUE(rep.certified);
    EXPECT_LE(rep.mae, eps + 1e-12);
  }
}

TEST(SelfRefCondition, ImpliesSupportCondition) {
  gen::Rng rng(55);
  int held = 0;
  for (int t = 0; t < 60; ++t) {
    auto m = gen::mdp<double>(rng, gen::MdpShape{2, 3, 0.0});
    auto star = solve_unregularized(m, negated(m.reward));
    Policy<double> ref(m.n_states, m.n_actions);
    double tiny = std::pow(10.0, -rng.integer(2, 14));
    for (std::size_t s = 0; s < m.n_states; ++s)
      for (std::size_t a = 0; a < m.n_actions; ++a)
        ref(s, a) = a == star.action_of[s] ? tiny : (1.0 - tiny) / (m.n_actions - 1);
    double lambda = 0.5, eps = 0.2, L = 0.5;
    auto chk = check_selfref_kl_condition(m, ref, lambda, eps, L);
    if (!chk.holds) continue;
    ++held;
    auto k = regularized_attack_constants(m, policy_induced_distribution(m, ref), RegularizerSpec::kl(ref, lambda), L,
                                          eps);
    EXPECT_LE(k.support_mass, k.condition_rhs);
  }
  EXPECT_GT(held, 0);
}

TEST(SelfRefCondition, UniformReferenceUsuallyFails) {
  auto m = one_state(0.5, {1.0, 0.0, -1.0});
  EXPECT_FALSE(check_selfref_kl_condition(m, Policy<double>::uniform(1, 3), 1.0, 0.1, 0.5).holds);
}
