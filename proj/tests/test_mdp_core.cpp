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

TabularMdp<double> chain() {
  TabularMdp<double> m(2, 2);
  m.gamma = 0.5;
  m.mu0 = {1.0, 0.0};
  m.tau(0, 0, 0) = 1.0;
  m.tau(0, 1, 1) = 1.0;
  m.tau(1, 0, 1) = 1.0;
  m.tau(1, 1, 0) = 1.0;
  m.reward = {0.0, 0.2, 1.0, -1.0};
  return m;
}

Policy<double> pick(std::size_t m, std::vector<std::size_t> acts) {
  return DeterministicPolicy{std::move(acts)}.to_policy<double>(m);
}

}  // namespace

TEST(Validate, AcceptsChain) { EXPECT_NO_THROW(validate(chain())); }

TEST(Validate, RejectsUnreachableState) {
  auto m = chain();
  m.tau(0, 1, 1) = 0.0;
  m.tau(0, 1, 0) = 1.0;
  try {
    validate(m);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::UnreachableState);
  }
}

TEST(Validate, RejectsConstantReward) {
  auto m = one_state(0.5, {2.0, 2.0});
  try {
    validate(m);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::TrivialReward);
  }
}

TEST(Validate, RejectsRowsOffTheSimplex) {
  auto m = chain();
  m.tau(1, 0, 1) = 0.9;
  try {
    validate(m);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::StochasticityViolation);
  }
}

TEST(Occupancy, GeometricSeriesOnOneState) {
  auto m = one_state(0.5, {1.0, 0.0});
  auto eta = occupancy_measure(m, pick(2, {0}));
  EXPECT_NEAR(eta[0], 2.0, 1e-12);
  EXPECT_NEAR(eta[1], 0.0, 1e-12);
}

TEST(Occupancy, TotalMassAndSeriesOracle) {
  gen::Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    auto m = gen::mdp<double>(rng);
    auto pi = gen::policy<double>(rng, m.n_states, m.n_actions, trial % 2 == 0);
    auto eta = occupancy_measure(m, pi);
    double total = 0.0;
    for (double x : eta) total += x;
    EXPECT_NEAR(total, 1.0 / (1.0 - m.gamma), 1e-9);
    auto ref = oracle::occupancy_series(m, pi);
    for (std::size_t i = 0; i < eta.size(); ++i) EXPECT_NEAR(eta[i], ref[i], 1e-8);
  }
}

TEST(Occupancy, ThreeStatesAtHighDiscount) {
  gen::Rng rng(12);
  gen::MdpShape shape{3, 3, 0.2};
  for (int trial = 0; trial < 10; ++trial) {
    auto m = gen::mdp<double>(rng, shape);
    m.gamma = 0.9;
    auto pi = gen::policy<double>(rng, m.n_states, m.n_actions);
    auto eta = occupancy_measure(m, pi);
    auto ref = oracle::occupancy_series(m, pi);
    for (std::size_t i = 0; i < eta.size(); ++i) EXPECT_NEAR(eta[i], ref[i], 1e-8);
  }
}

TEST(Occupancy, ExactFlowEquationsInRationalMode) {
  gen::Rng rng(13);
  for (int trial = 0; trial < 30; ++trial) {
    auto m = gen::mdp<Rational>(rng);
    auto pi = gen::policy<Rational>(rng, m.n_states, m.n_actions, false);
    auto eta = occupancy_measure(m, pi);
    for (std::size_t s2 = 0; s2 < m.n_states; ++s2) {
      Rational inflow = m.mu0[s2], out(0);
      for (std::size_t s = 0; s < m.n_states; ++s)
        for (std::size_t a = 0; a < m.n_actions; ++a) inflow += m.gamma * eta[m.idx(s, a)] * m.tau(s, a, s2);
      for (std::size_t a = 0; a < m.n_actions; ++a) out += eta[m.idx(s2, a)];
      EXPECT_EQ(out, inflow);
    }
  }
}

TEST(InducedDistribution, SmallCases) {
  auto m = one_state(0.0, {1.0, 0.0});
  auto d = policy_induced_distribution(m, pick(2, {0}));
  EXPECT_DOUBLE_EQ(d[0], 1.0);
  EXPECT_DOUBLE_EQ(d[1], 0.0);
  auto u = policy_induced_distribution(m, Policy<double>::uniform(1, 2));
  EXPECT_DOUBLE_EQ(u[0], 0.5);
  EXPECT_DOUBLE_EQ(u[1], 0.5);
}

TEST(InducedDistribution, SumsToOne) {
  gen::Rng rng(14);
  for (int trial = 0; trial < 30; ++trial) {
    auto m = gen::mdp<double>(rng);
    auto d = policy_induced_distribution(m, gen::policy<double>(rng, m.n_states, m.n_actions));
    double total = 0.0;
    for (double x : d) total += x;
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(PolicyEval, OneStateReturn) {
  auto m = one_state(0.5, {1.0, 0.0});
  EXPECT_NEAR(policy_eval(m, pick(2, {0}), m.reward), 2.0, 1e-12);
}

TEST(PolicyEval, LinearInReward) {
  gen::Rng rng(15);
  for (int trial = 0; trial < 30; ++trial) {
    auto m = gen::mdp<double>(rng);
    auto pi = gen::policy<double>(rng, m.n_states, m.n_actions);
    auto r1 = gen::real_vector(rng, m.pairs(), -1, 1), r2 = gen::real_vector(rng, m.pairs(), -1, 1);
    std::vector<double> sum(m.pairs());
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] = r1[i] + r2[i];
    EXPECT_NEAR(policy_eval(m, pi, sum), policy_eval(m, pi, r1) + policy_eval(m, pi, r2), 1e-10);
  }
}

TEST(PolicyEval, AgreesWithRollouts) {
  gen::Rng rng(16);
  for (int trial = 0; trial < 3; ++trial) {
    auto m = gen::mdp<double>(rng);
    if (m.gamma > 0.75) m.gamma = 0.75;
    auto pi = gen::policy<double>(rng, m.n_states, m.n_actions);
    auto [mean, se] = oracle::monte_carlo_return(m, pi, 100000, 100 + trial);
    EXPECT_LE(std::fabs(policy_eval(m, pi, m.reward) - mean), 3.0 * se + 1e-12);
  }
}

TEST(Regret, EndpointsAndTightnessExample) {
  auto m = one_state(0.5, {1.0, 0.0, -1.0});
  EXPECT_NEAR(regret(m, m.reward, pick(3, {0})), 0.0, 1e-12);
  EXPECT_NEAR(regret(m, m.reward, pick(3, {2})), 1.0, 1e-12);
  EXPECT_NEAR(regret(m, m.reward, pick(3, {1})), 0.5, 1e-12);
}

TEST(Regret, ExactInRationalMode) {
  TabularMdp<Rational> m(1, 3);
  m.gamma = Rational(1, 2);
  m.mu0 = {Rational(1)};
  for (std::size_t a = 0; a < 3; ++a) m.tau(0, a, 0) = 1;
  m.reward = {Rational(1), Rational(0), Rational(-1)};
  EXPECT_EQ(regret(m, m.reward, DeterministicPolicy{{1}}.to_policy<Rational>(3)), Rational(1, 2));
}

TEST(Distances, MaeCases) {
  std::vector<double> r{1.0, 0.0}, same = r, up{1.0, 1.0};
  std::vector<double> u{0.5, 0.5}, on_gap{0.0, 1.0};
  EXPECT_DOUBLE_EQ(mae_distance(u, r, same), 0.0);
  EXPECT_DOUBLE_EQ(mae_distance(on_gap, r, up), 1.0);
  EXPECT_DOUBLE_EQ(mae_distance(u, r, up), 0.5);
}

TEST(Distances, MseCases) {
  std::vector<double> r{1.0, 0.0}, up{1.0, 1.0}, u{0.5, 0.5};
  EXPECT_DOUBLE_EQ(mse_distance(u, r, r), 0.0);
  EXPECT_DOUBLE_EQ(mse_distance(u, r, up), 0.5);
}

TEST(Enumerate, Counts) {
  EXPECT_EQ(enumerate_deterministic_policies(1, 3).size(), 3u);
  EXPECT_EQ(enumerate_deterministic_policies(2, 2).size(), 4u);
  gen::Rng rng(17);
  for (int t = 0; t < 20; ++t) {
    std::size_t n = rng.integer(1, 4), m = rng.integer(1, 4);
    EXPECT_EQ(enumerate_deterministic_policies(n, m).size(), static_cast<std::size_t>(std::pow(m, n)));
  }
}

TEST(Enumerate, CapIsEnforced) {
  try {
    enumerate_deterministic_policies(10, 10, 1000);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::EnumerationCapExceeded);
  }
}

TEST(SolveUnregularized, BanditPicksArgmax) {
  ContextualBandit<double> b(2, 3);
  b.mu0 = {0.5, 0.5};
  b.reward = {0.1, 0.9, 0.3, -1.0, -2.0, 0.5};
  auto p = solve_unregularized(embed_bandit(b), b.reward);
  EXPECT_EQ(p.action_of, (std::vector<std::size_t>{1, 2}));
}

TEST(SolveUnregularized, MatchesBruteForceAndHasZeroRegret) {
  gen::Rng rng(18);
  for (int trial = 0; trial < 40; ++trial) {
    auto m = gen::mdp<double>(rng);
    auto p = solve_unregularized(m, m.reward);
    auto br = oracle::brute_range(m, m.reward);
    auto vr = value_range(m, m.reward);
    EXPECT_NEAR(vr.max_j, br.max_j, 1e-8);
    EXPECT_NEAR(vr.min_j, br.min_j, 1e-8);
    EXPECT_NEAR(regret(m, m.reward, p.to_policy<double>(m.n_actions)), 0.0, 1e-9);
  }
}

TEST(SolveUnregularized, RationalModeIsExactlyOptimal) {
  gen::Rng rng(19);
  for (int trial = 0; trial < 20; ++trial) {
    auto m = gen::mdp<Rational>(rng);
    auto vr = value_range(m, m.reward);
    for (const auto& p : enumerate_deterministic_policies(m)) {
      Rational j = policy_eval(m, p.to_policy<Rational>(m.n_actions), m.reward);
      EXPECT_LE(j, vr.max_j);
      EXPECT_GE(j, vr.min_j);
    }
  }
}

TEST(Bandit, RegretMatchesEmbedding) {
  gen::Rng rng(20);
  for (int trial = 0; trial < 20; ++trial) {
    auto b = gen::bandit(rng);
    auto pi = gen::policy<double>(rng, b.n_states, b.n_actions);
    EXPECT_NEAR(bandit_regret(b, b.reward, pi), regret(embed_bandit(b), b.reward, pi), 1e-10);
  }
}
