// rsafe: command-line front end for the reward-safety library.
//
// Exit codes: 0 ok, 1 other library error, 2 parse or argument error, 3 trivial reward,
// 4 enumeration cap exceeded, 5 attack condition or precondition not met, 6 verification failed.

#include <cmath>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rsafe/examples.hpp"
#include "rsafe/io.hpp"
#include "rsafe/rsafe.hpp"

using namespace rsafe;

namespace {

struct Globals {
  std::string mode = "float";
  double tol = kTol;
  std::uint64_t seed = 0;
  std::size_t cap = kDefaultCap;
  std::string out;
  bool oracle = false;
  bool promote_floats = false;
};

struct Args {
  std::string file;
  std::string dist;
  std::string matrix;
  std::string policy;
  std::string ref;
  std::string rhat;
  std::string epsilon = "1/10";
  std::string regret_bound = "1/2";
  std::string lambda = "1";
  std::string kind = "unreg";
  std::string zeros = "occupancy";
  std::string name = "worked";
  std::size_t horizon = 3;
  std::size_t trials = 10;
};

bool rational(const Globals& g) { return g.mode == "rational"; }

template <class T>
T scalar_arg(const std::string& text, const std::string& what) {
  try {
    Rational q = parse_rational(text);
    if constexpr (Num<T>::exact) return q;
    else return q.get_d();
  } catch (const Error&) {
    fail(Errc::InvalidArgument, what + ": not a number '" + text + "'");
  }
}

void emit(const Globals& g, const Json& j, const std::string& summary = "") {
  if (g.out.empty()) {
    std::cout << j.dump(2) << "\n";
  } else {
    write_text(g.out, j.dump(2) + "\n");
    if (!summary.empty()) std::cout << summary << "\n";
  }
}

void require_float(const Globals& g, const std::string& what) {
  if (rational(g)) fail(Errc::InvalidArgument, what + " runs in float mode only");
}

template <class T>
Instance<T> load_instance(const Globals& g, const std::string& path) {
  return parse_instance<T>(load_json(path), ReadOptions{g.promote_floats});
}

std::vector<std::string> policy_names(const TabularMdp<double>& mdp, const DeterministicPolicy& p) {
  std::vector<std::string> out;
  for (std::size_t s = 0; s < p.action_of.size(); ++s)
    out.push_back(mdp.action_names.size() == mdp.n_actions ? mdp.action_names[p.action_of[s]]
                                                           : std::to_string(p.action_of[s]));
  return out;
}

template <class T>
DataDistribution<T> load_dist(const Globals& g, const std::string& path, std::size_t pairs) {
  if (path.empty()) fail(Errc::InvalidArgument, "--dist is required");
  return parse_distribution<T>(load_json(path), pairs, ReadOptions{g.promote_floats});
}

template <class T>
int cmd_validate(const Globals& g, const Args& a) {
  auto inst = load_instance<T>(g, a.file);
  if (inst.is_bandit) validate(inst.bandit);
  validate(inst.mdp);
  auto vr = checked_value_range(inst.mdp, inst.mdp.reward);
  auto dm = to_double_mdp(inst.mdp);
  Json j;
  j["valid"] = true;
  j["kind"] = inst.is_bandit ? "bandit" : "mdp";
  j["states"] = inst.mdp.n_states;
  j["actions"] = inst.mdp.n_actions;
  j["range_r"] = num_json(range_of(inst.mdp.reward));
  j["max_j"] = num_json(vr.max_j);
  j["min_j"] = num_json(vr.min_j);
  j["range_j"] = num_json(vr.range());
  j["optimal_policy"] = policy_names(dm, vr.best);
  j["worst_policy"] = policy_names(dm, vr.worst);
  emit(g, j);
  return 0;
}

template <class T>
MatrixOptions matrix_options(const Globals& g, const Args& a) {
  MatrixOptions opt;
  opt.policy_cap = g.cap;
  opt.candidate_cap = g.cap;
  opt.tol = g.tol;
  if (a.zeros == "policy") opt.zeros = ZeroSet::Policy;
  else if (a.zeros != "occupancy") fail(Errc::InvalidArgument, "--zeros must be occupancy or policy");
  return opt;
}

template <class T>
int cmd_matrix(const Globals& g, const Args& a) {
  auto inst = load_instance<T>(g, a.file);
  validate(inst.mdp);
  T L = scalar_arg<T>(a.regret_bound, "--regret-bound");
  auto sm = build_safety_matrix(inst.mdp, L, matrix_options<T>(g, a));
  emit(g, matrix_json(sm), "rows: " + std::to_string(sm.rows.size()));
  return 0;
}

template <class T>
int cmd_check(const Globals& g, const Args& a) {
  auto inst = load_instance<T>(g, a.file);
  validate(inst.mdp);
  const auto& mdp = inst.mdp;
  T eps = scalar_arg<T>(a.epsilon, "--epsilon");
  T L = scalar_arg<T>(a.regret_bound, "--regret-bound");
  auto d = load_dist<T>(g, a.dist, mdp.pairs());
  validate_distribution(d, mdp.pairs(), "data distribution");
  std::vector<SAVector<T>> rows;
  if (!a.matrix.empty()) {
    rows = parse_matrix_rows<T>(load_json(a.matrix), mdp.pairs(), ReadOptions{g.promote_floats});
  } else {
    rows = build_safety_matrix(mdp, L, matrix_options<T>(g, a)).rows;
  }
  double tol = rational(g) ? 0.0 : g.tol;
  auto v = check_safety(rows, d, eps, range_of(mdp.reward), tol);
  Json j = verdict_json(v, rows);
  j["rows"] = rows.size();
  int code = 0;
  if (g.oracle) {
    auto hv = high_regret_vertices(mdp, L, g.cap, g.tol);
    auto ov = lp_safety_verdict(mdp, hv.vertices, d, eps, ZeroSet::Occupancy, g.tol);
    j["oracle_safe"] = ov.safe;
    j["oracle_min_distance"] = ov.min_value ? num_json(*ov.min_value) : Json(nullptr);
    j["agreement"] = ov.safe == v.safe;
    if (ov.safe != v.safe) code = exit_code(Errc::VerificationFailed);
  }
  emit(g, j, v.safe ? "safe" : "unsafe");
  return code;
}

template <class T>
Policy<T> load_policy_or_uniform(const Globals& g, const std::string& path, std::size_t n, std::size_t m) {
  if (path.empty()) return Policy<T>::uniform(n, m);
  auto p = parse_policy<T>(load_json(path), n, m, ReadOptions{g.promote_floats});
  validate_policy(p, n, m);
  return p;
}

template <class T>
int cmd_attack_unreg(const Globals& g, const Args& a) {
  auto inst = load_instance<T>(g, a.file);
  validate(inst.mdp);
  const auto& mdp = inst.mdp;
  T eps = scalar_arg<T>(a.epsilon, "--epsilon");
  T L = scalar_arg<T>(a.regret_bound, "--regret-bound");
  DataDistribution<T> d;
  if (a.dist.empty()) d.assign(mdp.pairs(), T(1) / T(static_cast<long>(mdp.pairs())));
  else d = load_dist<T>(g, a.dist, mdp.pairs());
  validate_distribution(d, mdp.pairs(), "data distribution");
  AttackReport<T> rep;
  if (!a.policy.empty()) {
    rep = attack_unregularized(mdp, d, load_policy_or_uniform<T>(g, a.policy, mdp.n_states, mdp.n_actions), eps, L,
                               g.tol);
  } else {
    auto bad = find_bad_policy(mdp, d, L, g.cap, g.tol);
    if (!bad) fail(Errc::PreconditionFailed, "no deterministic policy reaches regret L");
    rep = attack_unregularized(mdp, d, bad->policy, eps, L, g.tol);
  }
  emit(g, report_json(rep, mdp.n_states, mdp.n_actions), rep.certified ? "certified" : "not certified");
  return rep.certified ? 0 : exit_code(Errc::VerificationFailed);
}

int cmd_attack(const Globals& g, const Args& a) {
  if (a.kind == "unreg") return rational(g) ? cmd_attack_unreg<Rational>(g, a) : cmd_attack_unreg<double>(g, a);
  require_float(g, "attack --kind " + a.kind);
  auto inst = load_instance<double>(g, a.file);
  validate(inst.mdp);
  double eps = scalar_arg<double>(a.epsilon, "--epsilon");
  double L = scalar_arg<double>(a.regret_bound, "--regret-bound");
  double lambda = scalar_arg<double>(a.lambda, "--lambda");
  const auto& mdp = inst.mdp;
  auto ref = load_policy_or_uniform<double>(g, a.ref, mdp.n_states, mdp.n_actions);
  AttackReport<double> rep;
  if (a.kind == "reg") {
    DataDistribution<double> d =
        a.dist.empty() ? policy_induced_distribution(mdp, ref) : load_dist<double>(g, a.dist, mdp.pairs());
    rep = attack_regularized(mdp, d, RegularizerSpec::kl(ref, lambda), L, eps, 1e-6, g.tol);
  } else if (a.kind == "rlhf" || a.kind == "rlhf-mae") {
    if (!inst.is_bandit) fail(Errc::InvalidArgument, "rlhf attacks need a bandit file");
    rep = a.kind == "rlhf" ? attack_rlhf(inst.bandit, ref, lambda, eps, L, g.tol)
                           : attack_rlhf_mae(inst.bandit, ref, lambda, eps, L, g.tol);
  } else {
    fail(Errc::InvalidArgument, "--kind must be unreg, reg, rlhf or rlhf-mae");
  }
  emit(g, report_json(rep, mdp.n_states, mdp.n_actions), rep.certified ? "certified" : "not certified");
  return 0;
}

Json bound_json(const BoundCheck& b) { return Json{{"lhs", b.lhs}, {"rhs", b.rhs}, {"holds", b.holds}}; }

int cmd_verify_bounds(const Globals& g, const Args& a) {
  require_float(g, "verify-bounds");
  auto inst = load_instance<double>(g, a.file);
  validate(inst.mdp);
  const auto& mdp = inst.mdp;
  if (a.horizon == 0) fail(Errc::InvalidArgument, "--horizon must be >= 1");
  std::mt19937_64 rng(g.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double spread = std::max(1.0, range_of(mdp.reward));
  Json trials = Json::array();
  bool all = true;
  for (std::size_t t = 0; t < a.trials; ++t) {
    RewardTable<double> rhat = mdp.reward;
    Policy<double> pi = Policy<double>::uniform(mdp.n_states, mdp.n_actions);
    if (t == 0) {
      for (auto& x : rhat) x += spread;  // constant shift
    } else {
      for (auto& x : rhat) x += spread * (2.0 * unit(rng) - 1.0);
      for (std::size_t s = 0; s < mdp.n_states; ++s) {
        double z = 0.0;
        for (std::size_t k = 0; k < mdp.n_actions; ++k) z += pi(s, k) = 0.05 + unit(rng);
        for (std::size_t k = 0; k < mdp.n_actions; ++k) pi(s, k) /= z;
      }
    }
    auto b1 = verify_return_bound(mdp, pi, mdp.reward, rhat, a.horizon, g.cap);
    auto b2 = verify_choice_bound(mdp, pi, mdp.reward, rhat, a.horizon, g.cap);
    auto b3 = verify_common_prefix_bound(mdp, pi, mdp.reward, rhat, a.horizon, g.cap);
    all = all && b1.holds && b2.holds && b3.holds;
    trials.push_back(Json{{"trial", t},
                          {"return_bound", bound_json(b1)},
                          {"choice_bound", bound_json(b2)},
                          {"common_prefix_bound", bound_json(b3)}});
  }
  Json j;
  j["horizon"] = a.horizon;
  j["seed"] = g.seed;
  j["trials"] = trials;
  j["all_hold"] = all;
  emit(g, j, all ? "all bounds hold" : "a bound failed");
  return all ? 0 : exit_code(Errc::VerificationFailed);
}

template <class T>
int example_tightness(const Globals& g) {
  Json rows = Json::array();
  bool all = true;
  for (auto [p, q] : {std::pair{1, 4}, std::pair{1, 2}, std::pair{1, 1}}) {
    T U = ratio<T>(p, q);
    auto ex = tightness_example<T>(U, ratio<T>(1, 2));
    auto vr = checked_value_range(ex.mdp, ex.mdp.reward);
    T reg = regret(ex.mdp, ex.mdp.reward, ex.pi_hat.template to_policy<T>(3), vr);
    auto rb = regret_upper_bound(ex.mdp, ex.mdp.reward, ex.rhat);
    T d_bound = mae_distance(ex.d, ex.mdp.reward, ex.rhat) * range_of(ex.mdp.reward) /
                ((T(1) - ex.mdp.gamma) * vr.range() * min_of(ex.d));
    double tol = Num<T>::exact ? 0.0 : g.tol;
    bool ok = eq(reg, U, tol) && eq(rb.bound_squared, T(U * U), tol) && rb.projected_squared &&
              eq(*rb.projected_squared, T(U * U), tol) && eq(d_bound, U, tol);
    all = all && ok;
    rows.push_back(Json{{"U", num_json(U)},
                        {"regret", num_json(reg)},
                        {"bound", rb.bound},
                        {"bound_squared", num_json(rb.bound_squared)},
                        {"projected_bound", *rb.projected},
                        {"distribution_bound", num_json(d_bound)},
                        {"match", ok}});
  }
  emit(g, Json{{"name", "tightness"}, {"rows", rows}, {"all_match", all}}, all ? "all match" : "mismatch");
  return all ? 0 : exit_code(Errc::VerificationFailed);
}

int example_chatbot(const Globals& g) {
  Json rows = Json::array();
  bool all = true;
  for (double C : {1.0, 10.0, 100.0})
    for (double L : {0.1, 0.25, 0.5, 0.75, 0.9}) {
      double mu = chatbot_mu_threshold(C, L);
      double at = chatbot_regret(C, mu);
      auto b = chatbot_example<double>(C, 2, mu);
      Policy<double> help(2, 4);
      help(0, 0) = help(1, 0) = 1.0;
      double direct = bandit_regret(b, b.reward, help);
      bool below = chatbot_regret(C, mu * 0.999) < L, above = chatbot_regret(C, std::min(1.0, mu * 1.001)) >= L;
      bool ok = std::fabs(at - L) <= 1e-10 && std::fabs(direct - at) <= 1e-10 && below && above;
      all = all && ok;
      rows.push_back(Json{{"C", C}, {"L", L}, {"mu_threshold", mu}, {"regret_formula", at}, {"regret_direct", direct},
                          {"match", ok}});
    }
  emit(g, Json{{"name", "chatbot"}, {"rows", rows}, {"all_match", all}}, all ? "all match" : "mismatch");
  return all ? 0 : exit_code(Errc::VerificationFailed);
}

template <class T>
int example_worked(const Globals& g) {
  auto mdp = worked_example<T>();
  auto basis = build_phi_basis(mdp);
  bool ones = true;
  for (std::size_t i = 0; i < mdp.pairs(); ++i) ones = ones && basis.A(i, 0) == T(1) && basis.P(i, 0) == T(1);
  auto sm = build_safety_matrix(mdp, ratio<T>(1, 2));
  Json j{{"name", "worked"}, {"mdp", mdp_json(mdp)}, {"L", num_json(ratio<T>(1, 2))}, {"a_p_ones", ones}};
  j["matrix"] = matrix_json(sm);
  emit(g, j, "rows: " + std::to_string(sm.rows.size()));
  return ones ? 0 : exit_code(Errc::VerificationFailed);
}

int cmd_example(const Globals& g, const Args& a) {
  if (a.name == "tightness") return rational(g) ? example_tightness<Rational>(g) : example_tightness<double>(g);
  if (a.name == "chatbot") {
    require_float(g, "example chatbot");
    return example_chatbot(g);
  }
  if (a.name == "worked") return rational(g) ? example_worked<Rational>(g) : example_worked<double>(g);
  fail(Errc::InvalidArgument, "--name must be tightness, chatbot or worked");
}

template <class T>
int cmd_threshold(const Globals& g, const Args& a) {
  auto inst = load_instance<T>(g, a.file);
  validate(inst.mdp);
  T L = scalar_arg<T>(a.regret_bound, "--regret-bound");
  auto d = load_dist<T>(g, a.dist, inst.mdp.pairs());
  validate_distribution(d, inst.mdp.pairs(), "data distribution");
  auto th = safe_epsilon_threshold(inst.mdp, d, L);
  emit(g, Json{{"threshold", th.value}, {"threshold_squared", num_json(th.squared)}, {"L", num_json(L)},
               {"min_d", num_json(min_of(d))}});
  return 0;
}

template <class T>
int cmd_regret_bound(const Globals& g, const Args& a) {
  auto inst = load_instance<T>(g, a.file);
  validate(inst.mdp);
  const auto& mdp = inst.mdp;
  if (a.rhat.empty()) fail(Errc::InvalidArgument, "--rhat is required");
  Json rj = load_json(a.rhat);
  auto rhat = read_table<T>(rj.is_object() ? field(rj, "reward") : rj, mdp.n_states, mdp.n_actions,
                            ReadOptions{g.promote_floats}, "rhat");
  auto rb = regret_upper_bound(mdp, mdp.reward, rhat);
  T worst = worst_optimal_regret(mdp, mdp.reward, rhat, g.cap, g.tol);
  Json j{{"bound", rb.bound}, {"bound_squared", num_json(rb.bound_squared)}};
  j["projected_bound"] = rb.projected ? Json(*rb.projected) : Json(nullptr);
  j["worst_optimal_regret"] = num_json(worst);
  j["holds"] = to_double(worst) <= rb.bound + g.tol;
  emit(g, j);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reward-model safety analysis for tabular MDPs and contextual bandits"};
  app.require_subcommand(1);
  Globals g;
  Args a;
  app.add_option("--mode", g.mode, "Numeric mode")->check(CLI::IsMember({"float", "rational"}));
  app.add_option("--tol", g.tol, "Float comparison tolerance")->check(CLI::PositiveNumber);
  app.add_option("--seed", g.seed, "Seed for randomized trials");
  app.add_option("--cap", g.cap, "Enumeration cap");
  app.add_option("--out", g.out, "Write JSON here instead of stdout");
  app.add_flag("--oracle", g.oracle, "Cross-check safety verdicts with the LP oracle");
  app.add_flag("--promote-floats", g.promote_floats, "Accept float literals in rational mode");

  auto* validate_cmd = app.add_subcommand("validate", "Validate an MDP or bandit file");
  validate_cmd->add_option("file", a.file)->required();

  auto* matrix_cmd = app.add_subcommand("matrix", "Build the safety matrix");
  matrix_cmd->add_option("file", a.file)->required();
  matrix_cmd->add_option("--regret-bound,-L", a.regret_bound);
  matrix_cmd->add_option("--zeros", a.zeros, "occupancy or policy");

  auto* check_cmd = app.add_subcommand("check", "Decide whether a data distribution is safe");
  check_cmd->add_option("file", a.file)->required();
  check_cmd->add_option("--dist", a.dist)->required();
  check_cmd->add_option("--epsilon", a.epsilon);
  check_cmd->add_option("--regret-bound,-L", a.regret_bound);
  check_cmd->add_option("--matrix", a.matrix, "Reuse a matrix written by the matrix command");
  check_cmd->add_option("--zeros", a.zeros);
  check_cmd->add_flag("--oracle", g.oracle);

  auto* attack_cmd = app.add_subcommand("attack", "Construct an error-regret mismatch reward");
  attack_cmd->add_option("file", a.file)->required();
  attack_cmd->add_option("--kind,--attack", a.kind)->check(CLI::IsMember({"unreg", "reg", "rlhf", "rlhf-mae"}));
  attack_cmd->add_option("--epsilon", a.epsilon);
  attack_cmd->add_option("--regret-bound,-L", a.regret_bound);
  attack_cmd->add_option("--lambda", a.lambda);
  attack_cmd->add_option("--dist", a.dist);
  attack_cmd->add_option("--policy", a.policy, "Bad policy for the unregularized attack");
  attack_cmd->add_option("--ref", a.ref, "Reference policy (default uniform)");

  auto* verify_cmd = app.add_subcommand("verify-bounds", "Check the trajectory-level inequalities");
  verify_cmd->add_option("file", a.file)->required();
  verify_cmd->add_option("--horizon,-T", a.horizon);
  verify_cmd->add_option("--trials", a.trials);

  auto* example_cmd = app.add_subcommand("example", "Run a bundled example");
  example_cmd->add_option("--name", a.name)->check(CLI::IsMember({"tightness", "chatbot", "worked"}));

  auto* threshold_cmd = app.add_subcommand("threshold", "Epsilon below which a positive distribution is safe");
  threshold_cmd->add_option("file", a.file)->required();
  threshold_cmd->add_option("--dist", a.dist)->required();
  threshold_cmd->add_option("--regret-bound,-L", a.regret_bound);

  auto* bound_cmd = app.add_subcommand("regret-bound", "Regret bound from the L2 reward distance");
  bound_cmd->add_option("file", a.file)->required();
  bound_cmd->add_option("--rhat", a.rhat)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : exit_code(Errc::ParseError);
  }

  try {
    auto pick = [&](auto fd, auto fq) { return rational(g) ? fq() : fd(); };
    if (*validate_cmd)
      return pick([&] { return cmd_validate<double>(g, a); }, [&] { return cmd_validate<Rational>(g, a); });
    if (*matrix_cmd) return pick([&] { return cmd_matrix<double>(g, a); }, [&] { return cmd_matrix<Rational>(g, a); });
    if (*check_cmd) return pick([&] { return cmd_check<double>(g, a); }, [&] { return cmd_check<Rational>(g, a); });
    if (*attack_cmd) return cmd_attack(g, a);
    if (*verify_cmd) return cmd_verify_bounds(g, a);
    if (*example_cmd) return cmd_example(g, a);
    if (*threshold_cmd)
      return pick([&] { return cmd_threshold<double>(g, a); }, [&] { return cmd_threshold<Rational>(g, a); });
    if (*bound_cmd)
      return pick([&] { return cmd_regret_bound<double>(g, a); }, [&] { return cmd_regret_bound<Rational>(g, a); });
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
