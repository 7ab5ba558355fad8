#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "rsafe/adversary.hpp"
#include "rsafe/model.hpp"
#include "rsafe/safe_set.hpp"

namespace rsafe {

using Json = nlohmann::ordered_json;

struct ReadOptions {
  bool promote_floats = false;  // rational mode: accept binary floats via their exact expansion
};

// Numbers are JSON numbers or strings such as "1/3" or "0.25". In rational mode a JSON float is
// rejected unless promotion is enabled, since its decimal text is not what the double holds.
template <class T>
T read_number(const Json& j, const ReadOptions& opt, const std::string& what) {
  if (j.is_string()) {
    Rational q = parse_rational(j.get<std::string>());
    if constexpr (Num<T>::exact) return q;
    else return q.get_d();
  }
  if (j.is_number_integer()) {
    if constexpr (Num<T>::exact) return Rational(mpz_class(std::to_string(j.get<long long>())));
    else return static_cast<double>(j.get<long long>());
  }
  if (j.is_number_unsigned()) {
    if constexpr (Num<T>::exact) return Rational(mpz_class(std::to_string(j.get<unsigned long long>())));
    else return static_cast<double>(j.get<unsigned long long>());
  }
  if (j.is_number_float()) {
    if constexpr (Num<T>::exact) {
      if (!opt.promote_floats)
        fail(Errc::ParseError, what + ": float literal in rational mode; quote it or pass --promote-floats");
    }
    return from_double<T>(j.get<double>());
  }
  fail(Errc::ParseError, what + ": expected a number");
}

template <class T>
std::vector<T> read_vector(const Json& j, std::size_t size, const ReadOptions& opt, const std::string& what) {
  if (!j.is_array() || j.size() != size)
    fail(Errc::ParseError, what + ": expected an array of length " + std::to_string(size));
  std::vector<T> v;
  v.reserve(size);
  for (std::size_t i = 0; i < size; ++i) v.push_back(read_number<T>(j[i], opt, what + "[" + std::to_string(i) + "]"));
  return v;
}

// [s][a] nested array into a flat state-major table.
template <class T>
std::vector<T> read_table(const Json& j, std::size_t n, std::size_t m, const ReadOptions& opt,
                          const std::string& what) {
  if (!j.is_array() || j.size() != n) fail(Errc::ParseError, what + ": expected " + std::to_string(n) + " rows");
  std::vector<T> out;
  for (std::size_t s = 0; s < n; ++s) {
    auto row = read_vector<T>(j[s], m, opt, what + "[" + std::to_string(s) + "]");
    out.insert(out.end(), row.begin(), row.end());
  }
  return out;
}

inline std::vector<std::string> read_names(const Json& j, const std::string& what) {
  if (!j.is_array() || j.empty()) fail(Errc::ParseError, what + ": expected a non-empty array of names");
  std::vector<std::string> names;
  for (const auto& x : j) {
    if (!x.is_string()) fail(Errc::ParseError, what + ": names must be strings");
    names.push_back(x.get<std::string>());
  }
  return names;
}

inline const Json& field(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) fail(Errc::ParseError, std::string("missing key '") + key + "'");
  return j.at(key);
}

inline bool is_mdp_json(const Json& j) { return j.is_object() && j.contains("transitions"); }

template <class T>
TabularMdp<T> parse_mdp(const Json& j, const ReadOptions& opt = {}) {
  auto states = read_names(field(j, "states"), "states");
  auto actions = read_names(field(j, "actions"), "actions");
  const std::size_t n = states.size(), m = actions.size();
  TabularMdp<T> mdp(n, m);
  mdp.state_names = states;
  mdp.action_names = actions;
  mdp.gamma = read_number<T>(field(j, "gamma"), opt, "gamma");
  mdp.mu0 = read_vector<T>(field(j, "mu0"), n, opt, "mu0");
  mdp.reward = read_table<T>(field(j, "reward"), n, m, opt, "reward");
  const Json& tr = field(j, "transitions");
  if (!tr.is_array() || tr.size() != n) fail(Errc::ParseError, "transitions: expected " + std::to_string(n) + " rows");
  for (std::size_t s = 0; s < n; ++s) {
    if (!tr[s].is_array() || tr[s].size() != m)
      fail(Errc::ParseError, "transitions[" + std::to_string(s) + "]: expected " + std::to_string(m) + " actions");
    for (std::size_t a = 0; a < m; ++a) {
      auto row = read_vector<T>(tr[s][a], n, opt, "transitions[" + std::to_string(s) + "][" + std::to_string(a) + "]");
      for (std::size_t s2 = 0; s2 < n; ++s2) mdp.tau(s, a, s2) = row[s2];
    }
  }
  return mdp;
}

template <class T>
ContextualBandit<T> parse_bandit(const Json& j, const ReadOptions& opt = {}) {
  auto states = read_names(field(j, "states"), "states");
  auto actions = read_names(field(j, "actions"), "actions");
  ContextualBandit<T> b(states.size(), actions.size());
  b.state_names = states;
  b.action_names = actions;
  b.mu0 = read_vector<T>(field(j, "mu0"), b.n_states, opt, "mu0");
  b.reward = read_table<T>(field(j, "reward"), b.n_states, b.n_actions, opt, "reward");
  return b;
}

inline Json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::ParseError, "cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::ParseError, path + ": " + e.what());
  }
}

// Either an MDP, or a bandit embedded with discount 0.
template <class T>
struct Instance {
  bool is_bandit = false;
  ContextualBandit<T> bandit;
  TabularMdp<T> mdp;
};

template <class T>
Instance<T> parse_instance(const Json& j, const ReadOptions& opt = {}) {
  Instance<T> inst;
  if (is_mdp_json(j)) {
    inst.mdp = parse_mdp<T>(j, opt);
  } else {
    inst.is_bandit = true;
    inst.bandit = parse_bandit<T>(j, opt);
    inst.mdp = embed_bandit(inst.bandit);
  }
  return inst;
}

// A flat (s,a) array, or an object holding one under "distribution".
template <class T>
DataDistribution<T> parse_distribution(const Json& j, std::size_t pairs, const ReadOptions& opt = {}) {
  const Json& arr = j.is_object() ? field(j, "distribution") : j;
  return read_vector<T>(arr, pairs, opt, "distribution");
}

// [s][a] nested probabilities, or an object holding them under "policy".
template <class T>
Policy<T> parse_policy(const Json& j, std::size_t n, std::size_t m, const ReadOptions& opt = {}) {
  const Json& arr = j.is_object() ? field(j, "policy") : j;
  Policy<T> p(n, m);
  p.probs = read_table<T>(arr, n, m, opt, "policy");
  return p;
}

// Exact values serialize as "p/q" strings, floats as JSON numbers.
template <class T>
Json num_json(const T& x) {
  if constexpr (Num<T>::exact) return Num<T>::str(x);
  else return x;
}

template <class T>
Json vec_json(const std::vector<T>& v) {
  Json a = Json::array();
  for (const T& x : v) a.push_back(num_json(x));
  return a;
}

template <class T>
Json table_json(const std::vector<T>& flat, std::size_t n, std::size_t m) {
  Json a = Json::array();
  for (std::size_t s = 0; s < n; ++s) {
    Json row = Json::array();
    for (std::size_t k = 0; k < m; ++k) row.push_back(num_json(flat[s * m + k]));
    a.push_back(row);
  }
  return a;
}

template <class T>
Json mdp_json(const TabularMdp<T>& mdp) {
  Json j;
  j["states"] = mdp.state_names;
  j["actions"] = mdp.action_names;
  j["gamma"] = num_json(mdp.gamma);
  j["mu0"] = vec_json(mdp.mu0);
  Json tr = Json::array();
  for (std::size_t s = 0; s < mdp.n_states; ++s) {
    Json per = Json::array();
    for (std::size_t a = 0; a < mdp.n_actions; ++a) {
      Json row = Json::array();
      for (std::size_t s2 = 0; s2 < mdp.n_states; ++s2) row.push_back(num_json(mdp.tau(s, a, s2)));
      per.push_back(row);
    }
    tr.push_back(per);
  }
  j["transitions"] = tr;
  j["reward"] = table_json(mdp.reward, mdp.n_states, mdp.n_actions);
  return j;
}

template <class T>
Json bandit_json(const ContextualBandit<T>& b) {
  Json j;
  j["states"] = b.state_names;
  j["actions"] = b.action_names;
  j["mu0"] = vec_json(b.mu0);
  j["reward"] = table_json(b.reward, b.n_states, b.n_actions);
  return j;
}

template <class T>
Json matrix_json(const SafetyMatrix<T>& sm) {
  Json j;
  Json rows = Json::array();
  for (const auto& r : sm.rows) rows.push_back(vec_json(r));
  j["rows"] = rows;
  Json prov = Json::array();
  for (const auto& p : sm.provenance)
    prov.push_back(Json{{"vertex", p.vertex}, {"e_f", p.e_f}, {"e_g", p.e_g}});
  j["provenance"] = prov;
  Json verts = Json::array();
  for (const auto& v : sm.vertices)
    verts.push_back(Json{{"policy", v.policy.action_of}, {"regret", num_json(v.regret)}});
  j["vertices"] = verts;
  j["candidates"] = sm.candidates;
  return j;
}

template <class T>
std::vector<SAVector<T>> parse_matrix_rows(const Json& j, std::size_t pairs, const ReadOptions& opt = {}) {
  const Json& rows = field(j, "rows");
  if (!rows.is_array()) fail(Errc::ParseError, "rows: expected an array");
  std::vector<SAVector<T>> out;
  for (std::size_t i = 0; i < rows.size(); ++i)
    out.push_back(read_vector<T>(rows[i], pairs, opt, "rows[" + std::to_string(i) + "]"));
  return out;
}

template <class T>
Json verdict_json(const SafetyVerdict<T>& v, const std::vector<SAVector<T>>& rows) {
  Json j;
  j["safe"] = v.safe;
  j["margin"] = v.margin ? num_json(*v.margin) : Json(nullptr);
  j["witness_row"] = v.witness_row ? Json(*v.witness_row) : Json(nullptr);
  j["witness"] = v.witness_row ? vec_json(rows[*v.witness_row]) : Json(nullptr);
  return j;
}

template <class T>
Json report_json(const AttackReport<T>& r, std::size_t n, std::size_t m) {
  Json j;
  j["kind"] = r.kind;
  j["metric"] = r.metric;
  j["certified"] = r.certified;
  j["rhat"] = table_json(r.rhat, n, m);
  j["bad_policy"] = table_json(r.bad_policy.probs, n, m);
  j["error"] = num_json(r.error);
  j["error_budget"] = num_json(r.error_budget);
  j["mae"] = num_json(r.mae);
  j["eps_budget"] = num_json(r.eps_budget);
  j["regret"] = num_json(r.regret_achieved);
  j["L"] = num_json(r.L_target);
  j["error_ok"] = r.error_ok;
  j["optimal"] = r.optimal;
  j["regret_ok"] = r.regret_ok;
  Json certs = Json::array();
  for (const auto& c : r.certificates)
    certs.push_back(Json{{"name", c.name}, {"lhs", c.lhs}, {"rhs", c.rhs}, {"holds", c.holds}});
  j["certificates"] = certs;
  Json consts = Json::object();
  for (const auto& [k, v] : r.constants) consts[k] = v;
  j["constants"] = consts;
  return j;
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) fail(Errc::InvalidArgument, "cannot write '" + path + "'");
  out << text;
}

}  // namespace rsafe
