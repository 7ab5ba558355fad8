#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rsafe/lp.hpp"
#include "rsafe/mdp_core.hpp"

namespace rsafe {

template <class T>
struct Vertex {
  DeterministicPolicy policy;
  SAVector<T> occupancy;
  T regret{0};
};

template <class T>
struct HighRegretVertexSet {
  std::vector<Vertex<T>> vertices;
  T regret_bound_L{0};
  ValueRange<T> range;
};

namespace detail {

template <class T>
bool same_vector(const std::vector<T>& a, const std::vector<T>& b, double tol) {
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!eq(a[i], b[i], tol)) return false;
  return true;
}

template <class T>
void check_unit_interval(const T& x, const std::string& what) {
  if (x < T(0) || x > T(1)) fail(Errc::InvalidArgument, what + " must lie in [0,1]");
}

}  // namespace detail

// Deterministic policies with regret >= L, one per distinct occupancy vector, in enumeration order.
template <class T>
HighRegretVertexSet<T> high_regret_vertices(const TabularMdp<T>& mdp, const T& L, std::size_t cap = kDefaultCap,
                                            double tol = kTol) {
  detail::check_unit_interval(L, "L");
  HighRegretVertexSet<T> out;
  out.regret_bound_L = L;
  out.range = checked_value_range(mdp, mdp.reward);
  std::map<std::vector<T>, std::size_t> seen_exact;
  for (const auto& p : enumerate_deterministic_policies(mdp, cap)) {
    auto pi = p.template to_policy<T>(mdp.n_actions);
    auto eta = occupancy_measure(mdp, pi);
    T reg = (out.range.max_j - dot(eta, mdp.reward)) / out.range.range();
    if (!geq(reg, L, tol)) continue;
    bool dup = false;
    if constexpr (Num<T>::exact) {
      dup = !seen_exact.emplace(eta, out.vertices.size()).second;
    } else {
      for (const auto& v : out.vertices)
        if (detail::same_vector(v.occupancy, eta, tol)) { dup = true; break; }
    }
    if (!dup) out.vertices.push_back(Vertex<T>{p, std::move(eta), reg});
  }
  return out;
}

template <class T>
struct PhiBasis {
  Matrix<T> A;    // (n*m) x n state indicators
  Matrix<T> P;    // (n*m) x n transition rows
  Matrix<T> phi;  // A - gamma * P
};

template <class T>
PhiBasis<T> build_phi_basis(const TabularMdp<T>& mdp) {
  const std::size_t n = mdp.n_states, m = mdp.n_actions, N = n * m;
  PhiBasis<T> b{Matrix<T>(N, n), Matrix<T>(N, n), Matrix<T>(N, n)};
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t a = 0; a < m; ++a) {
      std::size_t i = mdp.idx(s, a);
      b.A(i, s) = T(1);
      for (std::size_t s2 = 0; s2 < n; ++s2) {
        b.P(i, s2) = mdp.tau(s, a, s2);
        b.phi(i, s2) = b.A(i, s2) - mdp.gamma * b.P(i, s2);
      }
    }
  if (rank(b.phi) != n) fail(Errc::RankDeficient, "A - gamma P does not have column rank n");
  return b;
}

// Which coordinates count as zeros of a vertex. Occupancy zeros are the default;
// Policy reads the printed loop literally (pi(a|s) = 0), which differs on states the
// policy never visits.
enum class ZeroSet { Occupancy, Policy };

template <class T>
std::vector<std::size_t> vertex_zeros(const TabularMdp<T>& mdp, const Vertex<T>& v, ZeroSet mode) {
  std::vector<std::size_t> z;
  for (std::size_t s = 0; s < mdp.n_states; ++s)
    for (std::size_t a = 0; a < mdp.n_actions; ++a) {
      std::size_t i = mdp.idx(s, a);
      bool zero = mode == ZeroSet::Occupancy ? is_zero(v.occupancy[i], 1e-12) : v.policy.action_of[s] != a;
      if (zero) z.push_back(i);
    }
  return z;
}

struct RowProvenance {
  std::size_t vertex = 0;           // index into the high-regret vertex list
  std::vector<std::size_t> e_f;     // cone generators (flat (s,a) indices)
  std::vector<std::size_t> e_g;     // zero coordinates, E_F plus n extra
};

template <class T>
struct SafetyMatrix {
  std::vector<SAVector<T>> rows;
  std::vector<RowProvenance> provenance;
  std::vector<Vertex<T>> vertices;
  std::size_t candidates = 0;
};

struct MatrixOptions {
  std::size_t policy_cap = kDefaultCap;
  std::size_t candidate_cap = kDefaultCap;
  ZeroSet zeros = ZeroSet::Occupancy;
  double tol = kTol;
};

inline double binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0.0;
  double r = 1.0;
  for (std::size_t i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  return std::round(r);
}

// Number of (E_F, E_G) candidates the direct enumeration would visit for one vertex.
inline double candidate_count(std::size_t pairs, std::size_t n_states, std::size_t zeros) {
  double c = 0.0;
  for (std::size_t k = 0; k <= zeros; ++k) c += binomial(zeros, k) * binomial(pairs - k, n_states);
  return c;
}

namespace detail {

inline bool next_combination(std::vector<std::size_t>& c, std::size_t n) {
  const std::size_t k = c.size();
  for (std::size_t i = k; i-- > 0;) {
    if (c[i] < n - k + i) {
      ++c[i];
      for (std::size_t j = i + 1; j < k; ++j) c[j] = c[j - 1] + 1;
      return true;
    }
  }
  return false;
}

}  // namespace detail

// Rows of M. For a candidate with E_G = E_F + S the system splits: rows S fix the shaping
// coefficients y from phi_S y = R_S, and rows E_F give the cone weights w = q_F with
// q = -R + phi y. So every valid candidate yields |q| with E_F zeroed, and the cone check is
// q_F >= 0. Enumerating S first and then subsets of the positive zeros of q visits exactly
// the candidates that pass both the rank and cone checks.
template <class T>
SafetyMatrix<T> build_safety_matrix(const TabularMdp<T>& mdp, const T& L, const MatrixOptions& opt = {}) {
  const std::size_t n = mdp.n_states, N = mdp.pairs();
  auto hr = high_regret_vertices(mdp, L, opt.policy_cap, opt.tol);
  auto basis = build_phi_basis(mdp);
  SafetyMatrix<T> out;
  out.vertices = hr.vertices;
  std::vector<std::vector<std::size_t>> zero_sets;
  double total = 0.0;
  for (const auto& v : hr.vertices) {
    zero_sets.push_back(vertex_zeros(mdp, v, opt.zeros));
    total += candidate_count(N, n, zero_sets.back().size());
  }
  if (total > static_cast<double>(opt.candidate_cap))
    fail(Errc::EnumerationCapExceeded, "candidate count " + std::to_string(static_cast<long long>(total)) +
                                           " exceeds cap " + std::to_string(opt.candidate_cap));
  out.candidates = static_cast<std::size_t>(total);

  // Per-subset shaping solutions do not depend on the vertex.
  struct Split {
    std::vector<std::size_t> s;
    std::vector<T> q;
  };
  std::vector<Split> splits;
  std::vector<std::size_t> comb(n);
  for (std::size_t i = 0; i < n; ++i) comb[i] = i;
  do {
    Matrix<T> sub(n, n);
    std::vector<T> rhs(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) sub(i, j) = basis.phi(comb[i], j);
      rhs[i] = mdp.reward[comb[i]];
    }
    auto y = solve(std::move(sub), std::move(rhs), opt.tol);
    if (!y) continue;
    auto q = mat_vec(basis.phi, *y);
    for (std::size_t i = 0; i < N; ++i) q[i] -= mdp.reward[i];
    for (std::size_t i : comb) q[i] = T(0);
    splits.push_back(Split{comb, std::move(q)});
  } while (detail::next_combination(comb, N));

  std::vector<SAVector<T>> rows;
  std::vector<RowProvenance> prov;
  auto known = [&](const SAVector<T>& row) {
    for (const auto& r : rows)
      if (detail::same_vector(r, row, opt.tol)) return true;
    return false;
  };
  std::map<SAVector<T>, bool> seen;
  for (std::size_t vi = 0; vi < hr.vertices.size(); ++vi) {
    const auto& z = zero_sets[vi];
    for (const auto& sp : splits) {
      std::vector<std::size_t> pos;
      for (std::size_t i : z)
        if (std::find(sp.s.begin(), sp.s.end(), i) == sp.s.end() && sign_of(sp.q[i], opt.tol) > 0) pos.push_back(i);
      if (pos.size() >= 8 * sizeof(std::size_t)) fail(Errc::EnumerationCapExceeded, "too many cone generators");
      const std::size_t masks = std::size_t{1} << pos.size();
      for (std::size_t mask = 0; mask < masks; ++mask) {
        SAVector<T> row(N);
        for (std::size_t i = 0; i < N; ++i) row[i] = abs_of(sp.q[i]);
        std::vector<std::size_t> f;
        for (std::size_t b = 0; b < pos.size(); ++b)
          if (mask >> b & 1U) {
            row[pos[b]] = T(0);
            f.push_back(pos[b]);
          }
        bool dup;
        if constexpr (Num<T>::exact) {
          dup = !seen.emplace(row, true).second;
        } else {
          dup = known(row);
        }
        if (dup) continue;
        std::vector<std::size_t> g = f;
        g.insert(g.end(), sp.s.begin(), sp.s.end());
        std::sort(g.begin(), g.end());
        rows.push_back(std::move(row));
        prov.push_back(RowProvenance{vi, std::move(f), std::move(g)});
      }
    }
  }
  std::vector<std::size_t> order(rows.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rows[a] < rows[b]; });
  for (std::size_t i : order) {
    out.rows.push_back(rows[i]);
    out.provenance.push_back(prov[i]);
  }
  return out;
}

template <class T>
struct SafetyVerdict {
  bool safe = true;
  std::optional<T> margin;  // absent when M has no rows
  std::optional<std::size_t> witness_row;
};

// safe iff every row satisfies row . d > eps * range_r strictly. The boundary is unsafe.
template <class T>
SafetyVerdict<T> check_safety(const std::vector<SAVector<T>>& rows, const DataDistribution<T>& d, const T& eps,
                              const T& range_r, double tol = 0.0) {
  if (!(eps > T(0))) fail(Errc::InvalidArgument, "epsilon must be > 0");
  if (!(range_r > T(0))) fail(Errc::InvalidArgument, "range R must be > 0");
  SafetyVerdict<T> v;
  T bar = eps * range_r;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    T gap = dot(rows[i], d) - bar;
    if (!v.margin || gap < *v.margin) {
      v.margin = gap;
      v.witness_row = i;
    }
  }
  v.safe = !v.margin || sign_of(*v.margin, tol) > 0;
  return v;
}

template <class T>
SafetyVerdict<T> check_safety(const SafetyMatrix<T>& m, const DataDistribution<T>& d, const T& eps, const T& range_r,
                              double tol = 0.0) {
  return check_safety(m.rows, d, eps, range_r, tol);
}

// min d.|B| over B in -R + span(A - gamma P) + cone{-e_z : z in zeros}.
// Variables: y+ (n), y- (n), w (|zeros|), p (nm), q (nm); B = p - q.
template <class T>
LpResult<T> lp_unsafe_distance_full(const TabularMdp<T>& mdp, const DataDistribution<T>& d,
                                    const std::vector<std::size_t>& zeros, double tol = kTol) {
  const std::size_t n = mdp.n_states, N = mdp.pairs(), k = zeros.size();
  auto basis = build_phi_basis(mdp);
  const std::size_t cols = 2 * n + k + 2 * N;
  Matrix<T> a(N, cols);
  std::vector<T> b(N), c(cols, T(0));
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      a(i, j) = -basis.phi(i, j);
      a(i, n + j) = basis.phi(i, j);
    }
    a(i, 2 * n + k + i) = T(1);
    a(i, 2 * n + k + N + i) = T(-1);
    b[i] = -mdp.reward[i];
    c[2 * n + k + i] = d[i];
    c[2 * n + k + N + i] = d[i];
  }
  for (std::size_t t = 0; t < k; ++t) a(zeros[t], 2 * n + t) = T(1);
  return simplex_min(a, b, c, tol);
}

template <class T>
T lp_unsafe_distance(const TabularMdp<T>& mdp, const DataDistribution<T>& d, const Vertex<T>& v,
                     ZeroSet mode = ZeroSet::Occupancy, double tol = kTol) {
  return lp_unsafe_distance_full(mdp, d, vertex_zeros(mdp, v, mode), tol).value;
}

template <class T>
T lp_unsafe_distance(const TabularMdp<T>& mdp, const DataDistribution<T>& d, const DeterministicPolicy& p,
                     ZeroSet mode = ZeroSet::Occupancy, double tol = kTol) {
  Vertex<T> v{p, occupancy_measure(mdp, p.template to_policy<T>(mdp.n_actions)), T(0)};
  return lp_unsafe_distance(mdp, d, v, mode, tol);
}

template <class T>
struct OracleVerdict {
  bool safe = true;
  std::optional<T> min_value;
  std::optional<std::size_t> argmin_vertex;
};

// Safe iff every high-regret vertex keeps its LP distance strictly above eps * range R.
template <class T>
OracleVerdict<T> lp_safety_verdict(const TabularMdp<T>& mdp, const std::vector<Vertex<T>>& vertices,
                                   const DataDistribution<T>& d, const T& eps, ZeroSet mode = ZeroSet::Occupancy,
                                   double tol = kTol) {
  OracleVerdict<T> out;
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    T v = lp_unsafe_distance(mdp, d, vertices[i], mode, tol);
    if (!out.min_value || v < *out.min_value) {
      out.min_value = v;
      out.argmin_vertex = i;
    }
  }
  T bar = eps * range_of(mdp.reward);
  out.safe = !out.min_value || *out.min_value > bar;
  return out;
}

template <class T>
struct EpsilonThreshold {
  double value = 0.0;  // (1-gamma)/sqrt(2) * range J / range R * min D * L
  T squared{0};        // exact square of value
};

template <class T>
EpsilonThreshold<T> safe_epsilon_threshold(const TabularMdp<T>& mdp, const DataDistribution<T>& d, const T& L) {
  if (!(L > T(0)) || L > T(1)) fail(Errc::InvalidArgument, "L must lie in (0,1]");
  for (const T& x : d)
    if (!(x > T(0))) fail(Errc::NonPositiveDistribution, "threshold needs a strictly positive distribution");
  auto vr = checked_value_range(mdp, mdp.reward);
  T base = (T(1) - mdp.gamma) * vr.range() / range_of(mdp.reward) * min_of(d) * L;
  EpsilonThreshold<T> out;
  out.squared = base * base / T(2);
  out.value = to_double(base) / std::sqrt(2.0);
  return out;
}

template <class T>
struct RegretBound {
  double bound = 0.0;
  T bound_squared{0};
  std::optional<double> projected;
  std::optional<T> projected_squared;
};

// sqrt(2) |r - rhat| / ((1-gamma) range J), plus the projected variant when r . rhat >= 0.
template <class T>
RegretBound<T> regret_upper_bound(const TabularMdp<T>& mdp, const RewardTable<T>& r, const RewardTable<T>& rhat) {
  auto vr = checked_value_range(mdp, r);
  T scale = (T(1) - mdp.gamma) * vr.range();
  T denom = scale * scale;
  T diff2(0), rr(0), rh(0), hh(0);
  for (std::size_t i = 0; i < r.size(); ++i) {
    T e = r[i] - rhat[i];
    diff2 += e * e;
    rr += r[i] * r[i];
    rh += r[i] * rhat[i];
    hh += rhat[i] * rhat[i];
  }
  RegretBound<T> out;
  out.bound_squared = T(2) * diff2 / denom;
  out.bound = std::sqrt(to_double(out.bound_squared));
  if (!(rh < T(0))) {
    T resid = hh == T(0) ? rr : T(rr - rh * rh / hh);
    if (resid < T(0)) resid = T(0);
    out.projected_squared = T(2) * resid / denom;
    out.projected = std::sqrt(to_double(*out.projected_squared));
  }
  return out;
}

// Largest regret under r among deterministic policies optimal for rhat. Optimal stochastic
// policies mix optimal vertices, so this is the worst case over all optimal policies.
template <class T>
T worst_optimal_regret(const TabularMdp<T>& mdp, const RewardTable<T>& r, const RewardTable<T>& rhat,
                       std::size_t cap = kDefaultCap, double tol = kTol) {
  auto vr = checked_value_range(mdp, r);
  auto hat = value_range(mdp, rhat);
  T worst(0);
  bool any = false;
  for (const auto& p : enumerate_deterministic_policies(mdp, cap)) {
    auto eta = occupancy_measure(mdp, p.template to_policy<T>(mdp.n_actions));
    if (!geq(dot(eta, rhat), hat.max_j, tol * std::max(1.0, to_double(abs_of(hat.max_j))))) continue;
    T reg = (vr.max_j - dot(eta, r)) / vr.range();
    if (!any || reg > worst) worst = reg;
    any = true;
  }
  return worst;
}

// Greedy search for pairwise disjoint-support policies with regret >= L, at least 1/eps of them.
template <class T>
std::optional<std::vector<DeterministicPolicy>> check_all_unsafe(const TabularMdp<T>& mdp, const T& eps, const T& L,
                                                                 std::size_t cap = kDefaultCap, double tol = kTol) {
  if (!(eps > T(0))) fail(Errc::InvalidArgument, "epsilon must be > 0");
  auto hr = high_regret_vertices(mdp, L, cap, tol);
  std::vector<std::pair<std::size_t, std::size_t>> order;  // (support size, vertex)
  std::vector<std::vector<bool>> supp;
  for (std::size_t i = 0; i < hr.vertices.size(); ++i) {
    supp.push_back(support_of(hr.vertices[i].occupancy));
    order.emplace_back(std::count(supp.back().begin(), supp.back().end(), true), i);
  }
  std::stable_sort(order.begin(), order.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<bool> used(mdp.pairs(), false);
  std::vector<DeterministicPolicy> family;
  for (const auto& [size, i] : order) {
    bool clash = false;
    for (std::size_t j = 0; j < used.size(); ++j)
      if (used[j] && supp[i][j]) { clash = true; break; }
    if (clash) continue;
    for (std::size_t j = 0; j < used.size(); ++j)
      if (supp[i][j]) used[j] = true;
    family.push_back(hr.vertices[i].policy);
    if (!(T(static_cast<long>(family.size())) * eps < T(1))) return family;
  }
  return std::nullopt;
}

}  // namespace rsafe
