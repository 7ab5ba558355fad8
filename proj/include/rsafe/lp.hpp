#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "rsafe/error.hpp"
#include "rsafe/linalg.hpp"

namespace rsafe {

template <class T>
struct LpResult {
  T value{0};
  std::vector<T> x;
  std::size_t pivots = 0;
};

namespace detail {

// Dense tableau; the last column is the right-hand side, the last row the reduced costs.
template <class T>
struct Tableau {
  std::size_t rows, cols;  // constraint rows, variable columns
  Matrix<T> t;
  std::vector<std::size_t> basis;
  double tol;
  std::size_t pivots = 0;

  Tableau(std::size_t r, std::size_t c, double tol_) : rows(r), cols(c), t(r + 1, c + 1), basis(r), tol(tol_) {}

  T& rhs(std::size_t i) { return t(i, cols); }
  T& cost(std::size_t j) { return t(rows, j); }

  bool negative(const T& x) const { return sign_of(x, tol) < 0; }
  bool positive(const T& x) const { return sign_of(x, tol) > 0; }

  void pivot(std::size_t r, std::size_t c) {
    ++pivots;
    T p = t(r, c);
    for (std::size_t j = 0; j <= cols; ++j) t(r, j) /= p;
    for (std::size_t i = 0; i <= rows; ++i) {
      if (i == r || t(i, c) == T(0)) continue;
      T f = t(i, c);
      for (std::size_t j = 0; j <= cols; ++j) t(i, j) -= f * t(r, j);
    }
    basis[r] = c;
  }

  // Reduced costs for cost vector c given the current basis.
  void price(const std::vector<T>& c) {
    for (std::size_t j = 0; j <= cols; ++j) t(rows, j) = j < cols ? c[j] : T(0);
    for (std::size_t i = 0; i < rows; ++i) {
      T cb = c[basis[i]];
      if (cb == T(0)) continue;
      for (std::size_t j = 0; j <= cols; ++j) t(rows, j) -= cb * t(i, j);
    }
  }

  // Bland's rule over columns [0, limit). Returns false when unbounded.
  bool optimize(std::size_t limit) {
    for (;;) {
      std::size_t enter = limit;
      for (std::size_t j = 0; j < limit; ++j)
        if (negative(cost(j))) { enter = j; break; }
      if (enter == limit) return true;
      std::size_t leave = rows;
      T best(0);
      for (std::size_t i = 0; i < rows; ++i) {
        if (!positive(t(i, enter))) continue;
        T ratio = rhs(i) / t(i, enter);
        bool take = leave == rows;
        if (!take) {
          int cmp = sign_of(T(ratio - best), tol);
          take = cmp < 0 || (cmp == 0 && basis[i] < basis[leave]);
        }
        if (take) {
          best = ratio;
          leave = i;
        }
      }
      if (leave == rows) return false;
      pivot(leave, enter);
    }
  }
};

}  // namespace detail

// min c.x subject to A x = b, x >= 0. Two-phase tableau simplex with Bland's rule.
// Rows whose sign-normalized form already contains a +1 unit column start from it,
// so artificials are added only where needed.
template <class T>
LpResult<T> simplex_min(const Matrix<T>& a, std::vector<T> b, const std::vector<T>& c, double tol = 1e-9) {
  const std::size_t m = a.rows, n = a.cols;
  Matrix<T> A = a;
  for (std::size_t i = 0; i < m; ++i)
    if (b[i] < T(0)) {
      b[i] = -b[i];
      for (std::size_t j = 0; j < n; ++j) A(i, j) = -A(i, j);
    }
  std::vector<std::size_t> start(m, n + m);
  std::vector<bool> used(n, false);
  for (std::size_t j = 0; j < n; ++j) {
    std::size_t hit = m;
    bool unit = true;
    for (std::size_t i = 0; i < m && unit; ++i) {
      if (A(i, j) == T(0)) continue;
      if (A(i, j) == T(1) && hit == m) hit = i;
      else unit = false;
    }
    if (unit && hit < m && start[hit] == n + m && !used[j]) {
      start[hit] = j;
      used[j] = true;
    }
  }
  std::vector<std::size_t> art_rows;
  for (std::size_t i = 0; i < m; ++i)
    if (start[i] == n + m) art_rows.push_back(i);
  const std::size_t k = art_rows.size();
  detail::Tableau<T> tab(m, n + k, tol);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) tab.t(i, j) = A(i, j);
    tab.rhs(i) = b[i];
    tab.basis[i] = start[i];
  }
  for (std::size_t r = 0; r < k; ++r) {
    tab.t(art_rows[r], n + r) = T(1);
    tab.basis[art_rows[r]] = n + r;
  }
  if (k > 0) {
    std::vector<T> c1(n + k, T(0));
    for (std::size_t r = 0; r < k; ++r) c1[n + r] = T(1);
    tab.price(c1);
    tab.optimize(n + k);
    if (tab.positive(-tab.rhs(m))) fail(Errc::LpInfeasible, "phase one ended with positive infeasibility");
    // Drive remaining artificials out; rows with no usable pivot are redundant and left in place.
    for (std::size_t i = 0; i < m; ++i) {
      if (tab.basis[i] < n) continue;
      for (std::size_t j = 0; j < n; ++j)
        if (!is_zero(tab.t(i, j), tol)) {
          tab.pivot(i, j);
          break;
        }
    }
    for (std::size_t i = 0; i < m; ++i)
      if (tab.basis[i] >= n) tab.rhs(i) = T(0);
  }
  std::vector<T> c2(n + k, T(0));
  for (std::size_t j = 0; j < n; ++j) c2[j] = c[j];
  // Artificials stuck in redundant rows get a zero column and are never re-entered.
  tab.price(c2);
  if (!tab.optimize(n)) fail(Errc::LpUnbounded, "objective is unbounded below");
  LpResult<T> res;
  res.x.assign(n, T(0));
  for (std::size_t i = 0; i < m; ++i)
    if (tab.basis[i] < n) res.x[tab.basis[i]] = tab.rhs(i);
  res.value = dot(c, res.x);
  res.pivots = tab.pivots;
  return res;
}

}  // namespace rsafe
