#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include "rsafe/scalar.hpp"

namespace rsafe {

template <class T>
struct Matrix {
  std::size_t rows = 0, cols = 0;
  std::vector<T> a;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, T(0)) {}

  T& operator()(std::size_t i, std::size_t j) { return a[i * cols + j]; }
  const T& operator()(std::size_t i, std::size_t j) const { return a[i * cols + j]; }
};

template <class T>
std::vector<T> mat_vec(const Matrix<T>& m, const std::vector<T>& x) {
  std::vector<T> y(m.rows, T(0));
  for (std::size_t i = 0; i < m.rows; ++i)
    for (std::size_t j = 0; j < m.cols; ++j) y[i] += m(i, j) * x[j];
  return y;
}

template <class T>
T dot(const std::vector<T>& x, const std::vector<T>& y) {
  T s(0);
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

namespace detail {

template <class T>
double max_abs(const Matrix<T>& m) {
  double s = 0;
  for (const T& v : m.a) s = std::max(s, to_double(abs_of(v)));
  return s;
}

// Row-echelon reduction in place; returns pivot columns. Float mode uses
// partial pivoting with a threshold relative to the largest entry.
template <class T>
std::vector<std::size_t> eliminate(Matrix<T>& m, std::vector<T>* rhs, double rel_tol) {
  std::vector<std::size_t> pivots;
  const double thresh = rel_tol * std::max(1.0, max_abs(m));
  std::size_t r = 0;
  for (std::size_t c = 0; c < m.cols && r < m.rows; ++c) {
    std::size_t best = m.rows;
    if constexpr (Num<T>::exact) {
      for (std::size_t i = r; i < m.rows; ++i)
        if (m(i, c) != 0) { best = i; break; }
    } else {
      double bv = thresh;
      for (std::size_t i = r; i < m.rows; ++i) {
        double v = std::fabs(m(i, c));
        if (v > bv) { bv = v; best = i; }
      }
    }
    if (best == m.rows) continue;
    if (best != r) {
      for (std::size_t j = 0; j < m.cols; ++j) std::swap(m(r, j), m(best, j));
      if (rhs) std::swap((*rhs)[r], (*rhs)[best]);
    }
    for (std::size_t i = r + 1; i < m.rows; ++i) {
      if (m(i, c) == T(0)) continue;
      T f = m(i, c) / m(r, c);
      for (std::size_t j = c; j < m.cols; ++j) m(i, j) -= f * m(r, j);
      if (rhs) (*rhs)[i] -= f * (*rhs)[r];
    }
    pivots.push_back(c);
    ++r;
  }
  return pivots;
}

}  // namespace detail

template <class T>
std::size_t rank(Matrix<T> m, double rel_tol = 1e-9) {
  return detail::eliminate<T>(m, nullptr, rel_tol).size();
}

// Solves a square system; empty when singular (exactly, or below the relative threshold).
template <class T>
std::optional<std::vector<T>> solve(Matrix<T> m, std::vector<T> b, double rel_tol = 1e-9) {
  const std::size_t n = m.rows;
  auto piv = detail::eliminate<T>(m, &b, rel_tol);
  if (piv.size() != n) return std::nullopt;
  std::vector<T> x(n, T(0));
  for (std::size_t k = n; k-- > 0;) {
    T s = b[k];
    for (std::size_t j = k + 1; j < n; ++j) s -= m(k, j) * x[j];
    x[k] = s / m(k, k);
  }
  return x;
}

}  // namespace rsafe
