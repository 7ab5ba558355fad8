#pragma once

#include <gmpxx.h>

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <string>
#include <type_traits>

#include "rsafe/error.hpp"

namespace rsafe {

using Rational = mpq_class;

// Default absolute tolerance for float-mode comparisons. Exact types ignore it.
inline constexpr double kTol = 1e-9;

template <class T>
struct Num;

template <>
struct Num<double> {
  static constexpr bool exact = false;
  static double from_double(double x) { return x; }
  static double from_ratio(std::int64_t p, std::int64_t q) {
    return static_cast<double>(p) / static_cast<double>(q);
  }
  static double to_double(double x) { return x; }
  static double abs(double x) { return std::fabs(x); }
  static std::string str(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
  }
};

template <>
struct Num<Rational> {
  static constexpr bool exact = true;
  // Exact binary expansion of the double.
  static Rational from_double(double x) { return Rational(x); }
  static Rational from_ratio(std::int64_t p, std::int64_t q) {
    Rational r(static_cast<long>(p), static_cast<long>(q));
    r.canonicalize();
    return r;
  }
  static double to_double(const Rational& x) { return x.get_d(); }
  static Rational abs(const Rational& x) { return Rational(::abs(x)); }
  static std::string str(const Rational& x) { return x.get_str(); }
};

template <class T>
inline T from_double(double x) { return Num<T>::from_double(x); }
template <class T>
inline T ratio(std::int64_t p, std::int64_t q) { return Num<T>::from_ratio(p, q); }
template <class T>
inline double to_double(const T& x) { return Num<T>::to_double(x); }
template <class T>
inline T abs_of(const T& x) { return Num<T>::abs(x); }

// Sign with a dead zone of width tol in float mode; exact in rational mode.
template <class T>
inline int sign_of(const T& x, double tol = kTol) {
  if constexpr (Num<T>::exact) {
    return sgn(x);
  } else {
    if (x > tol) return 1;
    if (x < -tol) return -1;
    return 0;
  }
}

template <class T>
inline bool is_zero(const T& x, double tol = kTol) { return sign_of(x, tol) == 0; }

// a >= b up to tol.
template <class T>
inline bool geq(const T& a, const T& b, double tol = kTol) {
  T d = a - b;
  return sign_of(d, tol) >= 0;
}

template <class T>
inline bool eq(const T& a, const T& b, double tol = kTol) {
  T d = a - b;
  return sign_of(d, tol) == 0;
}

// Parses "p/q", integers and decimals with optional exponent into an exact rational.
inline Rational parse_rational(const std::string& text) {
  std::string s;
  for (char c : text)
    if (!std::isspace(static_cast<unsigned char>(c))) s.push_back(c);
  if (s.empty()) fail(Errc::ParseError, "empty number");
  auto slash = s.find('/');
  if (slash != std::string::npos) {
    Rational num = parse_rational(s.substr(0, slash));
    Rational den = parse_rational(s.substr(slash + 1));
    if (den == 0) fail(Errc::ParseError, "zero denominator in '" + text + "'");
    Rational q = num / den;
    return q;
  }
  std::size_t i = 0;
  bool neg = false;
  if (s[i] == '+' || s[i] == '-') neg = (s[i++] == '-');
  std::string digits;
  long scale = 0;
  bool seen_dot = false, seen_digit = false;
  for (; i < s.size(); ++i) {
    char c = s[i];
    if (std::isdigit(static_cast<unsigned char>(c))) {
      digits.push_back(c);
      seen_digit = true;
      if (seen_dot) ++scale;
    } else if (c == '.' && !seen_dot) {
      seen_dot = true;
    } else {
      break;
    }
  }
  if (!seen_digit) fail(Errc::ParseError, "not a number: '" + text + "'");
  long exp10 = 0;
  if (i < s.size()) {
    if (s[i] != 'e' && s[i] != 'E') fail(Errc::ParseError, "not a number: '" + text + "'");
    ++i;
    std::size_t used = 0;
    try {
      exp10 = std::stol(s.substr(i), &used);
    } catch (...) {
      fail(Errc::ParseError, "bad exponent in '" + text + "'");
    }
    if (i + used != s.size()) fail(Errc::ParseError, "trailing characters in '" + text + "'");
  }
  mpz_class mant(digits, 10);
  long e = exp10 - scale;
  mpz_class p10;
  mpz_ui_pow_ui(p10.get_mpz_t(), 10, static_cast<unsigned long>(e < 0 ? -e : e));
  Rational q = e >= 0 ? Rational(mant * p10) : Rational(mant, p10);
  q.canonicalize();
  if (neg) q = -q;
  return q;
}

}  // namespace rsafe
