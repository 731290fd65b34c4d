#pragma once

#include "symbolic.hpp"

namespace dynbif {

/// Parameter of the critically marked degree-d family
///   P(z) = z^d/d + sum_{j=2}^{d-1} (-1)^(d-j) sigma_(d-j)(c) z^j/j + a^d,
/// whose critical points are exactly {0, c_1, ..., c_(d-2)}.
template <typename S>
struct Param {
  int d = 2;
  std::vector<S> c;
  S a{};

  Param() {}
  Param(int deg, std::vector<S> cs, S aa) : d(deg), c(std::move(cs)), a(std::move(aa)) {
    if (d < 2) throw DomainError("degree must be at least 2");
    if (int(c.size()) != d - 2) throw DomainError("expected d-2 marked critical points");
  }
};

using ParamCD = Param<CD>;
using ParamEx = Param<GaussRat>;
using ParamQ = Param<Rat>;

template <typename S>
S spow(S base, int n) {
  S r = S(1);
  while (n > 0) {
    if (n & 1) r = r * base;
    n >>= 1;
    if (n) base = base * base;
  }
  return r;
}

/// sigma_0..sigma_n of the given values.
template <typename S>
std::vector<S> elementary_symmetric(const std::vector<S>& x) {
  std::vector<S> e(x.size() + 1, S(0));
  e[0] = S(1);
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t k = std::min(i + 1, x.size()); k >= 1; --k) e[k] = e[k] + x[i] * e[k - 1];
  return e;
}

/// Coefficients of P as a dense list indexed by the power of z.
template <typename S>
std::vector<S> family_coeffs(const Param<S>& p) {
  std::vector<S> coef(std::size_t(p.d) + 1, S(0));
  auto sig = elementary_symmetric(p.c);
  coef[std::size_t(p.d)] = S(1) / Rat(p.d);
  for (int j = 2; j <= p.d - 1; ++j) {
    S s = sig[std::size_t(p.d - j)] / Rat(j);
    coef[std::size_t(j)] = ((p.d - j) % 2 == 0) ? s : -s;
  }
  coef[0] = spow(p.a, p.d);
  return coef;
}

template <>
inline std::vector<CD> family_coeffs(const Param<CD>& p) {
  std::vector<CD> coef(std::size_t(p.d) + 1, CD(0));
  auto sig = elementary_symmetric(p.c);
  coef[std::size_t(p.d)] = CD(1.0 / p.d);
  for (int j = 2; j <= p.d - 1; ++j) {
    CD s = sig[std::size_t(p.d - j)] / double(j);
    coef[std::size_t(j)] = ((p.d - j) % 2 == 0) ? s : -s;
  }
  coef[0] = spow(p.a, p.d);
  return coef;
}

template <typename S>
S eval_poly(const std::vector<S>& coef, const S& z) {
  S r = S(0);
  for (std::size_t k = coef.size(); k-- > 0;) r = r * z + coef[k];
  return r;
}

template <typename S>
S eval_P(const Param<S>& p, const S& z) {
  return eval_poly(family_coeffs(p), z);
}

/// P'(z) in factored form z * prod (z - c_i).
template <typename S>
S eval_dP(const Param<S>& p, const S& z) {
  S r = z;
  for (auto& ci : p.c) r = r * (z - ci);
  return r;
}

template <typename S>
std::vector<S> critical_points(const Param<S>& p) {
  std::vector<S> out;
  out.push_back(S(0));
  for (auto& ci : p.c) out.push_back(ci);
  return out;
}

/// z, P(z), ..., P^n(z).
template <typename S>
std::vector<S> orbit(const Param<S>& p, const S& z, int n) {
  auto coef = family_coeffs(p);
  std::vector<S> o;
  o.reserve(std::size_t(n) + 1);
  o.push_back(z);
  for (int k = 0; k < n; ++k) o.push_back(eval_poly(coef, o.back()));
  return o;
}

inline std::vector<std::string> param_vars(int d) {
  std::vector<std::string> vs;
  for (int i = 1; i <= d - 2; ++i) vs.push_back("c" + std::to_string(i));
  vs.push_back("a");
  return vs;
}

/// P as an exact polynomial in (c_1..c_(d-2), a, z).
inline SymbolicPoly family_poly(int d) {
  if (d < 2) throw DomainError("degree must be at least 2");
  std::vector<SymbolicPoly> cs;
  for (int i = 1; i <= d - 2; ++i) cs.push_back(SymbolicPoly::variable("c" + std::to_string(i)));
  auto sig = elementary_symmetric(cs);
  SymbolicPoly z = SymbolicPoly::variable("z");
  SymbolicPoly av = SymbolicPoly::variable("a");
  SymbolicPoly out = Rat(1, d) * z.pow(d);
  for (int j = 2; j <= d - 1; ++j) {
    SymbolicPoly t = Rat(1, j) * sig[std::size_t(d - j)].mul(z.pow(j));
    out = ((d - j) % 2 == 0) ? out + t : out - t;
  }
  return out + av.pow(d);
}

/// One application of P to a symbolic point, variables (c_*, a).
inline SymbolicPoly family_step(int d, const SymbolicPoly& wpoly, std::size_t budget) {
  std::vector<SymbolicPoly> cs;
  for (int i = 1; i <= d - 2; ++i) cs.push_back(SymbolicPoly::variable("c" + std::to_string(i)));
  auto sig = elementary_symmetric(cs);
  SymbolicPoly av = SymbolicPoly::variable("a");
  SymbolicPoly out = Rat(1, d) * wpoly.pow(d, budget);
  for (int j = 2; j <= d - 1; ++j) {
    SymbolicPoly t = Rat(1, j) * sig[std::size_t(d - j)].mul(wpoly.pow(j, budget), budget);
    out = ((d - j) % 2 == 0) ? out + t : out - t;
  }
  return out + av.pow(d);
}

/// P^n(c_i) as an exact polynomial in (c_*, a); i = 0 names the origin.
inline SymbolicPoly symbolic_iterate(int d, int i, int n, std::size_t budget = kTermBudget) {
  if (i < 0 || i > d - 2) throw DomainError("critical point index out of range");
  SymbolicPoly w;
  if (i > 0) w = SymbolicPoly::variable("c" + std::to_string(i));
  for (int k = 0; k < n; ++k) w = family_step(d, w, budget);
  return w;
}

/// Matrix of partial derivatives of the equations in the given variables.
inline std::vector<std::vector<SymbolicPoly>> jacobian_of_system(
    const std::vector<SymbolicPoly>& eqs, const std::vector<std::string>& vars) {
  std::vector<std::vector<SymbolicPoly>> J;
  for (auto& e : eqs) {
    std::vector<SymbolicPoly> row;
    for (auto& v : vars) row.push_back(e.derivative(v));
    J.push_back(std::move(row));
  }
  return J;
}

}  // namespace dynbif
