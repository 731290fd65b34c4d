#pragma once

#include "dynbif/pcf.hpp"

namespace dynbif {

inline std::vector<int> divisors(int n) {
  std::vector<int> out;
  for (int l = 1; l <= n; ++l)
    if (n % l == 0) out.push_back(l);
  return out;
}

/// Number of points of exact period n, counted with the dynatomic convention:
/// nu_d(n) = sum over l | n of mu(n/l) d^l.
inline long nu_d(int d, int n) {
  long s = 0;
  for (int l : divisors(n)) {
    long pw = 1;
    for (int k = 0; k < l; ++k) pw *= d;
    s += mobius(n / l) * pw;
  }
  return s;
}

// dense polynomial helpers, coefficients indexed by the power

inline std::vector<CD> cpoly_mul(const std::vector<CD>& x, const std::vector<CD>& y) {
  if (x.empty() || y.empty()) return {};
  std::vector<CD> out(x.size() + y.size() - 1, CD(0));
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = 0; j < y.size(); ++j) out[i + j] += x[i] * y[j];
  return out;
}

inline std::vector<CD> cpoly_compose(const std::vector<CD>& outer, const std::vector<CD>& inner) {
  std::vector<CD> acc{outer.empty() ? CD(0) : outer.back()};
  for (std::size_t k = outer.size(); k-- > 1;) {
    acc = cpoly_mul(acc, inner);
    if (acc.empty()) acc.push_back(CD(0));
    acc[0] += outer[k - 1];
  }
  return acc;
}

/// Quotient of num by den and the largest remainder magnitude left behind.
inline std::pair<std::vector<CD>, double> cpoly_divrem(std::vector<CD> num,
                                                       const std::vector<CD>& den) {
  std::vector<CD> d = den;
  while (d.size() > 1 && std::abs(d.back()) == 0.0) d.pop_back();
  if (d.empty() || std::abs(d.back()) == 0.0) throw DomainError("division by zero polynomial");
  if (d.size() == 1) {
    for (auto& x : num) x /= d[0];
    return {num, 0.0};
  }
  if (num.size() < d.size()) return {{}, 0.0};
  std::vector<CD> q(num.size() - d.size() + 1, CD(0));
  for (std::size_t k = q.size(); k-- > 0;) {
    CD f = num[k + d.size() - 1] / d.back();
    q[k] = f;
    for (std::size_t j = 0; j < d.size(); ++j) num[k + j] -= f * d[j];
  }
  double rem = 0.0;
  for (std::size_t j = 0; j + 1 < d.size(); ++j) rem = std::max(rem, std::abs(num[j]));
  return {q, rem};
}

inline RatPoly rpoly_trim(RatPoly p) {
  while (!p.empty() && p.back() == Rat(0)) p.pop_back();
  return p;
}

inline RatPoly rpoly_mul(const RatPoly& x, const RatPoly& y) {
  if (x.empty() || y.empty()) return {};
  RatPoly out(x.size() + y.size() - 1, Rat(0));
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = 0; j < y.size(); ++j) out[i + j] += x[i] * y[j];
  return rpoly_trim(out);
}

inline RatPoly rpoly_compose(const RatPoly& outer, const RatPoly& inner) {
  RatPoly acc{outer.empty() ? Rat(0) : outer.back()};
  for (std::size_t k = outer.size(); k-- > 1;) {
    acc = rpoly_mul(acc, inner);
    if (acc.empty()) acc.push_back(Rat(0));
    acc[0] += outer[k - 1];
  }
  return rpoly_trim(acc);
}

inline std::pair<RatPoly, RatPoly> rpoly_divrem(RatPoly num, const RatPoly& den) {
  RatPoly d = rpoly_trim(den);
  if (d.empty()) throw DomainError("division by zero polynomial");
  num = rpoly_trim(num);
  if (num.size() < d.size()) return {{}, num};
  RatPoly q(num.size() - d.size() + 1, Rat(0));
  for (std::size_t k = q.size(); k-- > 0;) {
    Rat f = num[k + d.size() - 1] / d.back();
    q[k] = f;
    for (std::size_t j = 0; j < d.size(); ++j) num[k + j] -= f * d[j];
  }
  num.resize(d.size() - 1);
  return {rpoly_trim(q), rpoly_trim(num)};
}

/// Long division inside the term ring, eliminating the named variable. The
/// divisor's leading coefficient in that variable must be a rational constant,
/// which holds for every iterate P^l(z) - z in z.
inline std::pair<SymbolicPoly, SymbolicPoly> sym_divmod_in(const SymbolicPoly& num,
                                                           const SymbolicPoly& den,
                                                           const std::string& var,
                                                           std::size_t budget = kTermBudget) {
  int dd = den.degree_in(var);
  Rat lc = constant_term(den.coeff_of(var, dd));
  if (lc == Rat(0)) throw DomainError("divisor leading coefficient vanished");
  SymbolicPoly q, r = num;
  SymbolicPoly v = SymbolicPoly::variable(var);
  int dn = r.degree_in(var);
  while (!r.is_zero() && dn >= dd) {
    SymbolicPoly t = (Rat(1) / lc) * r.coeff_of(var, dn).mul(v.pow(dn - dd, budget), budget);
    q = q + t;
    r = r - t.mul(den, budget);
    int nd = r.degree_in(var);
    if (!r.is_zero() && nd >= dn) throw NumericalError("division failed to reduce the degree");
    dn = nd;
  }
  return {q, r};
}

/// The exact-family coefficients of P as rationals, for rational parameters
/// (c_1..c_(d-2), a^d); the marked family only sees a through a^d.
inline RatPoly family_coeffs_rat(int d, const std::vector<Rat>& c, const Rat& ad) {
  RatPoly coef(std::size_t(d) + 1, Rat(0));
  coef[0] = ad;
  auto sig = elementary_symmetric(c);
  for (int j = 2; j <= d - 1; ++j) {
    Rat t = sig[std::size_t(d - j)] / Rat(j);
    coef[std::size_t(j)] = ((d - j) % 2 == 0) ? t : -t;
  }
  coef[std::size_t(d)] = Rat(1) / Rat(d);
  return coef;
}

struct DynatomicData {
  int d = 0, n = 0;
  long nu = 0;
  SymbolicPoly phi_n;
  SymbolicPoly phi_star;
  std::string mode;
  bool verified = false;
};

/// Exact dynatomic factor as the Moebius quotient of the iterate differences.
/// Small cases stay fully symbolic; when the dense iterate blows the term
/// budget the exact-division certificate is checked on univariate
/// specializations at random rational parameters instead.
inline DynatomicData dynatomic(int d, int n, std::size_t budget = kTermBudget) {
  if (d < 2) throw DomainError("degree must be at least 2");
  if (n < 1) throw DomainError("period must be positive");
  DynatomicData out;
  out.d = d;
  out.n = n;
  out.nu = nu_d(d, n);
  long dn = 1;
  for (int k = 0; k < n; ++k) {
    dn *= d;
    if (dn > 4096) throw BudgetError("dynatomic degree budget exceeded");
  }
  auto dv = divisors(n);
  try {
    SymbolicPoly z = SymbolicPoly::variable("z");
    std::map<int, SymbolicPoly> phi;
    SymbolicPoly w = z;
    for (int k = 1; k <= n; ++k) {
      w = family_step(d, w, budget);
      if (n % k == 0) phi[k] = w - z;
    }
    out.phi_n = phi[n];
    SymbolicPoly num(Rat(1)), den(Rat(1));
    for (int l : dv) {
      if (mobius(n / l) == 1)
        num = num.mul(phi[l], budget);
      else if (mobius(n / l) == -1)
        den = den.mul(phi[l], budget);
    }
    auto [q, r] = sym_divmod_in(num, den, "z", budget);
    out.phi_star = q;
    out.mode = "symbolic";
    out.verified = r.is_zero() && q.degree_in("z") == out.nu;
    return out;
  } catch (const BudgetError&) {
    // fall through to the specialization certificate
  }
  out.mode = "specialized";
  Rng rng(2400 + 10 * n + d);
  bool all = true;
  for (int trial = 0; trial < 3; ++trial) {
    std::vector<Rat> c;
    for (int i = 0; i < d - 2; ++i) c.push_back(rng.rational(5, 4));
    Rat ad = rng.rational(5, 4);
    auto coef = family_coeffs_rat(d, c, ad);
    std::map<int, RatPoly> phi;
    RatPoly w{Rat(0), Rat(1)};
    for (int k = 1; k <= n; ++k) {
      w = rpoly_compose(coef, w);
      if (n % k == 0) {
        RatPoly f = w;
        if (f.size() < 2) f.resize(2, Rat(0));
        f[1] -= Rat(1);
        phi[k] = rpoly_trim(f);
      }
    }
    RatPoly num{Rat(1)}, den{Rat(1)};
    for (int l : dv) {
      if (mobius(n / l) == 1)
        num = rpoly_mul(num, phi[l]);
      else if (mobius(n / l) == -1)
        den = rpoly_mul(den, phi[l]);
    }
    auto [q, r] = rpoly_divrem(num, den);
    if (!r.empty() || poly_deg(q) != out.nu) all = false;
  }
  out.verified = all;
  return out;
}

/// Coefficients in z of the dynatomic factor at a fixed numeric parameter.
inline std::vector<CD> dynatomic_at(int d, int n, const ParamCD& p) {
  auto coef = family_coeffs(p);
  std::map<int, std::vector<CD>> phi;
  std::vector<CD> w{CD(0), CD(1)};
  for (int k = 1; k <= n; ++k) {
    w = cpoly_compose(coef, w);
    if (n % k == 0) {
      auto f = w;
      if (f.size() < 2) f.resize(2, CD(0));
      f[1] -= CD(1);
      phi[k] = f;
    }
  }
  std::vector<CD> num{CD(1)}, den{CD(1)};
  for (int l : divisors(n)) {
    if (mobius(n / l) == 1)
      num = cpoly_mul(num, phi[l]);
    else if (mobius(n / l) == -1)
      den = cpoly_mul(den, phi[l]);
  }
  auto [q, rem] = cpoly_divrem(num, den);
  double scale = 0.0;
  for (auto& x : num) scale = std::max(scale, std::abs(x));
  if (rem > 1e-7 * (1.0 + scale))
    throw NumericalError("dynatomic division left a large remainder");
  return q;
}

/// Multiplier of the length-n orbit of z under the parameter p.
inline CD orbit_multiplier(const ParamCD& p, CD z, int n) {
  auto coef = family_coeffs(p);
  CD mult(1);
  for (int k = 0; k < n; ++k) {
    mult *= eval_dP(p, z);
    z = eval_poly(coef, z);
  }
  return mult;
}

struct MultiplierPoly {
  int d = 0, n = 0;
  std::vector<CD> r_coeffs;
  std::vector<CD> multipliers;
  std::vector<RootCluster> p_zeros;
  bool nth_power = true;
};

/// The multiplier polynomial at a fixed parameter: the monic polynomial in w
/// whose roots are the multipliers at the exact period-n points. Verifies the
/// n-th power structure and reports the per-cycle zeros with count divided by n.
inline MultiplierPoly multiplier_poly(int d, int n, const ParamCD& p, double eps = 1e-5) {
  MultiplierPoly out;
  out.d = d;
  out.n = n;
  auto star = dynatomic_at(d, n, p);
  auto zs = poly_roots(star);
  double scale = 1.0;
  for (auto z : zs) {
    CD mult = orbit_multiplier(p, z, n);
    out.multipliers.push_back(mult);
    scale = std::max(scale, std::abs(mult));
  }
  out.r_coeffs = {CD(1)};
  for (auto mult : out.multipliers) out.r_coeffs = cpoly_mul(out.r_coeffs, {-mult, CD(1)});
  auto cl = cluster_roots(out.multipliers, eps * scale);
  for (auto& c : cl) {
    if (c.multiplicity % n != 0) out.nth_power = false;
    out.p_zeros.push_back({c.center, std::max(1, c.multiplicity / n), c.radius});
  }
  return out;
}

inline RatPoly charpoly_rat(const std::vector<std::vector<Rat>>& M) {
  std::size_t nn = M.size();
  std::vector<std::vector<Rat>> A(nn, std::vector<Rat>(nn, Rat(0)));
  for (std::size_t i = 0; i < nn; ++i) A[i][i] = Rat(1);
  RatPoly cs(nn + 1, Rat(0));
  cs[nn] = Rat(1);
  for (std::size_t k = 1; k <= nn; ++k) {
    std::vector<std::vector<Rat>> MA(nn, std::vector<Rat>(nn, Rat(0)));
    for (std::size_t i = 0; i < nn; ++i)
      for (std::size_t l = 0; l < nn; ++l) {
        if (A[l].empty()) continue;
        for (std::size_t j = 0; j < nn; ++j) MA[i][j] += M[i][l] * A[l][j];
      }
    Rat tr(0);
    for (std::size_t i = 0; i < nn; ++i) tr += MA[i][i];
    Rat ck = -tr / Rat(long(k));
    cs[nn - k] = ck;
    A = MA;
    for (std::size_t i = 0; i < nn; ++i) A[i][i] += ck;
  }
  return cs;
}

/// Exact multiplier polynomial of the quadratic lane as a polynomial in
/// (a, w): the characteristic polynomial of multiplication by (P^n)' on the
/// dynatomic quotient ring, interpolated through rational values of a^2 until
/// the coefficient table stabilizes, then reverified at a fresh sample.
inline SymbolicPoly multiplier_symbolic(int n, int max_samples = 160) {
  if (n < 1 || n > 4) throw DomainError("symbolic multiplier limited to periods 1..4");
  long nu = nu_d(2, n);
  auto sample = [&](long bj) {
    RatPoly coef{Rat(bj), Rat(0), Rat(1, 2)};
    std::map<int, RatPoly> phi;
    RatPoly w{Rat(0), Rat(1)};
    RatPoly lam{Rat(1)};
    for (int k = 1; k <= n; ++k) {
      // (P^n)'(z) is the product of the first n orbit polynomials since P' = z
      lam = rpoly_mul(lam, w);
      w = rpoly_compose(coef, w);
      if (n % k == 0) {
        RatPoly f = w;
        if (f.size() < 2) f.resize(2, Rat(0));
        f[1] -= Rat(1);
        phi[k] = rpoly_trim(f);
      }
    }
    RatPoly num{Rat(1)}, den{Rat(1)};
    for (int l : divisors(n)) {
      if (mobius(n / l) == 1)
        num = rpoly_mul(num, phi[l]);
      else if (mobius(n / l) == -1)
        den = rpoly_mul(den, phi[l]);
    }
    auto [f, rem] = rpoly_divrem(num, den);
    if (!rem.empty() || poly_deg(f) != nu) throw NumericalError("dynatomic specialization failed");
    auto reduce = [&](RatPoly x) { return rpoly_divrem(x, f).second; };
    RatPoly col = reduce(lam);
    std::vector<std::vector<Rat>> M(std::size_t(nu), std::vector<Rat>(std::size_t(nu), Rat(0)));
    for (long i = 0; i < nu; ++i) {
      for (long r = 0; r < long(col.size()); ++r) M[std::size_t(r)][std::size_t(i)] = col[std::size_t(r)];
      if (i + 1 < nu) {
        col.insert(col.begin(), Rat(0));
        col = reduce(col);
      }
    }
    return charpoly_rat(M);
  };
  std::vector<Rat> ts;
  std::vector<RatPoly> vals;
  std::size_t stable = 0;
  int degb = -1;
  for (int j = 0; j < max_samples; ++j) {
    ts.push_back(Rat(j));
    vals.push_back(sample(j));
    if (vals.size() < 2) continue;
    // the columns stabilize once every coefficient's divided differences vanish
    bool allflat = true;
    for (long k = 0; k <= nu && allflat; ++k) {
      std::vector<Rat> vs;
      for (auto& v : vals) vs.push_back(long(k) < long(v.size()) ? v[std::size_t(k)] : Rat(0));
      auto nf = interpolate_newton(ts, vs);
      if (!nf.empty() && nf.back() != Rat(0) && long(nf.size()) - 1 >= long(vals.size()) - 2)
        allflat = false;
    }
    if (allflat) {
      if (++stable >= 3) {
        degb = int(vals.size()) - 1;
        break;
      }
    } else {
      stable = 0;
    }
  }
  if (degb < 0) throw BudgetError("multiplier interpolation did not stabilize");
  SymbolicPoly out;
  SymbolicPoly av = SymbolicPoly::variable("a");
  SymbolicPoly wv = SymbolicPoly::variable("w");
  for (long k = 0; k <= nu; ++k) {
    std::vector<Rat> vs;
    for (auto& v : vals) vs.push_back(long(k) < long(v.size()) ? v[std::size_t(k)] : Rat(0));
    auto cb = interpolate_newton(ts, vs);
    for (std::size_t t = 0; t < cb.size(); ++t) {
      if (cb[t] == Rat(0)) continue;
      out = out + cb[t] * av.pow(2 * int(t)).mul(wv.pow(int(k)));
    }
  }
  // reverify the whole table at one fresh rational sample
  auto fresh = sample(degb + 7);
  {
    Rat b = Rat(degb + 7);
    for (long k = 0; k <= nu; ++k) {
      Rat want = long(k) < long(fresh.size()) ? fresh[std::size_t(k)] : Rat(0);
      auto ck = out.coeff_of("w", int(k));
      // ck is a polynomial in a alone with even exponents; evaluate at a^2 = b
      Rat got(0);
      int da = ck.degree_in("a");
      for (int e = 0; e <= da; e += 2) {
        Rat c = constant_term(ck.coeff_of("a", e));
        if (c == Rat(0)) continue;
        Rat pw(1);
        for (int q = 0; q < e / 2; ++q) pw *= b;
        got += c * pw;
      }
      if (got != want) throw NumericalError("multiplier interpolation failed verification");
    }
  }
  return out;
}

struct CycleRecord {
  CD rep;
  int period = 0;
  CD multiplier;
  std::vector<int> basin;
};

struct CycleSearch {
  std::vector<CycleRecord> cycles;
  std::vector<int> unresolved;
};

/// Iterates every critical point, detects a near-return, polishes the landing
/// cycle by Newton on P^q(z) - z, and reduces to the exact period. Critical
/// points that escape or fail to settle inside the budget are reported.
inline CycleSearch attracting_cycles(const ParamCD& p, int budget = 60000, double tol = 1e-9) {
  CycleSearch out;
  auto coef = family_coeffs(p);
  double esc = 4.0 + std::abs(p.a);
  for (auto& ci : p.c) esc = std::max(esc, 4.0 + std::abs(ci));
  const double esc2 = esc * esc;
  auto crit = critical_points(p);
  const int win = 128;
  for (int i = 0; i < int(crit.size()); ++i) {
    CD z = crit[std::size_t(i)];
    std::vector<CD> ring(std::size_t(win), z);
    bool done = false;
    for (int s = 1; s <= budget && !done; ++s) {
      z = eval_poly(coef, z);
      if (!std::isfinite(std::abs(z)) || std::abs(z) > esc2) break;
      ring[std::size_t(s % win)] = z;
      if (s % 16 != 0 || s < win) continue;
      for (int q = 1; q < win && !done; ++q) {
        if (std::abs(z - ring[std::size_t((s - q) % win)]) > 1e-7 * (1.0 + std::abs(z))) continue;
        // polish the candidate cycle and reduce to the exact period
        int per = q;
        CD rep = z;
        bool okp = false;
        for (int attempt = 0; attempt < 2 && !okp; ++attempt) {
          CD y = rep;
          for (int it = 0; it < 60; ++it) {
            CD val = y, mult(1);
            for (int k = 0; k < per; ++k) {
              mult *= eval_dP(p, val);
              val = eval_poly(coef, val);
            }
            CD g = val - y, dg = mult - CD(1);
            if (std::abs(dg) < 1e-14) break;
            CD step = g / dg;
            y -= step;
            if (std::abs(step) < 1e-15 * (1.0 + std::abs(y))) break;
          }
          CD val = y, mult(1);
          for (int k = 0; k < per; ++k) {
            mult *= eval_dP(p, val);
            val = eval_poly(coef, val);
          }
          if (std::abs(val - y) < tol * (1.0 + std::abs(y)) && std::abs(mult) < 1.0 - 1e-10) {
            rep = y;
            okp = true;
            for (int dl : divisors(per)) {
              if (dl == per) continue;
              CD vv = rep;
              for (int k = 0; k < dl; ++k) vv = eval_poly(coef, vv);
              if (std::abs(vv - rep) < 1e-8 * (1.0 + std::abs(rep))) {
                per = dl;
                okp = false;
                break;
              }
            }
          } else {
            break;
          }
        }
        if (!okp) continue;
        std::vector<CD> orb;
        CD vv = rep;
        CD mult(1);
        for (int k = 0; k < per; ++k) {
          orb.push_back(vv);
          mult *= eval_dP(p, vv);
          vv = eval_poly(coef, vv);
        }
        CD canon = orb[0];
        for (auto& o : orb)
          if (std::make_pair(std::round(o.real() * 1e9), std::round(o.imag() * 1e9)) <
              std::make_pair(std::round(canon.real() * 1e9), std::round(canon.imag() * 1e9)))
            canon = o;
        bool merged = false;
        for (auto& rec : out.cycles) {
          for (auto& o : orb)
            if (std::abs(rec.rep - o) < 1e-6 * (1.0 + std::abs(o))) {
              rec.basin.push_back(i);
              merged = true;
              break;
            }
          if (merged) break;
        }
        if (!merged) out.cycles.push_back({canon, per, mult, {i}});
        done = true;
      }
    }
    if (!done) out.unresolved.push_back(i);
  }
  std::sort(out.cycles.begin(), out.cycles.end(), [](const CycleRecord& x, const CycleRecord& y) {
    if (x.period != y.period) return x.period < y.period;
    auto kx = std::make_pair(std::round(x.rep.real() * 1e9), std::round(x.rep.imag() * 1e9));
    auto ky = std::make_pair(std::round(y.rep.real() * 1e9), std::round(y.rep.imag() * 1e9));
    return kx < ky;
  });
  return out;
}

/// The multiplier tuple of a parameter inside a hyperbolic component, ordered
/// by the configured period assignment.
inline std::vector<CD> multiplier_map_W(const ParamCD& p, const std::vector<int>& periods) {
  if (int(periods.size()) != p.d - 1) throw DomainError("one period per critical point");
  for (std::size_t i = 0; i < periods.size(); ++i)
    for (std::size_t j = i + 1; j < periods.size(); ++j)
      if (periods[i] == periods[j]) throw DomainError("period assignment must be distinct");
  auto found = attracting_cycles(p);
  if (!found.unresolved.empty())
    throw DomainError("a critical point did not settle on an attracting cycle");
  if (int(found.cycles.size()) != p.d - 1)
    throw DomainError("parameter is outside the configured component");
  std::vector<CD> out;
  for (int per : periods) {
    bool hit = false;
    for (auto& rec : found.cycles)
      if (rec.period == per) {
        out.push_back(rec.multiplier);
        hit = true;
        break;
      }
    if (!hit) throw DomainError("no attracting cycle of the configured period");
  }
  return out;
}

inline CD eval_ddP(const ParamCD& p, CD z) {
  CD prod(1);
  for (auto& ci : p.c) prod *= (z - ci);
  CD s(0);
  for (std::size_t i = 0; i < p.c.size(); ++i) {
    CD t(1);
    for (std::size_t j = 0; j < p.c.size(); ++j)
      if (j != i) t *= (z - p.c[j]);
    s += t;
  }
  return prod + z * s;
}

struct OrbitMultJet {
  CD f;
  CD fp;
  std::vector<CD> gf, gfp;
};

/// Value and gradient of both P^m(z) and (P^m)'(z) with respect to
/// (c_1..c_(d-2), a, z).
inline OrbitMultJet orbit_mult_jet(const ParamCD& p, CD z0, int m) {
  const int np = p.d - 1;
  const int nv = np + 1;
  auto coef = family_coeffs(p);
  CD z = z0;
  std::vector<CD> gz(std::size_t(nv), CD(0));
  gz[std::size_t(nv - 1)] = CD(1);
  CD mult(1);
  std::vector<CD> gm(std::size_t(nv), CD(0));
  for (int s = 0; s < m; ++s) {
    CD dz = eval_dP(p, z);
    CD ddz = eval_ddP(p, z);
    std::vector<CD> ngz(std::size_t(nv), CD(0));
    std::vector<CD> ngm(std::size_t(nv), CD(0));
    for (int i = 0; i < p.d - 2; ++i) {
      std::vector<CD> reduced;
      for (int t = 0; t < p.d - 2; ++t)
        if (t != i) reduced.push_back(p.c[std::size_t(t)]);
      auto sig = elementary_symmetric(reduced);
      CD accP(0), accPp(0);
      for (int j = 2; j <= p.d - 1; ++j) {
        int idx = p.d - j - 1;
        if (idx < 0 || idx > int(reduced.size())) continue;
        CD base = sig[std::size_t(idx)];
        CD tp = base * spow(z, j) / double(j);
        CD tq = base * spow(z, j - 1);
        if ((p.d - j) % 2 == 0) {
          accP += tp;
          accPp += tq;
        } else {
          accP -= tp;
          accPp -= tq;
        }
      }
      ngz[std::size_t(i)] = dz * gz[std::size_t(i)] + accP;
      ngm[std::size_t(i)] = gm[std::size_t(i)] * dz + mult * (ddz * gz[std::size_t(i)] + accPp);
    }
    CD da = double(p.d) * spow(p.a, p.d - 1);
    ngz[std::size_t(np - 1)] = dz * gz[std::size_t(np - 1)] + da;
    ngm[std::size_t(np - 1)] = gm[std::size_t(np - 1)] * dz + mult * ddz * gz[std::size_t(np - 1)];
    ngz[std::size_t(nv - 1)] = dz * gz[std::size_t(nv - 1)];
    ngm[std::size_t(nv - 1)] = gm[std::size_t(nv - 1)] * dz + mult * ddz * gz[std::size_t(nv - 1)];
    mult *= dz;
    z = eval_poly(coef, z);
    gz = ngz;
    gm = ngm;
  }
  return {z, mult, gz, gm};
}

struct ContinueResult {
  ParamCD endpoint{2, {}, CD(0)};
  std::vector<CD> cycle_points;
  bool ok = false;
  double residual = 0.0;
  double path_length = 0.0;
  int halvings = 0;
};

/// Predictor-corrector continuation on the augmented system
///   { P^(m_i)(z_i) - z_i = 0, (P^(m_i))'(z_i) - t w_i = 0 }
/// in the unknowns (c, a, z_0..z_(d-2)), ramping one multiplier coordinate at
/// a time from the superattracting center.
inline ContinueResult path_continue(const ParamCD& center, const std::vector<int>& m,
                                    const std::vector<CD>& w, int steps = 32) {
  const int d = center.d;
  const int np = d - 1;
  const int nv = 2 * np;
  if (int(m.size()) != np || int(w.size()) != np)
    throw DomainError("one period and one multiplier per critical point");
  for (auto& wi : w)
    if (std::abs(wi) >= 1.0) throw DomainError("target multipliers must lie inside the unit disk");
  std::vector<CD> x(std::size_t(nv), CD(0));
  for (int i = 0; i < d - 2; ++i) x[std::size_t(i)] = center.c[std::size_t(i)];
  x[std::size_t(np - 1)] = center.a;
  auto cr = critical_points(center);
  for (int i = 0; i < np; ++i) x[std::size_t(np + i)] = cr[std::size_t(i)];
  auto param_of = [&](const std::vector<CD>& v) {
    return ParamCD(d, std::vector<CD>(v.begin(), v.begin() + (d - 2)), v[std::size_t(np - 1)]);
  };
  auto newton = [&](std::vector<CD>& v, const std::vector<CD>& targets) {
    double res = 0.0;
    for (int it = 0; it < 40; ++it) {
      ParamCD p = param_of(v);
      Eigen::MatrixXcd J = Eigen::MatrixXcd::Zero(nv, nv);
      Eigen::VectorXcd F(nv);
      res = 0.0;
      for (int i = 0; i < np; ++i) {
        auto jet = orbit_mult_jet(p, v[std::size_t(np + i)], m[std::size_t(i)]);
        F(2 * i) = jet.f - v[std::size_t(np + i)];
        F(2 * i + 1) = jet.fp - targets[std::size_t(i)];
        for (int u = 0; u < np; ++u) {
          J(2 * i, u) = jet.gf[std::size_t(u)];
          J(2 * i + 1, u) = jet.gfp[std::size_t(u)];
        }
        J(2 * i, np + i) = jet.gf[std::size_t(np)] - CD(1);
        J(2 * i + 1, np + i) = jet.gfp[std::size_t(np)];
        res = std::max({res, std::abs(F(2 * i)), std::abs(F(2 * i + 1))});
      }
      if (res < 1e-12) return true;
      Eigen::VectorXcd dx = J.fullPivLu().solve(-F);
      double sn = 0.0;
      for (int u = 0; u < nv; ++u) {
        v[std::size_t(u)] += dx(u);
        sn = std::max(sn, std::abs(dx(u)));
      }
      if (!std::isfinite(sn) || sn > 1e4) return false;
    }
    return res < 1e-10;
  };
  ContinueResult out;
  std::vector<CD> targets(std::size_t(np), CD(0));
  for (int j = 0; j < np; ++j) {
    if (std::abs(w[std::size_t(j)]) == 0.0) continue;
    double t = 0.0, dt = 1.0 / steps;
    int halv = 0;
    while (t < 1.0 - 1e-15) {
      double tt = std::min(1.0, t + dt);
      targets[std::size_t(j)] = tt * w[std::size_t(j)];
      auto save = x;
      if (newton(x, targets)) {
        double moved = 0.0;
        for (int u = 0; u < nv; ++u) moved = std::max(moved, std::abs(x[std::size_t(u)] - save[std::size_t(u)]));
        out.path_length += moved;
        t = tt;
        dt = std::min(dt * 2.0, 1.0 / steps);
      } else {
        x = save;
        dt *= 0.5;
        if (++halv > 20) {
          targets[std::size_t(j)] = t * w[std::size_t(j)];
          out.endpoint = param_of(x);
          out.halvings = halv;
          return out;
        }
      }
    }
    targets[std::size_t(j)] = w[std::size_t(j)];
    out.halvings = std::max(out.halvings, halv);
  }
  ParamCD pe = param_of(x);
  double res = 0.0;
  for (int i = 0; i < np; ++i) {
    auto jet = orbit_mult_jet(pe, x[std::size_t(np + i)], m[std::size_t(i)]);
    res = std::max({res, std::abs(jet.f - x[std::size_t(np + i)]),
                    std::abs(jet.fp - w[std::size_t(i)])});
  }
  out.endpoint = pe;
  out.cycle_points.assign(x.begin() + np, x.end());
  out.residual = res;
  out.ok = res < 1e-10;
  return out;
}

/// Direct quadratic-lane solve of the multiplier equation at a fixed w: the
/// monic multiplier polynomial in a is recovered from circle samples by a
/// discrete Fourier transform, its roots polished on the augmented system.
inline std::vector<std::pair<CD, CD>> per_star_quadratic_algebraic(int mper, CD w) {
  long nu = nu_d(2, mper);
  int D = int(mper * nu);
  int N = D + 1;
  const double R = 3.0;
  std::vector<CD> vals(static_cast<std::size_t>(N));
  for (int j = 0; j < N; ++j) {
    double th = 2.0 * M_PI * j / N;
    CD aj(R * std::cos(th), R * std::sin(th));
    ParamCD p(2, {}, aj);
    auto star = dynatomic_at(2, mper, p);
    CD v(1);
    for (auto z : poly_roots(star)) v *= (w - orbit_multiplier(p, z, mper));
    vals[std::size_t(j)] = v;
  }
  std::vector<CD> coef(std::size_t(N), CD(0));
  for (int k = 0; k < N; ++k) {
    CD acc(0);
    for (int j = 0; j < N; ++j) {
      double th = -2.0 * M_PI * j * k / N;
      acc += vals[std::size_t(j)] * CD(std::cos(th), std::sin(th));
    }
    coef[std::size_t(k)] = acc / double(N) / std::pow(R, k);
  }
  std::vector<std::pair<CD, CD>> out;
  for (auto a0 : poly_roots(coef)) {
    if (std::abs(a0) > 2.9) continue;
    ParamCD p(2, {}, a0);
    std::vector<CD> star;
    try {
      star = dynatomic_at(2, mper, p);
    } catch (const NumericalError&) {
      continue;
    }
    CD zbest(0);
    double best = 1e300;
    for (auto z : poly_roots(star)) {
      double dmu = std::abs(orbit_multiplier(p, z, mper) - w);
      if (dmu < best) {
        best = dmu;
        zbest = z;
      }
    }
    if (best > 0.5) continue;
    // polish (a, z) jointly on the augmented system
    CD a = a0, z = zbest;
    for (int it = 0; it < 60; ++it) {
      ParamCD pc(2, {}, a);
      auto jet = orbit_mult_jet(pc, z, mper);
      CD f0 = jet.f - z, f1 = jet.fp - w;
      CD j00 = jet.gf[0], j01 = jet.gf[1] - CD(1);
      CD j10 = jet.gfp[0], j11 = jet.gfp[1];
      CD det = j00 * j11 - j01 * j10;
      if (std::abs(det) < 1e-300) break;
      CD da = (f0 * j11 - f1 * j01) / det;
      CD dz = (f1 * j00 - f0 * j10) / det;
      a -= da;
      z -= dz;
      if (std::max(std::abs(da), std::abs(dz)) < 1e-15 * (1.0 + std::abs(a))) break;
    }
    ParamCD pc(2, {}, a);
    auto jet = orbit_mult_jet(pc, z, mper);
    if (std::max(std::abs(jet.f - z), std::abs(jet.fp - w)) > 1e-10) continue;
    bool dup = false;
    for (auto& [aa, zz] : out)
      if (std::abs(aa - a) < 1e-8) dup = true;
    if (!dup) out.push_back({a, z});
  }
  return out;
}

/// The finite set of parameters whose marked cycles have the requested periods
/// and multipliers, reached by continuation from the superattracting centers.
inline PcfSolutionSet per_star_solve(int d, const std::vector<int>& m, const std::vector<CD>& w,
                                     int steps = 32, const PcfOptions& opt = {}) {
  if (int(m.size()) != d - 1 || int(w.size()) != d - 1)
    throw DomainError("one period and one multiplier per critical point");
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = i + 1; j < m.size(); ++j)
      if (m[i] == m[j]) throw DomainError("marked periods must be distinct");
  for (auto& wi : w)
    if (std::abs(wi) >= 1.0) throw DomainError("multipliers must lie inside the unit disk");
  std::vector<int> zeros(m.size(), 0);
  auto centers = pcf_solve(d, m, zeros, opt);
  PcfSolutionSet out;
  out.d = d;
  out.m = m;
  out.n = zeros;
  out.method = "continuation";
  bool allzero = true;
  for (auto& wi : w)
    if (std::abs(wi) != 0.0) allzero = false;
  int simple = 0;
  for (auto& pt : centers.points) {
    bool exact_center = pt.multiplicity == 1 && !pt.ill_conditioned;
    for (std::size_t i = 0; i < m.size() && exact_center; ++i)
      if (pt.exactness[i] != std::make_pair(0, m[i])) exact_center = false;
    if (exact_center) ++simple;
  }
  if (simple == 0 && !centers.points.empty())
    throw DomainError("no simple superattracting centers for this period assignment");
  for (auto& pt : centers.points) {
    bool exact_center = pt.multiplicity == 1 && !pt.ill_conditioned;
    for (std::size_t i = 0; i < m.size() && exact_center; ++i)
      if (pt.exactness[i] != std::make_pair(0, m[i])) exact_center = false;
    if (!exact_center) continue;
    if (allzero) {
      out.points.push_back(pt);
      continue;
    }
    ParamCD c0(d, std::vector<CD>(pt.coords.begin(), pt.coords.end() - 1), pt.coords.back());
    auto cr = path_continue(c0, m, w, steps);
    if (!cr.ok) cr = path_continue(c0, m, w, steps * 4);
    PcfPoint q;
    for (auto& ci : cr.endpoint.c) q.coords.push_back(ci);
    q.coords.push_back(cr.endpoint.a);
    q.exactness.assign(m.size(), {-1, -1});
    q.margin.assign(m.size(), 0.0);
    q.residual = cr.residual;
    q.ill_conditioned = !cr.ok;
    out.points.push_back(q);
  }
  out.bezout = long(out.points.size());
  bool anyflag = false;
  for (auto& pt : out.points) anyflag = anyflag || pt.ill_conditioned;
  if (anyflag && d == 2 && !allzero) {
    // algebraic fallback: resolve the flagged paths from the direct solve
    auto alg = per_star_quadratic_algebraic(m[0], w[0]);
    std::vector<PcfPoint> kept;
    for (auto& pt : out.points)
      if (!pt.ill_conditioned) kept.push_back(pt);
    for (auto& [a, z] : alg) {
      bool dup = false;
      for (auto& pt : kept)
        if (std::abs(pt.coords[0] - a) < 1e-7) dup = true;
      if (dup) continue;
      PcfPoint q;
      q.coords = {a};
      q.exactness.assign(1, {-1, -1});
      q.margin.assign(1, 0.0);
      ParamCD pc(2, {}, a);
      auto jet = orbit_mult_jet(pc, z, m[0]);
      q.residual = std::max(std::abs(jet.f - z), std::abs(jet.fp - w[0]));
      kept.push_back(q);
    }
    out.points = kept;
  }
  for (auto& pt : out.points) out.max_residual = std::max(out.max_residual, pt.residual);
  canonical_sort(out.points);
  return out;
}

}  // namespace dynbif
