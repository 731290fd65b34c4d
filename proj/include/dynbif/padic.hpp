#pragma once

#include <optional>
#include <set>

#include "certificate.hpp"
#include "family.hpp"

namespace dynbif {

/// A place of Q. n_v is the local degree weight, always 1 here.
struct Place {
  bool arch = true;
  long long p = 0;
  int n_v = 1;

  bool operator<(const Place& o) const {
    if (arch != o.arch) return arch;
    return p < o.p;
  }
  bool operator==(const Place& o) const { return arch == o.arch && p == o.p; }
  std::string str() const { return arch ? "inf" : std::to_string(p); }
};

inline bool is_prime_ll(long long n) {
  if (n < 2) return false;
  for (long long q = 2; q * q <= n; ++q)
    if (n % q == 0) return false;
  return true;
}

inline long val_p(const Int& n, long long p) {
  if (n == 0) throw DomainError("valuation of zero");
  Int m = abs(n);
  long v = 0;
  Int q, r;
  while (true) {
    mpz_fdiv_qr_ui(q.get_mpz_t(), r.get_mpz_t(), m.get_mpz_t(),
                   (unsigned long)p);
    if (r != 0) break;
    m = q;
    ++v;
  }
  return v;
}

inline long val_p(const Rat& x, long long p) {
  if (x == 0) throw DomainError("valuation of zero");
  return val_p(x.get_num(), p) - val_p(x.get_den(), p);
}

/// |x|_p as an exact exponent: |x|_p = p^exp_v(x); exponent of 0 is -infinity,
/// signalled by the optional being empty.
inline std::optional<Rat> exp_v(const Rat& x, long long p) {
  if (x == 0) return std::nullopt;
  return Rat(-val_p(x, p));
}

inline double abs_v(const Rat& x, long long p) {
  if (x == 0) return 0.0;
  return std::pow(double(p), double(-val_p(x, p)));
}

/// max of exponents where absent means -infinity
inline std::optional<Rat> exp_max(const std::optional<Rat>& a,
                                  const std::optional<Rat>& b) {
  if (!a) return b;
  if (!b) return a;
  return std::max(*a, *b);
}

/// Local data for one prime and one exact rational parameter.
///
/// All absolute values are carried as exact rational exponents of p; real
/// logarithms appear only when reporting. Stored exponents:
///   alpha_exp: log_p alpha_v, with alpha_v = max_{j <= d} |j|_v^{-1}
///   C_exp:     log_p C_v where |z|_v >= C_v forces |P(z)|_v = |d|_v^{-1}|z|_v^d
///   Ct_exp:    log_p of max{|a|_v, |c|_v, C_v}
struct PadicContext {
  long long p = 0;
  ParamQ par;
  Rat alpha_exp;
  Rat C_exp;
  Rat Ct_exp;

  PadicContext(long long prime, ParamQ param) : p(prime), par(std::move(param)) {
    if (!is_prime_ll(p)) throw ConfigError("place is not prime");
    const int d = par.d;
    long amax = 0;
    for (int j = 2; j <= d; ++j) amax = std::max(amax, val_p(Int(j), p));
    alpha_exp = Rat(amax);

    long vd = val_p(Int(d), p);
    std::optional<Rat> ce = Rat(Rat(-vd) / (d - 1));
    if (par.a != 0)
      ce = exp_max(ce, Rat(Rat(-vd) / d + Rat(-val_p(par.a, p))));
    auto sig = elementary_symmetric(par.c);
    for (int j = 2; j <= d - 1; ++j) {
      const Rat& s = sig[std::size_t(d - j)];
      if (s == 0) continue;
      long vs = val_p(s, p);
      long vj = val_p(Int(j), p);
      ce = exp_max(ce, Rat(Rat(-vs - vd + vj) / (d - j)));
    }
    C_exp = *ce;
    Rat ct = C_exp;
    if (par.a != 0) ct = std::max(ct, Rat(-val_p(par.a, p)));
    for (auto& ci : par.c)
      if (ci != 0) ct = std::max(ct, Rat(-val_p(ci, p)));
    Ct_exp = ct;
  }

  std::optional<Rat> exp_of(const Rat& x) const { return exp_v(x, p); }
  /// h(z) = log max(Ct, |z|_v) as an exponent of p
  Rat h_exp(const Rat& z) const {
    auto e = exp_of(z);
    return e ? std::max(Ct_exp, *e) : Ct_exp;
  }
};

/// Certified local Green value, exact when possible. Bounds are exponents of
/// p bracketing g / log p.
struct LocalGreen {
  bool exact = false;
  Rat lo;
  Rat hi;
  std::string branch;

  Rat coeff() const {
    if (!exact) throw DomainError("local green value is not exact");
    return lo;
  }
  CertifiedValue cv(long long p) const {
    double lp = std::log(double(p));
    double l = lo.get_d() * lp, h = hi.get_d() * lp;
    return {(l + h) / 2, (h - l) / 2 + (exact ? 0.0 : 1e-15 * (1 + rabs(lo).get_d()))};
  }
};

/// g_{c,a,v}(z) = lim d^{-n} log max(Ct_v, |P^n(z)|_v).
///
/// Branch order: exact orbit repeat (g = 0); invariant ball
/// min val >= alpha_exp/(d-1) kept by |P(z)|_v <= alpha_v max(|c|,|a|,|z|)^d
/// (g = 0); escape past Ct_v where |P(z)|_v = |d|_v^{-1} |z|_v^d telescopes to
/// a closed form; otherwise the one-step sandwich
///   min{ (1/d) log|d|_v^{-1}, (1/d - 1) log Ct_v } <=
///     d^{-1} h(P(z)) - h(z) <= (1/d) log alpha_v
/// iterated until the bracket width is below tol / log p.
/// Truncated p-adic number p^v * u, with the unit u carried mod p^m. The
/// valuation v stays exact as long as additive cancellation keeps under the
/// precision budget of the owning tracker.
struct PadicFloat {
  bool zero = true;
  long v = 0;
  Int u;
};

/// Fixed-precision p-adic evaluator for P. Orbit points far beyond exact
/// rational reach cost O(1) per step here; any cancellation deeper than the
/// digit budget aborts with BudgetError instead of returning a wrong
/// valuation.
class PadicTracker {
 public:
  PadicTracker(const PadicContext& ctx, long digits) : p(ctx.p), m(digits) {
    mpz_ui_pow_ui(pm.get_mpz_t(), (unsigned long)p, (unsigned long)m);
    for (auto& c : family_coeffs(ctx.par)) coef.push_back(from_rat(c));
  }

  PadicFloat from_rat(const Rat& x) {
    PadicFloat f;
    if (x == 0) return f;
    long a = val_p(x.get_num(), p), b = val_p(x.get_den(), p);
    Int num = x.get_num() / pow_p(a);
    Int den = x.get_den() / pow_p(b);
    Int inv;
    if (!mpz_invert(inv.get_mpz_t(), den.get_mpz_t(), pm.get_mpz_t()))
      throw NumericalError("unit part not invertible");
    f.zero = false;
    f.v = a - b;
    f.u = mod(num * inv);
    return f;
  }

  PadicFloat mul(const PadicFloat& a, const PadicFloat& b) const {
    if (a.zero || b.zero) return {};
    return {false, a.v + b.v, mod(a.u * b.u)};
  }

  PadicFloat add(PadicFloat a, PadicFloat b) {
    if (a.zero) return b;
    if (b.zero) return a;
    if (a.v > b.v) std::swap(a, b);
    long t = b.v - a.v;
    if (t >= m - stripped) return a;
    PadicFloat r{false, a.v, mod(a.u + b.u * pow_p(t))};
    if (t == 0) {
      long s = r.u == 0 ? m : val_p(r.u, p);
      if (s > 0) {
        stripped += s;
        if (stripped > m - 16) throw BudgetError("p-adic precision exhausted");
        r.u /= pow_p(s);
        r.v += s;
      }
    }
    return r;
  }

  PadicFloat eval_P(const PadicFloat& z) {
    PadicFloat r;
    for (std::size_t k = coef.size(); k-- > 0;) r = add(mul(r, z), coef[k]);
    return r;
  }

 private:
  long long p;
  long m;
  long stripped = 0;
  Int pm;
  std::vector<PadicFloat> coef;

  Int pow_p(long e) const {
    Int r;
    mpz_ui_pow_ui(r.get_mpz_t(), (unsigned long)p, (unsigned long)e);
    return r;
  }
  Int mod(const Int& x) const {
    Int r;
    mpz_fdiv_r(r.get_mpz_t(), x.get_mpz_t(), pm.get_mpz_t());
    return r;
  }
};

inline LocalGreen green_padic_point(const PadicContext& ctx, Rat z, double tol,
                                    int max_iter = 256) {
  if (!(tol > 0)) throw ConfigError("green_padic_point: tol must be positive");
  const int d = ctx.par.d;
  const long long p = ctx.p;

  Rat ball = ctx.alpha_exp / (d - 1);
  bool coords_in_ball = true;
  if (ctx.par.a != 0 && Rat(-val_p(ctx.par.a, p)) > -ball) coords_in_ball = false;
  for (auto& ci : ctx.par.c)
    if (ci != 0 && Rat(-val_p(ci, p)) > -ball) coords_in_ball = false;

  const Rat vd = Rat(val_p(Int(d), p));
  const Rat delta_lo = std::min(vd / d, Rat(Rat(1 - d) * ctx.Ct_exp) / d);
  const Rat delta_hi = ctx.alpha_exp / d;
  Rat denom = 1;
  long long k = 0;
  // returns empty when the bracket is still wider than tol
  auto sandwich = [&](const Rat& h) -> std::optional<LocalGreen> {
    Rat width = (delta_hi - delta_lo) * d / ((d - 1) * denom);
    if (width.get_d() * std::log(double(p)) > tol) return std::nullopt;
    Rat lo = h / denom + delta_lo * d / ((d - 1) * denom);
    Rat hi = h / denom + delta_hi * d / ((d - 1) * denom);
    return LocalGreen{false, lo, hi, "sandwich"};
  };

  // exact lane: full rationals, so bitwise repeats certify g = 0
  std::vector<Rat> seen;
  while (true) {
    auto e = ctx.exp_of(z);
    if (coords_in_ball && (!e || !(*e > -ball)))
      return {true, Rat(0), Rat(0), "ball"};
    if (e && *e > ctx.Ct_exp) {
      // strictly past every tie in the ultrametric maximum, so
      // |P^{m+1}|_v = |d|_v^{-1} |P^m|_v^d from here on; equality at the
      // threshold can cancel (d=3, p=7, c1=3/7, a=1/7 drops at step one)
      // and is left to the other branches
      Rat g = (*e + vd / (d - 1)) / denom;
      return {true, g, g, "escape"};
    }
    if (std::find(seen.begin(), seen.end(), z) != seen.end())
      return {true, Rat(0), Rat(0), "repeat"};
    if (k >= max_iter) throw BudgetError("green_padic_point: no certificate within budget");
    if (mpz_sizeinbase(z.get_num().get_mpz_t(), 2) +
            mpz_sizeinbase(z.get_den().get_mpz_t(), 2) >
        512)
      break;
    if (seen.size() < 4096) seen.push_back(z);
    z = eval_P(ctx.par, z);
    denom *= d;
    ++k;
    if (auto out = sandwich(ctx.h_exp(z))) return *out;
  }

  // wide lane: only valuations matter from here on, carried at fixed
  // p-adic precision
  PadicTracker trk(ctx, 192);
  PadicFloat w = trk.from_rat(z);
  while (true) {
    if (coords_in_ball && (w.zero || !(Rat(-w.v) > -ball)))
      return {true, Rat(0), Rat(0), "ball"};
    if (!w.zero && Rat(-w.v) > ctx.Ct_exp) {
      Rat g = (Rat(-w.v) + vd / (d - 1)) / denom;
      return {true, g, g, "escape"};
    }
    if (k >= max_iter) throw BudgetError("green_padic_point: no certificate within budget");
    w = trk.eval_P(w);
    denom *= d;
    ++k;
    Rat h = w.zero ? ctx.Ct_exp : std::max(ctx.Ct_exp, Rat(-w.v));
    if (auto out = sandwich(h)) return *out;
  }
}

/// G_v(c,a) = max_i g_{c,a,v}(c_i). With residual characteristic p > d+1 the
/// closed form log^+ max(|c|_v, |a|_v) is returned without iterating unless
/// force_iterative is set.
inline LocalGreen G_padic(const PadicContext& ctx, double tol,
                          bool force_iterative = false, int max_iter = 256) {
  const int d = ctx.par.d;
  if (!force_iterative && ctx.p > d + 1) {
    std::optional<Rat> e;
    if (ctx.par.a != 0) e = Rat(-val_p(ctx.par.a, ctx.p));
    for (auto& ci : ctx.par.c)
      if (ci != 0) e = exp_max(e, Rat(-val_p(ci, ctx.p)));
    Rat g = e ? std::max(*e, Rat(0)) : Rat(0);
    return {true, g, g, "shortcut"};
  }
  std::vector<Rat> crit = critical_points(ctx.par);
  Rat lo(0), hi(0);
  bool exact = true;
  bool first = true;
  std::string branch;
  for (auto& c : crit) {
    LocalGreen g = green_padic_point(ctx, c, tol, max_iter);
    if (first) {
      lo = g.lo;
      hi = g.hi;
      branch = g.branch;
      first = false;
    } else {
      if (g.hi > hi) branch = g.branch;
      lo = std::max(lo, g.lo);
      hi = std::max(hi, g.hi);
    }
  }
  exact = lo == hi;
  return {exact, lo, hi, branch};
}

/// p-adic side of the critical-value lower bound
///   max_j |P(c_j)|_v >= beta_v max(|c|_v,|a|_v)^d,
/// read off the power certificate: beta_v = min_i (Gauss norm of row i)^{-1},
/// capped at 1. Returned as the exponent log_p beta_v <= 0.
inline Rat beta_exp(const PowerCert& cert, long long p) {
  Rat best(0);
  for (const auto& row : cert.Q) {
    std::optional<Rat> rowmax;
    for (const auto& q : row)
      for (const auto& [e, coef] : q.terms)
        rowmax = exp_max(rowmax, Rat(-val_p(coef, p)));
    if (!rowmax) throw DomainError("empty certificate row");
    best = std::min(best, Rat(-*rowmax));
  }
  return best;
}

/// Active places for exact rational parameters: the archimedean place, primes
/// up to d+1, and primes dividing a numerator or denominator of a coordinate.
/// Every other place contributes 0 to every height here.
inline std::vector<Place> active_places(const ParamQ& par) {
  std::set<long long> ps;
  for (long long p = 2; p <= par.d + 1; ++p)
    if (is_prime_ll(p)) ps.insert(p);
  auto add_support = [&](const Rat& x) {
    if (x == 0) return;
    for (Int n : {Int(abs(x.get_num())), Int(x.get_den())}) {
      for (long p = 2; p * p <= n; ++p)
        if (n % p == 0) {
          ps.insert(p);
          while (n % p == 0) n /= p;
        }
      if (n > 1) {
        if (!n.fits_slong_p())
          throw BudgetError("prime support exceeds machine range");
        ps.insert(n.get_si());
      }
    }
  };
  add_support(par.a);
  for (auto& ci : par.c) add_support(ci);
  std::vector<Place> out;
  out.push_back({true, 0, 1});
  for (long long p : ps) out.push_back({false, p, 1});
  return out;
}

}  // namespace dynbif
