#pragma once

#include <Eigen/Dense>

#include "roots.hpp"
#include "symbolic.hpp"

namespace dynbif {

/// Dense univariate polynomial over Q, index = power of the variable.
using RatPoly = std::vector<Rat>;

inline int poly_deg(const RatPoly& f) {
  int d = -1;
  for (std::size_t k = 0; k < f.size(); ++k)
    if (f[k] != 0) d = int(k);
  return d;
}

inline Rat rat_pow(const Rat& x, int n) {
  Rat r(1), b(x);
  while (n > 0) {
    if (n & 1) r *= b;
    n >>= 1;
    if (n) b *= b;
  }
  return r;
}

/// Fraction-free Gaussian elimination. Exact determinant of an integer
/// matrix; intermediate entries stay at determinant-of-minor size.
inline Int bareiss_det(std::vector<std::vector<Int>> M) {
  const std::size_t n = M.size();
  if (n == 0) return Int(1);
  Int denom(1);
  int sign = 1;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    std::size_t piv = k;
    while (piv < n && M[piv][k] == 0) ++piv;
    if (piv == n) return Int(0);
    if (piv != k) {
      std::swap(M[piv], M[k]);
      sign = -sign;
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      for (std::size_t j = k + 1; j < n; ++j) {
        Int t = M[i][j] * M[k][k] - M[i][k] * M[k][j];
        mpz_divexact(M[i][j].get_mpz_t(), t.get_mpz_t(), denom.get_mpz_t());
      }
      M[i][k] = 0;
    }
    denom = M[k][k];
  }
  Int out = M[n - 1][n - 1];
  return sign < 0 ? Int(-out) : out;
}

/// Determinant of the (m+n)-size Sylvester matrix of f and g where f is
/// treated as having formal degree m and g formal degree n, even when the
/// leading entries vanish. This is what specializing a resultant taken over a
/// polynomial ring produces, so interpolation callers need the formal-degree
/// version rather than resultant_exact.
inline Rat resultant_fixed(const RatPoly& f, const RatPoly& g, int m, int n) {
  if (int(f.size()) != m + 1 || int(g.size()) != n + 1)
    throw DomainError("coefficient list does not match the stated formal degree");
  if (m == 0 && n == 0) return Rat(1);
  if (m == 0) return rat_pow(f[0], n);
  if (n == 0) return rat_pow(g[0], m);
  Int lf(1), lg(1);
  for (auto& x : f) mpz_lcm(lf.get_mpz_t(), lf.get_mpz_t(), x.get_den().get_mpz_t());
  for (auto& x : g) mpz_lcm(lg.get_mpz_t(), lg.get_mpz_t(), x.get_den().get_mpz_t());
  std::vector<Int> F(std::size_t(m) + 1), G(std::size_t(n) + 1);
  for (int j = 0; j <= m; ++j) {
    Rat s = f[std::size_t(j)] * Rat(lf);
    F[std::size_t(j)] = s.get_num();
  }
  for (int j = 0; j <= n; ++j) {
    Rat s = g[std::size_t(j)] * Rat(lg);
    G[std::size_t(j)] = s.get_num();
  }
  const std::size_t N = std::size_t(m + n);
  std::vector<std::vector<Int>> M(N, std::vector<Int>(N, Int(0)));
  for (int r = 0; r < n; ++r)
    for (int i = 0; i <= m; ++i) M[std::size_t(r)][std::size_t(r + i)] = F[std::size_t(m - i)];
  for (int r = 0; r < m; ++r)
    for (int i = 0; i <= n; ++i)
      M[std::size_t(n + r)][std::size_t(r + i)] = G[std::size_t(n - i)];
  return Rat(bareiss_det(std::move(M))) / (rat_pow(Rat(lf), n) * rat_pow(Rat(lg), m));
}

/// Resultant of two univariate rational polynomials at their true degrees.
inline Rat resultant_exact(const RatPoly& f, const RatPoly& g) {
  int m = poly_deg(f), n = poly_deg(g);
  if (m < 0 || n < 0) return Rat(0);
  RatPoly ft(f.begin(), f.begin() + m + 1), gt(g.begin(), g.begin() + n + 1);
  return resultant_fixed(ft, gt, m, n);
}

/// Dense coefficients of the unique polynomial of degree < ts.size() through
/// the rational samples (ts[k], vs[k]). Newton divided differences.
inline RatPoly interpolate_newton(const std::vector<Rat>& ts, const std::vector<Rat>& vs) {
  const std::size_t n = ts.size();
  if (n == 0 || vs.size() != n) throw DomainError("interpolation needs matching nonempty samples");
  std::vector<Rat> dd(vs);
  for (std::size_t j = 1; j < n; ++j)
    for (std::size_t i = n; i-- > j;) dd[i] = (dd[i] - dd[i - 1]) / (ts[i] - ts[i - j]);
  RatPoly out{dd[n - 1]};
  for (std::size_t k = n - 1; k-- > 0;) {
    out.insert(out.begin(), Rat(0));
    for (std::size_t i = 0; i + 1 < out.size(); ++i) out[i] = out[i] - ts[k] * out[i + 1];
    out[0] += dd[k];
  }
  while (out.size() > 1 && out.back() == 0) out.pop_back();
  return out;
}

/// Rewrites p so that var stands for its former k-th power: every exponent of
/// var is divided by k. Fails unless all of them are multiples of k. Useful
/// when a variable only ever appears through such powers and elimination
/// should not pay for the spurious symmetry.
inline SymbolicPoly power_compress(const SymbolicPoly& p, const std::string& var, int k) {
  int i = p.var_index(var);
  SymbolicPoly out;
  out.vars = p.vars;
  for (auto& [e, c] : p.terms) {
    std::vector<int> ne = e;
    if (i >= 0) {
      if (ne[std::size_t(i)] % k != 0)
        throw DomainError("exponent of " + var + " is not a multiple of " + std::to_string(k));
      ne[std::size_t(i)] /= k;
    }
    out.terms[ne] = c;
  }
  return out;
}

inline Rat constant_term(const SymbolicPoly& p) {
  if (p.terms.empty()) return Rat(0);
  for (auto& [e, c] : p.terms)
    for (int x : e)
      if (x != 0) throw DomainError("polynomial is not constant");
  return p.terms.begin()->second;
}

/// Exact eliminant: Res_elim(F, G) as a univariate polynomial in keep,
/// computed by specializing keep at D+1 rational nodes and interpolating.
/// Only sized for moderate output degrees; large systems go through
/// EliminantLogDeriv instead.
inline RatPoly resultant_bivariate(const SymbolicPoly& F, const SymbolicPoly& G,
                                   const std::string& elim, const std::string& keep,
                                   long degree_budget = 700) {
  int mf = F.degree_in(elim), mg = G.degree_in(elim);
  if (mf <= 0 || mg <= 0)
    throw DomainError("resultant needs positive degree in the eliminated variable");
  long D = (long)F.degree_in(keep) * mg + (long)G.degree_in(keep) * mf;
  if (D > degree_budget) throw BudgetError("eliminant degree exceeds the exact-lane budget");
  std::vector<SymbolicPoly> fc, gc;
  for (int j = 0; j <= mf; ++j) fc.push_back(F.coeff_of(elim, j));
  for (int j = 0; j <= mg; ++j) gc.push_back(G.coeff_of(elim, j));
  std::vector<Rat> ts, vs;
  for (long k = 0; k <= D; ++k) {
    long v = (k + 1) / 2;
    Rat t(k % 2 == 1 ? v : -v);
    RatPoly ft(std::size_t(mf) + 1), gt(std::size_t(mg) + 1);
    for (int j = 0; j <= mf; ++j)
      ft[std::size_t(j)] = constant_term(fc[std::size_t(j)].substitute_const(keep, t));
    for (int j = 0; j <= mg; ++j)
      gt[std::size_t(j)] = constant_term(gc[std::size_t(j)].substitute_const(keep, t));
    ts.push_back(t);
    vs.push_back(resultant_fixed(ft, gt, mf, mg));
  }
  return interpolate_newton(ts, vs);
}

/// Bivariate coefficients as dense double rows: rows[j][i] multiplies
/// elim^j * keep^i. Coefficients beyond double range are stored divided by
/// exp(logscale); the eliminant evaluator only ever needs ratios, so the
/// common factor is harmless there.
struct BivarGrid {
  int deg_elim = 0, deg_keep = 0;
  double logscale = 0.0;
  std::vector<std::vector<double>> rows;
};

inline BivarGrid bivar_grid(const SymbolicPoly& F, const std::string& elim,
                            const std::string& keep) {
  BivarGrid g;
  g.deg_elim = F.degree_in(elim);
  g.deg_keep = F.degree_in(keep);
  g.rows.assign(std::size_t(g.deg_elim) + 1, std::vector<double>(std::size_t(g.deg_keep) + 1, 0.0));
  int ie = F.var_index(elim), ik = F.var_index(keep);
  double maxlog = -1e300;
  for (auto& [e, c] : F.terms) {
    for (std::size_t i = 0; i < e.size(); ++i)
      if (int(i) != ie && int(i) != ik && e[i] != 0)
        throw DomainError("polynomial involves a variable beyond the stated pair");
    maxlog = std::max(maxlog, log_abs(c));
  }
  if (maxlog < 600.0 * M_LN2) maxlog = 0.0;
  g.logscale = maxlog;
  for (auto& [e, c] : F.terms) {
    int je = ie >= 0 ? e[std::size_t(ie)] : 0;
    int jk = ik >= 0 ? e[std::size_t(ik)] : 0;
    double v = maxlog == 0.0 ? c.get_d() : (c < 0 ? -1.0 : 1.0) * std::exp(log_abs(c) - maxlog);
    g.rows[std::size_t(je)][std::size_t(jk)] = v;
  }
  return g;
}

/// Implicit access to R(t) = Res_elim(F, G)(t) through the Sylvester matrix:
/// R'(t)/R(t) = tr(S(t)^-1 S'(t)) and log|R(t)| from an equilibrated LU.
/// Lets a simultaneous root finder run on eliminants whose expanded
/// coefficients would be far outside double range.
class EliminantLogDeriv {
 public:
  EliminantLogDeriv(BivarGrid f, BivarGrid g) : F(std::move(f)), G(std::move(g)) {
    if (F.deg_elim <= 0 || G.deg_elim <= 0)
      throw DomainError("resultant needs positive degree in the eliminated variable");
    N = F.deg_elim + G.deg_elim;
  }

  int degree_bound() const { return F.deg_keep * G.deg_elim + G.deg_keep * F.deg_elim; }

  CD logderiv(CD t) const {
    Eigen::MatrixXcd S, dS;
    build(t, S, dS);
    equilibrate(S, dS);
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(S);
    return lu.solve(dS).trace();
  }

  /// log |R(t)| shifted by the constant coming from grid normalization.
  double log_abs_shifted(CD t) const {
    Eigen::MatrixXcd S, dS;
    build(t, S, dS);
    double shift = equilibrate(S, dS);
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(S);
    double out = shift;
    for (int i = 0; i < N; ++i) out += std::log(std::abs(lu.matrixLU()(i, i)));
    return out;
  }

  /// Exact degree of R, measured from t R'(t)/R(t) far outside the root
  /// region. Averaging over four rays cancels the leading correction terms.
  int measured_degree(double far = 300.0) const {
    double acc = 0.0;
    for (int k = 0; k < 4; ++k) {
      double th = 1.5707963267948966 * k + 0.19;
      CD t = far * CD(std::cos(th), std::sin(th));
      acc += (t * logderiv(t)).real();
    }
    double est = acc / 4.0;
    long r = std::lround(est);
    if (!std::isfinite(est) || std::abs(est - double(r)) > 0.2 || r < 0 || r > degree_bound())
      throw NumericalError("eliminant degree measurement is inconsistent");
    return int(r);
  }

 private:
  BivarGrid F, G;
  int N = 0;

  static CD horner(const std::vector<double>& c, CD t) {
    CD v(0);
    for (std::size_t k = c.size(); k-- > 0;) v = v * t + c[k];
    return v;
  }
  static CD horner_d(const std::vector<double>& c, CD t) {
    CD v(0);
    for (std::size_t k = c.size(); k-- > 1;) v = v * t + double(k) * c[k];
    return v;
  }

  void build(CD t, Eigen::MatrixXcd& S, Eigen::MatrixXcd& dS) const {
    std::vector<CD> fv(std::size_t(F.deg_elim) + 1), fd(fv.size());
    std::vector<CD> gv(std::size_t(G.deg_elim) + 1), gd(gv.size());
    for (int j = 0; j <= F.deg_elim; ++j) {
      fv[std::size_t(j)] = horner(F.rows[std::size_t(j)], t);
      fd[std::size_t(j)] = horner_d(F.rows[std::size_t(j)], t);
    }
    for (int j = 0; j <= G.deg_elim; ++j) {
      gv[std::size_t(j)] = horner(G.rows[std::size_t(j)], t);
      gd[std::size_t(j)] = horner_d(G.rows[std::size_t(j)], t);
    }
    S = Eigen::MatrixXcd::Zero(N, N);
    dS = Eigen::MatrixXcd::Zero(N, N);
    for (int r = 0; r < G.deg_elim; ++r)
      for (int i = 0; i <= F.deg_elim; ++i) {
        S(r, r + i) = fv[std::size_t(F.deg_elim - i)];
        dS(r, r + i) = fd[std::size_t(F.deg_elim - i)];
      }
    for (int r = 0; r < F.deg_elim; ++r)
      for (int i = 0; i <= G.deg_elim; ++i) {
        S(G.deg_elim + r, r + i) = gv[std::size_t(G.deg_elim - i)];
        dS(G.deg_elim + r, r + i) = gd[std::size_t(G.deg_elim - i)];
      }
  }

  /// Scales each row of S (and dS identically) to unit max entry so the LU
  /// never overflows; returns the sum of the removed log factors. Row
  /// scaling cancels in tr(S^-1 S').
  double equilibrate(Eigen::MatrixXcd& S, Eigen::MatrixXcd& dS) const {
    double shift = 0.0;
    for (int r = 0; r < N; ++r) {
      double m = 0.0;
      for (int j = 0; j < N; ++j) m = std::max(m, std::abs(S(r, j)));
      if (m == 0.0) continue;
      S.row(r) /= m;
      dS.row(r) /= m;
      shift += std::log(m);
    }
    return shift;
  }
};

}  // namespace dynbif
