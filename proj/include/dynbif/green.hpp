#pragma once

#include <cstring>
#include <unordered_set>

#include "certificate.hpp"
#include "family.hpp"

namespace dynbif {

/// Escape radius: for |z| >= the returned R, every non-leading term of P
/// is at most |z|^d / (2d(d-1)), so
///   |z|^d/(2d) <= |P(z)| <= 3|z|^d/(2d)  and  |P(z)| >= 2|z|.
inline double escape_bound(const ParamCD& p) {
  const int d = p.d;
  double R = 1.0;
  R = std::max(R, std::abs(p.a));
  for (auto& ci : p.c) R = std::max(R, std::abs(ci));
  R = std::max(R, std::pow(4.0 * d, 1.0 / (d - 1)));
  const double m = 2.0 * d * (d - 1);
  R = std::max(R, std::pow(m, 1.0 / d) * std::abs(p.a));
  auto sig = elementary_symmetric(p.c);
  for (int j = 2; j <= d - 1; ++j) {
    double s = std::abs(sig[std::size_t(d - j)]);
    if (s > 0.0) R = std::max(R, std::pow(m / j * s, 1.0 / (d - j)));
  }
  return R;
}

namespace detail {
struct BitsHash {
  std::size_t operator()(const std::pair<std::uint64_t, std::uint64_t>& k) const {
    return std::hash<std::uint64_t>()(k.first * 1000003u ^ k.second);
  }
};
inline std::pair<std::uint64_t, std::uint64_t> bits_of(CD z) {
  std::uint64_t re, im;
  double x = z.real(), y = z.imag();
  std::memcpy(&re, &x, 8);
  std::memcpy(&im, &y, 8);
  return {re, im};
}
}  // namespace detail

/// Certified escape-rate potential g_{c,a}(z) = lim d^{-n} log^+ |P^n(z)|.
///
/// Branches:
///  - exact bitwise orbit repeat: g = 0 with zero error
///  - orbit inside the escape radius through step N: g in [0, d^{-N} log R],
///    reported once the bracket is below tol
///  - escape: telescoped sum with per-step defect at most log(2d) past R,
///    continued in log coordinates beyond 1e100 where the defect drops to
///    R/|z| per step
inline CertifiedValue green_point(const ParamCD& p, CD z, double tol,
                                  int max_iter = 5000) {
  if (!(tol > 0)) throw ConfigError("green_point: tol must be positive");
  const int d = p.d;
  const double R = escape_bound(p);
  const double logR = std::log(R);
  const double defect = std::log(2.0 * d);

  std::unordered_set<std::pair<std::uint64_t, std::uint64_t>, detail::BitsHash>
      seen;
  double scale = 1.0;
  int n = 0;
  while (std::abs(z) < R) {
    double ub = scale * logR;
    if (ub <= tol) return {ub / 2, ub / 2};
    if (seen.size() < 65536 && !seen.insert(detail::bits_of(z)).second)
      return {0.0, 0.0};
    if (n >= max_iter)
      throw BudgetError("green_point: bounded orbit not certified at budget");
    z = eval_P(p, z);
    scale /= d;
    ++n;
  }

  double val = scale * std::log(std::abs(z));
  double tail = scale * defect / (d - 1);
  double fp = 1e-14 * (1.0 + std::abs(val));
  double L = 0.0;
  bool logs = false;
  while (tail > tol / 2 && n < max_iter) {
    if (!logs && std::abs(z) >= 1e100) {
      logs = true;
      L = std::log(std::abs(z));
    }
    if (logs) {
      double Lnext = d * L - std::log(double(d));
      scale /= d;
      val += scale * (Lnext - d * L);
      fp += scale * 2.0 * R * std::exp(-L);
      L = Lnext;
    } else {
      double prev = std::log(std::abs(z));
      z = eval_P(p, z);
      scale /= d;
      val += scale * (std::log(std::abs(z)) - d * prev);
      fp += 1e-15 * (1.0 + std::abs(val));
    }
    tail = scale * defect / (d - 1);
    ++n;
  }
  if (tail > tol / 2)
    throw BudgetError("green_point: escape tail not certified at budget");
  return {val, tail + fp};
}

/// G(c,a): max of g over the marked critical points, as a certified interval.
inline CertifiedValue G_point(const ParamCD& p, double tol,
                              int max_iter = 5000) {
  double lo = 0.0, hi = 0.0;
  bool first = true;
  std::vector<CD> crit = critical_points(p);
  for (CD c : crit) {
    CertifiedValue g = green_point(p, c, tol, max_iter);
    double l = g.value - g.error, h = g.value + g.error;
    if (first) {
      lo = l;
      hi = h;
      first = false;
    } else {
      lo = std::max(lo, l);
      hi = std::max(hi, h);
    }
  }
  lo = std::max(lo, 0.0);
  hi = std::max(hi, 0.0);
  return {(lo + hi) / 2, (hi - lo) / 2};
}

/// Two-sided comparison of G with log^+ max(|c|, |a|):
///   M >= M0  implies  log M - A_minus <= G <= log M + A_plus
/// with K from the critical-value power certificate and kappa the largest
/// coefficient in the escape-radius formula.
struct BHConstants {
  double A_plus;
  double A_minus;
  double M0;
  double kappa;
  Rat K;
};

inline BHConstants bh_constants(int d) {
  double kappa = 1.0;
  kappa = std::max(kappa, std::pow(4.0 * d, 1.0 / (d - 1)));
  const double m = 2.0 * d * (d - 1);
  kappa = std::max(kappa, std::pow(m, 1.0 / d));
  for (int j = 2; j <= d - 1; ++j) {
    // |sigma_{d-j}(c)| <= binom(d-2, d-j) M^{d-j}
    double binom = 1.0;
    for (int t = 0; t < d - j; ++t) binom = binom * (d - 2 - t) / (t + 1);
    kappa = std::max(kappa, std::pow(m / j * binom, 1.0 / (d - j)));
  }
  Rat K = power_cert(d).K;
  BHConstants b;
  b.kappa = kappa;
  b.K = K;
  b.A_plus = std::log(kappa);
  b.A_minus = std::log(K.get_d()) / d + std::log(2.0 * d) / (d * (d - 1));
  b.M0 = std::max(1.0, std::pow(K.get_d() * kappa, 1.0 / (d - 1)));
  return b;
}

/// Rectangular sample of a scalar field over a complex plane region.
struct GridField {
  double x0 = 0, x1 = 0, y0 = 0, y1 = 0;
  int nx = 0, ny = 0;
  std::vector<double> values;
  std::vector<std::uint8_t> ok;

  double& at(int ix, int iy) { return values[std::size_t(iy) * nx + ix]; }
  double at(int ix, int iy) const { return values[std::size_t(iy) * nx + ix]; }
  double cx(int ix) const { return x0 + (x1 - x0) * (ix + 0.5) / nx; }
  double cy(int iy) const { return y0 + (y1 - y0) * (iy + 0.5) / ny; }
  double hx() const { return (x1 - x0) / nx; }
  double hy() const { return (y1 - y0) / ny; }
};

inline GridField make_grid(double x0, double x1, double y0, double y1, int nx,
                           int ny) {
  if (!(x1 > x0) || !(y1 > y0) || nx <= 0 || ny <= 0)
    throw ConfigError("grid region is degenerate");
  GridField g;
  g.x0 = x0;
  g.x1 = x1;
  g.y0 = y0;
  g.y1 = y1;
  g.nx = nx;
  g.ny = ny;
  g.values.assign(std::size_t(nx) * ny, 0.0);
  g.ok.assign(std::size_t(nx) * ny, 1);
  return g;
}

/// G over an a-plane region. For d = 3 the slice fixes c_1 = c1. Cells whose
/// evaluation exhausts the iteration budget keep ok = 0 and a zero value.
inline GridField G_grid(int d, CD c1, double x0, double x1, double y0,
                        double y1, int nx, int ny, double tol,
                        int threads = 1) {
  if (d != 2 && d != 3) throw ConfigError("G_grid supports degrees 2 and 3");
  GridField g = make_grid(x0, x1, y0, y1, nx, ny);
  parallel_for(std::size_t(nx) * ny, threads, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t k = lo; k < hi; ++k) {
      int ix = int(k % std::size_t(nx)), iy = int(k / std::size_t(nx));
      CD a(g.cx(ix), g.cy(iy));
      ParamCD p = d == 2 ? ParamCD(2, {}, a) : ParamCD(3, {c1}, a);
      try {
        g.values[k] = G_point(p, tol).value;
      } catch (const BudgetError&) {
        g.ok[k] = 0;
      }
    }
  });
  return g;
}

}  // namespace dynbif
