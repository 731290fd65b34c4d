#pragma once

#include <functional>
#include <optional>
#include <utility>

#include "family.hpp"

namespace dynbif {

/// Evaluates f and f' at a point. Root finders below only ever see this
/// interface, so callers can evaluate through orbit recursions instead of
/// expanded coefficient lists when the latter are badly scaled.
using FuncD = std::function<std::pair<CD, CD>(CD)>;

struct AberthOptions {
  int max_sweeps = 600;
  double tol = 5e-14;
  double radius = 2.5;
  // skip points whose correction stayed negligible for two sweeps; safe when
  // starts are jittered, unsafe when transient collisions can stall a pair
  bool freeze = false;
};

/// f'(z)/f(z) for a polynomial too large or too badly scaled to evaluate
/// directly. Values may be computed through log-scaled determinants.
using LogDeriv = std::function<CD(CD)>;

/// Aberth-Ehrlich driven purely by the logarithmic derivative. Identical to
/// aberth() except that the Newton correction is 1/L. A warm start the size
/// of deg replaces the default circle configuration.
inline std::vector<CD> aberth_logd(const LogDeriv& L, int deg, AberthOptions opt = {},
                                   std::vector<CD> starts = {}) {
  if (deg <= 0) return {};
  std::vector<CD> z(static_cast<std::size_t>(deg));
  const double tau = 6.283185307179586476925287;
  if (int(starts.size()) == deg) {
    z = std::move(starts);
  } else {
    for (int i = 0; i < deg; ++i) {
      double th = tau * i / deg + 0.3779;
      double r = opt.radius * (1.0 + 0.13 * std::cos(3.17 * i + 0.5));
      z[std::size_t(i)] = CD(r * std::cos(th), r * std::sin(th) + 1e-3);
    }
  }
  // frozen points still repel the active ones
  std::vector<signed char> calm(static_cast<std::size_t>(deg), 0);
  for (int sweep = 0; sweep < opt.max_sweeps; ++sweep) {
    double worst = 0.0;
    int active = 0;
    for (int i = 0; i < deg; ++i) {
      if (opt.freeze && calm[std::size_t(i)] >= 2) continue;
      ++active;
      CD zi = z[std::size_t(i)];
      CD lv = L(zi);
      CD N;
      double al = std::abs(lv);
      if (std::isnan(al))
        N = zi / double(deg);
      else if (al > 1e290)
        N = CD(0);
      else if (al > 1e-290)
        N = CD(1) / lv;
      else
        N = zi / double(deg);
      CD S(0);
      for (int j = 0; j < deg; ++j) {
        if (j == i) continue;
        CD diff = zi - z[std::size_t(j)];
        if (std::abs(diff) < 1e-290) continue;
        S += CD(1) / diff;
      }
      CD denom = CD(1) - N * S;
      CD w = std::abs(denom) > 1e-290 ? N / denom : N;
      z[std::size_t(i)] = zi - w;
      double aw = std::abs(w);
      calm[std::size_t(i)] =
          static_cast<signed char>(aw < opt.tol * (1.0 + std::abs(zi)) ? calm[std::size_t(i)] + 1 : 0);
      worst = std::max(worst, aw);
    }
    if (active == 0 || worst < opt.tol * (1.0 + opt.radius)) break;
  }
  return z;
}

/// Aberth-Ehrlich on a polynomial given by (value, derivative) evaluations.
/// Multiple roots come back as tight clusters of simple approximations; feed
/// the result to cluster_roots.
inline std::vector<CD> aberth(const FuncD& f, int deg, AberthOptions opt = {}) {
  return aberth_logd(
      [&f](CD z) {
        auto [fv, dv] = f(z);
        return dv / fv;
      },
      deg, opt);
}

/// FuncD view of a dense coefficient list (index = power). Trailing zero
/// coefficients should be stripped by the caller; exact zero roots are better
/// handled exactly.
inline FuncD poly_funcd(std::vector<CD> coef) {
  return [c = std::move(coef)](CD z) {
    CD v(0), d(0);
    for (std::size_t k = c.size(); k-- > 0;) {
      d = d * z + v;
      v = v * z + c[k];
    }
    return std::make_pair(v, d);
  };
}

/// All roots of the polynomial with the given dense coefficients. Strips
/// leading zeros, factors out the exact power of z, and sizes the start
/// circle from the coefficients.
inline std::vector<CD> poly_roots(std::vector<CD> coef, AberthOptions opt = {}) {
  while (coef.size() > 1 && std::abs(coef.back()) == 0.0) coef.pop_back();
  if (coef.size() <= 1) return {};
  std::size_t zeros = 0;
  while (zeros < coef.size() && std::abs(coef[zeros]) == 0.0) ++zeros;
  std::vector<CD> out(zeros, CD(0));
  coef.erase(coef.begin(), coef.begin() + std::ptrdiff_t(zeros));
  if (coef.size() <= 1) return out;
  double lead = std::abs(coef.back());
  double r = 0.0;
  for (std::size_t k = 0; k + 1 < coef.size(); ++k) {
    double m = std::abs(coef[k]) / lead;
    if (m > 0) r = std::max(r, 2.0 * std::pow(m, 1.0 / double(coef.size() - 1 - k)));
  }
  opt.radius = std::max(0.5, std::min(r, 1e6));
  auto rest = aberth(poly_funcd(coef), int(coef.size()) - 1, opt);
  out.insert(out.end(), rest.begin(), rest.end());
  return out;
}

inline CD newton_polish(const FuncD& f, CD z, int iters = 50, double tol = 1e-15) {
  for (int k = 0; k < iters; ++k) {
    auto [fv, dv] = f(z);
    if (!(std::abs(dv) > 0.0) || !std::isfinite(std::abs(fv))) break;
    CD step = fv / dv;
    z -= step;
    if (std::abs(step) < tol * (1.0 + std::abs(z))) break;
  }
  return z;
}

struct RootCluster {
  CD center;
  int multiplicity = 1;
  double radius = 0.0;
};

/// Groups approximations lying within eps of each other (transitively) and
/// reports centroid, count, and spread. The count is the multiplicity
/// estimate when the input came from a simultaneous solver.
inline std::vector<RootCluster> cluster_roots(const std::vector<CD>& r, double eps) {
  std::vector<RootCluster> out;
  std::vector<char> used(r.size(), 0);
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (used[i]) continue;
    std::vector<std::size_t> comp{i};
    used[i] = 1;
    for (std::size_t head = 0; head < comp.size(); ++head) {
      for (std::size_t j = 0; j < r.size(); ++j) {
        if (used[j]) continue;
        if (std::abs(r[comp[head]] - r[j]) < eps) {
          used[j] = 1;
          comp.push_back(j);
        }
      }
    }
    CD sum(0);
    for (auto k : comp) sum += r[k];
    RootCluster c;
    c.center = sum / double(comp.size());
    c.multiplicity = int(comp.size());
    for (auto k : comp) c.radius = std::max(c.radius, std::abs(r[k] - c.center));
    out.push_back(c);
  }
  return out;
}

/// Best rational approximation with denominator at most maxden, accepted only
/// when it lands within tol. Continued fraction convergents, so the result is
/// already reduced.
inline std::optional<Rat> snap_rat(double x, long maxden, double tol) {
  if (!std::isfinite(x)) return std::nullopt;
  long p0 = 1, q0 = 0;
  long p1 = (long)std::llround(std::floor(x)), q1 = 1;
  double frac = x - std::floor(x);
  for (int it = 0; it < 64; ++it) {
    if (std::abs(x - double(p1) / double(q1)) <= tol) {
      Rat r(p1);
      r /= q1;
      return r;
    }
    if (frac < 1e-14) break;
    double inv = 1.0 / frac;
    if (inv > 9e17) break;
    long step = (long)std::floor(inv);
    frac = inv - std::floor(inv);
    long p2 = step * p1 + p0, q2 = step * q1 + q0;
    if (q2 > maxden || q2 <= 0) break;
    p0 = p1;
    q0 = q1;
    p1 = p2;
    q1 = q2;
  }
  return std::nullopt;
}

inline std::optional<GaussRat> snap_gaussian(CD z, long maxden, double tol) {
  auto re = snap_rat(z.real(), maxden, tol);
  auto im = snap_rat(z.imag(), maxden, tol);
  if (!re || !im) return std::nullopt;
  return GaussRat(*re, *im);
}

}  // namespace dynbif
