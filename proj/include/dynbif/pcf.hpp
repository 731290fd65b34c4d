#pragma once

#include <algorithm>
#include <array>

#include "angles.hpp"
#include "resultant.hpp"

namespace dynbif {

/// One solution of a critical-orbit collision system in (c_1..c_{d-2}, a).
struct PcfPoint {
  std::vector<CD> coords;
  std::vector<GaussRat> exact;
  bool is_exact = false;
  /// per critical index: minimal (preperiod, period), (-1,-1) if unresolved
  std::vector<std::pair<int, int>> exactness;
  /// smallest non-implied orbit distance divided by the accepted collision
  /// distance, per critical index; large means the classification is sharp
  std::vector<double> margin;
  double jacobian_det = 0.0;
  std::vector<std::array<int, 4>> relations;
  std::vector<std::pair<int, int>> degenerate;
  int multiplicity = 1;
  double residual = 0.0;
  double cluster_radius = 0.0;
  bool ill_conditioned = false;
};

struct PcfSolutionSet {
  int d = 2;
  std::vector<int> m, n;
  std::vector<PcfPoint> points;
  std::string method;
  long bezout = 0;
  long eliminant_degree = 0;
  double max_residual = 0.0;
};

struct PcfOptions {
  long bezout_cap = 5000;
  double residual_tol = 1e-10;
  double cluster_eps = 1e-6;
  long snap_den = 64;
  int classify_steps = 256;
  double classify_tol = 1e-9;
  long exact_elim_budget = 700;
  /// back-substituted branches are kept when Newton ends below accept_res
  /// without moving farther than accept_move
  double accept_res = 1e-8;
  double accept_move = 0.1;
  /// polished points closer than this are the same solution
  double post_eps = 1e-4;
};

/// The d-1 exact collision polynomials P^{m_i}(c_i) - P^{n_i}(c_i) in the
/// variables (c_1..c_{d-2}, a). Each has total degree exactly d^{m_i}.
inline std::vector<SymbolicPoly> build_system(int d, const std::vector<int>& m,
                                              const std::vector<int>& n) {
  if (d != 2 && d != 3) throw DomainError("collision systems cover degrees 2 and 3");
  if (int(m.size()) != d - 1 || n.size() != m.size())
    throw DomainError("need one iterate pair per critical point");
  std::vector<SymbolicPoly> out;
  for (int i = 0; i < d - 1; ++i) {
    if (n[std::size_t(i)] < 0 || m[std::size_t(i)] <= n[std::size_t(i)])
      throw DomainError("iterate pairs need m > n >= 0");
    long deg = 1;
    for (int s = 0; s < m[std::size_t(i)]; ++s) {
      deg *= d;
      if (deg > (1L << 26)) throw BudgetError("iterate degree is out of reach");
    }
    std::size_t budget = std::size_t(deg + 1) * (d == 2 ? 1 : std::size_t(deg / 3 + 2)) + 16;
    budget = std::max(budget, kTermBudget);
    SymbolicPoly z = i == 0 ? SymbolicPoly(Rat(0)) : SymbolicPoly::variable("c" + std::to_string(i));
    std::vector<SymbolicPoly> orb{z};
    for (int k = 0; k < m[std::size_t(i)]; ++k) orb.push_back(family_step(d, orb.back(), budget));
    SymbolicPoly F = orb[std::size_t(m[std::size_t(i)])] - orb[std::size_t(n[std::size_t(i)])];
    if (F.total_degree() != deg) throw NumericalError("collision polynomial degree drifted");
    out.push_back(F);
  }
  return out;
}

/// Value and gradient with respect to (c_1..c_{d-2}, a) of P^k(crit), where
/// crit indexes the critical points {0, c_1, ..., c_(d-2)}. Forward
/// recursion; the starting point itself carries dc_i/dc_i = 1.
struct OrbitJet {
  CD value;
  std::vector<CD> grad;
};

inline OrbitJet orbit_jet(const ParamCD& p, int crit, int k) {
  const int np = p.d - 1;
  std::vector<CD> g(std::size_t(np), CD(0));
  CD z(0);
  if (crit > 0) {
    z = p.c[std::size_t(crit - 1)];
    g[std::size_t(crit - 1)] = CD(1);
  }
  auto coef = family_coeffs(p);
  for (int s = 0; s < k; ++s) {
    CD dz = eval_dP(p, z);
    std::vector<CD> ng(static_cast<std::size_t>(np));
    for (int i = 0; i < p.d - 2; ++i) {
      std::vector<CD> reduced;
      for (int t = 0; t < p.d - 2; ++t)
        if (t != i) reduced.push_back(p.c[std::size_t(t)]);
      auto sig = elementary_symmetric(reduced);
      CD acc(0);
      for (int j = 2; j <= p.d - 1; ++j) {
        int idx = p.d - j - 1;
        if (idx < 0 || idx > int(reduced.size())) continue;
        CD term = sig[std::size_t(idx)] * spow(z, j) / double(j);
        acc += ((p.d - j) % 2 == 0) ? term : -term;
      }
      ng[std::size_t(i)] = dz * g[std::size_t(i)] + acc;
    }
    CD da = double(p.d) * spow(p.a, p.d - 1);
    ng[std::size_t(np - 1)] = dz * g[std::size_t(np - 1)] + da;
    z = eval_poly(coef, z);
    g = ng;
  }
  return {z, g};
}

inline CD system_value(const ParamCD& p, int i, int mi, int ni) {
  return orbit_jet(p, i, mi).value - orbit_jet(p, i, ni).value;
}

/// |det| of the (d-1)x(d-1) Jacobian of the collision system at p.
inline double transversality(const ParamCD& p, const std::vector<int>& m,
                             const std::vector<int>& n) {
  const int np = p.d - 1;
  Eigen::MatrixXcd J(np, np);
  for (int i = 0; i < np; ++i) {
    OrbitJet hi = orbit_jet(p, i, m[std::size_t(i)]);
    OrbitJet lo = orbit_jet(p, i, n[std::size_t(i)]);
    for (int j = 0; j < np; ++j)
      J(i, j) = hi.grad[std::size_t(j)] - lo.grad[std::size_t(j)];
  }
  return std::abs(J.determinant());
}

/// Newton iteration on the full collision system. Updates x = (c..., a) in
/// place and returns the final max residual. frozen_a pins the last
/// coordinate, which is what the a=0 branches of the cubic lane need since
/// dP/da vanishes identically there.
inline double newton_system(int d, std::vector<CD>& x, const std::vector<int>& m,
                            const std::vector<int>& n, bool frozen_a = false, int iters = 60) {
  const int np = d - 1;
  const int nv = frozen_a ? np - 1 : np;
  for (int it = 0; it < iters && nv > 0; ++it) {
    ParamCD p(d, std::vector<CD>(x.begin(), x.end() - 1), x.back());
    Eigen::MatrixXcd J(np, nv);
    Eigen::VectorXcd F(np);
    for (int i = 0; i < np; ++i) {
      OrbitJet hi = orbit_jet(p, i, m[std::size_t(i)]);
      OrbitJet lo = orbit_jet(p, i, n[std::size_t(i)]);
      F(i) = hi.value - lo.value;
      for (int j = 0; j < nv; ++j)
        J(i, j) = hi.grad[std::size_t(j)] - lo.grad[std::size_t(j)];
    }
    double res = F.cwiseAbs().maxCoeff();
    if (!std::isfinite(res)) break;
    if (res == 0.0) break;
    Eigen::VectorXcd step = J.fullPivLu().solve(F);
    double sn = step.cwiseAbs().maxCoeff();
    if (!std::isfinite(sn) || sn > 1e3) break;
    for (int j = 0; j < nv; ++j) x[std::size_t(j)] -= step(j);
    if (sn < 1e-15) break;
  }
  ParamCD p(d, std::vector<CD>(x.begin(), x.end() - 1), x.back());
  double out = 0.0;
  for (int i = 0; i < np; ++i)
    out = std::max(out, std::abs(system_value(p, i, m[std::size_t(i)], n[std::size_t(i)])));
  return out;
}

/// Minimal (preperiod, period) of each critical orbit, with the runner-up
/// separation ratio. Uses the exact orbit when the point carries verified
/// exact coordinates, the floating orbit otherwise. When the solved iterate
/// pair is known it is passed in, and minimization walks the divisor lattice
/// of that relation instead of trusting the first near-return, which deep
/// orbits fake.
inline void pcf_classify(PcfPoint& pt, int d, const PcfOptions& opt,
                         const std::vector<int>* ms = nullptr,
                         const std::vector<int>* ns = nullptr) {
  const int nc = d - 1;
  pt.exactness.assign(std::size_t(nc), {-1, -1});
  pt.margin.assign(std::size_t(nc), 0.0);
  if (pt.is_exact) {
    Param<GaussRat> p(d, std::vector<GaussRat>(pt.exact.begin(), pt.exact.end() - 1),
                      pt.exact.back());
    for (int i = 0; i < nc; ++i) {
      GaussRat z = i == 0 ? GaussRat() : p.c[std::size_t(i - 1)];
      std::vector<GaussRat> orb{z};
      for (int s = 0; s < opt.classify_steps; ++s) {
        z = eval_P(p, z);
        bool hit = false;
        for (std::size_t j = 0; j < orb.size(); ++j)
          if (orb[j] == z) {
            pt.exactness[std::size_t(i)] = {int(j), int(orb.size() - j)};
            pt.margin[std::size_t(i)] = 1e308;
            hit = true;
            break;
          }
        if (hit) break;
        orb.push_back(z);
      }
    }
    return;
  }
  ParamCD p(d, std::vector<CD>(pt.coords.begin(), pt.coords.end() - 1), pt.coords.back());
  double esc = 4.0 + std::abs(p.a);
  for (auto& ci : p.c) esc = std::max(esc, 4.0 + std::abs(ci));
  auto coef = family_coeffs(p);
  for (int i = 0; i < nc; ++i) {
    std::vector<CD> orb{i == 0 ? CD(0) : p.c[std::size_t(i - 1)]};
    // a repelling landing cycle drifts off numerically after the collision,
    // so an escaping tail still leaves a scannable prefix
    for (int s = 0; s < opt.classify_steps; ++s) {
      CD z = eval_poly(coef, orb.back());
      if (!std::isfinite(std::abs(z)) || std::abs(z) > esc * esc) break;
      orb.push_back(z);
    }
    int bn = -1, bq = 0;
    double dmin = 1e300;
    std::size_t window = orb.size();
    if (ms) {
      int mi = (*ms)[std::size_t(i)], ni = (*ns)[std::size_t(i)];
      int gap = mi - ni;
      if (int(orb.size()) > mi &&
          std::abs(orb[std::size_t(mi)] - orb[std::size_t(ni)]) < opt.classify_tol) {
        for (int g = 1; g <= gap; ++g) {
          if (gap % g != 0) continue;
          if (std::abs(orb[std::size_t(ni + g)] - orb[std::size_t(ni)]) < opt.classify_tol) {
            bq = g;
            break;
          }
        }
        bn = ni;
        while (bn > 0 && std::abs(orb[std::size_t(bn - 1 + bq)] - orb[std::size_t(bn - 1)]) <
                             opt.classify_tol)
          --bn;
        dmin = std::abs(orb[std::size_t(bn + bq)] - orb[std::size_t(bn)]);
        // the drifted tail of a repelling landing wanders near the cycle and
        // would pollute the runner-up scan with fake near-returns
        window = std::min(window, std::size_t(mi + 2 * gap + 8));
      }
    }
    if (bn < 0)
      for (std::size_t j = 0; j < orb.size() && bn < 0; ++j)
        for (std::size_t k = j + 1; k < orb.size(); ++k)
          if (std::abs(orb[k] - orb[j]) < opt.classify_tol) {
            bn = int(j);
            bq = int(k - j);
            dmin = std::abs(orb[k] - orb[j]);
            break;
          }
    if (bn < 0) continue;
    double runner = 1e300;
    for (std::size_t j = 0; j < window; ++j)
      for (std::size_t k = j + 1; k < window; ++k) {
        bool implied = int(j) >= bn && int(k - j) % bq == 0;
        if (!implied) runner = std::min(runner, std::abs(orb[k] - orb[j]));
      }
    pt.exactness[std::size_t(i)] = {bn, bq};
    pt.margin[std::size_t(i)] = runner / std::max(dmin, 1e-300);
    if (pt.margin[std::size_t(i)] < 10.0) pt.ill_conditioned = true;
  }
}

/// Coincidences P^l(c_i) = P^l'(c_j) between distinct critical orbits up to
/// depth L, plus degenerate critical point pairs c_i = c_j. Orbit scanning
/// skips degenerate pairs, whose coincidences are wholesale.
inline void critical_relations(PcfPoint& pt, int d, int L, double tol) {
  pt.relations.clear();
  pt.degenerate.clear();
  ParamCD p(d, std::vector<CD>(pt.coords.begin(), pt.coords.end() - 1), pt.coords.back());
  auto crit = critical_points(p);
  for (std::size_t i = 0; i < crit.size(); ++i)
    for (std::size_t j = i + 1; j < crit.size(); ++j)
      if (std::abs(crit[i] - crit[j]) < tol) pt.degenerate.push_back({int(i), int(j)});
  std::vector<std::vector<CD>> orbs;
  for (auto& c : crit) {
    auto o = orbit(p, c, L);
    for (auto& z : o)
      if (!std::isfinite(std::abs(z))) {
        o.clear();
        break;
      }
    orbs.push_back(o);
  }
  for (std::size_t i = 0; i < orbs.size(); ++i)
    for (std::size_t j = i + 1; j < orbs.size(); ++j) {
      bool degen = false;
      for (auto& dg : pt.degenerate)
        if (dg.first == int(i) && dg.second == int(j)) degen = true;
      if (degen) continue;
      for (std::size_t l = 0; l < orbs[i].size(); ++l)
        for (std::size_t lp = 0; lp < orbs[j].size(); ++lp)
          if (std::abs(orbs[i][l] - orbs[j][lp]) < tol)
            pt.relations.push_back({int(i), int(j), int(l), int(lp)});
    }
}

/// Snap to Gaussian rationals with small denominators and keep only exactly
/// verified collisions.
inline void pcf_snap(PcfPoint& pt, int d, const std::vector<int>& m, const std::vector<int>& n,
                     const PcfOptions& opt) {
  std::vector<GaussRat> ex;
  for (auto& z : pt.coords) {
    auto g = snap_gaussian(z, opt.snap_den, 64.0 * std::max(pt.cluster_radius, 1e-9));
    if (!g) return;
    ex.push_back(*g);
  }
  Param<GaussRat> p(d, std::vector<GaussRat>(ex.begin(), ex.end() - 1), ex.back());
  for (int i = 0; i < d - 1; ++i) {
    GaussRat z = i == 0 ? GaussRat() : p.c[std::size_t(i - 1)];
    auto orb = orbit(p, z, m[std::size_t(i)]);
    if (!(orb[std::size_t(m[std::size_t(i)])] == orb[std::size_t(n[std::size_t(i)])])) return;
  }
  pt.exact = ex;
  pt.is_exact = true;
  for (std::size_t i = 0; i < pt.coords.size(); ++i) pt.coords[i] = ex[i].to_cd();
}

/// Rebuilds each ζ-orbit from one representative so the reported set is
/// closed under a -> ζa to the last bit. Points are grouped by the c block
/// and |a|; exact members win the representative slot.
inline void symmetry_closure(PcfSolutionSet& out, double eps) {
  const int d = out.d;
  const double tau = 6.283185307179586476925287;
  CD zeta = d == 2 ? CD(-1, 0) : CD(std::cos(tau / d), std::sin(tau / d));
  std::vector<char> done(out.points.size(), 0);
  for (std::size_t i = 0; i < out.points.size(); ++i) {
    if (done[i]) continue;
    done[i] = 1;
    CD ai = out.points[i].coords.back();
    if (std::abs(ai) < eps) continue;
    std::vector<std::size_t> group{i};
    for (std::size_t j = i + 1; j < out.points.size(); ++j) {
      if (done[j]) continue;
      double dc = 0.0;
      for (std::size_t k = 0; k + 1 < out.points[i].coords.size(); ++k)
        dc = std::max(dc, std::abs(out.points[i].coords[k] - out.points[j].coords[k]));
      double da = std::abs(std::abs(out.points[j].coords.back()) - std::abs(ai));
      if (dc < eps && da < eps) {
        done[j] = 1;
        group.push_back(j);
      }
    }
    if (group.size() < 2) continue;
    // a group can hold several ζ-orbits sharing |a|; pair them all off
    std::vector<char> taken(group.size(), 0);
    for (std::size_t start = 0; start < group.size(); ++start) {
      std::size_t r = group.size();
      for (std::size_t k = 0; k < group.size(); ++k)
        if (!taken[k] && out.points[group[k]].is_exact) {
          r = k;
          break;
        }
      if (r == group.size())
        for (std::size_t k = 0; k < group.size(); ++k)
          if (!taken[k]) {
            r = k;
            break;
          }
      if (r == group.size()) break;
      taken[r] = 1;
      std::size_t rep = group[r];
      CD rot = out.points[rep].coords.back();
      for (int s = 1; s < d; ++s) {
        rot = rot * zeta;
        std::size_t best = group.size();
        double bd = 1e300;
        for (std::size_t k = 0; k < group.size(); ++k) {
          if (taken[k]) continue;
          double dd = std::abs(out.points[group[k]].coords.back() - rot);
          if (dd < bd) {
            bd = dd;
            best = k;
          }
        }
        if (best == group.size() || bd > 1e3 * eps) continue;
        taken[best] = 1;
        auto& q = out.points[group[best]];
        if (!q.is_exact) {
          for (std::size_t k = 0; k + 1 < q.coords.size(); ++k)
            q.coords[k] = out.points[rep].coords[k];
          q.coords.back() = rot;
        }
      }
    }
  }
}

/// Deterministic point order: lexicographic over coordinates rounded at 1e-9.
inline void canonical_sort(std::vector<PcfPoint>& pts) {
  std::sort(pts.begin(), pts.end(), [](const PcfPoint& x, const PcfPoint& y) {
    for (std::size_t i = 0; i < x.coords.size(); ++i) {
      double a = std::round(x.coords[i].real() * 1e9);
      double b = std::round(y.coords[i].real() * 1e9);
      if (a != b) return a < b;
      a = std::round(x.coords[i].imag() * 1e9);
      b = std::round(y.coords[i].imag() * 1e9);
      if (a != b) return a < b;
    }
    return false;
  });
}

inline void pcf_finalize(PcfSolutionSet& out, const PcfOptions& opt) {
  for (auto& pt : out.points) pcf_snap(pt, out.d, out.m, out.n, opt);
  symmetry_closure(out, opt.cluster_eps);
  int L = 1 + *std::max_element(out.m.begin(), out.m.end());
  for (auto& pt : out.points) {
    ParamCD p(out.d, std::vector<CD>(pt.coords.begin(), pt.coords.end() - 1), pt.coords.back());
    pt.jacobian_det = transversality(p, out.m, out.n);
    pcf_classify(pt, out.d, opt, &out.m, &out.n);
    critical_relations(pt, out.d, L, opt.classify_tol);
    out.max_residual = std::max(out.max_residual, pt.residual);
  }
  canonical_sort(out.points);
}

/// Orbit-driven logarithm of f = P^mi(0) + sign * P^ni(0) for the quadratic
/// family: log|f|, arg f, and the a-derivative f'/f. The expanded
/// coefficients span too many binades to survive a double conversion, so
/// root finding never sees them. Once the orbit escapes, every further
/// squaring doubles log|u| and the tail collapses into a power of two.
struct QuadLog {
  double re = 0;    // log|f|
  double im = 0;    // arg f, only meaningful mod 2*pi
  CD L{0};          // f'/f
  bool ok = false;  // false when f vanished or overflowed under evaluation
};

inline QuadLog quad_orbit_log(CD a, int mi, int ni, double sign) {
  const double tau = 6.283185307179586476925287;
  CD u(0), du(0), un(0), dun(0);
  for (int k = 1; k <= mi; ++k) {
    du = u * du + 2.0 * a;
    u = 0.5 * u * u + a * a;
    if (k == ni) {
      un = u;
      dun = du;
    }
    if (std::abs(u) > 1e60) {
      // the marked term dwarfs the other one past escape, so f behaves as u_mi
      double p = std::pow(2.0, double(mi - k));
      QuadLog w;
      w.re = p * std::log(std::abs(u)) - (p - 1.0) * 0.6931471805599453;
      w.im = std::remainder(p * std::arg(u), tau);
      w.L = p * du / u;
      w.ok = true;
      return w;
    }
  }
  CD f = u + sign * un;
  double af = std::abs(f);
  QuadLog w;
  if (!(af > 0.0) || !std::isfinite(af)) {
    w.L = CD(1e300, 0.0);
    return w;
  }
  w.re = std::log(af);
  w.im = std::arg(f);
  w.L = (du + sign * dun) / f;
  w.ok = true;
  return w;
}

/// Follows one external ray of the factor from |a| = 3 down toward the zero
/// set. The corrector keeps both the level and the argument drift small, so
/// the path cannot slip onto a neighbouring ray; once the level is deep a
/// plain Newton run finishes simple landings, and multiple roots are reached
/// by flowing further down before retrying.
inline bool quad_flow_path(int mi, int ni, double sign, double theta, CD& root) {
  const double tau = 6.283185307179586476925287;
  CD a = std::polar(3.0, theta);
  QuadLog w = quad_orbit_log(a, mi, ni, sign);
  if (!w.ok) return false;
  double lvl = w.re, dt = 2.0;
  int bad = 0;
  for (int stage = 0; stage < 8000; ++stage) {
    double tgt = lvl - dt;
    CD asave = a;
    a -= dt / w.L;
    bool okc = false;
    QuadLog v;
    for (int it = 0; it < 12; ++it) {
      v = quad_orbit_log(a, mi, ni, sign);
      if (!v.ok || !std::isfinite(std::abs(v.L))) break;
      double drift = std::remainder(v.im - w.im, tau);
      if (std::abs(drift) > 1.5) break;
      CD gap(v.re - tgt, drift);
      if (std::abs(gap) < 1e-9 * (1.0 + std::abs(tgt))) {
        okc = true;
        break;
      }
      CD step = gap / v.L;
      if (!std::isfinite(std::abs(step)) || std::abs(step) > 0.5) break;
      a -= step;
    }
    if (!okc) {
      a = asave;
      dt *= 0.5;
      if (dt < 1e-6 || ++bad > 25) return false;
      continue;
    }
    bad = 0;
    lvl = tgt;
    w = v;
    w.im = std::remainder(w.im, tau);
    dt = std::min(dt * 1.25, 2.0);
    if (lvl < -8.0) {
      CD b = a;
      for (int it = 0; it < 80; ++it) {
        QuadLog q = quad_orbit_log(b, mi, ni, sign);
        if (!q.ok) break;
        CD step = CD(1.0) / q.L;
        b -= step;
        if (std::abs(step) < 1e-14) {
          root = b;
          return true;
        }
      }
      if (lvl < -300.0) return false;
    }
  }
  return false;
}

/// Every root of P^mi(0) + sign * P^ni(0), with multiplicity, as a flat
/// list. Small degrees run the circle-started simultaneous solver with the
/// double root at a = 0 deflated exactly; past that each ray is continued in
/// from the escape region and the landings warm-start the simultaneous pass,
/// which repairs missed or doubled landings with multiplicity-correct
/// clusters.
inline std::vector<CD> quad_factor_roots(int mi, int ni, double sign, const AberthOptions& base) {
  const double tau = 6.283185307179586476925287;
  int D = 1 << mi;
  if (D <= 256) {
    AberthOptions ao = base;
    ao.radius = 2.2;
    ao.freeze = true;
    auto r = aberth_logd(
        [mi, ni, sign](CD a) { return quad_orbit_log(a, mi, ni, sign).L - 2.0 / a; }, D - 2, ao);
    r.insert(r.end(), 2, CD(0));
    return r;
  }
  std::vector<CD> starts;
  starts.reserve(std::size_t(D));
  for (int i = 0; i < D; ++i) {
    double theta = tau * (i + 0.37) / D;
    CD r;
    if (quad_flow_path(mi, ni, sign, theta, r))
      starts.push_back(r + std::polar(3e-10, 2.39996 * i));
    else
      starts.push_back(std::polar(2.2 + 0.01 * (i % 7), theta));
  }
  AberthOptions ao = base;
  ao.radius = 2.2;
  ao.freeze = true;
  return aberth_logd([mi, ni, sign](CD a) { return quad_orbit_log(a, mi, ni, sign).L; }, D, ao,
                     std::move(starts));
}

/// All solutions of the d=2 system, which is univariate in a. The collision
/// polynomial factors along the orbit recursion,
///   u_m - u_n = u_{m-n}^2 * prod_{i=1..n-1} (u_{m-i} + u_{n-i}) / 2^n,
/// so each factor is root-found on its own and the lists merged. The factors
/// share no root away from a = 0, every center of period dividing the gap is
/// a genuine double root, and the sum factors carry the strictly preperiodic
/// solutions.
inline PcfSolutionSet pcf_solve_quadratic(const std::vector<int>& m, const std::vector<int>& n,
                                          const PcfOptions& opt) {
  PcfSolutionSet out;
  out.d = 2;
  out.m = m;
  out.n = n;
  out.method = "univariate";
  if (m[0] <= 0 || n[0] < 0 || n[0] >= m[0]) throw DomainError("iterate pairs need m > n >= 0");
  int D = 1 << m[0];
  out.bezout = D;
  out.eliminant_degree = D;
  AberthOptions ao;
  std::vector<CD> all;
  all.reserve(std::size_t(D));
  if (n[0] == 0) {
    all = quad_factor_roots(m[0], 0, -1.0, ao);
  } else {
    auto cen = quad_factor_roots(m[0] - n[0], 0, -1.0, ao);
    for (CD r : cen) {
      all.push_back(r);
      all.push_back(r);
    }
    for (int i = 1; i < n[0]; ++i) {
      auto s = quad_factor_roots(m[0] - i, n[0] - i, 1.0, ao);
      all.insert(all.end(), s.begin(), s.end());
    }
  }
  auto clusters = cluster_roots(all, std::min(opt.cluster_eps, 1e-8));
  for (auto& cl : clusters) {
    PcfPoint pt;
    pt.multiplicity = cl.multiplicity;
    pt.cluster_radius = cl.radius;
    std::vector<CD> x{cl.center};
    if (cl.multiplicity == 1) {
      pt.residual = newton_system(2, x, m, n);
      pt.coords = x;
    } else {
      // Newton drifts off a multiple root; keep the centroid
      pt.coords = {cl.center};
      ParamCD p(2, {}, cl.center);
      pt.residual = std::abs(system_value(p, 0, m[0], n[0]));
      pt.ill_conditioned = cl.radius > 1e-8;
    }
    out.points.push_back(pt);
  }
  pcf_finalize(out, opt);
  return out;
}

/// Splits an eliminant-root multiplicity across the fiber branches
/// proportionally to their own cluster multiplicities, preserving the total.
inline std::vector<int> distribute_multiplicity(int total, const std::vector<int>& weights) {
  long wsum = 0;
  for (int w : weights) wsum += w;
  std::vector<int> out(weights.size(), 0);
  if (wsum <= 0) return out;
  long given = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    out[i] = int((long(total) * weights[i]) / wsum);
    given += out[i];
  }
  std::size_t i = 0;
  while (given < total) {
    out[i % out.size()] += 1;
    ++given;
    ++i;
  }
  return out;
}

/// All solutions of the d=3 pair of collision equations. a enters only
/// through a^3, so the pair is rewritten in (c_1, a^3), a^3 is eliminated by
/// a resultant, the univariate eliminant in c_1 is solved, and fibers are
/// recovered by back-substitution. Small eliminants go through the exact
/// interpolated resultant; large ones are root-found implicitly from LU
/// evaluations of the Sylvester determinant. Cube roots of each fiber value
/// of a^3 restore the full solution list.
inline PcfSolutionSet pcf_solve_cubic(const std::vector<int>& m, const std::vector<int>& n,
                                      const PcfOptions& opt) {
  PcfSolutionSet out;
  out.d = 3;
  out.m = m;
  out.n = n;
  auto sys = build_system(3, m, n);
  long bez = 1;
  for (int mi : m)
    for (int s = 0; s < mi; ++s) bez *= 3;
  out.bezout = bez;
  SymbolicPoly A0 = power_compress(sys[0], "a", 3);
  SymbolicPoly A1 = power_compress(sys[1], "a", 3);
  BivarGrid g0 = bivar_grid(A0, "a", "c1");
  BivarGrid g1 = bivar_grid(A1, "a", "c1");
  long dbound = (long)g0.deg_keep * g1.deg_elim + (long)g1.deg_keep * g0.deg_elim;
  std::vector<CD> eroots;
  if (dbound <= opt.exact_elim_budget) {
    out.method = "eliminant-exact";
    RatPoly R = resultant_bivariate(A0, A1, "a", "c1", opt.exact_elim_budget);
    if (poly_deg(R) < 0) throw NumericalError("equations share a positive-dimensional component");
    out.eliminant_degree = poly_deg(R);
    double maxlog = -1e300;
    for (auto& x : R)
      if (x != 0) maxlog = std::max(maxlog, log_abs(x));
    long shift = std::lround(maxlog / M_LN2);
    std::vector<CD> rc;
    for (auto& x : R) {
      Rat y;
      if (shift >= 0)
        mpq_div_2exp(y.get_mpq_t(), x.get_mpq_t(), (unsigned long)shift);
      else
        mpq_mul_2exp(y.get_mpq_t(), x.get_mpq_t(), (unsigned long)(-shift));
      rc.push_back(CD(y.get_d(), 0.0));
    }
    eroots = poly_roots(rc);
  } else {
    out.method = "eliminant-implicit";
    EliminantLogDeriv el(g0, g1);
    int D = el.measured_degree();
    out.eliminant_degree = D;
    AberthOptions ao;
    ao.radius = 9.5;
    ao.max_sweeps = 900;
    eroots = aberth_logd([&el](CD t) { return el.logderiv(t); }, D, ao);
  }
  auto coeffs_at = [](const BivarGrid& g, CD t) {
    std::vector<CD> out_c;
    for (int j = 0; j <= g.deg_elim; ++j) {
      CD cj(0);
      for (std::size_t k = g.rows[std::size_t(j)].size(); k-- > 0;)
        cj = cj * t + g.rows[std::size_t(j)][k];
      out_c.push_back(cj);
    }
    return out_c;
  };
  // Back-substitution. A true eliminant root of multiplicity k scatters its
  // computed copies over a radius near eps^(1/k), far past cluster_eps, so
  // each cluster is treated as a fragment: every fiber branch over it is
  // Newton polished and kept as an atom when it converges in place.
  // Fragments whose atoms land on the same polished points are pooled, and
  // the pooled eliminant multiplicity is split over the pool's fiber
  // families. The a-level total stays at exactly 3 * deg R.
  struct Atom {
    CD c, a;
    bool zero;  // a = 0 branch, held exact during polish
    int fmult;  // fiber cluster multiplicity
    int frag, fam;
    double res, moved, rad;
    bool forced;
  };
  auto ecs = cluster_roots(eroots, opt.cluster_eps);
  std::vector<Atom> atoms;
  int nfam = 0;
  CD zeta3(-0.5, 0.8660254037844386467637232);
  for (std::size_t fi = 0; fi < ecs.size(); ++fi) {
    CD t = ecs[fi].center;
    auto fib = cluster_roots(poly_roots(coeffs_at(g0, t)), opt.cluster_eps);
    std::vector<Atom> cand;
    std::vector<char> keep;
    for (auto& fc : fib) {
      bool zf = fc.center == CD(0);
      std::vector<CD> branches;
      if (zf)
        branches.push_back(CD(0));
      else {
        double r = std::cbrt(std::abs(fc.center));
        double th = std::arg(fc.center) / 3.0;
        CD a0 = r * CD(std::cos(th), std::sin(th));
        branches = {a0, a0 * zeta3, a0 * zeta3 * zeta3};
      }
      int fam = nfam++;
      for (auto& a0 : branches) {
        std::vector<CD> x{t, a0};
        double res = newton_system(3, x, m, n, zf);
        double moved = std::max(std::abs(x[0] - t), std::abs(x[1] - a0));
        Atom at{x[0],
                x[1],
                zf || std::abs(x[1]) < 1e-9,
                fc.multiplicity,
                int(fi),
                fam,
                res,
                moved,
                std::max(ecs[fi].radius, fc.radius),
                false};
        cand.push_back(at);
        keep.push_back(res < opt.accept_res && moved < opt.accept_move);
      }
    }
    bool any = false;
    for (auto k : keep) any = any || k;
    if (!any && !cand.empty()) {
      // conservation fallback: keep the family that moved least
      std::size_t bi = 0;
      for (std::size_t k = 1; k < cand.size(); ++k)
        if (cand[k].moved < cand[bi].moved) bi = k;
      for (std::size_t k = 0; k < cand.size(); ++k)
        if (cand[k].fam == cand[bi].fam) {
          cand[k].forced = true;
          keep[k] = 1;
        }
    }
    for (std::size_t k = 0; k < cand.size(); ++k)
      if (keep[k]) atoms.push_back(cand[k]);
  }
  // cluster polished atoms by position
  std::vector<int> acl(atoms.size(), -1);
  int ncl = 0;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    if (acl[i] >= 0) continue;
    acl[i] = ncl;
    for (std::size_t j = i + 1; j < atoms.size(); ++j) {
      if (acl[j] >= 0) continue;
      double dd = std::max(std::abs(atoms[i].c - atoms[j].c), std::abs(atoms[i].a - atoms[j].a));
      if (dd < opt.post_eps * (1.0 + std::abs(atoms[i].c) + std::abs(atoms[i].a))) acl[j] = ncl;
    }
    ++ncl;
  }
  // pool fragments and fiber families through shared atom clusters
  std::vector<int> fpar(ecs.size());
  std::vector<int> mpar(static_cast<std::size_t>(nfam));
  for (std::size_t i = 0; i < fpar.size(); ++i) fpar[i] = int(i);
  for (std::size_t i = 0; i < mpar.size(); ++i) mpar[i] = int(i);
  auto find = [](std::vector<int>& p, int x) {
    while (p[std::size_t(x)] != x) {
      p[std::size_t(x)] = p[std::size_t(p[std::size_t(x)])];
      x = p[std::size_t(x)];
    }
    return x;
  };
  for (int cl = 0; cl < ncl; ++cl) {
    int fr = -1, mr = -1;
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      if (acl[i] != cl) continue;
      if (fr < 0) {
        fr = find(fpar, atoms[i].frag);
        mr = find(mpar, atoms[i].fam);
      } else {
        fpar[std::size_t(find(fpar, atoms[i].frag))] = fr;
        fr = find(fpar, fr);
        mpar[std::size_t(find(mpar, atoms[i].fam))] = mr;
        mr = find(mpar, mr);
      }
    }
  }
  std::map<int, long> pooled;
  for (std::size_t i = 0; i < ecs.size(); ++i)
    pooled[find(fpar, int(i))] += ecs[i].multiplicity;
  struct Fam {
    int group = -1;
    int fmult = 0;
    std::vector<int> clusters;
    bool zero = false, forced = false;
    double rad = 0.0;
  };
  std::map<int, Fam> fams;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    Fam& fm = fams[find(mpar, atoms[i].fam)];
    fm.group = find(fpar, atoms[i].frag);
    fm.fmult = std::max(fm.fmult, atoms[i].fmult);
    fm.zero = fm.zero || atoms[i].zero;
    fm.forced = fm.forced || atoms[i].forced;
    fm.rad = std::max(fm.rad, atoms[i].rad);
    if (std::find(fm.clusters.begin(), fm.clusters.end(), acl[i]) == fm.clusters.end())
      fm.clusters.push_back(acl[i]);
  }
  std::map<int, std::vector<int>> gfams;
  for (auto& [fr, fm] : fams) gfams[fm.group].push_back(fr);
  std::map<int, int> fammult;
  for (auto& [g, list] : gfams) {
    std::vector<int> w;
    for (int fr : list) w.push_back(fams[fr].fmult);
    auto mu = distribute_multiplicity(int(pooled[g]), w);
    for (std::size_t k = 0; k < list.size(); ++k) fammult[list[k]] = mu[k];
  }
  for (auto& [fr, fm] : fams) {
    int mu = fammult[fr];
    if (mu <= 0) continue;  // over-accepted duplicate of a neighboring root
    for (int cl : fm.clusters) {
      std::size_t best = atoms.size();
      for (std::size_t i = 0; i < atoms.size(); ++i)
        if (acl[i] == cl && find(mpar, atoms[i].fam) == fr &&
            (best == atoms.size() || atoms[i].res < atoms[best].res))
          best = i;
      if (best == atoms.size()) continue;
      PcfPoint pt;
      pt.coords = {atoms[best].c, atoms[best].a};
      pt.multiplicity = mu * (fm.zero ? 3 : 1);
      pt.residual = atoms[best].res;
      pt.cluster_radius = fm.rad;
      pt.ill_conditioned = fm.forced || (pt.multiplicity > 1 && fm.rad > 1e-8);
      out.points.push_back(pt);
    }
  }
  pcf_finalize(out, opt);
  return out;
}

inline PcfSolutionSet pcf_solve(int d, const std::vector<int>& m, const std::vector<int>& n,
                                const PcfOptions& opt = {}) {
  long bez = 1;
  for (int mi : m)
    for (int s = 0; s < mi; ++s) {
      bez *= d;
      if (bez > opt.bezout_cap) throw BudgetError("total solution count bound exceeds the cap");
    }
  if (d == 2) return pcf_solve_quadratic(m, n, opt);
  if (d == 3) return pcf_solve_cubic(m, n, opt);
  throw DomainError("solving covers degrees 2 and 3");
}

struct CountAudit {
  long card = 0;
  long mult_sum = 0;
  long bezout = 0;
  long eliminant_degree = 0;
  std::vector<long> portrait_counts;
  long on_variety = -1;
  double variety_ratio = 0.0;
};

/// Compares the computed cardinalities with the Bezout bound, the eliminant
/// degree, and the angle-portrait counts; optionally counts points on {V=0}.
inline CountAudit count_audit(const PcfSolutionSet& sols, const SymbolicPoly* V = nullptr,
                              double tol = 1e-8) {
  CountAudit a;
  a.card = long(sols.points.size());
  for (auto& pt : sols.points) a.mult_sum += pt.multiplicity;
  a.bezout = sols.bezout;
  a.eliminant_degree = sols.eliminant_degree;
  for (std::size_t i = 0; i < sols.m.size(); ++i) {
    int mi = sols.m[i], ni = sols.n[i];
    if (ni >= 1)
      a.portrait_counts.push_back(long(enumerate_P(sols.d, mi, ni).size()));
    else
      a.portrait_counts.push_back(count_exact_periodic(sols.d, mi));
  }
  if (V) {
    a.on_variety = 0;
    for (auto& pt : sols.points) {
      std::vector<CD> vals;
      for (auto& v : V->vars) {
        if (v != "a" && !(v.size() >= 2 && v[0] == 'c' && var_rank(v) <= sols.d - 2))
          throw DomainError("variety must live in the parameter variables");
        std::size_t idx = v == "a" ? std::size_t(sols.d - 2) : std::size_t(var_rank(v) - 1);
        vals.push_back(pt.coords[idx]);
      }
      if (std::abs(V->eval_cd(vals)) < tol) ++a.on_variety;
    }
    if (a.card > 0) a.variety_ratio = double(a.on_variety) / double(a.card);
  }
  return a;
}

}  // namespace dynbif
