#pragma once

#include "green.hpp"
#include "padic.hpp"

namespace dynbif {

/// Naive height of a rational tuple: sum over places of log^+ max_i |x_i|_v,
/// which collapses to log max(D, |x_1 D|, ..., |x_k D|) for the common
/// denominator D. Returned exactly as that integer.
inline Int h_nv_numerator(const std::vector<Rat>& x) {
  std::vector<Rat> xs(x);
  for (auto& xi : xs) xi.canonicalize();
  Int D = 1;
  for (auto& xi : xs) mpz_lcm(D.get_mpz_t(), D.get_mpz_t(), xi.get_den().get_mpz_t());
  Int best = D;
  for (auto& xi : xs) {
    Rat scaled = xi * Rat(D);
    Int n = abs(scaled.get_num());
    if (scaled.get_den() != 1) throw NumericalError("denominator not cleared");
    if (n > best) best = n;
  }
  return best;
}

inline double h_nv(const std::vector<Rat>& x) {
  return log_int(h_nv_numerator(x));
}

/// Exact product formula check: |x|_inf equals the product of p^{val_p(x)}
/// over the primes dividing numerator and denominator.
inline bool product_formula_exact(const Rat& x) {
  if (x == 0) throw DomainError("product formula needs x != 0");
  auto rebuild = [](const Int& n) {
    Int acc = 1;
    Int m = n;
    for (long p = 2; Int(p) * Int(p) <= m; ++p)
      while (m % p == 0) {
        m /= p;
        acc *= p;
      }
    if (m > 1) acc *= m;
    return acc;
  };
  return rebuild(abs(x.get_num())) == abs(x.get_num()) &&
         rebuild(x.get_den()) == x.get_den();
}

enum class PcfVerdict { PCF, NotPCF, Undecided };

struct PcfResult {
  PcfVerdict verdict = PcfVerdict::Undecided;
  std::vector<int> preperiod;
  std::vector<int> period;
  std::string witness;
};

/// Exact PCF decision for rational parameters.
///
/// PCF certificate: every marked critical orbit repeats exactly.
/// Non-PCF certificate: some orbit point passes the archimedean escape
/// radius, or strictly passes the p-adic escape threshold at an active place.
/// Budgets: max_steps exact steps per orbit and max_bits per orbit point.
inline PcfResult detect_pcf_exact(const ParamQ& par, int max_steps = 10000,
                                  std::size_t max_bits = 1000) {
  PcfResult res;
  auto places = active_places(par);
  std::vector<PadicContext> ctxs;
  for (auto& v : places)
    if (!v.arch) ctxs.emplace_back(v.p, par);
  std::vector<CD> cc;
  for (auto& ci : par.c) cc.push_back(CD(ci.get_d(), 0.0));
  ParamCD pd(par.d, cc, CD(par.a.get_d(), 0.0));
  Int arch_R(2 + (long)std::ceil(escape_bound(pd)));

  bool all_finite = true;
  for (Rat z : critical_points(par)) {
    std::map<Rat, int> seen;
    int pp = -1, q = -1;
    for (int n = 0; n <= max_steps; ++n) {
      if (rabs(z) >= Rat(arch_R)) {
        res.verdict = PcfVerdict::NotPCF;
        res.witness = "archimedean escape at step " + std::to_string(n);
        return res;
      }
      for (auto& ctx : ctxs) {
        auto e = ctx.exp_of(z);
        if (e && *e > ctx.Ct_exp) {
          res.verdict = PcfVerdict::NotPCF;
          res.witness = std::to_string(ctx.p) + "-adic escape at step " +
                        std::to_string(n);
          return res;
        }
      }
      auto it = seen.find(z);
      if (it != seen.end()) {
        pp = it->second;
        q = n - it->second;
        break;
      }
      if (mpz_sizeinbase(z.get_num().get_mpz_t(), 2) > max_bits ||
          mpz_sizeinbase(z.get_den().get_mpz_t(), 2) > max_bits) {
        all_finite = false;
        res.witness = "orbit size budget exceeded without certificate";
        break;
      }
      seen.emplace(z, n);
      z = eval_P(par, z);
    }
    if (pp < 0) {
      all_finite = false;
      if (res.witness.empty())
        res.witness = "orbit step budget exceeded without certificate";
      break;
    }
    res.preperiod.push_back(pp);
    res.period.push_back(q);
  }
  if (all_finite) {
    res.verdict = PcfVerdict::PCF;
    res.witness = "all critical orbits repeat exactly";
  }
  return res;
}

struct HeightReport {
  CertifiedValue h_naive{0, 0};
  CertifiedValue h_bif{0, 0};
  CertifiedValue h_ingram{0, 0};
  std::vector<std::pair<Place, CertifiedValue>> breakdown;
  PcfVerdict pcf = PcfVerdict::Undecided;
  std::string witness;
};

/// Dynamical height of one rational starting point: sum over active places
/// of the certified local Green value.
inline CertifiedValue h_dyn(const ParamQ& par, const Rat& x, double tol) {
  auto places = active_places(par);
  double slack = tol / double(places.size());
  double val = 0, err = 0;
  for (auto& v : places) {
    if (v.arch) {
      std::vector<CD> cc;
      for (auto& ci : par.c) cc.push_back(CD(ci.get_d(), 0.0));
      ParamCD pd(par.d, cc, CD(par.a.get_d(), 0.0));
      CertifiedValue g = green_point(pd, CD(x.get_d(), 0.0), slack);
      val += g.value;
      err += g.error + 1e-13;
    } else {
      PadicContext ctx(v.p, par);
      LocalGreen g = green_padic_point(ctx, x, slack);
      CertifiedValue c = g.cv(v.p);
      val += c.value;
      err += c.error;
    }
  }
  return {val, err};
}

/// Full height report: h_bif as the place-sum of G_v, h_ingram as the sum of
/// per-critical-point dynamical heights, plus the exact PCF verdict. When the
/// exact PCF certificate is found both heights are exactly zero.
inline HeightReport height_report(const ParamQ& par, double tol) {
  HeightReport rep;
  std::vector<Rat> coords(par.c);
  coords.push_back(par.a);
  rep.h_naive = {h_nv(coords), 1e-14};

  PcfResult pcf = detect_pcf_exact(par);
  rep.pcf = pcf.verdict;
  rep.witness = pcf.witness;
  if (pcf.verdict == PcfVerdict::PCF) {
    rep.h_bif = {0.0, 0.0};
    rep.h_ingram = {0.0, 0.0};
    for (auto& v : active_places(par))
      rep.breakdown.push_back({v, {0.0, 0.0}});
    return rep;
  }

  auto places = active_places(par);
  auto crit = critical_points(par);
  double slack = tol / double(places.size() * crit.size() + 1);
  double bif = 0, bif_err = 0, ing = 0, ing_err = 0;
  for (auto& v : places) {
    double vmax_lo = 0, vmax_hi = 0;
    if (v.arch) {
      std::vector<CD> cc;
      for (auto& ci : par.c) cc.push_back(CD(ci.get_d(), 0.0));
      ParamCD pd(par.d, cc, CD(par.a.get_d(), 0.0));
      for (CD c : critical_points(pd)) {
        CertifiedValue g = green_point(pd, c, slack);
        double lo = std::max(0.0, g.value - g.error - 1e-13);
        double hi = std::max(0.0, g.value + g.error + 1e-13);
        vmax_lo = std::max(vmax_lo, lo);
        vmax_hi = std::max(vmax_hi, hi);
        ing += (lo + hi) / 2;
        ing_err += (hi - lo) / 2;
      }
    } else {
      PadicContext ctx(v.p, par);
      for (auto& c : crit) {
        LocalGreen g = green_padic_point(ctx, c, slack);
        CertifiedValue cv = g.cv(v.p);
        double lo = std::max(0.0, cv.value - cv.error);
        double hi = std::max(0.0, cv.value + cv.error);
        vmax_lo = std::max(vmax_lo, lo);
        vmax_hi = std::max(vmax_hi, hi);
        ing += (lo + hi) / 2;
        ing_err += (hi - lo) / 2;
      }
    }
    CertifiedValue contrib{(vmax_lo + vmax_hi) / 2, (vmax_hi - vmax_lo) / 2};
    rep.breakdown.push_back({v, contrib});
    bif += contrib.value;
    bif_err += contrib.error;
  }
  rep.h_bif = {bif, bif_err};
  rep.h_ingram = {ing, ing_err};
  return rep;
}

}  // namespace dynbif
