#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
#include "dynbif/multiplier.hpp"

using namespace dynbif;

TEST_SUITE("exact period point counts") {
  TEST_CASE("moebius sums") {
    CHECK(nu_d(2, 1) == 2);
    CHECK(nu_d(2, 2) == 2);
    CHECK(nu_d(2, 3) == 6);
    CHECK(nu_d(2, 4) == 12);
    CHECK(nu_d(2, 5) == 30);
    CHECK(nu_d(2, 6) == 54);
    CHECK(nu_d(3, 2) == 6);
    CHECK(nu_d(3, 6) == 696);
    CHECK(nu_d(4, 2) == 12);
  }
}

TEST_SUITE("dynatomic factors") {
  TEST_CASE("symbolic quotients divide exactly for the quadratic lane") {
    for (int n = 1; n <= 6; ++n) {
      auto dd = dynatomic(2, n);
      CHECK(dd.mode == "symbolic");
      CHECK(dd.verified);
      CHECK(dd.phi_star.degree_in("z") == int(dd.nu));
    }
  }

  TEST_CASE("cubic quotients verify in whichever lane fits the budget") {
    for (int n = 1; n <= 6; ++n) {
      auto dd = dynatomic(3, n);
      CHECK(dd.verified);
      if (dd.mode == "symbolic") CHECK(dd.phi_star.degree_in("z") == int(dd.nu));
    }
  }

  TEST_CASE("degree budget is enforced") {
    CHECK_THROWS_AS(dynatomic(2, 13), BudgetError);
  }

  TEST_CASE("specialized roots have the exact period") {
    ParamCD p(2, {}, CD(0.31, 0.12));
    auto star = dynatomic_at(2, 3, p);
    auto zs = poly_roots(star);
    REQUIRE(int(zs.size()) == 6);
    auto coef = family_coeffs(p);
    for (auto z : zs) {
      CD v = z;
      for (int k = 0; k < 3; ++k) v = eval_poly(coef, v);
      CHECK(std::abs(v - z) < 1e-8);
      CHECK(std::abs(eval_poly(coef, z) - z) > 1e-3);
    }
  }
}

TEST_SUITE("multiplier polynomials") {
  TEST_CASE("cycle data at a fixed quadratic parameter") {
    ParamCD p(2, {}, CD(0.21, -0.34));
    auto mp = multiplier_poly(2, 3, p);
    CHECK(mp.nth_power);
    CHECK(int(mp.multipliers.size()) == 6);
    CHECK(int(mp.p_zeros.size()) == 2);
    REQUIRE(int(mp.r_coeffs.size()) == 7);
    CHECK(std::abs(mp.r_coeffs.back() - CD(1)) < 1e-12);
    // the monic expansion reproduces the multiplier multiset; every root is
    // an n-th power so the roundtrip scatters like the cube root of rounding
    auto back = poly_roots(mp.r_coeffs);
    for (auto lam : mp.multipliers) {
      int hits = 0;
      for (auto r : back)
        if (std::abs(r - lam) < 1e-3 * (1.0 + std::abs(lam))) ++hits;
      CHECK(hits >= 1);
    }
  }

  TEST_CASE("cubic parameter with three two-cycles") {
    ParamCD p(3, {CD(0.4, 0.3)}, CD(0.2, -0.1));
    auto mp = multiplier_poly(3, 2, p);
    CHECK(mp.nth_power);
    CHECK(int(mp.multipliers.size()) == 6);
    CHECK(int(mp.p_zeros.size()) == 3);
  }

  TEST_CASE("power structure holds at random parameters") {
    Rng rng(777);
    for (int trial = 0; trial < 10; ++trial) {
      ParamCD p(2, {}, CD(rng.uniform(-0.8, 0.8), rng.uniform(-0.8, 0.8)));
      for (int n = 1; n <= 4; ++n) CHECK(multiplier_poly(2, n, p).nth_power);
    }
  }
}

TEST_SUITE("exact multiplier polynomials for the quadratic lane") {
  TEST_CASE("fixed point polynomial is exact") {
    auto r1 = multiplier_symbolic(1);
    SymbolicPoly av = SymbolicPoly::variable("a");
    SymbolicPoly wv = SymbolicPoly::variable("w");
    SymbolicPoly want = wv.pow(2) - Rat(2) * wv + Rat(2) * av.pow(2);
    CHECK(r1 == want);
  }

  TEST_CASE("two cycle polynomial is a perfect square") {
    auto r2 = multiplier_symbolic(2);
    SymbolicPoly av = SymbolicPoly::variable("a");
    SymbolicPoly wv = SymbolicPoly::variable("w");
    SymbolicPoly lam = Rat(2) * av.pow(2) + SymbolicPoly(Rat(4));
    CHECK(r2 == (wv - lam).pow(2));
  }

  TEST_CASE("periods three and four have the expected degrees") {
    auto r3 = multiplier_symbolic(3);
    CHECK(r3.degree_in("w") == 6);
    CHECK(r3.degree_in("a") == 18);
    auto r4 = multiplier_symbolic(4);
    CHECK(r4.degree_in("w") == 12);
    CHECK(r4.degree_in("a") == 48);
  }

  TEST_CASE("symbolic table matches the numeric product") {
    auto r3 = multiplier_symbolic(3);
    ParamCD p(2, {}, CD(0.37, 0.18));
    auto mp = multiplier_poly(2, 3, p);
    CD wtest(0.7, -0.2);
    CD prod(1);
    for (auto lam : mp.multipliers) prod *= (wtest - lam);
    CD sym(0);
    for (int k = 0; k <= 6; ++k) {
      auto ck = r3.coeff_of("w", k);
      CD cv(0);
      int da = ck.degree_in("a");
      for (int e = 0; e <= da; ++e) {
        Rat c = constant_term(ck.coeff_of("a", e));
        if (!(c == Rat(0))) cv += CD(c.get_d()) * spow(p.a, e);
      }
      sym += cv * spow(wtest, k);
    }
    CHECK(std::abs(sym - prod) < 1e-10 * std::abs(prod));
  }

  TEST_CASE("period out of range is refused") {
    CHECK_THROWS_AS(multiplier_symbolic(5), DomainError);
  }
}

TEST_SUITE("attracting cycle search") {
  TEST_CASE("superattracting fixed point at the origin") {
    auto cs = attracting_cycles(ParamCD(2, {}, CD(0)));
    CHECK(cs.unresolved.empty());
    REQUIRE(int(cs.cycles.size()) == 1);
    CHECK(cs.cycles[0].period == 1);
    CHECK(std::abs(cs.cycles[0].multiplier) < 1e-9);
    CHECK(cs.cycles[0].basin == std::vector<int>{0});
  }

  TEST_CASE("superattracting two cycle") {
    ParamCD p(2, {}, CD(0, std::sqrt(2.0)));
    auto cs = attracting_cycles(p);
    CHECK(cs.unresolved.empty());
    REQUIRE(int(cs.cycles.size()) == 1);
    CHECK(cs.cycles[0].period == 2);
    CHECK(std::abs(cs.cycles[0].multiplier) < 1e-9);
    auto W = multiplier_map_W(p, {2});
    CHECK(std::abs(W[0]) < 1e-9);
  }

  TEST_CASE("escaping critical point is reported unresolved") {
    auto cs = attracting_cycles(ParamCD(2, {}, CD(3.0)));
    CHECK(cs.cycles.empty());
    CHECK(cs.unresolved == std::vector<int>{0});
    CHECK_THROWS_AS(multiplier_map_W(ParamCD(2, {}, CD(3.0)), {1}), DomainError);
  }

  TEST_CASE("multiplier map validates the period assignment") {
    ParamCD p(2, {}, CD(0));
    CHECK_THROWS_AS(multiplier_map_W(p, {1, 2}), DomainError);
    CHECK_THROWS_AS(multiplier_map_W(p, {2}), DomainError);
  }
}

TEST_SUITE("path continuation") {
  TEST_CASE("jet agrees with finite differences") {
    ParamCD p(3, {CD(0.3, -0.2)}, CD(0.25, 0.15));
    CD z0(0.4, -0.1);
    auto jet = orbit_mult_jet(p, z0, 4);
    double h = 1e-6;
    auto probe = [&](int slot, CD dz) {
      ParamCD q = p;
      CD zz = z0;
      if (slot == 0) q.c[0] += dz;
      if (slot == 1) q.a += dz;
      if (slot == 2) zz += dz;
      auto j2 = orbit_mult_jet(q, zz, 4);
      return std::make_pair(j2.f, j2.fp);
    };
    for (int slot = 0; slot < 3; ++slot) {
      auto [fp1, gp1] = probe(slot, CD(h));
      auto [fm1, gm1] = probe(slot, CD(-h));
      CD dfd = (fp1 - fm1) / (2 * h);
      CD dgd = (gp1 - gm1) / (2 * h);
      CHECK(std::abs(dfd - jet.gf[std::size_t(slot)]) < 1e-5 * (1.0 + std::abs(dfd)));
      CHECK(std::abs(dgd - jet.gfp[std::size_t(slot)]) < 1e-5 * (1.0 + std::abs(dgd)));
    }
  }

  TEST_CASE("a period three center reaches its target multiplier") {
    auto centers = pcf_solve(2, {3}, {0});
    std::vector<ParamCD> good;
    for (auto& pt : centers.points)
      if (pt.exactness[0] == std::make_pair(0, 3) && pt.multiplicity == 1)
        good.push_back(ParamCD(2, {}, pt.coords[0]));
    REQUIRE(int(good.size()) == 6);
    auto cr = path_continue(good[0], {3}, {CD(0.5)});
    REQUIRE(cr.ok);
    CHECK(cr.residual < 1e-10);
    auto cs = attracting_cycles(cr.endpoint);
    REQUIRE(int(cs.cycles.size()) == 1);
    CHECK(cs.cycles[0].period == 3);
    CHECK(std::abs(cs.cycles[0].multiplier - CD(0.5)) < 1e-8);
  }

  TEST_CASE("targets outside the unit disk are refused") {
    ParamCD p(2, {}, CD(0));
    CHECK_THROWS_AS(path_continue(p, {1}, {CD(1.0)}), DomainError);
    CHECK_THROWS_AS(path_continue(p, {1, 2}, {CD(0.5)}), DomainError);
  }
}

TEST_SUITE("constant multiplier slices") {
  TEST_CASE("quadratic period three slice keeps its cardinality") {
    auto s0 = per_star_solve(2, {3}, {CD(0)});
    REQUIRE(int(s0.points.size()) == 6);
    auto s1 = per_star_solve(2, {3}, {CD(0.5)});
    REQUIRE(int(s1.points.size()) == 6);
    CHECK(s1.max_residual < 1e-10);
    CHECK(s1.method == "continuation");
    for (auto& pt : s1.points) {
      CHECK(pt.exactness[0] == std::make_pair(-1, -1));
      auto cs = attracting_cycles(ParamCD(2, {}, pt.coords[0]));
      REQUIRE(int(cs.cycles.size()) == 1);
      CHECK(cs.cycles[0].period == 3);
      CHECK(std::abs(cs.cycles[0].multiplier - CD(0.5)) < 1e-8);
    }
    auto s2 = per_star_solve(2, {3}, {CD(0.3)});
    auto s3 = per_star_solve(2, {3}, {CD(0.6, 0.2)});
    CHECK(int(s2.points.size()) == 6);
    CHECK(int(s3.points.size()) == 6);
  }

  TEST_CASE("direct quadratic solve agrees with continuation") {
    auto alg = per_star_quadratic_algebraic(3, CD(0.5));
    auto s1 = per_star_solve(2, {3}, {CD(0.5)});
    REQUIRE(int(alg.size()) == 6);
    for (auto& [a, z] : alg) {
      int hits = 0;
      for (auto& pt : s1.points)
        if (std::abs(pt.coords[0] - a) < 1e-6) ++hits;
      CHECK(hits == 1);
    }
  }

  TEST_CASE("cubic slice with mixed targets") {
    auto s = per_star_solve(3, {2, 1}, {CD(0.4), CD(0)});
    REQUIRE(int(s.points.size()) == 18);
    CHECK(s.max_residual < 1e-10);
    int checked = 0;
    for (auto& pt : s.points) {
      ParamCD pe(3, {pt.coords[0]}, pt.coords[1]);
      auto ac = attracting_cycles(pe);
      if (ac.unresolved.empty() && int(ac.cycles.size()) == 2) {
        auto W = multiplier_map_W(pe, {2, 1});
        CHECK(std::abs(W[0] - CD(0.4)) < 1e-7);
        CHECK(std::abs(W[1]) < 1e-7);
        ++checked;
      }
    }
    CHECK(checked == 18);
  }

  TEST_CASE("input validation") {
    CHECK_THROWS_AS(per_star_solve(3, {2, 2}, {CD(0.1), CD(0.2)}), DomainError);
    CHECK_THROWS_AS(per_star_solve(2, {3}, {CD(0, 1)}), DomainError);
    // a period one marking on the free critical point pins a = 0 and
    // collapses every center to a triple point, so there is nothing to follow
    CHECK_THROWS_AS(per_star_solve(3, {1, 2}, {CD(0.4), CD(0)}), DomainError);
  }
}
