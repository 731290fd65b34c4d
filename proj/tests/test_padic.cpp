#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
#include "dynbif/padic.hpp"

using namespace dynbif;

static Rat rand_rat(Rng& rng, long long bound = 60) {
  long n = rng.uniform_int(-bound, bound);
  long d = rng.uniform_int(1, bound);
  Rat r(n, d);
  r.canonicalize();
  return r;
}

static ParamQ rand_param(Rng& rng, int d) {
  std::vector<Rat> c;
  for (int i = 0; i < d - 2; ++i) c.push_back(rand_rat(rng));
  return ParamQ(d, c, rand_rat(rng));
}

TEST_CASE("valuations and absolute values") {
  CHECK(val_p(Int(12), 2) == 2);
  CHECK(abs_v(Rat(12), 2) == doctest::Approx(0.25));
  CHECK(abs_v(Rat(1, 5), 5) == doctest::Approx(5.0));
  CHECK(val_p(Rat(-84, 55), 2) == 2);
  CHECK(val_p(Rat(-84, 55), 3) == 1);
  CHECK(val_p(Rat(-84, 55), 5) == -1);
  CHECK(val_p(Rat(-84, 55), 7) == 1);
  CHECK(val_p(Rat(-84, 55), 11) == -1);
  // product formula: |x|_inf * prod_p |x|_p = 1
  Int lhs = Int(84) * Int(55);
  Int rhs = Int(4) * Int(3) * Int(7) * Int(55);
  CHECK(lhs == rhs);
}

TEST_CASE("local constants") {
  PadicContext c52(5, ParamQ(2, {}, Rat(2)));
  CHECK(c52.C_exp == 0);
  CHECK(c52.Ct_exp == 0);
  CHECK(c52.alpha_exp == 0);

  PadicContext c22(2, ParamQ(2, {}, Rat(2)));
  CHECK(c22.alpha_exp == 1);
  CHECK(c22.C_exp == -1);
  CHECK(c22.Ct_exp == -1);

  PadicContext c23(2, ParamQ(3, {Rat(1)}, Rat(1)));
  CHECK(c23.alpha_exp == 1);

  PadicContext c33(3, ParamQ(3, {Rat(1)}, Rat(1)));
  CHECK(c33.alpha_exp == 1);

  PadicContext c25(2, ParamQ(5, {Rat(1), Rat(1), Rat(1)}, Rat(1)));
  CHECK(c25.alpha_exp == 2);

  // p > d+1 with unit-ball coordinates
  Rng rng(7);
  for (int t = 0; t < 100; ++t) {
    int d = 2 + int(rng.uniform_int(0, 1));
    std::vector<Rat> c;
    for (int i = 0; i < d - 2; ++i) c.push_back(Rat(rng.uniform_int(0, 6)));
    PadicContext ctx(7, ParamQ(d, c, Rat(rng.uniform_int(0, 6))));
    CHECK(ctx.alpha_exp == 0);
    CHECK(ctx.Ct_exp <= 0);
  }
}

TEST_CASE("one-step upper bound, exact") {
  Rng rng(13);
  const long primes[] = {2, 3, 5, 7};
  for (int t = 0; t < 1000; ++t) {
    int d = 2 + int(rng.uniform_int(0, 1));
    ParamQ par = rand_param(rng, d);
    PadicContext ctx(primes[rng.uniform_int(0, 3)], par);
    Rat z = rand_rat(rng);
    Rat w = eval_P(par, z);
    if (w == 0) continue;
    auto bound = ctx.exp_of(par.a);
    for (auto& ci : par.c) bound = exp_max(bound, ctx.exp_of(ci));
    bound = exp_max(bound, ctx.exp_of(z));
    if (!bound) continue;
    CHECK(*ctx.exp_of(w) <= ctx.alpha_exp + *bound * d);
  }
}

TEST_CASE("strict escape growth law, exact") {
  Rng rng(17);
  const long primes[] = {2, 3, 5, 7};
  for (int t = 0; t < 1000; ++t) {
    int d = 2 + int(rng.uniform_int(0, 1));
    ParamQ par = rand_param(rng, d);
    long p = primes[rng.uniform_int(0, 3)];
    PadicContext ctx(p, par);
    // z strictly beyond the threshold: exponent floor(Ct)+1+k
    long long e = (long long)std::floor(ctx.Ct_exp.get_d()) + 1 +
                  (long long)rng.uniform_int(0, 2);
    Rat unit = Rat(1 + 2 * rng.uniform_int(0, 19), 1);
    while (unit.get_num() % p == 0) unit += 2;
    Rat z = unit;
    for (long long i = 0; i < e; ++i) z /= p;
    REQUIRE(*ctx.exp_of(z) > ctx.Ct_exp);
    Rat w = eval_P(par, z);
    CHECK(val_p(w, p) == d * val_p(z, p) - val_p(Int(d), p));
    // and the whole forward orbit keeps the law
    Rat cur = w;
    for (int n = 0; n < 3; ++n) {
      Rat nxt = eval_P(par, cur);
      CHECK(val_p(nxt, p) == d * val_p(cur, p) - val_p(Int(d), p));
      cur = nxt;
    }
  }
}

TEST_CASE("local green certificates") {
  // invariant ball: orbit of 0 for d=2, p=2, a=2 stays in 2Z_2
  PadicContext c22(2, ParamQ(2, {}, Rat(2)));
  auto g0 = green_padic_point(c22, Rat(0), 1e-12);
  CHECK(g0.exact);
  CHECK(g0.lo == 0);
  CHECK(g0.branch == "ball");

  // escape: z = 1/2 has |z|_2 = 2 > Ct = 1/2, frozen value 2 log 2
  auto ge = green_padic_point(c22, Rat(1, 2), 1e-12);
  CHECK(ge.exact);
  CHECK(ge.branch == "escape");
  CHECK(ge.lo == 2);
  CHECK(ge.cv(2).value == doctest::Approx(2 * std::log(2.0)));

  // exact functional equation on the escape branch
  Rat pz = eval_P(c22.par, Rat(1, 2));
  auto gP = green_padic_point(c22, pz, 1e-12);
  CHECK(gP.exact);
  CHECK(gP.lo == ge.lo * 2);

  // repeat: fixed point of z^2/2 + a^2 with a = 0
  PadicContext c20(2, ParamQ(2, {}, Rat(0)));
  auto gr = green_padic_point(c20, Rat(2), 1e-12);
  CHECK(gr.exact);
  CHECK(gr.lo == 0);
}

TEST_CASE("upper envelope and sandwich consistency") {
  Rng rng(19);
  const long primes[] = {2, 3, 5, 7, 11};
  std::map<std::string, int> branches;
  for (int t = 0; t < 800; ++t) {
    int d = 2 + int(rng.uniform_int(0, 1));
    ParamQ par = rand_param(rng, d);
    PadicContext ctx(primes[rng.uniform_int(0, 4)], par);
    Rat z = rand_rat(rng);
    auto g = green_padic_point(ctx, z, 1e-10);
    ++branches[g.branch];
    CHECK(g.lo <= g.hi);
    // g <= h(z) + alpha/(d-1)
    CHECK(g.hi <= ctx.h_exp(z) + ctx.alpha_exp / (d - 1));
    CHECK(g.hi >= 0);
    if (!g.exact) {
      auto tight = green_padic_point(ctx, z, 1e-14, 512);
      CHECK(tight.lo >= g.lo - Rat(1, 1000000));
      CHECK(tight.hi <= g.hi + Rat(1, 1000000));
    }
  }
  CHECK(branches["ball"] > 0);
  CHECK(branches["escape"] > 0);
}

TEST_CASE("global potential and good reduction shortcut") {
  PadicContext c7(7, ParamQ(2, {}, Rat(3, 7)));
  auto G = G_padic(c7, 1e-12);
  CHECK(G.exact);
  CHECK(G.lo == 1);
  CHECK(G.branch == "shortcut");
  CHECK(G.cv(7).value == doctest::Approx(std::log(7.0)));

  PadicContext c5(5, ParamQ(3, {Rat(1)}, Rat(1)));
  auto G5 = G_padic(c5, 1e-12);
  CHECK(G5.exact);
  CHECK(G5.lo == 0);

  PadicContext c2(2, ParamQ(2, {}, Rat(2)));
  auto G2 = G_padic(c2, 1e-12);
  CHECK(G2.exact);
  CHECK(G2.lo == 0);

  // forced-iterative equals the shortcut exactly for p > d+1
  Rng rng(29);
  const long primes[] = {5, 7, 11, 13, 17, 19, 23, 29, 31, 37};
  for (int t = 0; t < 60; ++t) {
    int d = 2 + int(rng.uniform_int(0, 1));
    ParamQ par = rand_param(rng, d);
    for (long long p : primes) {
      if (p <= d + 1) continue;
      PadicContext ctx(p, par);
      auto fast = G_padic(ctx, 1e-12);
      auto slow = G_padic(ctx, 1e-12, true);
      REQUIRE(fast.exact);
      REQUIRE(slow.exact);
      CHECK(fast.lo == slow.lo);
    }
  }
}

TEST_CASE("power certificate and its p-adic lower bound") {
  for (int d : {2, 3}) {
    const auto& cert = power_cert(d);
    CHECK(verify_power_cert(cert));
    CHECK(cert.m == d);
  }
  CHECK(power_cert(2).K == 1);
  CHECK(power_cert(3).K == 12);
  CHECK(beta_exp(power_cert(2), 2) == 0);
  CHECK(beta_exp(power_cert(3), 2) == 0);
  CHECK(beta_exp(power_cert(3), 3) == 0);

  Rng rng(37);
  const long primes[] = {2, 3, 5, 7};
  for (int t = 0; t < 1000; ++t) {
    int d = 2 + int(rng.uniform_int(0, 1));
    ParamQ par = rand_param(rng, d);
    long p = primes[rng.uniform_int(0, 3)];
    const auto& cert = power_cert(d);
    Rat be = beta_exp(cert, p);
    std::optional<Rat> M;
    M = exp_v(par.a, p);
    for (auto& ci : par.c) M = exp_max(M, exp_v(ci, p));
    if (!M) continue;
    std::optional<Rat> best;
    for (auto& z : critical_points(par)) {
      Rat v = eval_P(par, z);
      if (v != 0) best = exp_max(best, exp_v(v, p));
    }
    REQUIRE(best.has_value());
    CHECK(*best >= be + *M * d);
  }
}

TEST_CASE("active place enumeration") {
  auto pl = active_places(ParamQ(2, {}, Rat(3, 7)));
  REQUIRE(pl.size() == 4);
  CHECK(pl[0].arch);
  CHECK(pl[1].p == 2);
  CHECK(pl[2].p == 3);
  CHECK(pl[3].p == 7);
  auto pl3 = active_places(ParamQ(3, {Rat(10, 11)}, Rat(1)));
  std::set<long long> got;
  for (auto& v : pl3)
    if (!v.arch) got.insert(v.p);
  CHECK(got == std::set<long long>({2, 3, 5, 11}));
}
