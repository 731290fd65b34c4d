#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
#include "dynbif/resultant.hpp"

using namespace dynbif;

static SymbolicPoly var(const std::string& v) { return SymbolicPoly::variable(v); }

TEST_CASE("simultaneous roots of small polynomials") {
  // z^3 - 1
  auto r = poly_roots({CD(-1), CD(0), CD(0), CD(1)});
  REQUIRE(r.size() == 3);
  for (auto z : r) CHECK(std::abs(z * z * z - CD(1)) < 1e-12);
  double sum = 0;
  for (auto z : r) sum += z.real();
  CHECK(std::abs(sum) < 1e-12);
}

TEST_CASE("exact zero coefficients factor out exact zero roots") {
  // z^2 (z + 2)
  auto r = poly_roots({CD(0), CD(0), CD(2), CD(1)});
  REQUIRE(r.size() == 3);
  CHECK(r[0] == CD(0));
  CHECK(r[1] == CD(0));
  CHECK(std::abs(r[2] + CD(2)) < 1e-12);
}

TEST_CASE("root clustering reports multiplicity and spread") {
  // (z-1)^2 (z+2)
  auto cl = cluster_roots(poly_roots({CD(2), CD(-3), CD(0), CD(1)}), 1e-5);
  REQUIRE(cl.size() == 2);
  int at1 = std::abs(cl[0].center - CD(1)) < 1e-4 ? 0 : 1;
  CHECK(std::abs(cl[at1].center - CD(1)) < 1e-6);
  CHECK(cl[at1].multiplicity == 2);
  CHECK(cl[at1].radius < 1e-5);
  CHECK(std::abs(cl[1 - at1].center + CD(2)) < 1e-12);
  CHECK(cl[1 - at1].multiplicity == 1);
}

TEST_CASE("newton polish") {
  auto f = poly_funcd({CD(-2), CD(0), CD(1)});
  CD z = newton_polish(f, CD(1.5));
  CHECK(std::abs(z - CD(std::sqrt(2.0))) < 1e-14);
}

TEST_CASE("rational and gaussian snapping") {
  auto s = snap_rat(0.3333333333333301, 64, 1e-11);
  REQUIRE(s.has_value());
  CHECK(*s == Rat(1, 3));
  CHECK(!snap_rat(0.3333333333333301, 64, 1e-15).has_value());
  auto g = snap_gaussian(CD(-1.2499999999999, 1.9999999999721), 64, 1e-9);
  REQUIRE(g.has_value());
  CHECK(g->re == Rat(-5, 4));
  CHECK(g->im == Rat(2));
  CHECK(!snap_gaussian(CD(0.1234567, 0), 64, 1e-9).has_value());
}

TEST_CASE("exact resultants of univariate polynomials") {
  RatPoly f{Rat(-1), Rat(0), Rat(1)};
  RatPoly g{Rat(-2), Rat(1)};
  RatPoly h{Rat(1), Rat(0), Rat(1)};
  RatPoly k{Rat(-1), Rat(1)};
  CHECK(resultant_exact(f, g) == Rat(3));
  CHECK(resultant_exact(h, f) == Rat(4));
  CHECK(resultant_exact(f, k) == Rat(0));
}

TEST_CASE("bivariate resultant eliminates one variable") {
  auto a = var("a"), c = var("c1");
  auto F = a.pow(2) - c;
  auto G = a.pow(2) - Rat(2) * c + SymbolicPoly(Rat(1));
  // common root needs c1 = 2 c1 - 1, so the eliminant is a multiple of (c1-1)^2
  auto R = resultant_bivariate(F, G, "a", "c1");
  REQUIRE(R.size() == 3);
  CHECK(R[0] == R[2]);
  CHECK(R[1] == Rat(-2) * R[2]);
  CHECK(R[2] != Rat(0));
}

TEST_CASE("implicit eliminant matches the exact one") {
  auto a = var("a"), c = var("c1");
  auto F = a.pow(2) - c;
  auto G = a.pow(2) - Rat(2) * c + SymbolicPoly(Rat(1));
  EliminantLogDeriv el(bivar_grid(F, "a", "c1"), bivar_grid(G, "a", "c1"));
  CHECK(el.measured_degree() == 2);
  CD t(3.0, 0.5);
  CHECK(std::abs(el.logderiv(t) - CD(2) / (t - CD(1))) < 1e-9);
  auto roots = aberth_logd([&el](CD z) { return el.logderiv(z); }, 2, {600, 5e-14, 3.0});
  REQUIRE(roots.size() == 2);
  for (auto z : roots) CHECK(std::abs(z - CD(1)) < 1e-6);
}

TEST_CASE("power compression") {
  auto a = var("a"), c = var("c1");
  auto H = a.pow(6) - Rat(2) * (c * a.pow(3)) + c.pow(5);
  auto Hc = power_compress(H, "a", 3);
  CHECK(Hc.degree_in("a") == 2);
  CHECK(Hc.degree_in("c1") == 5);
  CHECK_THROWS_AS(power_compress(a.pow(2), "a", 3), DomainError);
}

TEST_CASE("newton interpolation round trip") {
  // recover x^3 - 2x + 5 from four samples
  std::vector<Rat> ts{Rat(0), Rat(1), Rat(-1), Rat(2)};
  std::vector<Rat> vs;
  for (auto& t : ts) vs.push_back(t * t * t - Rat(2) * t + Rat(5));
  auto p = interpolate_newton(ts, vs);
  REQUIRE(p.size() == 4);
  CHECK(p[0] == Rat(5));
  CHECK(p[1] == Rat(-2));
  CHECK(p[2] == Rat(0));
  CHECK(p[3] == Rat(1));
}
