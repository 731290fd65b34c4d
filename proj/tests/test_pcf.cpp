#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
#include "dynbif/pcf.hpp"

using namespace dynbif;

static int mult_at(const PcfSolutionSet& s, std::vector<CD> at, double eps = 1e-6) {
  int m = 0;
  for (auto& p : s.points) {
    bool hit = p.coords.size() == at.size();
    for (std::size_t k = 0; hit && k < at.size(); ++k)
      if (std::abs(p.coords[k] - at[k]) >= eps) hit = false;
    if (hit) m += p.multiplicity;
  }
  return m;
}

static long mult_sum(const PcfSolutionSet& s) {
  long t = 0;
  for (auto& p : s.points) t += p.multiplicity;
  return t;
}

TEST_CASE("collision polynomials carry the full degree") {
  for (int m = 1; m <= 6; ++m) {
    auto sys = build_system(2, {m}, {m > 1 ? 1 : 0});
    REQUIRE(sys.size() == 1);
    CHECK(sys[0].total_degree() == (1 << m));
  }
  auto sys3 = build_system(3, {2, 3}, {1, 0});
  REQUIRE(sys3.size() == 2);
  CHECK(sys3[0].total_degree() == 9);
  CHECK(sys3[1].total_degree() == 27);
}

TEST_CASE("input validation") {
  CHECK_THROWS_AS(build_system(5, {2}, {1}), DomainError);
  CHECK_THROWS_AS(build_system(2, {2, 2}, {1, 1}), DomainError);
  CHECK_THROWS_AS(build_system(2, {2}, {2}), DomainError);
  PcfOptions tight;
  tight.bezout_cap = 100;
  CHECK_THROWS_AS(pcf_solve(2, {12}, {0}, tight), BudgetError);
}

TEST_CASE("fixed critical point families") {
  auto s = pcf_solve(2, {1}, {0});
  REQUIRE(s.points.size() == 1);
  CHECK(s.method == "univariate");
  CHECK(s.points[0].coords[0] == CD(0));
  CHECK(s.points[0].multiplicity == 2);
  CHECK(s.points[0].is_exact);
  CHECK(s.points[0].exactness[0] == std::make_pair(0, 1));

  auto s21 = pcf_solve(2, {2}, {1});
  REQUIRE(s21.points.size() == 1);
  CHECK(s21.points[0].coords[0] == CD(0));
  CHECK(s21.points[0].multiplicity == 4);
}

TEST_CASE("preperiodic parameters with tail two") {
  auto s = pcf_solve(2, {3}, {2});
  REQUIRE(s.points.size() == 3);
  CHECK(mult_sum(s) == 8);
  // 0 -> -4 -> 4 -> 4 at a = 2i
  CHECK(mult_at(s, {CD(0, 2)}, 1e-9) == 1);
  CHECK(mult_at(s, {CD(0, -2)}, 1e-9) == 1);
  CHECK(mult_at(s, {CD(0)}, 1e-9) == 6);
  for (auto& p : s.points) {
    CHECK(p.is_exact);
    CHECK(p.residual == 0.0);
    if (std::abs(p.coords[0]) > 1) {
      CHECK(p.exactness[0] == std::make_pair(2, 1));
      CHECK(p.margin[0] > 10);
      CHECK(std::abs(transversality(ParamCD(2, {}, p.coords[0]), {3}, {2}) - 32.0) < 1e-9);
    }
  }
}

TEST_CASE("period three centers") {
  auto s = pcf_solve(2, {3}, {0});
  REQUIRE(s.points.size() == 7);
  CHECK(mult_sum(s) == 8);
  int simple = 0;
  for (auto& p : s.points)
    if (p.multiplicity == 1) {
      ++simple;
      CHECK(p.exactness[0] == std::make_pair(0, 3));
      CHECK(p.residual < 1e-10);
      CHECK(!p.ill_conditioned);
    }
  CHECK(simple == 6);
  CHECK(mult_at(s, {CD(0)}, 1e-12) == 2);
  // sign symmetry closure is exact, not approximate
  for (auto& p : s.points) {
    bool found = false;
    for (auto& q : s.points)
      if (q.coords[0] == -p.coords[0]) found = true;
    CHECK(found);
  }
  // reported types divide the requested ones
  for (auto& p : s.points) {
    CHECK(p.exactness[0].first <= 0);
    CHECK(3 % p.exactness[0].second == 0);
  }
  auto va = SymbolicPoly::variable("a");
  auto audit = count_audit(s, &va);
  CHECK(audit.card == 7);
  CHECK(audit.mult_sum == 8);
  CHECK(audit.bezout == 8);
  REQUIRE(audit.portrait_counts.size() == 1);
  CHECK(audit.portrait_counts[0] == 6);
  CHECK(audit.on_variety == 1);
  auto vz = SymbolicPoly::variable("z");
  CHECK_THROWS_AS(count_audit(s, &vz), DomainError);
}

TEST_CASE("classification of a direct orbit") {
  PcfPoint pt;
  pt.coords = {CD(0, 2)};
  PcfOptions opt;
  pcf_classify(pt, 2, opt);
  CHECK(pt.exactness[0] == std::make_pair(2, 1));
  CHECK(pt.margin[0] > 10);
  CHECK(!pt.ill_conditioned);
}

TEST_CASE("cubic family with both critical orbits fixed") {
  auto s = pcf_solve(3, {1, 1}, {0, 0});
  CHECK(s.method == "eliminant-exact");
  CHECK(s.eliminant_degree == 3);
  REQUIRE(s.points.size() == 3);
  CHECK(mult_sum(s) == 9);
  double r6 = std::sqrt(6.0);
  CHECK(mult_at(s, {CD(0), CD(0)}) == 3);
  CHECK(mult_at(s, {CD(0, r6), CD(0)}) == 3);
  CHECK(mult_at(s, {CD(0, -r6), CD(0)}) == 3);
  for (auto& p : s.points) {
    CHECK(std::abs(p.coords[1]) < 1e-9);
    CHECK(p.residual < 1e-10);
    CHECK(p.exactness[0] == std::make_pair(0, 1));
    CHECK(p.exactness[1] == std::make_pair(0, 1));
    // both critical points collide only at c1 = 0
    CHECK(p.degenerate.size() == (std::abs(p.coords[0]) < 1e-9 ? 1 : 0));
  }
}

TEST_CASE("cubic tail one system through both eliminant lanes") {
  double r3 = std::sqrt(3.0), r6 = std::sqrt(6.0), r12 = std::sqrt(12.0);
  double ca = std::cbrt(1.5 * r3);
  auto se = pcf_solve(3, {2, 2}, {1, 1});
  CHECK(se.method == "eliminant-exact");
  PcfOptions oi;
  oi.exact_elim_budget = 10;
  auto si = pcf_solve(3, {2, 2}, {1, 1}, oi);
  CHECK(si.method == "eliminant-implicit");
  for (const auto* s : {&se, &si}) {
    CHECK(s->eliminant_degree == 27);
    CHECK(s->points.size() == 17);
    CHECK(mult_sum(*s) == 81);
    CHECK(mult_at(*s, {CD(0), CD(0)}) == 27);
    CHECK(mult_at(*s, {CD(0, r6), CD(0)}) == 12);
    CHECK(mult_at(*s, {CD(0, -r6), CD(0)}) == 12);
    // 12 at c1 = +-sqrt(3) splits over the a = 0 and a^3 = 3 c1 / 2 families
    CHECK(mult_at(*s, {CD(r3), CD(0)}) + 3 * mult_at(*s, {CD(r3), CD(ca)}) == 12);
    CHECK(mult_at(*s, {CD(-r3), CD(0)}) + 3 * mult_at(*s, {CD(-r3), CD(-ca)}) == 12);
    CHECK(mult_at(*s, {CD(r12), CD(r3)}) == 1);
    CHECK(mult_at(*s, {CD(-r12), CD(-r3)}) == 1);
    for (auto& p : s->points) CHECK(p.residual < 1e-10);
  }
  CHECK(mult_at(se, {CD(0), CD(0)}, 1e-12) == 27);
  // the lanes agree point by point; match by proximity because the canonical
  // order can differ where coordinates straddle a rounding boundary
  for (auto& pe : se.points) {
    int hits = 0;
    for (auto& pi : si.points)
      if (std::abs(pe.coords[0] - pi.coords[0]) < 1e-6 &&
          std::abs(pe.coords[1] - pi.coords[1]) < 1e-6) {
        ++hits;
        CHECK(pe.multiplicity == pi.multiplicity);
      }
    CHECK(hits == 1);
  }
}

TEST_CASE("third root symmetry closure is exact") {
  auto s = pcf_solve(3, {2, 2}, {1, 1});
  CD zeta(std::cos(2.0 * M_PI / 3.0), std::sin(2.0 * M_PI / 3.0));
  for (auto& p : s.points) {
    if (std::abs(p.coords[1]) < 1e-9) continue;
    CD ra = p.coords[1] * zeta;
    bool found = false;
    for (auto& q : s.points)
      if (q.coords[0] == p.coords[0] && std::abs(q.coords[1] - ra) < 1e-12) found = true;
    CHECK(found);
  }
}
