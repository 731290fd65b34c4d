#pragma once

#include <map>
#include <numeric>
#include <set>

#include "core.hpp"

namespace dynbif {

/// Reduced fraction in [0, 1) viewed as a point of R/Z.
struct Angle {
  long long num = 0;
  long long den = 1;

  Angle() {}
  Angle(long long n, long long d) {
    if (d <= 0) throw DomainError("angle denominator must be positive");
    n %= d;
    if (n < 0) n += d;
    long long g = std::gcd(n, d);
    num = n / g;
    den = d / g;
  }

  double value() const { return double(num) / double(den); }

  friend bool operator==(const Angle& x, const Angle& y) {
    return x.num == y.num && x.den == y.den;
  }
  friend bool operator<(const Angle& x, const Angle& y) {
    return (__int128)x.num * y.den < (__int128)y.num * x.den;
  }
};

/// alpha + p/q on the circle.
inline Angle angle_add(const Angle& x, long long p, long long q) {
  __int128 den = (__int128)x.den * q;
  __int128 num = (__int128)x.num * q + (__int128)p * x.den;
  if (den > (__int128)1 << 62) throw BudgetError("angle denominator overflow");
  long long d = (long long)den;
  long long n = (long long)(num % den);
  return Angle(n, d);
}

/// Multiplication by d on R/Z.
inline Angle phi_d(const Angle& x, int d) { return Angle(x.num * d % x.den, x.den); }

/// Strict membership of x in the open ccw arc (lo, hi).
inline bool in_open_arc(const Angle& x, const Angle& lo, const Angle& hi) {
  if (lo < hi) return lo < x && x < hi;
  return lo < x || x < hi;
}

/// Exact preperiod and eventual period of the forward orbit under times-d.
inline std::pair<int, int> preperiod_period(const Angle& x, int d) {
  std::map<std::pair<long long, long long>, int> seen;
  Angle cur = x;
  int step = 0;
  while (true) {
    auto key = std::make_pair(cur.num, cur.den);
    auto it = seen.find(key);
    if (it != seen.end()) return {it->second, step - it->second};
    seen[key] = step;
    cur = phi_d(cur, d);
    ++step;
  }
}

inline int mobius(int n) {
  int mu = 1;
  for (int p = 2; p * p <= n; ++p) {
    if (n % p) continue;
    n /= p;
    if (n % p == 0) return 0;
    mu = -mu;
  }
  if (n > 1) mu = -mu;
  return mu;
}

/// Number of points of exact period q under times-d:
/// sum over l | q of mu(q/l) (d^l - 1).
inline long long count_exact_periodic(int d, int q) {
  long long total = 0;
  for (int l = 1; l <= q; ++l) {
    if (q % l) continue;
    long long pw = 1;
    for (int k = 0; k < l; ++k) {
      pw *= d;
      if (pw > (1ll << 40)) throw BudgetError("periodic point count overflow");
    }
    total += mobius(q / l) * (pw - 1);
  }
  return total;
}

/// Angles of exact period q (denominators divide d^q - 1).
inline std::vector<Angle> exact_periodic_angles(int d, int q) {
  long long den = 1;
  for (int k = 0; k < q; ++k) {
    den *= d;
    if (den > (1ll << 40)) throw BudgetError("angle enumeration overflow");
  }
  den -= 1;
  std::vector<Angle> out;
  for (long long k = 0; k < den; ++k) {
    Angle x(k, den);
    if (preperiod_period(x, d).second == q && preperiod_period(x, d).first == 0) out.push_back(x);
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// P(m, n): angles whose orbit becomes periodic after exactly n steps with
/// eventual period exactly m - n; requires m > n >= 1.
inline std::vector<Angle> enumerate_P(int d, int m, int n) {
  if (!(m > n && n >= 1)) throw DomainError("need m > n >= 1");
  int q = m - n;
  std::vector<Angle> level = exact_periodic_angles(d, q);
  for (int j = 1; j <= n; ++j) {
    std::vector<Angle> next;
    for (auto& x : level)
      for (int t = 0; t < d; ++t) {
        Angle pre = angle_add(Angle(x.num, (long long)x.den * d), t, d);
        auto [pp, per] = preperiod_period(pre, d);
        if (pp == j && per == q) next.push_back(pre);
      }
    std::sort(next.begin(), next.end());
    next.erase(std::unique(next.begin(), next.end()), next.end());
    level = std::move(next);
  }
  return level;
}

/// Count of set members in the half-open interval [x, x + w) on the circle.
inline long long interval_count(const std::vector<Angle>& set, double x, double w) {
  x -= std::floor(x);
  long long cnt = 0;
  for (auto& t : set) {
    double v = t.value() - x;
    v -= std::floor(v);
    if (v < w) ++cnt;
  }
  return cnt;
}

using AnglePair = std::pair<Angle, Angle>;

/// True iff the pairs are disjoint and p2 lies inside one connected
/// component of the circle minus p1.
inline bool is_unlinked(const AnglePair& p1, const AnglePair& p2) {
  const Angle& a = p1.first;
  const Angle& b = p1.second;
  for (auto& x : {p2.first, p2.second})
    if (x == a || x == b) return false;
  bool u = in_open_arc(p2.first, a, b);
  bool v = in_open_arc(p2.second, a, b);
  return u == v;
}

struct Portrait {
  std::vector<Angle> alphas;
  std::vector<AnglePair> pairs;
  std::vector<std::pair<int, int>> orbit_types;
};

/// Builds a (d-1)-tuple of pairwise unlinked angle pairs theta_i =
/// {alpha_i, alpha_i + 1/d} with alpha_i of preperiod n_i and period
/// m_i - n_i, consecutive alphas spaced inside (1/d, 1/(d-1)).
inline Portrait build_portraits(int d, const std::vector<std::pair<int, int>>& types) {
  if (int(types.size()) != d - 1) throw DomainError("need d-1 orbit types");
  Portrait out;
  out.orbit_types = types;
  for (std::size_t i = 0; i < types.size(); ++i) {
    auto [m, n] = types[i];
    auto pool = enumerate_P(d, m, n);
    if (pool.empty()) throw NumericalError("empty preperiodic angle pool");
    bool found = false;
    Angle chosen;
    if (i == 0) {
      chosen = pool.front();
      found = true;
    } else {
      Angle lo = angle_add(out.alphas.back(), 1, d);
      Angle hi = angle_add(out.alphas.back(), 1, d - 1);
      for (auto& x : pool)
        if (in_open_arc(x, lo, hi)) {
          chosen = x;
          found = true;
          break;
        }
    }
    if (!found) throw NumericalError("no angle available in the spacing window");
    out.alphas.push_back(chosen);
    out.pairs.emplace_back(chosen, angle_add(chosen, 1, d));
  }
  for (std::size_t i = 0; i < out.pairs.size(); ++i)
    for (std::size_t j = i + 1; j < out.pairs.size(); ++j)
      if (!is_unlinked(out.pairs[i], out.pairs[j]) || !is_unlinked(out.pairs[j], out.pairs[i]))
        throw NumericalError("portrait pairs fail the unlinked check");
  return out;
}

}  // namespace dynbif
