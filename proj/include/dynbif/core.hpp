#pragma once

#include <gmpxx.h>

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace dynbif {

using Rat = mpq_class;
using Int = mpz_class;
using CD = std::complex<double>;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct BudgetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline Rat rabs(const Rat& x) { return x < 0 ? Rat(-x) : x; }
inline Int iabs(const Int& x) { return x < 0 ? Int(-x) : x; }

/// log of a positive integer, stable for operands far beyond double range.
inline double log_int(const Int& n) {
  signed long e = 0;
  double m = mpz_get_d_2exp(&e, n.get_mpz_t());
  return std::log(m) + double(e) * M_LN2;
}

/// log |q| for q != 0.
inline double log_abs(const Rat& q) {
  return log_int(iabs(q.get_num())) - log_int(q.get_den());
}

inline double log_plus(double x) { return x > 0 ? x : 0.0; }

/// Exact Gaussian rational re + im*i. Supports the ring ops needed to
/// iterate the family and to verify snapped solutions exactly.
struct GaussRat {
  Rat re, im;

  GaussRat() : re(0), im(0) {}
  GaussRat(Rat r) : re(std::move(r)), im(0) {}
  GaussRat(Rat r, Rat i) : re(std::move(r)), im(std::move(i)) {}

  bool is_real() const { return im == 0; }
  bool is_zero() const { return re == 0 && im == 0; }
  Rat norm2() const { return re * re + im * im; }
  CD to_cd() const { return CD(re.get_d(), im.get_d()); }

  GaussRat conj() const { return {re, Rat(-im)}; }

  friend GaussRat operator+(const GaussRat& x, const GaussRat& y) {
    return {Rat(x.re + y.re), Rat(x.im + y.im)};
  }
  friend GaussRat operator-(const GaussRat& x, const GaussRat& y) {
    return {Rat(x.re - y.re), Rat(x.im - y.im)};
  }
  friend GaussRat operator-(const GaussRat& x) { return {Rat(-x.re), Rat(-x.im)}; }
  friend GaussRat operator*(const GaussRat& x, const GaussRat& y) {
    return {Rat(x.re * y.re - x.im * y.im), Rat(x.re * y.im + x.im * y.re)};
  }
  friend GaussRat operator*(const Rat& s, const GaussRat& y) {
    return {Rat(s * y.re), Rat(s * y.im)};
  }
  friend GaussRat operator/(const GaussRat& x, const Rat& s) {
    return {Rat(x.re / s), Rat(x.im / s)};
  }
  friend bool operator==(const GaussRat& x, const GaussRat& y) {
    return x.re == y.re && x.im == y.im;
  }
  friend bool operator!=(const GaussRat& x, const GaussRat& y) { return !(x == y); }

  std::string str() const {
    if (im == 0) return re.get_str();
    return re.get_str() + (im > 0 ? "+" : "") + im.get_str() + "i";
  }
};

/// value with a rigorous two-sided error bound: truth lies in
/// [value - error, value + error].
struct CertifiedValue {
  double value = 0.0;
  double error = 0.0;
};

inline std::uint64_t fnv1a64(const std::string& s, std::uint64_t h = 1469598103934665603ull) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t h) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[i] = digits[h & 0xf];
    h >>= 4;
  }
  return s;
}

/// Splits [0, n) into contiguous chunks, one worker thread per chunk.
/// Workers write disjoint indices, so assembly order never depends on
/// scheduling and reruns are bit-identical.
inline void parallel_for(std::size_t n, unsigned threads,
                         const std::function<void(std::size_t, std::size_t)>& body) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  if (threads <= 1 || n < 2) {
    body(0, n);
    return;
  }
  std::size_t chunk = (n + threads - 1) / threads;
  std::vector<std::thread> pool;
  for (std::size_t lo = 0; lo < n; lo += chunk) {
    std::size_t hi = std::min(n, lo + chunk);
    pool.emplace_back([&body, lo, hi] { body(lo, hi); });
  }
  for (auto& t : pool) t.join();
}

/// Deterministic RNG stream; all stochastic sampling in the toolkit draws
/// from one of these, seeded from the run configuration.
struct Rng {
  std::mt19937_64 gen;
  explicit Rng(std::uint64_t seed) : gen(seed) {}

  double uniform(double lo, double hi) {
    std::uniform_real_distribution<double> dist(lo, hi);
    return dist(gen);
  }
  long uniform_int(long lo, long hi) {
    std::uniform_int_distribution<long> dist(lo, hi);
    return dist(gen);
  }
  CD disk(double radius) {
    while (true) {
      double x = uniform(-1, 1), y = uniform(-1, 1);
      if (x * x + y * y <= 1.0) return CD(radius * x, radius * y);
    }
  }
  /// random nonzero rational p/q with |p| <= pmax, 1 <= q <= qmax
  Rat rational(long pmax, long qmax) {
    long p = 0;
    while (p == 0) p = uniform_int(-pmax, pmax);
    Rat r(p, uniform_int(1, qmax));
    r.canonicalize();
    return r;
  }
};

}  // namespace dynbif
