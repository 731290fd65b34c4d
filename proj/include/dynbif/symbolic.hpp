#pragma once

#include <algorithm>
#include <map>
#include <sstream>

#include "core.hpp"

namespace dynbif {

constexpr std::size_t kTermBudget = 4096;

/// Canonical variable order: c1 < c2 < ... < a < z < w.
inline int var_rank(const std::string& v) {
  if (v == "a") return 1 << 20;
  if (v == "z") return (1 << 20) + 1;
  if (v == "w") return (1 << 20) + 2;
  if (v.size() >= 2 && v[0] == 'c') return std::stoi(v.substr(1));
  throw DomainError("unknown variable " + v);
}

/// Exact multivariate polynomial over Q. Terms map an exponent vector
/// (aligned with `vars`) to a nonzero rational coefficient; the map order
/// doubles as the canonical monomial order for serialization.
struct SymbolicPoly {
  std::vector<std::string> vars;
  std::map<std::vector<int>, Rat> terms;

  SymbolicPoly() {}
  explicit SymbolicPoly(const Rat& c, std::vector<std::string> vs = {}) : vars(std::move(vs)) {
    if (c != 0) terms[std::vector<int>(vars.size(), 0)] = c;
  }
  static SymbolicPoly variable(const std::string& v) {
    SymbolicPoly p;
    p.vars = {v};
    p.terms[{1}] = 1;
    return p;
  }

  bool is_zero() const { return terms.empty(); }
  std::size_t term_count() const { return terms.size(); }

  int var_index(const std::string& v) const {
    for (std::size_t i = 0; i < vars.size(); ++i)
      if (vars[i] == v) return int(i);
    return -1;
  }

  int total_degree() const {
    int d = -1;
    for (auto& [e, c] : terms) {
      int s = 0;
      for (int x : e) s += x;
      d = std::max(d, s);
    }
    return d;
  }

  int degree_in(const std::string& v) const {
    int i = var_index(v);
    if (i < 0) return terms.empty() ? -1 : 0;
    int d = -1;
    for (auto& [e, c] : terms) d = std::max(d, e[std::size_t(i)]);
    return d;
  }

  bool is_homogeneous(int* deg_out = nullptr) const {
    int d = -1;
    for (auto& [e, c] : terms) {
      int s = 0;
      for (int x : e) s += x;
      if (d < 0)
        d = s;
      else if (s != d)
        return false;
    }
    if (deg_out) *deg_out = d;
    return true;
  }

  /// Re-express over a variable superset (canonically ordered).
  SymbolicPoly aligned_to(const std::vector<std::string>& target) const {
    SymbolicPoly out;
    out.vars = target;
    std::vector<int> pos(vars.size(), -1);
    for (std::size_t i = 0; i < vars.size(); ++i) {
      for (std::size_t j = 0; j < target.size(); ++j)
        if (vars[i] == target[j]) pos[i] = int(j);
      if (pos[i] < 0) throw DomainError("variable lost in alignment");
    }
    for (auto& [e, c] : terms) {
      std::vector<int> ne(target.size(), 0);
      for (std::size_t i = 0; i < vars.size(); ++i) ne[std::size_t(pos[i])] = e[i];
      out.terms[ne] = c;
    }
    return out;
  }

  static std::vector<std::string> var_union(const SymbolicPoly& x, const SymbolicPoly& y) {
    std::vector<std::string> u = x.vars;
    for (auto& v : y.vars)
      if (std::find(u.begin(), u.end(), v) == u.end()) u.push_back(v);
    std::sort(u.begin(), u.end(),
              [](const std::string& p, const std::string& q) { return var_rank(p) < var_rank(q); });
    return u;
  }

  friend SymbolicPoly operator+(const SymbolicPoly& x, const SymbolicPoly& y) {
    auto u = var_union(x, y);
    SymbolicPoly a = x.aligned_to(u), b = y.aligned_to(u);
    for (auto& [e, c] : b.terms) {
      auto it = a.terms.find(e);
      if (it == a.terms.end())
        a.terms[e] = c;
      else {
        it->second += c;
        if (it->second == 0) a.terms.erase(it);
      }
    }
    return a;
  }
  friend SymbolicPoly operator-(const SymbolicPoly& x, const SymbolicPoly& y) {
    return x + (Rat(-1) * y);
  }
  friend SymbolicPoly operator*(const Rat& s, const SymbolicPoly& x) {
    SymbolicPoly out;
    out.vars = x.vars;
    if (s == 0) return out;
    for (auto& [e, c] : x.terms) out.terms[e] = s * c;
    return out;
  }

  SymbolicPoly mul(const SymbolicPoly& y, std::size_t budget = kTermBudget) const {
    auto u = var_union(*this, y);
    SymbolicPoly a = aligned_to(u), b = y.aligned_to(u);
    SymbolicPoly out;
    out.vars = u;
    for (auto& [ea, ca] : a.terms)
      for (auto& [eb, cb] : b.terms) {
        std::vector<int> e(u.size());
        for (std::size_t i = 0; i < u.size(); ++i) e[i] = ea[i] + eb[i];
        auto it = out.terms.find(e);
        if (it == out.terms.end()) {
          Rat c = ca * cb;
          if (c != 0) out.terms[e] = c;
        } else {
          it->second += ca * cb;
          if (it->second == 0) out.terms.erase(it);
        }
        if (out.terms.size() > budget) throw BudgetError("symbolic term budget exceeded");
      }
    return out;
  }
  friend SymbolicPoly operator*(const SymbolicPoly& x, const SymbolicPoly& y) { return x.mul(y); }

  SymbolicPoly pow(int n, std::size_t budget = kTermBudget) const {
    SymbolicPoly r(Rat(1));
    SymbolicPoly base = *this;
    while (n > 0) {
      if (n & 1) r = r.mul(base, budget);
      n >>= 1;
      if (n) base = base.mul(base, budget);
    }
    return r;
  }

  SymbolicPoly derivative(const std::string& v) const {
    SymbolicPoly out;
    out.vars = vars;
    int i = var_index(v);
    if (i < 0) return out;
    for (auto& [e, c] : terms) {
      if (e[std::size_t(i)] == 0) continue;
      std::vector<int> ne = e;
      ne[std::size_t(i)] -= 1;
      out.terms[ne] = c * e[std::size_t(i)];
    }
    return out;
  }

  /// Coefficient of v^k, expressed without v.
  SymbolicPoly coeff_of(const std::string& v, int k) const {
    int i = var_index(v);
    SymbolicPoly out;
    out.vars = vars;
    if (i < 0) {
      if (k == 0) return *this;
      return out;
    }
    std::vector<std::string> rest;
    for (auto& w : vars)
      if (w != v) rest.push_back(w);
    out.vars = rest;
    for (auto& [e, c] : terms) {
      if (e[std::size_t(i)] != k) continue;
      std::vector<int> ne;
      for (std::size_t j = 0; j < e.size(); ++j)
        if (int(j) != i) ne.push_back(e[j]);
      out.terms[ne] = c;
    }
    return out;
  }

  SymbolicPoly substitute_const(const std::string& v, const Rat& val) const {
    int i = var_index(v);
    if (i < 0) return *this;
    std::vector<std::string> rest;
    for (auto& w : vars)
      if (w != v) rest.push_back(w);
    SymbolicPoly out;
    out.vars = rest;
    for (auto& [e, c] : terms) {
      Rat coef = c;
      for (int k = 0; k < e[std::size_t(i)]; ++k) coef *= val;
      if (coef == 0) continue;
      std::vector<int> ne;
      for (std::size_t j = 0; j < e.size(); ++j)
        if (int(j) != i) ne.push_back(e[j]);
      auto it = out.terms.find(ne);
      if (it == out.terms.end())
        out.terms[ne] = coef;
      else {
        it->second += coef;
        if (it->second == 0) out.terms.erase(it);
      }
    }
    return out;
  }

  /// Evaluate with values aligned to `vars`; T needs *, +=, and conv(Rat).
  template <typename T, typename Conv>
  T eval(const std::vector<T>& vals, Conv conv) const {
    if (vals.size() != vars.size()) throw DomainError("eval arity mismatch");
    std::vector<std::vector<T>> pows(vars.size());
    for (std::size_t i = 0; i < vars.size(); ++i) {
      int dmax = degree_in(vars[i]);
      pows[i].push_back(conv(Rat(1)));
      for (int k = 1; k <= dmax; ++k) pows[i].push_back(pows[i].back() * vals[i]);
    }
    T acc = conv(Rat(0));
    for (auto& [e, c] : terms) {
      T t = conv(c);
      for (std::size_t i = 0; i < vars.size(); ++i)
        if (e[i] > 0) t = t * pows[i][std::size_t(e[i])];
      acc = acc + t;
    }
    return acc;
  }

  CD eval_cd(const std::vector<CD>& vals) const {
    return eval<CD>(vals, [](const Rat& r) { return CD(r.get_d(), 0.0); });
  }
  GaussRat eval_exact(const std::vector<GaussRat>& vals) const {
    return eval<GaussRat>(vals, [](const Rat& r) { return GaussRat(r); });
  }
  Rat eval_rat(const std::vector<Rat>& vals) const {
    return eval<Rat>(vals, [](const Rat& r) { return r; });
  }

  friend bool operator==(const SymbolicPoly& x, const SymbolicPoly& y) {
    return (x - y).is_zero();
  }

  /// Human-readable form, leading monomial first.
  std::string str() const {
    if (terms.empty()) return "0";
    // highest power of the last-ranked variable prints first
    std::vector<const std::pair<const std::vector<int>, Rat>*> order;
    order.reserve(terms.size());
    for (auto& t : terms) order.push_back(&t);
    std::sort(order.begin(), order.end(), [](auto* p, auto* q) {
      return std::lexicographical_compare(q->first.rbegin(), q->first.rend(),
                                          p->first.rbegin(), p->first.rend());
    });
    std::ostringstream os;
    bool first = true;
    for (auto* t : order) {
      const auto& [e, c] = *t;
      Rat ac = rabs(c);
      if (first) {
        if (c < 0) os << "-";
        first = false;
      } else {
        os << (c < 0 ? " - " : " + ");
      }
      bool havevar = false;
      for (int x : e) havevar = havevar || x > 0;
      if (ac != 1 || !havevar) os << ac.get_str();
      bool prod = ac != 1 || !havevar;
      for (std::size_t i = 0; i < vars.size(); ++i) {
        if (e[i] == 0) continue;
        if (prod) os << "*";
        os << vars[i];
        if (e[i] > 1) os << "^" << e[i];
        prod = true;
      }
    }
    return os.str();
  }

  /// Line-oriented exact round-trip form used by the disk cache.
  std::string to_text() const {
    std::ostringstream os;
    os << "vars";
    for (auto& v : vars) os << " " << v;
    os << "\n";
    for (auto& [e, c] : terms) {
      for (int x : e) os << x << " ";
      os << ": " << c.get_str() << "\n";
    }
    return os.str();
  }

  static SymbolicPoly from_text(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    SymbolicPoly p;
    if (!std::getline(is, line) || line.substr(0, 4) != "vars")
      throw DomainError("bad symbolic text header");
    {
      std::istringstream ls(line.substr(4));
      std::string v;
      while (ls >> v) p.vars.push_back(v);
    }
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      std::istringstream ls(line);
      std::vector<int> e(p.vars.size());
      for (auto& x : e) ls >> x;
      std::string colon, coef;
      ls >> colon >> coef;
      if (colon != ":") throw DomainError("bad symbolic text term");
      p.terms[e] = Rat(coef);
    }
    return p;
  }
};

/// Quotient of dense polynomials in `v` whose divisor has a constant
/// (rational, nonzero) leading coefficient in v. `verified` reports that
/// the remainder vanished identically.
struct ExactQuotient {
  SymbolicPoly quotient;
  bool verified = false;
};

inline ExactQuotient divide_exact(const SymbolicPoly& num, const SymbolicPoly& den,
                                  const std::string& v, std::size_t budget = kTermBudget) {
  int dn = num.degree_in(v), dd = den.degree_in(v);
  if (dd < 0) throw DomainError("division by zero polynomial");
  SymbolicPoly lead = den.coeff_of(v, dd);
  if (lead.total_degree() > 0) throw DomainError("divisor leading coefficient not constant");
  Rat lc = lead.terms.empty() ? Rat(0) : lead.terms.begin()->second;
  if (lc == 0) throw DomainError("division by zero polynomial");

  std::vector<SymbolicPoly> rem(std::size_t(std::max(dn, 0)) + 1);
  for (int k = 0; k <= dn; ++k) rem[std::size_t(k)] = num.coeff_of(v, k);
  SymbolicPoly zv = SymbolicPoly::variable(v);
  SymbolicPoly q;
  for (int k = dn - dd; k >= 0; --k) {
    SymbolicPoly c = Rat(1) / lc * rem[std::size_t(k + dd)];
    if (!c.is_zero()) {
      q = q + c.mul(zv.pow(k), budget);
      for (int j = 0; j <= dd; ++j)
        rem[std::size_t(k + j)] = rem[std::size_t(k + j)] - c.mul(den.coeff_of(v, j), budget);
    }
  }
  ExactQuotient out;
  out.quotient = q;
  out.verified = true;
  for (auto& r : rem) out.verified = out.verified && r.is_zero();
  return out;
}

}  // namespace dynbif
