#pragma once

#include <optional>

#include "family.hpp"

namespace dynbif {

using MatQ = std::vector<std::vector<Rat>>;

/// Reduced row echelon form in place, exact arithmetic. Returns the rank.
inline int rref(MatQ& M) {
  if (M.empty()) return 0;
  const std::size_t rows = M.size(), cols = M[0].size();
  std::size_t lead = 0;
  int rank = 0;
  for (std::size_t r = 0; r < rows && lead < cols; ++r) {
    std::size_t piv = r;
    while (piv < rows && M[piv][lead] == 0) ++piv;
    if (piv == rows) {
      --r;
      ++lead;
      continue;
    }
    std::swap(M[piv], M[r]);
    Rat inv = 1 / M[r][lead];
    for (std::size_t j = lead; j < cols; ++j) M[r][j] *= inv;
    for (std::size_t i = 0; i < rows; ++i) {
      if (i == r || M[i][lead] == 0) continue;
      Rat f = M[i][lead];
      for (std::size_t j = lead; j < cols; ++j) M[i][j] -= f * M[r][j];
    }
    ++lead;
    ++rank;
  }
  return rank;
}

/// Exact solution of A x = b (any one solution, free variables set to zero).
inline std::optional<std::vector<Rat>> solve_exact(const MatQ& A,
                                                   const std::vector<Rat>& b) {
  if (A.size() != b.size()) throw ConfigError("solve_exact: shape mismatch");
  if (A.empty()) return std::vector<Rat>{};
  const std::size_t rows = A.size(), cols = A[0].size();
  MatQ aug(rows, std::vector<Rat>(cols + 1));
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) aug[i][j] = A[i][j];
    aug[i][cols] = b[i];
  }
  rref(aug);
  std::vector<Rat> x(cols, Rat(0));
  for (std::size_t i = 0; i < rows; ++i) {
    std::size_t lead = 0;
    while (lead < cols && aug[i][lead] == 0) ++lead;
    if (lead == cols) {
      if (aug[i][cols] != 0) return std::nullopt;
      continue;
    }
    x[lead] = aug[i][cols];
  }
  return x;
}

/// The marked critical values P(0), P(c_1), ..., P(c_{d-2}) as polynomials
/// in (c_1, ..., c_{d-2}, a). Each is homogeneous of degree d.
inline std::vector<SymbolicPoly> critical_values(int d) {
  std::vector<SymbolicPoly> out;
  for (int i = 0; i <= d - 2; ++i) out.push_back(symbolic_iterate(d, i, 1));
  return out;
}

/// Certificate expressing each parameter power x_i^m inside the ideal
/// generated by the critical values: x_i^m = sum_j Q[i][j] * V_j with
/// every Q[i][j] homogeneous of degree m - d. Feeds explicit lower bounds
/// max_j |V_j| >= M^d / K (archimedean) and >= beta_v M_v^d (p-adic),
/// M = max coordinate size.
struct PowerCert {
  int d = 0;
  int m = 0;
  std::vector<std::string> vars;
  std::vector<std::vector<SymbolicPoly>> Q;
  Rat K;
};

namespace detail {
inline void homogeneous_exponents(int nvars, int deg, std::vector<int>& cur,
                                  std::vector<std::vector<int>>& out) {
  if ((int)cur.size() == nvars - 1) {
    cur.push_back(deg);
    out.push_back(cur);
    cur.pop_back();
    return;
  }
  for (int e = 0; e <= deg; ++e) {
    cur.push_back(e);
    homogeneous_exponents(nvars, deg - e, cur, out);
    cur.pop_back();
  }
}

inline std::vector<std::vector<int>> homogeneous_exponents(int nvars, int deg) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur;
  homogeneous_exponents(nvars, deg, cur, out);
  return out;
}
}  // namespace detail

inline Rat cert_row_mass(const std::vector<SymbolicPoly>& row) {
  Rat s = 0;
  for (const auto& q : row)
    for (const auto& [e, coef] : q.terms) s += rabs(coef);
  return s;
}

inline std::optional<PowerCert> try_power_cert(int d, int m) {
  auto vars = param_vars(d);
  const int nv = (int)vars.size();
  auto V = critical_values(d);
  for (auto& v : V) v = v.aligned_to(vars);
  auto rows_exp = detail::homogeneous_exponents(nv, m);
  auto mul_exp = detail::homogeneous_exponents(nv, m - d);
  std::map<std::vector<int>, std::size_t> row_of;
  for (std::size_t r = 0; r < rows_exp.size(); ++r) row_of[rows_exp[r]] = r;

  struct Col {
    std::size_t j;
    std::vector<int> mu;
  };
  std::vector<Col> cols;
  MatQ A(rows_exp.size());
  for (auto& row : A) row.assign(V.size() * mul_exp.size(), Rat(0));
  std::size_t cidx = 0;
  for (std::size_t j = 0; j < V.size(); ++j)
    for (const auto& mu : mul_exp) {
      for (const auto& [e, coef] : V[j].terms) {
        std::vector<int> tot(e);
        for (int k = 0; k < nv; ++k) tot[(std::size_t)k] += mu[(std::size_t)k];
        A[row_of.at(tot)][cidx] = coef;
      }
      cols.push_back({j, mu});
      ++cidx;
    }

  PowerCert cert;
  cert.d = d;
  cert.m = m;
  cert.vars = vars;
  cert.K = 0;
  for (int xi = 0; xi < nv; ++xi) {
    std::vector<Rat> b(rows_exp.size(), Rat(0));
    std::vector<int> target(nv, 0);
    target[(std::size_t)xi] = m;
    b[row_of.at(target)] = 1;
    auto sol = solve_exact(A, b);
    if (!sol) return std::nullopt;
    std::vector<SymbolicPoly> row;
    for (std::size_t j = 0; j < V.size(); ++j) {
      SymbolicPoly q;
      q.vars = vars;
      row.push_back(q);
    }
    for (std::size_t cc = 0; cc < cols.size(); ++cc)
      if ((*sol)[cc] != 0) row[cols[cc].j].terms[cols[cc].mu] = (*sol)[cc];
    Rat mass = cert_row_mass(row);
    if (mass > cert.K) cert.K = mass;
    cert.Q.push_back(row);
  }
  return cert;
}

inline PowerCert find_power_cert(int d, int max_m = 12) {
  for (int m = d; m <= max_m; ++m)
    if (auto cert = try_power_cert(d, m)) return *cert;
  throw BudgetError("no power certificate up to m = " + std::to_string(max_m));
}

/// Exact symbolic check of the certificate identity.
inline bool verify_power_cert(const PowerCert& cert) {
  auto V = critical_values(cert.d);
  const int nv = (int)cert.vars.size();
  for (int xi = 0; xi < nv; ++xi) {
    SymbolicPoly lhs = SymbolicPoly::variable(cert.vars[(std::size_t)xi]).pow(cert.m);
    SymbolicPoly rhs;
    rhs.vars = cert.vars;
    for (std::size_t j = 0; j < V.size(); ++j)
      rhs = rhs + cert.Q[(std::size_t)xi][j].mul(V[j].aligned_to(cert.vars));
    if (!(lhs.aligned_to(cert.vars) == rhs)) return false;
    for (const auto& q : cert.Q[(std::size_t)xi])
      if (!q.is_zero() && !(q.is_homogeneous() &&
                            q.total_degree() == cert.m - cert.d))
        return false;
  }
  return true;
}

inline const PowerCert& power_cert(int d) {
  static std::map<int, PowerCert> cache;
  auto it = cache.find(d);
  if (it == cache.end()) it = cache.emplace(d, find_power_cert(d)).first;
  return it->second;
}

}  // namespace dynbif
