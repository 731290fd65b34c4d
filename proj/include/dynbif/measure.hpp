#pragma once

#include "dynbif/green.hpp"
#include "dynbif/multiplier.hpp"

#include <array>
#include <functional>

namespace dynbif {

/// Certified bound on the escape-free region: every parameter with G = 0 has
/// max(|c|, |a|) <= c_bound, and the a coordinate alone stays within a_bound.
struct SupportBox {
  double c_bound = 0;
  double a_bound = 0;
};

inline SupportBox support_box(int d) {
  auto b = bh_constants(d);
  double B = std::max(b.M0, std::exp(b.A_minus));
  double ab = B;
  if (d == 2) ab = std::min(B, std::sqrt(2.0 * B));
  return {B, ab};
}

struct AtomicMeasure {
  std::vector<std::vector<CD>> points;
  std::vector<double> weights;
};

/// Uniform (multiplicity-weighted) probability measure on the filtered points.
inline AtomicMeasure atomic_from(const PcfSolutionSet& sols,
                                 const std::function<bool(const PcfPoint&)>& filter = nullptr,
                                 bool with_multiplicity = true) {
  AtomicMeasure mu;
  double total = 0.0;
  for (auto& pt : sols.points) {
    if (filter && !filter(pt)) continue;
    double wgt = with_multiplicity ? double(pt.multiplicity) : 1.0;
    mu.points.push_back(pt.coords);
    mu.weights.push_back(wgt);
    total += wgt;
  }
  if (mu.points.empty()) throw DomainError("no points survived the filter");
  for (auto& wgt : mu.weights) wgt /= total;
  return mu;
}

struct GridMeasure {
  std::string mode;  // "plane", "slice", or "full"
  int d = 0;
  GridField masses;  // a-plane masses; in full mode the marginal over c_1
  // full mode only: c_1-plane extents and the flat 4-d cell masses indexed
  // ((iu * nv + iv) * nx + ix) * ny + iy
  double u0 = 0, u1 = 0, v0 = 0, v1 = 0;
  int nu = 0, nv = 0;
  std::vector<double> cells;
  CD slice_c1{0, 0};
  double mass_before = 0.0;
  double clipped_fraction = 0.0;
  bool unreliable = false;
};

namespace detail {

/// Signed cell masses from the five point stencil of the sampled potential,
/// (integral of the Laplacian over the cell) / 2 pi. Boundary ring left empty.
inline GridMeasure laplacian_measure(const GridField& g) {
  GridMeasure out;
  out.masses = g;
  std::fill(out.masses.values.begin(), out.masses.values.end(), 0.0);
  const double rx = g.hy() / g.hx(), ry = g.hx() / g.hy();
  double pos = 0.0, neg = 0.0, signedsum = 0.0;
  for (int iy = 1; iy + 1 < g.ny; ++iy)
    for (int ix = 1; ix + 1 < g.nx; ++ix) {
      double c = g.at(ix, iy);
      double mass = (rx * (g.at(ix + 1, iy) + g.at(ix - 1, iy) - 2 * c) +
                     ry * (g.at(ix, iy + 1) + g.at(ix, iy - 1) - 2 * c)) /
                    (2.0 * M_PI);
      signedsum += mass;
      if (mass >= 0) {
        pos += mass;
        out.masses.at(ix, iy) = mass;
      } else {
        neg -= mass;
      }
    }
  out.mass_before = signedsum;
  out.clipped_fraction = pos > 0 ? neg / (pos + neg) : 1.0;
  out.unreliable = out.clipped_fraction > 0.05;
  if (pos > 0)
    for (auto& v : out.masses.values) v /= pos;
  return out;
}

inline void blur_axis(std::vector<double>& vals, const std::array<int, 4>& n, int axis, int rad) {
  if (rad <= 0) return;
  std::array<long, 4> stride{};
  stride[3] = 1;
  for (int k = 3; k-- > 0;) stride[std::size_t(k)] = stride[std::size_t(k + 1)] * n[std::size_t(k + 1)];
  const int len = n[std::size_t(axis)];
  const long st = stride[std::size_t(axis)];
  std::vector<double> line(static_cast<std::size_t>(len));
  long outer = 1;
  for (int k = 0; k < 4; ++k)
    if (k != axis) outer *= n[std::size_t(k)];
  for (long o = 0; o < outer; ++o) {
    // decode the outer index into a base offset skipping the blurred axis
    long rem = o, base = 0;
    for (int k = 0; k < 4; ++k) {
      if (k == axis) continue;
      long span = rem % n[std::size_t(k)];
      rem /= n[std::size_t(k)];
      base += span * stride[std::size_t(k)];
    }
    for (int i = 0; i < len; ++i) line[std::size_t(i)] = vals[std::size_t(base + i * st)];
    double acc = 0.0;
    int width = 2 * rad + 1;
    std::vector<double> sm(static_cast<std::size_t>(len));
    for (int i = -rad; i <= rad; ++i) acc += line[std::size_t(std::clamp(i, 0, len - 1))];
    for (int i = 0; i < len; ++i) {
      sm[std::size_t(i)] = acc / width;
      int drop = std::clamp(i - rad, 0, len - 1);
      int add = std::clamp(i + rad + 1, 0, len - 1);
      acc += line[std::size_t(add)] - line[std::size_t(drop)];
    }
    for (int i = 0; i < len; ++i) vals[std::size_t(base + i * st)] = sm[std::size_t(i)];
  }
}

}  // namespace detail

/// Discrete bifurcation measure of the quadratic lane: the distributional
/// Laplacian of G over an a-plane region, clipped to nonnegative cell masses
/// and normalized to total one.
inline GridMeasure mu_bif_d2(double x0, double x1, double y0, double y1, int res, double tol,
                             int threads = 1) {
  GridField g = G_grid(2, CD(0), x0, x1, y0, y1, res, res, tol, threads);
  GridMeasure out = detail::laplacian_measure(g);
  out.mode = "plane";
  out.d = 2;
  return out;
}

inline GridMeasure mu_bif_d2(int res = 512, double tol = 1e-8, int threads = 1) {
  double r = 1.25 * support_box(2).a_bound;
  return mu_bif_d2(-r, r, -r, r, res, tol, threads);
}

/// Visualization slice of the cubic bifurcation locus at a fixed c_1: the
/// Laplacian of the sliced potential. Labeled a slice, not the measure.
inline GridMeasure mu_bif_d3_slice(CD c1, double x0, double x1, double y0, double y1, int res,
                                   double tol, int threads = 1) {
  GridField g = G_grid(3, c1, x0, x1, y0, y1, res, res, tol, threads);
  GridMeasure out = detail::laplacian_measure(g);
  out.mode = "slice";
  out.d = 3;
  out.slice_c1 = c1;
  return out;
}

/// Discrete Monge-Ampere measure of the cubic lane on a full 4-real grid:
/// determinant of the complex Hessian of the (optionally mollified) potential,
/// with cell masses (8/pi^2) det H times the cell 4-volume. smoothing counts
/// box-blur passes of radius one cell applied along every axis.
inline GridMeasure mu_bif_d3(double cb, double ab, int res, double tol, int smoothing = 1,
                             int threads = 1) {
  if (res < 8) throw ConfigError("full cubic grid needs at least 8 nodes per axis");
  if (std::size_t(res) * res * res * res > std::size_t(40) * 40 * 40 * 40)
    throw ConfigError("full cubic grid capped at 40 nodes per axis");
  GridMeasure out;
  out.mode = "full";
  out.d = 3;
  out.u0 = -cb;
  out.u1 = cb;
  out.v0 = -cb;
  out.v1 = cb;
  out.nu = res;
  out.nv = res;
  out.masses = make_grid(-ab, ab, -ab, ab, res, res);
  std::fill(out.masses.values.begin(), out.masses.values.end(), 0.0);
  const std::array<int, 4> n{res, res, res, res};
  std::vector<double> G(std::size_t(res) * res * res * res, 0.0);
  const double hu = 2.0 * cb / res, hx = 2.0 * ab / res;
  auto node = [&](int i, double lo, double h) { return lo + (i + 0.5) * h; };
  parallel_for(G.size(), threads, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t k = lo; k < hi; ++k) {
      std::size_t rem = k;
      int iy = int(rem % std::size_t(res));
      rem /= std::size_t(res);
      int ix = int(rem % std::size_t(res));
      rem /= std::size_t(res);
      int iv = int(rem % std::size_t(res));
      int iu = int(rem / std::size_t(res));
      CD c1(node(iu, -cb, hu), node(iv, -cb, hu));
      CD a(node(ix, -ab, hx), node(iy, -ab, hx));
      try {
        G[k] = G_point(ParamCD(3, {c1}, a), tol).value;
      } catch (const BudgetError&) {
      }
    }
  });
  for (int pass = 0; pass < smoothing; ++pass)
    for (int axis = 0; axis < 4; ++axis) detail::blur_axis(G, n, axis, 1);
  auto idx = [&](int iu, int iv, int ix, int iy) {
    return ((std::size_t(iu) * res + iv) * res + ix) * std::size_t(res) + iy;
  };
  out.cells.assign(G.size(), 0.0);
  double pos = 0.0, neg = 0.0, signedsum = 0.0;
  const double vol = hu * hu * hx * hx;
  for (int iu = 1; iu + 1 < res; ++iu)
    for (int iv = 1; iv + 1 < res; ++iv)
      for (int ix = 1; ix + 1 < res; ++ix)
        for (int iy = 1; iy + 1 < res; ++iy) {
          double c = G[idx(iu, iv, ix, iy)];
          double duu = (G[idx(iu + 1, iv, ix, iy)] + G[idx(iu - 1, iv, ix, iy)] - 2 * c) / (hu * hu);
          double dvv = (G[idx(iu, iv + 1, ix, iy)] + G[idx(iu, iv - 1, ix, iy)] - 2 * c) / (hu * hu);
          double dxx = (G[idx(iu, iv, ix + 1, iy)] + G[idx(iu, iv, ix - 1, iy)] - 2 * c) / (hx * hx);
          double dyy = (G[idx(iu, iv, ix, iy + 1)] + G[idx(iu, iv, ix, iy - 1)] - 2 * c) / (hx * hx);
          auto mixed = [&](int du, int dv, int dx, int dy, double h1, double h2) {
            return (G[idx(iu + du, iv + dv, ix + dx, iy + dy)] -
                    G[idx(iu + du, iv + dv, ix - dx, iy - dy)] -
                    G[idx(iu - du, iv - dv, ix + dx, iy + dy)] +
                    G[idx(iu - du, iv - dv, ix - dx, iy - dy)]) /
                   (4.0 * h1 * h2);
          };
          double dux = mixed(1, 0, 1, 0, hu, hx);
          double dvy = mixed(0, 1, 0, 1, hu, hx);
          double duy = mixed(1, 0, 0, 1, hu, hx);
          double dvx = mixed(0, 1, 1, 0, hu, hx);
          double h11 = (duu + dvv) / 4.0;
          double h22 = (dxx + dyy) / 4.0;
          double re12 = (dux + dvy) / 4.0;
          double im12 = (duy - dvx) / 4.0;
          double dens = (8.0 / (M_PI * M_PI)) * (h11 * h22 - re12 * re12 - im12 * im12);
          double mass = dens * vol;
          signedsum += mass;
          if (mass >= 0) {
            pos += mass;
            out.cells[idx(iu, iv, ix, iy)] = mass;
          } else {
            neg -= mass;
          }
        }
  out.mass_before = signedsum;
  out.clipped_fraction = pos > 0 ? neg / (pos + neg) : 1.0;
  out.unreliable = out.clipped_fraction > 0.05;
  if (pos > 0)
    for (auto& v : out.cells) v /= pos;
  for (int iu = 0; iu < res; ++iu)
    for (int iv = 0; iv < res; ++iv)
      for (int ix = 0; ix < res; ++ix)
        for (int iy = 0; iy < res; ++iy) out.masses.at(ix, iy) += out.cells[idx(iu, iv, ix, iy)];
  return out;
}

inline GridMeasure mu_bif_d3(int res = 20, double tol = 1e-6, int smoothing = 1, int threads = 1) {
  auto box = support_box(3);
  return mu_bif_d3(1.25 * box.c_bound, 1.25 * box.a_bound, res, tol, smoothing, threads);
}

/// Fraction of the grid mass inside the certified escape-free box.
inline double fraction_in_support(const GridMeasure& gm) {
  auto box = support_box(gm.d);
  double inside = 0.0, total = 0.0;
  if (gm.mode == "full") {
    auto idx = [&](int iu, int iv, int ix, int iy) {
      return ((std::size_t(iu) * gm.nv + iv) * gm.masses.nx + ix) * std::size_t(gm.masses.ny) + iy;
    };
    const double hu = (gm.u1 - gm.u0) / gm.nu, hv = (gm.v1 - gm.v0) / gm.nv;
    for (int iu = 0; iu < gm.nu; ++iu)
      for (int iv = 0; iv < gm.nv; ++iv) {
        CD c1(gm.u0 + (iu + 0.5) * hu, gm.v0 + (iv + 0.5) * hv);
        for (int ix = 0; ix < gm.masses.nx; ++ix)
          for (int iy = 0; iy < gm.masses.ny; ++iy) {
            double mass = gm.cells[idx(iu, iv, ix, iy)];
            total += mass;
            CD a(gm.masses.cx(ix), gm.masses.cy(iy));
            if (std::max(std::abs(c1), std::abs(a)) <= box.c_bound) inside += mass;
          }
      }
  } else {
    for (int ix = 0; ix < gm.masses.nx; ++ix)
      for (int iy = 0; iy < gm.masses.ny; ++iy) {
        double mass = gm.masses.at(ix, iy);
        total += mass;
        CD a(gm.masses.cx(ix), gm.masses.cy(iy));
        bool in = std::abs(a) <= box.a_bound;
        if (gm.d == 2) in = std::max(std::abs(a * a) / 2.0, std::abs(a)) <= box.c_bound;
        if (in) inside += mass;
      }
  }
  return total > 0 ? inside / total : 0.0;
}

/// Atom weights binned onto the cells of a grid measure's region.
inline GridMeasure bin_atoms(const AtomicMeasure& mu, const GridMeasure& ref) {
  if (ref.mode == "slice") throw DomainError("slice measures are visual aids only");
  GridMeasure out = ref;
  std::fill(out.masses.values.begin(), out.masses.values.end(), 0.0);
  std::fill(out.cells.begin(), out.cells.end(), 0.0);
  out.mass_before = 0.0;
  out.clipped_fraction = 0.0;
  out.unreliable = false;
  for (std::size_t i = 0; i < mu.points.size(); ++i) {
    const auto& pt = mu.points[i];
    CD a = pt.back();
    const auto& f = ref.masses;
    int ix = int(std::floor((a.real() - f.x0) / f.hx()));
    int iy = int(std::floor((a.imag() - f.y0) / f.hy()));
    if (ix < 0 || ix >= f.nx || iy < 0 || iy >= f.ny) continue;
    if (ref.mode == "full") {
      CD c1 = pt[0];
      int iu = int(std::floor((c1.real() - ref.u0) / ((ref.u1 - ref.u0) / ref.nu)));
      int iv = int(std::floor((c1.imag() - ref.v0) / ((ref.v1 - ref.v0) / ref.nv)));
      if (iu < 0 || iu >= ref.nu || iv < 0 || iv >= ref.nv) continue;
      out.cells[((std::size_t(iu) * ref.nv + iv) * f.nx + ix) * std::size_t(f.ny) + iy] +=
          mu.weights[i];
    }
    out.masses.at(ix, iy) += mu.weights[i];
    out.mass_before += mu.weights[i];
  }
  return out;
}

/// Largest absolute mass difference over all dyadic sub-boxes of the common
/// region up to the given depth. Boxes are half open and enumerated the same
/// deterministic way for both measures.
inline double discrepancy(const AtomicMeasure& mu, const GridMeasure& ref, int depth) {
  if (ref.mode == "slice") throw DomainError("slice measures are visual aids only");
  if (depth < 0 || depth > 8) throw ConfigError("dyadic depth must be between 0 and 8");
  double worst = 0.0;
  const auto& f = ref.masses;
  auto bucket = [](double t, int bins) {
    int b = int(std::floor(t * bins));
    return std::clamp(b, 0, bins - 1);
  };
  for (int k = 0; k <= depth; ++k) {
    int bins = 1 << k;
    if (ref.mode == "full") {
      std::vector<double> gsum(std::size_t(bins) * bins * bins * bins, 0.0);
      std::vector<double> asum(gsum.size(), 0.0);
      auto slot = [&](int bu, int bv, int bx, int by) {
        return ((std::size_t(bu) * bins + bv) * bins + bx) * std::size_t(bins) + by;
      };
      const double hu = (ref.u1 - ref.u0) / ref.nu, hv = (ref.v1 - ref.v0) / ref.nv;
      for (int iu = 0; iu < ref.nu; ++iu)
        for (int iv = 0; iv < ref.nv; ++iv)
          for (int ix = 0; ix < f.nx; ++ix)
            for (int iy = 0; iy < f.ny; ++iy) {
              double mass =
                  ref.cells[((std::size_t(iu) * ref.nv + iv) * f.nx + ix) * std::size_t(f.ny) + iy];
              if (mass == 0.0) continue;
              int bu = bucket((ref.u0 + (iu + 0.5) * hu - ref.u0) / (ref.u1 - ref.u0), bins);
              int bv = bucket((ref.v0 + (iv + 0.5) * hv - ref.v0) / (ref.v1 - ref.v0), bins);
              int bx = bucket((f.cx(ix) - f.x0) / (f.x1 - f.x0), bins);
              int by = bucket((f.cy(iy) - f.y0) / (f.y1 - f.y0), bins);
              gsum[slot(bu, bv, bx, by)] += mass;
            }
      for (std::size_t i = 0; i < mu.points.size(); ++i) {
        CD c1 = mu.points[i][0], a = mu.points[i].back();
        double tu = (c1.real() - ref.u0) / (ref.u1 - ref.u0);
        double tv = (c1.imag() - ref.v0) / (ref.v1 - ref.v0);
        double tx = (a.real() - f.x0) / (f.x1 - f.x0);
        double ty = (a.imag() - f.y0) / (f.y1 - f.y0);
        if (tu < 0 || tu >= 1 || tv < 0 || tv >= 1 || tx < 0 || tx >= 1 || ty < 0 || ty >= 1)
          continue;
        asum[slot(bucket(tu, bins), bucket(tv, bins), bucket(tx, bins), bucket(ty, bins))] +=
            mu.weights[i];
      }
      for (std::size_t s = 0; s < gsum.size(); ++s)
        worst = std::max(worst, std::abs(gsum[s] - asum[s]));
    } else {
      std::vector<double> gsum(std::size_t(bins) * bins, 0.0);
      std::vector<double> asum(gsum.size(), 0.0);
      for (int ix = 0; ix < f.nx; ++ix)
        for (int iy = 0; iy < f.ny; ++iy) {
          double mass = f.at(ix, iy);
          if (mass == 0.0) continue;
          int bx = bucket((f.cx(ix) - f.x0) / (f.x1 - f.x0), bins);
          int by = bucket((f.cy(iy) - f.y0) / (f.y1 - f.y0), bins);
          gsum[std::size_t(bx) * bins + by] += mass;
        }
      for (std::size_t i = 0; i < mu.points.size(); ++i) {
        CD a = mu.points[i].back();
        double tx = (a.real() - f.x0) / (f.x1 - f.x0);
        double ty = (a.imag() - f.y0) / (f.y1 - f.y0);
        if (tx < 0 || tx >= 1 || ty < 0 || ty >= 1) continue;
        asum[std::size_t(bucket(tx, bins)) * bins + bucket(ty, bins)] += mu.weights[i];
      }
      for (std::size_t s = 0; s < gsum.size(); ++s)
        worst = std::max(worst, std::abs(gsum[s] - asum[s]));
    }
  }
  return worst;
}

struct EquidistStep {
  std::string label;
  std::vector<int> m, n;
  int count = 0;
  double disc = 0.0;
  bool ok = false;
  std::string error;
};

struct EquidistReport {
  int d = 0;
  int depth = 0;
  std::vector<EquidistStep> steps;
};

/// Runs the schedule of parameter families against a precomputed grid
/// measure. Solver failures are recorded per step and the experiment goes on.
inline EquidistReport equidist_experiment(
    int d, const std::vector<std::pair<std::vector<int>, std::vector<int>>>& schedule,
    const GridMeasure& ref, int depth,
    const std::function<bool(const PcfPoint&)>& filter = nullptr, const PcfOptions& po = {}) {
  EquidistReport rep;
  rep.d = d;
  rep.depth = depth;
  for (auto& [mm, nn] : schedule) {
    EquidistStep step;
    step.m = mm;
    step.n = nn;
    std::string lbl = "m=";
    for (std::size_t i = 0; i < mm.size(); ++i)
      lbl += (i ? "," : "") + std::to_string(mm[std::size_t(i)]);
    lbl += " n=";
    for (std::size_t i = 0; i < nn.size(); ++i)
      lbl += (i ? "," : "") + std::to_string(nn[std::size_t(i)]);
    step.label = lbl;
    try {
      auto sols = pcf_solve(d, mm, nn, po);
      auto mu = atomic_from(sols, filter);
      step.count = int(mu.points.size());
      step.disc = discrepancy(mu, ref, depth);
      step.ok = true;
    } catch (const std::runtime_error& e) {
      step.error = e.what();
    }
    rep.steps.push_back(step);
  }
  return rep;
}

/// Same experiment over constant-multiplier slices reached by continuation.
inline EquidistReport equidist_experiment_w(int d, const std::vector<std::vector<int>>& periods,
                                            const std::vector<CD>& w, const GridMeasure& ref,
                                            int depth, const PcfOptions& po = {}) {
  EquidistReport rep;
  rep.d = d;
  rep.depth = depth;
  for (auto& mm : periods) {
    EquidistStep step;
    step.m = mm;
    std::string lbl = "m=";
    for (std::size_t i = 0; i < mm.size(); ++i)
      lbl += (i ? "," : "") + std::to_string(mm[std::size_t(i)]);
    step.label = lbl;
    try {
      auto sols = per_star_solve(d, mm, w, 32, po);
      auto mu = atomic_from(sols);
      step.count = int(mu.points.size());
      step.disc = discrepancy(mu, ref, depth);
      step.ok = true;
    } catch (const std::runtime_error& e) {
      step.error = e.what();
    }
    rep.steps.push_back(step);
  }
  return rep;
}

}  // namespace dynbif
