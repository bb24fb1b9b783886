#pragma once

// Region probabilities and spin-weighted norms of the evolving spinor.
//
// The production path accumulates boundary fluxes at y = -d and y = +d over a
// uniform time grid; direct spatial integration is used at a handful of
// checkpoints to seed the initial values and to cross-check the accumulation.

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "larmor/scattering.hpp"
#include "larmor/error.hpp"
#include "larmor/packet.hpp"
#include "larmor/quadrature.hpp"

namespace larmor {

enum class Region : int { left = 1, barrier = 2, right = 3 };
enum class Boundary { left, right };

/// Sign multiplying Im(psi_+^* psi_-) in N_y. With spin-up seeing V0 - omega/2
/// this is the physical +1, and it makes n_y^{(1)}(inf) < 0 beyond the barrier.
inline constexpr double kSpinPhaseSign = 1.0;

struct SpinMoments {
  double P = 0.0;
  double Nx = 0.0;
  double Ny = 0.0;
  double Nz = 0.0;
};

inline SpinMoments operator+(SpinMoments a, const SpinMoments& b) {
  return {a.P + b.P, a.Nx + b.Nx, a.Ny + b.Ny, a.Nz + b.Nz};
}

inline double max_abs_difference(const SpinMoments& a, const SpinMoments& b) {
  return std::max({std::abs(a.P - b.P), std::abs(a.Nx - b.Nx), std::abs(a.Ny - b.Ny),
                   std::abs(a.Nz - b.Nz)});
}

/// Local densities of P, N_x, N_y, N_z for components psi_+, psi_- of the
/// spinor (psi_+, psi_-)/sqrt 2.
inline SpinMoments local_density(cplx up, cplx dn) {
  const cplx z = std::conj(up) * dn;
  return {0.5 * (std::norm(up) + std::norm(dn)), 0.5 * z.real(), kSpinPhaseSign * 0.5 * z.imag(),
          0.25 * (std::norm(up) - std::norm(dn))};
}

// ---------------------------------------------------------------------------
// Boundary rates

struct BoundaryRates {
  double dP = 0.0;  ///< d/dt of the outer region's probability
  cplx dM;          ///< d/dt of M = 1/2 int psi_+^* psi_- over the outer region
  double dNz = 0.0;

  double dNx() const { return dM.real(); }
  double dNy() const { return kSpinPhaseSign * dM.imag(); }
};

/// Probability current (1/m) Im(psi^* psi').
inline double current(cplx psi, cplx dpsi, double m) { return std::imag(std::conj(psi) * dpsi) / m; }

/// Rates of the region outside `b` (region 3 for +d, region 1 for -d) from
/// the spinor values at the boundary. The cross current
/// (i/2m)(psi_+'^* psi_- - psi_+^* psi_-') is the flux of psi_+^* psi_- along +y.
inline BoundaryRates rates_from_sample(const SpinorSample& s, double m, Boundary b) {
  const double jp = current(s.plus, s.dplus, m);
  const double jm = current(s.minus, s.dminus, m);
  const cplx cross = (I / (2.0 * m)) * (std::conj(s.dplus) * s.minus - std::conj(s.plus) * s.dminus);
  const double sign = b == Boundary::right ? 1.0 : -1.0;
  return {sign * 0.5 * (jp + jm), sign * 0.5 * cross, sign * 0.25 * (jp - jm)};
}

inline BoundaryRates boundary_rates(const ModeTable& modes, double t, Boundary b) {
  const double y = b == Boundary::right ? modes.barrier.d : -modes.barrier.d;
  return rates_from_sample(evolve_at(modes, y, t), modes.barrier.m, b);
}

/// Numerator of the x/y identity ratio from spinor values at a boundary,
///   N = |psi_+'^* psi_- - psi_+^* psi_-'|^2 / m^2 - |j_+ + j_-|^2,
/// written for components that carry the 1/sqrt 2 spinor factor; with that
/// normalisation N = 4(dN_x/dt)^2 + 4(dN_y/dt)^2 - (dP/dt)^2.
inline double numerator_N(const SpinorSample& s, double m) {
  const double jp = current(s.plus, s.dplus, m);
  const double jm = current(s.minus, s.dminus, m);
  const cplx x = std::conj(s.dplus) * s.minus - std::conj(s.plus) * s.dminus;
  return 0.25 * (std::norm(x) / (m * m) - (jp + jm) * (jp + jm));
}

// ---------------------------------------------------------------------------
// Spectral kernels

namespace detail {

struct SoA {
  std::vector<double> re, im;
  SoA() = default;
  explicit SoA(std::size_t n) : re(n), im(n) {}
  void set(std::size_t i, cplx z) {
    re[i] = z.real();
    im[i] = z.imag();
  }
};

inline cplx dot(const SoA& c, const double* pr, const double* pi, std::size_t n) {
  const double* cr = c.re.data();
  const double* ci = c.im.data();
  double sr = 0.0, si = 0.0;
#pragma omp simd reduction(+ : sr, si)
  for (std::size_t i = 0; i < n; ++i) {
    sr += cr[i] * pr[i] - ci[i] * pi[i];
    si += cr[i] * pi[i] + ci[i] * pr[i];
  }
  return {sr, si};
}

inline void cmul_inplace(double* ar, double* ai, const double* br, const double* bi, std::size_t n) {
#pragma omp simd
  for (std::size_t i = 0; i < n; ++i) {
    const double r = ar[i] * br[i] - ai[i] * bi[i];
    const double m = ar[i] * bi[i] + ai[i] * br[i];
    ar[i] = r;
    ai[i] = m;
  }
}

inline void time_phase(const std::vector<double>& k, double t, double inv2m, SoA& out) {
  for (std::size_t i = 0; i < k.size(); ++i) {
    const double a = -k[i] * k[i] * t * inv2m;
    out.re[i] = std::cos(a);
    out.im[i] = std::sin(a);
  }
}

}  // namespace detail

/// Spinor samples at y = -d and y = +d on the uniform grid t_j = j dt, j < n_t.
struct BoundaryTraces {
  std::vector<SpinorSample> left, right;
};

inline BoundaryTraces trace_boundaries(const ModeTable& modes, std::size_t n_t, double dt) {
  const std::size_t n = modes.size();
  const double d = modes.barrier.d;
  const double inv2m = 1.0 / (2.0 * modes.barrier.m);
  const bool degenerate = modes.omega == 0.0;

  // channels: right (+, +', -, -'), left (+, +', -, -')
  std::vector<detail::SoA> coef(8, detail::SoA(n));
  for (std::size_t i = 0; i < n; ++i) {
    const double k = modes.k[i];
    const cplx c = modes.amp[i];
    const cplx ep = std::exp(I * k * d), em = std::exp(-I * k * d);
    const ScatteringState* st[2] = {&modes.plus[i], &modes.minus[i]};
    for (int s = 0; s < 2; ++s) {
      const cplx r = c * st[s]->D * ep;
      coef[2 * s].set(i, r);
      coef[2 * s + 1].set(i, I * k * r);
      coef[4 + 2 * s].set(i, c * (em + st[s]->A * ep));
      coef[4 + 2 * s + 1].set(i, I * k * c * (em - st[s]->A * ep));
    }
  }

  BoundaryTraces out;
  out.left.resize(n_t);
  out.right.resize(n_t);

  detail::SoA phase(n), step(n);
  detail::time_phase(modes.k, dt, inv2m, step);
  constexpr std::size_t kResync = 64;
  for (std::size_t j = 0; j < n_t; ++j) {
    if (j % kResync == 0) detail::time_phase(modes.k, j * dt, inv2m, phase);
    const double* pr = phase.re.data();
    const double* pi = phase.im.data();
    SpinorSample& r = out.right[j];
    SpinorSample& l = out.left[j];
    r.plus = detail::dot(coef[0], pr, pi, n);
    r.dplus = detail::dot(coef[1], pr, pi, n);
    l.plus = detail::dot(coef[4], pr, pi, n);
    l.dplus = detail::dot(coef[5], pr, pi, n);
    if (degenerate) {
      r.minus = r.plus;
      r.dminus = r.dplus;
      l.minus = l.plus;
      l.dminus = l.dplus;
    } else {
      r.minus = detail::dot(coef[2], pr, pi, n);
      r.dminus = detail::dot(coef[3], pr, pi, n);
      l.minus = detail::dot(coef[6], pr, pi, n);
      l.dminus = detail::dot(coef[7], pr, pi, n);
    }
    detail::cmul_inplace(phase.re.data(), phase.im.data(), step.re.data(), step.im.data(), n);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Direct spatial integration

struct DirectOptions {
  double pad = -1.0;          ///< extra window length; < 0 selects 20 + 4 delta
  double panel_width = 0.25;  ///< composite Gauss-Legendre panel width in y
  int panel_order = 16;
  double edge_tol = 1e-10;    ///< max density allowed at the open end of the window
};

/// Integration window [lo, hi] used for `region` at time t.
inline std::pair<double, double> direct_window(const ModeTable& modes, double t, Region region,
                                               const DirectOptions& opt = {}) {
  const double d = modes.barrier.d;
  const double pad = opt.pad >= 0.0 ? opt.pad : 20.0 + 4.0 * modes.packet.delta;
  const double kmax = modes.k.empty() ? 0.0 : *std::max_element(modes.k.begin(), modes.k.end());
  const double reach = kmax / modes.barrier.m * t;
  switch (region) {
    case Region::left: return {std::min(modes.packet.y0, -d - reach) - pad, -d};
    case Region::barrier: return {-d, d};
    case Region::right: return {d, d + reach + pad};
  }
  return {0.0, 0.0};
}

/// P, N_x, N_y, N_z of one region at time t by direct quadrature in y.
inline SpinMoments region_moments_direct(const ModeTable& modes, double t, Region region,
                                         const DirectOptions& opt = {}) {
  require(std::isfinite(t) && t >= 0.0, "observables.time_nonnegative", "t must be >= 0");
  const auto [lo, hi] = direct_window(modes, t, region, opt);
  const int panels = std::max(1, int(std::ceil((hi - lo) / opt.panel_width)));
  const double width = (hi - lo) / panels;
  const auto base = gauss_legendre(opt.panel_order);
  const std::size_t n = modes.size();
  const double inv2m = 1.0 / (2.0 * modes.barrier.m);

  SpinMoments acc;

  if (region == Region::barrier) {
    for (int p = 0; p < panels; ++p) {
      const double mid = lo + (p + 0.5) * width;
      for (int j = 0; j < opt.panel_order; ++j) {
        const double y = mid + 0.5 * width * base.nodes[j];
        cplx up, dn;
        for (std::size_t i = 0; i < n; ++i) {
          const double k = modes.k[i];
          const cplx c = modes.amp[i] * std::exp(-I * (k * k * t * inv2m));
          up += c * eval_state(modes.plus[i], y);
          dn += c * eval_state(modes.minus[i], y);
        }
        const auto rho = local_density(up, dn);
        const double w = 0.5 * width * base.weights[j];
        acc = acc + SpinMoments{w * rho.P, w * rho.Nx, w * rho.Ny, w * rho.Nz};
      }
    }
    return acc;
  }

  // psi_s(y) = sum_k alpha_s e^{iky} + beta_s e^{-iky}
  const bool left = region == Region::left;
  detail::SoA ap(n), am(n), bp(n), bm(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double k = modes.k[i];
    const cplx c = modes.amp[i] * std::exp(-I * (k * k * t * inv2m));
    if (left) {
      ap.set(i, c);
      am.set(i, c);
      bp.set(i, c * modes.plus[i].A);
      bm.set(i, c * modes.minus[i].A);
    } else {
      ap.set(i, c * modes.plus[i].D);
      am.set(i, c * modes.minus[i].D);
      bp.set(i, 0.0);
      bm.set(i, 0.0);
    }
  }

  // e^{iky} = e^{ik mid_p} e^{ik x_j}
  std::vector<detail::SoA> local(opt.panel_order, detail::SoA(n));
  detail::SoA centre(n), shift(n), e(n);
  for (int j = 0; j < opt.panel_order; ++j)
    for (std::size_t i = 0; i < n; ++i) local[j].set(i, std::exp(I * modes.k[i] * (0.5 * width * base.nodes[j])));
  for (std::size_t i = 0; i < n; ++i) shift.set(i, std::exp(I * modes.k[i] * width));

  auto evaluate = [&](const detail::SoA& ek) {
    const double* er = ek.re.data();
    const double* ei = ek.im.data();
    cplx up = detail::dot(ap, er, ei, n);
    cplx dn = detail::dot(am, er, ei, n);
    if (left) {
      // sum beta conj(e)
      double ur = 0, ui = 0, dr = 0, di = 0;
      const double *bpr = bp.re.data(), *bpi = bp.im.data(), *bmr = bm.re.data(), *bmi = bm.im.data();
#pragma omp simd reduction(+ : ur, ui, dr, di)
      for (std::size_t i = 0; i < n; ++i) {
        ur += bpr[i] * er[i] + bpi[i] * ei[i];
        ui += bpi[i] * er[i] - bpr[i] * ei[i];
        dr += bmr[i] * er[i] + bmi[i] * ei[i];
        di += bmi[i] * er[i] - bmr[i] * ei[i];
      }
      up += cplx(ur, ui);
      dn += cplx(dr, di);
    }
    return std::pair{up, dn};
  };

  constexpr int kResync = 32;
  for (int p = 0; p < panels; ++p) {
    const double mid = lo + (p + 0.5) * width;
    if (p % kResync == 0)
      for (std::size_t i = 0; i < n; ++i) centre.set(i, std::exp(I * modes.k[i] * mid));
    for (int j = 0; j < opt.panel_order; ++j) {
      e.re = centre.re;
      e.im = centre.im;
      detail::cmul_inplace(e.re.data(), e.im.data(), local[j].re.data(), local[j].im.data(), n);
      const auto [up, dn] = evaluate(e);
      const auto rho = local_density(up, dn);
      const double w = 0.5 * width * base.weights[j];
      acc = acc + SpinMoments{w * rho.P, w * rho.Nx, w * rho.Ny, w * rho.Nz};
    }
    detail::cmul_inplace(centre.re.data(), centre.im.data(), shift.re.data(), shift.im.data(), n);
  }

  // density at the open end of the window
  const double edge = left ? lo : hi;
  for (std::size_t i = 0; i < n; ++i) e.set(i, std::exp(I * modes.k[i] * edge));
  const auto [up, dn] = evaluate(e);
  const double rho_edge = local_density(up, dn).P;
  if (rho_edge > opt.edge_tol)
    throw Error("observables.window_too_narrow",
                "density " + std::to_string(rho_edge) + " at window edge y=" + std::to_string(edge));
  return acc;
}

// ---------------------------------------------------------------------------
// Time series

struct Numerics {
  int n_k = 8192;
  double span_sigmas = 8.0;
  int panel_order = 16;
  double t_max = 300.0;
  double dt = 0.005;
  std::vector<double> checkpoints = {0.0, 1.5, 3.0, 4.5, 6.0};
  double crosscheck_tol = 1e-5;
  double noise_floor = 1e-6;  ///< relative to max_t dP/dt
  double eps_neg = 1e-4;      ///< relative to the largest radicand

  std::size_t n_samples() const { return std::size_t(std::llround(t_max / dt)) + 1; }

  void validate() const {
    require(n_k >= 64, "numerics.n_k", "n_k must be >= 64");
    require(panel_order >= 2 && n_k % panel_order == 0, "numerics.panel_order",
            "n_k must be a multiple of panel_order");
    require(std::isfinite(dt) && dt > 0.0, "numerics.dt_positive", "dt must be > 0");
    require(std::isfinite(t_max) && t_max > 2.0 * dt, "numerics.t_max", "t_max must exceed 2 dt");
    require(noise_floor > 0.0 && noise_floor < 1.0, "numerics.noise_floor", "noise_floor in (0,1)");
    require(eps_neg >= 0.0, "numerics.eps_neg", "eps_neg must be >= 0");
  }
};

struct RegionSeries {
  std::vector<double> P, Nx, Ny, Nz;
  std::vector<double> dP, dNx, dNy, dNz;

  SpinMoments at(std::size_t j) const { return {P[j], Nx[j], Ny[j], Nz[j]}; }
};

struct Checkpoint {
  double t = 0.0;
  SpinMoments direct1, direct2, direct3;
  SpinMoments flux1, flux3;

  double flux_residual() const {
    return std::max(max_abs_difference(direct1, flux1), max_abs_difference(direct3, flux3));
  }
  double unitarity_residual() const { return std::abs(direct1.P + direct2.P + direct3.P - 1.0); }
};

struct TimeSeriesBundle {
  double omega = 0.0;
  double dt = 0.0;
  std::vector<double> times;
  RegionSeries region1, region3;
  std::vector<double> P2;
  std::vector<Checkpoint> checks;

  std::size_t size() const { return times.size(); }
  const RegionSeries& region(Region r) const {
    require(r != Region::barrier, "observables.region_outer", "series exist for regions 1 and 3");
    return r == Region::left ? region1 : region3;
  }
  double max_flux_residual() const {
    double r = 0.0;
    for (const auto& c : checks) r = std::max(r, c.flux_residual());
    return r;
  }
  double max_unitarity_residual() const {
    double r = 0.0;
    for (const auto& c : checks) r = std::max(r, c.unitarity_residual());
    return r;
  }
};

namespace detail {

inline void fill_region(RegionSeries& rs, const std::vector<SpinorSample>& trace, double m, Boundary b,
                        const SpinMoments& initial, double dt) {
  const std::size_t n = trace.size();
  rs.dP.resize(n);
  rs.dNx.resize(n);
  rs.dNy.resize(n);
  rs.dNz.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    const auto r = rates_from_sample(trace[j], m, b);
    rs.dP[j] = r.dP;
    rs.dNx[j] = r.dNx();
    rs.dNy[j] = r.dNy();
    rs.dNz[j] = r.dNz;
  }
  auto integrate = [&](const std::vector<double>& rate, double x0) {
    auto c = cumulative_integral<double>(rate, dt);
    for (auto& v : c) v += x0;
    return c;
  };
  rs.P = integrate(rs.dP, initial.P);
  rs.Nx = integrate(rs.dNx, initial.Nx);
  rs.Ny = integrate(rs.dNy, initial.Ny);
  rs.Nz = integrate(rs.dNz, initial.Nz);
}

}  // namespace detail

/// Builds the region 1 / region 3 series for one omega by boundary-flux
/// accumulation, seeded and cross-checked by direct integration.
/// Throws `observables.flux_direct_mismatch` when a checkpoint disagrees by more
/// than `numerics.crosscheck_tol`.
inline TimeSeriesBundle build_timeseries(double omega, const BarrierSpec& barrier, const PacketSpec& packet,
                                         const KGrid& grid, const Numerics& num,
                                         const DirectOptions& direct = {}) {
  num.validate();
  const ModeTable modes = make_modes(omega, grid, barrier, packet);
  const std::size_t n_t = num.n_samples();

  TimeSeriesBundle b;
  b.omega = omega;
  b.dt = num.dt;
  b.times.resize(n_t);
  for (std::size_t j = 0; j < n_t; ++j) b.times[j] = j * num.dt;

  const auto traces = trace_boundaries(modes, n_t, num.dt);

  const SpinMoments init1 = region_moments_direct(modes, 0.0, Region::left, direct);
  const SpinMoments init3 = region_moments_direct(modes, 0.0, Region::right, direct);
  detail::fill_region(b.region1, traces.left, barrier.m, Boundary::left, init1, num.dt);
  detail::fill_region(b.region3, traces.right, barrier.m, Boundary::right, init3, num.dt);

  b.P2.resize(n_t);
  for (std::size_t j = 0; j < n_t; ++j) b.P2[j] = 1.0 - b.region1.P[j] - b.region3.P[j];

  std::vector<double> cps = num.checkpoints;
  if (std::find(cps.begin(), cps.end(), 0.0) == cps.end()) cps.insert(cps.begin(), 0.0);
  for (double tc : cps) {
    if (tc < 0.0 || tc > b.times.back()) continue;
    const std::size_t j = std::size_t(std::llround(tc / num.dt));
    const double t = b.times[j];
    Checkpoint c;
    c.t = t;
    c.direct1 = t == 0.0 ? init1 : region_moments_direct(modes, t, Region::left, direct);
    c.direct2 = region_moments_direct(modes, t, Region::barrier, direct);
    c.direct3 = t == 0.0 ? init3 : region_moments_direct(modes, t, Region::right, direct);
    c.flux1 = b.region1.at(j);
    c.flux3 = b.region3.at(j);
    b.checks.push_back(c);
    if (c.flux_residual() > num.crosscheck_tol)
      throw Error("observables.flux_direct_mismatch",
                  "flux vs direct residual " + std::to_string(c.flux_residual()) + " at t=" +
                      std::to_string(t) + " (omega=" + std::to_string(omega) + ")");
  }
  return b;
}

/// R(t) = (4 dNx^2 + 4 dNy^2 - dP^2) / dP^2 from one bundle's rates, at that
/// bundle's omega. NaN where dP/dt is below the noise floor.
inline std::vector<double> ratio_R(const TimeSeriesBundle& b, Region r, double noise_floor) {
  const auto& s = b.region(r);
  const double peak = *std::max_element(s.dP.begin(), s.dP.end());
  std::vector<double> out(s.dP.size(), std::nan(""));
  for (std::size_t j = 0; j < out.size(); ++j) {
    const double dp = s.dP[j];
    if (!(dp > noise_floor * peak)) continue;
    out[j] = (4.0 * s.dNx[j] * s.dNx[j] + 4.0 * s.dNy[j] * s.dNy[j] - dp * dp) / (dp * dp);
  }
  return out;
}

}  // namespace larmor
