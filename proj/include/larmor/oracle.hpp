#pragma once

// Brute-force grid propagation of the spinor Schroedinger equation, used to
// validate the spectral path. Shares only plain parameter and result types
// with the rest of the library.
//
// Spatial operator: compact fourth-order (Numerov) Laplacian,
//   i M psi_t = -(1/2m) D2 psi / h^2 + W psi,
// with M = tridiag(1, 10, 1)/12, D2 = tridiag(1, -2, 1) and W = (M V + V M)/2,
// which keeps the right-hand side Hermitian. Time stepping is Crank-Nicolson,
// so the discrete norm psi^H M psi h is conserved exactly.

#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <vector>

#include "larmor/scattering.hpp"
#include "larmor/error.hpp"
#include "larmor/observables.hpp"
#include "larmor/packet.hpp"

namespace larmor::oracle {

struct GridSpec {
  double y_min = -80.0;
  double y_max = 80.0;
  std::size_t n_y = 16001;
  double dt = 2e-4;

  double h() const { return (y_max - y_min) / double(n_y - 1); }
  double y(std::size_t j) const { return y_min + h() * double(j); }

  /// Index of the grid point at y, which must lie on the grid.
  std::size_t index_of(double y) const {
    const double x = (y - y_min) / h();
    const double r = std::round(x);
    require(std::abs(x - r) < 1e-6, "oracle.grid_aligned",
            "y = " + std::to_string(y) + " is not a grid point");
    return std::size_t(r);
  }

  void validate(const BarrierSpec& b) const {
    require(n_y >= 3 && y_max > y_min, "oracle.grid_nonempty", "need y_max > y_min and n_y >= 3");
    require(h() <= 0.02 + 1e-12, "oracle.spacing", "grid spacing " + std::to_string(h()) + " exceeds 0.02");
    require(dt > 0.0, "oracle.dt_positive", "time step must be positive");
    require(y_min < -b.d && y_max > b.d, "oracle.contains_barrier", "domain must contain the barrier");
    (void)index_of(-b.d);
    (void)index_of(b.d);
  }
};

/// Components psi_+ and psi_- of the spinor (psi_+, psi_-)/sqrt 2 on the grid.
struct SpinorField {
  double t = 0.0;
  std::vector<cplx> plus;
  std::vector<cplx> minus;
};

/// The analytic t = 0 packet: the Fourier transform of the spectral amplitude,
/// identical in both components.
inline cplx gaussian_packet(double y, const PacketSpec& p) {
  const double delta = p.delta;
  const double c = std::pow(2.0 * delta * delta / (4.0 * std::pow(std::numbers::pi, 3)), 0.25) *
                   std::sqrt(std::numbers::pi) / delta;
  const double u = y - p.y0;
  return c * std::exp(-u * u / (4.0 * delta * delta)) * std::exp(I * (p.k_av * u));
}

inline SpinorField initial_field(const GridSpec& g, const PacketSpec& p) {
  SpinorField f;
  f.plus.resize(g.n_y);
  for (std::size_t j = 0; j < g.n_y; ++j) f.plus[j] = gaussian_packet(g.y(j), p);
  f.plus.front() = f.plus.back() = 0.0;
  f.minus = f.plus;
  return f;
}

/// Potential on the grid for barrier height V: full value strictly inside,
/// half value on the grid-aligned edges.
inline std::vector<double> potential(const GridSpec& g, const BarrierSpec& b, double V) {
  std::vector<double> v(g.n_y, 0.0);
  const std::size_t lo = g.index_of(-b.d), hi = g.index_of(b.d);
  for (std::size_t j = lo + 1; j < hi; ++j) v[j] = V;
  v[lo] = v[hi] = 0.5 * V;
  return v;
}

namespace detail {

/// Crank-Nicolson propagator for one component with Dirichlet ends; the
/// implicit tridiagonal matrix is factored once.
class CrankNicolson {
 public:
  CrankNicolson(const std::vector<double>& V, double h, double m, double dt) : n_(V.size()) {
    const double kin = 1.0 / (2.0 * m * h * h);
    const cplx half = 0.5 * I * dt;
    diag_.resize(n_);
    off_.resize(n_);  // off_[j] couples j and j+1
    for (std::size_t j = 0; j < n_; ++j) diag_[j] = 2.0 * kin + 10.0 / 12.0 * V[j];
    for (std::size_t j = 0; j + 1 < n_; ++j) off_[j] = -kin + (V[j] + V[j + 1]) / 24.0;
    // A = M + i dt/2 H, B = M - i dt/2 H
    a_diag_.resize(n_);
    a_off_.resize(n_);
    b_diag_.resize(n_);
    b_off_.resize(n_);
    for (std::size_t j = 0; j < n_; ++j) {
      a_diag_[j] = 10.0 / 12.0 + half * diag_[j];
      b_diag_[j] = 10.0 / 12.0 - half * diag_[j];
      a_off_[j] = 1.0 / 12.0 + half * off_[j];
      b_off_[j] = 1.0 / 12.0 - half * off_[j];
    }
    // Thomas factorization on interior points 1..n-2
    cprime_.assign(n_, 0.0);
    inv_.assign(n_, 0.0);
    for (std::size_t j = 1; j + 1 < n_; ++j) {
      const cplx den = a_diag_[j] - (j > 1 ? a_off_[j - 1] * cprime_[j - 1] : cplx(0.0));
      inv_[j] = 1.0 / den;
      cprime_[j] = a_off_[j] * inv_[j];
    }
    rhs_.resize(n_);
  }

  void step(std::vector<cplx>& psi) {
    for (std::size_t j = 1; j + 1 < n_; ++j)
      rhs_[j] = b_off_[j - 1] * psi[j - 1] + b_diag_[j] * psi[j] + b_off_[j] * psi[j + 1];
    rhs_[1] *= inv_[1];
    for (std::size_t j = 2; j + 1 < n_; ++j) rhs_[j] = (rhs_[j] - a_off_[j - 1] * rhs_[j - 1]) * inv_[j];
    psi[n_ - 2] = rhs_[n_ - 2];
    for (std::size_t j = n_ - 2; j-- > 1;) psi[j] = rhs_[j] - cprime_[j] * psi[j + 1];
    psi[0] = psi[n_ - 1] = 0.0;
  }

 private:
  std::size_t n_;
  std::vector<double> diag_, off_;
  std::vector<cplx> a_diag_, a_off_, b_diag_, b_off_, cprime_, inv_, rhs_;
};

/// Discrete conserved norm h psi^H M psi.
inline double mass_norm(const std::vector<cplx>& psi, double h) {
  double s = 0.0;
  for (std::size_t j = 0; j < psi.size(); ++j) {
    s += 10.0 / 12.0 * std::norm(psi[j]);
    if (j + 1 < psi.size()) s += 2.0 / 12.0 * std::real(std::conj(psi[j]) * psi[j + 1]);
  }
  return h * s;
}

/// Composite Simpson on samples f[lo..hi]; a 3/8 panel absorbs an odd count.
template <class F>
double simpson(F&& f, std::size_t lo, std::size_t hi, double h) {
  std::size_t n = hi - lo;
  if (n == 0) return 0.0;
  if (n == 1) return 0.5 * h * (f(lo) + f(hi));
  double tail = 0.0;
  if (n % 2 == 1) {
    tail = 3.0 * h / 8.0 * (f(hi - 3) + 3.0 * f(hi - 2) + 3.0 * f(hi - 1) + f(hi));
    hi -= 3;
    n -= 3;
  }
  double s = f(lo) + f(hi);
  for (std::size_t j = lo + 1; j < hi; ++j) s += (j - lo) % 2 == 1 ? 4.0 * f(j) : 2.0 * f(j);
  return s * h / 3.0 + tail;
}

}  // namespace detail

/// Region moments of the field, using the same 1/2, 1/4 spinor weights as the
/// spectral path.
inline SpinMoments region_moments(const SpinorField& f, const GridSpec& g, std::size_t lo, std::size_t hi) {
  const double h = g.h();
  auto P = [&](std::size_t j) { return 0.5 * (std::norm(f.plus[j]) + std::norm(f.minus[j])); };
  auto X = [&](std::size_t j) { return 0.5 * std::real(std::conj(f.plus[j]) * f.minus[j]); };
  auto Y = [&](std::size_t j) { return kSpinPhaseSign * 0.5 * std::imag(std::conj(f.plus[j]) * f.minus[j]); };
  auto Z = [&](std::size_t j) { return 0.25 * (std::norm(f.plus[j]) - std::norm(f.minus[j])); };
  return {detail::simpson(P, lo, hi, h), detail::simpson(X, lo, hi, h), detail::simpson(Y, lo, hi, h),
          detail::simpson(Z, lo, hi, h)};
}

struct OracleSample {
  double t = 0.0;
  SpinMoments region1, region2, region3;
  double norm_drift = 0.0;  ///< relative change of the conserved norm
};

struct OracleOptions {
  double sample_every = 0.01;
  double max_norm_drift = 1e-6;
  double edge_width = 2.0;        ///< outer strip checked for boundary density
  double edge_density_tol = 1e-10;
};

struct OracleResult {
  double omega = 0.0;
  std::vector<OracleSample> samples;
  SpinorField final_field;
  double max_norm_drift = 0.0;
  double max_edge_density = 0.0;
};

/// Propagates `initial` to t_max, sampling region moments every
/// opt.sample_every. Components psi_+ and psi_- see V0 - omega/2 and V0 + omega/2.
inline OracleResult propagate(const SpinorField& initial, double omega, const GridSpec& g, const BarrierSpec& b,
                              double t_max, const OracleOptions& opt = {}) {
  b.validate();
  g.validate(b);
  require(initial.plus.size() == g.n_y && initial.minus.size() == g.n_y, "oracle.field_size",
          "initial field does not match the grid");
  require(t_max >= initial.t, "oracle.t_max", "t_max precedes the initial time");
  const std::size_t per_sample = std::max<std::size_t>(1, std::size_t(std::llround(opt.sample_every / g.dt)));
  require(std::abs(per_sample * g.dt - opt.sample_every) < 1e-9 * opt.sample_every, "oracle.sample_multiple",
          "sample interval must be a multiple of dt");
  const std::size_t n_steps = std::size_t(std::llround((t_max - initial.t) / g.dt));

  const double V0 = b.height(), h = g.h();
  const bool same = omega == 0.0 && initial.plus == initial.minus;
  detail::CrankNicolson up(potential(g, b, V0 - 0.5 * omega), h, b.m, g.dt);
  detail::CrankNicolson dn(potential(g, b, V0 + 0.5 * omega), h, b.m, g.dt);

  const std::size_t lo = g.index_of(-b.d), hi = g.index_of(b.d), last = g.n_y - 1;
  const std::size_t strip = std::min(last / 2, std::size_t(std::ceil(opt.edge_width / h)));

  OracleResult out;
  out.omega = omega;
  SpinorField f = initial;
  const double n0 = detail::mass_norm(f.plus, h) + detail::mass_norm(f.minus, h);

  auto sample = [&] {
    OracleSample s;
    s.t = f.t;
    s.region1 = region_moments(f, g, 0, lo);
    s.region2 = region_moments(f, g, lo, hi);
    s.region3 = region_moments(f, g, hi, last);
    const double n = detail::mass_norm(f.plus, h) + detail::mass_norm(f.minus, h);
    s.norm_drift = std::abs(n - n0) / n0;
    out.max_norm_drift = std::max(out.max_norm_drift, s.norm_drift);
    require(s.norm_drift <= opt.max_norm_drift, "oracle.norm_drift",
            "norm drift " + std::to_string(s.norm_drift) + " at t = " + std::to_string(f.t));
    for (std::size_t j = 0; j < strip; ++j)
      out.max_edge_density = std::max({out.max_edge_density, std::norm(f.plus[j]), std::norm(f.minus[j]),
                                       std::norm(f.plus[last - j]), std::norm(f.minus[last - j])});
    out.samples.push_back(s);
  };

  const double t0 = f.t;
  sample();
  for (std::size_t n = 1; n <= n_steps; ++n) {
    up.step(f.plus);
    if (same)
      f.minus = f.plus;
    else
      dn.step(f.minus);
    f.t = t0 + double(n) * g.dt;
    if (n % per_sample == 0 || n == n_steps) sample();
  }
  require(out.max_edge_density <= opt.edge_density_tol, "oracle.domain_width",
          "density " + std::to_string(out.max_edge_density) + " reached the domain edge");
  out.final_field = std::move(f);
  return out;
}

}  // namespace larmor::oracle
