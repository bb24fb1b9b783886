#pragma once

// Gaussian wave packet expanded on the stationary states of the barrier and
// evolved spectrally:
//
//   psi_s(y, t) = sum_k w_k a(k) psi_k^{V_s}(y) exp(-i k^2 t / 2m),
//   V_+ = V0 - omega/2,  V_- = V0 + omega/2,
//
// with the spinor (psi_+, psi_-) / sqrt(2). Both components share a(k).

#include <cmath>
#include <numbers>
#include <vector>

#include "larmor/scattering.hpp"
#include "larmor/error.hpp"
#include "larmor/quadrature.hpp"

namespace larmor {

struct PacketSpec {
  double delta = std::numbers::sqrt2;  ///< spectral width parameter (length)
  double k_av = 9.9;                   ///< mean wavenumber
  double y0 = -15.0;                   ///< initial centre

  /// Standard deviation of |a(k)|^2.
  double sigma_k() const { return 1.0 / (2.0 * delta); }

  void validate(const BarrierSpec& barrier) const {
    require(std::isfinite(delta) && delta > 0.0, "packet.delta_positive", "delta must be > 0");
    require(std::isfinite(k_av), "packet.k_av_finite", "k_av must be finite");
    require(std::isfinite(y0) && y0 < -barrier.d - 3.0 * delta, "packet.starts_left",
            "y0 must satisfy y0 < -d - 3 delta");
  }
};

/// a(k) = (2 delta^2 / 4 pi^3)^{1/4} exp(-delta^2 (k - k_av)^2) exp(-i k y0).
/// Normalised so that 2 pi int |a|^2 dk = 1 with plane waves e^{iky}.
inline cplx spectral_amplitude(double k, const PacketSpec& spec) {
  const double pi = std::numbers::pi;
  const double pref = std::pow(2.0 * spec.delta * spec.delta / (4.0 * pi * pi * pi), 0.25);
  const double u = k - spec.k_av;
  return pref * std::exp(-spec.delta * spec.delta * u * u) * std::exp(-I * k * spec.y0);
}

struct KGrid {
  std::vector<double> nodes;
  std::vector<double> weights;
  double k_min = 0.0;
  double k_max = 0.0;

  std::size_t size() const { return nodes.size(); }
};

/// Composite Gauss-Legendre grid over k_av +/- span_sigmas * sigma_k, made of
/// n_nodes / panel_order equal panels. Equal panels keep the node spacing
/// uniform, which bounds the aliasing of the time phase exp(-i k^2 t / 2m).
inline KGrid build_kgrid(const PacketSpec& spec, int n_nodes = 8192, double span_sigmas = 8.0,
                         int panel_order = 16) {
  require(n_nodes >= 64, "kgrid.min_nodes", "need at least 64 nodes");
  require(panel_order >= 2 && n_nodes % panel_order == 0, "kgrid.panel_divides",
          "n_nodes must be a multiple of panel_order");
  require(std::isfinite(span_sigmas) && span_sigmas > 0.0, "kgrid.span_positive",
          "span_sigmas must be > 0");
  const double half = span_sigmas * spec.sigma_k();
  KGrid grid;
  grid.k_min = spec.k_av - half;
  grid.k_max = spec.k_av + half;
  require(grid.k_min > 0.0, "kgrid.span_positive_k", "k-span reaches k <= 0");
  auto rule = composite(gauss_legendre(panel_order), grid.k_min, grid.k_max, n_nodes / panel_order);
  grid.nodes = std::move(rule.nodes);
  grid.weights = std::move(rule.weights);
  return grid;
}

/// Values of the two spin components (without the 1/sqrt 2 spinor factor)
/// and their y-derivatives at one (y, t).
struct SpinorSample {
  cplx plus, minus;
  cplx dplus, dminus;
};

/// Per-node data for one omega: quadrature-weighted amplitudes and the
/// stationary states seen by the two spin components.
struct ModeTable {
  BarrierSpec barrier;
  PacketSpec packet;
  double omega = 0.0;
  std::vector<double> k;
  std::vector<cplx> amp;  ///< w_k a(k)
  std::vector<ScatteringState> plus, minus;

  std::size_t size() const { return k.size(); }
  double v_plus() const { return barrier.height() - 0.5 * omega; }
  double v_minus() const { return barrier.height() + 0.5 * omega; }
};

inline ModeTable make_modes(double omega, const KGrid& grid, const BarrierSpec& barrier,
                            const PacketSpec& packet) {
  barrier.validate();
  packet.validate(barrier);
  require_finite(omega, "packet.omega_finite");
  ModeTable t;
  t.barrier = barrier;
  t.packet = packet;
  t.omega = omega;
  t.k = grid.nodes;
  const std::size_t n = grid.size();
  t.amp.resize(n);
  t.plus.resize(n);
  t.minus.resize(n);
  const double vp = t.v_plus(), vm = t.v_minus();
  for (std::size_t i = 0; i < n; ++i) {
    const double k = grid.nodes[i];
    t.amp[i] = grid.weights[i] * spectral_amplitude(k, packet);
    t.plus[i] = scattering_state(k, vp, barrier);
    // omega = 0 must give bitwise-identical components
    t.minus[i] = omega == 0.0 ? t.plus[i] : scattering_state(k, vm, barrier);
  }
  return t;
}

inline SpinorSample evolve_at(const ModeTable& modes, double y, double t) {
  require(std::isfinite(t) && t >= 0.0, "packet.time_nonnegative", "t must be >= 0");
  SpinorSample s{};
  const double inv2m = 1.0 / (2.0 * modes.barrier.m);
  for (std::size_t i = 0; i < modes.size(); ++i) {
    const double k = modes.k[i];
    const cplx c = modes.amp[i] * std::exp(-I * (k * k * t * inv2m));
    const auto up = eval_state_with_derivative(modes.plus[i], y);
    const auto dn = eval_state_with_derivative(modes.minus[i], y);
    s.plus += c * up.value;
    s.dplus += c * up.derivative;
    s.minus += c * dn.value;
    s.dminus += c * dn.derivative;
  }
  return s;
}

inline SpinorSample evolve_at(double y, double t, double omega, const KGrid& grid,
                              const BarrierSpec& barrier, const PacketSpec& packet) {
  return evolve_at(make_modes(omega, grid, barrier, packet), y, t);
}

}  // namespace larmor
