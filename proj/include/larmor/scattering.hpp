#pragma once

// Stationary scattering states of the one-dimensional square barrier
//
//   V(y) = V   for |y| < d,   0 otherwise,   H = p^2/2m + V(y)   (hbar = 1)
//
// Convention (fixed project-wide):
//   psi_k(y) = e^{iky} + A e^{-iky}          y < -d
//            = B e^{iqy} + C e^{-iqy}        |y| < d,  q = sqrt(k^2 - 2mV) (principal)
//            = D e^{iky}                      y > d
//
// Inside the barrier the state is evaluated in the form
//   psi(y) = D e^{ikd} [cos(q(y-d)) + i k sin(q(y-d))/q]
// which depends on q only through q^2, so the evanescent (E < V) and
// oscillatory (E > V) branches share one code path and the branch point
// q -> 0 is a removable point handled by power series.

#include <array>
#include <cmath>
#include <complex>

#include "larmor/error.hpp"

namespace larmor {

using cplx = std::complex<double>;
inline constexpr cplx I{0.0, 1.0};

struct BarrierSpec {
  double m = 1.0;   ///< mass
  double k0 = 10.0; ///< barrier momentum scale, V0 = k0^2 / 2m
  double d = 2.0;   ///< half-width

  double height() const { return k0 * k0 / (2.0 * m); }

  void validate() const {
    require(std::isfinite(m) && m > 0.0, "barrier.m_positive", "mass must be > 0");
    require(std::isfinite(d) && d > 0.0, "barrier.d_positive", "half-width d must be > 0");
    require(std::isfinite(k0) && k0 >= 0.0, "barrier.k0_nonnegative", "k0 must be >= 0");
  }
};

struct ScatteringState {
  double k = 0.0;
  double V = 0.0;
  cplx A, D;     ///< reflection / transmission amplitudes
  cplx B, C;     ///< interior amplitudes; singular as q -> 0, never used for evaluation
  cplx q;        ///< interior wavenumber
  BarrierSpec spec;
};

namespace detail {

// Below this |q x| the trigonometric kernels switch to their Taylor series.
inline constexpr double kSeriesCutoff = 1.0;

/// cos(q x) as an entire function of s = q^2.
inline cplx cos_qx(cplx q, cplx s, double x) {
  if (std::abs(q) * std::abs(x) < kSeriesCutoff) {
    // sum_n (-1)^n s^n x^{2n} / (2n)!
    const cplx z = -s * x * x;
    cplx term = 1.0, sum = 1.0;
    for (int n = 1; n < 24; ++n) {
      term *= z / double((2 * n - 1) * (2 * n));
      sum += term;
    }
    return sum;
  }
  return std::cos(q * x);
}

/// sin(q x) / q as an entire function of s = q^2.
inline cplx sinc_qx(cplx q, cplx s, double x) {
  if (std::abs(q) * std::abs(x) < kSeriesCutoff) {
    const cplx z = -s * x * x;
    cplx term = x, sum = x;
    for (int n = 1; n < 24; ++n) {
      term *= z / double((2 * n) * (2 * n + 1));
      sum += term;
    }
    return sum;
  }
  return std::sin(q * x) / q;
}

/// d/ds [sin(q x)/q] with s = q^2.
inline cplx dsinc_ds(cplx q, cplx s, double x) {
  if (std::abs(q) * std::abs(x) < kSeriesCutoff) {
    // sum_{n>=1} n (-1)^n x^{2n+1} s^{n-1} / (2n+1)!
    const cplx z = -s * x * x;
    cplx sum = 0.0;
    cplx zpow = 1.0;
    double fact = 1.0;
    for (int n = 1; n < 24; ++n) {
      fact *= double((2 * n) * (2 * n + 1));
      sum += double(n) * (-x * x * x) * zpow / fact;
      zpow *= z;
    }
    return sum;
  }
  return (0.5 * x * std::cos(q * x) - 0.5 * std::sin(q * x) / q) / s;
}

struct Kernels {
  cplx s, q, cos2, sinc2;  // at x = 2d
};

inline Kernels kernels(double k, double V, const BarrierSpec& spec) {
  Kernels out;
  out.s = cplx(k * k - 2.0 * spec.m * V, 0.0);
  out.q = std::sqrt(out.s + cplx(0.0, 0.0));
  out.cos2 = cos_qx(out.q, out.s, 2.0 * spec.d);
  out.sinc2 = sinc_qx(out.q, out.s, 2.0 * spec.d);
  return out;
}

inline void check_kv(double k, double V) {
  require(std::isfinite(k) && std::isfinite(V), "scattering.finite_input", "k and V must be finite");
  require(k > 0.0, "scattering.k_positive", "wavenumber must be > 0");
}

}  // namespace detail

/// Amplitudes of the stationary state with unit incident wave from the left.
inline ScatteringState scattering_state(double k, double V, const BarrierSpec& spec) {
  detail::check_kv(k, V);
  const auto ker = detail::kernels(k, V, spec);
  const double d = spec.d;
  const cplx denom = ker.cos2 - I * (k * k + ker.s) * ker.sinc2 / (2.0 * k);

  ScatteringState st;
  st.k = k;
  st.V = V;
  st.q = ker.q;
  st.spec = spec;
  st.D = std::exp(-2.0 * I * k * d) / denom;
  st.A = -I * spec.m * V * ker.sinc2 * st.D / k;

  const cplx edge = st.D * std::exp(I * k * d);
  st.B = 0.5 * edge * (1.0 + k / ker.q) * std::exp(-I * ker.q * d);
  st.C = 0.5 * edge * (1.0 - k / ker.q) * std::exp(I * ker.q * d);
  return st;
}

/// Value and y-derivative of one stationary state.
struct StateValue {
  cplx value;
  cplx derivative;
};

inline StateValue eval_state_with_derivative(const ScatteringState& st, double y) {
  require(std::isfinite(y), "scattering.finite_input", "position must be finite");
  const double k = st.k, d = st.spec.d;
  if (y < -d) {
    const cplx in = std::exp(I * k * y), out = std::exp(-I * k * y);
    return {in + st.A * out, I * k * (in - st.A * out)};
  }
  if (y > d) {
    const cplx w = st.D * std::exp(I * k * y);
    return {w, I * k * w};
  }
  const cplx s = st.q * st.q;
  const double x = y - d;
  const cplx c = detail::cos_qx(st.q, s, x);
  const cplx sn = detail::sinc_qx(st.q, s, x);
  const cplx edge = st.D * std::exp(I * k * d);
  return {edge * (c + I * k * sn), edge * (-s * sn + I * k * c)};
}

inline cplx eval_state(const ScatteringState& st, double y) {
  return eval_state_with_derivative(st, y).value;
}

struct AmplitudeDerivatives {
  cplx dD_dV;
  cplx dA_dV;
  /// True when |q|*2d is inside `branch_window`; the series path is used
  /// there, so this is informational rather than an accuracy loss.
  bool near_branch = false;
};

/// Derivatives of D and A with respect to barrier height V at fixed k.
///
/// With the Zeeman splitting V_{+/-} = V0 -/+ omega/2, the spin-up derivative is
/// dD_+/domega = -1/2 dD/dV and the spin-down one is +1/2 dD/dV.
inline AmplitudeDerivatives amplitude_derivatives(double k, double V, const BarrierSpec& spec,
                                                  double branch_window = 1e-4) {
  detail::check_kv(k, V);
  const auto ker = detail::kernels(k, V, spec);
  const double m = spec.m, d = spec.d, x = 2.0 * d;

  const cplx denom = ker.cos2 - I * (k * k + ker.s) * ker.sinc2 / (2.0 * k);
  const cplx dsinc = detail::dsinc_ds(ker.q, ker.s, x);
  const cplx dcos = -d * ker.sinc2;  // d/ds cos(2d sqrt s)
  const cplx ddenom_ds = dcos - I * (ker.sinc2 + (k * k + ker.s) * dsinc) / (2.0 * k);

  const cplx D = std::exp(-2.0 * I * k * d) / denom;
  // ds/dV = -2m
  const cplx dD = 2.0 * m * D * ddenom_ds / denom;
  const cplx dA = -I * m / k * (ker.sinc2 * D - 2.0 * m * V * dsinc * D + V * ker.sinc2 * dD);

  AmplitudeDerivatives out;
  out.dD_dV = dD;
  out.dA_dV = dA;
  out.near_branch = std::abs(ker.q) * x < branch_window;
  return out;
}

}  // namespace larmor
