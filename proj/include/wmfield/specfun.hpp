#pragma once

namespace wmf {

// K_nu(x) = value * exp(log_scale).  The split keeps the small-argument /
// high-order regime representable: the upward recurrence in nu grows like
// (2 nu / x)^nu, which overflows a plain double long before nu = 30 when x
// is small.
struct ScaledBesselK {
  double value = 0.0;
  double log_scale = 0.0;
};

// Modified Bessel function of the second kind, nu >= 0, x > 0.  Series for
// x <= 2, continued fraction for x > 2, upward recurrence in nu; half-integer
// orders short-circuit to the closed form.
ScaledBesselK bessel_k_scaled(double nu, double x);
double bessel_k(double nu, double x);

// Modified Bessel function of the first kind by direct power series.  Slow but
// independent of the K machinery; used to cross-check K via the Wronskian
// I_nu(x) K_{nu+1}(x) + I_{nu+1}(x) K_nu(x) = 1/x.
double bessel_i_series(double nu, double x);

}  // namespace wmf
