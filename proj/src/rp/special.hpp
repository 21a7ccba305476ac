#pragma once

namespace rmtlab::special {

inline constexpr double kEulerGamma = 0.57721566490153286060651209;

double erfc(double x);

// exp(x^2) * erfc(x), finite for all x >= 0.
double erfcx(double x);

// Exponential integral Ei(x) = -PV int_{-x}^inf e^{-t}/t dt; x != 0.
double expint_ei(double x);

// 2F2(1/2, 1; 3/2, 3/2; x).
double hyp2f2_half(double x);

// Modified Bessel function of the first kind, order 1.
double bessel_i1(double x);

// exp(-|x|) * I1(x), usable where I1 itself overflows.
double bessel_i1e(double x);

// Standard normal quantile.
double normal_quantile(double p);

}  // namespace rmtlab::special
