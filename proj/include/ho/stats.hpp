#pragma once

namespace ho {

// Standard normal CDF.
double normal_cdf(double x);

// Inverse standard normal CDF. Rational (Acklam) approximation followed by one
// Halley refinement; absolute error below 1e-13 on (0,1), well inside the
// 1e-9 contract. Throws ArgumentError outside (0,1).
double inverse_normal_cdf(double p);

// z_{alpha/2} = Phi^{-1}(1 - alpha/2) for a two-sided confidence interval.
double z_quantile(double alpha);

}  // namespace ho
