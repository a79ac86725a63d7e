#pragma once

namespace lmor {

/// Inverse error function on [0, 1).
double erfinv(double y);
/// erfinv(1 - c), accurate for small complements c.
double erfcinv(double c);
/// Regularized upper incomplete gamma Q(a, x).
double gamma_q(double a, double x);
/// x with Q(a, x) = y.
double gamma_q_inv(double a, double y);

}  // namespace lmor
