#include "lmor/special.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace lmor {

namespace {

double log_erfc(double x)
{
    if (x < 25) return std::log(std::erfc(x));
    // asymptotic expansion, well converged for x >= 25
    double z = 1 / (2 * x * x), term = 1, sum = 1;
    for (int n = 1; n < 12; ++n) {
        term *= -(2 * n - 1) * z;
        sum += term;
    }
    return -x * x - std::log(x * std::sqrt(std::numbers::pi)) + std::log(sum);
}

// Newton on log erfc with bisection safeguard
double solve_erfc(double c)
{
    const double target = std::log(c);
    double lo = 0, hi = 1;
    while (log_erfc(hi) > target) hi *= 2;
    double x = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
        double le = log_erfc(x);
        double g = le - target;
        if (g > 0) lo = x;
        else hi = x;
        double d = -2.0 / std::sqrt(std::numbers::pi) * std::exp(-x * x - le);
        double xn = x - g / d;
        if (!(xn > lo && xn < hi)) xn = 0.5 * (lo + hi);
        if (std::abs(xn - x) <= 1e-15 * std::max(1.0, std::abs(x))) return xn;
        x = xn;
    }
    return x;
}

double gamma_p_series(double a, double x)
{
    double sum = 1.0 / a, term = sum;
    for (int n = 1; n < 100000; ++n) {
        term *= x / (a + n);
        sum += term;
        if (std::abs(term) < std::abs(sum) * 1e-17) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

double gamma_q_fraction(double a, double x)
{
    const double tiny = 1e-300;
    double b = x + 1 - a, c = 1 / tiny, d = 1 / b, h = d;
    for (int i = 1; i < 100000; ++i) {
        double an = -i * (i - a);
        b += 2;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1 / d;
        double del = d * c;
        h *= del;
        if (std::abs(del - 1) < 1e-17) break;
    }
    return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace

double erfcinv(double c)
{
    if (!(c > 0 && c <= 1)) throw std::domain_error("erfcinv: complement outside (0, 1]");
    if (c == 1) return 0;
    return solve_erfc(c);
}

double erfinv(double y)
{
    if (!(y >= 0 && y < 1)) throw std::domain_error("erfinv: argument outside [0, 1)");
    if (y == 0) return 0;
    if (y < 0.5) {
        double x = 0.5 * std::sqrt(std::numbers::pi) * y;
        for (int it = 0; it < 100; ++it) {
            double dx = (std::erf(x) - y) / (2.0 / std::sqrt(std::numbers::pi) * std::exp(-x * x));
            x -= dx;
            if (std::abs(dx) <= 1e-16 * x) break;
        }
        return x;
    }
    return solve_erfc(1 - y);
}

double gamma_q(double a, double x)
{
    if (!(a > 0) || x < 0) throw std::domain_error("gamma_q: invalid arguments");
    if (x == 0) return 1;
    if (x < a + 1) return 1 - gamma_p_series(a, x);
    return gamma_q_fraction(a, x);
}

double gamma_q_inv(double a, double y)
{
    if (!(a > 0) || !(y > 0 && y < 1)) throw std::domain_error("gamma_q_inv: invalid arguments");
    double lo = 0, hi = std::max(1.0, a);
    while (gamma_q(a, hi) > y) hi *= 2;
    for (int it = 0; it < 300; ++it) {
        double m = 0.5 * (lo + hi);
        if (gamma_q(a, m) > y) lo = m;
        else hi = m;
        if (hi - lo <= 1e-15 * hi) break;
    }
    return 0.5 * (lo + hi);
}

}  // namespace lmor
