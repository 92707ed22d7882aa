#include <nhflow/kernels.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace nhflow::kernels {

double kernel_K(cplx z, cplx w, double tau) {
    if (tau < 0.0) throw std::invalid_argument("kernel_K: tau must be nonnegative");
    const double a = std::exp(-0.5 * tau);
    const double arg = -std::expm1(-tau) * (1.0 - abs2(z)) + abs2(z - a * w);
    if (arg == 0.0) return std::numeric_limits<double>::infinity();
    return -std::log(arg);
}

cplx kernel_K_mixed(cplx z, cplx w, double tau) {
    // A = (1-a²)(1-|z|²) + |z - a w|², ∂_z A = a(a z̄ - w̄), ∂_w̄ A = -a(z - a w), ∂_z∂_w̄ A = -a
    const double a = std::exp(-0.5 * tau);
    const double A = -std::expm1(-tau) * (1.0 - abs2(z)) + abs2(z - a * w);
    return a / A - a * a * (a * std::conj(z) - std::conj(w)) * (z - a * w) / (A * A);
}

double parabolic_distance(cplx z, double s, cplx w, double t) { return std::sqrt(abs2(z - w) + std::abs(t - s)); }

double theta_kernel(cplx z1, cplx z2, double t) {
    if (t < 0.0) throw std::invalid_argument("theta_kernel: t must be nonnegative");
    const double a = std::exp(-0.5 * t);
    const double r1 = abs2(z1), r2 = abs2(z2);
    double arg, sub = 0.0;
    if (r1 <= 1.0 && r2 <= 1.0) {
        arg = -std::expm1(-t) * (1.0 - r1) + abs2(z1 - a * z2);
    } else if (r1 > 1.0 && r2 > 1.0) {
        arg = abs2(a - z1 * std::conj(z2));
        sub = std::log(r1 * r2);
    } else {
        const cplx zl = r1 > 1.0 ? z1 : z2;
        const cplx zm = r1 > 1.0 ? z2 : z1;
        arg = abs2(zl - a * zm);
        sub = std::log(abs2(zl));
    }
    if (arg == 0.0) return std::numeric_limits<double>::infinity();
    return -0.5 * (std::log(arg) - sub);
}

double log_kernel_mixed(cplx z, cplx w, double r) {
    const double b = r + abs2(z - w);
    return -r / (b * b);
}

double q_kernel(cplx z, double r) {
    const double b = r + abs2(z);
    return r / (pi * b * b);
}

namespace {

double k1_series(double x) {
    // K₁(x) = 1/x + log(x/2) I₁(x) - (x/4) Σ (ψ(k+1) + ψ(k+2)) (x²/4)^k / (k!(k+1)!)
    constexpr double euler_gamma = 0.57721566490153286061;
    const double y = 0.25 * x * x;
    double term = 1.0;  // (x²/4)^k / (k!(k+1)!)
    double psi1 = -euler_gamma, psi2 = 1.0 - euler_gamma;
    double i1 = 0.0, s = 0.0;
    for (int k = 0; k < 60; ++k) {
        i1 += term;
        s += (psi1 + psi2) * term;
        if (term < 1e-18 * i1) break;
        term *= y / ((k + 1.0) * (k + 2.0));
        psi1 += 1.0 / (k + 1.0);
        psi2 += 1.0 / (k + 2.0);
    }
    i1 *= 0.5 * x;
    return 1.0 / x + std::log(0.5 * x) * i1 - 0.25 * x * s;
}

double k1_integral(double x) {
    // ∫₀^∞ e^{-x cosh u} cosh u du; trapezoid is spectrally accurate for this
    // even analytic integrand.
    const double h = 1.0 / 32.0;
    double s = 0.5 * std::exp(-x);
    for (int k = 1;; ++k) {
        const double c = std::cosh(k * h);
        const double term = std::exp(-x * c) * c;
        s += term;
        if (x * (c - 1.0) > 745.0 || term < 1e-18 * s) break;
    }
    return h * s;
}

double k1_asymptotic(double x) {
    // √(π/2x) e^{-x} Σ_k Π_{j≤k}(4 - (2j-1)²) / (k! (8x)^k), truncated at the smallest term
    double term = 1.0, sum = 1.0;
    for (int k = 1; k < 40; ++k) {
        const double next = term * (4.0 - (2.0 * k - 1.0) * (2.0 * k - 1.0)) / (k * 8.0 * x);
        if (std::abs(next) >= std::abs(term)) break;
        term = next;
        sum += term;
        if (std::abs(term) < 1e-17 * std::abs(sum)) break;
    }
    return std::sqrt(pi / (2.0 * x)) * std::exp(-x) * sum;
}

}  // namespace

double bessel_k1(double x) {
    if (!(x > 0.0)) throw std::invalid_argument("bessel_k1: x must be positive");
    // The asymptotic series is only good to ~1e-2 at x = 2, so the middle range
    // uses the integral representation.
    if (x <= 2.0) return k1_series(x);
    if (x < 25.0) return k1_integral(x);
    return k1_asymptotic(x);
}

double q_hat(double r, double xi) {
    if (r < 0.0) throw std::invalid_argument("q_hat: r must be nonnegative");
    const double x = std::abs(xi) * std::sqrt(r);
    if (x < 1e-12) return 1.0;
    if (x > 740.0) return 0.0;
    return x * bessel_k1(x);
}

double semigroup_defect(double r1, double r2) {
    if (r1 < 0.0 || r2 < 0.0) throw std::invalid_argument("semigroup_defect: radii must be nonnegative");
    const double rmin = std::min(r1, r2) > 0.0 ? std::min(r1, r2) : std::max(r1, r2);
    if (rmin == 0.0) return 0.0;
    const double xi_max = 40.0 / std::sqrt(rmin);
    const int n = 4000;
    double worst = 0.0;
    for (int k = 1; k <= n; ++k) {
        const double xi = xi_max * k / n;
        worst = std::max(worst, std::abs(q_hat(r1 + r2, xi) - q_hat(r1, xi) * q_hat(r2, xi)));
    }
    return worst;
}

double overlap_corr_prediction(cplx z, cplx w, double s, double t, cplx v) {
    const double c = 1.0 - abs2(v);
    const double d = c * std::abs(t - s) + abs2(z - w);
    if (!(d > 0.0)) throw std::invalid_argument("overlap_corr_prediction: degenerate configuration z = w, s = t");
    return c * c / (d * d);
}

}  // namespace nhflow::kernels
