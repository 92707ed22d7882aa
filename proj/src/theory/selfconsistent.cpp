#include <nhflow/theory.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace nhflow::theory {
namespace {

// b³ + 2ηb² - (1 - η² - |z|²)b - η for m = ib on the imaginary axis.
struct AxisCubic {
    double c2, c1, c0;
    double operator()(double b) const { return ((b + c2) * b + c1) * b + c0; }
    double derivative(double b) const { return (3.0 * b + 2.0 * c2) * b + c1; }
};

// Largest real root of the monic real cubic by Cardano / trigonometric form.
double largest_real_root(double c2, double c1, double c0) {
    const double shift = c2 / 3.0;
    const double p = c1 - c2 * c2 / 3.0;
    const double q = 2.0 * c2 * c2 * c2 / 27.0 - c2 * c1 / 3.0 + c0;
    const double disc = 0.25 * q * q + p * p * p / 27.0;
    if (disc > 0.0) {
        const double sd = std::sqrt(disc);
        return std::cbrt(-0.5 * q + sd) + std::cbrt(-0.5 * q - sd) - shift;
    }
    if (p == 0.0) return -shift;
    const double r = std::sqrt(-p / 3.0);
    const double arg = std::clamp(1.5 * q / (p * r), -1.0, 1.0);
    return 2.0 * r * std::cos(std::acos(arg) / 3.0) - shift;
}

// Safeguarded Newton for the unique positive root (cubic negative at 0,
// positive for large b).
double positive_root(const AxisCubic& f, double guess) {
    double lo = 0.0, hi = 1.0;
    while (f(hi) <= 0.0) hi *= 2.0;
    double b = (guess > lo && guess < hi) ? guess : 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
        const double fb = f(b);
        if (fb == 0.0) return b;
        if (fb < 0.0)
            lo = b;
        else
            hi = b;
        const double d = f.derivative(b);
        double next = b - fb / d;
        if (!(d > 0.0) || !(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - b) <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(next, 1e-300)) return next;
        b = next;
        if (hi - lo <= 2.0 * std::numeric_limits<double>::epsilon() * hi) return b;
    }
    return b;
}

cplx cubic_value(cplx z2, cplx w, cplx m) {
    const double a = z2.real();
    return ((m + 2.0 * w) * m + (w * w + 1.0 - a)) * m + w;
}

cplx cubic_derivative(cplx z2, cplx w, cplx m) {
    const double a = z2.real();
    return (3.0 * m + 4.0 * w) * m + w * w + 1.0 - a;
}

cplx newton_polish(double a, cplx w, cplx m) {
    const cplx z2{a, 0.0};
    for (int it = 0; it < 50; ++it) {
        const cplx f = cubic_value(z2, w, m);
        const cplx d = cubic_derivative(z2, w, m);
        if (d == cplx{}) break;
        const cplx step = f / d;
        m -= step;
        if (std::abs(step) <= 1e-16 * std::max(std::abs(m), 1e-300)) break;
    }
    return m;
}

std::array<cplx, 3> complex_cubic_roots(double a, cplx w) {
    // m³ + 2w m² + (w² + 1 - a) m + w, depressed by m = y - 2w/3
    const cplx c2 = 2.0 * w, c1 = w * w + 1.0 - a, c0 = w;
    const cplx p = c1 - c2 * c2 / 3.0;
    const cplx q = 2.0 * c2 * c2 * c2 / 27.0 - c2 * c1 / 3.0 + c0;
    const cplx sd = std::sqrt(0.25 * q * q + p * p * p / 27.0);
    cplx c = -0.5 * q + sd;
    if (std::abs(-0.5 * q - sd) > std::abs(c)) c = -0.5 * q - sd;
    c = std::pow(c, 1.0 / 3.0);
    const cplx omega{-0.5, std::sqrt(3.0) / 2.0};
    std::array<cplx, 3> roots;
    cplx ck = c;
    for (int k = 0; k < 3; ++k) {
        const cplx y = (ck == cplx{}) ? cplx{} : ck - p / (3.0 * ck);
        roots[k] = newton_polish(a, w, y - c2 / 3.0);
        ck *= omega;
    }
    return roots;
}

cplx continuation(double a, cplx w) {
    const double target = w.imag();
    const double start = std::max({10.0, 2.0 * std::abs(w), 2.0 * target});
    const int steps = 80;
    cplx m = -1.0 / cplx(w.real(), start);
    for (int k = 0; k <= steps; ++k) {
        const double eta = start * std::pow(target / start, static_cast<double>(k) / steps);
        m = newton_polish(a, cplx(w.real(), eta), m);
    }
    return m;
}

}  // namespace

double relative_cubic_residual(cplx z, cplx w, cplx m) {
    const double a = abs2(z);
    const cplx t1 = 1.0 / m, t4 = a / (w + m);
    const double scale = std::max({std::abs(t1), std::abs(w), std::abs(m), std::abs(t4)});
    return std::abs(t1 + w + m - t4) / scale;
}

SelfConsistentPoint solve_mz(cplx z, double eta) {
    if (!(eta >= 0.0) || !std::isfinite(eta)) throw std::invalid_argument("solve_mz: eta must be finite and >= 0");
    const double a = abs2(z);
    SelfConsistentPoint p{z, eta, {}, {}, 0.0};
    if (eta == 0.0) {
        if (a < 1.0) {
            p.m = {0.0, std::sqrt(1.0 - a)};
            p.u = 1.0;
        } else {
            p.m = 0.0;
            p.u = 1.0 / a;
        }
        return p;
    }
    const AxisCubic f{2.0 * eta, -(1.0 - eta * eta - a), -eta};
    const double b = positive_root(f, largest_real_root(f.c2, f.c1, f.c0));
    if (!(b > 0.0)) throw NumericalError("solve_mz: no root with Im m > 0");
    p.m = {0.0, b};
    p.u = b / (eta + b);
    p.residual = relative_cubic_residual(z, {0.0, eta}, p.m);
    return p;
}

cplx hermitized_stieltjes(cplx z, cplx w) {
    if (!(w.imag() > 0.0)) throw std::invalid_argument("hermitized_stieltjes: Im w must be positive");
    const double a = abs2(z);
    if (w.real() == 0.0) return solve_mz(z, w.imag()).m;
    const auto roots = complex_cubic_roots(a, w);
    const double bound = 1.0 / w.imag() * (1.0 + 1e-10);
    int count = 0;
    cplx pick;
    for (const auto& r : roots) {
        if (r.imag() > 0.0 && std::abs(r) <= bound && relative_cubic_residual(z, w, r) < 1e-10) {
            ++count;
            pick = r;
        }
    }
    if (count == 1) return pick;
    const cplx m = continuation(a, w);
    if (!(m.imag() > 0.0)) throw NumericalError("hermitized_stieltjes: branch selection failed");
    return m;
}

cplx hermitized_stieltjes_derivative(cplx z, cplx w, cplx m) {
    const cplx pw = 2.0 * m * m + 2.0 * w * m + 1.0;
    const cplx pm = cubic_derivative({abs2(z), 0.0}, w, m);
    return -pw / pm;
}

double TwoByTwo::max_abs() const {
    double r = 0.0;
    for (const auto& v : a_) r = std::max(r, std::abs(v));
    return r;
}

TwoByTwo TwoByTwo::operator+(const TwoByTwo& o) const {
    return {a_[0] + o.a_[0], a_[1] + o.a_[1], a_[2] + o.a_[2], a_[3] + o.a_[3]};
}

TwoByTwo TwoByTwo::operator-(const TwoByTwo& o) const {
    return {a_[0] - o.a_[0], a_[1] - o.a_[1], a_[2] - o.a_[2], a_[3] - o.a_[3]};
}

TwoByTwo TwoByTwo::operator*(const TwoByTwo& o) const {
    return {a_[0] * o.a_[0] + a_[1] * o.a_[2], a_[0] * o.a_[1] + a_[1] * o.a_[3],
            a_[2] * o.a_[0] + a_[3] * o.a_[2], a_[2] * o.a_[1] + a_[3] * o.a_[3]};
}

TwoByTwo TwoByTwo::operator*(cplx s) const { return {a_[0] * s, a_[1] * s, a_[2] * s, a_[3] * s}; }

TwoByTwo deterministic_M(const SelfConsistentPoint& p) {
    return {p.m, -p.z * p.u, -std::conj(p.z) * p.u, p.m};
}

TwoByTwo deterministic_M(cplx z, double eta) { return deterministic_M(solve_mz(z, eta)); }

TwoByTwo covariance_operator(const TwoByTwo& b) {
    // 2⟨B E1⟩ = B11, 2⟨B E2⟩ = B22
    return {b(1, 1), 0.0, 0.0, b(0, 0)};
}

TwoByTwo two_resolvent_M(cplx z1, double eta1, cplx z2, double eta2, const TwoByTwo& a) {
    const TwoByTwo m1 = deterministic_M(z1, eta1);
    const TwoByTwo m2 = deterministic_M(z2, eta2);
    // Columns of the 4x4 matrix of B -> B - M1 𝒮[B] M2 in the basis E_00, E_01, E_10, E_11.
    std::array<std::array<cplx, 5>, 4> sys{};
    for (int c = 0; c < 4; ++c) {
        TwoByTwo e;
        e(c / 2, c % 2) = 1.0;
        const TwoByTwo img = e - m1 * covariance_operator(e) * m2;
        for (int r = 0; r < 4; ++r) sys[r][c] = img(r / 2, r % 2);
    }
    const TwoByTwo rhs = m1 * a * m2;
    for (int r = 0; r < 4; ++r) sys[r][4] = rhs(r / 2, r % 2);

    double norm = 0.0;
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) norm = std::max(norm, std::abs(sys[r][c]));
    for (int k = 0; k < 4; ++k) {
        int piv = k;
        for (int r = k + 1; r < 4; ++r)
            if (std::abs(sys[r][k]) > std::abs(sys[piv][k])) piv = r;
        if (std::abs(sys[piv][k]) <= 1e-14 * norm)
            throw NumericalError("two_resolvent_M: stability operator is singular (pivot " +
                                 std::to_string(std::abs(sys[piv][k]) / norm) + " relative)");
        std::swap(sys[k], sys[piv]);
        for (int r = k + 1; r < 4; ++r) {
            const cplx f = sys[r][k] / sys[k][k];
            for (int c = k; c < 5; ++c) sys[r][c] -= f * sys[k][c];
        }
    }
    std::array<cplx, 4> x{};
    for (int k = 3; k >= 0; --k) {
        cplx s = sys[k][4];
        for (int c = k + 1; c < 4; ++c) s -= sys[k][c] * x[c];
        x[k] = s / sys[k][k];
    }
    return {x[0], x[1], x[2], x[3]};
}

cplx two_resolvent_closed_form(cplx z1, double eta1, cplx z2, double eta2) {
    const auto p1 = solve_mz(z1, eta1);
    const auto p2 = solve_mz(z2, eta2);
    const cplx uu = p1.u * p2.u;
    const double re = (z1 * std::conj(z2)).real();
    const double zz = abs2(z1) * abs2(z2);
    const cplx mm = p1.m * p1.m * p2.m * p2.m;
    return (uu * re - zz * uu * uu + mm) / (1.0 + zz * uu * uu - mm - 2.0 * uu * re);
}

}  // namespace nhflow::theory
