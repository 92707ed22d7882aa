#include <nhflow/theory.hpp>

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>

namespace nhflow::theory {

CharacteristicState characteristics_pullback(cplx z_t, double eta_t, double t) {
    if (!(eta_t > 0.0)) throw std::invalid_argument("characteristics_pullback: eta_t must be positive");
    if (!(t >= 0.0)) throw std::invalid_argument("characteristics_pullback: t must be nonnegative");
    if (t == 0.0) return {z_t, eta_t, 0.0};
    const auto pt = solve_mz(z_t, eta_t);
    const double eh = std::exp(0.5 * t);
    const CharacteristicState s{eh * z_t, eh * eta_t + (eh - 1.0 / eh) * pt.m.imag(), t};
    const auto p0 = solve_mz(s.z, s.eta);
    const double dm = std::abs(p0.m - pt.m / eh);
    const double du = std::abs(p0.u - pt.u * std::exp(-t));
    if (dm > 1e-9 * std::max(1.0, std::abs(p0.m)) || du > 1e-9 * std::max(1.0, std::abs(p0.u)))
        throw NumericalError("characteristics_pullback: flow identities violated (branch inconsistency)");
    return s;
}

CharacteristicState characteristics_forward(cplx z0, double eta0, double t) {
    if (!(eta0 > 0.0)) throw std::invalid_argument("characteristics_forward: eta0 must be positive");
    if (!(t >= 0.0)) throw std::invalid_argument("characteristics_forward: t must be nonnegative");
    if (t == 0.0) return {z0, eta0, 0.0};
    const double eh = std::exp(0.5 * t);
    const cplx zt = z0 / eh;
    // η0 = e^{t/2} η + (e^{t/2} - e^{-t/2}) Im m^{z_t}(iη) =: g(η), increasing along the flow.
    auto g = [&](double eta) { return eh * eta + (eh - 1.0 / eh) * solve_mz(zt, eta).m.imag(); };
    const double g0 = (eh - 1.0 / eh) * solve_mz(zt, 0.0).m.imag();
    if (eta0 <= g0) {
        // crossing time s solves (e^{s/2} - e^{-s/2}) Im m^{z_s}(i0+) = η0
        auto h = [&](double s) {
            const double e = std::exp(0.5 * s);
            return (e - 1.0 / e) * solve_mz(z0 / e, 0.0).m.imag() - eta0;
        };
        double lo = 0.0, hi = t;
        for (int it = 0; it < 200 && hi - lo > 1e-15 * t; ++it) {
            const double mid = 0.5 * (lo + hi);
            (h(mid) < 0.0 ? lo : hi) = mid;
        }
        std::ostringstream os;
        os << "characteristics_forward: eta reaches 0 at t = " << hi;
        throw CharacteristicCrossing(os.str(), hi);
    }
    double lo = 0.0, hi = eta0 / eh;
    while (g(hi) < eta0) hi *= 2.0;
    for (int it = 0; it < 300; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        (g(mid) < eta0 ? lo : hi) = mid;
        if (hi - lo <= 1e-16 * hi) break;
    }
    return {zt, 0.5 * (lo + hi), t};
}

cplx semicircle_transform(double variance, cplx w) {
    // principal roots of (w - 2σ)(w + 2σ) give the branch with m ~ -1/w at infinity
    const double s = 2.0 * std::sqrt(variance);
    const cplx root = std::sqrt(w - s) * std::sqrt(w + s);
    // (-w + root)/(2σ²) rewritten to avoid cancellation for large |w|
    return -2.0 / (w + root);
}

StieltjesProvider StieltjesProvider::semicircle(double variance) {
    if (!(variance > 0.0)) throw std::invalid_argument("semicircle variance must be positive");
    StieltjesProvider p;
    p.m = [variance](cplx w) { return semicircle_transform(variance, w); };
    p.dm = [variance](cplx w) {
        const cplx m = semicircle_transform(variance, w);
        return -m / (2.0 * variance * m + w);
    };
    const double edge = 2.0 * std::sqrt(variance);
    p.support_lo = -edge;
    p.support_hi = edge;
    p.name = "semicircle";
    return p;
}

StieltjesProvider StieltjesProvider::point_mass(double x0) {
    StieltjesProvider p;
    p.m = [x0](cplx w) { return 1.0 / (x0 - w); };
    p.dm = [x0](cplx w) { return 1.0 / ((x0 - w) * (x0 - w)); };
    p.support_lo = p.support_hi = x0;
    p.name = "point-mass";
    return p;
}

StieltjesProvider StieltjesProvider::empirical(std::vector<double> points) {
    if (points.empty()) throw std::invalid_argument("empirical measure needs points");
    StieltjesProvider p;
    const auto [lo, hi] = std::minmax_element(points.begin(), points.end());
    p.support_lo = *lo;
    p.support_hi = *hi;
    auto pts = std::make_shared<const std::vector<double>>(std::move(points));
    p.m = [pts](cplx w) {
        cplx s = 0.0;
        for (double x : *pts) s += 1.0 / (x - w);
        return s / static_cast<double>(pts->size());
    };
    p.dm = [pts](cplx w) {
        cplx s = 0.0;
        for (double x : *pts) s += 1.0 / ((x - w) * (x - w));
        return s / static_cast<double>(pts->size());
    };
    p.name = "empirical";
    return p;
}

StieltjesProvider StieltjesProvider::hermitized(cplx z) {
    StieltjesProvider p;
    p.m = [z](cplx w) { return hermitized_stieltjes(z, w); };
    p.dm = [z](cplx w) { return hermitized_stieltjes_derivative(z, w, hermitized_stieltjes(z, w)); };
    // ||X|| -> 2 for the circular law, so the singular values of X - z stay below 2 + |z|
    p.support_hi = 2.0 + std::abs(z);
    p.support_lo = -p.support_hi;
    p.name = "hermitized";
    return p;
}

FreeConvolutionModel::FreeConvolutionModel(StieltjesProvider m0, double t) : m0_(std::move(m0)), t_(t) {
    if (!(t >= 0.0)) throw std::invalid_argument("free convolution time must be nonnegative");
    if (!m0_.m || !m0_.dm) throw std::invalid_argument("free convolution needs m0 and its derivative");
}

bool FreeConvolutionModel::in_domain(cplx u) const {
    if (!(u.imag() > 0.0)) return false;
    // ∫ dμ/|u - x|² = Im m(u) / Im u
    return t_ * m0_.m(u).imag() / u.imag() < 1.0;
}

namespace {

// Newton on Φ(u) = u - t m0(u) - w from a starting point; returns false on
// failure instead of throwing so the caller can fall back to continuation.
bool newton_subordination(const StieltjesProvider& m0, double t, cplx w, cplx& u, std::string* trace) {
    for (int it = 0; it < 100; ++it) {
        const cplx f = u - t * m0.m(u) - w;
        if (std::abs(f) <= 1e-13 * std::max(1.0, std::abs(w))) return true;
        const cplx d = 1.0 - t * m0.dm(u);
        cplx step = f / d;
        // damping keeps the iterate in the upper half plane
        double lambda = 1.0;
        cplx next = u - step;
        while (!(next.imag() > 0.0) && lambda > 1e-6) {
            lambda *= 0.5;
            next = u - lambda * step;
        }
        if (!(next.imag() > 0.0)) {
            if (trace) *trace += "left upper half plane; ";
            return false;
        }
        u = next;
    }
    const cplx f = u - t * m0.m(u) - w;
    if (trace) *trace += "no convergence, |Φ(u)-w| = " + std::to_string(std::abs(f)) + "; ";
    return std::abs(f) <= 1e-12 * std::max(1.0, std::abs(w));
}

}  // namespace

cplx FreeConvolutionModel::subordination(cplx w) const {
    if (!(w.imag() > 0.0)) throw std::invalid_argument("free_convolve: Im w must be positive");
    if (t_ == 0.0) return w;
    std::string trace;
    // Im u = Im w + t Im m0(u) > Im w; start above w
    cplx u = w + cplx(0.0, t_ * std::max(m0_.m(w).imag(), 0.0));
    if (newton_subordination(m0_, t_, w, u, &trace) && in_domain(u)) return u;
    // continuation in Im w from far above, where Φ^{-1}(w) ≈ w
    const double target = w.imag();
    const double start = std::max({10.0, 10.0 * target, 4.0 * std::sqrt(t_)});
    u = cplx(w.real(), start);
    const int steps = 60;
    for (int k = 0; k <= steps; ++k) {
        const cplx wk(w.real(), start * std::pow(target / start, static_cast<double>(k) / steps));
        if (!newton_subordination(m0_, t_, wk, u, &trace))
            throw NumericalError("free_convolve: Newton failed during continuation: " + trace);
    }
    if (!in_domain(u)) throw NumericalError("free_convolve: subordination point left the domain: " + trace);
    return u;
}

cplx free_convolve(const FreeConvolutionModel& model, cplx w) {
    if (model.time() == 0.0) return model.initial().m(w);
    return model.initial().m(model.subordination(w));
}

double density_at(const FreeConvolutionModel& model, double x) {
    const double h = 1e-3;
    const double f1 = free_convolve(model, {x, h}).imag() / pi;
    const double f2 = free_convolve(model, {x, h / 2}).imag() / pi;
    const double f4 = free_convolve(model, {x, h / 4}).imag() / pi;
    // f(η) = f0 + aη + bη², three-level extrapolation
    const double rho = (8.0 * f4 - 6.0 * f2 + f1) / 3.0;
    if (rho < -1e-6) throw NumericalError("density_at: negative extrapolated density");
    return std::max(rho, 0.0);
}

StieltjesProvider as_provider(const FreeConvolutionModel& model) {
    StieltjesProvider p;
    auto mdl = std::make_shared<const FreeConvolutionModel>(model);
    p.m = [mdl](cplx w) { return free_convolve(*mdl, w); };
    p.dm = [mdl](cplx w) {
        // m_t(w) = m0(u(w)), u'(w) = 1 / (1 - t m0'(u))
        const cplx u = mdl->subordination(w);
        return mdl->initial().dm(u) / (1.0 - mdl->time() * mdl->initial().dm(u));
    };
    const double spread = 2.0 * std::sqrt(model.time());
    p.support_lo = model.initial().support_lo - spread;
    p.support_hi = model.initial().support_hi + spread;
    p.name = model.initial().name + "+semicircle";
    return p;
}

StieltjesReport stieltjes_bounds_check(const StieltjesProvider& m, double support_lo, double support_hi,
                                       std::span<const cplx> points) {
    StieltjesReport rep;
    for (const cplx& z : points) {
        if (!(z.imag() > 0.0)) throw std::invalid_argument("stieltjes_bounds_check: points must have Im z > 0");
        const double dx = z.real() < support_lo ? support_lo - z.real()
                          : z.real() > support_hi ? z.real() - support_hi
                                                  : 0.0;
        const double dist = std::hypot(dx, z.imag());
        const cplx mz = m.m(z);
        const double h = z.imag() / 100.0;
        const cplx dmz = (m.m(z + h) - m.m(z - h)) / (2.0 * h);
        const double vr = std::abs(mz) * dist;
        const double dr = std::abs(dmz) * z.imag() / mz.imag();
        rep.worst_value_ratio = std::max(rep.worst_value_ratio, vr);
        rep.worst_derivative_ratio = std::max(rep.worst_derivative_ratio, dr);
        // the centered difference carries a relative error ~ (h/Im z)² = 1e-4
        if (vr > 1.0 + 1e-12 || dr > 1.0 + 1e-3 || !(mz.imag() > 0.0)) rep.violations.push_back(z);
        ++rep.checked;
    }
    return rep;
}

}  // namespace nhflow::theory
