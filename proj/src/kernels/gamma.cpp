#include <nhflow/kernels.hpp>
#include <nhflow/linalg.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace nhflow::kernels {
namespace {

// Value on the given grid; error from a coarser grid (2/3 of the resolution).
// Halving the spacing of a converged rule moves it far less than this.
template <class F>
std::pair<double, double> with_error(const QuadratureGrid& grid, F&& compute) {
    const double fine = compute(grid);
    const double coarse = compute(grid.scaled(2.0 / 3.0));
    return {fine, std::abs(fine - coarse) + 1e-15 * std::abs(fine)};
}

// (1/π)∫ Re(∂_z f ∂_z̄ g), i.e. (1/4π)∫∇f·∇g, over the unit disk or the plane
double gradient_pairing(const TestFunction& f, const TestFunction& g, bool clip, const QuadratureGrid& grid) {
    double s = 0.0;
    for (const auto& nd : support_nodes(f, clip, grid)) s += nd.w * (f.dz(nd.z) * g.dzbar(nd.z)).real();
    return s / pi;
}

double max_abs_on(const std::vector<Node>& nodes, const std::vector<cplx>& vals) {
    double m = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) m = std::max(m, std::abs(vals[i]));
    return m;
}

// ∫_𝔻 h(z) (1 - |z|²) dz for h = Δf
double laplacian_moment(const TestFunction& f, const QuadratureGrid& grid) {
    double s = 0.0;
    for (const auto& nd : support_nodes(f, true, grid)) s += nd.w * f.laplacian(nd.z) * (1.0 - abs2(nd.z));
    return s;
}

double disk_bulk_term(const TestFunction& f, const TestFunction& g, double tau, const QuadratureGrid& grid) {
    const double a = std::exp(-0.5 * tau);
    const auto outer = support_nodes(f, true, grid);
    std::vector<cplx> df(outer.size());
    for (std::size_t i = 0; i < outer.size(); ++i) df[i] = f.dzbar(outer[i].z);
    const double cut = 1e-17 * max_abs_on(outer, df);
    const RegionSpec gr{g.center(), g.support_radius(), true, false};
    cplx total = 0.0;
    for (std::size_t i = 0; i < outer.size(); ++i) {
        if (std::abs(df[i]) <= cut) continue;
        const cplx z = outer[i].z;
        // A is radial about z/a; near |z| = 1 its width is set by the distance 1/a - 1
        const double ell = std::max(std::sqrt(-std::expm1(-tau) * std::max(0.0, 1.0 - abs2(z))) / a, 1.0 / a - 1.0);
        cplx inner = 0.0;
        for (const auto& nd : region_nodes(gr, z / a, ell, 3, grid))
            inner += nd.w * g.dz(nd.z) * kernel_K_mixed(z, nd.z, tau);
        total += outer[i].w * df[i] * inner;
    }
    return total.real() / (pi * pi);
}

double theta_bulk_term(const TestFunction& f, const TestFunction& g, double tau, const QuadratureGrid& grid) {
    const double a = std::exp(-0.5 * tau);
    const auto outer = region_nodes({f.center(), f.support_radius(), false, true}, f.center(), 0.0, 0, grid);
    std::vector<cplx> lf(outer.size());
    for (std::size_t i = 0; i < outer.size(); ++i) lf[i] = f.laplacian(outer[i].z);
    const double cut = 1e-17 * max_abs_on(outer, lf);
    const RegionSpec gr{g.center(), g.support_radius(), false, true};
    double total = 0.0;
    for (std::size_t i = 0; i < outer.size(); ++i) {
        if (std::abs(lf[i]) <= cut) continue;
        const cplx z = outer[i].z;
        const bool smooth_peak = tau > 0.0 && abs2(z) < 1.0;
        const double ell = smooth_peak ? std::sqrt(-std::expm1(-tau) * (1.0 - abs2(z))) / a : g.width();
        double inner = 0.0;
        for (const auto& nd : region_nodes(gr, z / a, ell, smooth_peak ? 3 : 10, grid))
            inner += nd.w * g.laplacian(nd.z) * theta_kernel(z, nd.z, tau);
        total += outer[i].w * lf[i].real() * inner;
    }
    return total / (8.0 * pi * pi);
}

double meso_q_term(const TestFunction& f, const TestFunction& g, double r, const QuadratureGrid& grid) {
    if (r == 0.0) return gradient_pairing(f, g, false, grid);
    const auto outer = support_nodes(f, false, grid);
    std::vector<cplx> df(outer.size());
    for (std::size_t i = 0; i < outer.size(); ++i) df[i] = f.dzbar(outer[i].z);
    const double cut = 1e-17 * max_abs_on(outer, df);
    const RegionSpec gr{g.center(), g.support_radius(), false, false};
    const double ell = std::sqrt(r);
    cplx total = 0.0;
    for (std::size_t i = 0; i < outer.size(); ++i) {
        if (std::abs(df[i]) <= cut) continue;
        const cplx z = outer[i].z;
        cplx inner = 0.0;
        for (const auto& nd : region_nodes(gr, z, ell, 3, grid)) {
            const double b = r + abs2(z - nd.z);
            inner += nd.w * g.dz(nd.z) * (r / (b * b));
        }
        total += outer[i].w * df[i] * inner;
    }
    return total.real() / (pi * pi);
}

double meso_log_term(const TestFunction& f, const TestFunction& g, double r, const QuadratureGrid& grid) {
    const auto outer = support_nodes(f, false, grid);
    std::vector<cplx> lf(outer.size());
    for (std::size_t i = 0; i < outer.size(); ++i) lf[i] = f.laplacian(outer[i].z);
    const double cut = 1e-17 * max_abs_on(outer, lf);
    const RegionSpec gr{g.center(), g.support_radius(), false, false};
    const double ell = r > 0.0 ? std::sqrt(r) : g.width();
    const int depth = r > 0.0 ? 3 : 10;
    double total = 0.0;
    for (std::size_t i = 0; i < outer.size(); ++i) {
        if (std::abs(lf[i]) <= cut) continue;
        const cplx z = outer[i].z;
        double inner = 0.0;
        for (const auto& nd : region_nodes(gr, z, ell, depth, grid))
            inner += nd.w * g.laplacian(nd.z) * std::log(r + abs2(z - nd.z));
        total += outer[i].w * lf[i].real() * inner;
    }
    return -total / (16.0 * pi * pi);
}

KernelPrediction make_prediction(std::string id, double value, double err, double tau, double kappa, cplx v = 0.0) {
    KernelPrediction p;
    p.value = value;
    p.quadrature_error = err;
    p.kernel_id = std::move(id);
    p.tau = tau;
    p.kappa = kappa;
    p.v = v;
    return p;
}

void check_tau(double tau, const char* who) {
    if (!(tau >= 0.0) || !std::isfinite(tau)) throw std::invalid_argument(std::string(who) + ": tau must be finite and >= 0");
}

}  // namespace

KernelPrediction gamma_macroscopic(const TestFunction& f, const TestFunction& g, double tau, double kappa,
                                   const QuadratureGrid& grid) {
    check_tau(tau, "gamma_macroscopic");
    const auto bf = boundary_series(f), bg = boundary_series(g);
    const double boundary = 0.5 * h_half_pairing(bf, bg, tau);
    const double boundary_err = 64.0 * (bf.tail * (std::abs(bg.at(0)) + bg.tail) + bg.tail * std::abs(bf.at(0))) + 1e-15;

    auto [df, edf] = with_error(grid, [&](const QuadratureGrid& q) { return disk_average(f, q); });
    auto [dg, edg] = with_error(grid, [&](const QuadratureGrid& q) { return disk_average(g, q); });
    const double ef = df - bf.at(0).real(), eg = dg - bg.at(0).real();
    const double kterm = kappa * std::exp(-tau) * ef * eg;
    const double kerr = std::abs(kappa) * std::exp(-tau) * (edf * std::abs(eg) + edg * std::abs(ef));

    auto [bulk, berr] = with_error(grid, [&](const QuadratureGrid& q) {
        return tau == 0.0 ? gradient_pairing(f, g, true, q) : disk_bulk_term(f, g, tau, q);
    });
    return make_prediction("gamma", bulk + boundary + kterm, berr + boundary_err + kerr, tau, kappa);
}

KernelPrediction gamma_macroscopic_theta(const TestFunction& f, const TestFunction& g, double tau, double kappa,
                                         const QuadratureGrid& grid) {
    check_tau(tau, "gamma_macroscopic_theta");
    auto [bulk, berr] = with_error(grid, [&](const QuadratureGrid& q) { return theta_bulk_term(f, g, tau, q); });
    double kterm = 0.0, kerr = 0.0;
    if (kappa != 0.0) {
        auto [mf, emf] = with_error(grid, [&](const QuadratureGrid& q) { return laplacian_moment(f, q); });
        auto [mg, emg] = with_error(grid, [&](const QuadratureGrid& q) { return laplacian_moment(g, q); });
        const double c = kappa * std::exp(-tau) / (16.0 * pi * pi);
        kterm = c * mf * mg;
        kerr = std::abs(c) * (emf * std::abs(mg) + emg * std::abs(mf));
    }
    return make_prediction("gamma-theta", bulk + kterm, berr + kerr, tau, kappa);
}

MesoscopicRoutes gamma_mesoscopic_routes(const TestFunction& f, const TestFunction& g, double tau, cplx v,
                                         const QuadratureGrid& grid) {
    check_tau(tau, "gamma_mesoscopic");
    if (!(abs2(v) < 1.0)) throw std::invalid_argument("gamma_mesoscopic: |v| must be < 1");
    const double r = tau * (1.0 - abs2(v));
    MesoscopicRoutes out;
    auto [q, eq] = with_error(grid, [&](const QuadratureGrid& gg) { return meso_q_term(f, g, r, gg); });
    auto [l, el] = with_error(grid, [&](const QuadratureGrid& gg) { return meso_log_term(f, g, r, gg); });
    out.q_form = make_prediction("gamma-v/q-form", q, eq, tau, 0.0, v);
    out.log_form = make_prediction("gamma-v/log-form", l, el, tau, 0.0, v);
    return out;
}

KernelPrediction gamma_mesoscopic(const TestFunction& f, const TestFunction& g, double tau, cplx v,
                                  const QuadratureGrid& grid) {
    const auto routes = gamma_mesoscopic_routes(f, g, tau, v, grid);
    const double diff = std::abs(routes.q_form.value - routes.log_form.value);
    const double tol = 4.0 * (routes.q_form.quadrature_error + routes.log_form.quadrature_error) +
                       1e-10 * std::abs(routes.q_form.value);
    if (diff > tol) {
        std::ostringstream os;
        os << "gamma_mesoscopic: q-form " << routes.q_form.value << " and log-form " << routes.log_form.value
           << " disagree by " << diff << " (tolerance " << tol << ")";
        throw NumericalError(os.str());
    }
    KernelPrediction p = routes.q_form;
    p.kernel_id = "gamma-v";
    p.quadrature_error = std::max(p.quadrature_error, diff);
    return p;
}

GramReport psd_gram(const std::vector<TestFunction>& functions, const std::vector<double>& times, cplx v,
                    GramKernel kernel, double tol, const QuadratureGrid& grid) {
    const std::size_t m = functions.size();
    if (m == 0 || m != times.size()) throw std::invalid_argument("psd_gram: need one time per function");
    if (m > 12) throw std::invalid_argument("psd_gram: at most 12 functions");
    GramReport rep;
    rep.size = m;
    rep.matrix.assign(m * m, 0.0);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i; j < m; ++j) {
            const double tau = std::abs(times[i] - times[j]);
            const KernelPrediction p =
                kernel == GramKernel::Mesoscopic
                    ? gamma_mesoscopic_routes(functions[i], functions[j], tau, v, grid).q_form
                    : gamma_macroscopic(functions[i], functions[j], tau, 0.0, grid);
            rep.matrix[i * m + j] = rep.matrix[j * m + i] = p.value;
            rep.max_quadrature_error = std::max(rep.max_quadrature_error, p.quadrature_error);
        }
    linalg::ComplexMatrix h(m, m);
    for (std::size_t i = 0; i < m; ++i) {
        rep.trace += rep.matrix[i * m + i];
        for (std::size_t j = 0; j < m; ++j) h(i, j) = rep.matrix[i * m + j];
    }
    rep.lambda_min = linalg::hermitian_eigensolve(h, false).values.front();
    rep.positive = rep.lambda_min >= -tol * rep.trace;
    return rep;
}

KernelPrediction overlap_corr_integrated(const TestFunction& f, const TestFunction& g, cplx v, double s1, double s2,
                                         double t1, double t2, const QuadratureGrid& grid) {
    if (!(s1 < s2 && s2 < t1 && t1 < t2)) throw std::invalid_argument("overlap_corr_integrated: need s1 < s2 < t1 < t2");
    const double c = 1.0 - abs2(v);
    if (!(c > 0.0)) throw std::invalid_argument("overlap_corr_integrated: |v| must be < 1");
    // ∫∫ c²/(c(t-s) + D)² over the time rectangle
    auto time_integral = [&](double d) {
        return std::log(c * (t1 - s1) + d) - std::log(c * (t1 - s2) + d) + std::log(c * (t2 - s2) + d) -
               std::log(c * (t2 - s1) + d);
    };
    const double ell = std::sqrt(c * (t1 - s2));
    auto compute = [&](const QuadratureGrid& q) {
        const RegionSpec gr{g.center(), g.support_radius(), false, false};
        double total = 0.0;
        for (const auto& o : support_nodes(f, false, q)) {
            const double fv = f(o.z);
            if (fv == 0.0) continue;
            double inner = 0.0;
            for (const auto& nd : region_nodes(gr, o.z, ell, 3, q)) inner += nd.w * g(nd.z) * time_integral(abs2(o.z - nd.z));
            total += o.w * fv * inner;
        }
        return total / (pi * pi);
    };
    auto [val, err] = with_error(grid, compute);
    auto p = make_prediction("overlap-corr", val, err, t1 - s2, 0.0, v);
    return p;
}

VarianceSplitPrediction variance_split_prediction(const TestFunction& f, double s, double t, double kappa_s,
                                                  bool mesoscopic, cplx v, const QuadratureGrid& grid) {
    if (!(t >= s)) throw std::invalid_argument("variance_split_prediction: need s <= t");
    const double tau = 2.0 * (t - s);
    VarianceSplitPrediction out;
    KernelPrediction g00, gt0;
    if (mesoscopic) {
        g00 = gamma_mesoscopic_routes(f, f, 0.0, v, grid).q_form;
        gt0 = tau == 0.0 ? g00 : gamma_mesoscopic_routes(f, f, tau, v, grid).q_form;
        out.v1 = gt0;
        out.total = g00.value;
    } else {
        g00 = gamma_macroscopic(f, f, 0.0, 0.0, grid);
        gt0 = tau == 0.0 ? g00 : gamma_macroscopic(f, f, tau, 0.0, grid);
        out.v1 = gamma_macroscopic(f, f, tau, kappa_s, grid);
        // κ_{4,t} = e^{-2(t-s)} κ_{4,s}
        out.total = gamma_macroscopic(f, f, 0.0, kappa_s * std::exp(-tau), grid).value;
    }
    out.v2 = g00;
    out.v2.kernel_id = g00.kernel_id + "/increment";
    out.v2.tau = tau;
    out.v2.value = g00.value - gt0.value;
    out.v2.quadrature_error = g00.quadrature_error + gt0.quadrature_error;
    const double gap = std::abs(out.v1.value + out.v2.value - out.total);
    if (gap > 4.0 * (out.v1.quadrature_error + out.v2.quadrature_error + g00.quadrature_error) + 1e-12)
        throw NumericalError("variance_split_prediction: V1 + V2 does not reproduce the total variance");
    return out;
}

}  // namespace nhflow::kernels
