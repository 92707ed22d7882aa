#include <nhflow/experiments.hpp>
#include <nhflow/theory.hpp>

#include <algorithm>
#include <cmath>
#include <functional>

namespace nhflow::experiments {
namespace {

using kernels::TestFunction;

cplx random_point(sampling::Rng& rng, double radius) {
    const double r = radius * std::sqrt(rng.uniform()), th = 2.0 * pi * rng.uniform();
    return std::polar(r, th);
}

// ∂_z∂_w̄ φ by central differences over the four real second partials, with one
// Richardson step so the truncation error is O(h⁴).
cplx mixed_fd(const std::function<double(cplx, cplx)>& phi, cplx z, cplx w) {
    auto at_h = [&](double h) {
        auto d2 = [&](cplx dz, cplx dw) {
            return (phi(z + dz, w + dw) - phi(z + dz, w - dw) - phi(z - dz, w + dw) + phi(z - dz, w - dw)) / (4.0 * h * h);
        };
        const cplx I(0.0, 1.0);
        const double xu = d2(h, h), xv = d2(h, I * h), yu = d2(I * h, h), yv = d2(I * h, I * h);
        // ∂_z = (∂_x - i∂_y)/2, ∂_w̄ = (∂_u + i∂_v)/2
        return 0.25 * cplx(xu + yv, xv - yu);
    };
    const double h = 2e-4;
    return (16.0 * at_h(h / 2) - at_h(h)) / 15.0;
}

struct Worst {
    double value = 0.0;
    std::string where;
    void update(double err, const std::string& at) {
        if (err > value || !std::isfinite(err)) {
            value = std::isfinite(err) ? err : std::numeric_limits<double>::infinity();
            where = at;
        }
    }
};

void add(ExperimentResult& res, const std::string& name, const Worst& w, double tol) {
    res.criteria.push_back(check_report(name, w.value, 0.0, tol, w.value <= tol, w.where));
    res.table.add({name, fmt(w.value), fmt(tol), w.value <= tol ? "pass" : "fail", w.where});
}

std::string pt(cplx z) { return fmt(z.real()) + (z.imag() < 0 ? "" : "+") + fmt(z.imag()) + "i"; }

void identities(ExperimentResult& res, sampling::Rng& rng) {
    {
        Worst w;
        for (int k = 0; k < 200; ++k) {
            const cplx z = random_point(rng, 1.0), u = random_point(rng, 1.0);
            const double tau = 2.0 * rng.uniform();
            const double a = kernels::kernel_K(z, u, tau), b = kernels::kernel_K(u, z, tau);
            w.update(std::abs(a - b) / std::max(1.0, std::abs(a)), "z=" + pt(z) + " w=" + pt(u));
        }
        add(res, "K(z,w,t) = K(w,z,t) on the closed disk", w, 1e-12);
    }
    {
        Worst w;
        for (int k = 0; k < 200; ++k) {
            const cplx z = random_point(rng, 1.0), u = random_point(rng, 1.0);
            const double t = 2.0 * rng.uniform();
            const double th = kernels::theta_kernel(z, u, t), kk = 0.5 * kernels::kernel_K(z, u, t);
            w.update(std::abs(th - kk) / std::max(1.0, std::abs(kk)), "z=" + pt(z) + " w=" + pt(u));
        }
        add(res, "Theta = K/2 inside the disk", w, 1e-12);
    }
    {
        Worst w;
        const std::vector<std::pair<TestFunction, TestFunction>> pairs = {
            {TestFunction::gaussian("f", 0.0, 1.0), TestFunction::gaussian("g", 1.5, 1.0)},
            {TestFunction::gaussian("f", {0.3, -0.2}, 0.7), TestFunction::gaussian("g", {-0.4, 0.5}, 1.2)},
            {TestFunction::angular_mode("f", 1.0, 2), TestFunction::gaussian("g", 0.5, 0.8)},
        };
        const double taus[] = {0.0, 0.8};
        const cplx v(0.3, 0.0);
        for (const auto& [f, g] : pairs)
            for (double tau : taus) {
                const auto r = kernels::gamma_mesoscopic_routes(f, g, tau, v);
                const double scale = std::max({std::abs(r.q_form.value), std::abs(r.log_form.value), 1e-300});
                w.update(std::abs(r.q_form.value - r.log_form.value) / scale,
                         f.id() + "," + g.id() + " tau=" + fmt(tau) + " (centers " + pt(f.center()) + ", " + pt(g.center()) + ")");
            }
        add(res, "Gamma_v log form = q form (relative)", w, 1e-6);
    }
    {
        Worst w;
        for (int k = 0; k < 60; ++k) {
            const cplx z = random_point(rng, 0.9), u = random_point(rng, 0.9);
            const double tau = 0.2 + rng.uniform();
            const cplx exact = kernels::kernel_K_mixed(z, u, tau);
            const cplx fd = mixed_fd([tau](cplx a, cplx b) { return kernels::kernel_K(a, b, tau); }, z, u);
            w.update(std::abs(exact - fd) / std::max(1.0, std::abs(exact)), "K z=" + pt(z) + " w=" + pt(u));
            const double r = 0.1 + rng.uniform();
            const double lexact = kernels::log_kernel_mixed(z, u, r);
            const cplx lfd = mixed_fd([r](cplx a, cplx b) { return std::log(r + abs2(a - b)); }, z, u);
            w.update(std::abs(lexact - lfd) / std::max(1.0, std::abs(lexact)), "log z=" + pt(z) + " w=" + pt(u));
        }
        add(res, "d_z d_wbar closed forms vs finite differences", w, 1e-7);
    }
    {
        Worst w;
        for (int k = 0; k < 100; ++k) {
            const cplx z1 = random_point(rng, 1.4), z2 = random_point(rng, 1.4);
            const double e1 = 0.02 + rng.uniform(), e2 = 0.02 + rng.uniform();
            using theory::TwoByTwo;
            const cplx direct = (theory::two_resolvent_M(z1, e1, z2, e2, TwoByTwo::E1()) * TwoByTwo::E2()).normalized_trace() +
                                (theory::two_resolvent_M(z1, e1, z2, e2, TwoByTwo::E2()) * TwoByTwo::E1()).normalized_trace();
            const cplx closed = theory::two_resolvent_closed_form(z1, e1, z2, e2);
            w.update(std::abs(direct - closed) / std::max(1.0, std::abs(closed)), "z1=" + pt(z1) + " z2=" + pt(z2));
        }
        add(res, "two-resolvent closed form vs stability operator", w, 1e-10);
    }
    {
        Worst w;
        for (int k = 0; k < 100; ++k) {
            const cplx zt = random_point(rng, 1.3);
            const double eta = 0.01 + rng.uniform(), t = 0.05 + 1.5 * rng.uniform();
            const auto s0 = theory::characteristics_pullback(zt, eta, t);
            const auto p0 = theory::solve_mz(s0.z, s0.eta), pt_ = theory::solve_mz(zt, eta);
            const double eh = std::exp(0.5 * t);
            const double e1 = std::abs(s0.z - eh * zt);
            const double e2 = std::abs(s0.eta - (eh * eta + (eh - 1.0 / eh) * pt_.m.imag())) / std::max(1.0, s0.eta);
            const double e3 = std::abs(p0.m - pt_.m / eh) / std::max(1.0, std::abs(p0.m));
            const double e4 = std::abs(p0.u - pt_.u * std::exp(-t)) / std::max(1.0, std::abs(p0.u));
            w.update(std::max({e1, e2, e3, e4}), "z_t=" + pt(zt) + " eta_t=" + fmt(eta) + " t=" + fmt(t));
        }
        add(res, "characteristic flow identities", w, 1e-9);
    }
    {
        Worst w;
        for (int k = 0; k < 500; ++k) {
            const cplx z = random_point(rng, 2.0);
            const double eta = std::pow(10.0, -4.0 + 5.0 * rng.uniform());
            w.update(theory::solve_mz(z, eta).residual, "z=" + pt(z) + " eta=" + fmt(eta));
            const cplx wpt(4.0 * rng.uniform() - 2.0, std::pow(10.0, -3.0 + 3.0 * rng.uniform()));
            const cplx m = theory::hermitized_stieltjes(z, wpt);
            w.update(theory::relative_cubic_residual(z, wpt, m), "z=" + pt(z) + " w=" + pt(wpt));
        }
        add(res, "self-consistent cubic residuals", w, 1e-12);
    }
    {
        Worst w;
        const std::vector<TestFunction> fs = {TestFunction::gaussian("f", 0.2, 0.25), TestFunction::gaussian("g", {-0.3, 0.4}, 0.3)};
        for (const auto& f : {fs[0]})
            for (double tau : {0.0, 0.4}) {
                const auto a = kernels::gamma_macroscopic(f, fs[1], tau, -0.5), b = kernels::gamma_macroscopic_theta(f, fs[1], tau, -0.5);
                const double tol = 4.0 * (a.quadrature_error + b.quadrature_error);
                w.update(std::max(0.0, std::abs(a.value - b.value) - tol) / std::max(1.0, std::abs(a.value)),
                         f.id() + " tau=" + fmt(tau));
            }
        add(res, "Gamma boundary-series form = Theta form (beyond quadrature error)", w, 1e-6);
    }
}

void gram(ExperimentResult& res, sampling::Rng& rng) {
    Worst w;
    std::size_t failures = 0;
    for (int fam = 0; fam < 20; ++fam) {
        const std::size_t m = 2 + static_cast<std::size_t>(rng.uniform() * 5.0);  // 2..6
        std::vector<TestFunction> fs;
        std::vector<double> times;
        const bool meso = fam % 2 == 0;
        for (std::size_t k = 0; k < m; ++k) {
            const std::string id = "f" + std::to_string(k);
            if (meso)
                fs.push_back(TestFunction::gaussian(id, random_point(rng, 1.5), 0.5 + rng.uniform()));
            else
                fs.push_back(TestFunction::gaussian(id, random_point(rng, 0.8), 0.15 + 0.2 * rng.uniform()));
            times.push_back(rng.uniform());
        }
        const cplx v = meso ? random_point(rng, 0.6) : cplx{};
        kernels::QuadratureGrid coarse;
        coarse.radial = 16;
        coarse.angular = 48;
        const auto rep = kernels::psd_gram(fs, times, v, meso ? kernels::GramKernel::Mesoscopic : kernels::GramKernel::Macroscopic,
                                           1e-6, coarse);
        if (!rep.positive) ++failures;
        w.update(std::max(0.0, -rep.lambda_min / rep.trace), "family " + std::to_string(fam) + (meso ? " (mesoscopic)" : " (macroscopic)"));
    }
    add(res, "Gram lambda_min >= -1e-6 trace over 20 families", w, 1e-6);
    (void)failures;
    double least = std::numeric_limits<double>::infinity();
    std::string where;
    for (double r1 : {0.05, 0.3, 1.0})
        for (double r2 : {0.1, 0.5, 2.0}) {
            const double d = kernels::semigroup_defect(r1, r2);
            if (d < least) {
                least = d;
                where = "r1=" + fmt(r1) + " r2=" + fmt(r2);
            }
        }
    res.criteria.push_back(check_report("semigroup defect > 0", least, 0.0, 0.0, least > 0.0, where));
    res.table.add({"semigroup defect > 0", fmt(least), "0", least > 0.0 ? "pass" : "fail", where});
}

void free_convolution(ExperimentResult& res, sampling::Rng& rng) {
    using theory::FreeConvolutionModel;
    using theory::StieltjesProvider;
    Worst w;
    for (int k = 0; k < 40; ++k) {
        const cplx u(6.0 * rng.uniform() - 3.0, std::pow(10.0, -2.0 + 2.5 * rng.uniform()));
        const double s = 0.2 + rng.uniform(), t = 0.2 + rng.uniform();
        const cplx a = theory::free_convolve(FreeConvolutionModel(StieltjesProvider::semicircle(s), t), u);
        const cplx b = theory::semicircle_transform(s + t, u);
        w.update(std::abs(a - b) / std::max(1.0, std::abs(b)), "sc(" + fmt(s) + ")+sc(" + fmt(t) + ") at " + pt(u));
        const cplx c = theory::free_convolve(FreeConvolutionModel(StieltjesProvider::point_mass(0.0), t), u);
        const cplx d = theory::semicircle_transform(t, u);
        w.update(std::abs(c - d) / std::max(1.0, std::abs(d)), "delta+sc(" + fmt(t) + ") at " + pt(u));
    }
    add(res, "free convolution closed forms", w, 1e-10);

    Worst nrm;
    for (double t : {0.5, 1.0}) {
        // density of μ_sc(1) ⊞ μ_sc(t) on its support, composite Simpson
        const FreeConvolutionModel model(StieltjesProvider::semicircle(1.0), t);
        const double edge = 2.0 * std::sqrt(1.0 + t);
        const int n = 2000;
        const double h = 2.0 * edge / n;
        double s = 0.0;
        for (int k = 0; k <= n; ++k) {
            const double x = -edge + k * h;
            const double c = (k == 0 || k == n) ? 1.0 : (k % 2 ? 4.0 : 2.0);
            s += c * theory::density_at(model, x);
        }
        s *= h / 3.0;
        nrm.update(std::abs(s - 1.0), "t=" + fmt(t));
    }
    add(res, "free convolution density integrates to 1", nrm, 1e-3);
}

}  // namespace

ExperimentResult run_kernels_selftest(std::uint64_t seed, const std::vector<std::string>& groups) {
    ExperimentResult res;
    res.experiment = "kernels-selftest";
    ExperimentConfig cfg;
    cfg.experiment = res.experiment;
    cfg.seed = seed;
    cfg.source = {{"experiment", res.experiment}, {"seed", seed}};
    res.manifest = make_manifest(cfg);
    res.table.columns = {"identity", "worst_error", "tolerance", "pass", "where"};
    auto wanted = [&](const char* g) { return groups.empty() || std::find(groups.begin(), groups.end(), g) != groups.end(); };
    for (const auto& g : groups)
        if (g != "identities" && g != "gram" && g != "free-convolution")
            throw ConfigError("kernels-selftest: unknown group '" + g + "'", "/params/groups");
    // one stream per group so selecting a subset does not change the draws
    if (wanted("identities")) {
        sampling::Rng rng(sampling::derive_seed(seed, 1));
        identities(res, rng);
    }
    if (wanted("gram")) {
        sampling::Rng rng(sampling::derive_seed(seed, 2));
        gram(res, rng);
    }
    if (wanted("free-convolution")) {
        sampling::Rng rng(sampling::derive_seed(seed, 3));
        free_convolution(res, rng);
    }
    return res;
}

}  // namespace nhflow::experiments
