#include <nhflow/kernels.hpp>

#include "../support/generators.hpp"

#include <doctest.h>

#include <cmath>

using namespace nhflow;
using kernels::Monomial;
using kernels::QuadratureGrid;
using kernels::TestFunction;

namespace {

TestFunction random_function(sampling::Rng& rng) {
    // real by construction: pair each (k,l) with (l,k) and the conjugate coefficient
    std::vector<Monomial> terms{{0, 0, gen::uniform(rng, -1.0, 1.0)}};
    const cplx c = rng.complex_normal();
    terms.push_back({1, 0, c});
    terms.push_back({0, 1, std::conj(c)});
    terms.push_back({1, 1, gen::uniform(rng, -1.0, 1.0)});
    const cplx d = rng.complex_normal();
    terms.push_back({2, 1, d});
    terms.push_back({1, 2, std::conj(d)});
    return TestFunction("r", gen::point_in_disk(rng, 0.5), gen::uniform(rng, 0.1, 0.5), terms);
}

}  // namespace

TEST_CASE("test function derivatives agree with finite differences") {
    gen::for_all(30, 301, [](auto& rng) {
        const TestFunction f = random_function(rng);
        const cplx z = f.center() + gen::point_in_disk(rng, 2.0 * f.width());
        const double h = 1e-5 * f.width();
        const double fx = (f(z + h) - f(z - h)) / (2 * h);
        const double fy = (f(z + cplx(0, h)) - f(z - cplx(0, h))) / (2 * h);
        const double scale = std::max(1.0, std::abs(f(z))) / f.width();
        CHECK(std::abs(f.dz(z) - 0.5 * cplx(fx, -fy)) < 1e-6 * scale);
        CHECK(std::abs(f.dzbar(z) - 0.5 * cplx(fx, fy)) < 1e-6 * scale);
        // real f has ∂_z̄ f = conj(∂_z f)
        CHECK(std::abs(f.dzbar(z) - std::conj(f.dz(z))) < 1e-12 * scale);
        const double H = 1e-3 * f.width();
        const double lap = (f(z + H) + f(z - H) + f(z + cplx(0, H)) + f(z - cplx(0, H)) - 4.0 * f(z)) / (H * H);
        CHECK(std::abs(f.laplacian(z) - lap) < 1e-4 * scale / f.width());
    });
}

TEST_CASE("rescaled test functions are f(lambda(z - v))") {
    gen::for_all(30, 302, [](auto& rng) {
        const TestFunction f = random_function(rng);
        const cplx v = gen::point_in_disk(rng, 0.8);
        const double lambda = gen::uniform(rng, 1.0, 30.0);
        const TestFunction g = f.rescaled(v, lambda);
        CHECK(g.width() == doctest::Approx(f.width() / lambda));
        for (int k = 0; k < 5; ++k) {
            const cplx z = g.center() + gen::point_in_disk(rng, 2.0 * g.width());
            CHECK(g(z) == doctest::Approx(f(lambda * (z - v))).epsilon(1e-12).scale(1.0));
        }
    });
}

TEST_CASE("non-real coefficient sets are rejected") {
    CHECK_THROWS(TestFunction("bad", 0.0, 0.3, {{1, 0, 1.0}}));
    CHECK_THROWS(TestFunction::gaussian("bad", 0.0, -0.1));
}

TEST_CASE("Bessel K1 matches reference values") {
    // scipy.special.k1
    const std::vector<std::pair<double, double>> ref{{0.01, 99.97389411829623},       {0.5, 1.6564411200033007},
                                                     {1.0, 0.6019072301972346},       {2.0, 0.13986588181652246},
                                                     {2.5, 0.07389081634774705},      {10.0, 1.8648773453825585e-05},
                                                     {30.0, 2.1677320018915495e-14}};
    for (const auto& [x, k] : ref) {
        CAPTURE(x);
        CHECK(kernels::bessel_k1(x) == doctest::Approx(k).epsilon(1e-12));
    }
}

TEST_CASE("q kernel: unit mass, transform at zero, semigroup defect") {
    CHECK(kernels::q_hat(0.0, 3.0) == 1.0);
    CHECK(kernels::q_hat(0.5, 1e-9) == doctest::Approx(1.0).epsilon(1e-9));
    // ∫ q_r = 2π∫ρ q_r(ρ)dρ; substitute ρ = √r tan θ
    const double r = 0.3;
    const int n = 4000;
    double mass = 0.0;
    for (int k = 0; k < n; ++k) {
        const double th = (k + 0.5) * (0.5 * pi / n);
        const double rho = std::sqrt(r) * std::tan(th);
        const double drho = std::sqrt(r) / (std::cos(th) * std::cos(th));
        mass += 2.0 * pi * rho * kernels::q_kernel(rho, r) * drho * (0.5 * pi / n);
    }
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-6));
    // q_r * q_r ≠ q_2r
    CHECK(kernels::semigroup_defect(0.1, 0.2) > 1e-3);
}

TEST_CASE("K and its mixed derivative") {
    const cplx z(0.2, 0.1), w(-0.3, 0.4);
    CHECK(kernels::kernel_K(z, w, 0.0) == doctest::Approx(-std::log(std::norm(z - w))).epsilon(1e-14));
    CHECK(std::isinf(kernels::kernel_K(z, z, 0.0)));
    CHECK(kernels::kernel_K(z, w, 0.5) == doctest::Approx(kernels::kernel_K(w, z, 0.5)).epsilon(1e-14));
    // ∂_z∂_w̄ by nested central differences
    const double h = 1e-4, tau = 0.3;
    auto dz = [&](cplx a, cplx b) {
        const double fx = (kernels::kernel_K(a + h, b, tau) - kernels::kernel_K(a - h, b, tau)) / (2 * h);
        const double fy = (kernels::kernel_K(a + cplx(0, h), b, tau) - kernels::kernel_K(a - cplx(0, h), b, tau)) / (2 * h);
        return 0.5 * cplx(fx, -fy);
    };
    const cplx gx = (dz(z, w + h) - dz(z, w - h)) / (2 * h);
    const cplx gy = (dz(z, w + cplx(0, h)) - dz(z, w - cplx(0, h))) / (2 * h);
    const cplx mixed = 0.5 * (gx + cplx(0, 1) * gy);
    CHECK(std::abs(kernels::kernel_K_mixed(z, w, tau) - mixed) < 1e-5);
}

TEST_CASE("disk and circle averages of a centered gaussian") {
    for (double s : {0.3, 0.7, 2.0}) {
        const auto f = TestFunction::gaussian("g", 0.0, s);
        const double e = std::exp(-0.5 / (s * s));
        CHECK(kernels::circle_average(f) == doctest::Approx(e).epsilon(1e-12));
        CHECK(kernels::disk_average(f) == doctest::Approx(2.0 * s * s * (1.0 - e)).epsilon(1e-8));
        const auto b = kernels::boundary_series(f, 8);
        CHECK(std::abs(b.at(0) - e) < 1e-12);
        for (int k = 1; k <= 8; ++k) CHECK(std::abs(b.at(k)) < 1e-12);
    }
}

TEST_CASE("boundary pairing of an angular mode") {
    // trace of Re(cζ^k)e^{-|ζ|²/2s²} is Re(c e^{ikθ}) e^{-1/2s²}
    const double s = 0.6;
    const int k = 3;
    const cplx c(0.8, -0.5);
    const auto f = TestFunction::angular_mode("m", s, k, c);
    const auto b = kernels::boundary_series(f, 16);
    const double w = std::exp(-0.5 / (s * s));
    CHECK(std::abs(b.at(k) - 0.5 * c * w) < 1e-12);
    CHECK(std::abs(b.at(-k) - 0.5 * std::conj(c) * w) < 1e-12);
    CHECK(kernels::h_half_pairing(b, b) == doctest::Approx(k * std::norm(c) * w * w / 2.0).epsilon(1e-12));
    CHECK(kernels::h_half_pairing(b, b, 0.4) == doctest::Approx(k * std::norm(c) * w * w / 2.0 * std::exp(-0.6)).epsilon(1e-12));
}

TEST_CASE("Dirichlet energy of an interior bump: Gamma(f,f,0,0) = Gamma_v(f,f,0) = 1/4") {
    // (1/4π)∫|∇f|² = 1/4 for e^{-|z|²/2s²} at any width
    const auto f = TestFunction::gaussian("f", cplx(0.1, -0.05), 0.1);
    const auto macro = kernels::gamma_macroscopic(f, f, 0.0, 0.0);
    CHECK(macro.value == doctest::Approx(0.25).epsilon(1e-6));
    const auto meso = kernels::gamma_mesoscopic(f, f, 0.0, cplx(0.3, 0.0));
    CHECK(meso.value == doctest::Approx(0.25).epsilon(1e-6));
    // κ enters through (⟨f⟩_𝔻 - ⟨f⟩_∂𝔻)², which is nonzero for this bump
    const auto kap = kernels::gamma_macroscopic(f, f, 0.0, -1.0);
    CHECK(kap.value < macro.value);
}

TEST_CASE("macroscopic Gamma is symmetric and decreasing in tau") {
    const auto f = TestFunction::gaussian("f", cplx(0.3, 0.0), 0.25);
    const auto g = TestFunction::gaussian("g", cplx(-0.2, 0.2), 0.3);
    const QuadratureGrid grid{QuadratureGrid::Scheme::PolarGauss, 16, 48};
    const auto fg = kernels::gamma_macroscopic(f, g, 0.2, 0.0, grid);
    const auto gf = kernels::gamma_macroscopic(g, f, 0.2, 0.0, grid);
    // the two orders use different node sets, so agreement is up to quadrature error
    CHECK(std::abs(fg.value - gf.value) <= fg.quadrature_error + gf.quadrature_error + 1e-12);
    const double v0 = kernels::gamma_macroscopic(f, f, 0.0, 0.0, grid).value;
    const double v1 = kernels::gamma_macroscopic(f, f, 0.2, 0.0, grid).value;
    const double v2 = kernels::gamma_macroscopic(f, f, 1.0, 0.0, grid).value;
    CHECK(v0 > v1);
    CHECK(v1 > v2);
    CHECK(v2 > 0.0);
}

TEST_CASE("variance split adds up to the total without a fourth cumulant") {
    const auto f = TestFunction::gaussian("f", cplx(0.2, 0.0), 0.25);
    const QuadratureGrid grid{QuadratureGrid::Scheme::PolarGauss, 16, 48};
    const auto p = kernels::variance_split_prediction(f, 0.0, 0.1, 0.0, false, 0.0, grid);
    CHECK(p.v1.value > 0.0);
    CHECK(p.v2.value > 0.0);
    CHECK(p.v1.value + p.v2.value == doctest::Approx(p.total).epsilon(1e-8));
}

TEST_CASE("overlap correlation prediction and the Gram matrix") {
    const cplx v(0.3, 0.4);
    const double c = 1.0 - std::norm(v);
    const cplx z(0.1, 0.0), w(0.0, 0.2);
    const double expected = c * c / std::pow(c * 0.5 + std::norm(z - w), 2);
    CHECK(kernels::overlap_corr_prediction(z, w, 0.25, 0.75, v) == doctest::Approx(expected).epsilon(1e-14));
    CHECK(kernels::overlap_corr_prediction(z, w, 0.75, 0.25, v) == doctest::Approx(expected).epsilon(1e-14));

    std::vector<TestFunction> fs{TestFunction::gaussian("a", 0.0, 1.0), TestFunction::gaussian("b", 0.5, 0.7),
                                 TestFunction::gaussian("c", cplx(0, -0.4), 1.2)};
    const QuadratureGrid grid{QuadratureGrid::Scheme::PolarGauss, 16, 48};
    const auto gram = kernels::psd_gram(fs, {0.0, 0.5, 1.0}, v, kernels::GramKernel::Mesoscopic, 1e-6, grid);
    REQUIRE(gram.size == 3);
    CHECK(gram.positive);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j)
            CHECK(gram.matrix[i * 3 + j] == doctest::Approx(gram.matrix[j * 3 + i]).epsilon(1e-10));
}
