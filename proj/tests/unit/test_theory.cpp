#include <nhflow/theory.hpp>

#include "../support/generators.hpp"

#include <doctest.h>

#include <cmath>

using namespace nhflow;
using theory::FreeConvolutionModel;
using theory::StieltjesProvider;

TEST_CASE("self-consistent equation at z = 0 has the semicircle solution") {
    // m² + iηm + 1 = 0 on the upper branch
    for (double eta : {1e-6, 1e-3, 0.1, 1.0, 10.0}) {
        const auto p = theory::solve_mz(0.0, eta);
        const cplx expected(0.0, 0.5 * (std::sqrt(eta * eta + 4.0) - eta));
        CHECK(std::abs(p.m - expected) < 1e-13);
        CHECK(p.residual < 1e-12);
    }
}

TEST_CASE("hard-edge limit: Im m -> sqrt(1 - |z|^2) inside the disk and -> 0 outside") {
    for (double r : {0.0, 0.3, 0.7, 0.95}) {
        const auto p = theory::solve_mz(std::polar(r, 0.4), 1e-9);
        CHECK(p.m.imag() == doctest::Approx(std::sqrt(1.0 - r * r)).epsilon(1e-6));
    }
    for (double r : {1.1, 1.5, 3.0}) CHECK(theory::solve_mz(r, 1e-9).m.imag() < 1e-6);
}

TEST_CASE("solutions stay in the upper half plane and agree with the general-w solver") {
    gen::for_all(200, 201, [](auto& rng) {
        const cplx z = gen::point_in_disk(rng, 2.0);
        const double eta = std::pow(10.0, gen::uniform(rng, -4.0, 1.0));
        const auto p = theory::solve_mz(z, eta);
        CHECK(p.m.imag() > 0.0);
        CHECK(p.residual < 1e-12);
        const cplx m2 = theory::hermitized_stieltjes(z, cplx(0.0, eta));
        CHECK(std::abs(m2 - p.m) < 1e-10 * std::max(1.0, std::abs(p.m)));
        // u = m / (iη + m)
        CHECK(std::abs(p.u - p.m / (cplx(0.0, eta) + p.m)) < 1e-12);
    });
}

TEST_CASE("covariance operator maps the identity to itself") {
    const auto s = theory::covariance_operator(theory::TwoByTwo::identity());
    CHECK((s - theory::TwoByTwo::identity()).max_abs() < 1e-15);
    const auto e1 = theory::covariance_operator(theory::TwoByTwo::E1());
    CHECK((e1 - theory::TwoByTwo::E2()).max_abs() < 1e-15);
}

TEST_CASE("characteristics: pullback then forward returns the starting point") {
    // the pullback always exists; the forward flow from its output then
    // cannot hit η = 0 before time t
    gen::for_all(50, 202, [](auto& rng) {
        const cplx z = gen::point_in_disk(rng, 1.5);
        const double eta = gen::uniform(rng, 0.01, 1.5), t = gen::uniform(rng, 0.01, 1.0);
        const auto back = theory::characteristics_pullback(z, eta, t);
        CHECK(back.eta > eta);
        CHECK(std::abs(back.z - z * std::exp(0.5 * t)) < 1e-13);
        const auto fwd = theory::characteristics_forward(back.z, back.eta, t);
        CHECK(std::abs(fwd.z - z) < 1e-12);
        CHECK(fwd.eta == doctest::Approx(eta).epsilon(1e-8));
    });
    CHECK_THROWS(theory::characteristics_forward(0.0, 0.01, 5.0));
}

TEST_CASE("semicircle transform closed form") {
    // variance 1 at w = i: m = i(√5 - 1)/2
    CHECK(std::abs(theory::semicircle_transform(1.0, cplx(0, 1)) - cplx(0, 0.5 * (std::sqrt(5.0) - 1.0))) < 1e-15);
    // m ~ -1/w far away
    const cplx w(1e6, 1.0);
    CHECK(std::abs(theory::semicircle_transform(2.0, w) * w + 1.0) < 1e-9);
    const auto sc = StieltjesProvider::semicircle(1.0);
    const cplx p(0.3, 0.2), h(1e-6, 0.0);
    CHECK(std::abs(sc.dm(p) - (sc.m(p + h) - sc.m(p - h)) / (2.0 * h.real())) < 1e-7);
}

TEST_CASE("free convolution: semicircle flows and density at the origin") {
    for (double t : {0.1, 0.5, 2.0}) {
        const FreeConvolutionModel model(StieltjesProvider::semicircle(1.0), t);
        // density of the semicircle of variance σ² at 0 is 1/(π σ)
        CHECK(theory::density_at(model, 0.0) == doctest::Approx(1.0 / (pi * std::sqrt(1.0 + t))).epsilon(1e-6));
        const cplx w(0.4, 0.3);
        const cplx u = model.subordination(w);
        CHECK(std::abs(u - t * theory::semicircle_transform(1.0, u) - w) < 1e-12);
        CHECK(model.in_domain(u));
    }
    const auto prov = theory::as_provider(FreeConvolutionModel(StieltjesProvider::point_mass(0.0), 0.7));
    CHECK(std::abs(prov.m(cplx(0.2, 0.5)) - theory::semicircle_transform(0.7, cplx(0.2, 0.5))) < 1e-12);
}

TEST_CASE("empirical Stieltjes transform and the bounds checker") {
    const auto e = StieltjesProvider::empirical({-1.0, 0.5, 2.0});
    const cplx w(0.1, 0.2);
    const cplx expected = (1.0 / (-1.0 - w) + 1.0 / (0.5 - w) + 1.0 / (2.0 - w)) / 3.0;
    CHECK(std::abs(e.m(w) - expected) < 1e-15);
    std::vector<cplx> pts;
    for (int k = 0; k < 20; ++k) pts.push_back(cplx(-3.0 + 0.3 * k, 0.01 + 0.05 * k));
    const auto sc = StieltjesProvider::semicircle(1.0);
    CHECK(theory::stieltjes_bounds_check(sc, -2.0, 2.0, pts).ok());
    // a function with Im m < 0 is not a Stieltjes transform
    StieltjesProvider bad = sc;
    bad.m = [](cplx w) { return -theory::semicircle_transform(1.0, w); };
    CHECK_FALSE(theory::stieltjes_bounds_check(bad, -2.0, 2.0, pts).ok());
}

TEST_CASE("hermitized provider matches the self-consistent solution") {
    const cplx z(0.3, 0.1);
    const auto p = StieltjesProvider::hermitized(z);
    CHECK(std::abs(p.m(cplx(0.0, 0.2)) - theory::solve_mz(z, 0.2).m) < 1e-12);
}
