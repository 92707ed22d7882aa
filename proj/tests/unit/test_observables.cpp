#include <nhflow/observables.hpp>

#include "../support/generators.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace nhflow;
using kernels::TestFunction;
using linalg::ComplexMatrix;

TEST_CASE("overlaps of a normal matrix are all one") {
    sampling::Rng rng(401);
    const std::size_t n = 15;
    const auto h = linalg::hermitian_eigensolve(gen::hermitian(rng, n));
    std::vector<cplx> d(n);
    for (auto& x : d) x = rng.complex_normal();
    const ComplexMatrix a = h.vectors * ComplexMatrix::diagonal(d) * h.vectors.adjoint();
    const auto ov = observables::diagonal_overlaps(linalg::nonhermitian_eigensolve(a));
    CHECK(ov.excluded == 0);
    REQUIRE(ov.records.size() == n);
    for (const auto& r : ov.records) CHECK(r.overlap == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("overlaps of a 2x2 upper triangular matrix") {
    // [[a, b], [0, c]]: O_11 = O_22 = 1 + |b|²/|a - c|²
    gen::for_all(50, 402, [](auto& rng) {
        const cplx a = rng.complex_normal(), b = rng.complex_normal(), c = rng.complex_normal();
        ComplexMatrix m(2, 2);
        m(0, 0) = a;
        m(0, 1) = b;
        m(1, 1) = c;
        const auto ov = observables::diagonal_overlaps(linalg::nonhermitian_eigensolve(m));
        REQUIRE(ov.records.size() == 2);
        const double expected = 1.0 + std::norm(b) / std::norm(a - c);
        for (const auto& r : ov.records) CHECK(r.overlap == doctest::Approx(expected).epsilon(1e-8));
    });
}

TEST_CASE("linear statistics sum the function over eigenvalues") {
    sampling::Rng rng(403);
    const ComplexMatrix x = gen::matrix(rng, 30);
    const auto spec = linalg::nonhermitian_eigensolve(x);
    const auto f = TestFunction::gaussian("f", cplx(0.1, 0.2), 0.4);
    double direct = 0.0;
    for (cplx l : spec.eigenvalues) direct += f(l);
    CHECK(observables::linear_sum(spec.eigenvalues, f) == doctest::Approx(direct).epsilon(1e-14));
    const auto st = observables::linear_statistic(spec, f, 0.25);
    CHECK(st.function_id == "f");
    CHECK(st.time == 0.25);
    CHECK(st.raw_value == doctest::Approx(direct).epsilon(1e-14));
}

TEST_CASE("log-determinant field matches LU at each point") {
    sampling::Rng rng(404);
    const ComplexMatrix x = gen::matrix(rng, 12);
    const std::vector<cplx> pts{0.0, cplx(0.3, -0.2), cplx(1.5, 0.5)};
    const auto field = observables::logdet_field(x, pts);
    REQUIRE(field.size() == pts.size());
    for (std::size_t k = 0; k < pts.size(); ++k) {
        const auto ref = linalg::lu_logabsdet(linalg::shifted(x, pts[k]));
        CHECK(field[k].value == doctest::Approx(ref.value).epsilon(1e-12).scale(1.0));
    }
}

TEST_CASE("Girko decomposition sums back to the linear statistic") {
    sampling::Rng rng(405);
    const std::size_t n = 24;
    const ComplexMatrix x = gen::matrix(rng, n);
    const auto f = TestFunction::gaussian("f", cplx(0.1, 0.0), 0.35);
    const double direct = observables::linear_sum(linalg::eigenvalues(x), f);
    // the pieces telescope to (1/2π)∫Δf log|det(X - z)|; only the z-quadrature
    // of the log singularities separates it from Σ f(σ_i), and that shrinks with the grid
    const auto split = observables::girko_decompose(x, f, 1e-3, 0.1, 1e3);
    const auto fine = observables::girko_decompose(x, f, 1e-3, 0.1, 1e3, kernels::QuadratureGrid{}.scaled(4.0));
    CHECK(split.singular_points == 0);
    MESSAGE("default grid error " << split.total() - direct << ", 4x grid " << fine.total() - direct);
    CHECK(std::abs(fine.total() - direct) < 0.25 * std::abs(split.total() - direct));
    CHECK(std::abs(fine.total() - direct) < 1e-3);
    CHECK(split.eta0 == 1e-3);
    CHECK(split.T == 1e3);
    // every piece is finite and the top piece vanishes as T grows
    const auto far = observables::girko_decompose(x, f, 1e-3, 0.1, 1e6);
    CHECK(std::abs(far.J_T) < std::abs(split.J_T));
    CHECK(far.total() == doctest::Approx(split.total()).epsilon(1e-9));
}

TEST_CASE("mesoscopic rescaling") {
    const auto f = TestFunction::gaussian("f", 0.0, 1.0);
    const auto g = observables::rescale_function(f, cplx(0.2, 0.1), 0.25, 256);
    // N^a = 4
    CHECK(g.width() == doctest::Approx(0.25));
    CHECK(g(cplx(0.3, 0.1)) == doctest::Approx(f(cplx(0.4, 0.0))).epsilon(1e-14));
}

TEST_CASE("observable rows are written as CSV") {
    std::ostringstream os;
    observables::write_csv_header(os);
    observables::write_csv_row(os, {3, 0.5, "f", 1.25});
    const std::string s = os.str();
    CHECK(s.find("replica") == 0);
    CHECK(s.find("3,0.5,f,1.25") != std::string::npos);
}
