#include <nhflow/linalg.hpp>

#include "../support/generators.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>

using namespace nhflow;
using linalg::ComplexMatrix;

namespace {

// Companion matrix of Π(x - r_k); its eigenvalues are the r_k.
ComplexMatrix companion(const std::vector<cplx>& roots) {
    std::vector<cplx> c{1.0};  // monic coefficients, highest degree first
    for (const cplx& r : roots) {
        std::vector<cplx> next(c.size() + 1);
        for (std::size_t k = 0; k < c.size(); ++k) {
            next[k] += c[k];
            next[k + 1] -= r * c[k];
        }
        c = next;
    }
    const std::size_t n = roots.size();
    ComplexMatrix a(n, n);
    for (std::size_t j = 0; j < n; ++j) a(0, j) = -c[j + 1];
    for (std::size_t i = 1; i < n; ++i) a(i, i - 1) = 1.0;
    return a;
}

}  // namespace

TEST_CASE("eigenvalues of a fixed 3x3 matrix match an independent reference") {
    ComplexMatrix a(3, 3);
    a(0, 0) = 1.0;
    a(0, 1) = cplx(0, 2);
    a(1, 0) = 0.5;
    a(1, 1) = 3.0;
    a(1, 2) = cplx(1, -1);
    a(2, 0) = 1.0;
    a(2, 2) = cplx(2, 1);
    // numpy.linalg.eigvals
    const std::vector<cplx> ref{{1.1962685083041524, -0.9427044335733181},
                                {1.1963587463223626, 1.1946556098802166},
                                {3.6073727453734845, 0.748048823693101}};
    CHECK(gen::multiset_distance(linalg::eigenvalues(a), ref) < 1e-12);
    // numpy.linalg.svd(A - 0.3i·I)
    const auto sv = linalg::singular_values(a, cplx(0, 0.3));
    REQUIRE(sv.size() == 3);
    CHECK(sv[0] == doctest::Approx(1.054271930352203).epsilon(1e-12));
    CHECK(sv[1] == doctest::Approx(2.2339547040116288).epsilon(1e-12));
    CHECK(sv[2] == doctest::Approx(3.977179537976096).epsilon(1e-12));
}

TEST_CASE("companion matrices recover their roots") {
    gen::for_all(20, 101, [](auto& rng) {
        const std::size_t n = gen::size_in(rng, 2, 8);
        std::vector<cplx> roots;
        // roots on a jittered circle stay well separated
        for (std::size_t k = 0; k < n; ++k)
            roots.push_back(std::polar(gen::uniform(rng, 0.5, 1.5), 2.0 * pi * (k + 0.3 * rng.uniform()) / n));
        CHECK(gen::multiset_distance(linalg::eigenvalues(companion(roots)), roots) < 1e-9);
    });
}

TEST_CASE("triangular matrices have their diagonal as spectrum") {
    gen::for_all(10, 102, [](auto& rng) {
        const std::size_t n = gen::size_in(rng, 1, 30);
        ComplexMatrix a(n, n);
        std::vector<cplx> d;
        for (std::size_t j = 0; j < n; ++j) {
            for (std::size_t i = 0; i < j; ++i) a(i, j) = rng.complex_normal();
            a(j, j) = rng.complex_normal();
            d.push_back(a(j, j));
        }
        CHECK(gen::multiset_distance(linalg::eigenvalues(a), d) < 1e-8);
    });
}

TEST_CASE("eigendecomposition invariants: trace, determinant, residuals, biorthogonality") {
    gen::for_all(25, 103, [](auto& rng) {
        const std::size_t n = gen::size_in(rng, 2, 60);
        const ComplexMatrix a = gen::matrix(rng, n);
        const auto spec = linalg::nonhermitian_eigensolve(a);
        REQUIRE(spec.size() == n);
        cplx tr = 0.0, sum = 0.0;
        double logdet = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            tr += a(i, i);
            sum += spec.eigenvalues[i];
            logdet += std::log(std::abs(spec.eigenvalues[i]));
        }
        CHECK(std::abs(tr - sum) < 1e-10 * n);
        const auto ld = linalg::lu_logabsdet(a);
        CHECK(!ld.singular);
        CHECK(ld.value == doctest::Approx(logdet).epsilon(1e-9).scale(1.0));
        CHECK(spec.biorthogonality_error < 1e-9);
        for (double r : spec.residual_norms) CHECK(r < 1e-12);
        // L_i^T R_i = 1 and the overlap ||L_i||²||R_i||² is at least 1
        for (std::size_t i = 0; i < n; ++i) {
            cplx dot = 0.0;
            for (std::size_t k = 0; k < n; ++k) dot += spec.left(k, i) * spec.right(k, i);
            CHECK(std::abs(dot - 1.0) < 1e-9);
            CHECK(spec.condition[i] >= 1.0 - 1e-12);
        }
    });
}

TEST_CASE("normal matrices have perfectly conditioned eigenvectors") {
    // unitary diagonalization U D U* built from a Hermitian eigenbasis
    sampling::Rng rng(104);
    const std::size_t n = 12;
    const auto h = linalg::hermitian_eigensolve(gen::hermitian(rng, n));
    std::vector<cplx> d(n);
    for (auto& x : d) x = rng.complex_normal();
    const ComplexMatrix a = h.vectors * ComplexMatrix::diagonal(d) * h.vectors.adjoint();
    const auto spec = linalg::nonhermitian_eigensolve(a);
    for (double c : spec.condition) CHECK(c == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("singular values squared are the eigenvalues of (X - z)*(X - z)") {
    gen::for_all(20, 105, [](auto& rng) {
        const std::size_t n = gen::size_in(rng, 1, 40);
        const ComplexMatrix a = gen::matrix(rng, n);
        const cplx z = gen::point_in_disk(rng, 1.2);
        const auto sv = linalg::singular_values(a, z);
        const auto b = linalg::shifted(a, z);
        const auto ev = linalg::hermitian_eigensolve(b.adjoint() * b, false).values;
        REQUIRE(sv.size() == n);
        CHECK(std::is_sorted(sv.begin(), sv.end()));
        for (std::size_t i = 0; i < n; ++i) CHECK(sv[i] * sv[i] == doctest::Approx(ev[i]).epsilon(1e-9).scale(1.0));
    });
}

TEST_CASE("singular triplets reconstruct the shifted matrix") {
    sampling::Rng rng(106);
    const ComplexMatrix a = gen::matrix(rng, 25);
    const auto t = linalg::singular_triplets(a, 0.4);
    CHECK(t.residual < 1e-12);
    CHECK(t.orthogonality_error < 1e-12);
}

TEST_CASE("Hermitian eigensolver: residual, orthogonality and the discrete Laplacian") {
    gen::for_all(15, 107, [](auto& rng) {
        const std::size_t n = gen::size_in(rng, 1, 50);
        const auto h = linalg::hermitian_eigensolve(gen::hermitian(rng, n));
        CHECK(std::is_sorted(h.values.begin(), h.values.end()));
        CHECK(h.residual < 1e-13);
        CHECK(h.orthogonality_error < 1e-12);
    });
    // 2 - 2cos(kπ/(n+1)) for the path-graph Laplacian
    const std::size_t n = 40;
    const auto ev = linalg::tridiagonal_eigenvalues(std::vector<double>(n, 2.0), std::vector<double>(n - 1, -1.0));
    for (std::size_t k = 1; k <= n; ++k)
        CHECK(ev[k - 1] == doctest::Approx(2.0 - 2.0 * std::cos(k * pi / (n + 1))).epsilon(1e-12).scale(1.0));
}

TEST_CASE("resolvent trace of the Hermitization agrees with its materialized spectrum") {
    sampling::Rng rng(108);
    const std::size_t n = 10;
    const ComplexMatrix x = gen::matrix(rng, n);
    const cplx z(0.2, -0.1);
    const double eta = 0.05;
    const auto h = linalg::hermitian_eigensolve(linalg::hermitize(x, z).materialize(), false);
    cplx direct = 0.0;
    for (double mu : h.values) direct += 1.0 / (mu - cplx(0.0, eta));
    const cplx via_sv = linalg::resolvent_trace(linalg::singular_values(x, z), eta);
    CHECK(std::abs(via_sv - direct) < 1e-10 * std::abs(direct));
    CHECK(std::abs(via_sv.real()) < 1e-12);
}

TEST_CASE("LU log-determinant flags singular matrices and matches diagonal products") {
    ComplexMatrix s(3, 3);
    s(0, 0) = 1.0;
    s(0, 1) = 2.0;
    s(1, 0) = 2.0;
    s(1, 1) = 4.0;
    s(2, 2) = 1.0;
    CHECK(linalg::lu_logabsdet(s).singular);
    const std::vector<cplx> d{cplx(2, 0), cplx(0, -3), cplx(0.5, 0.5)};
    const auto ld = linalg::lu_logabsdet(ComplexMatrix::diagonal(d));
    CHECK(ld.value == doctest::Approx(std::log(2.0 * 3.0 * std::sqrt(0.5))).epsilon(1e-14));
}

TEST_CASE("eigenvalue workspace reuse gives identical results") {
    sampling::Rng rng(109);
    linalg::EigenWorkspace ws;
    std::vector<cplx> out;
    for (std::size_t n : {30, 5, 30}) {
        const ComplexMatrix a = gen::matrix(rng, n);
        linalg::eigenvalues(a, ws, out);
        CHECK(out == linalg::eigenvalues(a));
    }
}

TEST_CASE("spectrum binary round trip") {
    const std::vector<cplx> v{cplx(1, 2), cplx(-0.5, 1e-300), cplx(3, -4)};
    const std::string path = "linalg_roundtrip.bin";
    linalg::write_spectrum_binary(path, v);
    CHECK(linalg::read_spectrum_binary(path) == v);
    std::remove(path.c_str());
}
