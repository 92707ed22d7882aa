#include <nhflow/sampling.hpp>

#include "../support/generators.hpp"

#include <doctest.h>

#include <cmath>
#include <set>

using namespace nhflow;
using sampling::EntryDistribution;
using sampling::Rng;

namespace {

struct EntryMoments {
    double second = 0.0;  // E|χ|²
    cplx pseudo;          // Eχ²
    cplx mean;
    double kappa4 = 0.0;  // E|χ|⁴ - 2
    double kappa4_se = 0.0;
};

EntryMoments moments(const std::vector<cplx>& x) {
    EntryMoments m;
    double s4 = 0.0, s8 = 0.0;
    for (const cplx& v : x) {
        m.mean += v;
        m.second += abs2(v);
        m.pseudo += v * v;
        s4 += abs2(v) * abs2(v);
        s8 += std::pow(abs2(v), 4);
    }
    const double n = static_cast<double>(x.size());
    m.mean /= n;
    m.second /= n;
    m.pseudo /= n;
    m.kappa4 = s4 / n - 2.0;
    m.kappa4_se = std::sqrt(std::max(0.0, s8 / n - (s4 / n) * (s4 / n)) / n);
    return m;
}

}  // namespace

TEST_CASE("derive_seed is deterministic and spreads indices") {
    CHECK(sampling::derive_seed(7, 3) == sampling::derive_seed(7, 3));
    std::set<std::uint64_t> seen;
    for (std::uint64_t i = 0; i < 1000; ++i) seen.insert(sampling::derive_seed(42, i));
    CHECK(seen.size() == 1000);
    CHECK(sampling::derive_seed(1, 0) != sampling::derive_seed(2, 0));
}

TEST_CASE("Rng streams replay exactly and differ across indices") {
    Rng a(5), b(5);
    for (int k = 0; k < 100; ++k) CHECK(a() == b());
    Rng s1 = Rng(5).stream(1), s2 = Rng(5).stream(2);
    CHECK(s1() != s2());
    Rng u(9);
    for (int k = 0; k < 10000; ++k) {
        const double x = u.uniform();
        REQUIRE(x >= 0.0);
        REQUIRE(x < 1.0);
    }
}

TEST_CASE("complex normal has E|g|² = 1 and Eg² = 0") {
    Rng rng(11);
    std::vector<cplx> x(200000);
    for (auto& v : x) v = rng.complex_normal();
    const auto m = moments(x);
    CHECK(m.second == doctest::Approx(1.0).epsilon(0.01));
    CHECK(std::abs(m.pseudo) < 0.01);
    CHECK(std::abs(m.kappa4) < 5.0 * m.kappa4_se);
}

TEST_CASE("entry distributions are standardized with the stated fourth cumulant") {
    const std::vector<EntryDistribution> dists{EntryDistribution::complex_gaussian(), EntryDistribution::uniform_phase(),
                                               EntryDistribution::four_point(), EntryDistribution::two_radius(-0.5),
                                               EntryDistribution::two_radius(0.0), EntryDistribution::two_radius(2.0)};
    // exact values: |χ| ≡ 1 gives E|χ|⁴ - 2 = -1
    CHECK(EntryDistribution::uniform_phase().fourth_cumulant() == -1.0);
    CHECK(EntryDistribution::four_point().fourth_cumulant() == -1.0);
    CHECK(EntryDistribution::complex_gaussian().fourth_cumulant() == 0.0);
    for (std::size_t k = 0; k < dists.size(); ++k) {
        CAPTURE(dists[k].name());
        Rng rng(sampling::derive_seed(12, k));
        std::vector<cplx> x(200000);
        for (auto& v : x) v = dists[k].draw(rng);
        const auto m = moments(x);
        CHECK(m.second == doctest::Approx(1.0).epsilon(0.02));
        CHECK(std::abs(m.pseudo) < 0.02);
        CHECK(std::abs(m.mean) < 0.01);
        CHECK(std::abs(m.kappa4 - dists[k].fourth_cumulant()) < 5.0 * m.kappa4_se + 1e-12);
    }
}

TEST_CASE("entry distributions by name") {
    CHECK(EntryDistribution::from_name("complex-gaussian").kind() == sampling::EntryKind::ComplexGaussian);
    CHECK(EntryDistribution::from_name("uniform-modulus-phase").kind() == sampling::EntryKind::UniformPhase);
    CHECK(EntryDistribution::from_name("symmetric-four-point").kind() == sampling::EntryKind::FourPoint);
    CHECK(EntryDistribution::from_name("two-radius", 1.5).fourth_cumulant() == 1.5);
    CHECK_THROWS_AS(EntryDistribution::from_name("bernoulli"), std::invalid_argument);
    CHECK_THROWS_AS(EntryDistribution::two_radius(-1.5), std::invalid_argument);
}

TEST_CASE("matrices have entries of variance 1/N and are reproducible from the seed") {
    sampling::MatrixEnsembleConfig cfg;
    cfg.N = 64;
    cfg.distribution = EntryDistribution::uniform_phase();
    cfg.seed = 3;
    const auto a = sampling::sample_iid_matrix(cfg), b = sampling::sample_iid_matrix(cfg);
    CHECK(a == b);
    for (cplx v : a.values()) CHECK(std::abs(v) == doctest::Approx(1.0 / 8.0).epsilon(1e-12));
    Rng rng(4);
    const auto g = sampling::sample_ginibre(200, rng);
    CHECK(g.frobenius_norm() * g.frobenius_norm() / 200.0 == doctest::Approx(1.0).epsilon(0.01));
    cfg.N = 0;
    CHECK_THROWS(sampling::validate(cfg));
}

TEST_CASE("the OU flow keeps entry variance 1/N and decays kappa4 as e^{-2t}") {
    // κ₄ of √N·x_ij along the flow from a uniform-phase start, estimated over
    // all N² entries of one matrix
    const std::size_t N = 300;
    for (double t : {0.0, 0.25, 1.0}) {
        CAPTURE(t);
        Rng rng(sampling::derive_seed(21, static_cast<std::uint64_t>(t * 100)));
        auto x = sampling::sample_iid_matrix(N, EntryDistribution::uniform_phase(), rng);
        sampling::evolve_ou_inplace(x, t, rng);
        std::vector<cplx> e;
        for (cplx v : x.values()) e.push_back(v * std::sqrt(static_cast<double>(N)));
        const auto m = moments(e);
        const double expected = sampling::kappa4_at_time(EntryDistribution::uniform_phase(), t);
        CHECK(expected == doctest::Approx(-std::exp(-2.0 * t)));
        CHECK(m.second == doctest::Approx(1.0).epsilon(0.01));
        CHECK(std::abs(m.kappa4 - expected) < 5.0 * m.kappa4_se + 1e-9);
    }
}

TEST_CASE("OU transition composes: two half steps have the law of one full step") {
    // mean of e^{t/2}-projected entry: E[X_t | X_0] = e^{-t/2} X_0
    const std::size_t N = 100;
    Rng rng(22);
    const auto x0 = sampling::sample_ginibre(N, rng);
    const double t = 0.6;
    auto x1 = x0;
    sampling::evolve_ou_inplace(x1, t / 2, rng);
    sampling::evolve_ou_inplace(x1, t / 2, rng);
    // regression coefficient of x1 on x0 is e^{-t/2}, residual variance (1 - e^{-t})/N
    cplx num = 0.0;
    double den = 0.0;
    for (std::size_t k = 0; k < N * N; ++k) {
        num += x1.values()[k] * std::conj(x0.values()[k]);
        den += abs2(x0.values()[k]);
    }
    const cplx beta = num / den;
    CHECK(std::abs(beta - std::exp(-t / 2)) < 0.02);
    double res = 0.0;
    for (std::size_t k = 0; k < N * N; ++k) res += abs2(x1.values()[k] - beta * x0.values()[k]);
    CHECK(res / N == doctest::Approx(1.0 - std::exp(-t)).epsilon(0.03));
}

TEST_CASE("time grids validate and trajectories replay") {
    CHECK_THROWS_AS(sampling::TimeGrid({}), std::invalid_argument);
    CHECK_THROWS_AS(sampling::TimeGrid({-0.1, 0.2}), std::invalid_argument);
    CHECK_THROWS_AS(sampling::TimeGrid({0.2, 0.2}), std::invalid_argument);
    const sampling::TimeGrid grid({0.0, 0.1, 0.5});
    Rng a(31), b(31);
    const auto x0 = sampling::sample_ginibre(20, a);
    (void)sampling::sample_ginibre(20, b);
    const auto ta = sampling::sample_trajectory(x0, grid, a), tb = sampling::sample_trajectory(x0, grid, b);
    REQUIRE(ta.size() == 3);
    CHECK(ta[0] == x0);
    for (std::size_t k = 0; k < 3; ++k) CHECK(ta[k] == tb[k]);
    CHECK(sampling::evolve_ou(x0, 0.3, 5) == sampling::evolve_ou(x0, 0.3, 5));
}
