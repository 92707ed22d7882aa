#include <nhflow/dbm.hpp>

#include "../support/generators.hpp"

#include <doctest.h>

#include <cmath>

using namespace nhflow;
using dbm::DriverKind;
using dbm::DriverSpec;
using dbm::ParticleConfiguration;

namespace {

ParticleConfiguration random_configuration(sampling::Rng& rng, std::size_t n) {
    ParticleConfiguration c;
    double x = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        x += gen::uniform(rng, 0.05, 1.0) / static_cast<double>(n);
        c.x.push_back(x);
    }
    return c;
}

}  // namespace

TEST_CASE("configurations validate ordering and mirror correctly") {
    ParticleConfiguration c{{0.1, 0.4, 0.9}};
    CHECK_NOTHROW(c.validate());
    CHECK(c.full() == std::vector<double>{-0.9, -0.4, -0.1, 0.1, 0.4, 0.9});
    CHECK_THROWS_AS((ParticleConfiguration{{0.1, 0.1}}).validate(), std::invalid_argument);
    CHECK_THROWS_AS((ParticleConfiguration{{-0.1, 0.2}}).validate(), std::invalid_argument);
    CHECK_THROWS_AS((ParticleConfiguration{{0.5, 0.2}}).validate(), std::invalid_argument);
}

TEST_CASE("drift equals the pair sum over the mirrored system") {
    gen::for_all(20, 501, [](auto& rng) {
        const std::size_t n = gen::size_in(rng, 1, 40);
        const auto c = random_configuration(rng, n);
        std::vector<double> drift(n);
        dbm::dbm_drift(c.x, drift);
        // (1/2N) Σ_{j ≠ i over all 2N} 1/(x_i - x_j) on the full configuration
        const auto full = c.full();
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (double y : full)
                if (y != c.x[i]) s += 1.0 / (c.x[i] - y);
            CHECK(drift[i] == doctest::Approx(s / (2.0 * n)).epsilon(1e-11));
        }
    });
}

TEST_CASE("driver correlations and validation") {
    DriverSpec d;
    d.kind = DriverKind::SharedBlock;
    d.K = 3;
    d.epsilon = 0.6;
    CHECK(d.rho(0) == doctest::Approx(0.8));
    CHECK(d.rho(2) == doctest::Approx(0.8));
    CHECK(d.rho(3) == 0.0);
    CHECK(d.bracket_rate(0) == doctest::Approx(0.4));
    CHECK_NOTHROW(d.validate(10));
    d.rate = 1.5;
    CHECK_THROWS(d.validate(10));
    DriverSpec o;
    o.kind = DriverKind::OverlapInduced;
    o.correlation = {0.5, 0.2};
    CHECK_THROWS(o.validate(3));
    CHECK(DriverSpec{}.rho(0) == 0.0);
}

TEST_CASE("coupled driver increments have the stated covariance") {
    const std::size_t N = 4, steps = 40000;
    const double dt = 1e-3;
    const auto drivers = dbm::make_coupled_drivers(N, 2, 0.6, 17);
    std::vector<double> bs, br;
    drivers.sample(steps, dt, bs, br);
    REQUIRE(bs.size() == steps * N);
    for (std::size_t i = 0; i < N; ++i) {
        double ss = 0.0, rr = 0.0, sr = 0.0;
        for (std::size_t k = 0; k < steps; ++k) {
            ss += bs[k * N + i] * bs[k * N + i];
            rr += br[k * N + i] * br[k * N + i];
            sr += bs[k * N + i] * br[k * N + i];
        }
        CAPTURE(i);
        CHECK(ss / (steps * dt) == doctest::Approx(1.0).epsilon(0.03));
        CHECK(rr / (steps * dt) == doctest::Approx(1.0).epsilon(0.03));
        CHECK(std::abs(sr / std::sqrt(ss * rr) - (i < 2 ? 0.8 : 0.0)) < 0.02);
    }
}

TEST_CASE("simulation keeps the ordering and replays from the seed") {
    sampling::Rng rng(502);
    const auto init = random_configuration(rng, 20);
    dbm::DBMSimConfig cfg;
    cfg.dt = 1e-4;
    cfg.T = 0.01;
    cfg.seed = 9;
    cfg.snapshot_times = {0.005, 0.01};
    const auto a = dbm::simulate_dbm(init, DriverSpec{}, cfg);
    const auto b = dbm::simulate_dbm(init, DriverSpec{}, cfg);
    REQUIRE(a.snapshots.size() == 2);
    for (std::size_t k = 0; k < 2; ++k) {
        CHECK_NOTHROW(a.snapshots[k].validate());
        CHECK(a.snapshots[k].x == b.snapshots[k].x);
    }
    cfg.dt = -1.0;
    CHECK_THROWS(cfg.validate());
}

TEST_CASE("tangential operator annihilates constants and its propagator is a Markov kernel") {
    sampling::Rng rng(503);
    const auto c = random_configuration(rng, 8);
    const auto B = dbm::tangential_operator(c);
    const std::size_t d = 16;
    REQUIRE(B.size() == d * d);
    for (std::size_t i = 0; i < d; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            row += B[i * d + j];
            if (i != j) CHECK(B[i * d + j] > 0.0);
        }
        CHECK(std::abs(row) < 1e-9 * std::abs(B[i * d + i]));
    }
    const auto full = c.full();
    std::vector<double> v(d), out(d);
    for (std::size_t i = 0; i < d; ++i) v[i] = rng.normal();
    dbm::apply_tangential(full, v, out);
    for (std::size_t i = 0; i < d; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < d; ++j) s += B[i * d + j] * v[j];
        CHECK(out[i] == doctest::Approx(s).epsilon(1e-10).scale(1.0));
    }
    const auto rep = dbm::propagator_properties(c, 0.01);
    CHECK(rep.ok());
    CHECK(rep.min_entry >= 0.0);
}

TEST_CASE("observable f and the empirical Stieltjes transform") {
    const ParticleConfiguration c{{0.2, 0.7}};
    const cplx w(0.1, 0.3);
    const cplx m = (1.0 / (-0.7 - w) + 1.0 / (-0.2 - w) + 1.0 / (0.2 - w) + 1.0 / (0.7 - w)) / 4.0;
    CHECK(std::abs(dbm::empirical_stieltjes(c, w) - m) < 1e-15);
    const std::vector<double> v{1.0, -2.0};
    const cplx f = 1.0 / (0.2 - w) - 2.0 / (0.7 - w) - 1.0 / (-0.2 - w) + 2.0 / (-0.7 - w);
    CHECK(std::abs(dbm::observable_f(v, c, w) - f) < 1e-14);
}

TEST_CASE("two-sample KS, quantiles and log-log slopes") {
    CHECK(dbm::ks_two_sample({1, 2, 3}, {3, 1, 2}) == 0.0);
    CHECK(dbm::ks_two_sample({1, 2, 3}, {4, 5}) == 1.0);
    CHECK(dbm::ks_two_sample({1, 2, 3}, {1.5, 2.5, 3.5}) == doctest::Approx(1.0 / 3.0));
    CHECK_THROWS(dbm::ks_two_sample({}, {1.0}));
    CHECK(dbm::quantile({4, 1, 3, 2}, 0.5) == 2.5);
    CHECK(dbm::quantile({4, 1, 3, 2}, 0.0) == 1.0);
    CHECK(dbm::quantile({4, 1, 3, 2}, 1.0) == 4.0);
    CHECK_THROWS(dbm::quantile({1.0}, 1.5));
    std::vector<double> x, y;
    for (double t : {0.01, 0.03, 0.1, 0.5}) {
        x.push_back(t);
        y.push_back(3.0 * std::pow(t, -0.7));
    }
    CHECK(dbm::loglog_slope(x, y) == doctest::Approx(-0.7).epsilon(1e-12));
}

TEST_CASE("symmetric quantiles of a uniform density") {
    // density 1/2 on [-1, 1]: γ_i = (i - 1/2)/N for the positive half
    const auto q = dbm::symmetric_quantiles([](double x) { return std::abs(x) <= 1.0 ? 0.5 : 0.0; }, 1.0, 10);
    for (std::size_t i = 0; i < 10; ++i) CHECK(q.x[i] == doctest::Approx((i + 0.5) / 10.0).epsilon(1e-9));
}

TEST_CASE("local law holds on quantiles and fails on a dilated configuration") {
    const std::size_t N = 256;
    const double nu = 0.05;
    const auto ref = theory::StieltjesProvider::semicircle(1.0);
    const auto lattice = dbm::local_law_lattice(N, nu, 1.0);
    CHECK(!lattice.empty());
    for (const cplx& w : lattice) CHECK(std::abs(w) <= 0.5 + 1e-12);
    const auto good = dbm::quantile_data(ref, N);
    CHECK(dbm::local_law_check(good.particles, ref, lattice, nu).ok());
    const auto bad = dbm::perturbed_quantile_data(ref, N, 40.0);
    const auto rep = dbm::local_law_check(bad.particles, ref, lattice, nu);
    CHECK_FALSE(rep.ok());
    CHECK(rep.max_ratio > 1.0);
    // quantiles of the Hermitized law need its full support, which reaches past 1 + |z|
    for (double z : {0.0, 0.3, 0.7}) {
        CAPTURE(z);
        const auto h = theory::StieltjesProvider::hermitized(z);
        const auto q = dbm::quantile_data(h, N);
        CHECK(q.particles.x.back() > 1.0 + z);
        CHECK(dbm::local_law_check(q.particles, h, lattice, nu).ok());
    }
}
