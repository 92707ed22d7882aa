#include <nhflow/dbm.hpp>

#include <algorithm>
#include <cmath>

namespace nhflow::dbm {
namespace {

std::vector<double> antisymmetric_full(std::span<const double> v) {
    const std::size_t n = v.size();
    std::vector<double> out(2 * n);
    for (std::size_t i = 0; i < n; ++i) {
        out[n + i] = v[i];
        out[n - 1 - i] = -v[i];
    }
    return out;
}

}  // namespace

cplx observable_f(std::span<const double> v, const ParticleConfiguration& x, cplx z) {
    if (v.size() != x.size()) throw std::invalid_argument("observable_f: weights and particles differ in size");
    if (z.imag() == 0.0) throw std::invalid_argument("observable_f: Im z must be nonzero");
    cplx s = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) s += v[i] / (x.x[i] - z) - v[i] / (-x.x[i] - z);
    return s;
}

cplx empirical_stieltjes(const ParticleConfiguration& x, cplx w) {
    cplx s = 0.0;
    for (double xi : x.x) s += 1.0 / (xi - w) + 1.0 / (-xi - w);
    return s / (2.0 * static_cast<double>(x.size()));
}

void apply_tangential(std::span<const double> full_x, std::span<const double> v, std::span<double> out) {
    const std::size_t m = full_x.size();
    const double c0 = 1.0 / static_cast<double>(m);  // 1/(2N)
    for (std::size_t i = 0; i < m; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            if (j == i) continue;
            const double d = full_x[i] - full_x[j];
            acc += c0 / (d * d) * (v[j] - v[i]);
        }
        out[i] = acc;
    }
}

std::vector<double> tangential_operator(const ParticleConfiguration& x) {
    x.validate();
    const auto fx = x.full();
    const std::size_t m = fx.size();
    const double c0 = 1.0 / static_cast<double>(m);
    std::vector<double> B(m * m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        double diag = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            if (j == i) continue;
            const double d = fx[i] - fx[j];
            const double c = c0 / (d * d);
            B[i * m + j] = c;
            diag -= c;
        }
        B[i * m + i] = diag;
    }
    return B;
}

namespace {

void matmul(const std::vector<double>& a, const std::vector<double>& b, std::vector<double>& out, std::size_t m) {
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t k = 0; k < m; ++k) {
            const double aik = a[i * m + k];
            if (aik == 0.0) continue;
            for (std::size_t j = 0; j < m; ++j) out[i * m + j] += aik * b[k * m + j];
        }
}

std::vector<double> rk4_propagator(const std::vector<double>& B, std::size_t m, double t, std::size_t steps) {
    std::vector<double> U(m * m, 0.0), k1(m * m), k2(m * m), k3(m * m), k4(m * m), tmp(m * m);
    for (std::size_t i = 0; i < m; ++i) U[i * m + i] = 1.0;
    if (t == 0.0) return U;
    const double h = t / static_cast<double>(steps);
    for (std::size_t s = 0; s < steps; ++s) {
        matmul(B, U, k1, m);
        for (std::size_t q = 0; q < m * m; ++q) tmp[q] = U[q] + 0.5 * h * k1[q];
        matmul(B, tmp, k2, m);
        for (std::size_t q = 0; q < m * m; ++q) tmp[q] = U[q] + 0.5 * h * k2[q];
        matmul(B, tmp, k3, m);
        for (std::size_t q = 0; q < m * m; ++q) tmp[q] = U[q] + h * k3[q];
        matmul(B, tmp, k4, m);
        for (std::size_t q = 0; q < m * m; ++q) U[q] += h / 6.0 * (k1[q] + 2.0 * k2[q] + 2.0 * k3[q] + k4[q]);
    }
    return U;
}

bool is_monotone(const std::vector<double>& v, double tol) {
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] < v[i - 1] - tol) return false;
    return true;
}

}  // namespace

PropagatorReport propagator_properties(const ParticleConfiguration& x, double t, std::uint64_t seed) {
    if (!(t >= 0.0)) throw std::invalid_argument("propagator_properties: t must be nonnegative");
    const auto B = tangential_operator(x);
    const std::size_t m = 2 * x.size();
    double gersh = 0.0;
    for (std::size_t i = 0; i < m; ++i) gersh = std::max(gersh, -2.0 * B[i * m + i]);
    // h·|λ| ≤ 1/2 on the Gershgorin bound
    std::size_t steps = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(2.0 * t * gersh)));

    sampling::Rng rng(seed);
    std::vector<std::vector<double>> tests;
    for (int k = 0; k < 8; ++k) {
        // antisymmetric, nonnegative on positive indices, monotone
        std::vector<double> pos(x.size());
        for (auto& p : pos) p = rng.uniform();
        std::sort(pos.begin(), pos.end());
        tests.push_back(antisymmetric_full(pos));
        // general monotone
        std::vector<double> gen(m);
        for (auto& g : gen) g = rng.normal();
        std::sort(gen.begin(), gen.end());
        tests.push_back(gen);
    }

    PropagatorReport rep;
    rep.dim = m;
    for (int attempt = 0; attempt <= 6; ++attempt, steps *= 2) {
        rep.U = rk4_propagator(B, m, t, steps);
        rep.rk4_steps = steps;
        rep.min_entry = *std::min_element(rep.U.begin(), rep.U.end());
        rep.max_row_sum_error = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < m; ++j) s += rep.U[i * m + j];
            rep.max_row_sum_error = std::max(rep.max_row_sum_error, std::abs(s - 1.0));
        }
        rep.sign_preserved = rep.min_entry >= -1e-10;
        rep.mass_preserved = rep.max_row_sum_error <= 1e-8;
        rep.monotone_preserved = true;
        std::vector<double> out(m);
        for (std::size_t k = 0; k < tests.size(); ++k) {
            const auto& v = tests[k];
            for (std::size_t i = 0; i < m; ++i) {
                double s = 0.0;
                for (std::size_t j = 0; j < m; ++j) s += rep.U[i * m + j] * v[j];
                out[i] = s;
            }
            if (!is_monotone(out, 1e-10)) rep.monotone_preserved = false;
            if (k % 2 == 0)
                for (std::size_t i = m / 2; i < m; ++i)
                    if (out[i] < -1e-10) rep.sign_preserved = false;
        }
        if (rep.ok()) break;
    }
    return rep;
}

StepRecord record_step(const ParticleConfiguration& x, std::span<const double> v, std::span<const double> dB,
                       double dt) {
    x.validate();
    const std::size_t n = x.size();
    if (v.size() != n || dB.size() != n) throw std::invalid_argument("record_step: size mismatch");
    if (!(dt > 0.0)) throw std::invalid_argument("record_step: dt must be positive");
    StepRecord rec;
    rec.x0 = x;
    rec.v0.assign(v.begin(), v.end());
    rec.dB.assign(dB.begin(), dB.end());
    rec.dt = dt;
    std::vector<double> drift(n);
    dbm_drift(x.x, drift);
    const double sc = 1.0 / std::sqrt(2.0 * static_cast<double>(n));
    rec.x1.x.resize(n);
    for (std::size_t i = 0; i < n; ++i) rec.x1.x[i] = x.x[i] + drift[i] * dt + sc * dB[i];
    rec.x1.validate();
    const auto fx = x.full();
    const auto fv = antisymmetric_full(v);
    std::vector<double> bv(2 * n);
    apply_tangential(fx, fv, bv);
    rec.v1.resize(n);
    for (std::size_t i = 0; i < n; ++i) rec.v1[i] = v[i] + bv[n + i] * dt;
    return rec;
}

double advection_residual(const StepRecord& step, cplx z) {
    if (z.imag() == 0.0) throw std::invalid_argument("advection_residual: Im z must be nonzero");
    const std::size_t n = step.x0.size();
    const auto fx = step.x0.full();
    const auto fv = antisymmetric_full(step.v0);
    const auto fb = antisymmetric_full(step.dB);
    const double two_n = 2.0 * static_cast<double>(n);
    cplx m = 0.0, dzf = 0.0, bracket = 0.0, mart = 0.0;
    for (std::size_t k = 0; k < 2 * n; ++k) {
        const cplx r = 1.0 / (fx[k] - z);
        m += r;
        dzf += fv[k] * r * r;
        bracket += fv[k] * (fb[k] * fb[k] - step.dt) * r * r * r;
        mart += fv[k] * fb[k] * r * r;  // 1/(z - x)² = 1/(x - z)²
    }
    m /= two_n;
    const cplx predicted = m * dzf * step.dt + bracket / two_n - mart / std::sqrt(two_n);
    const cplx df = observable_f(step.v1, step.x1, z) - observable_f(step.v0, step.x0, z);
    return std::abs(df - predicted);
}

AdvectionScaling advection_scaling(std::size_t N, cplx z, std::span<const double> dts, std::size_t samples,
                                   double noise_rate, std::uint64_t seed) {
    if (N == 0 || samples == 0 || dts.size() < 2) throw std::invalid_argument("advection_scaling: bad arguments");
    const auto init = quantile_data(theory::StieltjesProvider::semicircle(1.0), N).particles;
    std::vector<double> v(N);
    for (std::size_t i = 0; i < N; ++i) v[i] = (i + 1.0) / static_cast<double>(N);
    AdvectionScaling out;
    sampling::Rng rng(seed);
    std::vector<double> dB(N);
    for (double dt : dts) {
        double acc = 0.0;
        for (std::size_t s = 0; s < samples; ++s) {
            const double sd = std::sqrt(noise_rate * dt);
            for (auto& b : dB) b = sd * rng.normal();
            acc += advection_residual(record_step(init, v, dB, dt), z);
        }
        out.dts.push_back(dt);
        out.mean_residual.push_back(acc / static_cast<double>(samples));
    }
    out.exponent = loglog_slope(out.dts, out.mean_residual);
    return out;
}

}  // namespace nhflow::dbm
