#include <nhflow/sampling.hpp>

#include <algorithm>
#include <cmath>

namespace nhflow::sampling {

EntryDistribution EntryDistribution::complex_gaussian() { return {EntryKind::ComplexGaussian, 0.0}; }
EntryDistribution EntryDistribution::uniform_phase() { return {EntryKind::UniformPhase, -1.0}; }
EntryDistribution EntryDistribution::four_point() { return {EntryKind::FourPoint, -1.0}; }

EntryDistribution EntryDistribution::two_radius(double kappa4) {
    if (!(kappa4 >= -1.0) || !std::isfinite(kappa4))
        throw std::invalid_argument("two-radius mixture needs kappa4 >= -1");
    EntryDistribution d(EntryKind::TwoRadius, kappa4);
    // |χ|² ∈ {a, b} with mean 1 and variance V = κ₄ + 1
    const double var = kappa4 + 1.0;
    const double p = std::max(0.5, var / (1.0 + var));
    const double a = std::max(0.0, 1.0 - std::sqrt(var * (1.0 - p) / p));
    const double b = 1.0 + std::sqrt(var * p / (1.0 - p));
    d.p_small_ = p;
    d.r_small_ = std::sqrt(a);
    d.r_large_ = std::sqrt(b);
    return d;
}

EntryDistribution EntryDistribution::from_name(const std::string& name, double kappa4) {
    if (name == "complex-gaussian") return complex_gaussian();
    if (name == "uniform-phase" || name == "uniform-modulus-phase") return uniform_phase();
    if (name == "four-point" || name == "symmetric-four-point") return four_point();
    if (name == "two-radius") return two_radius(kappa4);
    throw std::invalid_argument("unknown entry distribution '" + name + "'");
}

std::string EntryDistribution::name() const {
    switch (kind_) {
        case EntryKind::ComplexGaussian: return "complex-gaussian";
        case EntryKind::UniformPhase: return "uniform-phase";
        case EntryKind::FourPoint: return "four-point";
        case EntryKind::TwoRadius: return "two-radius";
    }
    return "unknown";
}

cplx EntryDistribution::draw(Rng& rng) const {
    switch (kind_) {
        case EntryKind::ComplexGaussian: return rng.complex_normal();
        case EntryKind::UniformPhase: return std::polar(1.0, 2.0 * pi * rng.uniform());
        case EntryKind::FourPoint: {
            static constexpr cplx pts[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
            return pts[rng() >> 62];
        }
        case EntryKind::TwoRadius: {
            const double r = rng.uniform() < p_small_ ? r_small_ : r_large_;
            return std::polar(r, 2.0 * pi * rng.uniform());
        }
    }
    return {};
}

void validate(const MatrixEnsembleConfig& cfg) {
    if (cfg.N < 2) throw std::invalid_argument("matrix dimension N must be at least 2");
}

void sample_iid_matrix(std::size_t n, const EntryDistribution& dist, Rng& rng, ComplexMatrix& out) {
    out.resize(n, n);
    const double s = 1.0 / std::sqrt(static_cast<double>(n));
    cplx* p = out.data();
    for (std::size_t k = 0; k < n * n; ++k) p[k] = s * dist.draw(rng);
}

ComplexMatrix sample_iid_matrix(std::size_t n, const EntryDistribution& dist, Rng& rng) {
    ComplexMatrix m;
    sample_iid_matrix(n, dist, rng, m);
    return m;
}

ComplexMatrix sample_iid_matrix(const MatrixEnsembleConfig& cfg) {
    validate(cfg);
    Rng rng(cfg.seed);
    return sample_iid_matrix(cfg.N, cfg.distribution, rng);
}

ComplexMatrix sample_ginibre(std::size_t n, Rng& rng) {
    return sample_iid_matrix(n, EntryDistribution::complex_gaussian(), rng);
}

void evolve_ou_inplace(ComplexMatrix& x, double dt, Rng& rng) {
    if (!(dt >= 0.0)) throw std::invalid_argument("evolve_ou: dt must be nonnegative");
    if (dt == 0.0) return;
    if (!x.square()) throw std::invalid_argument("evolve_ou: matrix must be square");
    const double n = static_cast<double>(x.rows());
    const double a = std::exp(-0.5 * dt);
    const double b = std::sqrt(-std::expm1(-dt) / n);
    cplx* p = x.data();
    for (std::size_t k = 0; k < x.rows() * x.cols(); ++k) p[k] = a * p[k] + b * rng.complex_normal();
}

ComplexMatrix evolve_ou(const ComplexMatrix& x, double dt, std::uint64_t noise_seed) {
    ComplexMatrix y = x;
    Rng rng(noise_seed);
    evolve_ou_inplace(y, dt, rng);
    return y;
}

double kappa4_at_time(const EntryDistribution& dist, double t) {
    if (!(t >= 0.0)) throw std::invalid_argument("kappa4_at_time: t must be nonnegative");
    return std::exp(-2.0 * t) * dist.fourth_cumulant();
}

TimeGrid::TimeGrid(std::vector<double> times) : times_(std::move(times)) {
    if (times_.empty()) throw std::invalid_argument("time grid is empty");
    if (!(times_.front() >= 0.0)) throw std::invalid_argument("time grid must start at t >= 0");
    for (std::size_t i = 1; i < times_.size(); ++i)
        if (!(times_[i] > times_[i - 1])) throw std::invalid_argument("time grid must be strictly increasing");
}

std::vector<ComplexMatrix> sample_trajectory(const ComplexMatrix& x0, const TimeGrid& grid, Rng& rng) {
    std::vector<ComplexMatrix> out;
    out.reserve(grid.size());
    ComplexMatrix cur = x0;
    double t = 0.0;
    for (double ti : grid.times()) {
        evolve_ou_inplace(cur, ti - t, rng);
        t = ti;
        out.push_back(cur);
    }
    return out;
}

}  // namespace nhflow::sampling
