#pragma once

#include <nhflow/common.hpp>
#include <nhflow/linalg.hpp>

#include <array>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

namespace nhflow::sampling {

using linalg::ComplexMatrix;

std::uint64_t splitmix64(std::uint64_t& state);

// Stateless mix of (base seed, index) used to derive independent streams.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

// xoshiro256++; satisfies UniformRandomBitGenerator.
class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed = 1);

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
    result_type operator()();

    // Independent child stream, e.g. one per replica.
    Rng stream(std::uint64_t index) const { return Rng(derive_seed(seed_, index)); }

    double uniform();  // [0, 1)
    double normal();   // N(0, 1)
    cplx complex_normal();  // E|g|^2 = 1, Eg^2 = 0

private:
    std::array<std::uint64_t, 4> s_{};
    std::uint64_t seed_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

enum class EntryKind { ComplexGaussian, UniformPhase, FourPoint, TwoRadius };

class EntryDistribution {
public:
    static EntryDistribution complex_gaussian();
    static EntryDistribution uniform_phase();
    static EntryDistribution four_point();
    // |χ|² takes two values with mean 1; uniform phase. Any κ₄ ≥ -1.
    static EntryDistribution two_radius(double kappa4);
    static EntryDistribution from_name(const std::string& name, double kappa4 = 0.0);

    EntryKind kind() const noexcept { return kind_; }
    std::string name() const;
    double fourth_cumulant() const noexcept { return kappa4_; }

    cplx draw(Rng& rng) const;

private:
    EntryDistribution(EntryKind kind, double kappa4) : kind_(kind), kappa4_(kappa4) {}

    EntryKind kind_;
    double kappa4_;
    // two-radius parameters: |χ|² = r2_small with probability p_small, else r2_large
    double p_small_ = 1.0;
    double r_small_ = 1.0;
    double r_large_ = 1.0;
};

struct MatrixEnsembleConfig {
    std::size_t N = 2;
    EntryDistribution distribution = EntryDistribution::complex_gaussian();
    std::uint64_t seed = 0;
};

void validate(const MatrixEnsembleConfig& cfg);

ComplexMatrix sample_iid_matrix(const MatrixEnsembleConfig& cfg);
ComplexMatrix sample_iid_matrix(std::size_t n, const EntryDistribution& dist, Rng& rng);
void sample_iid_matrix(std::size_t n, const EntryDistribution& dist, Rng& rng, ComplexMatrix& out);
ComplexMatrix sample_ginibre(std::size_t n, Rng& rng);

// Exact OU transition: e^{-dt/2} X + sqrt(1 - e^{-dt}) G with G Ginibre.
ComplexMatrix evolve_ou(const ComplexMatrix& x, double dt, std::uint64_t noise_seed);
void evolve_ou_inplace(ComplexMatrix& x, double dt, Rng& rng);

double kappa4_at_time(const EntryDistribution& dist, double t);

class TimeGrid {
public:
    explicit TimeGrid(std::vector<double> times);
    const std::vector<double>& times() const noexcept { return times_; }
    std::size_t size() const noexcept { return times_.size(); }
    double operator[](std::size_t i) const { return times_[i]; }

private:
    std::vector<double> times_;
};

// Matrix states at every grid time under one noise realization; X0 is the
// state at time 0 (the grid may start later).
std::vector<ComplexMatrix> sample_trajectory(const ComplexMatrix& x0, const TimeGrid& grid, Rng& rng);

}  // namespace nhflow::sampling
