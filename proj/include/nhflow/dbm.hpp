#pragma once

#include <nhflow/common.hpp>
#include <nhflow/linalg.hpp>
#include <nhflow/sampling.hpp>
#include <nhflow/theory.hpp>

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace nhflow::dbm {

// Positive-index particles 0 < x_1 < ... < x_N; the mirror x_{-i} = -x_i is implied.
struct ParticleConfiguration {
    std::vector<double> x;

    std::size_t size() const noexcept { return x.size(); }
    // Throws std::invalid_argument unless strictly ordered and positive.
    void validate() const;
    // All 2N particles, ascending.
    std::vector<double> full() const;
};

enum class DriverKind { Independent, SharedBlock, OverlapInduced };

// Per-index driver correlations. For a coupled pair (b^s, b^r):
//   b_i^r = ρ_i b_i^s + √(1-ρ_i²) w_i,  d<b_i^s - b_i^r>/dt = 2·rate·(1-ρ_i).
// SharedBlock uses ρ_i = √(1-ε²) for i ≤ K and ρ_i = 0 beyond; OverlapInduced takes
// ρ_i from the caller (e.g. eigenvector overlaps of two Hermitizations).
struct DriverSpec {
    DriverKind kind = DriverKind::Independent;
    std::size_t K = 0;
    double epsilon = 1.0;
    double rate = 1.0;  // d<b_i>/dt, at most 1
    std::vector<double> correlation;

    void validate(std::size_t N) const;
    double rho(std::size_t i) const;  // 0-based positive index
    double bracket_rate(std::size_t i) const { return 2.0 * rate * (1.0 - rho(i)); }
};

struct CoupledDrivers {
    DriverSpec spec;
    std::size_t N = 0;
    std::uint64_t seed = 0;

    // Increments (db^s, db^r) for `steps` steps of size dt, row-major by step.
    void sample(std::size_t steps, double dt, std::vector<double>& bs, std::vector<double>& br) const;
};

// b^r_i = √(1-ε_i²) b^s_i + ε_i w_i with ε_i = ε for i ≤ K and 1 beyond.
CoupledDrivers make_coupled_drivers(std::size_t N, std::size_t K, double epsilon, std::uint64_t seed);

struct DBMSimConfig {
    double dt = 1e-4;
    double T = 1.0;
    double guard_fraction = 0.4;  // cap on drift displacement relative to the smaller neighbour gap
    int max_retries = 20;         // bridge halvings per step
    std::uint64_t seed = 1;
    std::vector<double> snapshot_times;  // empty: final time only

    void validate() const;
};

struct Trajectory {
    std::vector<double> times;
    std::vector<ParticleConfiguration> snapshots;
    std::size_t steps = 0;
    std::size_t halvings = 0;
};

// Drift of particle i: (1/2N)[Σ_{j≠i}(1/(x_i-x_j) + 1/(x_i+x_j)) + 1/(2x_i)].
void dbm_drift(std::span<const double> x, std::span<double> out);

Trajectory simulate_dbm(const ParticleConfiguration& init, const DriverSpec& driver, const DBMSimConfig& cfg);

struct CoupledTrajectory {
    std::vector<double> times;
    std::vector<ParticleConfiguration> s, r;
    std::size_t steps = 0;
    std::size_t halvings = 0;
};

// Two systems stepped together on correlated drivers; a failed step is split for both.
CoupledTrajectory simulate_coupled(const ParticleConfiguration& init_s, const ParticleConfiguration& init_r,
                                   const DriverSpec& driver, const DBMSimConfig& cfg);

// ---- initial data ----

struct RegularInitialData {
    ParticleConfiguration particles;
    theory::StieltjesProvider reference;
    double nu = 0.05;
    double G = 1.0;
};

// Positive half of the 2N symmetric quantiles γ_k, F(γ_k) = (k - 1/2)/(2N).
// The density must be even and supported in [-L, L].
ParticleConfiguration symmetric_quantiles(const std::function<double(double)>& density, double L, std::size_t N);
RegularInitialData quantile_data(const theory::StieltjesProvider& reference, std::size_t N);
// Singular values of X - z for a sampled i.i.d. matrix.
RegularInitialData hermitization_data(const sampling::EntryDistribution& dist, cplx z, std::size_t N,
                                      std::uint64_t seed);
// Quantiles dilated by (1 + amplitude/√N): still regular, but off by O(N^{-1/2}).
RegularInitialData perturbed_quantile_data(const theory::StieltjesProvider& reference, std::size_t N,
                                           double amplitude);

// ---- observables along the flow ----

// Σ_{1≤|i|≤N} v_i/(x_i - z) with v_{-i} = -v_i.
cplx observable_f(std::span<const double> v, const ParticleConfiguration& x, cplx z);
// (1/2N) Σ_{|i|≤N} 1/(x_i - z)
cplx empirical_stieltjes(const ParticleConfiguration& x, cplx w);

// Frozen tangential operator (Bv)_i = Σ_{j≠i} c_ij (v_j - v_i), c_ij = 1/(2N(x_i-x_j)²),
// over all 2N indices ordered as in ParticleConfiguration::full().
std::vector<double> tangential_operator(const ParticleConfiguration& x);  // 2N×2N row-major
void apply_tangential(std::span<const double> full_x, std::span<const double> v, std::span<double> out);

struct PropagatorReport {
    std::vector<double> U;  // 2N×2N row-major
    std::size_t dim = 0;
    double min_entry = 0.0;
    double max_row_sum_error = 0.0;
    bool sign_preserved = false;
    bool mass_preserved = false;
    bool monotone_preserved = false;
    std::size_t rk4_steps = 0;
    bool ok() const { return sign_preserved && mass_preserved && monotone_preserved; }
};

// Propagator of dv/dt = Bv over [0, t], by RK4 from basis vectors; retries with a smaller
// step when a property fails (up to 6 times).
PropagatorReport propagator_properties(const ParticleConfiguration& x, double t, std::uint64_t seed = 1);

// One recorded Euler step of the (x, v) system.
struct StepRecord {
    ParticleConfiguration x0, x1;
    std::vector<double> v0, v1;  // positive indices, antisymmetric extension implied
    std::vector<double> dB;      // driver increments for positive indices
    double dt = 0.0;
};

StepRecord record_step(const ParticleConfiguration& x, std::span<const double> v, std::span<const double> dB,
                       double dt);
// |Δf - [m ∂_z f dt + (1/2N)Σ v_k(ΔB_k² - dt)/(x_k - z)³ - (1/√(2N))Σ v_k ΔB_k/(z - x_k)²]|
double advection_residual(const StepRecord& step, cplx z);

struct AdvectionScaling {
    std::vector<double> dts;
    std::vector<double> mean_residual;
    double exponent = 0.0;
};
// Mean one-step residual over `samples` draws at each dt, fitted on a log-log scale.
AdvectionScaling advection_scaling(std::size_t N, cplx z, std::span<const double> dts, std::size_t samples,
                                   double noise_rate, std::uint64_t seed);

// ---- local law ----

struct LocalLawReport {
    double max_ratio = 0.0;
    cplx worst_point;
    std::size_t points = 0;
    std::size_t violations = 0;
    bool ok() const { return violations == 0; }
};

// Lattice Re w ∈ [-G/2, G/2], Im w log-spaced from φ⁴N^{-1+ν} to G/2, restricted to |w| ≤ G/2.
std::vector<cplx> local_law_lattice(std::size_t N, double nu, double G, std::size_t n_re = 21, std::size_t n_im = 12);
// max |m_emp(w) - m̃(w)| / (φ √(Im m̃(w)/(N Im w))) with φ = N^ν.
LocalLawReport local_law_check(const ParticleConfiguration& x, const theory::StieltjesProvider& reference,
                               std::span<const cplx> lattice, double nu);

// ---- experiments ----

struct GapRow {
    std::size_t i = 0;  // 1-based
    double t = 0.0;
    double median = 0.0;
    double mean = 0.0;
    double q90 = 0.0;
};

struct GapTable {
    std::vector<GapRow> rows;  // values are N·|s_i(t) - r_i(t)|
    std::size_t replicas = 0;
    const GapRow& at(std::size_t i, double t) const;
};

GapTable coupling_gap_experiment(const ParticleConfiguration& init, const DriverSpec& driver,
                                 std::span<const double> t_grid, std::size_t i_max, std::size_t replicas,
                                 const DBMSimConfig& cfg, std::size_t threads = 1);

struct RelaxationRow {
    std::size_t i = 0;
    double t = 0.0;
    double median_gap = 0.0;  // |ρ̃_t(0)s_i - ρ̃'_t(0)s'_i|
    double envelope = 0.0;    // (i/N)(1/√(Nt) + max(i/N, t))
    double exceed_fraction = 0.0;  // replicas with gap > envelope·N^{0.1}
};

struct RelaxationReport {
    std::vector<RelaxationRow> rows;
    double cell_exceed_fraction = 0.0;  // cells whose median exceeds envelope·N^{0.1}
    double slope = 0.0;                 // log-log slope of median gap vs t for i = 1
    std::size_t replicas = 0;
};

RelaxationReport relaxation_experiment(const RegularInitialData& init1, const RegularInitialData& init2,
                                       std::span<const double> t_grid, std::span<const std::size_t> indices,
                                       std::size_t replicas, const DBMSimConfig& cfg, double slope_t_max = 0.0,
                                       std::size_t threads = 1);

struct RouteComparison {
    std::vector<double> sde, matrix;  // smallest particle / singular value at time t
    double ks = 0.0;
};

// X_0 = √(1-t)·Ginibre; matrix route X_t = X_0 + √t·Ginibre against simulate_dbm from the
// singular values of X_0 with independent Brownian drivers.
RouteComparison sde_vs_matrix_route(std::size_t N, double t, std::size_t replicas, const DBMSimConfig& cfg,
                                    std::size_t threads = 1);

struct HardEdgeReport {
    std::vector<cplx> z;
    std::vector<double> ks;      // per z: flow vs Ginibre, density-rescaled smallest singular value
    double max_ks = 0.0;
    double correlation = 0.0;    // corr(λ_1^{z_1}, λ_1^{z_2}) along the flow
    std::size_t replicas = 0;
    std::size_t failures = 0;
};

// Flow X_t = √(1-t)X + √t·G for i.i.d. X with the given entries against Ginibre.
HardEdgeReport hard_edge_universality_experiment(const sampling::EntryDistribution& dist, std::span<const cplx> z,
                                                 std::size_t N, double t, std::size_t replicas, std::uint64_t seed,
                                                 std::size_t threads = 1);

// ---- small statistics shared by the experiments ----

double ks_two_sample(std::vector<double> a, std::vector<double> b);
double quantile(std::vector<double> v, double q);
// Least-squares slope of log y against log x.
double loglog_slope(std::span<const double> x, std::span<const double> y);

void write_snapshot_csv(std::ostream& os, std::uint64_t replica, const Trajectory& traj);
void write_gap_csv(std::ostream& os, const GapTable& table);

}  // namespace nhflow::dbm
