#pragma once

#include <nhflow/kernels.hpp>
#include <nhflow/linalg.hpp>

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace nhflow::observables {

using kernels::TestFunction;
using linalg::ComplexMatrix;
using linalg::SpectralDecomposition;

struct LinearStatistic {
    std::string function_id;
    double time = 0.0;
    double raw_value = 0.0;  // Σ f(σ_i), uncentered
};

// Throws when the decomposition carries residuals above 1e-8 (relative).
LinearStatistic linear_statistic(const SpectralDecomposition& spec, const TestFunction& f, double time = 0.0);
double linear_sum(std::span<const cplx> eigenvalues, const TestFunction& f);

// log|det(X - z)| at every point; singular points come back flagged.
std::vector<linalg::LogAbsDet> logdet_field(const ComplexMatrix& x, std::span<const cplx> points);

struct OverlapRecord {
    std::size_t index = 0;
    cplx eigenvalue;
    double overlap = 1.0;  // ||R_i||² ||L_i||² with L_i^T R_i = 1
};

struct OverlapResult {
    std::vector<OverlapRecord> records;
    std::size_t excluded = 0;  // defective pairs left out
};

OverlapResult diagonal_overlaps(const SpectralDecomposition& spec);

// Per-sample Girko decomposition of Σ f(σ_i). With F(η) = Σ_i log(λ_i(z)² + η²) over
// the singular values of X - z:
//   J_T      = (1/4π)∫ Δf F(T)
//   I_a^b    = -(1/4π)∫ Δf [F(b) - F(a)]
// The η-integrals of Tr G are exact; only the z-integral is numerical.
struct GirkoSplit {
    double J_T = 0.0;
    double I_small = 0.0;  // [0, η₀]
    double I_micro = 0.0;  // [η₀, η_c]
    double I_meso = 0.0;   // [η_c, T]
    double eta0 = 0.0, eta_c = 0.0, T = 0.0;
    std::size_t singular_points = 0;  // z-nodes where some λ_i = 0 exactly (skipped)

    double total() const { return J_T + I_small + I_micro + I_meso; }
};

GirkoSplit girko_decompose(const ComplexMatrix& x, const TestFunction& f, double eta0, double eta_c, double T,
                           const kernels::QuadratureGrid& grid = {});
// Same, on caller-supplied z-nodes (weights include the area element).
GirkoSplit girko_decompose(const ComplexMatrix& x, const TestFunction& f, double eta0, double eta_c, double T,
                           std::span<const kernels::Node> nodes);

// f_{v,a}(z) = f(N^a (z - v))
TestFunction rescale_function(const TestFunction& f, cplx v, double a, std::size_t N);

struct ObservableRow {
    std::uint64_t replica = 0;
    double time = 0.0;
    std::string function_id;
    double value = 0.0;
};

void write_csv_header(std::ostream& os);
void write_csv_row(std::ostream& os, const ObservableRow& row);

}  // namespace nhflow::observables
