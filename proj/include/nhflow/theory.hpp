#pragma once

#include <nhflow/common.hpp>

#include <array>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace nhflow::theory {

// Solution of -1/m = w + m - |z|²/(w + m) on the branch Im m > 0.
struct SelfConsistentPoint {
    cplx z;
    double eta = 0.0;
    cplx m;
    cplx u;  // m / (iη + m)
    double residual = 0.0;  // rational-form residual relative to its largest term
};

SelfConsistentPoint solve_mz(cplx z, double eta);

// Same equation at a general spectral parameter w (Im w > 0): the Stieltjes
// transform of the symmetrized singular-value law of X - z.
cplx hermitized_stieltjes(cplx z, cplx w);
cplx hermitized_stieltjes_derivative(cplx z, cplx w, cplx m);
double relative_cubic_residual(cplx z, cplx w, cplx m);

class TwoByTwo {
public:
    TwoByTwo() = default;
    TwoByTwo(cplx a00, cplx a01, cplx a10, cplx a11) : a_{a00, a01, a10, a11} {}

    static TwoByTwo identity() { return {1.0, 0.0, 0.0, 1.0}; }
    static TwoByTwo E1() { return {1.0, 0.0, 0.0, 0.0}; }
    static TwoByTwo E2() { return {0.0, 0.0, 0.0, 1.0}; }

    cplx& operator()(int i, int j) { return a_[2 * i + j]; }
    cplx operator()(int i, int j) const { return a_[2 * i + j]; }

    cplx trace() const { return a_[0] + a_[3]; }
    // ⟨A⟩ = trace / 2
    cplx normalized_trace() const { return 0.5 * trace(); }
    double max_abs() const;

    TwoByTwo operator+(const TwoByTwo& o) const;
    TwoByTwo operator-(const TwoByTwo& o) const;
    TwoByTwo operator*(const TwoByTwo& o) const;
    TwoByTwo operator*(cplx s) const;

private:
    std::array<cplx, 4> a_{};
};

TwoByTwo deterministic_M(cplx z, double eta);
TwoByTwo deterministic_M(const SelfConsistentPoint& p);

// 𝒮[B] = 2⟨B E1⟩E2 + 2⟨B E2⟩E1
TwoByTwo covariance_operator(const TwoByTwo& b);

// (1 - M1 𝒮[·] M2)^{-1}[M1 A M2]
TwoByTwo two_resolvent_M(cplx z1, double eta1, cplx z2, double eta2, const TwoByTwo& a);

// Closed form of Σ_{(i,j)∈{(1,2),(2,1)}} ⟨M_{E_i} E_j⟩.
cplx two_resolvent_closed_form(cplx z1, double eta1, cplx z2, double eta2);

struct CharacteristicState {
    cplx z;
    double eta = 0.0;
    double elapsed = 0.0;
};

class CharacteristicCrossing : public NumericalError {
public:
    CharacteristicCrossing(const std::string& what, double crossing_time)
        : NumericalError(what), crossing_time_(crossing_time) {}
    double crossing_time() const noexcept { return crossing_time_; }

private:
    double crossing_time_;
};

// (z_t, η_t) -> (z_0, η_0) along ∂_t η = -Im m^{z_t}(iη_t) - η_t/2, ∂_t z = -z/2.
CharacteristicState characteristics_pullback(cplx z_t, double eta_t, double t);
// (z_0, η_0) -> (z_t, η_t); throws CharacteristicCrossing when η would hit 0.
CharacteristicState characteristics_forward(cplx z0, double eta0, double t);

// Stieltjes transform m(w) = ∫ μ(dx)/(x - w) of a probability measure on ℝ,
// with its derivative and a support hint [lo, hi].
struct StieltjesProvider {
    std::function<cplx(cplx)> m;
    std::function<cplx(cplx)> dm;
    double support_lo = 0.0;
    double support_hi = 0.0;
    std::string name;

    static StieltjesProvider semicircle(double variance = 1.0);
    static StieltjesProvider point_mass(double x0 = 0.0);
    static StieltjesProvider empirical(std::vector<double> points);
    // Symmetrized singular-value law of an i.i.d. matrix shifted by z.
    static StieltjesProvider hermitized(cplx z);
};

cplx semicircle_transform(double variance, cplx w);

class FreeConvolutionModel {
public:
    FreeConvolutionModel(StieltjesProvider m0, double t);

    const StieltjesProvider& initial() const noexcept { return m0_; }
    double time() const noexcept { return t_; }

    // ∫ μ̃₀(dx)/|u - x|² < 1/t
    bool in_domain(cplx u) const;
    // Subordination point u with Φ(u) = u - t m̃₀(u) = w.
    cplx subordination(cplx w) const;

private:
    StieltjesProvider m0_;
    double t_;
};

cplx free_convolve(const FreeConvolutionModel& model, cplx w);
double density_at(const FreeConvolutionModel& model, double x);
// Stieltjes provider for m̃_t, usable as a reference transform.
StieltjesProvider as_provider(const FreeConvolutionModel& model);

struct StieltjesReport {
    std::size_t checked = 0;
    std::vector<cplx> violations;
    double worst_value_ratio = 0.0;       // |m| dist
    double worst_derivative_ratio = 0.0;  // |m'| Im z / Im m
    bool ok() const { return violations.empty(); }
};

StieltjesReport stieltjes_bounds_check(const StieltjesProvider& m, double support_lo, double support_hi,
                                       std::span<const cplx> points);

}  // namespace nhflow::theory
