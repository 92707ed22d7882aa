#pragma once

#include <nhflow/common.hpp>

#include <string>
#include <vector>

namespace nhflow::kernels {

// c ζ^k ζ̄^l with ζ = z - center
struct Monomial {
    int k = 0;
    int l = 0;
    cplx c;
};

// f(z) = Σ c_kl ζ^k ζ̄^l exp(-|ζ|²/2s²). Coefficients must satisfy c_lk = conj(c_kl)
// so that f is real; all derivatives are again of this form and are exact.
class TestFunction {
public:
    TestFunction(std::string id, cplx center, double width, std::vector<Monomial> terms);

    static TestFunction gaussian(std::string id, cplx center, double width, double amplitude = 1.0);
    // Re(c ζ^k) times the window, centered at the origin: boundary trace is a single mode.
    static TestFunction angular_mode(std::string id, double width, int k, cplx c = 1.0);

    double operator()(cplx z) const;
    cplx dz(cplx z) const;
    cplx dzbar(cplx z) const;
    double laplacian(cplx z) const;

    const std::string& id() const noexcept { return id_; }
    cplx center() const noexcept { return center_; }
    double width() const noexcept { return width_; }
    int degree() const noexcept { return degree_; }
    // Radius beyond which |f| and its derivatives are below 1e-16 of their scale.
    double support_radius() const noexcept;
    const std::vector<Monomial>& terms() const noexcept { return terms_; }

    // z -> f(λ(z - v)); stays in the class with center v + c/λ and width s/λ.
    TestFunction rescaled(cplx v, double lambda) const;

private:
    static cplx eval_poly(const std::vector<Monomial>& p, cplx zeta);
    double window(cplx zeta) const;

    std::string id_;
    cplx center_;
    double width_;
    int degree_ = 0;
    std::vector<Monomial> terms_, dz_terms_, lap_terms_;
};

// Fourier coefficients of the trace on the unit circle, ĥ_k = (1/2π)∫ h(e^{iθ}) e^{-ikθ} dθ.
struct BoundarySeries {
    int kmax = 0;
    std::vector<cplx> coeff;  // index k + kmax
    double tail = 0.0;        // largest |ĥ_k| among the top few retained modes

    cplx at(int k) const { return (k < -kmax || k > kmax) ? cplx{} : coeff[k + kmax]; }
};

BoundarySeries boundary_series(const TestFunction& f, int kmax = 64);

// Σ_k |k| e^{-|k|τ/2} f̂_k conj(ĝ_k)
double h_half_pairing(const BoundarySeries& f, const BoundarySeries& g, double tau = 0.0);

struct QuadratureGrid {
    enum class Scheme { PolarGauss, TensorMidpoint };
    Scheme scheme = Scheme::PolarGauss;
    int radial = 24;   // Gauss points per radial panel, or midpoint cells per side
    int angular = 64;  // trapezoid angles

    QuadratureGrid scaled(double factor) const;
};

struct Node {
    cplx z;
    double w;
};

// Nodes over the disk |z - c| < R, optionally intersected with the unit disk.
// Rays emanate from `origin`; with scale > 0 the radial direction is split into
// geometric panels around the origin so integrands peaked there are resolved.
struct RegionSpec {
    cplx center;
    double radius = 1.0;
    bool clip_to_unit_disk = false;
    bool split_at_unit_circle = false;
};

std::vector<Node> region_nodes(const RegionSpec& region, cplx origin, double scale, int depth,
                               const QuadratureGrid& grid);
std::vector<Node> support_nodes(const TestFunction& f, bool clip_to_unit_disk, const QuadratureGrid& grid);

double disk_average(const TestFunction& f, const QuadratureGrid& grid = {});  // (1/π)∫_𝔻 f
double circle_average(const TestFunction& f);                                 // (1/2π)∫ f(e^{iθ})dθ

// Kernels

// -log((1-e^{-τ})(1-|z|²) + |z - e^{-τ/2}w|²); +inf at z = w, τ = 0
double kernel_K(cplx z, cplx w, double tau);
// ∂_z∂_w̄ K in closed form
cplx kernel_K_mixed(cplx z, cplx w, double tau);
double parabolic_distance(cplx z, double s, cplx w, double t);
// Piecewise kernel over the three |z| regimes; +inf on the singular set.
double theta_kernel(cplx z1, cplx z2, double t);
// ∂_z∂_w̄ log(r + |z-w|²) = -r/(r + |z-w|²)²
double log_kernel_mixed(cplx z, cplx w, double r);
// r / (π(r + |z|²)²)
double q_kernel(cplx z, double r);

double bessel_k1(double x);
// Fourier transform of q_r at |ξ|: x K₁(x), x = |ξ|√r; equals 1 for r = 0.
double q_hat(double r, double xi);
double semigroup_defect(double r1, double r2);

struct KernelPrediction {
    double value = 0.0;
    double quadrature_error = 0.0;
    std::string kernel_id;
    double tau = 0.0;
    double kappa = 0.0;
    cplx v;
    double a = 0.0;
};

// Γ(f,g,τ,κ): 𝔻² double integral against ∂_z∂_w̄K, the H^{1/2} boundary pairing
// with the Poisson multiplier, and the κ term. τ = 0 uses the gradient form.
KernelPrediction gamma_macroscopic(const TestFunction& f, const TestFunction& g, double tau, double kappa,
                                   const QuadratureGrid& grid = {});
// Same quantity from (1/8π²)∫∫ Δf Δg Θ over the plane plus the κ term written
// against Δf(1-|z|²); independent of the boundary-series machinery.
KernelPrediction gamma_macroscopic_theta(const TestFunction& f, const TestFunction& g, double tau, double kappa,
                                         const QuadratureGrid& grid = {});

struct MesoscopicRoutes {
    KernelPrediction q_form;    // (1/π²)∫∫ ∂_z̄f ∂_w g r/(r+|z-w|²)²
    KernelPrediction log_form;  // -(1/16π²)∫∫ Δf Δg log(r+|z-w|²)
};

MesoscopicRoutes gamma_mesoscopic_routes(const TestFunction& f, const TestFunction& g, double tau, cplx v,
                                         const QuadratureGrid& grid = {});
// q-form value; throws NumericalError when the two routes disagree beyond the
// combined quadrature error.
KernelPrediction gamma_mesoscopic(const TestFunction& f, const TestFunction& g, double tau, cplx v,
                                  const QuadratureGrid& grid = {});

enum class GramKernel { Mesoscopic, Macroscopic };

struct GramReport {
    std::vector<double> matrix;  // row-major m x m
    std::size_t size = 0;
    double lambda_min = 0.0;
    double trace = 0.0;
    double max_quadrature_error = 0.0;
    bool positive = false;  // λ_min ≥ -tol·trace
};

GramReport psd_gram(const std::vector<TestFunction>& functions, const std::vector<double>& times, cplx v,
                    GramKernel kernel = GramKernel::Mesoscopic, double tol = 1e-6,
                    const QuadratureGrid& grid = {});

// c_v²/(c_v|t-s| + |z-w|²)², c_v = 1 - |v|²
double overlap_corr_prediction(cplx z, cplx w, double s, double t, cplx v);

// ∫_{[s1,s2]×[t1,t2]} ∫∫ f(z) g(w) c_v²/(c_v|t-s| + |z-w|²)² dz dw/π² ds dt, s2 ≤ t1.
// The time integral is done in closed form.
KernelPrediction overlap_corr_integrated(const TestFunction& f, const TestFunction& g, cplx v, double s1, double s2,
                                         double t1, double t2, const QuadratureGrid& grid = {});

struct VarianceSplitPrediction {
    KernelPrediction v1;  // part measurable at time s
    KernelPrediction v2;  // fresh noise between s and t
    double total = 0.0;   // Γ at τ = 0 with κ_{4,t}
};

// Macroscopic when `mesoscopic` is false: V₁ = Γ(f,f,2(t-s),κ_s), V₂ = Γ(f,f,0,0) - Γ(f,f,2(t-s),0).
// Mesoscopic uses Γ_v for both. kappa_s is the entry fourth cumulant at time s.
VarianceSplitPrediction variance_split_prediction(const TestFunction& f, double s, double t, double kappa_s,
                                                  bool mesoscopic = false, cplx v = 0.0,
                                                  const QuadratureGrid& grid = {});

}  // namespace nhflow::kernels
