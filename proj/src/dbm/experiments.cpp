#include <nhflow/dbm.hpp>
#include <nhflow/parallel.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <sstream>

namespace nhflow::dbm {
namespace {

constexpr std::array<double, 5> gl5_x{-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831,
                                      0.9061798459386640};
constexpr std::array<double, 5> gl5_w{0.2369268850561891, 0.4786286704993665, 0.5688888888888889,
                                      0.4786286704993665, 0.2369268850561891};

double gauss5(const std::function<double(double)>& f, double a, double b) {
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    double s = 0.0;
    for (int k = 0; k < 5; ++k) s += gl5_w[k] * f(mid + half * gl5_x[k]);
    return half * s;
}

double density_from(const theory::StieltjesProvider& ref, double x) {
    return std::max(0.0, ref.m(cplx(x, 1e-12)).imag() / pi);
}

}  // namespace

ParticleConfiguration symmetric_quantiles(const std::function<double(double)>& density, double L, std::size_t N) {
    if (N == 0 || !(L > 0.0)) throw std::invalid_argument("symmetric_quantiles: need N > 0 and L > 0");
    const std::size_t panels = 4096;
    const double h = L / panels;
    std::vector<double> cum(panels + 1, 0.0);
    for (std::size_t p = 0; p < panels; ++p) cum[p + 1] = cum[p] + gauss5(density, p * h, (p + 1) * h);
    const double half_mass = cum.back();
    if (!(half_mass > 0.0)) throw NumericalError("symmetric_quantiles: density has no mass on [0, L]");
    ParticleConfiguration out;
    out.x.resize(N);
    for (std::size_t i = 0; i < N; ++i) {
        // mass on [0, γ_i] is (i + 1/2)/(2N) of the total, i.e. (i + 1/2)/N of the half
        const double target = half_mass * (i + 0.5) / static_cast<double>(N);
        const std::size_t p = std::upper_bound(cum.begin(), cum.end(), target) - cum.begin() - 1;
        const std::size_t q = std::min(p, panels - 1);
        double lo = q * h, hi = (q + 1) * h;
        const double base = cum[q];
        for (int it = 0; it < 60; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (base + gauss5(density, q * h, mid) < target) lo = mid;
            else hi = mid;
        }
        out.x[i] = 0.5 * (lo + hi);
    }
    out.validate();
    return out;
}

RegularInitialData quantile_data(const theory::StieltjesProvider& reference, std::size_t N) {
    const double L = std::max(std::abs(reference.support_lo), std::abs(reference.support_hi));
    RegularInitialData d;
    d.particles = symmetric_quantiles([&](double x) { return density_from(reference, x); }, L, N);
    d.reference = reference;
    return d;
}

RegularInitialData hermitization_data(const sampling::EntryDistribution& dist, cplx z, std::size_t N,
                                      std::uint64_t seed) {
    sampling::Rng rng(seed);
    const auto x = sampling::sample_iid_matrix(N, dist, rng);
    RegularInitialData d;
    d.particles.x = linalg::singular_values(x, z);
    d.particles.validate();
    d.reference = theory::StieltjesProvider::hermitized(z);
    return d;
}

RegularInitialData perturbed_quantile_data(const theory::StieltjesProvider& reference, std::size_t N,
                                           double amplitude) {
    RegularInitialData d = quantile_data(reference, N);
    const double f = 1.0 + amplitude / std::sqrt(static_cast<double>(N));
    if (!(f > 0.0)) throw std::invalid_argument("perturbed_quantile_data: dilation must stay positive");
    for (double& x : d.particles.x) x *= f;
    return d;
}

std::vector<cplx> local_law_lattice(std::size_t N, double nu, double G, std::size_t n_re, std::size_t n_im) {
    if (N == 0 || !(nu > 0.0) || !(G > 0.0) || n_re < 1 || n_im < 2)
        throw std::invalid_argument("local_law_lattice: bad arguments");
    const double n = static_cast<double>(N);
    const double ymin = std::pow(n, -1.0 + 5.0 * nu);  // φ⁴ N^{-1+ν} with φ = N^ν
    const double r = 0.5 * G;
    if (!(ymin < r)) throw std::invalid_argument("local_law_lattice: empty domain for this N");
    std::vector<cplx> out;
    for (std::size_t b = 0; b < n_im; ++b) {
        const double y = ymin * std::pow(r / ymin, static_cast<double>(b) / (n_im - 1));
        for (std::size_t a = 0; a < n_re; ++a) {
            const double x = n_re == 1 ? 0.0 : -r + 2.0 * r * a / (n_re - 1);
            const cplx w(x, y);
            if (std::abs(w) <= r * (1.0 + 1e-12)) out.push_back(w);
        }
    }
    return out;
}

LocalLawReport local_law_check(const ParticleConfiguration& x, const theory::StieltjesProvider& reference,
                               std::span<const cplx> lattice, double nu) {
    x.validate();
    const double n = static_cast<double>(x.size());
    const double phi = std::pow(n, nu);
    LocalLawReport rep;
    for (const cplx& w : lattice) {
        if (!(w.imag() > 0.0)) throw std::invalid_argument("local_law_check: lattice must lie in the upper half plane");
        const cplx mt = reference.m(w);
        const double bound = phi * std::sqrt(mt.imag() / (n * w.imag()));
        const double ratio = std::abs(empirical_stieltjes(x, w) - mt) / bound;
        ++rep.points;
        if (ratio > 1.0) ++rep.violations;
        if (ratio > rep.max_ratio) {
            rep.max_ratio = ratio;
            rep.worst_point = w;
        }
    }
    return rep;
}

const GapRow& GapTable::at(std::size_t i, double t) const {
    for (const auto& r : rows)
        if (r.i == i && std::abs(r.t - t) <= 1e-12 * std::max(1.0, t)) return r;
    throw std::out_of_range("GapTable: no such cell");
}

namespace {

DBMSimConfig replica_config(const DBMSimConfig& cfg, std::span<const double> t_grid, std::size_t r) {
    DBMSimConfig c = cfg;
    c.seed = sampling::derive_seed(cfg.seed, r);
    c.snapshot_times.assign(t_grid.begin(), t_grid.end());
    c.T = t_grid.empty() ? cfg.T : t_grid.back();
    return c;
}

double mean_of(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

}  // namespace

GapTable coupling_gap_experiment(const ParticleConfiguration& init, const DriverSpec& driver,
                                 std::span<const double> t_grid, std::size_t i_max, std::size_t replicas,
                                 const DBMSimConfig& cfg, std::size_t threads) {
    const std::size_t N = init.size();
    if (t_grid.empty() || i_max == 0 || i_max > N || replicas == 0)
        throw std::invalid_argument("coupling_gap_experiment: bad arguments");
    const std::size_t nt = t_grid.size();
    std::vector<std::vector<double>> gaps(replicas, std::vector<double>(nt * i_max));
    parallel_for(replicas, threads, [&](std::size_t r) {
        const auto traj = simulate_coupled(init, init, driver, replica_config(cfg, t_grid, r));
        for (std::size_t k = 0; k < nt; ++k)
            for (std::size_t i = 0; i < i_max; ++i)
                gaps[r][k * i_max + i] = static_cast<double>(N) * std::abs(traj.s[k].x[i] - traj.r[k].x[i]);
    });
    GapTable table;
    table.replicas = replicas;
    std::vector<double> col(replicas);
    for (std::size_t k = 0; k < nt; ++k)
        for (std::size_t i = 0; i < i_max; ++i) {
            for (std::size_t r = 0; r < replicas; ++r) col[r] = gaps[r][k * i_max + i];
            table.rows.push_back({i + 1, t_grid[k], quantile(col, 0.5), mean_of(col), quantile(col, 0.9)});
        }
    return table;
}

RelaxationReport relaxation_experiment(const RegularInitialData& init1, const RegularInitialData& init2,
                                       std::span<const double> t_grid, std::span<const std::size_t> indices,
                                       std::size_t replicas, const DBMSimConfig& cfg, double slope_t_max,
                                       std::size_t threads) {
    const std::size_t N = init1.particles.size();
    if (init2.particles.size() != N || t_grid.empty() || indices.empty() || replicas == 0)
        throw std::invalid_argument("relaxation_experiment: bad arguments");
    for (std::size_t i : indices)
        if (i == 0 || i > N) throw std::invalid_argument("relaxation_experiment: index out of range");
    const double n = static_cast<double>(N);
    const std::size_t nt = t_grid.size(), ni = indices.size();

    std::vector<double> rho1(nt), rho2(nt);
    for (std::size_t k = 0; k < nt; ++k) {
        rho1[k] = theory::density_at(theory::FreeConvolutionModel(init1.reference, t_grid[k]), 0.0);
        rho2[k] = theory::density_at(theory::FreeConvolutionModel(init2.reference, t_grid[k]), 0.0);
    }
    DriverSpec shared;
    shared.kind = DriverKind::SharedBlock;
    shared.K = N;
    shared.epsilon = 0.0;

    std::vector<std::vector<double>> gaps(replicas, std::vector<double>(nt * ni));
    parallel_for(replicas, threads, [&](std::size_t r) {
        const auto traj = simulate_coupled(init1.particles, init2.particles, shared, replica_config(cfg, t_grid, r));
        for (std::size_t k = 0; k < nt; ++k)
            for (std::size_t q = 0; q < ni; ++q) {
                const std::size_t i = indices[q] - 1;
                gaps[r][k * ni + q] = std::abs(rho1[k] * traj.s[k].x[i] - rho2[k] * traj.r[k].x[i]);
            }
    });

    RelaxationReport rep;
    rep.replicas = replicas;
    const double slack = std::pow(n, 0.1);
    std::vector<double> col(replicas);
    std::size_t exceeded = 0;
    std::vector<double> st, sg;
    const double tmax = slope_t_max > 0.0 ? slope_t_max : std::pow(n, -1.0 / 3.0);
    for (std::size_t k = 0; k < nt; ++k)
        for (std::size_t q = 0; q < ni; ++q) {
            const double i = static_cast<double>(indices[q]), t = t_grid[k];
            RelaxationRow row;
            row.i = indices[q];
            row.t = t;
            for (std::size_t r = 0; r < replicas; ++r) col[r] = gaps[r][k * ni + q];
            row.median_gap = quantile(col, 0.5);
            row.envelope = (i / n) * (1.0 / std::sqrt(n * t) + std::max(i / n, t));
            std::size_t over = 0;
            for (double g : col) over += g > row.envelope * slack;
            row.exceed_fraction = static_cast<double>(over) / replicas;
            exceeded += row.median_gap > row.envelope * slack;
            if (indices[q] == 1 && t <= tmax) {
                st.push_back(t);
                sg.push_back(row.median_gap);
            }
            rep.rows.push_back(row);
        }
    rep.cell_exceed_fraction = static_cast<double>(exceeded) / rep.rows.size();
    rep.slope = st.size() >= 2 ? loglog_slope(st, sg) : std::nan("");
    return rep;
}

RouteComparison sde_vs_matrix_route(std::size_t N, double t, std::size_t replicas, const DBMSimConfig& cfg,
                                    std::size_t threads) {
    if (N == 0 || !(t > 0.0 && t < 1.0) || replicas == 0) throw std::invalid_argument("sde_vs_matrix_route: bad arguments");
    RouteComparison out;
    out.sde.resize(replicas);
    out.matrix.resize(replicas);
    DriverSpec brownian;
    parallel_for(replicas, threads, [&](std::size_t r) {
        sampling::Rng rng(sampling::derive_seed(cfg.seed ^ 0x5eedULL, r));
        auto x0 = sampling::sample_ginibre(N, rng);
        const double a = std::sqrt(1.0 - t), b = std::sqrt(t);
        for (std::size_t q = 0; q < N * N; ++q) x0.data()[q] *= a;
        auto xt = sampling::sample_ginibre(N, rng);
        for (std::size_t q = 0; q < N * N; ++q) xt.data()[q] = x0.data()[q] + b * xt.data()[q];
        out.matrix[r] = linalg::singular_values(xt, 0.0).front();
        ParticleConfiguration init{linalg::singular_values(x0, 0.0)};
        DBMSimConfig c = cfg;
        c.seed = sampling::derive_seed(cfg.seed, r);
        c.T = t;
        c.snapshot_times.clear();
        out.sde[r] = simulate_dbm(init, brownian, c).snapshots.back().x.front();
    });
    out.ks = ks_two_sample(out.sde, out.matrix);
    return out;
}

HardEdgeReport hard_edge_universality_experiment(const sampling::EntryDistribution& dist, std::span<const cplx> z,
                                                 std::size_t N, double t, std::size_t replicas, std::uint64_t seed,
                                                 std::size_t threads) {
    if (z.empty() || N == 0 || !(t >= 0.0 && t <= 1.0) || replicas < 2)
        throw std::invalid_argument("hard_edge_universality_experiment: bad arguments");
    for (const cplx& zp : z)
        if (!(std::abs(zp) < 1.0)) throw std::invalid_argument("hard_edge_universality_experiment: need |z| < 1");
    const std::size_t nz = z.size();
    std::vector<std::vector<double>> flow(replicas, std::vector<double>(nz)), ref(replicas, std::vector<double>(nz));
    std::vector<char> failed(replicas, 0);
    parallel_for(replicas, threads, [&](std::size_t r) {
        sampling::Rng rng(sampling::derive_seed(seed, r));
        try {
            auto x = sampling::sample_iid_matrix(N, dist, rng);
            const auto g = sampling::sample_ginibre(N, rng);
            const double a = std::sqrt(1.0 - t), b = std::sqrt(t);
            for (std::size_t q = 0; q < N * N; ++q) x.data()[q] = a * x.data()[q] + b * g.data()[q];
            const auto y = sampling::sample_ginibre(N, rng);
            for (std::size_t p = 0; p < nz; ++p) {
                // density of the symmetrized singular values of X - z at 0
                const double rho0 = std::sqrt(1.0 - abs2(z[p])) / pi;
                flow[r][p] = N * rho0 * linalg::singular_values(x, z[p]).front();
                ref[r][p] = N * rho0 * linalg::singular_values(y, z[p]).front();
            }
        } catch (const NumericalError&) {
            failed[r] = 1;
        }
    });
    HardEdgeReport rep;
    rep.z.assign(z.begin(), z.end());
    rep.replicas = replicas;
    std::vector<std::vector<double>> fcol(nz), rcol(nz);
    for (std::size_t r = 0; r < replicas; ++r) {
        if (failed[r]) {
            ++rep.failures;
            continue;
        }
        for (std::size_t p = 0; p < nz; ++p) {
            fcol[p].push_back(flow[r][p]);
            rcol[p].push_back(ref[r][p]);
        }
    }
    for (std::size_t p = 0; p < nz; ++p) {
        rep.ks.push_back(ks_two_sample(fcol[p], rcol[p]));
        rep.max_ks = std::max(rep.max_ks, rep.ks.back());
    }
    if (nz >= 2) {
        const auto& u = fcol[0];
        const auto& v = fcol[1];
        const double mu = mean_of(u), mv = mean_of(v);
        double suv = 0.0, suu = 0.0, svv = 0.0;
        for (std::size_t k = 0; k < u.size(); ++k) {
            suv += (u[k] - mu) * (v[k] - mv);
            suu += (u[k] - mu) * (u[k] - mu);
            svv += (v[k] - mv) * (v[k] - mv);
        }
        rep.correlation = suv / std::sqrt(suu * svv);
    }
    return rep;
}

double ks_two_sample(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("ks_two_sample: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::abs(i / na - j / nb));
    }
    return d;
}

double quantile(std::vector<double> v, double q) {
    if (v.empty()) throw std::invalid_argument("quantile: empty sample");
    if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("quantile: q must lie in [0, 1]");
    std::sort(v.begin(), v.end());
    const double pos = q * (v.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - lo) * (v[hi] - v[lo]);
}

double loglog_slope(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("loglog_slope: need matching samples, n >= 2");
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    const double n = static_cast<double>(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) {
        if (!(x[k] > 0.0 && y[k] > 0.0)) throw std::invalid_argument("loglog_slope: values must be positive");
        const double lx = std::log(x[k]), ly = std::log(y[k]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

void write_snapshot_csv(std::ostream& os, std::uint64_t replica, const Trajectory& traj) {
    std::ostringstream s;
    s << std::setprecision(17);
    for (std::size_t k = 0; k < traj.times.size(); ++k)
        for (std::size_t i = 0; i < traj.snapshots[k].size(); ++i)
            s << replica << ',' << traj.times[k] << ',' << i + 1 << ',' << traj.snapshots[k].x[i] << '\n';
    os << s.str();
}

void write_gap_csv(std::ostream& os, const GapTable& table) {
    std::ostringstream s;
    s << std::setprecision(17) << "i,t,median,mean,q90\n";
    for (const auto& r : table.rows) s << r.i << ',' << r.t << ',' << r.median << ',' << r.mean << ',' << r.q90 << '\n';
    os << s.str();
}

}  // namespace nhflow::dbm
