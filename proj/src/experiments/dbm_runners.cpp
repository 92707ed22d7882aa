#include <nhflow/dbm.hpp>
#include <nhflow/experiments.hpp>

#include <cmath>
#include <sstream>

namespace nhflow::experiments {
namespace {

template <class T>
T param_or(const ExperimentConfig& cfg, const char* key, T fallback) {
    const json* node = cfg.param_node(key);
    if (!node) return fallback;
    try {
        return node->get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string("config /params/") + key + ": wrong type", std::string("/params/") + key);
    }
}

cplx to_complex(const std::vector<double>& v) {
    if (v.size() != 2) throw ConfigError("config: expected [re, im]");
    return {v[0], v[1]};
}

ExperimentResult start(const ExperimentConfig& cfg) {
    ExperimentResult res;
    res.experiment = cfg.experiment;
    res.manifest = make_manifest(cfg);
    return res;
}

}  // namespace

ExperimentResult run_dbm_coupling(const ExperimentConfig& cfg) {
    const std::size_t N = cfg.N;
    const double n = static_cast<double>(N);
    const auto K = static_cast<std::size_t>(std::pow(n, param_or(cfg, "omega_K", 0.4)));
    const double eps = std::pow(n, -param_or(cfg, "omega_eps", 0.3));
    const double t = std::pow(n, param_or(cfg, "t_exponent", -0.8));
    const std::size_t i_max = std::min(N, param_or<std::size_t>(cfg, "i_max", 20));
    const double bound = param_or(cfg, "median_bound", 0.5);
    const cplx z = to_complex(param_or<std::vector<double>>(cfg, "z", {0.0, 0.0}));
    const auto init = dbm::hermitization_data(cfg.entry_distribution(), z, N, param_or<std::uint64_t>(cfg, "init_seed", 11));

    dbm::DBMSimConfig sim;
    sim.dt = param_or(cfg, "dt", 1e-5);
    sim.T = t;
    sim.seed = cfg.seed;
    const std::vector<double> grid{t};
    dbm::DriverSpec shared;
    shared.kind = dbm::DriverKind::SharedBlock;
    shared.K = K;
    shared.epsilon = eps;
    const auto coupled = dbm::coupling_gap_experiment(init.particles, shared, grid, i_max, cfg.replicas, sim, cfg.threads);
    dbm::DriverSpec indep;
    sim.seed = sampling::derive_seed(cfg.seed, 1);
    const auto baseline = dbm::coupling_gap_experiment(init.particles, indep, grid, i_max, cfg.replicas, sim, cfg.threads);

    ExperimentResult res = start(cfg);
    res.table.columns = {"i", "t", "coupled_median", "coupled_q90", "independent_median", "within_block"};
    for (std::size_t i = 1; i <= i_max; ++i) {
        const auto& c = coupled.at(i, t);
        const auto& b = baseline.at(i, t);
        res.table.add({std::to_string(i), fmt(t), fmt(c.median), fmt(c.q90), fmt(b.median), i <= K ? "yes" : "no"});
    }
    const double m1 = coupled.at(1, t).median;
    std::ostringstream d;
    d << "N=" << N << " K=" << K << " eps=" << fmt(eps) << " t=" << fmt(t) << " independent " << fmt(baseline.at(1, t).median);
    res.criteria.push_back(check_report("median N|s_1 - r_1| inside the coupled block", m1, 0.0, bound, m1 < bound, d.str()));
    // far outside the block the drivers are independent and so should the gaps be
    if (i_max > 2 * K) {
        const double far = coupled.at(i_max, t).median, ref = baseline.at(i_max, t).median;
        res.criteria.push_back(check_report("gap beyond the block reaches the independent level", far / ref, 1.0, 0.5,
                                            far >= 0.5 * ref, "i=" + std::to_string(i_max)));
    }
    return res;
}

ExperimentResult run_dbm_relaxation(const ExperimentConfig& cfg) {
    const std::size_t N = cfg.N;
    const double n = static_cast<double>(N);
    const cplx z = to_complex(param_or<std::vector<double>>(cfg, "z", {0.3, 0.0}));
    const auto seeds = param_or<std::vector<std::uint64_t>>(cfg, "init_seeds", {1, 2});
    if (seeds.size() != 2) throw ConfigError("config /params/init_seeds: need two seeds", "/params/init_seeds");
    const auto d1 = cfg.entry_distribution();
    const auto d2 = sampling::EntryDistribution::from_name(param_or<std::string>(cfg, "second_distribution", "uniform-phase"));
    const auto init1 = dbm::hermitization_data(d1, z, N, seeds[0]);
    const auto init2 = dbm::hermitization_data(d2, z, N, seeds[1]);

    const auto ex = param_or<std::vector<double>>(cfg, "t_exponents", {-0.8, -0.2});
    const std::size_t pts = param_or<std::size_t>(cfg, "t_points", 8);
    if (ex.size() != 2 || pts < 2) throw ConfigError("config /params/t_exponents: need [lo, hi] and t_points >= 2", "/params/t_exponents");
    std::vector<double> grid(pts);
    const double lo = std::pow(n, ex[0]), hi = std::pow(n, ex[1]);
    for (std::size_t k = 0; k < pts; ++k) grid[k] = lo * std::pow(hi / lo, static_cast<double>(k) / static_cast<double>(pts - 1));
    const auto indices = param_or<std::vector<std::size_t>>(cfg, "indices", {1, 2, 4, 8});

    dbm::DBMSimConfig sim;
    sim.dt = param_or(cfg, "dt", 1e-4);
    sim.seed = cfg.seed;
    const auto rep = dbm::relaxation_experiment(init1, init2, grid, indices, cfg.replicas, sim, hi * 1.01, cfg.threads);

    ExperimentResult res = start(cfg);
    res.table.columns = {"i", "t", "median_gap", "envelope", "exceed_fraction"};
    for (const auto& r : rep.rows)
        res.table.add({std::to_string(r.i), fmt(r.t), fmt(r.median_gap), fmt(r.envelope), fmt(r.exceed_fraction)});
    const double max_exceed = param_or(cfg, "max_exceed_fraction", 0.05);
    const double target = param_or(cfg, "slope_target", -0.5), tol = param_or(cfg, "slope_tolerance", 0.15);
    res.criteria.push_back(check_report("cells above envelope·N^0.1", rep.cell_exceed_fraction, 0.0, max_exceed,
                                        rep.cell_exceed_fraction < max_exceed));
    res.criteria.push_back(check_report("log-log slope of the i=1 gap in t", rep.slope, target, tol,
                                        std::abs(rep.slope - target) <= tol));
    return res;
}

ExperimentResult run_hard_edge(const ExperimentConfig& cfg) {
    const std::size_t N = cfg.N;
    const double t = std::pow(static_cast<double>(N), param_or(cfg, "t_exponent", -0.7));
    std::vector<cplx> zs;
    for (const auto& v : param_or<std::vector<std::vector<double>>>(cfg, "z", {{-0.25, 0.0}, {0.25, 0.0}}))
        zs.push_back(to_complex(v));
    const double bound = param_or(cfg, "ks_bound", 0.08);
    const auto rep = dbm::hard_edge_universality_experiment(cfg.entry_distribution(), zs, N, t, cfg.replicas, cfg.seed,
                                                            cfg.threads);
    ExperimentResult res = start(cfg);
    res.table.columns = {"z", "ks", "replicas", "failures"};
    for (std::size_t k = 0; k < zs.size(); ++k) {
        std::ostringstream zt;
        zt << fmt(zs[k].real()) << (zs[k].imag() < 0 ? "" : "+") << fmt(zs[k].imag()) << "i";
        res.table.add({zt.str(), fmt(rep.ks[k]), std::to_string(rep.replicas), std::to_string(rep.failures)});
        res.criteria.push_back(check_report("KS smallest singular value at z=" + zt.str(), rep.ks[k], 0.0, bound,
                                            rep.ks[k] < bound, "t=" + fmt(t)));
    }
    if (zs.size() >= 2) {
        const double cb = 3.0 / std::sqrt(static_cast<double>(rep.replicas));
        res.criteria.push_back(check_report("corr of smallest singular values at z1, z2", rep.correlation, 0.0, cb,
                                            std::abs(rep.correlation) < cb));
        res.table.add({"corr", fmt(rep.correlation), std::to_string(rep.replicas), std::to_string(rep.failures)});
    }
    return res;
}

}  // namespace nhflow::experiments
