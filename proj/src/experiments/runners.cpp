#include <nhflow/dbm.hpp>
#include <nhflow/experiments.hpp>
#include <nhflow/observables.hpp>
#include <nhflow/parallel.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

namespace nhflow::experiments {

using kernels::TestFunction;
using linalg::ComplexMatrix;
using sampling::Rng;

namespace {

// Replica r of a run draws everything from this stream, so results do not
// depend on the thread count.
Rng replica_rng(std::uint64_t seed, std::size_t r) { return Rng(sampling::derive_seed(seed, r)); }

ComplexMatrix initial_matrix(const ExperimentConfig& cfg, Rng& rng) {
    if (cfg.start == "equilibrium") return sampling::sample_ginibre(cfg.N, rng);
    return sampling::sample_iid_matrix(cfg.N, cfg.entry_distribution(), rng);
}

double kappa_at(const ExperimentConfig& cfg, double t) {
    return cfg.start == "equilibrium" ? 0.0 : sampling::kappa4_at_time(cfg.entry_distribution(), t);
}

double mean_of(std::span<const double> x) {
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

cplx complex_param(const json* node, cplx fallback) {
    if (!node) return fallback;
    if (node->is_number()) return node->get<double>();
    if (node->is_array() && node->size() == 2) return {(*node)[0].get<double>(), (*node)[1].get<double>()};
    throw ConfigError("config: expected [re, im]");
}

template <class T>
T get_or(const json& node, const char* key, T fallback) {
    auto it = node.find(key);
    if (it == node.end()) return fallback;
    try {
        return it->get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string("config /params: field '") + key + "' has the wrong type", key);
    }
}

ExperimentResult start_result(const ExperimentConfig& cfg) {
    ExperimentResult res;
    res.experiment = cfg.experiment;
    res.manifest = make_manifest(cfg);
    return res;
}

std::string pass_text(bool p) { return p ? "pass" : "fail"; }

// Physical test function and time for a configured function id.
struct Scaled {
    TestFunction base, phys;
};

Scaled scaled_function(const ExperimentConfig& cfg, const std::string& id) {
    TestFunction base = build_function(cfg.function(id));
    if (!cfg.mesoscopic) return {base, base};
    return {base, observables::rescale_function(base, cfg.mesoscopic->v, cfg.mesoscopic->a, cfg.N)};
}

double physical_time(const ExperimentConfig& cfg, double s) {
    return cfg.mesoscopic ? cfg.mesoscopic->physical_time(s, cfg.N) : s;
}

}  // namespace

double dirichlet_energy(const TestFunction& f, const kernels::QuadratureGrid& grid) {
    // |∇f|² = 4|∂_z f|² for real f
    double s = 0.0;
    for (const auto& nd : kernels::support_nodes(f, false, grid)) s += nd.w * 4.0 * abs2(f.dz(nd.z));
    return s / (4.0 * pi);
}

// ---------------------------------------------------------------- covariance

ExperimentResult run_covariance(const ExperimentConfig& cfg) {
    struct Pair {
        std::string f, g;
        double s, t;
    };
    std::vector<Pair> pairs;
    const json* pn = cfg.param_node("pairs");
    if (!pn || !pn->is_array() || pn->empty()) throw ConfigError("config /params/pairs: need a nonempty array", "/params/pairs");
    for (const auto& p : *pn) {
        Pair q{get_or<std::string>(p, "f", ""), get_or<std::string>(p, "g", ""), get_or(p, "s", 0.0),
               get_or(p, "t", 0.0)};
        if (q.s > q.t) {
            std::swap(q.s, q.t);
            std::swap(q.f, q.g);
        }
        (void)cfg.function(q.f);
        (void)cfg.function(q.g);
        pairs.push_back(q);
    }
    const double threshold = cfg.param("threshold", 4.0);
    const std::string prediction = cfg.param_string("prediction", "gamma");
    if (prediction != "gamma" && prediction != "dirichlet")
        throw ConfigError("config /params/prediction: expected gamma or dirichlet", "/params/prediction");

    // observables: one per distinct (function, physical time)
    std::set<double> time_set;
    std::set<std::string> ids;
    for (const auto& p : pairs) {
        time_set.insert(physical_time(cfg, p.s));
        time_set.insert(physical_time(cfg, p.t));
        ids.insert(p.f);
        ids.insert(p.g);
    }
    const std::vector<double> times(time_set.begin(), time_set.end());
    const std::vector<std::string> id_list(ids.begin(), ids.end());
    std::vector<TestFunction> phys;
    for (const auto& id : id_list) phys.push_back(scaled_function(cfg, id).phys);
    auto slot = [&](const std::string& id, double s) {
        const std::size_t fi = std::find(id_list.begin(), id_list.end(), id) - id_list.begin();
        const std::size_t ti = std::lower_bound(times.begin(), times.end(), physical_time(cfg, s)) - times.begin();
        return ti * id_list.size() + fi;
    };

    const std::size_t M = cfg.replicas, K = times.size() * id_list.size();
    std::vector<double> values(M * K);
    const sampling::TimeGrid grid(times);
    parallel_for(M, cfg.threads, [&](std::size_t r) {
        Rng rng = replica_rng(cfg.seed, r);
        const ComplexMatrix x0 = initial_matrix(cfg, rng);
        const auto states = sampling::sample_trajectory(x0, grid, rng);
        linalg::EigenWorkspace ws;
        std::vector<cplx> ev;
        for (std::size_t ti = 0; ti < states.size(); ++ti) {
            linalg::eigenvalues(states[ti], ws, ev);
            for (std::size_t fi = 0; fi < phys.size(); ++fi)
                values[r * K + ti * id_list.size() + fi] = observables::linear_sum(ev, phys[fi]);
        }
    });

    ExperimentResult res = start_result(cfg);
    res.table.columns = {"f", "s", "g", "t", "estimate", "std_error", "M", "predicted", "quadrature_error", "z", "pass"};
    std::vector<double> x(M), y(M);
    for (const auto& p : pairs) {
        const std::size_t a = slot(p.f, p.s), b = slot(p.g, p.t);
        for (std::size_t r = 0; r < M; ++r) {
            x[r] = values[r * K + a];
            y[r] = values[r * K + b];
        }
        const auto f = scaled_function(cfg, p.f), g = scaled_function(cfg, p.g);
        kernels::KernelPrediction pred;
        if (prediction == "dirichlet") {
            if (p.f != p.g || p.s != p.t)
                throw ConfigError("config /params/prediction: dirichlet needs f = g and s = t", "/params/prediction");
            pred.value = dirichlet_energy(f.phys, cfg.grid);
            pred.quadrature_error = std::abs(pred.value - dirichlet_energy(f.phys, cfg.grid.scaled(2.0)));
        } else if (cfg.mesoscopic) {
            pred = kernels::gamma_mesoscopic(f.base, g.base, p.t - p.s, cfg.mesoscopic->v, cfg.grid);
        } else {
            pred = kernels::gamma_macroscopic(f.base, g.base, p.t - p.s, kappa_at(cfg, p.s), cfg.grid);
        }
        std::ostringstream name;
        name << "cov(" << p.f << "@" << fmt(p.s) << "," << p.g << "@" << fmt(p.t) << ")";
        auto rep = covariance_report(name.str(), x, y, pred.value, pred.quadrature_error, threshold);
        res.table.add({p.f, fmt(p.s), p.g, fmt(p.t), fmt(rep.estimate), fmt(rep.std_error), std::to_string(M),
                       fmt(rep.predicted), fmt(rep.quadrature_error), fmt(rep.z), pass_text(rep.pass)});
        res.criteria.push_back(std::move(rep));
    }
    return res;
}

// ------------------------------------------------------------ variance split

ExperimentResult run_variance_split(const ExperimentConfig& cfg) {
    const std::string id = cfg.param_string("function", cfg.functions.empty() ? "" : cfg.functions.front().id);
    const double s = cfg.param("s", 0.0), t = cfg.param("t", 0.1);
    if (!(t > s && s >= 0.0)) throw ConfigError("config /params: need 0 <= s < t", "/params/t");
    const std::size_t outer = cfg.param_size("outer", 200), inner = cfg.param_size("inner", 50);
    if (outer < 4 || inner < 2) throw ConfigError("config /params: need outer >= 4 and inner >= 2", "/params/outer");
    const double threshold = cfg.param("threshold", 4.0);
    const auto f = scaled_function(cfg, id);
    const double ps = physical_time(cfg, s), pt = physical_time(cfg, t);

    // per outer replica: conditional mean and unbiased conditional variance
    std::vector<double> cmean(outer), cvar(outer), all(outer * inner);
    parallel_for(outer, cfg.threads, [&](std::size_t o) {
        Rng rng = replica_rng(cfg.seed, o);
        ComplexMatrix xs = initial_matrix(cfg, rng);
        sampling::evolve_ou_inplace(xs, ps, rng);
        linalg::EigenWorkspace ws;
        std::vector<cplx> ev;
        ComplexMatrix y;
        double sum = 0.0;
        for (std::size_t k = 0; k < inner; ++k) {
            Rng fresh = rng.stream(k);
            y = xs;
            sampling::evolve_ou_inplace(y, pt - ps, fresh);
            linalg::eigenvalues(y, ws, ev);
            all[o * inner + k] = observables::linear_sum(ev, f.phys);
            sum += all[o * inner + k];
        }
        cmean[o] = sum / static_cast<double>(inner);
        double ss = 0.0;
        for (std::size_t k = 0; k < inner; ++k) ss += std::pow(all[o * inner + k] - cmean[o], 2);
        cvar[o] = ss / static_cast<double>(inner - 1);
    });

    // V̂₂ = E[Var(L_t | F_s)], V̂₁ = Var(E[L_t | F_s]) with the inner-sampling noise removed
    const double mbar = mean_of(cmean);
    const double O = static_cast<double>(outer), Kn = static_cast<double>(inner);
    std::vector<double> v1s(outer), sums(outer);
    for (std::size_t o = 0; o < outer; ++o) {
        v1s[o] = (cmean[o] - mbar) * (cmean[o] - mbar) * O / (O - 1.0) - cvar[o] / Kn;
        sums[o] = v1s[o] + cvar[o];
    }
    const auto pred = kernels::variance_split_prediction(f.base, s, t, kappa_at(cfg, ps), cfg.mesoscopic.has_value(),
                                                         cfg.mesoscopic ? cfg.mesoscopic->v : cplx{}, cfg.grid);
    ExperimentResult res = start_result(cfg);
    auto r1 = mean_report("V1 (measurable at s)", v1s, pred.v1.value, pred.v1.quadrature_error, threshold);
    auto r2 = mean_report("V2 (noise on [s,t])", cvar, pred.v2.value, pred.v2.quadrature_error, threshold);
    auto r3 = mean_report("V1+V2 vs total", sums, pred.total,
                          pred.v1.quadrature_error + pred.v2.quadrature_error, threshold);
    // law of total variance against the pooled sample variance of all outer·inner draws
    const double pooled_mean = mean_of(all);
    double pooled = 0.0;
    for (double v : all) pooled += (v - pooled_mean) * (v - pooled_mean);
    pooled /= static_cast<double>(all.size() - 1);
    const double split = r1.estimate + r2.estimate;
    const double se = r3.std_error;
    auto r4 = check_report("V1+V2 vs pooled variance", split, pooled, threshold,
                           std::abs(split - pooled) <= threshold * se,
                           "combined stderr " + fmt(se));
    res.table.columns = {"quantity", "estimate", "std_error", "predicted", "quadrature_error", "z", "pass"};
    for (auto* r : {&r1, &r2, &r3, &r4}) {
        res.table.add({r->name, fmt(r->estimate), fmt(r->std_error), fmt(r->predicted), fmt(r->quadrature_error),
                       fmt(r->z), pass_text(r->pass)});
        res.criteria.push_back(*r);
    }
    return res;
}

// ---------------------------------------------------------------------- wick

ExperimentResult run_wick(const ExperimentConfig& cfg) {
    const std::string id = cfg.param_string("function", cfg.functions.empty() ? "" : cfg.functions.front().id);
    const auto f = scaled_function(cfg, id);
    const std::size_t M = cfg.replicas, B = cfg.param_size("bootstrap", 400);
    const double threshold = cfg.param("threshold", 4.0);
    const std::size_t dof = cfg.param_size("chi2_dof", 8);
    if (M < 100) throw ConfigError("config /replicas: wick needs at least 100 replicas", "/replicas");
    std::vector<double> times = cfg.times.empty() ? std::vector<double>{0.0} : cfg.times;
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());
    std::vector<double> phys_t;
    for (double s : times) phys_t.push_back(physical_time(cfg, s));

    const std::size_t T = times.size();
    std::vector<double> values(M * T);
    const sampling::TimeGrid grid(phys_t);
    parallel_for(M, cfg.threads, [&](std::size_t r) {
        Rng rng = replica_rng(cfg.seed, r);
        const auto states = sampling::sample_trajectory(initial_matrix(cfg, rng), grid, rng);
        linalg::EigenWorkspace ws;
        std::vector<cplx> ev;
        for (std::size_t k = 0; k < T; ++k) {
            linalg::eigenvalues(states[k], ws, ev);
            values[k * M + r] = observables::linear_sum(ev, f.phys);
        }
    });

    ExperimentResult res = start_result(cfg);
    res.table.columns = {"sample", "time", "skewness", "skewness_se", "excess_kurtosis", "kurtosis_se", "z_skew",
                         "z_kurt", "gaussian"};
    auto judge = [&](const std::string& label, double time, std::span<const double> x, std::uint64_t seed) {
        const auto c = standardized_cumulants(x, B, seed);
        const double zs = c.skewness / c.skewness_se, zk = c.excess_kurtosis / c.kurtosis_se;
        const bool gaussian = std::abs(zs) <= threshold && std::abs(zk) <= threshold;
        res.table.add({label, fmt(time), fmt(c.skewness), fmt(c.skewness_se), fmt(c.excess_kurtosis),
                       fmt(c.kurtosis_se), fmt(zs), fmt(zk), gaussian ? "yes" : "no"});
        return std::pair{c, gaussian};
    };
    for (std::size_t k = 0; k < T; ++k) {
        std::span<const double> x(values.data() + k * M, M);
        const auto [c, g] = judge("L(" + id + ")", times[k], x, sampling::derive_seed(cfg.seed, 1000003 + k));
        (void)g;
        res.criteria.push_back(z_report("skewness L(" + id + ")@" + fmt(times[k]), c.skewness, c.skewness_se, M, 0.0,
                                        0.0, threshold));
        res.criteria.push_back(z_report("excess kurtosis L(" + id + ")@" + fmt(times[k]), c.excess_kurtosis,
                                        c.kurtosis_se, M, 0.0, 0.0, threshold));
    }
    // Controls with the same M: a Gaussian sample must pass and a χ² sample must not.
    Rng crng(sampling::derive_seed(cfg.seed, 7777777));
    std::vector<double> gauss(M), chi2(M);
    for (std::size_t r = 0; r < M; ++r) {
        gauss[r] = crng.normal();
        double q = 0.0;
        for (std::size_t d = 0; d < dof; ++d) q += std::pow(crng.normal(), 2);
        chi2[r] = q;
    }
    const auto [cg, gauss_ok] = judge("control: gaussian", 0.0, gauss, sampling::derive_seed(cfg.seed, 1));
    const auto [cc, chi2_gauss] = judge("control: chi2(" + std::to_string(dof) + ")", 0.0, chi2,
                                        sampling::derive_seed(cfg.seed, 2));
    res.criteria.push_back(check_report("control: gaussian accepted", cg.skewness, 0.0, threshold, gauss_ok));
    res.criteria.push_back(check_report("control: chi2 rejected", cc.skewness, std::sqrt(8.0 / dof), threshold,
                                        !chi2_gauss));
    return res;
}

// ------------------------------------------------------------------ overlaps

namespace {

struct OverlapSample {
    std::vector<cplx> z;
    std::vector<double> o;  // O_ii / N
    std::size_t excluded = 0;
};

OverlapSample overlap_sample(const ComplexMatrix& x) {
    const auto spec = linalg::nonhermitian_eigensolve(x);
    const auto ov = observables::diagonal_overlaps(spec);
    OverlapSample s;
    s.excluded = ov.excluded;
    const double n = static_cast<double>(x.rows());
    for (const auto& rec : ov.records) {
        s.z.push_back(rec.eigenvalue);
        s.o.push_back(rec.overlap / n);
    }
    return s;
}

// Ratio Σa/Σb over replicas with the delta-method error.
std::pair<double, double> ratio_estimate(std::span<const double> a, std::span<const double> b) {
    const double sa = std::accumulate(a.begin(), a.end(), 0.0), sb = std::accumulate(b.begin(), b.end(), 0.0);
    const double R = sa / sb, mb = sb / static_cast<double>(b.size());
    std::vector<double> u(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) u[k] = (a[k] - R * b[k]) / mb;
    return {R, batch_means_stderr(u)};
}

}  // namespace

ExperimentResult run_overlap_decay(const ExperimentConfig& cfg) {
    if (cfg.start != "equilibrium") throw ConfigError("config /ensemble/start: overlaps run at equilibrium", "/ensemble/start");
    const std::size_t M = cfg.replicas, N = cfg.N;
    const double n = static_cast<double>(N);
    std::vector<OverlapSample> samples(M);
    parallel_for(M, cfg.threads, [&](std::size_t r) {
        Rng rng = replica_rng(cfg.seed, r);
        samples[r] = overlap_sample(sampling::sample_ginibre(N, rng));
    });
    ExperimentResult res = start_result(cfg);
    res.table.columns = {"check", "location", "estimate", "std_error", "reference", "pass"};

    // E[O_ii/N] against c = 1 - |σ|² in bulk windows
    const double tol = cfg.param("mean_tolerance", 0.1);
    json windows = cfg.param_node("bulk_windows") ? *cfg.param_node("bulk_windows")
                                                  : json::array({{{"v", {0.0, 0.0}}, {"radius", 0.1}}});
    for (const auto& w : windows) {
        const cplx v = complex_param(w.contains("v") ? &w["v"] : nullptr, 0.0);
        const double rad = get_or(w, "radius", 0.1);
        std::vector<double> a(M), b(M);
        for (std::size_t r = 0; r < M; ++r)
            for (std::size_t i = 0; i < samples[r].z.size(); ++i)
                if (std::abs(samples[r].z[i] - v) < rad) {
                    a[r] += samples[r].o[i];
                    b[r] += 1.0 - abs2(samples[r].z[i]);
                }
        const auto [R, se] = ratio_estimate(a, b);
        const bool ok = std::abs(R - 1.0) <= tol;
        const std::string loc = "v=" + fmt(v.real()) + (v.imag() < 0 ? "" : "+") + fmt(v.imag()) + "i r=" + fmt(rad);
        auto rep = check_report("E[O/N]/(1-|z|^2) " + loc, R, 1.0, tol, ok, "stderr " + fmt(se));
        rep.std_error = se;
        rep.M = M;
        res.table.add({"mean ratio", loc, fmt(R), fmt(se), "1", pass_text(ok)});
        res.criteria.push_back(std::move(rep));
    }

    // pair correlations of normalized overlaps on a dyadic distance grid
    const json sl = cfg.param_node("slope") ? *cfg.param_node("slope") : json::object();
    const double R_bulk = get_or(sl, "radius", 0.75), d0 = get_or(sl, "d0_sqrtN", 2.0) / std::sqrt(n);
    const std::size_t bins = get_or<std::size_t>(sl, "bins", 3);
    const double target = get_or(sl, "target", -4.0), slope_tol = get_or(sl, "tolerance", 0.5);
    double mu_sum = 0.0;
    std::size_t mu_n = 0;
    for (const auto& s : samples)
        for (std::size_t i = 0; i < s.z.size(); ++i)
            if (std::abs(s.z[i]) < R_bulk) {
                mu_sum += s.o[i] / (1.0 - abs2(s.z[i]));
                ++mu_n;
            }
    const double mu = mu_sum / static_cast<double>(std::max<std::size_t>(mu_n, 1));
    std::vector<double> centers(bins), est(bins), se(bins);
    std::vector<double> sums(M * bins, 0.0), counts(M * bins, 0.0);
    const double root2 = std::sqrt(2.0);
    parallel_for(M, cfg.threads, [&](std::size_t r) {
        const auto& s = samples[r];
        std::vector<std::size_t> bulk;
        std::vector<double> e;
        for (std::size_t i = 0; i < s.z.size(); ++i)
            if (std::abs(s.z[i]) < R_bulk) {
                bulk.push_back(i);
                e.push_back(s.o[i] / (1.0 - abs2(s.z[i])) - mu);
            }
        const double dmax = d0 * std::pow(2.0, static_cast<double>(bins) - 1.0) * root2;
        for (std::size_t p = 0; p < bulk.size(); ++p)
            for (std::size_t q = p + 1; q < bulk.size(); ++q) {
                const double d = std::abs(s.z[bulk[p]] - s.z[bulk[q]]);
                if (d >= dmax || d < d0 / root2) continue;
                const auto k = static_cast<std::size_t>(std::floor(std::log2(d * root2 / d0)));
                if (k >= bins) continue;
                sums[r * bins + k] += e[p] * e[q];
                counts[r * bins + k] += 1.0;
            }
    });
    bool all_positive = true;
    for (std::size_t k = 0; k < bins; ++k) {
        centers[k] = d0 * std::pow(2.0, static_cast<double>(k));
        std::vector<double> a(M), b(M);
        for (std::size_t r = 0; r < M; ++r) {
            a[r] = sums[r * bins + k];
            b[r] = counts[r * bins + k];
        }
        std::tie(est[k], se[k]) = ratio_estimate(a, b);
        all_positive = all_positive && est[k] > 0.0;
        res.table.add({"pair covariance", "d=" + fmt(centers[k]), fmt(est[k]), fmt(se[k]),
                       fmt(1.0 / (n * n * std::pow(centers[k], 4))), ""});
    }
    double slope = std::numeric_limits<double>::quiet_NaN();
    if (all_positive && bins >= 2) slope = dbm::loglog_slope(centers, est);
    const bool slope_ok = all_positive && std::abs(slope - target) <= slope_tol;
    res.criteria.push_back(check_report("pair covariance log-log slope", slope, target, slope_tol, slope_ok,
                                        all_positive ? "bins " + std::to_string(bins) + ", d0 " + fmt(d0)
                                                     : "a bin mean is not positive"));
    res.table.add({"slope", "", fmt(slope), "", fmt(target), pass_text(slope_ok)});

    std::size_t excluded = 0;
    for (const auto& s : samples) excluded += s.excluded;
    const double rate = static_cast<double>(excluded) / (static_cast<double>(M) * n);
    res.criteria.push_back(check_report("defective-pair exclusion rate", rate, 0.0, 1e-3, rate <= 1e-3,
                                        std::to_string(excluded) + " excluded"));
    res.table.add({"exclusion rate", "", fmt(rate), "", "0.001", pass_text(rate <= 1e-3)});

    // space-time correlation integrated over two time windows
    const json* dyn = cfg.param_node("dynamic");
    if (dyn && get_or(*dyn, "enabled", false)) {
        const double a = get_or(*dyn, "a", 0.25);
        const cplx v = complex_param(dyn->contains("v") ? &(*dyn)["v"] : nullptr, 0.0);
        const auto sw = get_or<std::vector<double>>(*dyn, "s_window", {0.0, 1.0});
        const auto tw = get_or<std::vector<double>>(*dyn, "t_window", {2.0, 3.0});
        if (sw.size() != 2 || tw.size() != 2 || !(sw[0] < sw[1] && sw[1] <= tw[0] && tw[0] < tw[1]))
            throw ConfigError("config /params/dynamic: need s1 < s2 <= t1 < t2", "/params/dynamic");
        const std::size_t P = get_or<std::size_t>(*dyn, "points", 2), Md = get_or<std::size_t>(*dyn, "replicas", 100);
        const double thr = get_or(*dyn, "threshold", 4.0);
        const auto f = observables::rescale_function(build_function(cfg.function(get_or<std::string>(*dyn, "f", "f"))), v, a, N);
        const auto g = observables::rescale_function(build_function(cfg.function(get_or<std::string>(*dyn, "g", "g"))), v, a, N);
        const double scale = std::pow(n, -2.0 * a), cv = 1.0 - abs2(v);
        // Gauss-Legendre in each window, physical time units
        std::vector<double> gx, gw;
        {
            std::vector<double> x, w;
            if (P == 1) {
                x = {0.0};
                w = {2.0};
            } else if (P == 2) {
                x = {-1.0 / std::sqrt(3.0), 1.0 / std::sqrt(3.0)};
                w = {1.0, 1.0};
            } else {
                x = {-std::sqrt(0.6), 0.0, std::sqrt(0.6)};
                w = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
            }
            for (const auto& win : {sw, tw})
                for (std::size_t k = 0; k < x.size(); ++k) {
                    const double h = 0.5 * (win[1] - win[0]) * scale;
                    gx.push_back(win[0] * scale + h * (1.0 + x[k]));
                    gw.push_back(h * w[k]);
                }
        }
        const std::size_t Q = gx.size() / 2;
        std::vector<double> q(Md);
        const sampling::TimeGrid grid(gx);
        parallel_for(Md, cfg.threads, [&](std::size_t r) {
            Rng rng = replica_rng(sampling::derive_seed(cfg.seed, 99), r);
            const auto states = sampling::sample_trajectory(sampling::sample_ginibre(N, rng), grid, rng);
            std::vector<double> A(Q), Bv(Q);
            for (std::size_t k = 0; k < 2 * Q; ++k) {
                const auto s = overlap_sample(states[k]);
                double acc = 0.0;
                for (std::size_t i = 0; i < s.z.size(); ++i)
                    acc += (k < Q ? f(s.z[i]) : g(s.z[i])) * (s.o[i] - cv);
                (k < Q ? A[k] : Bv[k - Q]) = acc;
            }
            double tot = 0.0;
            for (std::size_t i = 0; i < Q; ++i)
                for (std::size_t j = 0; j < Q; ++j) tot += gw[i] * gw[Q + j] * A[i] * Bv[j];
            q[r] = tot;
        });
        const auto pred = kernels::overlap_corr_integrated(f, g, v, sw[0] * scale, sw[1] * scale, tw[0] * scale,
                                                           tw[1] * scale, cfg.grid);
        auto rep = mean_report("integrated space-time overlap correlation", q, pred.value, pred.quadrature_error, thr);
        res.table.add({"dynamic", "a=" + fmt(a), fmt(rep.estimate), fmt(rep.std_error), fmt(rep.predicted),
                       pass_text(rep.pass)});
        res.criteria.push_back(std::move(rep));
    }
    return res;
}

// --------------------------------------------------------------------- girko

ExperimentResult run_girko_regimes(const ExperimentConfig& cfg) {
    const std::string id = cfg.param_string("function", cfg.functions.empty() ? "" : cfg.functions.front().id);
    const TestFunction base = build_function(cfg.function(id));
    const auto Ns = get_or<std::vector<std::size_t>>(cfg.params, "N_values", {64, 128, 256});
    auto Ms = get_or<std::vector<std::size_t>>(cfg.params, "replicas_per_N", {});
    if (Ms.empty()) Ms.assign(Ns.size(), cfg.replicas);
    if (Ms.size() != Ns.size() || Ns.size() < 2)
        throw ConfigError("config /params/replicas_per_N: need one count per N, at least two N", "/params/replicas_per_N");
    const double a = cfg.param("a", 0.1), delta0 = cfg.param("delta0", 0.5), delta1 = cfg.param("delta1", 0.25);
    const double T = cfg.param("T", 1e3), dens = cfg.param("node_density", 0.5), widths = cfg.param("support_widths", 4.5);
    const cplx v = complex_param(cfg.param_node("v"), 0.0);

    ExperimentResult res = start_result(cfg);
    res.table.columns = {"N", "replicas", "nodes", "eta0", "eta_c", "mean_abs_I_small", "se_I_small",
                         "mean_abs_I_micro", "se_I_micro", "mean_I_meso", "mean_J_T"};
    std::vector<double> ms(Ns.size()), ss(Ns.size()), mm(Ns.size()), sm(Ns.size());
    for (std::size_t k = 0; k < Ns.size(); ++k) {
        const std::size_t N = Ns[k], M = Ms[k];
        const auto f = observables::rescale_function(base, v, a, N);
        // midpoint cells of side ~ 1/√(dens·N) over the numerical support
        const double R = widths * f.width();
        kernels::QuadratureGrid g;
        g.scheme = kernels::QuadratureGrid::Scheme::TensorMidpoint;
        g.radial = static_cast<int>(std::ceil(2.0 * R * std::sqrt(dens * static_cast<double>(N))));
        const auto nodes = kernels::region_nodes({f.center(), R, false, false}, f.center(), 0.0, 0, g);
        const double n = static_cast<double>(N);
        const double eta0 = std::pow(n, -1.0 - delta0), eta_c = std::pow(n, -1.0 + delta1);
        std::vector<double> small(M), micro(M), meso(M), jt(M);
        parallel_for(M, cfg.threads, [&](std::size_t r) {
            Rng rng = replica_rng(sampling::derive_seed(cfg.seed, N), r);
            const auto x = sampling::sample_ginibre(N, rng);
            const auto split = observables::girko_decompose(x, f, eta0, eta_c, T, std::span<const kernels::Node>(nodes));
            // the z-grid resolves J_T, I_meso and I_small; the microscopic piece is the
            // remainder against the exact linear statistic
            const double lin = observables::linear_sum(linalg::eigenvalues(x), f);
            small[r] = split.I_small;
            micro[r] = lin - split.J_T - split.I_meso - split.I_small;
            meso[r] = split.I_meso;
            jt[r] = split.J_T;
        });
        // the pieces are integrals of Tr[G - E G]; center by the replica mean
        for (auto* piece : {&small, &micro}) {
            const double c = mean_of(*piece);
            for (double& y : *piece) y = std::abs(y - c);
        }
        ms[k] = mean_of(small);
        ss[k] = batch_means_stderr(small);
        mm[k] = mean_of(micro);
        sm[k] = batch_means_stderr(micro);
        res.table.add({std::to_string(N), std::to_string(M), std::to_string(nodes.size()), fmt(eta0), fmt(eta_c),
                       fmt(ms[k]), fmt(ss[k]), fmt(mm[k]), fmt(sm[k]), fmt(mean_of(meso)), fmt(mean_of(jt))});
    }
    auto decreasing = [&](const char* name, const std::vector<double>& m, const std::vector<double>& s) {
        bool ok = true;
        double worst = std::numeric_limits<double>::infinity();
        for (std::size_t k = 1; k < m.size(); ++k) {
            ok = ok && m[k] < m[k - 1];
            worst = std::min(worst, (m[k - 1] - m[k]) / std::hypot(s[k - 1], s[k]));
        }
        std::ostringstream d;
        d << "means";
        for (double x : m) d << ' ' << fmt(x);
        d << "; smallest step " << fmt(worst) << " sigma";
        res.criteria.push_back(check_report(std::string("E|") + name + "| decreasing in N", m.back(), 0.0, 0.0, ok, d.str()));
    };
    decreasing("I_small", ms, ss);
    decreasing("I_micro", mm, sm);

    if (const json* dec = cfg.param_node("decorrelation")) {
        const std::size_t N = get_or<std::size_t>(*dec, "N", 128), M = get_or<std::size_t>(*dec, "replicas", 400);
        const cplx z1 = complex_param(dec->contains("z1") ? &(*dec)["z1"] : nullptr, cplx{-0.25, 0.0});
        const cplx z2 = complex_param(dec->contains("z2") ? &(*dec)["z2"] : nullptr, cplx{0.25, 0.0});
        const double eta = std::pow(static_cast<double>(N), -1.0 + get_or(*dec, "delta", delta1));
        std::vector<double> y1(M), y2(M), y1b(M);
        parallel_for(M, cfg.threads, [&](std::size_t r) {
            Rng rng = replica_rng(sampling::derive_seed(cfg.seed, 424242), r);
            const auto x = sampling::sample_ginibre(N, rng);
            const double norm = 1.0 / (2.0 * static_cast<double>(N));
            const auto s1 = linalg::singular_values(x, z1), s2 = linalg::singular_values(x, z2);
            y1[r] = linalg::resolvent_trace(s1, eta).imag() * norm;
            y2[r] = linalg::resolvent_trace(s2, eta).imag() * norm;
            // control at the same z, at a comparable scale
            y1b[r] = linalg::resolvent_trace(s1, 1.5 * eta).imag() * norm;
        });
        auto corr = [M](const std::vector<double>& p, const std::vector<double>& q) {
            const double mp = mean_of(p), mq = mean_of(q);
            double c = 0.0, vp = 0.0, vq = 0.0;
            for (std::size_t r = 0; r < M; ++r) {
                c += (p[r] - mp) * (q[r] - mq);
                vp += (p[r] - mp) * (p[r] - mp);
                vq += (q[r] - mq) * (q[r] - mq);
            }
            return c / std::sqrt(vp * vq);
        };
        const double c12 = corr(y1, y2), c11 = corr(y1, y1b), bound = 3.0 / std::sqrt(static_cast<double>(M));
        res.criteria.push_back(check_report("corr Im<G^z1>, Im<G^z2> separated", c12, 0.0, bound,
                                            std::abs(c12) < bound, "|z1-z2| = " + fmt(std::abs(z1 - z2))));
        res.criteria.push_back(check_report("corr at z1 = z2 (control)", c11, 1.0, 0.5, c11 > 0.5 && c11 > std::abs(c12)));
        res.table.add({std::to_string(N), std::to_string(M), "", "", fmt(eta), "corr_separated", fmt(c12),
                       "corr_same_z", fmt(c11), "", ""});
    }
    return res;
}

// ------------------------------------------------------------------ dispatch

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    if (cfg.experiment == "covariance") return run_covariance(cfg);
    if (cfg.experiment == "variance-split") return run_variance_split(cfg);
    if (cfg.experiment == "wick") return run_wick(cfg);
    if (cfg.experiment == "overlaps") return run_overlap_decay(cfg);
    if (cfg.experiment == "girko") return run_girko_regimes(cfg);
    if (cfg.experiment == "dbm-coupling") return run_dbm_coupling(cfg);
    if (cfg.experiment == "dbm-relaxation") return run_dbm_relaxation(cfg);
    if (cfg.experiment == "hard-edge") return run_hard_edge(cfg);
    if (cfg.experiment == "kernels-selftest") {
        std::vector<std::string> groups;
        if (const json* g = cfg.param_node("groups")) groups = g->get<std::vector<std::string>>();
        auto res = run_kernels_selftest(cfg.seed, groups);
        res.manifest = make_manifest(cfg);
        return res;
    }
    throw ConfigError("config: unknown experiment '" + cfg.experiment + "'", "/experiment");
}

}  // namespace nhflow::experiments
