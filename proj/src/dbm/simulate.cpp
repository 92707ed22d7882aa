#include <nhflow/dbm.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace nhflow::dbm {

void ParticleConfiguration::validate() const {
    if (x.empty()) throw std::invalid_argument("particle configuration is empty");
    if (!(x[0] > 0.0)) throw std::invalid_argument("particle configuration: x_1 must be positive");
    for (std::size_t i = 1; i < x.size(); ++i)
        if (!(x[i] > x[i - 1])) throw std::invalid_argument("particle configuration must be strictly increasing");
}

std::vector<double> ParticleConfiguration::full() const {
    const std::size_t n = x.size();
    std::vector<double> out(2 * n);
    for (std::size_t i = 0; i < n; ++i) {
        out[n + i] = x[i];
        out[n - 1 - i] = -x[i];
    }
    return out;
}

void DriverSpec::validate(std::size_t N) const {
    if (!(rate >= 0.0 && rate <= 1.0)) throw std::invalid_argument("driver rate must lie in [0, 1]");
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw std::invalid_argument("driver epsilon must lie in [0, 1]");
    if (kind == DriverKind::OverlapInduced) {
        if (correlation.size() != N) throw std::invalid_argument("overlap-induced driver needs one correlation per index");
        for (double c : correlation)
            if (!(c >= -1.0 && c <= 1.0)) throw std::invalid_argument("driver correlations must lie in [-1, 1]");
    }
}

double DriverSpec::rho(std::size_t i) const {
    switch (kind) {
        case DriverKind::Independent: return 0.0;
        case DriverKind::SharedBlock: return i < K ? std::sqrt(1.0 - epsilon * epsilon) : 0.0;
        case DriverKind::OverlapInduced: return correlation.at(i);
    }
    return 0.0;
}

void CoupledDrivers::sample(std::size_t steps, double dt, std::vector<double>& bs, std::vector<double>& br) const {
    if (!(dt > 0.0)) throw std::invalid_argument("driver sampling: dt must be positive");
    sampling::Rng rng(seed);
    bs.assign(steps * N, 0.0);
    br.assign(steps * N, 0.0);
    const double sd = std::sqrt(spec.rate * dt);
    for (std::size_t k = 0; k < steps; ++k)
        for (std::size_t i = 0; i < N; ++i) {
            const double w1 = sd * rng.normal(), w2 = sd * rng.normal();
            const double r = spec.rho(i);
            bs[k * N + i] = w1;
            br[k * N + i] = r * w1 + std::sqrt(std::max(0.0, 1.0 - r * r)) * w2;
        }
}

CoupledDrivers make_coupled_drivers(std::size_t N, std::size_t K, double epsilon, std::uint64_t seed) {
    CoupledDrivers d;
    d.spec.kind = DriverKind::SharedBlock;
    d.spec.K = K;
    d.spec.epsilon = epsilon;
    d.spec.validate(N);
    d.N = N;
    d.seed = seed;
    return d;
}

void DBMSimConfig::validate() const {
    if (!(dt > 0.0)) throw std::invalid_argument("DBM config: dt must be positive");
    if (!(T >= 0.0)) throw std::invalid_argument("DBM config: T must be nonnegative");
    if (!(guard_fraction > 0.0 && guard_fraction <= 0.5))
        throw std::invalid_argument("DBM config: guard fraction must lie in (0, 1/2]");
    if (max_retries < 0) throw std::invalid_argument("DBM config: max_retries must be nonnegative");
    for (std::size_t k = 0; k < snapshot_times.size(); ++k) {
        if (!(snapshot_times[k] >= 0.0 && snapshot_times[k] <= T))
            throw std::invalid_argument("DBM config: snapshot times must lie in [0, T]");
        if (k > 0 && !(snapshot_times[k] > snapshot_times[k - 1]))
            throw std::invalid_argument("DBM config: snapshot times must be increasing");
    }
}

void dbm_drift(std::span<const double> x, std::span<double> out) {
    const std::size_t n = x.size();
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double xi = x[i];
        double acc = out[i] + 0.5 / xi;
        for (std::size_t j = i + 1; j < n; ++j) {
            const double d = 1.0 / (xi - x[j]);
            const double s = 1.0 / (xi + x[j]);
            acc += d + s;
            out[j] += s - d;
        }
        out[i] = acc;
    }
    const double c = 1.0 / (2.0 * static_cast<double>(n));
    for (double& v : out) v *= c;
}

namespace {

// Euler-Maruyama for one or two systems sharing driver sources W1 (and W2 for the
// second system). A rejected step is split in two along a Brownian bridge, which keeps
// the driving path and refines only where particles come close.
class Stepper {
public:
    Stepper(std::size_t n, std::size_t systems, const DriverSpec& driver, const DBMSimConfig& cfg)
        : n_(n), systems_(systems), cfg_(cfg), rng_(cfg.seed), drift_(n), cand_(systems, std::vector<double>(n)) {
        scale_ = std::sqrt(driver.rate / (2.0 * static_cast<double>(n)));
        rho_.resize(n);
        sig_.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            rho_[i] = driver.rho(i);
            sig_[i] = std::sqrt(std::max(0.0, 1.0 - rho_[i] * rho_[i]));
        }
        noisy_ = driver.rate > 0.0;
    }

    void advance(std::vector<std::vector<double>>& xs, double h, double t) {
        std::vector<double> w1(n_), w2(systems_ > 1 ? n_ : 0);
        const double sd = std::sqrt(h);
        if (noisy_) {
            for (auto& w : w1) w = sd * rng_.normal();
            for (auto& w : w2) w = sd * rng_.normal();
        }
        step(xs, h, w1, w2, 0, t);
        ++steps_;
    }

    std::size_t steps() const { return steps_; }
    std::size_t halvings() const { return halvings_; }

private:
    bool trial(const std::vector<double>& x, double h, const std::vector<double>& w1, const std::vector<double>& w2,
               std::size_t sys, std::vector<double>& out) {
        dbm_drift(x, drift_);
        const double inv2n = 1.0 / (2.0 * static_cast<double>(n_));
        for (std::size_t i = 0; i < n_; ++i) {
            const double left = i == 0 ? 2.0 * x[0] : x[i] - x[i - 1];
            const double gap = i + 1 < n_ ? std::min(left, x[i + 1] - x[i]) : left;
            const double cap = cfg_.guard_fraction * gap;
            const double d = std::clamp(drift_[i] * h, -cap, cap);
            double b = 0.0;
            if (noisy_) b = sys == 0 ? w1[i] : rho_[i] * w1[i] + sig_[i] * w2[i];
            if (i == 0) {
                // Near the origin x_1 sees its mirror like a Bessel process of dimension
                // 1 + 1/rate ≥ 2 and gets arbitrarily close to 0. Milstein on q = x_1² gives
                // q' = (x_1 + σΔb + rh)² + h/(2N), r = drift minus 1/(4N x_1), which is
                // positive by construction and unbiased in log x_1 to second order.
                const double r = drift_[0] - 0.5 * inv2n / x[0];
                const double rh = std::clamp(r * h, -cap, cap);
                const double y = x[0] + scale_ * b + rh;
                out[0] = std::sqrt(y * y + inv2n * h);
                continue;
            }
            out[i] = x[i] + d + scale_ * b;
        }
        // Beyond ordering, a trial that halves any gap is rejected and refined.
        const double keep = 0.5;
        for (std::size_t i = 1; i < n_; ++i) {
            const double g = out[i] - out[i - 1];
            if (!(g > 0.0) || g < keep * (x[i] - x[i - 1])) return false;
        }
        return true;
    }

    // Sub-intervals longer than 0.25·N·g_min² for the current state are split before any
    // trial: there the noise on the closest pair is at most half its gap and the repulsion
    // is resolved. Such splits are not retries; only rejected trials count toward the limit.
    void step(std::vector<std::vector<double>>& xs, double h, const std::vector<double>& w1,
              const std::vector<double>& w2, int depth, double t) {
        double gmin = std::numeric_limits<double>::infinity();
        for (const auto& x : xs)
            for (std::size_t i = 1; i < n_; ++i) gmin = std::min(gmin, x[i] - x[i - 1]);
        if (h > 0.25 * static_cast<double>(n_) * gmin * gmin) {
            split(xs, h, w1, w2, depth, t);
            return;
        }
        bool ok = true;
        for (std::size_t s = 0; s < systems_ && ok; ++s) ok = trial(xs[s], h, w1, w2, s, cand_[s]);
        if (ok) {
            for (std::size_t s = 0; s < systems_; ++s) xs[s].swap(cand_[s]);
            return;
        }
        if (depth >= cfg_.max_retries) {
            std::ostringstream msg;
            msg << "simulate_dbm: ordering violated after " << depth << " halvings at t = " << t << " (step "
                << steps_ << ", dt = " << h << ")";
            throw NumericalError(msg.str(), static_cast<std::ptrdiff_t>(steps_));
        }
        ++halvings_;
        split(xs, h, w1, w2, depth + 1, t);
    }

    void split(std::vector<std::vector<double>>& xs, double h, const std::vector<double>& w1,
               const std::vector<double>& w2, int depth, double t) {
        // bridge midpoint: W(h/2) = W(h)/2 + (√h/2)ξ
        const double sd = 0.5 * std::sqrt(h);
        std::vector<double> a1(w1.size()), b1(w1.size()), a2(w2.size()), b2(w2.size());
        for (std::size_t i = 0; i < w1.size(); ++i) {
            a1[i] = noisy_ ? 0.5 * w1[i] + sd * rng_.normal() : 0.0;
            b1[i] = w1[i] - a1[i];
        }
        for (std::size_t i = 0; i < w2.size(); ++i) {
            a2[i] = noisy_ ? 0.5 * w2[i] + sd * rng_.normal() : 0.0;
            b2[i] = w2[i] - a2[i];
        }
        step(xs, 0.5 * h, a1, a2, depth, t);
        step(xs, 0.5 * h, b1, b2, depth, t + 0.5 * h);
    }

    std::size_t n_, systems_;
    DBMSimConfig cfg_;
    sampling::Rng rng_;
    std::vector<double> drift_;
    std::vector<std::vector<double>> cand_;
    std::vector<double> rho_, sig_;
    double scale_ = 0.0;
    bool noisy_ = true;
    std::size_t steps_ = 0, halvings_ = 0;
};

template <class Record>
void run_schedule(const DBMSimConfig& cfg, Stepper& stepper, std::vector<std::vector<double>>& xs, Record&& record) {
    std::vector<double> targets = cfg.snapshot_times;
    if (targets.empty() || targets.back() < cfg.T) targets.push_back(cfg.T);
    double t = 0.0;
    for (double target : targets) {
        while (target - t > 1e-14 * std::max(1.0, target)) {
            const double h = std::min(cfg.dt, target - t);
            stepper.advance(xs, h, t);
            t += h;
            if (target - t < 1e-12 * cfg.dt) t = target;
        }
        t = target;
        record(t);
    }
}

}  // namespace

Trajectory simulate_dbm(const ParticleConfiguration& init, const DriverSpec& driver, const DBMSimConfig& cfg) {
    init.validate();
    driver.validate(init.size());
    cfg.validate();
    Stepper stepper(init.size(), 1, driver, cfg);
    std::vector<std::vector<double>> xs{init.x};
    Trajectory traj;
    run_schedule(cfg, stepper, xs, [&](double t) {
        traj.times.push_back(t);
        traj.snapshots.push_back({xs[0]});
    });
    traj.steps = stepper.steps();
    traj.halvings = stepper.halvings();
    return traj;
}

CoupledTrajectory simulate_coupled(const ParticleConfiguration& init_s, const ParticleConfiguration& init_r,
                                   const DriverSpec& driver, const DBMSimConfig& cfg) {
    init_s.validate();
    init_r.validate();
    if (init_s.size() != init_r.size()) throw std::invalid_argument("simulate_coupled: systems differ in size");
    driver.validate(init_s.size());
    cfg.validate();
    Stepper stepper(init_s.size(), 2, driver, cfg);
    std::vector<std::vector<double>> xs{init_s.x, init_r.x};
    CoupledTrajectory traj;
    run_schedule(cfg, stepper, xs, [&](double t) {
        traj.times.push_back(t);
        traj.s.push_back({xs[0]});
        traj.r.push_back({xs[1]});
    });
    traj.steps = stepper.steps();
    traj.halvings = stepper.halvings();
    return traj;
}

}  // namespace nhflow::dbm
