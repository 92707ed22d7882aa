#include <nhflow/experiments.hpp>
#include <nhflow/sampling.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace nhflow::experiments {

double batch_means_stderr(std::span<const double> samples, std::size_t batches) {
    const std::size_t M = samples.size();
    if (M < 2) throw std::invalid_argument("batch_means_stderr: need at least two samples");
    if (batches == 0) batches = static_cast<std::size_t>(std::sqrt(static_cast<double>(M)));
    batches = std::clamp<std::size_t>(batches, 2, M);
    // Batches of equal size; the remainder (< batches samples) is dropped from the spread
    // but not from the mean.
    const std::size_t len = M / batches;
    std::vector<double> means(batches);
    for (std::size_t b = 0; b < batches; ++b) {
        double s = 0.0;
        for (std::size_t k = 0; k < len; ++k) s += samples[b * len + k];
        means[b] = s / static_cast<double>(len);
    }
    const double mu = std::accumulate(means.begin(), means.end(), 0.0) / static_cast<double>(batches);
    double ss = 0.0;
    for (double m : means) ss += (m - mu) * (m - mu);
    return std::sqrt(ss / static_cast<double>(batches - 1) / static_cast<double>(batches));
}

EstimatorReport z_report(std::string name, double estimate, double std_error, std::size_t M, double predicted,
                         double quadrature_error, double threshold) {
    EstimatorReport r;
    r.name = std::move(name);
    r.estimate = estimate;
    r.std_error = std_error;
    r.M = M;
    r.predicted = predicted;
    r.quadrature_error = quadrature_error;
    r.threshold = threshold;
    const double sigma = std::hypot(std_error, quadrature_error);
    r.z = sigma > 0.0 ? (estimate - predicted) / sigma
                      : (estimate == predicted ? 0.0 : std::numeric_limits<double>::infinity());
    r.pass = std::isfinite(r.z) && std::abs(r.z) <= threshold;
    return r;
}

EstimatorReport mean_report(std::string name, std::span<const double> samples, double predicted,
                            double quadrature_error, double threshold, std::size_t batches) {
    const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(samples.size());
    return z_report(std::move(name), mean, batch_means_stderr(samples, batches), samples.size(), predicted,
                    quadrature_error, threshold);
}

EstimatorReport check_report(std::string name, double estimate, double predicted, double tolerance, bool pass,
                             std::string detail) {
    EstimatorReport r;
    r.name = std::move(name);
    r.estimate = estimate;
    r.predicted = predicted;
    r.threshold = tolerance;
    r.z = std::numeric_limits<double>::quiet_NaN();
    r.pass = pass;
    r.detail = std::move(detail);
    return r;
}

EstimatorReport covariance_report(std::string name, std::span<const double> x, std::span<const double> y,
                                  double predicted, double quadrature_error, double threshold, std::size_t batches) {
    if (x.size() != y.size()) throw std::invalid_argument("covariance_report: size mismatch");
    const std::size_t M = x.size();
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(M);
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(M);
    // M/(M-1) removes the bias of centering by the pooled means.
    const double unbias = static_cast<double>(M) / static_cast<double>(M - 1);
    std::vector<double> c(M);
    for (std::size_t k = 0; k < M; ++k) c[k] = unbias * (x[k] - mx) * (y[k] - my);
    return mean_report(std::move(name), c, predicted, quadrature_error, threshold, batches);
}

CumulantEstimate standardized_cumulants(std::span<const double> x, std::size_t bootstrap, std::uint64_t seed) {
    const std::size_t M = x.size();
    if (M < 8) throw std::invalid_argument("standardized_cumulants: need at least 8 samples");
    auto moments = [M](auto&& at) {
        double m = 0.0;
        for (std::size_t k = 0; k < M; ++k) m += at(k);
        m /= static_cast<double>(M);
        double m2 = 0.0, m3 = 0.0, m4 = 0.0;
        for (std::size_t k = 0; k < M; ++k) {
            const double d = at(k) - m, d2 = d * d;
            m2 += d2;
            m3 += d2 * d;
            m4 += d2 * d2;
        }
        m2 /= static_cast<double>(M);
        m3 /= static_cast<double>(M);
        m4 /= static_cast<double>(M);
        return std::pair{m3 / std::pow(m2, 1.5), m4 / (m2 * m2) - 3.0};
    };
    CumulantEstimate out;
    std::tie(out.skewness, out.excess_kurtosis) = moments([&](std::size_t k) { return x[k]; });
    if (bootstrap < 2) return out;
    sampling::Rng rng(seed);
    std::vector<std::size_t> idx(M);
    double s1 = 0.0, s2 = 0.0, k1 = 0.0, k2 = 0.0;
    for (std::size_t b = 0; b < bootstrap; ++b) {
        for (auto& i : idx) i = std::min(M - 1, static_cast<std::size_t>(rng.uniform() * static_cast<double>(M)));
        const auto [sk, ku] = moments([&](std::size_t k) { return x[idx[k]]; });
        s1 += sk;
        s2 += sk * sk;
        k1 += ku;
        k2 += ku * ku;
    }
    const double B = static_cast<double>(bootstrap);
    out.skewness_se = std::sqrt(std::max(0.0, (s2 - s1 * s1 / B) / (B - 1.0)));
    out.kurtosis_se = std::sqrt(std::max(0.0, (k2 - k1 * k1 / B) / (B - 1.0)));
    return out;
}

}  // namespace nhflow::experiments
