#pragma once

#include <nhflow/common.hpp>
#include <nhflow/kernels.hpp>
#include <nhflow/sampling.hpp>

#include <json.hpp>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace nhflow::experiments {

using json = nlohmann::json;

// Malformed or inconsistent configuration. `field` is a JSON-pointer-like path
// ("/ensemble/N"); line and column are set for syntax errors.
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& what, std::string field = {}, std::size_t line = 0, std::size_t column = 0)
        : std::runtime_error(what), field_(std::move(field)), line_(line), column_(column) {}
    const std::string& field() const noexcept { return field_; }
    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::string field_;
    std::size_t line_, column_;
};

struct FunctionSpec {
    std::string id;
    std::string shape = "gaussian";  // gaussian | angular-mode
    cplx center;
    double width = 0.25;
    double amplitude = 1.0;
    int mode = 1;  // angular-mode only
};

kernels::TestFunction build_function(const FunctionSpec& spec);

// f_{v,a}(z) = f(N^a(z - v)) and the matching time map s -> T + N^{-2a}s.
struct MesoscopicScaling {
    double a = 0.0;
    cplx v;
    double T = 0.0;

    double physical_time(double s, std::size_t N) const;
};

struct ExperimentConfig {
    std::string experiment;
    std::uint64_t seed = 1;
    std::size_t replicas = 1000;
    std::size_t batch_size = 0;  // 0: √M batches
    std::size_t threads = 1;
    std::size_t N = 128;
    std::string distribution = "complex-gaussian";
    double kappa4 = 0.0;             // two-radius only
    std::string start = "equilibrium";  // equilibrium | iid
    std::vector<double> times;
    std::vector<FunctionSpec> functions;
    kernels::QuadratureGrid grid;
    std::optional<MesoscopicScaling> mesoscopic;
    json params = json::object();  // experiment-specific knobs
    json source;                   // the validated document, hashed into the manifest

    sampling::EntryDistribution entry_distribution() const;
    const FunctionSpec& function(const std::string& id) const;  // throws ConfigError

    // params lookups with defaults; a present value of the wrong type throws ConfigError
    double param(const std::string& key, double fallback) const;
    std::size_t param_size(const std::string& key, std::size_t fallback) const;
    std::string param_string(const std::string& key, const std::string& fallback) const;
    const json* param_node(const std::string& key) const;
};

ExperimentConfig parse_config(const json& doc);
// Reads a JSON file; syntax errors carry line and column.
ExperimentConfig load_config(const std::string& path);
// Built-in defaults per experiment id (the files under configs/ spell out the same values).
ExperimentConfig default_config(const std::string& experiment);
json default_document(const std::string& experiment);
std::vector<std::string> experiment_ids();

// ---- estimators ----

// Standard error of the mean by batch means over `batches` contiguous batches
// (0: ⌊√M⌋). Requires M ≥ 2.
double batch_means_stderr(std::span<const double> samples, std::size_t batches = 0);

struct EstimatorReport {
    std::string name;
    double estimate = 0.0;
    double std_error = 0.0;
    std::size_t M = 0;
    double predicted = 0.0;
    double quadrature_error = 0.0;
    double z = 0.0;          // NaN for criteria that are not z-tests
    double threshold = 4.0;  // |z| bound, or the tolerance of a non-z check
    bool pass = false;
    std::string detail;
};

// z = (estimate - predicted)/√(stderr² + qerr²); pass when |z| ≤ threshold.
EstimatorReport z_report(std::string name, double estimate, double std_error, std::size_t M, double predicted,
                         double quadrature_error, double threshold);
// Mean of per-replica samples with batch-means error.
EstimatorReport mean_report(std::string name, std::span<const double> samples, double predicted,
                            double quadrature_error, double threshold, std::size_t batches = 0);
// A check that is not a z-score: pass is given, z is NaN.
EstimatorReport check_report(std::string name, double estimate, double predicted, double tolerance, bool pass,
                             std::string detail = {});

// Covariance of paired samples centered by their pooled means, as per-replica
// contributions whose batch means give the error.
EstimatorReport covariance_report(std::string name, std::span<const double> x, std::span<const double> y,
                                  double predicted, double quadrature_error, double threshold,
                                  std::size_t batches = 0);

// ---- outputs ----

struct RunManifest {
    std::uint64_t seed = 0;
    std::string config_hash;  // FNV-1a of the canonical config dump
    std::string version;
    std::string timestamp;    // UTC, ISO 8601

    json to_json(bool with_timestamp) const;
};

std::string code_version();
std::string config_hash(const json& doc);
RunManifest make_manifest(const ExperimentConfig& cfg);

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    void add(std::vector<std::string> row);
    void write_csv(std::ostream& os) const;
};

// Shortest round-trip text for a double, so tables are byte-stable.
std::string fmt(double x);

struct ExperimentResult {
    std::string experiment;
    RunManifest manifest;
    std::vector<EstimatorReport> criteria;
    Table table;  // one row per cell

    bool passed() const;
    // {experiment, manifest (no timestamp), criteria:[{name, estimate, predicted, z, pass, ...}]}
    json summary() const;
};

// results.csv, summary.json (deterministic) and manifest.json (with timestamp).
void write_outputs(const ExperimentResult& result, const std::string& dir);
void print_report(std::ostream& os, const ExperimentResult& result);

// ---- runners ----

ExperimentResult run_covariance(const ExperimentConfig& cfg);
ExperimentResult run_variance_split(const ExperimentConfig& cfg);
ExperimentResult run_wick(const ExperimentConfig& cfg);
ExperimentResult run_overlap_decay(const ExperimentConfig& cfg);
ExperimentResult run_girko_regimes(const ExperimentConfig& cfg);
ExperimentResult run_dbm_coupling(const ExperimentConfig& cfg);
ExperimentResult run_dbm_relaxation(const ExperimentConfig& cfg);
ExperimentResult run_hard_edge(const ExperimentConfig& cfg);

// Exact identities of the kernel and theory modules; `groups` selects among
// "identities", "gram", "free-convolution" (empty: all).
ExperimentResult run_kernels_selftest(std::uint64_t seed = 1, const std::vector<std::string>& groups = {});

ExperimentResult run_experiment(const ExperimentConfig& cfg);

// Shared pieces used by the runners and tests.

// (1/4π)∫|∇f|² over the plane.
double dirichlet_energy(const kernels::TestFunction& f, const kernels::QuadratureGrid& grid = {});

// Standardized third and fourth cumulants with bootstrap standard errors.
struct CumulantEstimate {
    double skewness = 0.0, skewness_se = 0.0;
    double excess_kurtosis = 0.0, kurtosis_se = 0.0;
};
CumulantEstimate standardized_cumulants(std::span<const double> x, std::size_t bootstrap, std::uint64_t seed);

}  // namespace nhflow::experiments
