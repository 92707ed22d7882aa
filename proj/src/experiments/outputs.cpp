#include <nhflow/experiments.hpp>

#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#ifndef NHFLOW_VERSION
#define NHFLOW_VERSION "unknown"
#endif

namespace nhflow::experiments {

std::string code_version() { return NHFLOW_VERSION; }

std::string config_hash(const json& doc) {
    // dump() sorts object keys, so equal documents hash equally
    const std::string text = doc.dump();
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

json RunManifest::to_json(bool with_timestamp) const {
    json j = {{"seed", seed}, {"config_hash", config_hash}, {"version", version}};
    if (with_timestamp) j["timestamp"] = timestamp;
    return j;
}

RunManifest make_manifest(const ExperimentConfig& cfg) {
    RunManifest m;
    m.seed = cfg.seed;
    m.config_hash = config_hash(cfg.source);
    m.version = code_version();
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    m.timestamp = os.str();
    return m;
}

std::string fmt(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

void Table::add(std::vector<std::string> row) {
    if (row.size() != columns.size()) throw std::invalid_argument("Table::add: row width does not match the header");
    rows.push_back(std::move(row));
}

namespace {

void csv_field(std::ostream& os, const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) {
        os << s;
        return;
    }
    os << '"';
    for (char c : s) {
        if (c == '"') os << '"';
        os << c;
    }
    os << '"';
}

json number_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

}  // namespace

void Table::write_csv(std::ostream& os) const {
    auto line = [&os](const std::vector<std::string>& r) {
        for (std::size_t k = 0; k < r.size(); ++k) {
            if (k) os << ',';
            csv_field(os, r[k]);
        }
        os << '\n';
    };
    line(columns);
    for (const auto& r : rows) line(r);
}

bool ExperimentResult::passed() const {
    for (const auto& c : criteria)
        if (!c.pass) return false;
    return !criteria.empty();
}

json ExperimentResult::summary() const {
    json crit = json::array();
    for (const auto& c : criteria) {
        crit.push_back({{"name", c.name},
                        {"estimate", number_or_null(c.estimate)},
                        {"std_error", number_or_null(c.std_error)},
                        {"M", c.M},
                        {"predicted", number_or_null(c.predicted)},
                        {"quadrature_error", number_or_null(c.quadrature_error)},
                        {"z", number_or_null(c.z)},
                        {"threshold", c.threshold},
                        {"pass", c.pass},
                        {"detail", c.detail}});
    }
    return {{"experiment", experiment}, {"manifest", manifest.to_json(false)}, {"criteria", crit}, {"pass", passed()}};
}

void write_outputs(const ExperimentResult& result, const std::string& dir) {
    std::filesystem::create_directories(dir);
    const std::filesystem::path base(dir);
    auto open = [&](const char* name) {
        std::ofstream os(base / name);
        if (!os) throw std::runtime_error("cannot write " + (base / name).string());
        return os;
    };
    {
        auto os = open("results.csv");
        result.table.write_csv(os);
    }
    {
        auto os = open("summary.json");
        os << result.summary().dump(2) << '\n';
    }
    {
        auto os = open("manifest.json");
        os << result.manifest.to_json(true).dump(2) << '\n';
    }
}

void print_report(std::ostream& os, const ExperimentResult& result) {
    os << result.experiment << "  seed=" << result.manifest.seed << "  config=" << result.manifest.config_hash
       << "  version=" << result.manifest.version << '\n';
    for (const auto& c : result.criteria) {
        os << "  " << (c.pass ? "ok  " : "FAIL") << "  " << c.name << ": estimate " << std::setprecision(6)
           << c.estimate;
        if (std::isfinite(c.z)) {
            os << " ± " << std::setprecision(3) << c.std_error << ", predicted " << std::setprecision(6) << c.predicted
               << " (qerr " << std::setprecision(2) << c.quadrature_error << "), z = " << std::setprecision(3) << c.z
               << " (|z| ≤ " << c.threshold << ')';
        } else {
            os << ", target " << std::setprecision(6) << c.predicted << " (tol " << c.threshold << ')';
        }
        if (!c.detail.empty()) os << "  [" << c.detail << ']';
        os << '\n';
    }
    os << (result.passed() ? "PASS" : "FAIL") << '\n';
}

}  // namespace nhflow::experiments
