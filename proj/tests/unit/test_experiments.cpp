#include <nhflow/experiments.hpp>

#include "../support/generators.hpp"

#include <doctest.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

using namespace nhflow;
namespace ex = nhflow::experiments;
using ex::json;

namespace {

json small_covariance() {
    json d = ex::default_document("covariance");
    d["ensemble"]["N"] = 16;
    d["replicas"] = 24;
    d["quadrature"] = {{"radial", 12}, {"angular", 32}};
    return d;
}

std::string field_of(const json& doc) {
    try {
        ex::parse_config(doc);
    } catch (const ex::ConfigError& e) {
        return e.field();
    }
    return "<accepted>";
}

}  // namespace

TEST_CASE("every experiment has a default document that parses") {
    for (const auto& id : ex::experiment_ids()) {
        CAPTURE(id);
        const auto cfg = ex::parse_config(ex::default_document(id));
        CHECK(cfg.experiment == id);
        CHECK(cfg.N >= 2);
    }
    CHECK_THROWS_AS(ex::default_document("nope"), ex::ConfigError);
}

TEST_CASE("shipped config files spell out the built-in defaults") {
    for (const auto& id : ex::experiment_ids()) {
        CAPTURE(id);
        const auto cfg = ex::load_config(std::string(NHFLOW_SOURCE_DIR) + "/configs/" + id + ".json");
        CHECK(ex::config_hash(cfg.source) == ex::config_hash(ex::parse_config(ex::default_document(id)).source));
    }
}

TEST_CASE("config validation names the offending field") {
    json d = small_covariance();
    d["ensemble"]["colour"] = 1;
    CHECK(field_of(d) == "/ensemble/colour");
    d = small_covariance();
    d["ensemble"]["N"] = 1;
    CHECK(field_of(d) == "/ensemble/N");
    d = small_covariance();
    d["ensemble"]["N"] = "many";
    CHECK(field_of(d) == "/ensemble/N");
    d = small_covariance();
    d["ensemble"]["distribution"] = "bernoulli";
    CHECK(field_of(d) == "/ensemble/distribution");
    d = small_covariance();
    d["experiment"] = "unknown";
    CHECK(field_of(d) == "/experiment");
    d = small_covariance();
    d["functions"].push_back(d["functions"][0]);
    CHECK(field_of(d).rfind("/functions", 0) == 0);
    d = small_covariance();
    d["mesoscopic"] = {{"a", 0.7}};
    CHECK(field_of(d) == "/mesoscopic/a");
    CHECK(field_of(small_covariance()) == "<accepted>");
}

TEST_CASE("syntax errors report line and column") {
    const std::string path = "bad_config.json";
    {
        std::ofstream out(path);
        out << "{\n  \"experiment\": \"wick\",\n  \"seed\": ,\n}\n";
    }
    try {
        ex::load_config(path);
        FAIL("malformed config was accepted");
    } catch (const ex::ConfigError& e) {
        CHECK(e.line() == 3);
        CHECK(e.column() > 0);
    }
    std::remove(path.c_str());
    CHECK_THROWS_AS(ex::load_config("does/not/exist.json"), ex::ConfigError);
}

TEST_CASE("batch means standard error") {
    sampling::Rng rng(601);
    const std::size_t M = 40000;
    std::vector<double> iid(M), ar(M);
    double prev = 0.0;
    const double rho = 0.8;
    for (std::size_t k = 0; k < M; ++k) {
        iid[k] = rng.normal();
        prev = rho * prev + std::sqrt(1.0 - rho * rho) * rng.normal();
        ar[k] = prev;
    }
    CHECK(ex::batch_means_stderr(iid) == doctest::Approx(1.0 / std::sqrt(M)).epsilon(0.15));
    // AR(1) has long-run variance (1 + ρ)/(1 - ρ) = 9
    CHECK(ex::batch_means_stderr(ar) == doctest::Approx(3.0 / std::sqrt(M)).epsilon(0.2));
    CHECK_THROWS(ex::batch_means_stderr(std::vector<double>{1.0}));
    // doubling M shrinks the error by √2 within 20%
    const std::span<const double> all(iid), half(iid.data(), M / 2);
    CHECK(ex::batch_means_stderr(half) / ex::batch_means_stderr(all) == doctest::Approx(std::sqrt(2.0)).epsilon(0.2));
}

TEST_CASE("z reports and checks") {
    const auto r = ex::z_report("x", 1.3, 0.3, 100, 1.0, 0.4, 4.0);
    CHECK(r.z == doctest::Approx(0.6));
    CHECK(r.pass);
    CHECK_FALSE(ex::z_report("x", 3.5, 0.3, 100, 1.0, 0.4, 4.0).pass);
    const auto c = ex::check_report("c", 0.1, 0.0, 0.5, true);
    CHECK(std::isnan(c.z));
    CHECK(c.pass);
}

TEST_CASE("covariance estimator on independent and on identical samples") {
    sampling::Rng rng(602);
    std::vector<double> x(20000), y(20000);
    for (std::size_t k = 0; k < x.size(); ++k) {
        x[k] = 2.0 + rng.normal();
        y[k] = -1.0 + rng.normal();
    }
    const auto ind = ex::covariance_report("ind", x, y, 0.0, 0.0, 4.0);
    CHECK(ind.pass);
    const auto same = ex::covariance_report("same", x, x, 1.0, 0.0, 4.0);
    CHECK(same.estimate == doctest::Approx(1.0).epsilon(0.05));
    CHECK(same.pass);
}

TEST_CASE("standardized cumulants of normal and exponential samples") {
    sampling::Rng rng(603);
    std::vector<double> g(20000), e(20000);
    for (auto& v : g) v = rng.normal();
    for (auto& v : e) v = -std::log(1.0 - rng.uniform());
    const auto cg = ex::standardized_cumulants(g, 200, 1);
    CHECK(std::abs(cg.skewness) < 4.0 * cg.skewness_se);
    CHECK(std::abs(cg.excess_kurtosis) < 4.0 * cg.kurtosis_se);
    // exponential: skewness 2, excess kurtosis 6
    const auto ce = ex::standardized_cumulants(e, 200, 1);
    CHECK(std::abs(ce.skewness - 2.0) < 4.0 * ce.skewness_se);
    CHECK(std::abs(ce.excess_kurtosis - 6.0) < 4.0 * ce.kurtosis_se);
}

TEST_CASE("number formatting round-trips") {
    gen::for_all(500, 604, [](auto& rng) {
        const double x = rng.normal() * std::pow(10.0, gen::uniform(rng, -20.0, 20.0));
        const std::string s = ex::fmt(x);
        double back = 0.0;
        std::from_chars(s.data(), s.data() + s.size(), back);
        CHECK(back == x);
    });
    CHECK(ex::fmt(0.5) == "0.5");
}

TEST_CASE("config hash and manifest") {
    const json d = small_covariance();
    CHECK(ex::config_hash(d) == ex::config_hash(d));
    CHECK(ex::config_hash(d).size() == 16);
    json e = d;
    e["seed"] = 99;
    CHECK(ex::config_hash(e) != ex::config_hash(d));
    const auto m = ex::make_manifest(ex::parse_config(d));
    CHECK(m.to_json(false).count("timestamp") == 0);
    CHECK(m.to_json(true).count("timestamp") == 1);
    CHECK(m.version == ex::code_version());
}

TEST_CASE("CSV quoting and summary of non-finite values") {
    ex::Table t;
    t.columns = {"a", "b"};
    t.add({"x,y", "say \"hi\""});
    std::ostringstream os;
    t.write_csv(os);
    CHECK(os.str() == "a,b\n\"x,y\",\"say \"\"hi\"\"\"\n");
    CHECK_THROWS(t.add({"only one"}));
    ex::ExperimentResult r;
    r.experiment = "x";
    r.criteria.push_back(ex::check_report("c", 1.0, 0.0, 1.0, true));
    const json s = r.summary();
    CHECK(s["criteria"][0]["z"].is_null());
    CHECK(s["pass"] == true);
}

TEST_CASE("small runs are deterministic and independent of the thread count") {
    for (const auto& doc : {small_covariance(), [] {
                                json d = ex::default_document("dbm-coupling");
                                d["ensemble"]["N"] = 16;
                                d["replicas"] = 6;
                                d["params"]["i_max"] = 4;
                                d["params"]["dt"] = 1e-4;
                                return d;
                            }()}) {
        auto cfg = ex::parse_config(doc);
        CAPTURE(cfg.experiment);
        cfg.threads = 1;
        const auto a = ex::run_experiment(cfg);
        const auto b = ex::run_experiment(cfg);
        cfg.threads = 3;
        const auto c = ex::run_experiment(cfg);
        CHECK(a.table.rows == b.table.rows);
        CHECK(a.table.rows == c.table.rows);
        CHECK(a.summary().dump() == c.summary().dump());
        cfg.seed += 1;
        CHECK(ex::run_experiment(cfg).table.rows != a.table.rows);
    }
}
