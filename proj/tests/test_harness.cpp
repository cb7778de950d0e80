#include <cmath>
#include <chrono>

#include "doctest.h"
#include "helpers.hpp"
#include "shiftrec/harness.hpp"

using namespace shiftrec;

TEST_CASE("metric definitions against a hand-computed fixture") {
    // errors: 0.5, -1.0, 0.0, 2.0, -0.5, 1.5, -2.5, 0.25, -0.75, 1.0
    const std::vector<double> pred{3.5, 2.0, 4.0, 5.0, 1.5, 4.5, 0.5, 3.25, 2.25, 5.0};
    const std::vector<double> truth{3.0, 3.0, 4.0, 3.0, 2.0, 3.0, 3.0, 3.0, 3.0, 4.0};
    // sum of squares = 0.25+1+0+4+0.25+2.25+6.25+0.0625+0.5625+1 = 15.625
    CHECK(rmse(pred, truth) == doctest::Approx(std::sqrt(1.5625)).epsilon(1e-12));
    // sum of |e| = 0.5+1+0+2+0.5+1.5+2.5+0.25+0.75+1 = 10
    CHECK(mae(pred, truth) == doctest::Approx(1.0).epsilon(1e-12));

    CHECK_THROWS_AS(rmse({}, {}), ConfigError);
    std::vector<double> one{1.0};
    CHECK_THROWS_AS(rmse(one, {}), ConfigError);
}

namespace {

ExperimentConfig synthetic_config(SyntheticModel model, bool full_support) {
    ExperimentConfig cfg;
    cfg.source.kind = DataSource::Kind::synthetic;
    cfg.source.synthetic.shape = Shape({12, 10});
    cfg.source.synthetic.model = model;
    cfg.source.synthetic.factor_min = 0.5;
    cfg.source.synthetic.factor_max = 2.0;
    cfg.source.synthetic.noise_std = 0.0;
    cfg.source.synthetic.known_fraction = 0.6;
    cfg.source.synthetic.ensure_full_support = full_support;
    cfg.fractions = {0.5, 1.0};
    cfg.seeds = {1, 2};
    return cfg;
}

}  // namespace

TEST_CASE("noiseless additive data is recovered exactly by sc") {
    auto cfg = synthetic_config(SyntheticModel::additive, true);
    cfg.methods = {Method::sc};
    auto report = evaluate(cfg);
    REQUIRE(report.methods.size() == 1);
    for (const auto& pt : report.methods[0].points) {
        CHECK(pt.rmse_mean < 1e-6);
        CHECK(pt.mae_mean < 1e-6);
    }
}

TEST_CASE("noiseless multiplicative data is recovered exactly by uc") {
    auto cfg = synthetic_config(SyntheticModel::multiplicative, true);
    cfg.methods = {Method::uc};
    auto report = evaluate(cfg);
    for (const auto& pt : report.methods[0].points) {
        CHECK(pt.rmse_mean < 1e-6);
    }
}

TEST_CASE("csv output is byte-identical across runs and excludes timing") {
    auto cfg = synthetic_config(SyntheticModel::additive, false);
    cfg.source.synthetic.noise_std = 0.4;
    const std::string a = to_csv(evaluate(cfg));
    const std::string b = to_csv(evaluate(cfg));
    CHECK(a == b);
    CHECK(a.find("seconds") == std::string::npos);
    CHECK(a.rfind("method,fraction,seeds,rmse_mean,rmse_stddev,mae_mean,mae_stddev,sweeps_mean\n", 0) == 0);
    // one row per (method, fraction)
    CHECK(std::count(a.begin(), a.end(), '\n') == 1 + 2 * 2);
}

TEST_CASE("json report carries the uc bridge label and config echo") {
    auto cfg = synthetic_config(SyntheticModel::multiplicative, false);
    cfg.methods = {Method::uc};
    const std::string json = to_json(evaluate(cfg));
    CHECK(json.find("UC (log-bridge)") != std::string::npos);
    CHECK(json.find("\"known_fraction\"") != std::string::npos);
    CHECK(json.find("\"protocol_note\"") != std::string::npos);
    CHECK(json.find("\"seconds_mean\"") != std::string::npos);
}

TEST_CASE("evaluate on a coo file source splits deterministically") {
    auto inst = generate({Shape({15, 12}), SyntheticModel::additive, 0.5, 2.5, 0.3, 0.7}, 31);
    testutil::TempDir dir;
    const std::string path = dir.file("ds.coo");
    write_coo(inst.masked, path);

    ExperimentConfig cfg;
    cfg.source.kind = DataSource::Kind::coo_file;
    cfg.source.path = path;
    cfg.methods = {Method::sc};
    cfg.fractions = {1.0};
    cfg.seeds = {1, 2, 3};
    cfg.test_fraction = 0.2;
    auto r1 = evaluate(cfg);
    auto r2 = evaluate(cfg);
    CHECK(to_csv(r1) == to_csv(r2));
    REQUIRE(r1.methods[0].points.size() == 1);
    const auto& pt = r1.methods[0].points[0];
    CHECK(pt.seeds.size() == 3);
    const Index n = inst.masked.known_count();
    for (const auto& sr : pt.seeds) {
        CHECK(sr.test_size == n / 5);
        CHECK(sr.train_size == n - n / 5);
        CHECK(sr.rmse >= 0.0);
    }
}

TEST_CASE("per-sweep cost scales roughly linearly in the known count") {
    // doubling the known entries should cost well under ~2.5x per sweep; the
    // workload is sized so each run takes tens of milliseconds and the
    // best-of-5 ratio is not dominated by scheduler noise
    auto time_per_sweep = [](double known_fraction) {
        SyntheticSpec spec{Shape({2000, 1500}), SyntheticModel::additive, 0.5, 2.5, 0.4,
                           known_fraction};
        auto inst = generate(spec, 71);
        double best = 1e300;
        for (int rep = 0; rep < 5; ++rep) {
            const auto t0 = std::chrono::steady_clock::now();
            auto c = scca(inst.masked, 1);
            const double secs =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            best = std::min(best, secs / static_cast<double>(c.diagnostics().sweeps_used));
        }
        return best;
    };
    const double t1 = time_per_sweep(0.2);
    const double t2 = time_per_sweep(0.4);
    CHECK(t2 / t1 < 3.0);
}

TEST_CASE("config validation") {
    ExperimentConfig cfg;
    cfg.methods = {};
    CHECK_THROWS_AS(evaluate(cfg), ConfigError);
    cfg = ExperimentConfig{};
    cfg.fractions = {0.0};
    CHECK_THROWS_AS(evaluate(cfg), ConfigError);
    cfg = ExperimentConfig{};
    cfg.source.kind = DataSource::Kind::coo_file;
    cfg.source.path = "/nonexistent/path.coo";
    CHECK_THROWS_AS(evaluate(cfg), ConfigError);
}
