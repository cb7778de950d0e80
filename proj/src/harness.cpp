#include "shiftrec/harness.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>

#include "json.hpp"
#include "shiftrec/ucbridge.hpp"

namespace shiftrec {

double rmse(std::span<const double> predicted, std::span<const double> actual) {
    if (predicted.size() != actual.size()) throw ConfigError("metric input length mismatch");
    if (predicted.empty()) throw ConfigError("cannot compute RMSE over zero entries");
    double sum = 0.0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        const double e = predicted[i] - actual[i];
        sum += e * e;
    }
    return std::sqrt(sum / static_cast<double>(predicted.size()));
}

double mae(std::span<const double> predicted, std::span<const double> actual) {
    if (predicted.size() != actual.size()) throw ConfigError("metric input length mismatch");
    if (predicted.empty()) throw ConfigError("cannot compute MAE over zero entries");
    double sum = 0.0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        sum += std::abs(predicted[i] - actual[i]);
    }
    return sum / static_cast<double>(predicted.size());
}

namespace {

struct Stats {
    double mean = 0.0, stddev = 0.0;
};

Stats stats_of(const std::vector<double>& xs) {
    Stats s;
    if (xs.empty()) return s;
    for (double x : xs) s.mean += x;
    s.mean /= static_cast<double>(xs.size());
    if (xs.size() > 1) {
        double acc = 0.0;
        for (double x : xs) acc += (x - s.mean) * (x - s.mean);
        s.stddev = std::sqrt(acc / static_cast<double>(xs.size() - 1));
    }
    return s;
}

CompletionResult run_method(const SparseTensor& train, Method m, Index k,
                            const ConvergenceConfig& cfg) {
    return m == Method::sc ? scca(train, k, cfg) : ucca(train, k, cfg);
}

SeedResult score(const SparseTensor& train, const std::vector<std::pair<Coord, double>>& test,
                 Method m, Index k, const ConvergenceConfig& cfg) {
    SeedResult r;
    const auto t0 = std::chrono::steady_clock::now();
    const CompletionResult completed = run_method(train, m, k, cfg);
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::vector<double> pred, actual;
    pred.reserve(test.size());
    actual.reserve(test.size());
    for (const auto& [c, v] : test) {
        pred.push_back(completed.value(c));
        actual.push_back(v);
    }
    r.rmse = rmse(pred, actual);
    r.mae = mae(pred, actual);
    r.sweeps = completed.diagnostics().sweeps_used;
    r.train_size = train.known_count();
    r.test_size = static_cast<Index>(test.size());
    r.cold_users = cold_slice_count(train, 1);
    r.cold_items = train.dim() == 2 ? cold_slice_count(train, 2) : 0;
    return r;
}

void validate(const ExperimentConfig& cfg) {
    if (cfg.methods.empty()) throw ConfigError("no methods configured");
    if (cfg.fractions.empty()) throw ConfigError("no sweep fractions configured");
    if (cfg.seeds.empty()) throw ConfigError("no seeds configured");
    for (double f : cfg.fractions) {
        if (!(f > 0.0) || f > 1.0) throw ConfigError("sweep fractions must be in (0, 1]");
    }
    shiftrec::validate(cfg.convergence);
}

}  // namespace

ExperimentReport evaluate(const ExperimentConfig& config) {
    validate(config);
    ExperimentReport report;
    report.config = config;

    const bool synthetic = config.source.kind == DataSource::Kind::synthetic;
    SparseTensor dataset;
    if (config.source.kind == DataSource::Kind::coo_file) {
        dataset = read_coo(config.source.path);
    } else if (config.source.kind == DataSource::Kind::movielens_file) {
        dataset = parse_movielens(config.source.path, config.source.flavor).matrix;
    }
    const Index d = synthetic ? config.source.synthetic.shape.dim() : dataset.dim();
    const Index k = config.k == 0 ? d - 1 : config.k;

    report.protocol_note =
        synthetic ? "synthetic: train(f) = generator mask at known_fraction*f (nested); fixed "
                    "test set = complement of the full-fraction known set, scored against the "
                    "ground truth"
                  : "file: per seed, fixed holdout of test_fraction of the known entries; the "
                    "training set is subsampled to each sweep fraction";

    for (Method m : config.methods) {
        MethodResult mr;
        mr.method = m;
        mr.label = method_label(m);
        for (double f : config.fractions) {
            SweepPointResult pt;
            pt.fraction = f;
            std::vector<double> rmses, maes, sweeps, secs;
            for (std::uint64_t seed : config.seeds) {
                SeedResult sr;
                if (synthetic) {
                    const SyntheticSpec& base = config.source.synthetic;
                    SyntheticSpec at_f = base;
                    at_f.known_fraction = base.known_fraction * f;
                    const SyntheticInstance inst = generate(at_f, seed);
                    const SyntheticInstance full = generate(base, seed);
                    std::vector<std::pair<Coord, double>> test;
                    Coord c(static_cast<std::size_t>(d), 1);
                    do {
                        if (!full.masked.is_known(c)) test.emplace_back(c, *full.truth.value_at(c));
                    } while (base.shape.next_coord(c));
                    sr = score(inst.masked, test, m, k, config.convergence);
                } else {
                    SplitSpec sp;
                    sp.test_fraction = config.test_fraction;
                    sp.sweep_fractions = config.fractions;
                    sp.seed = seed;
                    const TrainTestSplit tts = split(dataset, sp);
                    sr = score(tts.train_at(f), tts.test(), m, k, config.convergence);
                }
                sr.seed = seed;
                rmses.push_back(sr.rmse);
                maes.push_back(sr.mae);
                sweeps.push_back(static_cast<double>(sr.sweeps));
                secs.push_back(sr.seconds);
                pt.seeds.push_back(sr);
            }
            const Stats rs = stats_of(rmses), ms = stats_of(maes);
            pt.rmse_mean = rs.mean;
            pt.rmse_stddev = rs.stddev;
            pt.mae_mean = ms.mean;
            pt.mae_stddev = ms.stddev;
            pt.sweeps_mean = stats_of(sweeps).mean;
            pt.seconds_mean = stats_of(secs).mean;
            mr.points.push_back(std::move(pt));
        }
        report.methods.push_back(std::move(mr));
    }
    return report;
}

namespace {

nlohmann::json config_json(const ExperimentConfig& c) {
    nlohmann::json j;
    switch (c.source.kind) {
        case DataSource::Kind::coo_file:
            j["source"] = {{"kind", "coo"}, {"path", c.source.path}};
            break;
        case DataSource::Kind::movielens_file: {
            const char* fl = c.source.flavor == MovieLensFlavor::ml100k  ? "ml100k"
                             : c.source.flavor == MovieLensFlavor::ml1m ? "ml1m"
                                                                        : "ml10m";
            j["source"] = {{"kind", "movielens"}, {"path", c.source.path}, {"flavor", fl}};
            break;
        }
        case DataSource::Kind::synthetic: {
            const SyntheticSpec& s = c.source.synthetic;
            nlohmann::json sj;
            sj["shape"] = s.shape.extents();
            sj["model"] = s.model == SyntheticModel::additive ? "additive" : "multiplicative";
            sj["factor_min"] = s.factor_min;
            sj["factor_max"] = s.factor_max;
            sj["noise_std"] = s.noise_std;
            sj["known_fraction"] = s.known_fraction;
            sj["ensure_full_support"] = s.ensure_full_support;
            if (s.discretize) {
                sj["discretize"] = {{"min", s.discretize->min_value},
                                    {"max", s.discretize->max_value},
                                    {"step", s.discretize->step}};
            }
            j["source"] = {{"kind", "synthetic"}, {"spec", sj}};
            break;
        }
    }
    std::vector<std::string> methods;
    for (Method m : c.methods) methods.push_back(m == Method::sc ? "sc" : "uc");
    j["methods"] = methods;
    j["k"] = c.k;
    j["epsilon"] = c.convergence.epsilon;
    j["max_sweeps"] = c.convergence.max_sweeps;
    j["test_fraction"] = c.test_fraction;
    j["fractions"] = c.fractions;
    j["seeds"] = c.seeds;
    return j;
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

}  // namespace

std::string to_json(const ExperimentReport& report) {
    nlohmann::json j;
    j["config"] = config_json(report.config);
    j["protocol_note"] = report.protocol_note;
    nlohmann::json methods = nlohmann::json::array();
    for (const MethodResult& mr : report.methods) {
        nlohmann::json mj;
        mj["method"] = mr.method == Method::sc ? "sc" : "uc";
        mj["label"] = mr.label;
        nlohmann::json points = nlohmann::json::array();
        for (const SweepPointResult& pt : mr.points) {
            nlohmann::json pj;
            pj["fraction"] = pt.fraction;
            pj["rmse_mean"] = pt.rmse_mean;
            pj["rmse_stddev"] = pt.rmse_stddev;
            pj["mae_mean"] = pt.mae_mean;
            pj["mae_stddev"] = pt.mae_stddev;
            pj["sweeps_mean"] = pt.sweeps_mean;
            pj["seconds_mean"] = pt.seconds_mean;
            nlohmann::json seeds = nlohmann::json::array();
            for (const SeedResult& sr : pt.seeds) {
                seeds.push_back({{"seed", sr.seed},
                                 {"rmse", sr.rmse},
                                 {"mae", sr.mae},
                                 {"sweeps", sr.sweeps},
                                 {"seconds", sr.seconds},
                                 {"train_size", sr.train_size},
                                 {"test_size", sr.test_size},
                                 {"cold_users", sr.cold_users},
                                 {"cold_items", sr.cold_items}});
            }
            pj["seeds"] = std::move(seeds);
            points.push_back(std::move(pj));
        }
        mj["points"] = std::move(points);
        methods.push_back(std::move(mj));
    }
    j["methods"] = std::move(methods);
    return j.dump(2) + "\n";
}

std::string to_csv(const ExperimentReport& report) {
    std::string out = "method,fraction,seeds,rmse_mean,rmse_stddev,mae_mean,mae_stddev,sweeps_mean\n";
    for (const MethodResult& mr : report.methods) {
        for (const SweepPointResult& pt : mr.points) {
            out += (mr.method == Method::sc ? "sc" : "uc");
            out += "," + fmt(pt.fraction);
            out += "," + std::to_string(pt.seeds.size());
            out += "," + fmt(pt.rmse_mean);
            out += "," + fmt(pt.rmse_stddev);
            out += "," + fmt(pt.mae_mean);
            out += "," + fmt(pt.mae_stddev);
            out += "," + fmt(pt.sweeps_mean);
            out += "\n";
        }
    }
    return out;
}

}  // namespace shiftrec
