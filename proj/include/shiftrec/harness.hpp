#pragma once

#include <span>
#include <string>
#include <vector>

#include "shiftrec/io.hpp"
#include "shiftrec/recsys.hpp"

namespace shiftrec {

double rmse(std::span<const double> predicted, std::span<const double> actual);
double mae(std::span<const double> predicted, std::span<const double> actual);

struct DataSource {
    enum class Kind { coo_file, movielens_file, synthetic };
    Kind kind = Kind::synthetic;
    std::string path;
    MovieLensFlavor flavor = MovieLensFlavor::ml100k;
    SyntheticSpec synthetic;
};

struct ExperimentConfig {
    DataSource source;
    std::vector<Method> methods = {Method::sc, Method::uc};
    Index k = 0;  // 0 resolves to d-1
    ConvergenceConfig convergence;
    double test_fraction = 0.2;
    std::vector<double> fractions = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
};

struct SeedResult {
    std::uint64_t seed = 0;
    double rmse = 0.0;
    double mae = 0.0;
    Index sweeps = 0;
    double seconds = 0.0;
    Index train_size = 0;
    Index test_size = 0;
    Index cold_users = 0;
    Index cold_items = 0;
};

struct SweepPointResult {
    double fraction = 1.0;
    double rmse_mean = 0.0, rmse_stddev = 0.0;
    double mae_mean = 0.0, mae_stddev = 0.0;
    double sweeps_mean = 0.0;
    double seconds_mean = 0.0;
    std::vector<SeedResult> seeds;
};

struct MethodResult {
    Method method = Method::sc;
    std::string label;
    std::vector<SweepPointResult> points;
};

struct ExperimentReport {
    ExperimentConfig config;
    std::vector<MethodResult> methods;
    std::string protocol_note;
};

// File sources: per seed, hold out test_fraction of the known entries, then
// subsample the training set to each sweep fraction (the test set stays
// fixed across fractions). Synthetic sources: the known set at sweep
// fraction f is the generator's mask at known_fraction * f (nested by
// construction), and the fixed test set is the complement of the
// full-fraction known set, scored against the ground truth.
ExperimentReport evaluate(const ExperimentConfig& config);

std::string to_json(const ExperimentReport& report);

// Deterministic: excludes timing, formats numbers with %.10g.
std::string to_csv(const ExperimentReport& report);

}  // namespace shiftrec
