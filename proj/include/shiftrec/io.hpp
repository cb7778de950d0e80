#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "shiftrec/completion.hpp"
#include "shiftrec/tensor.hpp"

namespace shiftrec {

// COO text format: header line `# shape n1 n2 ... nd`, then one line per
// known entry with 1-based indices followed by the value. Lines beginning
// with `#` are comments. Readers accept gzip-compressed files transparently.
SparseTensor read_coo(const std::string& path);
void write_coo(const SparseTensor& t, const std::string& path);  // "-" writes to stdout
std::string coo_to_string(const SparseTensor& t);

// Full-grid COO of a completion, streamed cell by cell (nothing dense is
// materialized). "-" writes to stdout.
void write_completed_coo(const CompletionResult& c, const std::string& path);

struct RatingScale {
    double min_value = 1.0;
    double max_value = 5.0;
    double step = 1.0;
};

enum class MovieLensFlavor { ml100k, ml1m, ml10m };

MovieLensFlavor movielens_flavor_from_string(const std::string& name);
RatingScale movielens_scale(MovieLensFlavor flavor);

// users x items matrix with dense 1-based indices; external ids are remapped
// in ascending order.
struct RatingsDataset {
    SparseTensor matrix;
    std::vector<Index> user_ids;  // dense index - 1 -> external id
    std::vector<Index> item_ids;
    RatingScale scale;

    Index user_count() const { return matrix.shape().extent(0); }
    Index item_count() const { return matrix.shape().extent(1); }
    Index rating_count() const { return matrix.known_count(); }
    double sparsity() const {
        return 1.0 - static_cast<double>(rating_count()) /
                         static_cast<double>(matrix.shape().cells());
    }
};

// ml100k: tab-separated `user item rating timestamp`;
// ml1m/ml10m: `UserID::MovieID::Rating::Timestamp`. Timestamps are
// discarded. Malformed lines, off-scale ratings, and duplicate (user,item)
// pairs raise ConfigError naming the line.
RatingsDataset parse_movielens(const std::string& path, MovieLensFlavor flavor);

enum class SyntheticModel { additive, multiplicative };

// additive composes sum_j c_j(alpha_j) with c_j ~ U(factor_min, factor_max)
// and Gaussian noise added; multiplicative composes the product with noise
// applied as exp(N(0, noise_std)). Discretization rounds to the scale
// lattice and clamps. ensure_full_support keeps every cell with some
// coordinate at its extent known, which makes each interior unknown the free
// corner of a hypercube of knowns.
struct SyntheticSpec {
    Shape shape;
    SyntheticModel model = SyntheticModel::additive;
    double factor_min = 0.5;
    double factor_max = 2.5;
    double noise_std = 0.0;
    double known_fraction = 0.3;
    std::optional<RatingScale> discretize;
    bool ensure_full_support = false;
};

struct SyntheticInstance {
    SparseTensor masked;
    SparseTensor truth;  // full grid
};

// Deterministic for a given (spec, seed); lowering known_fraction with
// everything else fixed produces nested known sets.
SyntheticInstance generate(const SyntheticSpec& spec, std::uint64_t seed);

struct SplitSpec {
    double test_fraction = 0.2;
    std::vector<double> sweep_fractions = {1.0};
    std::uint64_t seed = 1;
};

class TrainTestSplit {
public:
    TrainTestSplit(Shape shape, std::vector<Index> train_flat, std::vector<double> train_values,
                   std::vector<std::pair<Coord, double>> test);

    // floor(fraction * train size) entries, nested across fractions.
    SparseTensor train_at(double sweep_fraction) const;
    SparseTensor train() const { return train_at(1.0); }
    const std::vector<std::pair<Coord, double>>& test() const { return test_; }
    Index train_size() const;

private:
    Shape shape_;
    std::vector<Index> train_flat_;  // shuffled order; prefixes form the sweeps
    std::vector<double> train_values_;
    std::vector<std::pair<Coord, double>> test_;
};

// Uniform holdout of floor(test_fraction * known) entries. Degenerate splits
// that leave a row or column without training ratings are permitted; count
// them with cold_slice_count.
TrainTestSplit split(const SparseTensor& t, const SplitSpec& spec);
TrainTestSplit split(const RatingsDataset& ds, const SplitSpec& spec);

// Number of index-(dim) slices with no known entries (e.g. users or items
// with zero training ratings for a matrix).
Index cold_slice_count(const SparseTensor& t, Index dim);

}  // namespace shiftrec
