#pragma once

#include <string>
#include <vector>

#include "shiftrec/completion.hpp"
#include "shiftrec/io.hpp"

namespace shiftrec {

enum class Method { sc, uc };

Method method_from_string(const std::string& name);
std::string method_label(Method m);  // "SC" / "UC (log-bridge)"

// Completion-backed recommender with k = d-1: RS(alpha) is defined for every
// grid coordinate. Immutable after construction.
class Recommender {
public:
    Recommender(SparseTensor source, Method method, const ConvergenceConfig& cfg = {});

    double recommend(const Coord& alpha) const;
    const CompletionResult& completion() const { return completion_; }
    const SparseTensor& source() const { return completion_.source(); }
    Method method() const { return method_; }

private:
    CompletionResult completion_;
    Method method_;
};

struct TopN {
    Index user = 0;
    std::vector<Index> items;  // predicted value descending, ties by ascending id
};

// Ranks only items the user has not rated; d = 2 only.
TopN top_n(const Recommender& r, Index user, Index n);

// Slices gamma_1, ..., gamma_D along `axis` whose known sets coincide and
// whose known values are strictly increasing along gamma. axis defaults to
// the last dimension; other axes cover the transposed corollaries.
struct ConsensusPattern {
    Index axis = 0;  // 0 means last dimension
    std::vector<Index> gamma;
};

struct ConsensusViolation {
    Coord slice_coord;  // (d-1)-coordinate within sigma_bar(gamma)
    Index a = 0, b = 0; // gamma positions with completed(a) >= completed(b)
    double value_a = 0.0, value_b = 0.0;
};

struct ConsensusCheck {
    bool pattern_valid = false;       // Def-5 preconditions on the source
    std::string precondition_error;   // set when pattern_valid is false
    Index common_known = 0;           // |sigma(gamma)|
    Index common_unknown = 0;         // |sigma_bar(gamma)|
    std::vector<ConsensusViolation> violations;
    bool ordering_holds() const { return pattern_valid && violations.empty(); }
};

// Checks strict ordering of completed values across gamma on the common
// unknown set. Requires the recommender's completion to use k = d-1.
ConsensusCheck verify_consensus(const Recommender& r, const ConsensusPattern& pat);

// Searches a tensor for valid patterns along `axis`: slices with identical
// known sets are chained when their known values are strictly ordered
// pointwise. Returns up to max_patterns patterns with |gamma| >= 2.
std::vector<ConsensusPattern> find_consensus_patterns(const SparseTensor& t, Index axis,
                                                      Index max_patterns = 16);

struct PlantedConsensus {
    SparseTensor tensor;
    ConsensusPattern pattern;
};

// Random instance carrying a valid pattern: num_slices slices along `axis`
// share a common known set, values there are base + slice offset + jitter
// with the offsets strictly separated, and the remaining slices get
// unconstrained random entries.
PlantedConsensus plant_consensus_instance(const Shape& shape, Index axis, Index num_slices,
                                          std::uint64_t seed);

enum class DeltaMode { automatic, add, scale };

struct FairnessReport {
    Index shifted_user = 0;
    double delta = 0.0;
    DeltaMode mode = DeltaMode::add;
    std::string method_label;
    std::vector<Index> ns;
    std::vector<Index> changed_counts;     // per N: other users whose top-N changed
    double max_other_deviation = 0.0;      // over all (u' != user, item) pairs
    double max_self_deviation = 0.0;       // shifted user's predictions vs expected shift
    Index users_evaluated = 0;
};

// Rebuilds the recommender after shifting (or scaling) every rating of one
// user and compares predictions and top-N lists. d = 2 only.
FairnessReport fairness_probe(const SparseTensor& t, Index user, double delta,
                              std::span<const Index> ns, Method method,
                              const ConvergenceConfig& cfg = {},
                              DeltaMode mode = DeltaMode::automatic);

// First user whose maximum rating is scale_max - 1 (the Fig-8 style pick);
// falls back to the first user with any rating.
Index default_fairness_user(const SparseTensor& t, double scale_max);

// FairnessReport CSV: columns N, changed_user_count.
std::string fairness_csv(const FairnessReport& report);

}  // namespace shiftrec
