#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "shiftrec/tensor.hpp"

namespace shiftrec {

// One coefficient per catalog subtensor, indexed by catalog position.
// The sign convention throughout: forward shifting subtracts, so
//   canonical(a) = t(a) - sum_{i: a in A_i} coeff[i]   for known a, and
//   imputed(a)   =        sum_{i: a in A_i} coeff[i]   for unknown a.
struct ShiftVector {
    Index k = 0;
    std::vector<double> coeff;
};

struct ConvergenceConfig {
    double epsilon = 1e-18;        // per-sweep squared-shift threshold
    Index max_sweeps = 10000;
};

void validate(const ConvergenceConfig& cfg);

enum class ShiftDirection { forward, inverse };

// Applies a shift vector to the known entries of t. forward subtracts the
// coefficient sum at each known coordinate, inverse adds it back.
SparseTensor apply_shift(const SparseTensor& t, const ShiftVector& s, ShiftDirection dir);

struct CanonicalResult {
    SparseTensor canonical;        // same known set as the input
    ShiftVector shifts;
    Index sweeps_used = 0;
    double final_sweep_variance = 0.0;
};

// Sweep orders are permutations of catalog positions. The default order
// processes pi groups last-to-first (for a matrix: rows, then columns) with
// anchors ascending inside each group; within one group the subtensors are
// disjoint, so only the group order affects the fixed point reached when the
// instance lacks full support.
std::vector<Index> default_sweep_order(const SubtensorCatalog& cat);
std::vector<Index> catalog_sweep_order(const SubtensorCatalog& cat);
std::vector<Index> reversed_sweep_order(const SubtensorCatalog& cat);
std::vector<Index> shuffled_sweep_order(const SubtensorCatalog& cat, std::uint64_t seed);

// Canonical Shifting Algorithm: Gauss-Seidel sweeps removing the mean of the
// known entries of every subtensor until the per-sweep squared-shift sum
// drops below cfg.epsilon. Subtensors with no known entries keep
// coefficient 0. Throws ConvergenceError when max_sweeps is exhausted.
CanonicalResult csa(const SparseTensor& t, Index k, const ConvergenceConfig& cfg = {},
                    const std::vector<Index>* sweep_order = nullptr);

// Certificate that a tensor is in canonical form: max over non-empty
// subtensors of |sum of known entries| / |known entries|. 0 for an empty
// tensor.
double residual(const SparseTensor& t, Index k);

// Max over known coordinates of |sum_{i: a in A_i} (b - a)_i|; zero (up to
// round-off) exactly when b - a is a null shift.
double max_null_shift_violation(const SparseTensor& t, const ShiftVector& a, const ShiftVector& b);

namespace detail {

// CSR of known-entry ids per catalog subtensor; shared by csa and residual.
struct SubtensorEntries {
    std::vector<Index> starts;  // size catalog.size() + 1
    std::vector<Index> entries; // entry ids grouped by subtensor

    Index count(Index sub) const { return starts[static_cast<std::size_t>(sub) + 1] - starts[static_cast<std::size_t>(sub)]; }
    std::span<const Index> ids(Index sub) const {
        return {entries.data() + starts[static_cast<std::size_t>(sub)],
                static_cast<std::size_t>(count(sub))};
    }
};

SubtensorEntries bucket_entries(const SparseTensor& t, const SubtensorCatalog& cat);

double sum_values(std::span<const Index> ids, std::span<const double> values);

}  // namespace detail

}  // namespace shiftrec
