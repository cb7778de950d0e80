#pragma once

#include <memory>
#include <span>
#include <vector>

#include "shiftrec/shift.hpp"
#include "shiftrec/tensor.hpp"

namespace shiftrec {

// Known entries pass through untouched; unknown entries evaluate from the
// shift coefficients. For the unit-consistent bridge the coefficients live in
// log space and imputations are exponentiated.
enum class ValueDomain { linear, log_positive };

struct CompletionDiagnostics {
    Index sweeps_used = 0;
    double final_sweep_variance = 0.0;
    double residual = 0.0;  // canonical-form certificate after convergence
};

class CompletionResult {
public:
    CompletionResult() = default;
    CompletionResult(SparseTensor source, ShiftVector shifts, CompletionDiagnostics diag,
                     ValueDomain domain = ValueDomain::linear);

    const SparseTensor& source() const { return *source_; }
    const ShiftVector& shifts() const { return shifts_; }
    Index k() const { return shifts_.k; }
    ValueDomain domain() const { return domain_; }
    const CompletionDiagnostics& diagnostics() const { return diag_; }
    const SubtensorCatalog& subtensor_catalog() const { return *catalog_; }

    // Original value at known coordinates (bit-exact), imputation otherwise.
    double value(std::span<const Index> coord) const;
    double value(const Coord& coord) const { return value(std::span<const Index>(coord)); }

    bool is_imputed(std::span<const Index> coord) const { return !source_->is_known(coord); }

    // Fully known tensor over the whole grid. Desk-scale only; everything
    // else in the library evaluates lazily through value().
    SparseTensor materialize() const;

private:
    std::shared_ptr<const SparseTensor> source_;
    std::shared_ptr<const SubtensorCatalog> catalog_;
    ShiftVector shifts_;
    CompletionDiagnostics diag_;
    ValueDomain domain_ = ValueDomain::linear;
};

// Shift-Consistent Completion Algorithm: canonical shifting followed by
// imputing every unknown coordinate as the sum of the coefficients of the
// subtensors containing it.
CompletionResult scca(const SparseTensor& t, Index k, const ConvergenceConfig& cfg = {},
                      const std::vector<Index>* sweep_order = nullptr);

// Matrix special case, scca(t, 1) with d == 2 enforced.
CompletionResult mca(const SparseTensor& t, const ConvergenceConfig& cfg = {});

// Witness that unknown `alpha` is the free corner of a hypercube whose other
// 2^d - 1 corners are known: corners are alpha + delta * offset over all
// nonzero delta in {0,1}^d.
struct SupportCertificate {
    Coord alpha;
    std::vector<Index> offset;  // every component nonzero
    std::vector<Coord> corners() const;
};

struct SupportOptions {
    Index candidate_budget = 10000;  // offsets tried per unknown entry
};

struct SupportReport {
    bool fully_supported = false;
    std::vector<SupportCertificate> certificates;  // one per supported unknown, row-major
    std::vector<Coord> unsupported;                // candidate space exhausted, no witness
    std::vector<Coord> inconclusive;               // budget hit before exhaustion
};

// Searches offsets per unknown entry by increasing max-norm, then by
// lexicographic absolute value with positive components first; the first
// witness found is recorded.
SupportReport check_support(const SparseTensor& t, const SupportOptions& opt = {});

// Max grid deviation |T (-) scca(t) - scca(T (-) t)| for one shift vector.
double shift_consistency_deviation(const SparseTensor& t, const ShiftVector& T,
                                   const ConvergenceConfig& cfg = {});

// Randomized shift-invariance check: draws `trials` shift vectors (coefficients for
// subtensors without known entries stay zero, since shifting those never
// touches a known entry) and returns the worst deviation seen.
double verify_shift_consistency(const SparseTensor& t, Index k, Index trials, std::uint64_t seed,
                                const ConvergenceConfig& cfg = {});

struct UniquenessReport {
    double max_completion_deviation = 0.0;   // pairwise, over the whole grid
    double max_null_shift_violation = 0.0;   // shift-vector differences vs first order
    bool support_certified = false;          // precondition for guaranteed uniqueness
    bool support_conclusive = false;         // false when the search hit its budget
    Index orders_run = 0;
};

// Runs scca under each sweep order and compares completions; when support is
// absent the report is flagged rather than failed, since uniqueness is then
// not guaranteed.
UniquenessReport verify_uniqueness(const SparseTensor& t, Index k,
                                   std::span<const std::vector<Index>> orders,
                                   const ConvergenceConfig& cfg = {},
                                   const SupportOptions& support = {});

// Convenience: default order, reversed catalog order, and seeded shuffles up
// to `num_orders`.
UniquenessReport verify_uniqueness(const SparseTensor& t, Index k, Index num_orders,
                                   std::uint64_t seed, const ConvergenceConfig& cfg = {},
                                   const SupportOptions& support = {});

}  // namespace shiftrec
