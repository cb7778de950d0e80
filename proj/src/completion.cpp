#include "shiftrec/completion.hpp"

#include <algorithm>
#include <cmath>

#include "shiftrec/rng.hpp"

namespace shiftrec {

CompletionResult::CompletionResult(SparseTensor source, ShiftVector shifts,
                                   CompletionDiagnostics diag, ValueDomain domain)
    : source_(std::make_shared<const SparseTensor>(std::move(source))),
      catalog_(std::make_shared<const SubtensorCatalog>(source_->shape(), shifts.k)),
      shifts_(std::move(shifts)),
      diag_(diag),
      domain_(domain) {}

double CompletionResult::value(std::span<const Index> coord) const {
    if (auto v = source_->value_at(coord)) return *v;
    double sum = 0.0;
    for (std::size_t g = 0; g < catalog_->groups().size(); ++g) {
        sum += shifts_.coeff[static_cast<std::size_t>(
            catalog_->index_containing(static_cast<Index>(g), coord))];
    }
    return domain_ == ValueDomain::log_positive ? std::exp(sum) : sum;
}

SparseTensor CompletionResult::materialize() const {
    const Shape& shape = source_->shape();
    const Index cells = shape.cells();
    const auto d = static_cast<std::size_t>(shape.dim());
    std::vector<Index> flat;
    flat.reserve(static_cast<std::size_t>(cells) * d);
    std::vector<double> vals;
    vals.reserve(static_cast<std::size_t>(cells));
    Coord c(d, 1);
    do {
        flat.insert(flat.end(), c.begin(), c.end());
        vals.push_back(value(c));
    } while (shape.next_coord(c));
    return SparseTensor(shape, std::move(flat), std::move(vals));
}

CompletionResult scca(const SparseTensor& t, Index k, const ConvergenceConfig& cfg,
                      const std::vector<Index>* sweep_order) {
    CanonicalResult canon = csa(t, k, cfg, sweep_order);
    CompletionDiagnostics diag;
    diag.sweeps_used = canon.sweeps_used;
    diag.final_sweep_variance = canon.final_sweep_variance;
    diag.residual = residual(canon.canonical, k);
    return CompletionResult(t, std::move(canon.shifts), diag);
}

CompletionResult mca(const SparseTensor& t, const ConvergenceConfig& cfg) {
    if (t.dim() != 2) {
        throw ConfigError("mca requires a matrix (d=2), got d=" + std::to_string(t.dim()));
    }
    return scca(t, 1, cfg);
}

std::vector<Coord> SupportCertificate::corners() const {
    const std::size_t d = alpha.size();
    std::vector<Coord> out;
    for (std::uint64_t delta = 1; delta < (std::uint64_t{1} << d); ++delta) {
        Coord c = alpha;
        for (std::size_t j = 0; j < d; ++j) {
            if (delta >> j & 1) c[j] += offset[j];
        }
        out.push_back(std::move(c));
    }
    return out;
}

namespace {

// Per-dimension candidate offsets ordered by (|s|, positive first), bounded
// so alpha_j + s_j stays inside the extent.
std::vector<Index> dim_offsets(Index alpha_j, Index extent) {
    std::vector<Index> out;
    const Index max_abs = std::max(alpha_j - 1, extent - alpha_j);
    for (Index m = 1; m <= max_abs; ++m) {
        if (alpha_j + m <= extent) out.push_back(m);
        if (alpha_j - m >= 1) out.push_back(-m);
    }
    return out;
}

struct OffsetSearch {
    bool found = false;
    bool exhausted = false;
    std::vector<Index> offset;
};

OffsetSearch find_offset(const SparseTensor& t, const Coord& alpha, Index budget) {
    const std::size_t d = alpha.size();
    std::vector<std::vector<Index>> cands(d);
    Index max_shell = 0;
    for (std::size_t j = 0; j < d; ++j) {
        cands[j] = dim_offsets(alpha[j], t.shape().extent(static_cast<Index>(j)));
        if (cands[j].empty()) return {false, true, {}};  // extent 1: no nonzero offset
        max_shell = std::max(max_shell, std::abs(cands[j].back()));
    }
    // cands[j] is sorted by |o|; le(j, m) = how many have |o| <= m
    auto le = [&](std::size_t j, Index m) {
        std::size_t n = 0;
        while (n < cands[j].size() && std::abs(cands[j][n]) <= m) ++n;
        return n;
    };

    Index tried = 0;
    std::vector<std::size_t> pos(d);
    std::vector<Index> s(d);
    Coord corner(d);
    for (Index shell = 1; shell <= max_shell; ++shell) {
        // partition the max-norm surface by the first dimension that attains
        // the shell, so no interior tuple is ever revisited
        for (std::size_t pivot = 0; pivot < d; ++pivot) {
            std::vector<std::span<const Index>> lists(d);
            bool feasible = true;
            for (std::size_t j = 0; j < d && feasible; ++j) {
                if (j < pivot) {
                    lists[j] = std::span<const Index>(cands[j].data(), le(j, shell - 1));
                } else if (j == pivot) {
                    const std::size_t lo = le(j, shell - 1), hi = le(j, shell);
                    lists[j] = std::span<const Index>(cands[j].data() + lo, hi - lo);
                } else {
                    lists[j] = std::span<const Index>(cands[j].data(), le(j, shell));
                }
                feasible = !lists[j].empty();
            }
            if (!feasible) continue;
            std::fill(pos.begin(), pos.end(), 0);
            while (true) {
                for (std::size_t j = 0; j < d; ++j) s[j] = lists[j][pos[j]];
                if (++tried > budget) return {false, false, {}};
                bool ok = true;
                for (std::uint64_t delta = 1; ok && delta < (std::uint64_t{1} << d); ++delta) {
                    for (std::size_t j = 0; j < d; ++j) {
                        corner[j] = alpha[j] + ((delta >> j & 1) ? s[j] : 0);
                    }
                    ok = t.is_known(corner);
                }
                if (ok) return {true, false, s};
                std::size_t j = d;
                while (j > 0) {
                    if (++pos[j - 1] < lists[j - 1].size()) break;
                    pos[j - 1] = 0;
                    --j;
                }
                if (j == 0) break;
            }
        }
    }
    return {false, true, {}};
}

}  // namespace

SupportReport check_support(const SparseTensor& t, const SupportOptions& opt) {
    if (opt.candidate_budget < 1) throw ConfigError("candidate budget must be positive");
    SupportReport report;
    const Shape& shape = t.shape();
    const auto known = t.linear_indices();
    std::size_t cursor = 0;
    Coord alpha(static_cast<std::size_t>(shape.dim()), 1);
    std::uint64_t lin = 0;
    do {
        if (cursor < known.size() && known[cursor] == lin) {
            ++cursor;
        } else {
            OffsetSearch search = find_offset(t, alpha, opt.candidate_budget);
            if (search.found) {
                report.certificates.push_back({alpha, std::move(search.offset)});
            } else if (search.exhausted) {
                report.unsupported.push_back(alpha);
            } else {
                report.inconclusive.push_back(alpha);
            }
        }
        ++lin;
    } while (shape.next_coord(alpha));
    report.fully_supported = report.unsupported.empty() && report.inconclusive.empty();
    return report;
}

double shift_consistency_deviation(const SparseTensor& t, const ShiftVector& T,
                                   const ConvergenceConfig& cfg) {
    const CompletionResult base = scca(t, T.k, cfg);
    const CompletionResult shifted = scca(apply_shift(t, T, ShiftDirection::forward), T.k, cfg);
    const SubtensorCatalog& cat = base.subtensor_catalog();

    double worst = 0.0;
    Coord c(static_cast<std::size_t>(t.dim()), 1);
    do {
        double tsum = 0.0;
        for (std::size_t g = 0; g < cat.groups().size(); ++g) {
            tsum += T.coeff[static_cast<std::size_t>(cat.index_containing(static_cast<Index>(g), c))];
        }
        const double lhs = base.value(c) - tsum;
        worst = std::max(worst, std::abs(lhs - shifted.value(c)));
    } while (t.shape().next_coord(c));
    return worst;
}

double verify_shift_consistency(const SparseTensor& t, Index k, Index trials, std::uint64_t seed,
                                const ConvergenceConfig& cfg) {
    if (trials < 1) throw ConfigError("trials must be positive");
    SubtensorCatalog cat(t.shape(), k);
    const detail::SubtensorEntries plan = detail::bucket_entries(t, cat);
    Rng rng(seed);
    double worst = 0.0;
    for (Index trial = 0; trial < trials; ++trial) {
        ShiftVector T{k, std::vector<double>(static_cast<std::size_t>(cat.size()), 0.0)};
        for (Index i = 0; i < cat.size(); ++i) {
            if (plan.count(i) > 0) T.coeff[static_cast<std::size_t>(i)] = rng.uniform(-2.0, 2.0);
        }
        worst = std::max(worst, shift_consistency_deviation(t, T, cfg));
    }
    return worst;
}

UniquenessReport verify_uniqueness(const SparseTensor& t, Index k,
                                   std::span<const std::vector<Index>> orders,
                                   const ConvergenceConfig& cfg, const SupportOptions& support) {
    if (orders.size() < 2) throw ConfigError("verify_uniqueness needs at least two sweep orders");
    UniquenessReport report;
    const SupportReport sup = check_support(t, support);
    report.support_certified = sup.fully_supported;
    report.support_conclusive = sup.inconclusive.empty();

    std::vector<CompletionResult> runs;
    for (const auto& order : orders) {
        runs.push_back(scca(t, k, cfg, &order));
    }
    report.orders_run = static_cast<Index>(runs.size());

    // completed grids, pairwise
    std::vector<std::vector<double>> grids(runs.size());
    Coord c(static_cast<std::size_t>(t.dim()), 1);
    do {
        for (std::size_t r = 0; r < runs.size(); ++r) {
            grids[r].push_back(runs[r].value(c));
        }
    } while (t.shape().next_coord(c));
    for (std::size_t a = 0; a < runs.size(); ++a) {
        for (std::size_t b = a + 1; b < runs.size(); ++b) {
            for (std::size_t i = 0; i < grids[a].size(); ++i) {
                report.max_completion_deviation =
                    std::max(report.max_completion_deviation, std::abs(grids[a][i] - grids[b][i]));
            }
        }
    }
    for (std::size_t b = 1; b < runs.size(); ++b) {
        report.max_null_shift_violation =
            std::max(report.max_null_shift_violation,
                     max_null_shift_violation(t, runs[0].shifts(), runs[b].shifts()));
    }
    return report;
}

UniquenessReport verify_uniqueness(const SparseTensor& t, Index k, Index num_orders,
                                   std::uint64_t seed, const ConvergenceConfig& cfg,
                                   const SupportOptions& support) {
    if (num_orders < 2) throw ConfigError("verify_uniqueness needs at least two sweep orders");
    SubtensorCatalog cat(t.shape(), k);
    std::vector<std::vector<Index>> orders;
    orders.push_back(default_sweep_order(cat));
    orders.push_back(reversed_sweep_order(cat));
    for (Index i = 2; i < num_orders; ++i) {
        orders.push_back(shuffled_sweep_order(cat, seed + static_cast<std::uint64_t>(i)));
    }
    return verify_uniqueness(t, k, orders, cfg, support);
}

}  // namespace shiftrec
