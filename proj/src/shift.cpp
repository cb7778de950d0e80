#include "shiftrec/shift.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "shiftrec/rng.hpp"

namespace shiftrec {

void validate(const ConvergenceConfig& cfg) {
    if (!(cfg.epsilon > 0.0)) throw ConfigError("epsilon must be positive");
    if (cfg.max_sweeps < 1) throw ConfigError("max_sweeps must be at least 1");
}

namespace detail {

SubtensorEntries bucket_entries(const SparseTensor& t, const SubtensorCatalog& cat) {
    SubtensorEntries out;
    out.starts.assign(static_cast<std::size_t>(cat.size()) + 1, 0);
    const Index n = t.known_count();
    const auto& groups = cat.groups();

    // counting sort per group; entries are already in row-major order, which
    // keeps each subtensor's id list deterministic
    std::vector<Index> sub_of(static_cast<std::size_t>(n) * groups.size());
    for (Index e = 0; e < n; ++e) {
        const auto c = t.coord(e);
        for (std::size_t g = 0; g < groups.size(); ++g) {
            const Index s = cat.index_containing(static_cast<Index>(g), c);
            sub_of[static_cast<std::size_t>(e) * groups.size() + g] = s;
            ++out.starts[static_cast<std::size_t>(s) + 1];
        }
    }
    std::partial_sum(out.starts.begin(), out.starts.end(), out.starts.begin());
    out.entries.resize(static_cast<std::size_t>(n) * groups.size());
    std::vector<Index> cursor(out.starts.begin(), out.starts.end() - 1);
    for (Index e = 0; e < n; ++e) {
        for (std::size_t g = 0; g < groups.size(); ++g) {
            const Index s = sub_of[static_cast<std::size_t>(e) * groups.size() + g];
            out.entries[static_cast<std::size_t>(cursor[static_cast<std::size_t>(s)]++)] = e;
        }
    }
    return out;
}

double sum_values(std::span<const Index> ids, std::span<const double> values) {
    // compensated sum above 1024 entries; 10M-rating columns lose precision
    // with a plain accumulator
    if (ids.size() <= 1024) {
        double s = 0.0;
        for (Index e : ids) s += values[static_cast<std::size_t>(e)];
        return s;
    }
    double s = 0.0, c = 0.0;
    for (Index e : ids) {
        const double y = values[static_cast<std::size_t>(e)] - c;
        const double u = s + y;
        c = (u - s) - y;
        s = u;
    }
    return s;
}

}  // namespace detail

SparseTensor apply_shift(const SparseTensor& t, const ShiftVector& s, ShiftDirection dir) {
    SubtensorCatalog cat(t.shape(), s.k);
    if (static_cast<Index>(s.coeff.size()) != cat.size()) {
        throw ConfigError("shift vector length " + std::to_string(s.coeff.size()) +
                          " does not match catalog size " + std::to_string(cat.size()));
    }
    const double sign = dir == ShiftDirection::forward ? -1.0 : 1.0;
    std::vector<double> out(t.values().begin(), t.values().end());
    std::vector<Index> idx;
    for (Index e = 0; e < t.known_count(); ++e) {
        cat.indices_containing(t.coord(e), idx);
        double sum = 0.0;
        for (Index i : idx) sum += s.coeff[static_cast<std::size_t>(i)];
        out[static_cast<std::size_t>(e)] += sign * sum;
    }
    return t.with_values(std::move(out));
}

std::vector<Index> catalog_sweep_order(const SubtensorCatalog& cat) {
    std::vector<Index> order(static_cast<std::size_t>(cat.size()));
    std::iota(order.begin(), order.end(), Index{0});
    return order;
}

std::vector<Index> default_sweep_order(const SubtensorCatalog& cat) {
    std::vector<Index> order;
    order.reserve(static_cast<std::size_t>(cat.size()));
    const auto& groups = cat.groups();
    for (std::size_t g = groups.size(); g-- > 0;) {
        for (Index i = 0; i < groups[g].count; ++i) order.push_back(groups[g].offset + i);
    }
    return order;
}

std::vector<Index> reversed_sweep_order(const SubtensorCatalog& cat) {
    auto order = catalog_sweep_order(cat);
    std::reverse(order.begin(), order.end());
    return order;
}

std::vector<Index> shuffled_sweep_order(const SubtensorCatalog& cat, std::uint64_t seed) {
    auto order = catalog_sweep_order(cat);
    Rng rng(seed);
    rng.shuffle(order);
    return order;
}

namespace {

void validate_sweep_order(const std::vector<Index>& order, Index size) {
    if (static_cast<Index>(order.size()) != size) {
        throw ConfigError("sweep order must be a permutation of all catalog positions");
    }
    std::vector<bool> seen(static_cast<std::size_t>(size), false);
    for (Index i : order) {
        if (i < 0 || i >= size || seen[static_cast<std::size_t>(i)]) {
            throw ConfigError("sweep order must be a permutation of all catalog positions");
        }
        seen[static_cast<std::size_t>(i)] = true;
    }
}

}  // namespace

CanonicalResult csa(const SparseTensor& t, Index k, const ConvergenceConfig& cfg,
                    const std::vector<Index>* sweep_order) {
    validate(cfg);
    SubtensorCatalog cat(t.shape(), k);
    const detail::SubtensorEntries plan = detail::bucket_entries(t, cat);

    std::vector<Index> order;
    if (sweep_order) {
        validate_sweep_order(*sweep_order, cat.size());
        order = *sweep_order;
    } else {
        order = default_sweep_order(cat);
    }

    std::vector<double> values(t.values().begin(), t.values().end());
    std::vector<double> coeff(static_cast<std::size_t>(cat.size()), 0.0);

    Index sweeps = 0;
    double v = 0.0;
    bool converged = false;
    while (sweeps < cfg.max_sweeps) {
        ++sweeps;
        v = 0.0;
        for (Index sub : order) {
            const Index cnt = plan.count(sub);
            if (cnt == 0) continue;
            const auto ids = plan.ids(sub);
            const double rho = -detail::sum_values(ids, values) / static_cast<double>(cnt);
            for (Index e : ids) values[static_cast<std::size_t>(e)] += rho;
            coeff[static_cast<std::size_t>(sub)] -= rho;
            v += rho * rho;
        }
        if (v < cfg.epsilon) {
            converged = true;
            break;
        }
    }
    if (!converged) {
        throw ConvergenceError("csa did not converge after " + std::to_string(sweeps) +
                                   " sweeps (last sweep variance " + std::to_string(v) + ")",
                               v, sweeps);
    }

    CanonicalResult res;
    res.canonical = t.with_values(std::move(values));
    res.shifts = ShiftVector{k, std::move(coeff)};
    res.sweeps_used = sweeps;
    res.final_sweep_variance = v;
    return res;
}

double residual(const SparseTensor& t, Index k) {
    if (t.known_count() == 0) return 0.0;
    SubtensorCatalog cat(t.shape(), k);
    const detail::SubtensorEntries plan = detail::bucket_entries(t, cat);
    double worst = 0.0;
    for (Index sub = 0; sub < cat.size(); ++sub) {
        const Index cnt = plan.count(sub);
        if (cnt == 0) continue;
        const double s = detail::sum_values(plan.ids(sub), t.values());
        worst = std::max(worst, std::abs(s) / static_cast<double>(cnt));
    }
    return worst;
}

double max_null_shift_violation(const SparseTensor& t, const ShiftVector& a, const ShiftVector& b) {
    if (a.k != b.k || a.coeff.size() != b.coeff.size()) {
        throw ConfigError("shift vectors are not conformant");
    }
    SubtensorCatalog cat(t.shape(), a.k);
    if (static_cast<Index>(a.coeff.size()) != cat.size()) {
        throw ConfigError("shift vector length does not match catalog size");
    }
    double worst = 0.0;
    std::vector<Index> idx;
    for (Index e = 0; e < t.known_count(); ++e) {
        cat.indices_containing(t.coord(e), idx);
        double sum = 0.0;
        for (Index i : idx) {
            sum += b.coeff[static_cast<std::size_t>(i)] - a.coeff[static_cast<std::size_t>(i)];
        }
        worst = std::max(worst, std::abs(sum));
    }
    return worst;
}

}  // namespace shiftrec
