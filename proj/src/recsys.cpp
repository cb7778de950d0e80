#include "shiftrec/recsys.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include "shiftrec/rng.hpp"
#include "shiftrec/ucbridge.hpp"

namespace shiftrec {

Method method_from_string(const std::string& name) {
    if (name == "sc" || name == "SC") return Method::sc;
    if (name == "uc" || name == "UC") return Method::uc;
    throw ConfigError("unknown method '" + name + "' (sc, uc)");
}

std::string method_label(Method m) { return m == Method::sc ? "SC" : "UC (log-bridge)"; }

namespace {

CompletionResult complete(const SparseTensor& t, Method method, Index k,
                          const ConvergenceConfig& cfg) {
    return method == Method::sc ? scca(t, k, cfg) : ucca(t, k, cfg);
}

}  // namespace

Recommender::Recommender(SparseTensor source, Method method, const ConvergenceConfig& cfg)
    : completion_(complete(source, method, source.dim() - 1, cfg)), method_(method) {}

double Recommender::recommend(const Coord& alpha) const {
    if (!source().shape().in_bounds(alpha)) throw ConfigError("coordinate out of bounds");
    return completion_.value(alpha);
}

TopN top_n(const Recommender& r, Index user, Index n) {
    const SparseTensor& src = r.source();
    if (src.dim() != 2) throw ConfigError("top_n requires a matrix (d=2)");
    if (user < 1 || user > src.shape().extent(0)) throw ConfigError("user out of range");
    if (n < 1) throw ConfigError("top-N size must be positive");

    std::vector<std::pair<double, Index>> ranked;
    Coord c{user, 0};
    for (Index item = 1; item <= src.shape().extent(1); ++item) {
        c[1] = item;
        if (src.is_known(c)) continue;  // rank only unrated items
        ranked.emplace_back(r.completion().value(c), item);
    }
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    TopN out;
    out.user = user;
    const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(n), ranked.size());
    for (std::size_t i = 0; i < take; ++i) out.items.push_back(ranked[i].second);
    return out;
}

namespace {

// (d-1)-shape with `axis` removed; slice coordinate + position along axis.
Shape slice_shape(const Shape& full, Index axis) {
    std::vector<Index> extents;
    for (Index j = 1; j <= full.dim(); ++j) {
        if (j != axis) extents.push_back(full.extent(j - 1));
    }
    return Shape(std::move(extents));
}

Coord embed(const Coord& slice_coord, Index axis, Index pos, Index d) {
    Coord full(static_cast<std::size_t>(d));
    std::size_t s = 0;
    for (Index j = 1; j <= d; ++j) {
        full[static_cast<std::size_t>(j - 1)] = j == axis ? pos : slice_coord[s++];
    }
    return full;
}

}  // namespace

ConsensusCheck verify_consensus(const Recommender& r, const ConsensusPattern& pat) {
    const SparseTensor& src = r.source();
    const Index d = src.dim();
    const Index axis = pat.axis == 0 ? d : pat.axis;
    ConsensusCheck check;

    auto fail = [&](const std::string& why) {
        check.pattern_valid = false;
        check.precondition_error = why;
        return check;
    };
    if (axis < 1 || axis > d) return fail("axis out of range");
    if (pat.gamma.size() < 2) return fail("gamma needs at least two slices");
    {
        std::vector<Index> sorted(pat.gamma);
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
            return fail("gamma has repeated slice indices");
        }
    }
    for (Index g : pat.gamma) {
        if (g < 1 || g > src.shape().extent(axis - 1)) return fail("gamma slice index out of range");
    }

    // known sets per slice must coincide
    const Shape sub = slice_shape(src.shape(), axis);
    std::vector<std::vector<std::uint64_t>> known_sets(pat.gamma.size());
    for (Index e = 0; e < src.known_count(); ++e) {
        const auto c = src.coord(e);
        const Index pos = c[static_cast<std::size_t>(axis - 1)];
        for (std::size_t gi = 0; gi < pat.gamma.size(); ++gi) {
            if (pat.gamma[gi] != pos) continue;
            Coord sc;
            for (Index j = 1; j <= d; ++j) {
                if (j != axis) sc.push_back(c[static_cast<std::size_t>(j - 1)]);
            }
            known_sets[gi].push_back(sub.linearize(sc));
        }
    }
    for (auto& ks : known_sets) std::sort(ks.begin(), ks.end());
    for (std::size_t gi = 1; gi < known_sets.size(); ++gi) {
        if (known_sets[gi] != known_sets[0]) {
            return fail("slices " + std::to_string(pat.gamma[0]) + " and " +
                        std::to_string(pat.gamma[gi]) + " have different known sets");
        }
    }
    if (known_sets[0].empty()) return fail("common known set sigma(gamma) is empty");

    // strict unanimous ordering on the common known set; adjacent pairs
    // suffice since pointwise strict order is transitive
    for (std::uint64_t lin : known_sets[0]) {
        const Coord sc = sub.delinearize(lin);
        for (std::size_t gi = 0; gi + 1 < pat.gamma.size(); ++gi) {
            const double va = *src.value_at(embed(sc, axis, pat.gamma[gi], d));
            const double vb = *src.value_at(embed(sc, axis, pat.gamma[gi + 1], d));
            if (!(va < vb)) {
                std::ostringstream os;
                os << "known values are not strictly ordered between slices " << pat.gamma[gi]
                   << " and " << pat.gamma[gi + 1] << " (" << va << " vs " << vb << ")";
                return fail(os.str());
            }
        }
    }
    check.pattern_valid = true;
    check.common_known = static_cast<Index>(known_sets[0].size());

    if (r.completion().k() != d - 1) return fail("consensus ordering requires a k = d-1 completion");

    // sigma_bar(gamma): slice coordinates unknown in every gamma slice (they
    // share known sets, so one slice decides)
    for (std::uint64_t lin = 0; lin < static_cast<std::uint64_t>(sub.cells()); ++lin) {
        if (std::binary_search(known_sets[0].begin(), known_sets[0].end(), lin)) continue;
        const Coord sc = sub.delinearize(lin);
        ++check.common_unknown;
        double prev = 0.0;
        for (std::size_t gi = 0; gi < pat.gamma.size(); ++gi) {
            const double v = r.completion().value(embed(sc, axis, pat.gamma[gi], d));
            if (gi > 0 && !(prev < v)) {
                check.violations.push_back({sc, pat.gamma[gi - 1], pat.gamma[gi], prev, v});
            }
            prev = v;
        }
    }
    return check;
}

std::vector<ConsensusPattern> find_consensus_patterns(const SparseTensor& t, Index axis,
                                                      Index max_patterns) {
    const Index d = t.dim();
    if (axis == 0) axis = d;
    if (axis < 1 || axis > d) throw ConfigError("axis out of range");
    const Shape sub = slice_shape(t.shape(), axis);

    // group slices by their known set
    const Index n_slices = t.shape().extent(axis - 1);
    std::vector<std::vector<std::uint64_t>> known(static_cast<std::size_t>(n_slices));
    for (Index e = 0; e < t.known_count(); ++e) {
        const auto c = t.coord(e);
        Coord sc;
        for (Index j = 1; j <= d; ++j) {
            if (j != axis) sc.push_back(c[static_cast<std::size_t>(j - 1)]);
        }
        known[static_cast<std::size_t>(c[static_cast<std::size_t>(axis - 1)] - 1)].push_back(
            sub.linearize(sc));
    }
    for (auto& ks : known) std::sort(ks.begin(), ks.end());

    std::map<std::vector<std::uint64_t>, std::vector<Index>> by_set;
    for (Index s = 1; s <= n_slices; ++s) {
        const auto& ks = known[static_cast<std::size_t>(s - 1)];
        if (!ks.empty() && static_cast<Index>(ks.size()) < sub.cells()) by_set[ks].push_back(s);
    }

    std::vector<ConsensusPattern> out;
    for (auto& [ks, slices] : by_set) {
        if (slices.size() < 2) continue;
        // sort by value at the first common coordinate, then greedily chain
        // slices that stay strictly ordered pointwise
        const Coord first = sub.delinearize(ks[0]);
        std::sort(slices.begin(), slices.end(), [&](Index a, Index b) {
            const double va = *t.value_at(embed(first, axis, a, d));
            const double vb = *t.value_at(embed(first, axis, b, d));
            if (va != vb) return va < vb;
            return a < b;
        });
        auto strictly_below = [&](Index a, Index b) {
            for (std::uint64_t lin : ks) {
                const Coord sc = sub.delinearize(lin);
                if (!(*t.value_at(embed(sc, axis, a, d)) < *t.value_at(embed(sc, axis, b, d)))) {
                    return false;
                }
            }
            return true;
        };
        ConsensusPattern pat;
        pat.axis = axis;
        pat.gamma.push_back(slices[0]);
        for (std::size_t i = 1; i < slices.size(); ++i) {
            if (strictly_below(pat.gamma.back(), slices[i])) pat.gamma.push_back(slices[i]);
        }
        if (pat.gamma.size() >= 2) {
            out.push_back(std::move(pat));
            if (static_cast<Index>(out.size()) >= max_patterns) break;
        }
    }
    return out;
}

PlantedConsensus plant_consensus_instance(const Shape& shape, Index axis, Index num_slices,
                                          std::uint64_t seed) {
    const Index d = shape.dim();
    if (axis == 0) axis = d;
    if (axis < 1 || axis > d) throw ConfigError("axis out of range");
    const Index n_slices = shape.extent(axis - 1);
    if (num_slices < 2 || num_slices > n_slices) {
        throw ConfigError("need 2 <= num_slices <= axis extent");
    }
    const Shape sub = slice_shape(shape, axis);
    if (sub.cells() < 2) throw ConfigError("slice grid too small to leave unknowns");

    Rng rng(seed);
    std::vector<Index> slice_perm(static_cast<std::size_t>(n_slices));
    std::iota(slice_perm.begin(), slice_perm.end(), Index{1});
    rng.shuffle(slice_perm);
    std::vector<Index> gamma(slice_perm.begin(), slice_perm.begin() + num_slices);

    // common known set: nonempty, with a nonempty complement
    std::vector<Index> cell_perm(static_cast<std::size_t>(sub.cells()));
    std::iota(cell_perm.begin(), cell_perm.end(), Index{0});
    rng.shuffle(cell_perm);
    const Index n_known = 1 + static_cast<Index>(rng.below(static_cast<std::uint64_t>(sub.cells() - 1)));
    std::vector<bool> in_sigma(static_cast<std::size_t>(sub.cells()), false);
    for (Index i = 0; i < n_known; ++i) in_sigma[static_cast<std::size_t>(cell_perm[static_cast<std::size_t>(i)])] = true;

    std::vector<bool> in_gamma(static_cast<std::size_t>(n_slices) + 1, false);
    for (Index g : gamma) in_gamma[static_cast<std::size_t>(g)] = true;

    std::vector<std::pair<Coord, double>> entries;
    std::vector<double> base(static_cast<std::size_t>(sub.cells()));
    for (double& b : base) b = rng.uniform(1.0, 3.0);
    for (std::size_t gi = 0; gi < gamma.size(); ++gi) {
        const double offset = static_cast<double>(gi + 1);
        for (Index lin = 0; lin < sub.cells(); ++lin) {
            if (!in_sigma[static_cast<std::size_t>(lin)]) continue;
            const Coord sc = sub.delinearize(static_cast<std::uint64_t>(lin));
            // jitter below the unit offset gap keeps the ordering strict
            const double v = base[static_cast<std::size_t>(lin)] + offset + rng.uniform(0.0, 0.4);
            entries.emplace_back(embed(sc, axis, gamma[gi], d), v);
        }
    }
    for (Index s = 1; s <= n_slices; ++s) {
        if (in_gamma[static_cast<std::size_t>(s)]) continue;
        for (Index lin = 0; lin < sub.cells(); ++lin) {
            if (rng.uniform01() < 0.6) {
                entries.emplace_back(embed(sub.delinearize(static_cast<std::uint64_t>(lin)), axis, s, d),
                                     rng.uniform(1.0, 5.0));
            }
        }
    }

    PlantedConsensus out{SparseTensor(shape, entries), ConsensusPattern{axis, std::move(gamma)}};
    return out;
}

FairnessReport fairness_probe(const SparseTensor& t, Index user, double delta,
                              std::span<const Index> ns, Method method,
                              const ConvergenceConfig& cfg, DeltaMode mode) {
    if (t.dim() != 2) throw ConfigError("fairness probe requires a matrix (d=2)");
    if (user < 1 || user > t.shape().extent(0)) throw ConfigError("user out of range");
    if (mode == DeltaMode::automatic) {
        mode = method == Method::uc ? DeltaMode::scale : DeltaMode::add;
    }
    if (mode == DeltaMode::scale && !(delta > 0.0)) {
        throw ConfigError("scale mode requires a positive factor");
    }

    // shift (or scale) every rating of the probed user
    std::vector<double> shifted(t.values().begin(), t.values().end());
    Index user_ratings = 0;
    for (Index e = 0; e < t.known_count(); ++e) {
        if (t.coord(e)[0] != user) continue;
        ++user_ratings;
        if (mode == DeltaMode::add) {
            shifted[static_cast<std::size_t>(e)] += delta;
        } else {
            shifted[static_cast<std::size_t>(e)] *= delta;
        }
    }
    if (user_ratings == 0) throw ConfigError("user " + std::to_string(user) + " has no ratings");

    const Recommender before(t, method, cfg);
    const Recommender after(t.with_values(std::move(shifted)), method, cfg);

    FairnessReport rep;
    rep.shifted_user = user;
    rep.delta = delta;
    rep.mode = mode;
    rep.method_label = method_label(method);
    rep.ns.assign(ns.begin(), ns.end());
    rep.changed_counts.assign(ns.size(), 0);

    const Index users = t.shape().extent(0);
    const Index items = t.shape().extent(1);
    const Index max_n = ns.empty() ? 0 : *std::max_element(ns.begin(), ns.end());
    Coord c{0, 0};
    for (Index u = 1; u <= users; ++u) {
        c[0] = u;
        if (u == user) {
            // the shifted user's own predictions should move by exactly the
            // applied shift (the single-row restriction of shift consistency)
            for (Index i = 1; i <= items; ++i) {
                c[1] = i;
                const double a = before.completion().value(c);
                const double b = after.completion().value(c);
                const double dev = mode == DeltaMode::add ? std::abs(b - a - delta)
                                                          : std::abs(b / a - delta);
                rep.max_self_deviation = std::max(rep.max_self_deviation, dev);
            }
            continue;
        }
        ++rep.users_evaluated;
        for (Index i = 1; i <= items; ++i) {
            c[1] = i;
            rep.max_other_deviation = std::max(
                rep.max_other_deviation,
                std::abs(before.completion().value(c) - after.completion().value(c)));
        }
        if (max_n > 0) {
            const TopN tb = top_n(before, u, max_n);
            const TopN ta = top_n(after, u, max_n);
            for (std::size_t ni = 0; ni < rep.ns.size(); ++ni) {
                const auto len = static_cast<std::size_t>(rep.ns[ni]);
                const auto la = std::min(len, ta.items.size());
                const auto lb = std::min(len, tb.items.size());
                const bool same = la == lb && std::equal(ta.items.begin(), ta.items.begin() + static_cast<std::ptrdiff_t>(la),
                                                         tb.items.begin());
                if (!same) ++rep.changed_counts[ni];
            }
        }
    }
    return rep;
}

Index default_fairness_user(const SparseTensor& t, double scale_max) {
    if (t.dim() != 2) throw ConfigError("fairness probe requires a matrix (d=2)");
    std::vector<double> row_max(static_cast<std::size_t>(t.shape().extent(0)), 0.0);
    std::vector<bool> has(static_cast<std::size_t>(t.shape().extent(0)), false);
    for (Index e = 0; e < t.known_count(); ++e) {
        const auto u = static_cast<std::size_t>(t.coord(e)[0] - 1);
        row_max[u] = has[u] ? std::max(row_max[u], t.value(e)) : t.value(e);
        has[u] = true;
    }
    for (std::size_t u = 0; u < row_max.size(); ++u) {
        if (has[u] && std::abs(row_max[u] - (scale_max - 1.0)) < 1e-9) {
            return static_cast<Index>(u) + 1;
        }
    }
    for (std::size_t u = 0; u < has.size(); ++u) {
        if (has[u]) return static_cast<Index>(u) + 1;
    }
    throw ConfigError("tensor has no rated users");
}

std::string fairness_csv(const FairnessReport& report) {
    std::ostringstream os;
    os << "N,changed_user_count\n";
    for (std::size_t i = 0; i < report.ns.size(); ++i) {
        os << report.ns[i] << "," << report.changed_counts[i] << "\n";
    }
    return os.str();
}

}  // namespace shiftrec
