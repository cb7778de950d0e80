#include "shiftrec.h"

#include <algorithm>
#include <cstring>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "shiftrec/completion.hpp"
#include "shiftrec/harness.hpp"
#include "shiftrec/io.hpp"
#include "shiftrec/recsys.hpp"
#include "shiftrec/ucbridge.hpp"

using namespace shiftrec;

namespace {

thread_local std::string g_last_error;

template <class F>
sr_status guarded(F&& f) {
    try {
        f();
        return SR_OK;
    } catch (const DomainError& e) {
        g_last_error = e.what();
        return SR_ERROR_DOMAIN;
    } catch (const ConvergenceError& e) {
        g_last_error = e.what();
        return SR_ERROR_CONVERGENCE;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return SR_ERROR_CONFIG;
    }
}

ConvergenceConfig make_cfg(double epsilon, int64_t max_sweeps) {
    ConvergenceConfig cfg;
    cfg.epsilon = epsilon;
    cfg.max_sweeps = max_sweeps;
    validate(cfg);
    return cfg;
}

Coord make_coord(const int64_t* coord, Index d) {
    if (!coord) throw ConfigError("coordinate pointer is null");
    return Coord(coord, coord + d);
}

nlohmann::json coord_json(const Coord& c) { return nlohmann::json(c); }

}  // namespace

struct sr_tensor {
    Shape shape;
    std::vector<Index> flat;
    std::vector<double> values;
    mutable std::optional<SparseTensor> built;

    const SparseTensor& tensor() const {
        if (!built) built = SparseTensor(shape, flat, values);
        return *built;
    }
};

struct sr_completion {
    CompletionResult result;
};

struct sr_report {
    std::string json;
    std::optional<std::string> csv;
};

struct sr_eval_config {
    ExperimentConfig config;
};

extern "C" {

const char* sr_version(void) { return "0.1.0"; }

const char* sr_last_error(void) { return g_last_error.c_str(); }

sr_status sr_tensor_create(const int64_t* extents, int32_t ndim, sr_tensor** out) {
    return guarded([&] {
        if (!extents || !out) throw ConfigError("null argument");
        auto t = std::make_unique<sr_tensor>();
        t->shape = Shape(std::vector<Index>(extents, extents + ndim));
        *out = t.release();
    });
}

sr_status sr_tensor_add_entry(sr_tensor* t, const int64_t* coord, double value) {
    return guarded([&] {
        if (!t) throw ConfigError("null tensor");
        const Coord c = make_coord(coord, t->shape.dim());
        if (!t->shape.in_bounds(c)) throw ConfigError("coordinate out of bounds");
        t->flat.insert(t->flat.end(), c.begin(), c.end());
        t->values.push_back(value);
        t->built.reset();
    });
}

sr_status sr_tensor_read_coo(const char* path, sr_tensor** out) {
    return guarded([&] {
        if (!path || !out) throw ConfigError("null argument");
        SparseTensor parsed = read_coo(path);
        auto t = std::make_unique<sr_tensor>();
        t->shape = parsed.shape();
        t->built = std::move(parsed);
        *out = t.release();
    });
}

sr_status sr_tensor_read_movielens(const char* path, const char* flavor, sr_tensor** out) {
    return guarded([&] {
        if (!path || !flavor || !out) throw ConfigError("null argument");
        RatingsDataset ds = parse_movielens(path, movielens_flavor_from_string(flavor));
        auto t = std::make_unique<sr_tensor>();
        t->shape = ds.matrix.shape();
        t->built = std::move(ds.matrix);
        *out = t.release();
    });
}

sr_status sr_tensor_write_coo(const sr_tensor* t, const char* path) {
    return guarded([&] {
        if (!t || !path) throw ConfigError("null argument");
        write_coo(t->tensor(), path);
    });
}

void sr_tensor_free(sr_tensor* t) { delete t; }

int32_t sr_tensor_ndim(const sr_tensor* t) { return t ? static_cast<int32_t>(t->shape.dim()) : 0; }

int64_t sr_tensor_extent(const sr_tensor* t, int32_t dim) {
    if (!t || dim < 0 || dim >= t->shape.dim()) return 0;
    return t->shape.extent(dim);
}

int64_t sr_tensor_known_count(const sr_tensor* t) {
    if (!t) return 0;
    if (t->built) return static_cast<int64_t>(t->built->known_count());
    return static_cast<int64_t>(t->values.size());
}

sr_status sr_tensor_get(const sr_tensor* t, const int64_t* coord, int32_t* known, double* value) {
    return guarded([&] {
        if (!t || !known || !value) throw ConfigError("null argument");
        const Coord c = make_coord(coord, t->shape.dim());
        const auto v = t->tensor().value_at(c);
        *known = v.has_value() ? 1 : 0;
        *value = v.value_or(0.0);
    });
}

sr_status sr_generate(const int64_t* extents, int32_t ndim, const char* model, double factor_min,
                      double factor_max, double noise_std, double known_fraction,
                      int32_t ensure_full_support, int32_t discretize, double scale_min,
                      double scale_max, double scale_step, uint64_t seed, sr_tensor** masked_out,
                      sr_tensor** truth_out) {
    return guarded([&] {
        if (!extents || !model || !masked_out) throw ConfigError("null argument");
        SyntheticSpec spec;
        spec.shape = Shape(std::vector<Index>(extents, extents + ndim));
        if (std::strcmp(model, "additive") == 0) {
            spec.model = SyntheticModel::additive;
        } else if (std::strcmp(model, "multiplicative") == 0) {
            spec.model = SyntheticModel::multiplicative;
        } else {
            throw ConfigError("unknown model '" + std::string(model) + "'");
        }
        spec.factor_min = factor_min;
        spec.factor_max = factor_max;
        spec.noise_std = noise_std;
        spec.known_fraction = known_fraction;
        spec.ensure_full_support = ensure_full_support != 0;
        if (discretize) spec.discretize = RatingScale{scale_min, scale_max, scale_step};
        SyntheticInstance inst = generate(spec, seed);

        auto masked = std::make_unique<sr_tensor>();
        masked->shape = inst.masked.shape();
        masked->built = std::move(inst.masked);
        if (truth_out) {
            auto truth = std::make_unique<sr_tensor>();
            truth->shape = inst.truth.shape();
            truth->built = std::move(inst.truth);
            *truth_out = truth.release();
        }
        *masked_out = masked.release();
    });
}

sr_status sr_complete(const sr_tensor* t, int32_t k, const char* method, double epsilon,
                      int64_t max_sweeps, sr_completion** out) {
    return guarded([&] {
        if (!t || !method || !out) throw ConfigError("null argument");
        const SparseTensor& src = t->tensor();
        const Index kk = k == 0 ? src.dim() - 1 : k;
        const ConvergenceConfig cfg = make_cfg(epsilon, max_sweeps);
        const Method m = method_from_string(method);
        auto c = std::make_unique<sr_completion>();
        c->result = m == Method::sc ? scca(src, kk, cfg) : ucca(src, kk, cfg);
        *out = c.release();
    });
}

sr_status sr_completion_value(const sr_completion* c, const int64_t* coord, double* out) {
    return guarded([&] {
        if (!c || !out) throw ConfigError("null argument");
        const Coord cc = make_coord(coord, c->result.source().dim());
        if (!c->result.source().shape().in_bounds(cc)) throw ConfigError("coordinate out of bounds");
        *out = c->result.value(cc);
    });
}

int64_t sr_completion_sweeps(const sr_completion* c) {
    return c ? c->result.diagnostics().sweeps_used : 0;
}

double sr_completion_last_sweep_variance(const sr_completion* c) {
    return c ? c->result.diagnostics().final_sweep_variance : 0.0;
}

double sr_completion_residual(const sr_completion* c) {
    return c ? c->result.diagnostics().residual : 0.0;
}

sr_status sr_completion_write_coo(const sr_completion* c, const char* path) {
    return guarded([&] {
        if (!c || !path) throw ConfigError("null argument");
        write_completed_coo(c->result, path);
    });
}

void sr_completion_free(sr_completion* c) { delete c; }

sr_status sr_residual(const sr_tensor* t, int32_t k, double* out) {
    return guarded([&] {
        if (!t || !out) throw ConfigError("null argument");
        *out = residual(t->tensor(), k);
    });
}

sr_status sr_audit_support(const sr_tensor* t, int64_t candidate_budget, int32_t* pass,
                           sr_report** out) {
    return guarded([&] {
        if (!t || !pass || !out) throw ConfigError("null argument");
        SupportOptions opt;
        opt.candidate_budget = candidate_budget;
        const SupportReport rep = check_support(t->tensor(), opt);
        *pass = rep.fully_supported ? 1 : 0;

        nlohmann::json j;
        j["audit"] = "support";
        j["fully_supported"] = rep.fully_supported;
        j["supported_unknowns"] = rep.certificates.size();
        j["unsupported_count"] = rep.unsupported.size();
        j["inconclusive_count"] = rep.inconclusive.size();
        j["candidate_budget"] = candidate_budget;
        auto sample = [](const std::vector<Coord>& coords) {
            nlohmann::json arr = nlohmann::json::array();
            for (std::size_t i = 0; i < coords.size() && i < 100; ++i) arr.push_back(coord_json(coords[i]));
            return arr;
        };
        j["unsupported_sample"] = sample(rep.unsupported);
        j["inconclusive_sample"] = sample(rep.inconclusive);
        nlohmann::json certs = nlohmann::json::array();
        for (std::size_t i = 0; i < rep.certificates.size() && i < 100; ++i) {
            certs.push_back({{"alpha", coord_json(rep.certificates[i].alpha)},
                             {"offset", rep.certificates[i].offset}});
        }
        j["certificate_sample"] = std::move(certs);
        *out = new sr_report{j.dump(2) + "\n", std::nullopt};
    });
}

sr_status sr_audit_shift_consistency(const sr_tensor* t, int32_t k, int32_t trials, uint64_t seed,
                                     double epsilon, int64_t max_sweeps, double tolerance,
                                     int32_t* pass, sr_report** out) {
    return guarded([&] {
        if (!t || !pass || !out) throw ConfigError("null argument");
        const double dev =
            verify_shift_consistency(t->tensor(), k, trials, seed, make_cfg(epsilon, max_sweeps));
        *pass = dev <= tolerance ? 1 : 0;
        nlohmann::json j;
        j["audit"] = "shift-consistency";
        j["k"] = k;
        j["trials"] = trials;
        j["seed"] = seed;
        j["max_deviation"] = dev;
        j["tolerance"] = tolerance;
        j["pass"] = *pass == 1;
        *out = new sr_report{j.dump(2) + "\n", std::nullopt};
    });
}

sr_status sr_audit_uniqueness(const sr_tensor* t, int32_t k, int32_t num_orders, uint64_t seed,
                              double epsilon, int64_t max_sweeps, double tolerance,
                              int64_t support_budget, int32_t* pass, sr_report** out) {
    return guarded([&] {
        if (!t || !pass || !out) throw ConfigError("null argument");
        SupportOptions sup;
        sup.candidate_budget = support_budget;
        const UniquenessReport rep =
            verify_uniqueness(t->tensor(), k, num_orders, seed, make_cfg(epsilon, max_sweeps), sup);
        // null shifts are unconditional; completion agreement is only
        // guaranteed under full support
        const bool null_ok = rep.max_null_shift_violation <= tolerance;
        const bool dev_ok = rep.max_completion_deviation <= tolerance;
        *pass = (null_ok && (dev_ok || !rep.support_certified)) ? 1 : 0;
        nlohmann::json j;
        j["audit"] = "uniqueness";
        j["k"] = k;
        j["orders"] = rep.orders_run;
        j["seed"] = seed;
        j["max_completion_deviation"] = rep.max_completion_deviation;
        j["max_null_shift_violation"] = rep.max_null_shift_violation;
        j["support_certified"] = rep.support_certified;
        j["support_conclusive"] = rep.support_conclusive;
        j["tolerance"] = tolerance;
        if (!rep.support_certified) {
            j["note"] = "uniqueness not guaranteed without full support; deviations reported, not judged";
        }
        j["pass"] = *pass == 1;
        *out = new sr_report{j.dump(2) + "\n", std::nullopt};
    });
}

namespace {

nlohmann::json consensus_check_json(const ConsensusPattern& pat, const ConsensusCheck& check) {
    nlohmann::json j;
    j["axis"] = pat.axis;
    j["gamma"] = pat.gamma;
    j["pattern_valid"] = check.pattern_valid;
    if (!check.pattern_valid) j["precondition_error"] = check.precondition_error;
    j["common_known"] = check.common_known;
    j["common_unknown"] = check.common_unknown;
    j["violations"] = check.violations.size();
    nlohmann::json viols = nlohmann::json::array();
    for (std::size_t i = 0; i < check.violations.size() && i < 50; ++i) {
        const auto& v = check.violations[i];
        viols.push_back({{"coord", coord_json(v.slice_coord)},
                         {"slice_a", v.a},
                         {"slice_b", v.b},
                         {"value_a", v.value_a},
                         {"value_b", v.value_b}});
    }
    j["violation_sample"] = std::move(viols);
    return j;
}

}  // namespace

sr_status sr_audit_consensus(const sr_tensor* t, double epsilon, int64_t max_sweeps, int32_t* pass,
                             sr_report** out) {
    return guarded([&] {
        if (!t || !pass || !out) throw ConfigError("null argument");
        const SparseTensor& src = t->tensor();
        const Recommender rec(src, Method::sc, make_cfg(epsilon, max_sweeps));
        nlohmann::json patterns = nlohmann::json::array();
        Index violations = 0, checked = 0;
        for (Index axis = 1; axis <= src.dim(); ++axis) {
            for (const ConsensusPattern& pat : find_consensus_patterns(src, axis)) {
                const ConsensusCheck check = verify_consensus(rec, pat);
                if (!check.pattern_valid) continue;
                ++checked;
                violations += static_cast<Index>(check.violations.size());
                patterns.push_back(consensus_check_json(pat, check));
            }
        }
        *pass = violations == 0 ? 1 : 0;
        nlohmann::json j;
        j["audit"] = "consensus";
        j["patterns_checked"] = checked;
        j["total_violations"] = violations;
        j["patterns"] = std::move(patterns);
        j["pass"] = *pass == 1;
        if (checked == 0) j["note"] = "no valid consensus patterns found in the input";
        *out = new sr_report{j.dump(2) + "\n", std::nullopt};
    });
}

sr_status sr_audit_consensus_synthetic(const int64_t* extents, int32_t ndim, int32_t trials,
                                       uint64_t seed, double epsilon, int64_t max_sweeps,
                                       int32_t* pass, sr_report** out) {
    return guarded([&] {
        if (!extents || !pass || !out) throw ConfigError("null argument");
        if (trials < 1) throw ConfigError("trials must be positive");
        const Shape shape(std::vector<Index>(extents, extents + ndim));
        const ConvergenceConfig cfg = make_cfg(epsilon, max_sweeps);
        nlohmann::json patterns = nlohmann::json::array();
        Index violations = 0;
        for (int32_t trial = 0; trial < trials; ++trial) {
            const Index axis = 1 + static_cast<Index>(trial) % shape.dim();
            const Index max_slices = std::min<Index>(shape.extent(axis - 1), 4);
            if (max_slices < 2) throw ConfigError("axis extent too small for a pattern");
            const PlantedConsensus planted =
                plant_consensus_instance(shape, axis, max_slices, seed + static_cast<uint64_t>(trial));
            const Recommender rec(planted.tensor, Method::sc, cfg);
            const ConsensusCheck check = verify_consensus(rec, planted.pattern);
            if (!check.pattern_valid) throw ConfigError("planted pattern failed validation: " + check.precondition_error);
            violations += static_cast<Index>(check.violations.size());
            patterns.push_back(consensus_check_json(planted.pattern, check));
        }
        *pass = violations == 0 ? 1 : 0;
        nlohmann::json j;
        j["audit"] = "consensus-synthetic";
        j["shape"] = shape.extents();
        j["trials"] = trials;
        j["seed"] = seed;
        j["total_violations"] = violations;
        j["patterns"] = std::move(patterns);
        j["pass"] = *pass == 1;
        *out = new sr_report{j.dump(2) + "\n", std::nullopt};
    });
}

sr_status sr_audit_fairness(const sr_tensor* t, int64_t user, double delta, const char* delta_mode,
                            const char* method, int32_t top_n_max, double epsilon,
                            int64_t max_sweeps, double tolerance, int32_t* pass, sr_report** out) {
    return guarded([&] {
        if (!t || !method || !pass || !out) throw ConfigError("null argument");
        const SparseTensor& src = t->tensor();
        DeltaMode mode = DeltaMode::automatic;
        if (delta_mode && std::strcmp(delta_mode, "auto") != 0) {
            if (std::strcmp(delta_mode, "add") == 0) {
                mode = DeltaMode::add;
            } else if (std::strcmp(delta_mode, "scale") == 0) {
                mode = DeltaMode::scale;
            } else {
                throw ConfigError("unknown delta mode '" + std::string(delta_mode) + "'");
            }
        }
        Index u = user;
        if (u == 0) {
            double scale_max = 0.0;
            for (Index e = 0; e < src.known_count(); ++e) scale_max = std::max(scale_max, src.value(e));
            u = default_fairness_user(src, scale_max);
        }
        if (top_n_max < 1) throw ConfigError("top-N max must be positive");
        std::vector<Index> ns(static_cast<std::size_t>(top_n_max));
        for (int32_t i = 0; i < top_n_max; ++i) ns[static_cast<std::size_t>(i)] = i + 1;
        const FairnessReport rep = fairness_probe(src, u, delta, ns, method_from_string(method),
                                                  make_cfg(epsilon, max_sweeps), mode);
        Index total_changes = 0;
        for (Index c : rep.changed_counts) total_changes += c;
        *pass = (rep.max_other_deviation <= tolerance && total_changes == 0) ? 1 : 0;

        nlohmann::json j;
        j["audit"] = "fairness";
        j["method"] = rep.method_label;
        j["shifted_user"] = rep.shifted_user;
        j["delta"] = rep.delta;
        j["delta_mode"] = rep.mode == DeltaMode::add ? "add" : "scale";
        j["users_evaluated"] = rep.users_evaluated;
        j["max_other_deviation"] = rep.max_other_deviation;
        j["max_self_deviation"] = rep.max_self_deviation;
        j["total_rank_changes"] = total_changes;
        j["tolerance"] = tolerance;
        j["changed_counts"] = rep.changed_counts;
        j["pass"] = *pass == 1;
        *out = new sr_report{j.dump(2) + "\n", fairness_csv(rep)};
    });
}

sr_status sr_eval_config_create(sr_eval_config** out) {
    return guarded([&] {
        if (!out) throw ConfigError("null argument");
        *out = new sr_eval_config{};
    });
}

void sr_eval_config_free(sr_eval_config* cfg) { delete cfg; }

sr_status sr_eval_config_set_input(sr_eval_config* cfg, const char* path, const char* flavor) {
    return guarded([&] {
        if (!cfg || !path || !flavor) throw ConfigError("null argument");
        if (std::strcmp(flavor, "coo") == 0) {
            cfg->config.source.kind = DataSource::Kind::coo_file;
        } else {
            cfg->config.source.kind = DataSource::Kind::movielens_file;
            cfg->config.source.flavor = movielens_flavor_from_string(flavor);
        }
        cfg->config.source.path = path;
    });
}

sr_status sr_eval_config_set_synthetic(sr_eval_config* cfg, const int64_t* extents, int32_t ndim,
                                       const char* model, double factor_min, double factor_max,
                                       double noise_std, double known_fraction,
                                       int32_t ensure_full_support, int32_t discretize,
                                       double scale_min, double scale_max, double scale_step) {
    return guarded([&] {
        if (!cfg || !extents || !model) throw ConfigError("null argument");
        SyntheticSpec spec;
        spec.shape = Shape(std::vector<Index>(extents, extents + ndim));
        if (std::strcmp(model, "additive") == 0) {
            spec.model = SyntheticModel::additive;
        } else if (std::strcmp(model, "multiplicative") == 0) {
            spec.model = SyntheticModel::multiplicative;
        } else {
            throw ConfigError("unknown model '" + std::string(model) + "'");
        }
        spec.factor_min = factor_min;
        spec.factor_max = factor_max;
        spec.noise_std = noise_std;
        spec.known_fraction = known_fraction;
        spec.ensure_full_support = ensure_full_support != 0;
        if (discretize) spec.discretize = RatingScale{scale_min, scale_max, scale_step};
        cfg->config.source.kind = DataSource::Kind::synthetic;
        cfg->config.source.synthetic = std::move(spec);
    });
}

sr_status sr_eval_config_set_methods(sr_eval_config* cfg, const char* methods) {
    return guarded([&] {
        if (!cfg || !methods) throw ConfigError("null argument");
        if (std::strcmp(methods, "both") == 0) {
            cfg->config.methods = {Method::sc, Method::uc};
        } else {
            cfg->config.methods = {method_from_string(methods)};
        }
    });
}

sr_status sr_eval_config_set_k(sr_eval_config* cfg, int32_t k) {
    return guarded([&] {
        if (!cfg) throw ConfigError("null argument");
        cfg->config.k = k;
    });
}

sr_status sr_eval_config_set_convergence(sr_eval_config* cfg, double epsilon, int64_t max_sweeps) {
    return guarded([&] {
        if (!cfg) throw ConfigError("null argument");
        cfg->config.convergence = make_cfg(epsilon, max_sweeps);
    });
}

sr_status sr_eval_config_set_split(sr_eval_config* cfg, double test_fraction,
                                   const double* fractions, int32_t n_fractions,
                                   const uint64_t* seeds, int32_t n_seeds) {
    return guarded([&] {
        if (!cfg) throw ConfigError("null argument");
        cfg->config.test_fraction = test_fraction;
        if (fractions && n_fractions > 0) {
            cfg->config.fractions.assign(fractions, fractions + n_fractions);
        }
        if (seeds && n_seeds > 0) {
            cfg->config.seeds.assign(seeds, seeds + n_seeds);
        }
    });
}

sr_status sr_evaluate(const sr_eval_config* cfg, sr_report** out) {
    return guarded([&] {
        if (!cfg || !out) throw ConfigError("null argument");
        const ExperimentReport rep = evaluate(cfg->config);
        *out = new sr_report{to_json(rep), to_csv(rep)};
    });
}

const char* sr_report_json(const sr_report* r) { return r ? r->json.c_str() : nullptr; }

const char* sr_report_csv(const sr_report* r) {
    return r && r->csv ? r->csv->c_str() : nullptr;
}

void sr_report_free(sr_report* r) { delete r; }

}  // extern "C"
