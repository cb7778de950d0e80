// Command-line front end for the shift-consistent completion engine. Talks
// to the engine exclusively through the C API in shiftrec.h.

#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "shiftrec.h"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitProperty = 5;

struct TensorDeleter {
    void operator()(sr_tensor* t) const { sr_tensor_free(t); }
};
struct CompletionDeleter {
    void operator()(sr_completion* c) const { sr_completion_free(c); }
};
struct ReportDeleter {
    void operator()(sr_report* r) const { sr_report_free(r); }
};
struct EvalConfigDeleter {
    void operator()(sr_eval_config* c) const { sr_eval_config_free(c); }
};
using TensorPtr = std::unique_ptr<sr_tensor, TensorDeleter>;
using CompletionPtr = std::unique_ptr<sr_completion, CompletionDeleter>;
using ReportPtr = std::unique_ptr<sr_report, ReportDeleter>;
using EvalConfigPtr = std::unique_ptr<sr_eval_config, EvalConfigDeleter>;

int fail(sr_status status) {
    std::fprintf(stderr, "error: %s\n", sr_last_error());
    return static_cast<int>(status);
}

std::vector<int64_t> parse_i64_list(const std::string& s) {
    std::vector<int64_t> out;
    std::size_t i = 0;
    while (i < s.size()) {
        std::size_t j = s.find(',', i);
        if (j == std::string::npos) j = s.size();
        out.push_back(std::strtoll(s.substr(i, j - i).c_str(), nullptr, 10));
        i = j + 1;
    }
    return out;
}

std::vector<double> parse_f64_list(const std::string& s) {
    std::vector<double> out;
    std::size_t i = 0;
    while (i < s.size()) {
        std::size_t j = s.find(',', i);
        if (j == std::string::npos) j = s.size();
        out.push_back(std::strtod(s.substr(i, j - i).c_str(), nullptr));
        i = j + 1;
    }
    return out;
}

bool write_output(const std::string& path, const char* content) {
    if (!content) {
        std::fprintf(stderr, "error: report has no output in the requested format\n");
        return false;
    }
    if (path.empty() || path == "-") {
        std::fputs(content, stdout);
        return true;
    }
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) {
        std::fprintf(stderr, "error: cannot open %s for writing\n", path.c_str());
        return false;
    }
    std::fputs(content, f);
    std::fclose(f);
    return true;
}

// Shared flags describing where a tensor comes from: a file or a synthetic
// instance.
struct SourceOptions {
    std::string input;
    std::string flavor = "coo";
    std::string shape;
    std::string model = "additive";
    double factor_min = 0.5;
    double factor_max = 2.5;
    double noise_std = 0.0;
    double known_fraction = 0.3;
    std::string discretize;  // "min,max,step"
    bool ensure_full_support = false;
    std::uint64_t seed = 1;
};

void add_source_options(CLI::App* cmd, SourceOptions& src, bool with_seed = true) {
    cmd->add_option("--input", src.input, "Input file (COO or MovieLens)");
    cmd->add_option("--flavor", src.flavor, "Input format: coo, ml100k, ml1m, ml10m")
        ->check(CLI::IsMember({"coo", "ml100k", "ml1m", "ml10m"}));
    cmd->add_option("--shape", src.shape, "Synthetic shape, e.g. 50,80 (used when --input is absent)");
    cmd->add_option("--model", src.model, "Synthetic model: additive or multiplicative")
        ->check(CLI::IsMember({"additive", "multiplicative"}));
    cmd->add_option("--factor-min", src.factor_min, "Synthetic factor range lower bound");
    cmd->add_option("--factor-max", src.factor_max, "Synthetic factor range upper bound");
    cmd->add_option("--noise-std", src.noise_std, "Synthetic Gaussian noise stddev");
    cmd->add_option("--known-fraction", src.known_fraction, "Synthetic fraction of known cells");
    cmd->add_option("--discretize", src.discretize, "Clamp+round to a scale, e.g. 1,5,1");
    cmd->add_flag("--ensure-full-support", src.ensure_full_support,
                  "Keep the far shell known so every unknown has a support hypercube");
    if (with_seed) cmd->add_option("--seed", src.seed, "Generation / audit seed");
}

sr_status load_tensor(const SourceOptions& src, TensorPtr& out) {
    sr_tensor* raw = nullptr;
    sr_status st;
    if (!src.input.empty()) {
        st = src.flavor == "coo" ? sr_tensor_read_coo(src.input.c_str(), &raw)
                                 : sr_tensor_read_movielens(src.input.c_str(), src.flavor.c_str(), &raw);
    } else if (!src.shape.empty()) {
        const auto extents = parse_i64_list(src.shape);
        std::vector<double> disc = src.discretize.empty() ? std::vector<double>{}
                                                          : parse_f64_list(src.discretize);
        st = sr_generate(extents.data(), static_cast<int32_t>(extents.size()), src.model.c_str(),
                         src.factor_min, src.factor_max, src.noise_std, src.known_fraction,
                         src.ensure_full_support ? 1 : 0, disc.empty() ? 0 : 1,
                         disc.size() > 0 ? disc[0] : 0.0, disc.size() > 1 ? disc[1] : 0.0,
                         disc.size() > 2 ? disc[2] : 0.0, src.seed, &raw, nullptr);
    } else {
        std::fprintf(stderr, "error: provide --input or --shape\n");
        return SR_ERROR_CONFIG;
    }
    out.reset(raw);
    return st;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"shiftrec: shift-consistent sparse tensor completion and audits"};
    app.require_subcommand(1);

    // ---- complete ----
    auto* complete = app.add_subcommand("complete", "Complete a tensor and write full-grid COO");
    SourceOptions complete_src;
    add_source_options(complete, complete_src);
    std::string complete_method = "sc";
    int32_t complete_k = 0;
    double complete_eps = 1e-18;
    std::int64_t complete_sweeps = 10000;
    std::string complete_out = "-";
    complete->add_option("--method", complete_method, "sc or uc")->check(CLI::IsMember({"sc", "uc"}));
    complete->add_option("--k", complete_k, "Subtensor order (0 = d-1)");
    complete->add_option("--epsilon", complete_eps, "Per-sweep variance threshold");
    complete->add_option("--max-sweeps", complete_sweeps, "Sweep cap");
    complete->add_option("--out", complete_out, "Output path ('-' = stdout)");

    // ---- evaluate ----
    auto* evaluate = app.add_subcommand("evaluate", "RMSE/MAE sweep over dataset fractions");
    SourceOptions eval_src;
    add_source_options(evaluate, eval_src, false);
    std::string eval_method = "both";
    int32_t eval_k = 0;
    double eval_eps = 1e-18;
    std::int64_t eval_sweeps = 10000;
    double eval_test_fraction = 0.2;
    std::string eval_fractions = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1.0";
    std::string eval_seeds = "1,2,3,4,5";
    std::string eval_out = "-";
    std::string eval_format = "json";
    evaluate->add_option("--method", eval_method, "sc, uc, or both")
        ->check(CLI::IsMember({"sc", "uc", "both"}));
    evaluate->add_option("--k", eval_k, "Subtensor order (0 = d-1)");
    evaluate->add_option("--epsilon", eval_eps, "Per-sweep variance threshold");
    evaluate->add_option("--max-sweeps", eval_sweeps, "Sweep cap");
    evaluate->add_option("--test-fraction", eval_test_fraction, "Held-out fraction of known entries");
    evaluate->add_option("--fractions", eval_fractions, "Comma-separated sweep fractions");
    evaluate->add_option("--seeds", eval_seeds, "Comma-separated seeds");
    evaluate->add_option("--out", eval_out, "Report path ('-' = stdout)");
    evaluate->add_option("--format", eval_format, "json or csv")->check(CLI::IsMember({"json", "csv"}));

    // ---- audit ----
    auto* audit = app.add_subcommand("audit", "Property audits");
    audit->require_subcommand(1);

    auto* a_support = audit->add_subcommand("support", "Full-support certification");
    SourceOptions sup_src;
    add_source_options(a_support, sup_src);
    std::int64_t sup_budget = 10000;
    std::string sup_out = "-";
    a_support->add_option("--budget", sup_budget, "Candidate offsets per unknown entry");
    a_support->add_option("--out", sup_out, "Report path");

    auto* a_shift = audit->add_subcommand("shift-consistency", "Randomized shift-invariance check");
    SourceOptions shift_src;
    add_source_options(a_shift, shift_src);
    int32_t shift_k = 1, shift_trials = 10;
    double shift_eps = 1e-18, shift_tol = 1e-8;
    std::int64_t shift_sweeps = 10000;
    std::string shift_out = "-";
    a_shift->add_option("--k", shift_k, "Subtensor order");
    a_shift->add_option("--trials", shift_trials, "Random shift vectors to try");
    a_shift->add_option("--epsilon", shift_eps, "Per-sweep variance threshold");
    a_shift->add_option("--max-sweeps", shift_sweeps, "Sweep cap");
    a_shift->add_option("--tol", shift_tol, "Max allowed deviation");
    a_shift->add_option("--out", shift_out, "Report path");

    auto* a_uniq = audit->add_subcommand("uniqueness", "Sweep-order independence check");
    SourceOptions uniq_src;
    add_source_options(a_uniq, uniq_src);
    int32_t uniq_k = 1, uniq_orders = 3;
    double uniq_eps = 1e-18, uniq_tol = 1e-8;
    std::int64_t uniq_sweeps = 10000, uniq_budget = 10000;
    std::string uniq_out = "-";
    a_uniq->add_option("--k", uniq_k, "Subtensor order");
    a_uniq->add_option("--orders", uniq_orders, "Sweep orders to compare (>= 2)");
    a_uniq->add_option("--epsilon", uniq_eps, "Per-sweep variance threshold");
    a_uniq->add_option("--max-sweeps", uniq_sweeps, "Sweep cap");
    a_uniq->add_option("--tol", uniq_tol, "Max allowed deviation");
    a_uniq->add_option("--budget", uniq_budget, "Support-search candidate budget");
    a_uniq->add_option("--out", uniq_out, "Report path");

    auto* a_cons = audit->add_subcommand("consensus", "Consensus-ordering check");
    SourceOptions cons_src;
    add_source_options(a_cons, cons_src);
    int32_t cons_trials = 10;
    double cons_eps = 1e-18;
    std::int64_t cons_sweeps = 10000;
    std::string cons_out = "-";
    a_cons->add_option("--trials", cons_trials, "Planted patterns when running synthetically");
    a_cons->add_option("--epsilon", cons_eps, "Per-sweep variance threshold");
    a_cons->add_option("--max-sweeps", cons_sweeps, "Sweep cap");
    a_cons->add_option("--out", cons_out, "Report path");

    auto* a_fair = audit->add_subcommand("fairness", "Single-user shift probe");
    SourceOptions fair_src;
    add_source_options(a_fair, fair_src);
    std::int64_t fair_user = 0;
    double fair_delta = 1.0, fair_eps = 1e-24, fair_tol = 1e-9;
    std::int64_t fair_sweeps = 100000;
    int32_t fair_nmax = 25;
    std::string fair_mode = "auto", fair_out = "-", fair_format = "json";
    a_fair->add_option("--user", fair_user, "User to shift (0 = auto-pick)");
    a_fair->add_option("--delta", fair_delta, "Shift amount (or scale factor)");
    a_fair->add_option("--delta-mode", fair_mode, "auto, add, or scale")
        ->check(CLI::IsMember({"auto", "add", "scale"}));
    std::string fair_method = "sc";
    a_fair->add_option("--method", fair_method, "sc or uc")->check(CLI::IsMember({"sc", "uc"}));
    a_fair->add_option("--n-max", fair_nmax, "Check top-N for N in 1..n-max");
    a_fair->add_option("--epsilon", fair_eps, "Per-sweep variance threshold");
    a_fair->add_option("--max-sweeps", fair_sweeps, "Sweep cap");
    a_fair->add_option("--tol", fair_tol, "Max allowed prediction deviation for other users");
    a_fair->add_option("--out", fair_out, "Report path");
    a_fair->add_option("--format", fair_format, "json or csv")->check(CLI::IsMember({"json", "csv"}));

    // ---- generate ----
    auto* generate = app.add_subcommand("generate", "Write a synthetic instance as COO");
    SourceOptions gen_src;
    add_source_options(generate, gen_src);
    std::string gen_out = "-", gen_truth_out;
    generate->get_option("--input")->excludes(generate->get_option("--shape"));
    generate->add_option("--out", gen_out, "Masked tensor path");
    generate->add_option("--truth-out", gen_truth_out, "Ground-truth tensor path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return kExitConfig;
    }

    if (complete->parsed()) {
        TensorPtr t;
        if (sr_status st = load_tensor(complete_src, t); st != SR_OK) return fail(st);
        sr_completion* raw = nullptr;
        if (sr_status st = sr_complete(t.get(), complete_k, complete_method.c_str(), complete_eps,
                                       complete_sweeps, &raw);
            st != SR_OK) {
            return fail(st);
        }
        CompletionPtr c(raw);
        std::fprintf(stderr, "converged in %" PRId64 " sweeps, residual %.3e, last sweep variance %.3e\n",
                     sr_completion_sweeps(c.get()), sr_completion_residual(c.get()),
                     sr_completion_last_sweep_variance(c.get()));
        if (sr_status st = sr_completion_write_coo(c.get(), complete_out.c_str()); st != SR_OK) {
            return fail(st);
        }
        return 0;
    }

    if (evaluate->parsed()) {
        sr_eval_config* raw_cfg = nullptr;
        if (sr_status st = sr_eval_config_create(&raw_cfg); st != SR_OK) return fail(st);
        EvalConfigPtr cfg(raw_cfg);
        sr_status st = SR_OK;
        if (!eval_src.input.empty()) {
            st = sr_eval_config_set_input(cfg.get(), eval_src.input.c_str(), eval_src.flavor.c_str());
        } else if (!eval_src.shape.empty()) {
            const auto extents = parse_i64_list(eval_src.shape);
            std::vector<double> disc = eval_src.discretize.empty() ? std::vector<double>{}
                                                                   : parse_f64_list(eval_src.discretize);
            st = sr_eval_config_set_synthetic(
                cfg.get(), extents.data(), static_cast<int32_t>(extents.size()),
                eval_src.model.c_str(), eval_src.factor_min, eval_src.factor_max,
                eval_src.noise_std, eval_src.known_fraction, eval_src.ensure_full_support ? 1 : 0,
                disc.empty() ? 0 : 1, disc.size() > 0 ? disc[0] : 0.0,
                disc.size() > 1 ? disc[1] : 0.0, disc.size() > 2 ? disc[2] : 0.0);
        } else {
            std::fprintf(stderr, "error: provide --input or --shape\n");
            return kExitConfig;
        }
        if (st != SR_OK) return fail(st);
        if ((st = sr_eval_config_set_methods(cfg.get(), eval_method.c_str())) != SR_OK) return fail(st);
        if ((st = sr_eval_config_set_k(cfg.get(), eval_k)) != SR_OK) return fail(st);
        if ((st = sr_eval_config_set_convergence(cfg.get(), eval_eps, eval_sweeps)) != SR_OK) return fail(st);
        const auto fractions = parse_f64_list(eval_fractions);
        const auto seeds_i64 = parse_i64_list(eval_seeds);
        const std::vector<uint64_t> seeds(seeds_i64.begin(), seeds_i64.end());
        if ((st = sr_eval_config_set_split(cfg.get(), eval_test_fraction, fractions.data(),
                                           static_cast<int32_t>(fractions.size()), seeds.data(),
                                           static_cast<int32_t>(seeds.size()))) != SR_OK) {
            return fail(st);
        }
        sr_report* raw_rep = nullptr;
        if ((st = sr_evaluate(cfg.get(), &raw_rep)) != SR_OK) return fail(st);
        ReportPtr rep(raw_rep);
        const char* content = eval_format == "csv" ? sr_report_csv(rep.get()) : sr_report_json(rep.get());
        return write_output(eval_out, content) ? 0 : kExitConfig;
    }

    if (audit->parsed()) {
        int32_t pass = 0;
        sr_report* raw_rep = nullptr;
        std::string out_path = "-", format = "json";
        sr_status st = SR_OK;

        if (a_support->parsed()) {
            TensorPtr t;
            if ((st = load_tensor(sup_src, t)) != SR_OK) return fail(st);
            st = sr_audit_support(t.get(), sup_budget, &pass, &raw_rep);
            out_path = sup_out;
        } else if (a_shift->parsed()) {
            TensorPtr t;
            if ((st = load_tensor(shift_src, t)) != SR_OK) return fail(st);
            st = sr_audit_shift_consistency(t.get(), shift_k, shift_trials, shift_src.seed,
                                            shift_eps, shift_sweeps, shift_tol, &pass, &raw_rep);
            out_path = shift_out;
        } else if (a_uniq->parsed()) {
            TensorPtr t;
            if ((st = load_tensor(uniq_src, t)) != SR_OK) return fail(st);
            st = sr_audit_uniqueness(t.get(), uniq_k, uniq_orders, uniq_src.seed, uniq_eps,
                                     uniq_sweeps, uniq_tol, uniq_budget, &pass, &raw_rep);
            out_path = uniq_out;
        } else if (a_cons->parsed()) {
            if (!cons_src.input.empty()) {
                TensorPtr t;
                if ((st = load_tensor(cons_src, t)) != SR_OK) return fail(st);
                st = sr_audit_consensus(t.get(), cons_eps, cons_sweeps, &pass, &raw_rep);
            } else if (!cons_src.shape.empty()) {
                const auto extents = parse_i64_list(cons_src.shape);
                st = sr_audit_consensus_synthetic(extents.data(), static_cast<int32_t>(extents.size()),
                                                  cons_trials, cons_src.seed, cons_eps, cons_sweeps,
                                                  &pass, &raw_rep);
            } else {
                std::fprintf(stderr, "error: provide --input or --shape\n");
                return kExitConfig;
            }
            out_path = cons_out;
        } else if (a_fair->parsed()) {
            TensorPtr t;
            if ((st = load_tensor(fair_src, t)) != SR_OK) return fail(st);
            st = sr_audit_fairness(t.get(), fair_user, fair_delta, fair_mode.c_str(),
                                   fair_method.c_str(), fair_nmax, fair_eps, fair_sweeps, fair_tol,
                                   &pass, &raw_rep);
            out_path = fair_out;
            format = fair_format;
        }
        if (st != SR_OK) return fail(st);
        ReportPtr rep(raw_rep);
        const char* content = format == "csv" ? sr_report_csv(rep.get()) : sr_report_json(rep.get());
        if (!write_output(out_path, content)) return kExitConfig;
        std::fprintf(stderr, "audit: %s\n", pass ? "PASS" : "FAIL (property violation)");
        return pass ? 0 : kExitProperty;
    }

    if (generate->parsed()) {
        if (gen_src.shape.empty()) {
            std::fprintf(stderr, "error: generate requires --shape\n");
            return kExitConfig;
        }
        const auto extents = parse_i64_list(gen_src.shape);
        std::vector<double> disc = gen_src.discretize.empty() ? std::vector<double>{}
                                                              : parse_f64_list(gen_src.discretize);
        sr_tensor* masked = nullptr;
        sr_tensor* truth = nullptr;
        sr_status st = sr_generate(extents.data(), static_cast<int32_t>(extents.size()),
                                   gen_src.model.c_str(), gen_src.factor_min, gen_src.factor_max,
                                   gen_src.noise_std, gen_src.known_fraction,
                                   gen_src.ensure_full_support ? 1 : 0, disc.empty() ? 0 : 1,
                                   disc.size() > 0 ? disc[0] : 0.0, disc.size() > 1 ? disc[1] : 0.0,
                                   disc.size() > 2 ? disc[2] : 0.0, gen_src.seed, &masked,
                                   gen_truth_out.empty() ? nullptr : &truth);
        if (st != SR_OK) return fail(st);
        TensorPtr m(masked), tr(truth);
        if ((st = sr_tensor_write_coo(m.get(), gen_out.c_str())) != SR_OK) return fail(st);
        if (tr && (st = sr_tensor_write_coo(tr.get(), gen_truth_out.c_str())) != SR_OK) return fail(st);
        return 0;
    }

    return kExitConfig;
}
