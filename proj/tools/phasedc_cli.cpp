// Command-line front end: solve, bench, trace, certify.

#include <atomic>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <phasedc/phasedc.hpp>

namespace {

using namespace phasedc;

std::atomic<bool> g_stop{false};

extern "C" void on_sigint(int) { g_stop.store(true); }

struct Options
{
    std::string preset;
    std::size_t n = 128;
    std::optional<std::size_t> m;
    double ratio = 2.0;
    std::vector<double> ratios;
    std::vector<std::size_t> sparsities;
    std::size_t s = 0;
    std::string field = "real";
    std::string solver = "dc";
    std::string init = "reweighted";
    std::uint64_t seed = 1;
    std::string noise = "none";
    double u = 0.0;
    double lambda = 1e-5;
    double tolerance = 1e-5;
    double step_tol = 1e-9;
    int max_outer = 3000;
    std::string inner_method = "bb";
    int inner_iters = 2;
    double momentum = 0.0;
    int max_iters = 5000;
    double alpha = 4.0;
    long cutoff = 100;
    bool no_momentum = false;
    int trials = 100;
    unsigned jobs = 1;
    std::string out;
    bool resume = false;
    int directions = 200;
};

InnerConfig::Method parse_inner_method(const std::string& text)
{
    if (text == "gd") return InnerConfig::Method::GD;
    if (text == "nesterov") return InnerConfig::Method::Nesterov;
    if (text == "bb") return InnerConfig::Method::BBNesterov;
    throw std::invalid_argument("unknown inner method '" + text + "'");
}

bool given(const CLI::App& app, const char* name) { return app.count(name) > 0; }

/// Preset (if any) overlaid with every option that was given explicitly.
ExperimentConfig build_config(const CLI::App& app, const Options& o, bool table)
{
    ExperimentConfig cfg;
    cfg.dc = benchmark_dc_config();
    if (!o.preset.empty()) {
        if (!table) throw std::invalid_argument("--preset applies to bench only");
        cfg = preset(o.preset);
    }
    const bool base = o.preset.empty();
    if (base || given(app, "--n")) cfg.n = o.n;
    if (base || given(app, "--field")) cfg.field = parse_field(o.field);
    if (base || given(app, "--solver")) cfg.solver = parse_solver(o.solver);
    if (base || given(app, "--init")) cfg.init = parse_init_method(o.init);
    if (base || given(app, "--tolerance")) cfg.success_threshold = o.tolerance;
    if (base || given(app, "--step-tol")) cfg.dc.step_tol = o.step_tol;
    if (base || given(app, "--max-outer")) cfg.dc.max_outer = o.max_outer;
    if (base || given(app, "--inner-method")) cfg.dc.inner.method = parse_inner_method(o.inner_method);
    if (base || given(app, "--inner-iters")) cfg.dc.inner.max_iters = o.inner_iters;
    if (base || given(app, "--momentum")) cfg.dc.inner.momentum = o.momentum;
    if (base || given(app, "--lambda")) cfg.sparse.lambda = o.lambda;
    if (base || given(app, "--max-iters")) cfg.sparse.max_iters = o.max_iters;
    if (base || given(app, "--alpha")) cfg.sparse.alpha = o.alpha;
    if (base || given(app, "--K")) cfg.sparse.momentum_cutoff = o.cutoff;
    if (given(app, "--no-momentum")) cfg.sparse.momentum = !o.no_momentum;
    cfg.base_seed = o.seed;
    cfg.noise.model = parse_noise_model(o.noise);
    cfg.noise.u = o.u;
    if (cfg.noise.model != NoiseSpec::Model::None && !(o.u > 0.0)) {
        throw std::invalid_argument("--noise needs a positive --u");
    }

    if (table) {
        if (given(app, "--ratios")) cfg.ratios = o.ratios;
        else if (base && given(app, "--ratio")) cfg.ratios = {o.ratio};
        if (given(app, "--sparsities")) cfg.sparsities = o.sparsities;
        else if (base && given(app, "--s") && o.s > 0) cfg.sparsities = {o.s};
        if (base || given(app, "--trials")) cfg.trials = o.trials;
    } else {
        if (o.m) {
            if (*o.m < 1) throw std::invalid_argument("--m must be positive");
            cfg.ratios = {static_cast<double>(*o.m) / static_cast<double>(cfg.n)};
        } else {
            cfg.ratios = {o.ratio};
        }
        cfg.sparsities.clear();
        if (o.s > 0) cfg.sparsities = {o.s};
        cfg.trials = 1;
    }
    cfg.validate();
    return cfg;
}

std::ostream* open_out(const std::string& path, std::ofstream& file)
{
    if (path.empty() || path == "-") return &std::cout;
    file.open(path);
    if (!file) throw std::invalid_argument("cannot write '" + path + "'");
    return &file;
}

struct SolveOutcome
{
    TrialInstance instance;
    DcRun run;
    double distance = 0.0;
};

SolveOutcome solve_once(const ExperimentConfig& cfg)
{
    TrialInstance inst = make_trial_instance(cfg, {0, 0}, 0);
    DcRun run = solve_instance(cfg, inst);
    const double d = dist_up_to_phase(run.x, inst.truth) / inst.truth.norm();
    return {std::move(inst), std::move(run), d};
}

void print_summary(const ExperimentConfig& cfg, const SolveOutcome& s)
{
    const auto& last = s.run.trace.records.back();
    std::printf("solver %s  field %s  n %zu  m %zu  s %zu\n", std::string(to_string(cfg.solver)).c_str(),
                std::string(to_string(cfg.field)).c_str(), cfg.n, s.instance.m, s.instance.s);
    std::printf("final_distance %.6e\n", s.distance);
    std::printf("iterations %d\n", s.run.trace.outer_iterations());
    std::printf("objective %.6e\n", last.objective);
    std::printf("stop_reason %s\n", s.run.trace.stop_reason.c_str());
    std::printf("success %s\n", s.distance <= cfg.success_threshold ? "yes" : "no");
    if (s.instance.start.uninformed) std::printf("warning uninformed_init\n");
    if (s.run.trace.negative_values) std::printf("warning negative_values\n");
}

int cmd_bench(const CLI::App& app, const Options& o)
{
    const ExperimentConfig cfg = build_config(app, o, true);
    std::optional<SuccessTable> prior;
    const std::string meta_path = o.out.empty() ? std::string() : o.out + ".provenance";
    if (o.resume) {
        if (o.out.empty()) throw std::invalid_argument("--resume needs --out");
        std::ifstream in(o.out);
        if (in) {
            std::ifstream meta(meta_path);
            std::uint64_t hash = 0;
            std::string key;
            if (meta >> key >> hash && hash != config_hash(cfg)) {
                throw std::invalid_argument("--resume: '" + o.out + "' was produced by a different configuration");
            }
            prior = read_table_csv(in);
        }
    }

    std::signal(SIGINT, on_sigint);
    RunTableOptions opts;
    opts.jobs = std::max(1u, o.jobs);
    opts.stop = &g_stop;
    if (prior) opts.prior = &*prior;
    const SuccessTable table = run_table(cfg, opts);
    std::signal(SIGINT, SIG_DFL);

    std::ofstream file;
    std::ostream* os = open_out(o.out, file);
    write_table_csv(*os, table);
    if (!meta_path.empty()) {
        std::ofstream meta(meta_path);
        meta << "config_hash " << table.config_hash << "\nbase_seed " << table.base_seed << "\ntrials " << cfg.trials
             << '\n';
    }
    std::fprintf(stderr, "config_hash %016llx  base_seed %llu\n", static_cast<unsigned long long>(table.config_hash),
                 static_cast<unsigned long long>(table.base_seed));
    if (!table.complete) {
        std::fprintf(stderr, "interrupted: partial table written; rerun with --resume to continue\n");
        return 130;
    }
    return 0;
}

int cmd_solve(const CLI::App& app, const Options& o)
{
    const ExperimentConfig cfg = build_config(app, o, false);
    print_summary(cfg, solve_once(cfg));
    return 0;
}

int cmd_trace(const CLI::App& app, const Options& o)
{
    const ExperimentConfig cfg = build_config(app, o, false);
    const SolveOutcome s = solve_once(cfg);
    std::ofstream file;
    write_trace_csv(*open_out(o.out, file), s.run.trace);
    return 0;
}

int cmd_certify(const CLI::App& app, const Options& o)
{
    const ExperimentConfig cfg = build_config(app, o, false);
    if (o.directions < 1) throw std::invalid_argument("--directions must be >= 1");
    const SolveOutcome s = solve_once(cfg);
    print_summary(cfg, s);
    const SplitObjective obj(s.instance.ensemble);
    const HessianCertificate cert = certify_minimizer_hessian(obj, s.run.x, o.directions, derive_seed(cfg.base_seed, 9));
    std::printf("min_quadratic_form %.6e over %d directions\n", cert.min_quadratic_form, cert.directions);
    if (cert.null_direction_residual) std::printf("null_direction_residual %.6e\n", *cert.null_direction_residual);
    std::printf("certified %s\n", cert.flagged ? "no" : "yes");
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Phase retrieval by difference-of-convex minimization"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_config("--config", "", "Flat key=value file; command-line flags take precedence");

    Options o;
    std::string m_text;
    app.add_option("--preset", o.preset, "bench grid: table1 .. table6, table2-gn, table3-gn");
    app.add_option("--n", o.n, "Signal dimension");
    app.add_option("--m", m_text, "Number of measurements (overrides --ratio)");
    app.add_option("--ratio", o.ratio, "Measurements per dimension m/n");
    app.add_option("--ratios", o.ratios, "bench: list of m/n ratios")->delimiter(',');
    app.add_option("--s", o.s, "Sparsity of the truth (0 = dense)");
    app.add_option("--sparsities", o.sparsities, "bench: list of sparsity levels")->delimiter(',');
    app.add_option("--field", o.field, "real | complex");
    app.add_option("--solver", o.solver, "dc | l1dc | l1dc-hard | gn");
    app.add_option("--init", o.init, "spectral | reweighted");
    app.add_option("--seed", o.seed, "Base seed");
    app.add_option("--noise", o.noise, "none | additive | inside-outside");
    app.add_option("--u", o.u, "Noise half-width");
    app.add_option("--lambda", o.lambda, "l1 weight");
    app.add_option("--tolerance", o.tolerance, "Relative distance counted as success");
    app.add_option("--step-tol", o.step_tol, "Outer stopping tolerance on the step norm");
    app.add_option("--max-outer", o.max_outer, "Outer iteration cap (dc, gn)");
    app.add_option("--inner-method", o.inner_method, "gd | nesterov | bb");
    app.add_option("--inner-iters", o.inner_iters, "Inner iteration cap T");
    app.add_option("--momentum", o.momentum, "Inner momentum coefficient q");
    app.add_option("--max-iters", o.max_iters, "Iteration cap (l1dc, l1dc-hard)");
    app.add_option("--alpha", o.alpha, "Attouch-Peypouquet alpha (> 3)");
    app.add_option("--K", o.cutoff, "Iteration after which the momentum weight is frozen");
    app.add_flag("--no-momentum", o.no_momentum, "Plain proximal iteration for l1dc");
    app.add_option("--trials", o.trials, "bench: trials per cell");
    app.add_option("--jobs", o.jobs, "bench: worker threads");
    app.add_option("--out", o.out, "Output CSV path (default stdout)");
    app.add_flag("--resume", o.resume, "bench: continue the table in --out");
    app.add_option("--directions", o.directions, "certify: random directions");

    auto* solve = app.add_subcommand("solve", "Solve one random instance");
    auto* bench = app.add_subcommand("bench", "Monte-Carlo success table as CSV");
    auto* trace = app.add_subcommand("trace", "Per-iteration trace of one solve as CSV");
    auto* certify = app.add_subcommand("certify", "Solve, then check the Hessian at the result");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (!m_text.empty()) {
            std::size_t used = 0;
            const long long v = std::stoll(m_text, &used);
            if (used != m_text.size() || v < 1) throw std::invalid_argument("--m must be a positive integer");
            o.m = static_cast<std::size_t>(v);
        }
        if (*solve) return cmd_solve(app, o);
        if (*bench) return cmd_bench(app, o);
        if (*trace) return cmd_trace(app, o);
        if (*certify) return cmd_certify(app, o);
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
