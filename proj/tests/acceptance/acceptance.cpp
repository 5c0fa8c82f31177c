// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails. Usage: phasedc_acceptance --cli <path> [--only 1,7,15]

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "../test_support.hpp"

using namespace phasedc;
using namespace phasedc::testing;

namespace {

// ---- pinned tolerances --------------------------------------------------

constexpr double band_floor = 0.10;
constexpr double descent_slack = 1e-8;
constexpr double stationarity_factor = 10.0;
constexpr double fd_gradient_tol = 1e-5;
constexpr double fd_form_tol = 1e-3;
constexpr double prox_tol = 1e-6;
constexpr double hard_threshold_tol = 1e-12;
constexpr double rate_r2_min = 0.9;
constexpr double null_residual_tol = 1e-8;
constexpr double recovery_tol = 1e-5;
constexpr double noise_gap = 0.10;

struct Verdict
{
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

/// Normal-approximation acceptance band around a published proportion.
double band(double p, int trials) { return std::max(band_floor, 3.0 * std::sqrt(p * (1.0 - p) / trials)); }

unsigned g_jobs = 1;

double rate_of(const SuccessTable& t, double ratio, std::size_t s = 0)
{
    const CellResult* c = t.find(ratio, s);
    if (!c || c->trials == 0) return std::nan("");
    return static_cast<double>(c->successes) / c->trials;
}

SuccessTable run_cells(ExperimentConfig cfg, std::vector<double> ratios, std::vector<std::size_t> sparsities, int trials)
{
    cfg.ratios = std::move(ratios);
    cfg.sparsities = std::move(sparsities);
    cfg.trials = trials;
    RunTableOptions opts;
    opts.jobs = g_jobs;
    return run_table(cfg, opts);
}

Verdict within_band(const char* label, double rate, double paper, int trials)
{
    const double b = band(paper, trials);
    const bool ok = std::abs(rate - paper) <= b;
    return {ok, fmt("%s measured %.3f paper %.3f band %.3f", label, rate, paper, b)};
}

Verdict join(const std::vector<Verdict>& parts)
{
    Verdict v{true, ""};
    for (const auto& p : parts) {
        v.pass = v.pass && p.pass;
        if (!v.detail.empty()) v.detail += "; ";
        v.detail += p.detail;
    }
    return v;
}

// ---- 1, 14: table 1 cells ----------------------------------------------

constexpr int c1_trials = 200;
std::optional<SuccessTable> g_table1;

const SuccessTable& table1_cells()
{
    if (!g_table1) g_table1 = run_cells(preset("table1"), {1.5, 2.0}, {}, c1_trials);
    return *g_table1;
}

Verdict criterion1()
{
    const SuccessTable& t = table1_cells();
    return join({within_band("m/n=1.5", rate_of(t, 1.5), 0.107, c1_trials),
                 within_band("m/n=2.0", rate_of(t, 2.0), 0.708, c1_trials)});
}

Verdict criterion14()
{
    const double clean = rate_of(table1_cells(), 2.0);
    ExperimentConfig cfg = preset("table1");
    cfg.noise.model = NoiseSpec::Model::Additive;
    cfg.noise.u = 1e-3;
    cfg.success_threshold = 1e-3;
    const double noisy = rate_of(run_cells(cfg, {2.0}, {}, c1_trials), 2.0);
    return {std::abs(noisy - clean) <= noise_gap,
            fmt("noiseless %.3f noisy(u=1e-3, tol 1e-3) %.3f gap limit %.2f", clean, noisy, noise_gap)};
}

// ---- 2 - 6: other table cells ------------------------------------------

Verdict criterion2()
{
    const double dc = rate_of(run_cells(preset("table2"), {2.5}, {}, 100), 2.5);
    const double gn = rate_of(run_cells(preset("table2-gn"), {2.5}, {}, 100), 2.5);
    Verdict v = within_band("DC", dc, 0.967, 100);
    v.pass = v.pass && dc > gn;
    v.detail += fmt("; GN measured %.3f (paper 0.776); DC > GN %s", gn, dc > gn ? "yes" : "no");
    return v;
}

Verdict criterion3()
{
    return within_band("complex DC m/n=3.0", rate_of(run_cells(preset("table3"), {3.0}, {}, 100), 3.0), 0.80, 100);
}

Verdict criterion4()
{
    ExperimentConfig cfg = preset("table4");
    cfg.sparse.lambda = 1e-5;
    cfg.sparse.max_iters = 5000;
    const SuccessTable t = run_cells(cfg, {2.0, 2.5}, {}, 100);
    return join({within_band("m/n=2.0", rate_of(t, 2.0), 0.57, 100), within_band("m/n=2.5", rate_of(t, 2.5), 0.99, 100)});
}

Verdict criterion5()
{
    return within_band("s=5 m/n=1.5", rate_of(run_cells(preset("table5"), {1.5}, {5}, 100), 1.5, 5), 0.80, 100);
}

Verdict criterion6()
{
    return within_band("s=1 m/n=1.0", rate_of(run_cells(preset("table6"), {1.0}, {1}, 100), 1.0, 1), 0.83, 100);
}

// ---- 7, 8, 12: clean corpus ---------------------------------------------

struct CorpusRun
{
    Instance inst;
    DcRun dc;
    DcRun l1;
};

std::optional<std::vector<CorpusRun>> g_corpus;

const std::vector<CorpusRun>& corpus()
{
    if (g_corpus) return *g_corpus;
    std::vector<CorpusRun> out;
    Rng rng(0xC0FFEE);
    for (std::uint64_t i = 0; i < 100; ++i) {
        const FieldTag field = i % 2 ? FieldTag::Complex : FieldTag::Real;
        const std::size_t n = 2 + rng.below(31);
        Instance inst = clean_instance(field, n, 4 * n, 1000 + i);
        SplitObjective obj(inst.ensemble);
        const Signal start = reweighted_init(inst.ensemble, i);

        DcConfig dc;
        dc.inner.max_iters = 5000;
        dc.objective_floor = 0.0;
        dc.step_tol = 1e-11;
        DcRun dc_run = run_dc(obj, start, dc);

        SparseConfig sc;
        sc.momentum = false;
        DcRun l1_run = run_l1_dc(obj, start, sc);
        out.push_back({std::move(inst), std::move(dc_run), std::move(l1_run)});
    }
    g_corpus = std::move(out);
    return *g_corpus;
}

Verdict criterion7()
{
    int dc_violations = 0, l1_violations = 0, dc_steps = 0, l1_steps = 0;
    for (const auto& c : corpus()) {
        SplitObjective obj(c.inst.ensemble);
        // F2 is quadratic for the square-modulus link, so its modulus is global.
        const double ell = obj.strong_convexity_F2(c.dc.trace.iterates.front());
        const auto& it = c.dc.trace.iterates;
        for (std::size_t k = 1; k < it.size(); ++k) {
            const double prev = obj.eval_F(Signal(c.inst.truth.field(), c.inst.truth.n(), it[k - 1]));
            const double next = obj.eval_F(Signal(c.inst.truth.field(), c.inst.truth.n(), it[k]));
            const double step = (it[k] - it[k - 1]).norm();
            dc_violations += next <= prev - 0.5 * ell * step * step + descent_slack * (1.0 + prev) ? 0 : 1;
            ++dc_steps;
        }
        const auto& recs = c.l1.trace.records;
        for (std::size_t k = 1; k < recs.size(); ++k) {
            const double prev = recs[k - 1].objective;
            const double l = std::isnan(recs[k].ell) ? ell : recs[k].ell;
            const bool holds = recs[k].objective
                               <= prev - 0.5 * l * recs[k].step_norm * recs[k].step_norm + descent_slack * (1.0 + prev);
            l1_violations += holds && recs[k].descent_ok ? 0 : 1;
            ++l1_steps;
        }
    }
    return {dc_violations == 0 && l1_violations == 0,
            fmt("run_dc %d violations over %d steps; momentum-free run_l1_dc %d over %d steps", dc_violations,
                dc_steps, l1_violations, l1_steps)};
}

Verdict criterion8()
{
    int violations = 0, steps = 0;
    double worst = 0.0;
    for (const auto& c : corpus()) {
        SplitObjective obj(c.inst.ensemble);
        const auto& it = c.dc.trace.iterates;
        const auto& recs = c.dc.trace.records;
        for (std::size_t k = 1; k < it.size(); ++k) {
            const Signal prev(c.inst.truth.field(), c.inst.truth.n(), it[k - 1]);
            const Signal next(c.inst.truth.field(), c.inst.truth.n(), it[k]);
            const double residual = (obj.grad_F1(next) - obj.grad_F2(prev)).norm();
            const double ratio = residual / recs[k].inner_tolerance;
            worst = std::max(worst, ratio);
            violations += ratio <= stationarity_factor ? 0 : 1;
            ++steps;
        }
    }
    return {violations == 0, fmt("%d of %d steps above %.0fx inner tolerance; worst ratio %.3g", violations, steps,
                                 stationarity_factor, worst)};
}

Verdict criterion12()
{
    int real_checked = 0, real_fail = 0, complex_checked = 0, complex_fail = 0;
    double worst_real = std::numeric_limits<double>::infinity(), worst_complex = 0.0;
    for (const auto& c : corpus()) {
        if (dist_up_to_phase(c.dc.x, c.inst.truth) > recovery_tol) continue;
        SplitObjective obj(c.inst.ensemble);
        const HessianCertificate cert = certify_minimizer_hessian(obj, c.dc.x, 200);
        if (c.inst.truth.field() == FieldTag::Real) {
            ++real_checked;
            worst_real = std::min(worst_real, cert.min_quadratic_form);
            real_fail += cert.min_quadratic_form > 0.0 ? 0 : 1;
        } else {
            ++complex_checked;
            // Scale: the form along the unit direction of x* itself.
            ObjectiveWorkspace ws;
            const Vector& x = c.dc.x.data();
            const double scale = obj.hessian_quadratic_form(x, Vector(x / x.norm()), ws);
            const double rel = std::abs(*cert.null_direction_residual) / scale;
            worst_complex = std::max(worst_complex, rel);
            complex_fail += rel <= null_residual_tol ? 0 : 1;
        }
    }
    const bool ok = real_fail == 0 && complex_fail == 0 && real_checked > 0 && complex_checked > 0;
    return {ok, fmt("real %d/%d certified (least form %.3g); complex %d/%d null residual within %.0e (worst %.3g)",
                    real_checked - real_fail, real_checked, worst_real, complex_checked - complex_fail,
                    complex_checked, null_residual_tol, worst_complex)};
}

// ---- 9: finite-difference oracles ---------------------------------------

Verdict criterion9()
{
    Rng rng(9);
    double worst_grad = 0.0, worst_form = 0.0;
    for (int p = 0; p < 100; ++p) {
        const FieldTag field = p % 2 ? FieldTag::Complex : FieldTag::Real;
        const std::size_t n = 2 + rng.below(9);
        const Instance inst = clean_instance(field, n, 4 * n, 900 + static_cast<std::uint64_t>(p));
        const SplitObjective obj(inst.ensemble);
        const Signal x = random_signal(field, n, rng);
        const Vector& xv = x.data();
        auto at = [&](const Vector& v) { return x.with_data(v); };

        const std::vector<std::pair<std::function<double(const Vector&)>, Vector>> parts{
            {[&](const Vector& v) { return obj.eval_F(at(v)); }, obj.grad_F(x)},
            {[&](const Vector& v) { return obj.eval_split(at(v)).f1; }, obj.grad_F1(x)},
            {[&](const Vector& v) { return obj.eval_split(at(v)).f2; }, obj.grad_F2(x)},
        };
        for (const auto& [f, g] : parts) {
            const Vector fd = fd_gradient(f, xv, 1e-5);
            worst_grad = std::max(worst_grad, (g - fd).norm() / std::max(1.0, fd.norm()));
        }

        ObjectiveWorkspace ws;
        const Vector y = random_vector(xv.size(), rng).normalized();
        const double h = 1e-5;
        const Vector gp = obj.grad_F(at(xv + h * y)), gm = obj.grad_F(at(xv - h * y));
        const double fd_form = y.dot(gp - gm) / (2.0 * h);
        const double form = obj.hessian_quadratic_form(xv, y, ws);
        worst_form = std::max(worst_form, std::abs(form - fd_form) / std::max(1.0, std::abs(fd_form)));
    }
    return {worst_grad <= fd_gradient_tol && worst_form <= fd_form_tol,
            fmt("worst gradient rel err %.3g (tol %.0e), worst quadratic-form rel err %.3g (tol %.0e)", worst_grad,
                fd_gradient_tol, worst_form, fd_form_tol)};
}

// ---- 10: prox and hard-threshold oracles --------------------------------

Verdict criterion10()
{
    Rng rng(10);
    double worst_prox = 0.0, worst_ht = 0.0;
    for (int c = 0; c < 100; ++c) {
        const double y0 = rng.uniform(-1.0, 1.0), g = rng.uniform(-1.0, 1.0);
        const double L = rng.uniform(1.0, 5.0), lambda = rng.uniform(0.0, 1.0);
        Vector yv(1), gv(1);
        yv << y0;
        gv << g;
        const double got = prox_l1_step(yv, gv, L, lambda)[0];
        worst_prox = std::max(worst_prox, std::abs(got - prox_grid_oracle(y0, g, L, lambda)));
    }
    for (int c = 0; c < 100; ++c) {
        const FieldTag field = c % 2 ? FieldTag::Complex : FieldTag::Real;
        const std::size_t n = 1 + rng.below(10);
        const std::size_t s = 1 + rng.below(n);
        const Vector y = random_vector(static_cast<Eigen::Index>(embedded_dim(field, n)), rng);
        const Vector p = hard_threshold_project(field, n, y, s);
        const double got = coordinate_l1(field, n, y - p);
        const double best = exhaustive_sparse_distance(field, n, y, s);
        const bool sparse_enough = count_support(field, n, p) <= s;
        worst_ht = std::max(worst_ht, sparse_enough ? std::abs(got - best) : std::numeric_limits<double>::infinity());
    }
    return {worst_prox <= prox_tol && worst_ht <= hard_threshold_tol,
            fmt("prox worst |err| %.3g (tol %.0e); hard threshold worst gap %.3g", worst_prox, prox_tol, worst_ht)};
}

// ---- 11: linear rate -----------------------------------------------------

Verdict criterion11()
{
    int ok = 0;
    double worst_tau = 0.0, worst_r2 = 1.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Instance inst = clean_instance(FieldTag::Real, 8, 48, 1100 + seed);
        SplitObjective obj(inst.ensemble);
        DcConfig cfg;
        cfg.objective_floor = 0.0;
        cfg.step_tol = 1e-12;
        const DcRun run = run_dc(obj, spectral_init(inst.ensemble, seed), cfg);
        const RateFit& fit = run.trace.rate;
        if (!fit.defined()) {
            worst_tau = std::numeric_limits<double>::infinity();
            continue;
        }
        worst_tau = std::max(worst_tau, fit.tau);
        worst_r2 = std::min(worst_r2, fit.r_squared);
        ok += fit.tau < 1.0 && fit.r_squared >= rate_r2_min ? 1 : 0;
    }
    return {ok == 20, fmt("%d/20 fits with tau < 1 and R^2 >= %.1f; largest tau %.3f, least R^2 %.4f", ok, rate_r2_min,
                          worst_tau, worst_r2)};
}

// ---- 13: degree bound ------------------------------------------------------

Verdict criterion13()
{
    // Oracle: Pascal's triangle up to row 58.
    std::vector<BigInt> row{1};
    std::map<int, BigInt> central;
    for (int r = 0; r <= 58; ++r) {
        if (r % 2 == 0) central[r] = row[static_cast<std::size_t>(r / 2)];
        std::vector<BigInt> next(row.size() + 1);
        next.front() = next.back() = 1;
        for (std::size_t j = 1; j < row.size(); ++j) next[j] = row[j - 1] + row[j];
        row = std::move(next);
    }
    int mismatches = 0;
    for (int n = 1; n <= 30; ++n) mismatches += rank_one_degree_bound(static_cast<std::uint64_t>(n)) == central[2 * n - 2] ? 0 : 1;
    std::ostringstream b30;
    b30 << rank_one_degree_bound(30);
    return {mismatches == 0, fmt("%d mismatches for n=1..30; bound(30) = %s", mismatches, b30.str().c_str())};
}

// ---- 15: CLI determinism ---------------------------------------------------

std::string g_cli;

std::pair<int, std::string> capture(const std::string& cmd)
{
    std::string out;
    FILE* pipe = popen((cmd + " 2>/dev/null").c_str(), "r");
    if (!pipe) return {-1, out};
    char buf[4096];
    std::size_t got = 0;
    while ((got = std::fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, got);
    const int raw = pclose(pipe);
    return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, out};
}

Verdict criterion15()
{
    if (g_cli.empty()) return {false, "no --cli path given"};
    std::vector<std::string> configs{
        "bench --n 24 --ratios 1.5,2,3 --trials 12 --seed 15",
        "bench --n 20 --solver l1dc-hard --ratios 1.5,2 --sparsities 2,4 --trials 8 --seed 16 --max-iters 500",
    };
    std::string detail;
    bool ok = true;
    for (const auto& args : configs) {
        const auto [rc1, a] = capture("\"" + g_cli + "\" " + args + " --jobs 1");
        const auto [rc3, b] = capture("\"" + g_cli + "\" " + args + " --jobs 3");
        const bool same = rc1 == 0 && rc3 == 0 && !a.empty() && a == b;
        ok = ok && same;
        if (!detail.empty()) detail += "; ";
        detail += fmt("%s: %s (%zu bytes)", args.substr(0, 30).c_str(), same ? "identical" : "DIFFERENT", a.size());
    }
    return {ok, detail};
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Acceptance criteria"};
    std::vector<int> only;
    app.add_option("--cli", g_cli, "Path to the phasedc executable");
    app.add_option("--only", only, "Run only these criteria")->delimiter(',');
    app.add_option("--jobs", g_jobs, "Worker threads for the Monte-Carlo cells");
    CLI11_PARSE(app, argc, argv);
    if (g_jobs == 0) g_jobs = std::max(1u, std::thread::hardware_concurrency());

    const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria{
        {"table1 cells", criterion1},        {"table2 DC vs GN", criterion2},
        {"table3 complex", criterion3},      {"table4 l1 dense", criterion4},
        {"table5 sparse", criterion5},       {"table6 undersampled", criterion6},
        {"descent invariant", criterion7},   {"stationarity transfer", criterion8},
        {"FD oracles", criterion9},          {"prox / hard threshold", criterion10},
        {"linear rate", criterion11},        {"Hessian certificates", criterion12},
        {"degree bound", criterion13},       {"noise robustness", criterion14},
        {"bench determinism", criterion15},
    };
    const std::set<int> wanted(only.begin(), only.end());
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i) + 1;
        if (!wanted.empty() && !wanted.count(id)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = criteria[i].second();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("%s criterion %2d (%s): %s [%.1fs]\n", v.pass ? "PASS" : "FAIL", id, criteria[i].first,
                    v.detail.c_str(), secs);
        std::fflush(stdout);
        failures += v.pass ? 0 : 1;
    }
    std::printf("%d criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
