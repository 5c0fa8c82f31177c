#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <istream>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "dc.hpp"
#include "ensemble.hpp"
#include "gauss_newton.hpp"
#include "initializer.hpp"
#include "io.hpp"
#include "random.hpp"
#include "sparse.hpp"

namespace phasedc {

enum class SolverKind { DC, L1DC, L1DCHard, GN };

inline std::string_view to_string(SolverKind kind)
{
    switch (kind) {
    case SolverKind::DC: return "dc";
    case SolverKind::L1DC: return "l1dc";
    case SolverKind::L1DCHard: return "l1dc-hard";
    case SolverKind::GN: return "gn";
    }
    return "dc";
}

inline SolverKind parse_solver(std::string_view text)
{
    if (text == "dc" || text == "DC") return SolverKind::DC;
    if (text == "l1dc" || text == "L1DC") return SolverKind::L1DC;
    if (text == "l1dc-hard" || text == "L1DC-Hard") return SolverKind::L1DCHard;
    if (text == "gn" || text == "GN") return SolverKind::GN;
    throw std::invalid_argument("unknown solver '" + std::string(text) + "'");
}

inline NoiseSpec::Model parse_noise_model(std::string_view text)
{
    if (text == "none") return NoiseSpec::Model::None;
    if (text == "additive") return NoiseSpec::Model::Additive;
    if (text == "inside-outside") return NoiseSpec::Model::InsideOutside;
    throw std::invalid_argument("unknown noise model '" + std::string(text) + "'");
}

inline std::string_view to_string(NoiseSpec::Model model)
{
    switch (model) {
    case NoiseSpec::Model::None: return "none";
    case NoiseSpec::Model::Additive: return "additive";
    case NoiseSpec::Model::InsideOutside: return "inside-outside";
    }
    return "none";
}

/// Number of measurements for a ratio: floor(ratio * n), with a 1e-9 guard
/// so ratios such as 35/16 that are exact in decimal are not rounded down.
inline std::size_t measurements_for(double ratio, std::size_t n)
{
    const double m = std::floor(ratio * static_cast<double>(n) + 1e-9);
    if (!(m >= 1.0)) throw std::invalid_argument("ratio * n must give at least one measurement");
    return static_cast<std::size_t>(m);
}

struct ExperimentConfig
{
    std::size_t n = 128;
    FieldTag field = FieldTag::Real;
    std::vector<double> ratios{2.0};
    /// Empty for dense truths; otherwise one cell per sparsity level.
    std::vector<std::size_t> sparsities;
    int trials = 100;
    SolverKind solver = SolverKind::DC;
    DcConfig dc;
    SparseConfig sparse;
    InitMethod init = InitMethod::Reweighted;
    /// Noise model and half-width; the seed is derived per trial.
    NoiseSpec noise;
    double success_threshold = 1e-5;
    std::uint64_t base_seed = 1;
    /// Fixed truth (same for every trial) and optional fixed start.
    std::optional<Signal> truth_override;
    std::optional<Signal> start_override;

    void validate() const
    {
        if (n < 1) throw std::invalid_argument("n must be positive");
        if (trials < 1) throw std::invalid_argument("trials must be >= 1");
        if (ratios.empty()) throw std::invalid_argument("at least one ratio is required");
        for (double r : ratios) {
            if (!(r > 0.0) || !std::isfinite(r)) throw std::invalid_argument("ratios must be positive");
            measurements_for(r, n);
        }
        for (std::size_t s : sparsities) {
            if (s < 1 || s > n) throw std::invalid_argument("sparsity levels must lie in [1, n]");
        }
        if (solver == SolverKind::L1DCHard && sparsities.empty()) {
            throw std::invalid_argument("solver l1dc-hard needs at least one sparsity level");
        }
        if (!(success_threshold > 0.0)) throw std::invalid_argument("success_threshold must be positive");
        if (!(noise.u >= 0.0)) throw std::invalid_argument("noise u must be nonnegative");
        dc.validate();
        SparseConfig probe = sparse;
        probe.sparsity_s.reset();
        probe.validate(n);
        for (const auto* x : {&truth_override, &start_override}) {
            if (*x && ((*x)->field() != field || (*x)->n() != n)) {
                throw std::invalid_argument("override signal does not match field/dimension");
            }
        }
    }

    std::size_t sparsity_cells() const { return sparsities.empty() ? 1 : sparsities.size(); }
    std::size_t cell_count() const { return ratios.size() * sparsity_cells(); }
    /// 0 for dense truths.
    std::size_t sparsity_at(std::size_t s_index) const { return sparsities.empty() ? 0 : sparsities.at(s_index); }
};

struct CellIndex
{
    std::size_t ratio = 0;
    std::size_t sparsity = 0;
};

/// Seed of one trial: derive_seed(base_seed, ratio index, sparsity index,
/// trial index). Re-running a single trial needs only these four numbers.
inline std::uint64_t trial_seed(const ExperimentConfig& cfg, CellIndex cell, std::uint64_t trial)
{
    return derive_seed(cfg.base_seed, cell.ratio, cell.sparsity, trial);
}

struct TrialReport
{
    std::uint64_t seed = 0;
    bool success = false;
    /// dist_up_to_phase(x_final, truth) / ||truth||.
    double final_distance = std::numeric_limits<double>::infinity();
    int outer_iterations = 0;
    double wall_seconds = 0.0;
    bool converged = false;
    std::string stop_reason;
    /// "uninformed_init", "negative_values", "solver_error: ...".
    std::vector<std::string> flags;
};

/// Unit-norm Gaussian truth; with s > 0, Gaussian values on a uniformly
/// random size-s support, then normalized.
inline Signal sample_truth(FieldTag field, std::size_t n, std::size_t s, std::uint64_t seed)
{
    Rng rng(seed);
    const auto nn = static_cast<Eigen::Index>(n);
    Vector data = Vector::Zero(static_cast<Eigen::Index>(embedded_dim(field, n)));
    std::vector<std::size_t> support;
    if (s == 0 || s >= n) {
        for (std::size_t j = 0; j < n; ++j) support.push_back(j);
    } else {
        // partial Fisher-Yates over the indices
        std::vector<std::size_t> idx(n);
        for (std::size_t j = 0; j < n; ++j) idx[j] = j;
        for (std::size_t j = 0; j < s; ++j) {
            const std::size_t k = j + static_cast<std::size_t>(rng.below(n - j));
            std::swap(idx[j], idx[k]);
        }
        support.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(s));
        std::sort(support.begin(), support.end());
    }
    for (std::size_t j : support) data[static_cast<Eigen::Index>(j)] = rng.gaussian();
    if (field == FieldTag::Complex) {
        for (std::size_t j : support) data[static_cast<Eigen::Index>(j) + nn] = rng.gaussian();
    }
    const double norm = data.norm();
    if (norm > 0.0) data /= norm;
    return Signal(field, n, std::move(data));
}

/// The problem solved by one trial, before any solver runs.
struct TrialInstance
{
    std::uint64_t seed = 0;
    std::size_t m = 0;
    std::size_t s = 0;
    Signal truth;
    MeasurementEnsemble ensemble;
    InitResult start;
};

inline TrialInstance make_trial_instance(const ExperimentConfig& cfg, CellIndex cell, std::uint64_t trial)
{
    const std::uint64_t seed = trial_seed(cfg, cell, trial);
    const std::size_t m = measurements_for(cfg.ratios.at(cell.ratio), cfg.n);
    const std::size_t s = cfg.sparsity_at(cell.sparsity);

    Signal truth = cfg.truth_override ? *cfg.truth_override : sample_truth(cfg.field, cfg.n, s, derive_seed(seed, 1));
    auto ens = sample_gaussian_ensemble(cfg.n, m, cfg.field, LinkFunction::square_modulus(), derive_seed(seed, 2));
    NoiseSpec noise = cfg.noise;
    noise.seed = derive_seed(seed, 3);
    MeasurementEnsemble measured = measure(ens, truth, noise);

    InitResult start;
    if (cfg.start_override) {
        start.x = *cfg.start_override;
    } else {
        start = initialize(measured, cfg.init, derive_seed(seed, 4));
        if (s > 0 && cfg.solver == SolverKind::L1DCHard) start.x = hard_threshold_project(start.x, s);
    }
    return {seed, m, s, std::move(truth), std::move(measured), std::move(start)};
}

/// Runs the configured solver from the instance's start.
inline DcRun solve_instance(const ExperimentConfig& cfg, const TrialInstance& inst)
{
    SplitObjective obj(inst.ensemble);
    switch (cfg.solver) {
    case SolverKind::DC: return run_dc(obj, inst.start.x, cfg.dc);
    case SolverKind::GN: return run_gauss_newton(obj, inst.start.x, cfg.dc);
    case SolverKind::L1DC: {
        SparseConfig sc = cfg.sparse;
        sc.sparsity_s.reset();
        return run_l1_dc(obj, inst.start.x, sc);
    }
    case SolverKind::L1DCHard: {
        SparseConfig sc = cfg.sparse;
        sc.sparsity_s = inst.s > 0 ? inst.s : cfg.n;
        return run_l1_dc_hard(obj, inst.start.x, sc);
    }
    }
    throw std::logic_error("solve_instance: unknown solver");
}

/// One Monte-Carlo trial. Solver errors become failed trials with a
/// "solver_error" flag.
inline TrialReport run_trial(const ExperimentConfig& cfg, CellIndex cell, std::uint64_t trial)
{
    const auto t0 = std::chrono::steady_clock::now();
    TrialReport report;
    report.seed = trial_seed(cfg, cell, trial);
    try {
        const TrialInstance inst = make_trial_instance(cfg, cell, trial);
        if (inst.start.uninformed) report.flags.emplace_back("uninformed_init");
        if (inst.ensemble.has_negative_values()) report.flags.emplace_back("negative_values");
        const DcRun run = solve_instance(cfg, inst);
        const double scale = inst.truth.norm();
        report.final_distance = dist_up_to_phase(run.x, inst.truth) / (scale > 0.0 ? scale : 1.0);
        report.outer_iterations = run.trace.outer_iterations();
        report.converged = run.trace.converged;
        report.stop_reason = run.trace.stop_reason;
        report.success = report.final_distance <= cfg.success_threshold;
    } catch (const std::exception& e) {
        report.flags.emplace_back(std::string("solver_error: ") + e.what());
        report.success = false;
    }
    report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

struct CellResult
{
    double ratio = 0.0;
    std::size_t s = 0;
    int successes = 0;
    /// Trials completed, always trial indices 0 .. trials-1.
    int trials = 0;
};

struct SuccessTable
{
    std::vector<CellResult> cells;
    std::uint64_t config_hash = 0;
    std::uint64_t base_seed = 0;
    /// False when the run was interrupted before every trial finished.
    bool complete = true;

    const CellResult* find(double ratio, std::size_t s) const
    {
        for (const auto& c : cells) {
            if (c.ratio == ratio && c.s == s) return &c;
        }
        return nullptr;
    }
};

/// FNV-1a over a canonical rendering of every setting that affects results.
inline std::uint64_t config_hash(const ExperimentConfig& cfg)
{
    std::ostringstream os;
    os << cfg.n << '|' << to_string(cfg.field) << '|' << to_string(cfg.solver) << '|' << to_string(cfg.init) << '|';
    for (double r : cfg.ratios) os << detail::format_double(r) << ',';
    os << '|';
    for (std::size_t s : cfg.sparsities) os << s << ',';
    const auto& in = cfg.dc.inner;
    os << '|' << static_cast<int>(in.method) << ',' << in.max_iters << ',' << detail::format_double(in.grad_tol) << ','
       << (in.momentum ? detail::format_double(*in.momentum) : "auto") << ',' << cfg.dc.max_outer << ','
       << detail::format_double(cfg.dc.step_tol) << ',' << detail::format_double(cfg.dc.objective_floor) << ','
       << cfg.dc.refresh_every << ',' << detail::format_double(cfg.dc.lipschitz_radius);
    const auto& sp = cfg.sparse;
    os << '|' << detail::format_double(sp.lambda) << ',' << sp.max_iters << ',' << detail::format_double(sp.alpha) << ','
       << sp.momentum_cutoff << ',' << sp.momentum << ',' << static_cast<int>(sp.lipschitz_mode) << ','
       << detail::format_double(sp.step_tol);
    os << '|' << to_string(cfg.noise.model) << ',' << detail::format_double(cfg.noise.u) << '|'
       << detail::format_double(cfg.success_threshold) << '|' << cfg.base_seed;
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : os.str()) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

struct RunTableOptions
{
    unsigned jobs = 1;
    /// Polled between trials; when it becomes true no new trials start and
    /// the partial table is returned.
    const std::atomic<bool>* stop = nullptr;
    /// Trials already done per cell (cell-major order, sparsity fastest);
    /// those trial indices are skipped and `prior` counts are added.
    const SuccessTable* prior = nullptr;
    /// Called after each trial, from the worker thread, under a lock.
    std::function<void(CellIndex, std::uint64_t, const TrialReport&)> on_trial;
};

/// Runs every (ratio, sparsity) cell for cfg.trials trials. Work items are
/// handed out in a fixed order and counted per cell, so the table does not
/// depend on the number of workers; after an interruption every cell holds
/// a prefix of its trial indices and can be resumed.
inline SuccessTable run_table(const ExperimentConfig& cfg, const RunTableOptions& opts = {})
{
    cfg.validate();
    const std::size_t s_cells = cfg.sparsity_cells();
    const std::size_t cells = cfg.cell_count();

    SuccessTable table;
    table.config_hash = config_hash(cfg);
    table.base_seed = cfg.base_seed;
    table.cells.resize(cells);
    std::vector<int> start(cells, 0);
    for (std::size_t c = 0; c < cells; ++c) {
        auto& cell = table.cells[c];
        cell.ratio = cfg.ratios[c / s_cells];
        cell.s = cfg.sparsity_at(c % s_cells);
        if (opts.prior) {
            if (const CellResult* p = opts.prior->find(cell.ratio, cell.s)) {
                start[c] = std::min(p->trials, cfg.trials);
                cell.trials = start[c];
                cell.successes = std::min(p->successes, start[c]);
            }
        }
    }

    struct Item
    {
        std::size_t cell;
        int trial;
    };
    std::vector<Item> items;
    for (std::size_t c = 0; c < cells; ++c) {
        for (int t = start[c]; t < cfg.trials; ++t) items.push_back({c, t});
    }
    std::vector<signed char> outcome(items.size(), -1);

    std::atomic<std::size_t> next{0};
    std::mutex callback_mutex;
    auto worker = [&] {
        for (;;) {
            if (opts.stop && opts.stop->load()) return;
            const std::size_t k = next.fetch_add(1);
            if (k >= items.size()) return;
            const Item item = items[k];
            const CellIndex ci{item.cell / s_cells, item.cell % s_cells};
            const TrialReport rep = run_trial(cfg, ci, static_cast<std::uint64_t>(item.trial));
            outcome[k] = rep.success ? 1 : 0;
            if (opts.on_trial) {
                std::lock_guard<std::mutex> lock(callback_mutex);
                opts.on_trial(ci, static_cast<std::uint64_t>(item.trial), rep);
            }
        }
    };
    const unsigned jobs = std::max(1u, opts.jobs);
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    // Items are claimed in order and every claimed item finishes, so the
    // finished items form a prefix of `items`.
    for (std::size_t k = 0; k < items.size(); ++k) {
        if (outcome[k] < 0) {
            table.complete = false;
            break;
        }
        auto& cell = table.cells[items[k].cell];
        cell.trials += 1;
        cell.successes += outcome[k];
    }
    return table;
}

inline constexpr const char* table_csv_header = "ratio,s,successes,trials";

inline void write_table_csv(std::ostream& os, const SuccessTable& table)
{
    os << table_csv_header << '\n';
    for (const auto& c : table.cells) {
        char ratio[32];
        std::snprintf(ratio, sizeof ratio, "%.10g", c.ratio);
        os << ratio << ',' << c.s << ',' << c.successes << ',' << c.trials << '\n';
    }
}

inline SuccessTable read_table_csv(std::istream& is)
{
    std::string line;
    if (!std::getline(is, line) || line != table_csv_header) {
        throw std::runtime_error("table csv: expected header '" + std::string(table_csv_header) + "'");
    }
    SuccessTable table;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto cells = detail::split_csv_line(line);
        if (cells.size() != 4) throw std::runtime_error("table csv: rows need 4 cells");
        CellResult c;
        c.ratio = detail::parse_double(cells[0]);
        c.s = static_cast<std::size_t>(detail::parse_double(cells[1]));
        c.successes = static_cast<int>(detail::parse_double(cells[2]));
        c.trials = static_cast<int>(detail::parse_double(cells[3]));
        if (c.successes < 0 || c.trials < 0 || c.successes > c.trials) {
            throw std::runtime_error("table csv: inconsistent counts");
        }
        table.cells.push_back(c);
    }
    return table;
}

// ---- presets ------------------------------------------------------------

namespace detail {

inline std::vector<double> sixteenths(int first, int last)
{
    std::vector<double> out;
    for (int k = first; k <= last; ++k) out.push_back(k / 16.0);
    return out;
}

inline std::vector<double> tenths(int first, int last)
{
    std::vector<double> out;
    for (int k = first; k <= last; ++k) out.push_back(k / 10.0);
    return out;
}

} // namespace detail

/// Settings used by the benchmark presets for the DC and GN solvers: BB
/// inner steps without momentum, at most 2 inner iterations per outer step,
/// up to 3000 outer steps, curvature estimates refreshed every 100 steps.
inline DcConfig benchmark_dc_config()
{
    DcConfig dc;
    dc.inner.method = InnerConfig::Method::BBNesterov;
    dc.inner.max_iters = 2;
    dc.inner.momentum = 0.0;
    dc.max_outer = 3000;
    dc.audit_descent = false;
    dc.refresh_every = 100;
    return dc;
}

inline std::vector<std::string> preset_names()
{
    return {"table1", "table2", "table2-gn", "table3", "table3-gn", "table4", "table5", "table6"};
}

/// Grids of the published success tables. Trials default to 100.
inline ExperimentConfig preset(std::string_view name)
{
    ExperimentConfig cfg;
    cfg.dc = benchmark_dc_config();
    cfg.trials = 100;
    if (name == "table1") {
        cfg.n = 128;
        cfg.ratios = detail::sixteenths(22, 35);
    } else if (name == "table2" || name == "table2-gn") {
        cfg.n = 128;
        cfg.ratios = detail::sixteenths(37, 50);
        if (name == "table2-gn") cfg.solver = SolverKind::GN;
    } else if (name == "table3" || name == "table3-gn") {
        cfg.n = 128;
        cfg.field = FieldTag::Complex;
        cfg.ratios = detail::sixteenths(41, 50);
        if (name == "table3-gn") cfg.solver = SolverKind::GN;
    } else if (name == "table4") {
        cfg.n = 100;
        cfg.solver = SolverKind::L1DC;
        cfg.ratios = detail::tenths(15, 25);
        cfg.success_threshold = 1e-3;
    } else if (name == "table5") {
        cfg.n = 100;
        cfg.solver = SolverKind::L1DCHard;
        cfg.ratios = detail::tenths(11, 20);
        cfg.sparsities = {1, 5, 10, 20, 30, 40};
        cfg.success_threshold = 1e-3;
    } else if (name == "table6") {
        cfg.n = 100;
        cfg.solver = SolverKind::L1DCHard;
        cfg.ratios = {1.0, 0.9, 0.8, 0.7, 0.6, 0.5};
        cfg.sparsities = {1, 2, 4, 5, 10};
        cfg.success_threshold = 1e-3;
    } else {
        throw std::invalid_argument("unknown preset '" + std::string(name) + "'");
    }
    return cfg;
}

} // namespace phasedc
