/// @file experiment.hpp Reproducible zeta sweeps, the two-stage a posteriori protocol, run reports and the
/// truth-flow export used by the plotting scripts.
///
/// A run directory holds config.json, curve.csv, the truth geometry (stagnation.csv, separatrix.json) and
/// one subdirectory per zeta cell (cell_000, cell_001, ...). A cell is complete once its DONE marker exists;
/// rerunning a sweep skips complete cells, so an interrupted run can be resumed.

#ifndef DRIFTER_UQ_EXPERIMENT_HPP
#define DRIFTER_UQ_EXPERIMENT_HPP

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "drifter.hpp"
#include "observation.hpp"
#include "pcn_sampler.hpp"
#include "posterior_analysis.hpp"
#include "spectral_prior.hpp"
#include "torus_flow.hpp"

namespace drifter_uq
{

namespace fs = std::filesystem;

struct ExperimentConfig
{
    FlowParams flow;
    PriorParams prior;
    Schedule schedule;
    double sigma = 0.02;
    Point2 x0{0.30, 0.20};
    ControlKind control = ControlKind::zonal;
    std::vector<double> zeta_grid;
    ChainConfig chain;
    GridSpec grid;
    std::string output_dir = "runs/default";
    std::uint64_t master_seed = 20130101;

    void validate() const
    {
        flow.validate();
        prior.validate();
        schedule.validate();
        chain.validate();
        if (!(sigma > 0.0))
            throw std::invalid_argument("ExperimentConfig: sigma must be positive");
        if (zeta_grid.empty())
            throw std::invalid_argument("ExperimentConfig: zeta_grid must not be empty");
        for (std::size_t i = 0; i < zeta_grid.size(); ++i)
        {
            if (!(zeta_grid[i] >= 0.0) || !std::isfinite(zeta_grid[i]))
                throw std::invalid_argument("ExperimentConfig: zeta values must be finite and >= 0");
            if (i > 0 && !(zeta_grid[i] > zeta_grid[i - 1]))
                throw std::invalid_argument("ExperimentConfig: zeta_grid must be strictly increasing");
        }
        if (grid.nx < 1 || grid.ny < 1 || !(grid.x_max > grid.x_min) || !(grid.y_max > grid.y_min))
            throw std::invalid_argument("ExperimentConfig: empty diagnostic grid");
    }

    ForwardConfig forward_config(ControlSpec control) const
    {
        return ForwardConfig{schedule, std::move(control), x0, flow.eps};
    }
};

/// n evenly spaced values from lo to hi, computed as lo + i * step to avoid accumulated drift.
inline std::vector<double> linear_grid(double lo, double step, int n)
{
    std::vector<double> g;
    for (int i = 0; i < n; ++i)
        g.push_back(lo + i * step);
    return g;
}

inline std::vector<double> default_zeta_grid(ControlKind kind, double eps)
{
    if (kind == ControlKind::grad_mean)
        return eps != 0.0 ? linear_grid(0.15, 0.03, 6) : linear_grid(0.30, 0.025, 11);
    return linear_grid(0.0, 0.25, 13);
}

inline nlohmann::json to_json(const ExperimentConfig& c)
{
    return {{"flow", {{"c", c.flow.c}, {"A", c.flow.A}, {"k", c.flow.k}, {"eps", c.flow.eps}}},
            {"prior", {{"alpha", c.prior.alpha}, {"tau", c.prior.tau}, {"N", c.prior.N},
                       {"mean_flow_std", c.prior.mean_flow_std}}},
            {"schedule", {{"K", c.schedule.K}, {"dt_obs", c.schedule.dt_obs}, {"dt_int", c.schedule.dt_int}}},
            {"sigma", c.sigma},
            {"x0", {c.x0.x, c.x0.y}},
            {"control", to_string(c.control)},
            {"zeta_grid", c.zeta_grid},
            {"chain", {{"n_steps", c.chain.n_steps}, {"burn_in", c.chain.burn_in}, {"thin", c.chain.thin},
                       {"beta", c.chain.beta}, {"adapt", c.chain.adapt},
                       {"target_acceptance", c.chain.target_acceptance}, {"adapt_window", c.chain.adapt_window}}},
            {"grid", {{"nx", c.grid.nx}, {"ny", c.grid.ny}, {"x_min", c.grid.x_min}, {"x_max", c.grid.x_max},
                      {"y_min", c.grid.y_min}, {"y_max", c.grid.y_max}}},
            {"output_dir", c.output_dir},
            {"master_seed", c.master_seed}};
}

namespace detail
{
template <class T>
void read_opt(const nlohmann::json& j, const char* key, T& out)
{
    if (j.contains(key))
        out = j.at(key).get<T>();
}
} // namespace detail

/// Every field is optional. A missing jet speed follows c = pi A, and a missing zeta grid is filled
/// with the default grid of the chosen control kind.
inline ExperimentConfig experiment_config_from_json(const nlohmann::json& j)
{
    using detail::read_opt;
    ExperimentConfig c;
    if (j.contains("flow"))
    {
        const auto& f = j.at("flow");
        read_opt(f, "A", c.flow.A);
        read_opt(f, "k", c.flow.k);
        read_opt(f, "eps", c.flow.eps);
        c.flow.c = std::numbers::pi * c.flow.A;
        read_opt(f, "c", c.flow.c);
    }
    if (j.contains("prior"))
    {
        const auto& p = j.at("prior");
        read_opt(p, "alpha", c.prior.alpha);
        read_opt(p, "tau", c.prior.tau);
        read_opt(p, "N", c.prior.N);
        read_opt(p, "mean_flow_std", c.prior.mean_flow_std);
    }
    if (j.contains("schedule"))
    {
        const auto& s = j.at("schedule");
        read_opt(s, "K", c.schedule.K);
        read_opt(s, "dt_obs", c.schedule.dt_obs);
        read_opt(s, "dt_int", c.schedule.dt_int);
    }
    read_opt(j, "sigma", c.sigma);
    if (j.contains("x0"))
        c.x0 = {j.at("x0").at(0).get<double>(), j.at("x0").at(1).get<double>()};
    if (j.contains("control"))
        c.control = control_kind_from_string(j.at("control").get<std::string>());
    read_opt(j, "zeta_grid", c.zeta_grid);
    if (j.contains("chain"))
    {
        const auto& m = j.at("chain");
        read_opt(m, "n_steps", c.chain.n_steps);
        read_opt(m, "burn_in", c.chain.burn_in);
        read_opt(m, "thin", c.chain.thin);
        read_opt(m, "beta", c.chain.beta);
        read_opt(m, "adapt", c.chain.adapt);
        read_opt(m, "target_acceptance", c.chain.target_acceptance);
        read_opt(m, "adapt_window", c.chain.adapt_window);
    }
    if (j.contains("grid"))
    {
        const auto& g = j.at("grid");
        read_opt(g, "nx", c.grid.nx);
        read_opt(g, "ny", c.grid.ny);
        read_opt(g, "x_min", c.grid.x_min);
        read_opt(g, "x_max", c.grid.x_max);
        read_opt(g, "y_min", c.grid.y_min);
        read_opt(g, "y_max", c.grid.y_max);
    }
    read_opt(j, "output_dir", c.output_dir);
    read_opt(j, "master_seed", c.master_seed);
    if (c.zeta_grid.empty())
        c.zeta_grid = default_zeta_grid(c.control, c.flow.eps);
    return c;
}

inline ExperimentConfig load_experiment_config(const fs::path& file)
{
    std::ifstream in(file);
    if (!in)
        throw std::runtime_error("cannot open config file " + file.string());
    return experiment_config_from_json(nlohmann::json::parse(in));
}

/// Seeds of one cell. The uncontrolled-half noise is shared by every cell of a run; the controlled-half
/// noise and the chain depend on (master seed, control kind, cell index) only, so appending zeta values
/// to a grid leaves existing cells unchanged.
struct CellSeeds
{
    NoiseSeeds noise;
    std::uint64_t chain;
};

inline std::uint64_t first_half_seed(std::uint64_t master) { return mix_seed(master, 0x5931); }

inline CellSeeds cell_seeds(std::uint64_t master, ControlKind kind, std::size_t index)
{
    const std::uint64_t cell = mix_seed(mix_seed(master, static_cast<std::uint64_t>(kind) + 1), index);
    return {{first_half_seed(master), mix_seed(cell, 1)}, mix_seed(cell, 3)};
}

inline std::uint64_t stage1_chain_seed(std::uint64_t master) { return mix_seed(master, 0x57a9e1); }

struct CellResult
{
    std::size_t index = 0;
    CurvePoint point;
    std::optional<double> escape_time;
    double acceptance_rate = 0.0;
    double beta_final = 0.0;
    CellSeeds seeds{};
    std::string control_field_hash; ///< hex hash of the grad_mean field, empty otherwise
    double seconds = 0.0;
};

struct CellFailure
{
    std::size_t index = 0;
    double zeta = 0.0;
    std::string message;
};

struct SweepResult
{
    std::vector<CurvePoint> curve; ///< completed cells in zeta order
    std::vector<CellFailure> failures;
    std::string stage1_hash; ///< posterior-mean hash of the a posteriori stage 1, empty for plain sweeps

    bool complete() const { return failures.empty(); }
};

inline std::string hex(std::uint64_t v)
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

inline std::string cell_name(std::size_t index)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "cell_%03zu", index);
    return buf;
}

/// Worker count: DRIFTER_UQ_WORKERS if set and positive, otherwise the hardware concurrency.
inline unsigned worker_count()
{
    if (const char* env = std::getenv("DRIFTER_UQ_WORKERS"))
    {
        const long n = std::strtol(env, nullptr, 10);
        if (n > 0)
            return static_cast<unsigned>(n);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Run `task(i)` for i in [0, n) on a fixed pool of threads, handing out indices in order.
inline void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& task)
{
    workers = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, workers), std::max<std::size_t>(n, 1)));
    std::atomic<std::size_t> next{0};
    auto loop = [&] {
        for (std::size_t i = next++; i < n; i = next++)
            task(i);
    };
    if (workers == 1)
    {
        loop();
        return;
    }
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w)
        pool.emplace_back(loop);
}

namespace detail
{
/// Write via a temporary file and rename, so a crash never leaves a half-written artifact behind.
inline void write_file(const fs::path& path, const std::function<void(std::ostream&)>& body,
                       std::ios::openmode mode = std::ios::out)
{
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, mode | std::ios::trunc);
        if (!out)
            throw std::runtime_error("cannot write " + tmp.string());
        body(out);
        out.flush();
        if (!out)
            throw std::runtime_error("write failed: " + tmp.string());
    }
    fs::rename(tmp, path);
}

inline void write_json(const fs::path& path, const nlohmann::json& j)
{
    write_file(path, [&](std::ostream& os) { os << j.dump(2) << '\n'; });
}

inline nlohmann::json read_json(const fs::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("missing " + path.string());
    return nlohmann::json::parse(in);
}

inline nlohmann::json optional_time(const std::optional<double>& t)
{
    return t ? nlohmann::json(*t) : nlohmann::json(nullptr);
}

inline nlohmann::json cell_json(const CellResult& r)
{
    return {{"index", r.index},
            {"zeta", r.point.zeta},
            {"max", r.point.norm_max},
            {"l1", r.point.norm_l1},
            {"l2", r.point.norm_l2},
            {"escaped", r.point.escaped},
            {"escape_time", optional_time(r.escape_time)},
            {"mean_flow_mag", r.point.mean_flow_mag},
            {"acceptance_rate", r.acceptance_rate},
            {"beta_final", r.beta_final},
            {"seeds", {{"y1", r.seeds.noise.first_half}, {"y2", r.seeds.noise.second_half}, {"chain", r.seeds.chain}}},
            {"control_field_hash", r.control_field_hash}};
}

inline CellResult cell_from_json(const nlohmann::json& j)
{
    CellResult r;
    r.index = j.at("index").get<std::size_t>();
    r.point.zeta = j.at("zeta").get<double>();
    r.point.norm_max = j.at("max").get<double>();
    r.point.norm_l1 = j.at("l1").get<double>();
    r.point.norm_l2 = j.at("l2").get<double>();
    r.point.escaped = j.at("escaped").get<bool>();
    if (!j.at("escape_time").is_null())
        r.escape_time = j.at("escape_time").get<double>();
    r.point.mean_flow_mag = j.at("mean_flow_mag").get<double>();
    r.acceptance_rate = j.at("acceptance_rate").get<double>();
    r.beta_final = j.at("beta_final").get<double>();
    r.seeds.noise.first_half = j.at("seeds").at("y1").get<std::uint64_t>();
    r.seeds.noise.second_half = j.at("seeds").at("y2").get<std::uint64_t>();
    r.seeds.chain = j.at("seeds").at("chain").get<std::uint64_t>();
    r.control_field_hash = j.at("control_field_hash").get<std::string>();
    return r;
}

inline void write_truth_geometry(const fs::path& dir, const FlowParams& flow)
{
    const auto pts = find_stagnation_points(flow.steady());
    write_file(dir / "stagnation.csv", [&](std::ostream& os) {
        os << "x,y,kind\n";
        char buf[96];
        for (const auto& s : pts)
        {
            std::snprintf(buf, sizeof buf, "%.17g,%.17g,%s\n", s.location.x, s.location.y,
                          s.kind == StagnationKind::elliptic ? "elliptic" : "hyperbolic");
            os << buf;
        }
    });
    nlohmann::json sep = nullptr;
    try
    {
        const auto s = find_separatrix(flow.steady());
        sep = {{"level", s.level},
               {"center", {s.center.x, s.center.y}},
               {"saddle", {s.saddle.x, s.saddle.y}},
               {"eddy_side", s.eddy_side}};
    }
    catch (const std::runtime_error&)
    {
        // No eddy: leave the separatrix null.
    }
    write_json(dir / "separatrix.json", sep);
}

/// Fail if the directory already holds a run with a different configuration; resume needs identical inputs.
inline void prepare_run_dir(const fs::path& dir, const nlohmann::json& config)
{
    fs::create_directories(dir);
    const fs::path file = dir / "config.json";
    if (fs::exists(file))
    {
        auto stored = read_json(file);
        auto wanted = config;
        stored.erase("output_dir");
        wanted.erase("output_dir");
        if (stored != wanted)
            throw std::runtime_error("run directory " + dir.string() + " holds a different configuration");
        return;
    }
    write_json(file, config);
}

/// Synthesize, sample, diagnose and persist one zeta cell.
inline CellResult run_cell(const ExperimentConfig& cfg, std::size_t index, const ControlSpec& control,
                           const fs::path& dir)
{
    const auto start = std::chrono::steady_clock::now();
    fs::create_directories(dir);
    fs::remove(dir / "DONE");

    CellResult r;
    r.index = index;
    r.seeds = cell_seeds(cfg.master_seed, cfg.control, index);
    r.point.zeta = control.zeta();
    if (control.field())
        r.control_field_hash = hex(field_hash(*control.field()));

    const ForwardConfig fwd = cfg.forward_config(control);
    const ObservationSet obs = synthesize(cfg.flow, fwd, cfg.sigma, r.seeds.noise);
    write_json(dir / "observations.json", to_json(obs));

    ChainConfig chain = cfg.chain;
    chain.seed = r.seeds.chain;
    const SampleStore store = run_chain(obs, fwd, cfg.prior, chain);
    nlohmann::json experiment = to_json(cfg);
    experiment.erase("output_dir");
    write_file(
        dir / "samples.bin",
        [&](std::ostream& os) {
            write_sample_store(os, store, {{"experiment", experiment}, {"cell", index}, {"zeta", control.zeta()}});
        },
        std::ios::out | std::ios::binary);
    r.acceptance_rate = store.acceptance_rate_after_burn_in();
    r.beta_final = store.beta_final;

    const VarianceGrid grid = variance_grid(store, cfg.prior, cfg.grid);
    write_file(dir / "variance.csv", [&](std::ostream& os) { write_variance_csv(os, grid); });
    const VarianceNorms n = norms(grid);
    r.point.norm_max = n.max;
    r.point.norm_l1 = n.l1;
    r.point.norm_l2 = n.l2;

    const Trajectory path = truth_trajectory(cfg.flow, fwd);
    write_file(dir / "path.csv", [&](std::ostream& os) { write_trajectory_csv(os, path); });
    r.escape_time = escape_time(path, cfg.flow);
    r.point.escaped = r.escape_time.has_value();
    auto truth_velocity = [&](const Point2& p, double t) { return velocity(p, t, cfg.flow); };
    r.point.mean_flow_mag = mean_flow_magnitude(truth_velocity, path, cfg.schedule);

    write_json(dir / "cell.json", cell_json(r));
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_json(dir / "timing.json", {{"seconds", r.seconds}});
    write_file(dir / "DONE", [](std::ostream& os) { os << "ok\n"; });
    return r;
}

/// Run every cell not yet marked complete, then rebuild curve.csv from the cell records.
inline SweepResult run_cells(const ExperimentConfig& cfg, const fs::path& dir,
                             const std::function<ControlSpec(double)>& make_control, unsigned workers)
{
    const std::size_t n = cfg.zeta_grid.size();
    std::vector<std::optional<std::string>> errors(n);
    parallel_for(n, workers, [&](std::size_t i) {
        const fs::path cell = dir / cell_name(i);
        if (fs::exists(cell / "DONE"))
            return;
        try
        {
            fs::remove(cell / "FAILED");
            run_cell(cfg, i, make_control(cfg.zeta_grid[i]), cell);
        }
        catch (const std::exception& e)
        {
            errors[i] = e.what();
            try
            {
                fs::create_directories(cell);
                write_file(cell / "FAILED", [&](std::ostream& os) { os << e.what() << '\n'; });
            }
            catch (const std::exception&)
            {
            }
        }
    });

    SweepResult result;
    for (std::size_t i = 0; i < n; ++i)
    {
        if (errors[i])
        {
            result.failures.push_back({i, cfg.zeta_grid[i], *errors[i]});
            continue;
        }
        result.curve.push_back(cell_from_json(read_json(dir / cell_name(i) / "cell.json")).point);
    }
    write_file(dir / "curve.csv", [&](std::ostream& os) { write_curve_csv(os, result.curve); });
    return result;
}
} // namespace detail

/// Zonal or bidirectional sweep over cfg.zeta_grid.
inline SweepResult run_sweep(const ExperimentConfig& cfg, unsigned workers = worker_count())
{
    if (cfg.control != ControlKind::zonal && cfg.control != ControlKind::bidirectional)
        throw std::invalid_argument("run_sweep: control must be zonal or bidirectional");
    cfg.validate();
    const fs::path dir = cfg.output_dir;
    detail::prepare_run_dir(dir, to_json(cfg));
    detail::write_truth_geometry(dir, cfg.flow);
    const ControlKind kind = cfg.control;
    return detail::run_cells(cfg, dir, [kind](double z) { return ControlSpec::make(kind, z); }, workers);
}

/// Stage 1 of the a posteriori protocol: condition on the uncontrolled half only and return the posterior
/// mean field. Results are stored in RUN_DIR/stage1 and reused when complete.
inline SpectralField run_stage1(const ExperimentConfig& cfg, const fs::path& dir)
{
    const fs::path stage = dir / "stage1";
    if (fs::exists(stage / "DONE"))
        return spectral_field_from_json(detail::read_json(stage / "mean_field.json"));
    fs::create_directories(stage);

    const ForwardConfig fwd = cfg.forward_config(ControlSpec::none());
    const ObservationSet obs =
        synthesize(cfg.flow, fwd, cfg.sigma, NoiseSeeds{first_half_seed(cfg.master_seed), first_half_seed(cfg.master_seed)});
    detail::write_json(stage / "observations.json", to_json(obs));
    ChainConfig chain = cfg.chain;
    chain.seed = stage1_chain_seed(cfg.master_seed);
    const SampleStore store = run_chain(obs, fwd, cfg.prior, chain, DataSpan::first_half);
    detail::write_file(
        stage / "samples.bin", [&](std::ostream& os) { write_sample_store(os, store, {{"stage", 1}}); },
        std::ios::out | std::ios::binary);
    const SpectralField mean = posterior_mean_field(store, cfg.prior);
    detail::write_json(stage / "mean_field.json", to_json(mean));
    detail::write_json(stage / "stage1.json", {{"mean_field_hash", hex(field_hash(mean))},
                                               {"acceptance_rate", store.acceptance_rate_after_burn_in()},
                                               {"chain_seed", chain.seed}});
    detail::write_file(stage / "DONE", [](std::ostream& os) { os << "ok\n"; });
    return mean;
}

/// Two-stage protocol with the control f = -zeta grad(posterior mean psi given y1).
inline SweepResult run_aposteriori(const ExperimentConfig& cfg, unsigned workers = worker_count())
{
    if (cfg.control != ControlKind::grad_mean)
        throw std::invalid_argument("run_aposteriori: control must be grad_mean");
    cfg.validate();
    const fs::path dir = cfg.output_dir;
    detail::prepare_run_dir(dir, to_json(cfg));
    detail::write_truth_geometry(dir, cfg.flow);
    const SpectralField mean = run_stage1(cfg, dir);
    auto result = detail::run_cells(cfg, dir, [&mean](double z) { return ControlSpec::grad_mean(z, mean); }, workers);
    result.stage1_hash = hex(field_hash(mean));
    return result;
}

struct Report
{
    std::vector<CellResult> cells;
    std::vector<CellFailure> problems; ///< missing, failed or unreadable cells
    std::optional<double> critical_zeta;
    double argmin_max = 0.0, argmin_l1 = 0.0, argmin_l2 = 0.0;
    double total_seconds = 0.0;
    std::string text;
};

/// Summarise a run directory: curve table, first escaping zeta, argmin of each norm and timing. Writes
/// summary.csv next to curve.csv.
inline Report report(const fs::path& dir)
{
    const ExperimentConfig cfg = experiment_config_from_json(detail::read_json(dir / "config.json"));
    Report rep;
    for (std::size_t i = 0; i < cfg.zeta_grid.size(); ++i)
    {
        const fs::path cell = dir / cell_name(i);
        try
        {
            if (!fs::exists(cell / "DONE"))
            {
                std::string why = "incomplete";
                if (fs::exists(cell / "FAILED"))
                {
                    std::ifstream in(cell / "FAILED");
                    std::getline(in, why);
                    why = "failed: " + why;
                }
                rep.problems.push_back({i, cfg.zeta_grid[i], why});
                continue;
            }
            CellResult r = detail::cell_from_json(detail::read_json(cell / "cell.json"));
            if (fs::exists(cell / "timing.json"))
                r.seconds = detail::read_json(cell / "timing.json").at("seconds").get<double>();
            rep.total_seconds += r.seconds;
            rep.cells.push_back(std::move(r));
        }
        catch (const std::exception& e)
        {
            rep.problems.push_back({i, cfg.zeta_grid[i], std::string("corrupt: ") + e.what()});
        }
    }

    std::ostringstream os;
    os << "run: " << dir.string() << "\ncontrol: " << to_string(cfg.control) << "\n";
    char buf[256];
    std::snprintf(buf, sizeof buf, "%8s %12s %12s %12s %8s %10s %9s %9s\n", "zeta", "max", "l1", "l2", "escaped",
                  "<|v|>", "accept", "seconds");
    os << buf;
    for (const auto& c : rep.cells)
    {
        std::snprintf(buf, sizeof buf, "%8.4f %12.5e %12.5e %12.5e %8s %10.5f %9.4f %9.1f\n", c.point.zeta,
                      c.point.norm_max, c.point.norm_l1, c.point.norm_l2, c.point.escaped ? "yes" : "no",
                      c.point.mean_flow_mag, c.acceptance_rate, c.seconds);
        os << buf;
    }
    if (!rep.cells.empty())
    {
        auto argmin = [&](auto member) {
            const auto it = std::min_element(rep.cells.begin(), rep.cells.end(), [&](const auto& a, const auto& b) {
                return a.point.*member < b.point.*member;
            });
            return it->point.zeta;
        };
        rep.argmin_max = argmin(&CurvePoint::norm_max);
        rep.argmin_l1 = argmin(&CurvePoint::norm_l1);
        rep.argmin_l2 = argmin(&CurvePoint::norm_l2);
        for (const auto& c : rep.cells)
            if (c.point.escaped)
            {
                rep.critical_zeta = c.point.zeta;
                break;
            }
        if (rep.critical_zeta)
            os << "critical zeta (first escaping): " << *rep.critical_zeta << "\n";
        else
            os << "critical zeta: none (no cell escapes)\n";
        os << "argmin zeta: max " << rep.argmin_max << ", l1 " << rep.argmin_l1 << ", l2 " << rep.argmin_l2 << "\n";
    }
    std::snprintf(buf, sizeof buf, "total cell time: %.1f s\n", rep.total_seconds);
    os << buf;
    for (const auto& p : rep.problems)
        os << "cell " << p.index << " (zeta " << p.zeta << "): " << p.message << "\n";
    rep.text = os.str();

    detail::write_file(dir / "summary.csv", [&](std::ostream& out) {
        out << "zeta,max,l1,l2,escaped,mean_flow_mag,escape_time,acceptance_rate,seconds\n";
        for (const auto& c : rep.cells)
        {
            char row[320];
            char et[32] = "";
            if (c.escape_time)
                std::snprintf(et, sizeof et, "%.17g", *c.escape_time);
            std::snprintf(row, sizeof row, "%.17g,%.17g,%.17g,%.17g,%s,%.17g,%s,%.17g,%.17g\n", c.point.zeta,
                          c.point.norm_max, c.point.norm_l1, c.point.norm_l2, c.point.escaped ? "true" : "false",
                          c.point.mean_flow_mag, et, c.acceptance_rate, c.seconds);
            out << row;
        }
    });
    return rep;
}

/// Export the truth flow for plotting: psi on an n x n grid of the unit square at t = 0, stagnation points,
/// separatrix and the uncontrolled truth path, sampled ten times per observation interval when the step allows.
inline void write_truth(const ExperimentConfig& cfg, const fs::path& dir, int n = 128)
{
    cfg.flow.validate();
    cfg.schedule.validate();
    fs::create_directories(dir);
    detail::write_json(dir / "config.json", to_json(cfg));
    detail::write_file(dir / "psi.csv", [&](std::ostream& os) {
        os << "x,y,psi\n";
        char buf[96];
        for (int j = 0; j <= n; ++j)
            for (int i = 0; i <= n; ++i)
            {
                const Point2 p{static_cast<double>(i) / n, static_cast<double>(j) / n};
                std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", p.x, p.y, stream_function(p, 0.0, cfg.flow));
                os << buf;
            }
    });
    detail::write_truth_geometry(dir, cfg.flow);
    Schedule fine = cfg.schedule;
    const long sub = fine.substeps() % 10 == 0 ? fine.substeps() / 10 : 1;
    fine.dt_obs = static_cast<double>(sub) * fine.dt_int;
    auto flow = [&](const Point2& p, double t) { return velocity(p, t, cfg.flow); };
    const Trajectory path = integrate(flow, ControlSpec::none(), cfg.x0, 0.0, cfg.schedule.t_end(), fine);
    detail::write_file(dir / "path.csv", [&](std::ostream& os) { write_trajectory_csv(os, path); });
}

} // namespace drifter_uq

#endif
