// drifter-uq: command-line driver for truth export, zeta sweeps, the a posteriori protocol and run reports.

#include <cstdio>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include <drifter_uq/experiment.hpp>

namespace
{
using namespace drifter_uq;

ExperimentConfig load(const std::string& file, const std::string& control)
{
    nlohmann::json j = nlohmann::json::object();
    if (!file.empty())
    {
        std::ifstream in(file);
        if (!in)
            throw std::runtime_error("cannot open config file " + file);
        j = nlohmann::json::parse(in);
    }
    if (!control.empty())
        j["control"] = control;
    return experiment_config_from_json(j);
}

int finish(const SweepResult& r, const ExperimentConfig& cfg)
{
    std::cout << report(cfg.output_dir).text;
    if (!r.stage1_hash.empty())
        std::cout << "stage-1 mean field hash: " << r.stage1_hash << "\n";
    for (const auto& f : r.failures)
        std::cerr << "cell " << f.index << " (zeta " << f.zeta << ") failed: " << f.message << "\n";
    return r.complete() ? 0 : 1;
}
} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Drifter control uncertainty-quantification experiments"};
    app.require_subcommand(1);

    std::string config_file, out_dir, control, run_dir;
    unsigned workers = 0;

    auto* truth = app.add_subcommand("truth", "Export the truth flow: psi grid, stagnation points, separatrix, path");
    truth->add_option("--config", config_file, "JSON experiment configuration")->check(CLI::ExistingFile);
    truth->add_option("--out", out_dir, "Output directory (default: <output_dir>/truth)");

    auto* sweep = app.add_subcommand("sweep", "Posterior variance over a grid of zonal or bidirectional controls");
    sweep->add_option("--control", control, "Control kind")
        ->required()
        ->check(CLI::IsMember({"zonal", "bidirectional"}));
    sweep->add_option("--config", config_file, "JSON experiment configuration")->check(CLI::ExistingFile);
    sweep->add_option("--out", out_dir, "Run directory (overrides output_dir)");
    sweep->add_option("--workers", workers, "Parallel cells (default: DRIFTER_UQ_WORKERS or all cores)");

    auto* apost = app.add_subcommand("aposteriori", "Two-stage protocol with the posterior-mean gradient control");
    apost->add_option("--config", config_file, "JSON experiment configuration")->check(CLI::ExistingFile);
    apost->add_option("--out", out_dir, "Run directory (overrides output_dir)");
    apost->add_option("--workers", workers, "Parallel cells (default: DRIFTER_UQ_WORKERS or all cores)");

    auto* rep = app.add_subcommand("report", "Summarise a run directory and write summary.csv");
    rep->add_option("run_dir", run_dir, "Run directory")->required()->check(CLI::ExistingDirectory);

    CLI11_PARSE(app, argc, argv);

    try
    {
        if (*truth)
        {
            auto cfg = load(config_file, "");
            const std::string dir = out_dir.empty() ? cfg.output_dir + "/truth" : out_dir;
            write_truth(cfg, dir);
            std::cout << "truth flow written to " << dir << "\n";
            return 0;
        }
        if (*sweep)
        {
            auto cfg = load(config_file, control);
            if (!out_dir.empty())
                cfg.output_dir = out_dir;
            return finish(run_sweep(cfg, workers ? workers : worker_count()), cfg);
        }
        if (*apost)
        {
            auto cfg = load(config_file, "grad_mean");
            if (!out_dir.empty())
                cfg.output_dir = out_dir;
            return finish(run_aposteriori(cfg, workers ? workers : worker_count()), cfg);
        }
        const auto r = report(run_dir);
        std::cout << r.text;
        return r.problems.empty() ? 0 : 1;
    }
    catch (const std::exception& e)
    {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
