#include "qcm/io.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <random>

namespace {

constexpr int exit_ok = 0;
constexpr int exit_domain = 1;
constexpr int exit_usage = 2;

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open output file: " + path);
    out << content;
}

qcm::MeasurementModel load_validated(const std::string& path) {
    qcm::MeasurementModel model = qcm::model_from_json_file(path);
    const auto diags = qcm::validate(model);
    if (!diags.empty()) {
        for (const auto& d : diags)
            std::cerr << d.code << "@" << d.location << "\n";
        throw std::runtime_error("model validation failed");
    }
    return model;
}

// Largest divisor of n_steps giving roughly 100 stored snapshots.
int default_stride(int n_steps) {
    int stride = std::max(1, n_steps / 100);
    while (stride > 1 && n_steps % stride != 0) --stride;
    return stride;
}

struct RunOptions {
    std::string model_path;
    double t_max = 1.0;
    double dt = 1e-3;
    int n_traj = 1000;
    int snapshot_stride = 0; // 0 = auto
    int workers = 1;
    std::uint64_t seed = 0;
    bool bits = false;
};

void add_run_options(CLI::App* cmd, RunOptions& opt, bool seed_required) {
    cmd->add_option("model", opt.model_path, "model JSON file")->required();
    cmd->add_option("--t-max", opt.t_max, "simulation horizon");
    cmd->add_option("--dt", opt.dt, "integration step");
    cmd->add_option("--n-traj", opt.n_traj, "number of trajectories");
    cmd->add_option("--snapshot-stride", opt.snapshot_stride,
                    "grid steps between stored snapshots (0 = auto)");
    cmd->add_option("--workers", opt.workers, "worker thread count");
    auto* seed_opt = cmd->add_option("--seed", opt.seed, "master RNG seed");
    if (seed_required) seed_opt->required();
}

qcm::RunConfig make_config(const RunOptions& opt, qcm::UnravelingMode mode) {
    qcm::RunConfig config;
    config.grid = qcm::TimeGrid::make(opt.t_max, opt.dt);
    config.n_traj = opt.n_traj;
    config.master_seed = opt.seed;
    config.mode = mode;
    config.snapshot_stride = opt.snapshot_stride > 0
                                 ? opt.snapshot_stride
                                 : default_stride(config.grid.n_steps);
    config.n_workers = opt.workers;
    return config;
}

void print_guard_warnings(const qcm::MeasurementModel& model,
                          const qcm::TimeGrid& grid) {
    for (const std::string& w : qcm::grid_guard_warnings(model, grid))
        std::cerr << "warning: " << w << "\n";
}

int cmd_validate(const std::string& path, bool as_json) {
    qcm::MeasurementModel model;
    try {
        model = qcm::model_from_json_file(path);
    } catch (const qcm::ModelParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return exit_usage;
    }
    const auto diags = qcm::validate(model);
    if (as_json) {
        nlohmann::json j = nlohmann::json::array();
        for (const auto& d : diags)
            j.push_back({{"code", d.code}, {"location", d.location}});
        std::cerr << j.dump(2) << "\n";
    } else {
        for (const auto& d : diags)
            std::cerr << d.code << "@" << d.location << "\n";
    }
    return diags.empty() ? exit_ok : exit_domain;
}

int cmd_simulate(const RunOptions& opt, const std::string& mode_name,
                 bool seed_given, int traj_index, const std::string& out_path) {
    const qcm::MeasurementModel model = load_validated(opt.model_path);
    RunOptions opts = opt;
    if (!seed_given) {
        std::random_device rd;
        opts.seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
        std::cout << "seed " << opts.seed << "\n";
    }
    const qcm::UnravelingMode mode = mode_name == "linear"
                                         ? qcm::UnravelingMode::linear
                                         : qcm::UnravelingMode::nonlinear;
    const qcm::RunConfig config = make_config(opts, mode);
    print_guard_warnings(model, config.grid);
    const qcm::MasterSolution master = qcm::solve_master(model, config.grid);
    const qcm::ModelOps ops(model);
    qcm::RngStream rng(qcm::RngStreamSpec{
        config.master_seed, static_cast<std::uint64_t>(traj_index)});
    const auto path = qcm::simulate_trajectory(ops, master, config.grid, mode,
                                               rng, config.snapshot_stride);
    const std::string csv = qcm::trajectory_csv(path);
    if (out_path.empty())
        std::cout << csv;
    else
        write_file(out_path, csv);
    return exit_ok;
}

int cmd_info(const RunOptions& opt, const std::string& out_path,
             const std::string& summary_path) {
    const qcm::MeasurementModel model = load_validated(opt.model_path);
    const qcm::RunConfig config = make_config(opt, qcm::UnravelingMode::nonlinear);
    print_guard_warnings(model, config.grid);
    const qcm::MasterSolution master = qcm::solve_master(model, config.grid);
    const qcm::EnsembleResult result = qcm::run_ensemble(model, master, config);
    const qcm::InfoSeries series =
        qcm::compute_info_series(model, master, result, true);
    write_file(out_path, qcm::info_csv(series, opt.bits));
    if (!summary_path.empty())
        write_file(summary_path, qcm::summary_json(series, config, opt.bits));
    return exit_ok;
}

int cmd_bound(const RunOptions& opt, const std::string& out_path) {
    const qcm::MeasurementModel model = load_validated(opt.model_path);
    const qcm::RunConfig config = make_config(opt, qcm::UnravelingMode::nonlinear);
    print_guard_warnings(model, config.grid);
    const qcm::MasterSolution master = qcm::solve_master(model, config.grid);
    const qcm::EnsembleResult result = qcm::run_ensemble(model, master, config);
    const qcm::InfoSeries series =
        qcm::compute_info_series(model, master, result, true);
    write_file(out_path, qcm::bound_csv(series, false));
    return exit_ok;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"quantum continual measurement simulator"};
    app.require_subcommand(1);

    std::string validate_path;
    bool validate_json = false;
    auto* validate = app.add_subcommand("validate", "check a model file");
    validate->add_option("model", validate_path, "model JSON file")->required();
    validate->add_flag("--json", validate_json, "machine-readable diagnostics");

    RunOptions sim_opt;
    std::string sim_mode = "nonlinear", sim_out;
    int sim_traj = 0;
    auto* simulate = app.add_subcommand("simulate", "dump one trajectory path");
    add_run_options(simulate, sim_opt, false);
    simulate->add_option("--mode", sim_mode, "linear or nonlinear")
        ->check(CLI::IsMember({"linear", "nonlinear"}));
    simulate->add_option("--traj", sim_traj, "trajectory stream index");
    simulate->add_option("--out", sim_out, "output CSV path (default stdout)");

    RunOptions info_opt;
    std::string info_out = "info.csv", info_summary;
    auto* info = app.add_subcommand("info", "information-gain analysis");
    add_run_options(info, info_opt, true);
    info->add_flag("--bits", info_opt.bits, "emit entropies in bits");
    info->add_option("--out", info_out, "info CSV path");
    info->add_option("--summary", info_summary, "summary JSON path");

    RunOptions bound_opt;
    std::string bound_out = "bound.csv";
    auto* bound = app.add_subcommand("bound", "derivative-bound analysis");
    add_run_options(bound, bound_opt, true);
    bound->add_option("--out", bound_out, "bound CSV path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_usage;
    }

    try {
        if (*validate) return cmd_validate(validate_path, validate_json);
        if (*simulate)
            return cmd_simulate(sim_opt, sim_mode,
                                simulate->count("--seed") > 0, sim_traj,
                                sim_out);
        if (*info) return cmd_info(info_opt, info_out, info_summary);
        if (*bound) return cmd_bound(bound_opt, bound_out);
    } catch (const qcm::ModelParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return exit_usage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return exit_usage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_domain;
    }
    return exit_ok;
}
