// Command-line front end: run, sweep, slices.

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "blowup/cli_runner.hpp"

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw blowup::IoError("cannot read config file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct CommonOptions {
    std::string config_path;
    blowup::Overrides overrides;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
    cmd->add_option("--config", opts.config_path, "JSON config document");
    cmd->add_option("--out", opts.overrides.output_dir, "output directory");
    cmd->add_option("--model", opts.overrides.model, "yang_mills or sigma2");
    cmd->add_option("--f0", opts.overrides.f0, "initial height f(r, 0)");
    cmd->add_option("--v0", opts.overrides.v0, "initial velocity (negative)");
    cmd->add_option("--dr", opts.overrides.dr, "radial step");
    cmd->add_option("--dt", opts.overrides.dt, "time step");
    cmd->add_option("--rmax", opts.overrides.r_max, "outer radius R");
    cmd->add_option("--profile", opts.overrides.profile, "line or parabola");
    cmd->add_option("--tmax", opts.overrides.t_max, "final time");
}

blowup::ConfigDocument load(const CommonOptions& opts) {
    const std::string text = opts.config_path.empty() ? "{}" : read_file(opts.config_path);
    return blowup::parse_config(text, opts.overrides);
}

blowup::RunSpec expect_run(const blowup::ConfigDocument& doc) {
    if (const auto* spec = std::get_if<blowup::RunSpec>(&doc)) return *spec;
    throw blowup::ConfigError("cases: this subcommand takes a single-run document");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Radial soliton blow-up laboratory"};
    app.set_version_flag("--version", std::string(blowup::kToolVersion));
    app.require_subcommand(1);

    CommonOptions run_opts, sweep_opts, slice_opts;
    int workers = 1;
    std::vector<double> times;
    bool analyze = false;

    auto* run_cmd = app.add_subcommand("run", "evolve one configuration and compare with predictions");
    add_common(run_cmd, run_opts);

    auto* sweep_cmd = app.add_subcommand("sweep", "run every (f0, v0) case and write table.csv");
    add_common(sweep_cmd, sweep_opts);
    sweep_cmd->add_option("--workers", workers, "concurrent runs")->check(CLI::PositiveNumber);

    auto* slice_cmd = app.add_subcommand("slices", "write f(r, t) at the requested times");
    add_common(slice_cmd, slice_opts);
    slice_cmd->add_option("--times", times, "slice times")->required();
    slice_cmd->add_flag("--analyze", analyze, "add fitted ellipse and parabola overlay columns");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run_cmd->parsed()) return blowup::cmd_run(expect_run(load(run_opts)));
        if (slice_cmd->parsed()) return blowup::cmd_slices(expect_run(load(slice_opts)), times, analyze);
        if (sweep_cmd->parsed()) {
            const auto doc = load(sweep_opts);
            const auto* spec = std::get_if<blowup::SweepSpec>(&doc);
            if (!spec) throw blowup::ConfigError("cases: sweep needs a document with a cases array");
            return blowup::cmd_sweep(*spec, workers);
        }
    } catch (const blowup::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return blowup::kExitConfig;
    } catch (const blowup::IoError& e) {
        std::cerr << "I/O error: " << e.what() << '\n';
        return blowup::kExitIo;
    }
    return blowup::kExitConfig;
}
