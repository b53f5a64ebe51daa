#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "blowup/fit_analysis.hpp"
#include "blowup/time_stepper.hpp"

namespace blowup {

inline constexpr std::string_view kToolVersion = "0.1.0";

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitNumerical = 2;
inline constexpr int kExitIo = 3;

/// One run plus where its outputs go.
struct RunSpec {
    RunConfig config;
    std::string output_dir = "out";

    friend bool operator==(const RunSpec&, const RunSpec&) = default;
};

struct SweepCase {
    double f0;
    double v0;
    friend bool operator==(const SweepCase&, const SweepCase&) = default;
};

/// Many runs sharing grid, time and profile settings.
struct SweepSpec {
    ModelKind model = ModelKind::YangMills4p1;
    std::vector<SweepCase> cases;
    RunConfig shared;               // f0, v0 and t_max are per case
    std::optional<double> t_max;    // unset: 1.2 T_pred per case
    std::string output_dir = "out";

    RunConfig case_config(std::size_t index) const;
};

/// Command-line values that replace keys of the config document before validation.
struct Overrides {
    std::optional<std::string> model;
    std::optional<double> f0;
    std::optional<double> v0;
    std::optional<double> dr;
    std::optional<double> dt;
    std::optional<double> r_max;
    std::optional<std::string> profile;
    std::optional<double> t_max;
    std::optional<std::string> output_dir;
};

using ConfigDocument = std::variant<RunSpec, SweepSpec>;

/// Parses a flat JSON document. A document with a "cases" array is a sweep;
/// anything else describes one run. Unknown keys, wrong types and violated
/// invariants raise ConfigError naming the key.
ConfigDocument parse_config(std::string_view text, const Overrides& overrides = {});

/// Canonical JSON for a run; parse_config(render_config(s)) == s.
std::string render_config(const RunSpec& spec);

/// Writes manifest.json, origin.csv and snapshots.csv under spec.output_dir.
int cmd_run(const RunSpec& spec);

/// Runs every case (up to `workers` at a time) into output_dir/case_NNN and
/// writes output_dir/table.csv. Nonzero only if every case failed.
int cmd_sweep(const SweepSpec& spec, int workers = 1);

/// Writes output_dir/slices/t_<time>.csv for each requested time plus
/// slices/index.csv. With `analyze`, adds fitted ellipse and parabola overlays.
int cmd_slices(const RunSpec& spec, const std::vector<double>& times, bool analyze);

}  // namespace blowup
