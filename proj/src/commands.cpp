#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <thread>

#include <fmt/format.h>
#include <json.hpp>

#include "blowup/cli_runner.hpp"

namespace blowup {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string num(double x) { return fmt::format("{:.17g}", x); }

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError(fmt::format("cannot create {}: {}", dir.string(), ec.message()));
}

class CsvWriter {
public:
    explicit CsvWriter(const fs::path& path) : path_(path), out_(path) {
        if (!out_) throw IoError(fmt::format("cannot open {} for writing", path.string()));
    }
    void line(const std::string& text) { out_ << text << '\n'; }
    void close() {
        out_.close();
        if (!out_) throw IoError(fmt::format("failed writing {}", path_.string()));
    }

private:
    fs::path path_;
    std::ofstream out_;
};

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw IoError(fmt::format("cannot open {} for writing", path.string()));
    out << text << '\n';
    out.close();
    if (!out) throw IoError(fmt::format("failed writing {}", path.string()));
}

json config_json(const RunConfig& cfg, const std::string& output_dir) {
    return json::parse(render_config(RunSpec{cfg, output_dir}));
}

// Numeric fields are always finite; absent values are null.
json build_manifest(const RunRecord& record, const ComparisonReport& report,
                    const std::string& output_dir, double seconds) {
    json m;
    m["tool"] = "blowup";
    m["version"] = std::string(kToolVersion);
    m["config"] = config_json(record.config, output_dir);
    m["termination"] = std::string(to_string(record.termination));
    m["message"] = record.message;
    m["steps"] = record.steps;
    m["t_final"] = record.origin_trace.empty() ? 0.0 : record.origin_trace.back().t;
    m["f_origin_final"] = record.origin_trace.empty() ? 0.0 : record.origin_trace.back().f;
    m["max_corrector_iterations"] = record.max_corrector_iterations;

    if (record.config.v0 < 0.0) {
        const auto pred = geodesic_prediction(record.config.f0, record.config.v0);
        m["prediction"] = {{"a", pred.a}, {"T", pred.T}};
    } else {
        m["prediction"] = nullptr;
    }

    if (report.origin) {
        const auto& o = *report.origin;
        m["no_fit"] = false;
        m["no_fit_reason"] = "";
        m["fit"] = {{"a", o.fit.a},
                    {"T", o.fit.T},
                    {"rms_residual", o.fit.rms_residual},
                    {"n_points", o.fit.n_points},
                    {"vertex_offset", o.fit.vertex_offset}};
        m["relative_error"] = {{"a", o.rel_err_a}, {"T", o.rel_err_T}};
        m["max_overlay_deviation"] = o.max_overlay_deviation;
    } else {
        m["no_fit"] = true;
        m["no_fit_reason"] = report.origin_note;
        m["fit"] = nullptr;
        m["relative_error"] = nullptr;
        m["max_overlay_deviation"] = nullptr;
    }

    json residuals = json::array();
    for (const auto& s : report.residuals) {
        residuals.push_back({{"r", s.r}, {"t", s.t}, {"residual", s.residual}});
    }
    m["ansatz_residuals"] = residuals;
    m["wall_clock_seconds"] = seconds;
    return m;
}

void write_origin(const fs::path& path, const RunRecord& record) {
    CsvWriter csv(path);
    csv.line("t,f0_t");
    for (const auto& p : record.origin_trace) csv.line(num(p.t) + "," + num(p.f));
    csv.close();
}

void write_snapshots(const fs::path& path, const RunRecord& record) {
    CsvWriter csv(path);
    csv.line("t,r,f");
    const auto nodes = record.grid->nodes();
    for (const auto& s : record.snapshots) {
        const std::string t = num(s.t);
        for (std::size_t i = 0; i < s.values.size(); ++i) {
            csv.line(fmt::format("{},{},{}", t, num(nodes[i]), num(s.values[i])));
        }
    }
    csv.close();
}

void write_slice_fits(const fs::path& path, const ComparisonReport& report) {
    auto opt = [](const auto& o, auto member) { return o ? num((*o).*member) : std::string(); };
    CsvWriter csv(path);
    csv.line("t,a_axis,b_axis,k_center,a_axis_pred,b_axis_pred,k_center_pred,p,h,p_pred,h_pred,note");
    for (const auto& s : report.slices) {
        csv.line(fmt::format("{},{},{},{},{},{},{},{},{},{},{},\"{}\"", num(s.t),
                             opt(s.ellipse, &EllipseFit::a_axis), opt(s.ellipse, &EllipseFit::b_axis),
                             opt(s.ellipse, &EllipseFit::k_center),
                             opt(s.ellipse_predicted, &EllipseShape::a_axis),
                             opt(s.ellipse_predicted, &EllipseShape::b_axis),
                             opt(s.ellipse_predicted, &EllipseShape::k_center),
                             opt(s.parabola, &ProfileParabolaFit::p),
                             opt(s.parabola, &ProfileParabolaFit::h), num(s.p_predicted),
                             num(s.h_predicted), s.note));
    }
    csv.close();
}

struct CaseOutcome {
    RunRecord record;
    ComparisonReport report;
    double seconds = 0.0;
};

CaseOutcome execute(const RunConfig& cfg, const StepObserver& observer = {}) {
    const auto start = std::chrono::steady_clock::now();
    CaseOutcome out;
    out.record = run(cfg, observer);
    out.report = compare_run(out.record);
    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
}

std::string time_label(double t) { return fmt::format("{}", t); }

}  // namespace

int cmd_run(const RunSpec& spec) {
    try {
        const fs::path dir(spec.output_dir);
        ensure_dir(dir);
        const auto outcome = execute(spec.config);
        const auto manifest = build_manifest(outcome.record, outcome.report, spec.output_dir,
                                             outcome.seconds);
        write_text(dir / "manifest.json", manifest.dump(2));
        write_origin(dir / "origin.csv", outcome.record);
        write_snapshots(dir / "snapshots.csv", outcome.record);
        write_slice_fits(dir / "slice_fits.csv", outcome.report);
        if (outcome.record.termination == Termination::NumericalInstability) {
            std::cerr << "run ended in numerical instability: " << outcome.record.message << '\n';
            return kExitNumerical;
        }
        return kExitOk;
    } catch (const IoError& e) {
        std::cerr << "I/O error: " << e.what() << '\n';
        return kExitIo;
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return kExitConfig;
    }
}

int cmd_sweep(const SweepSpec& spec, int workers) {
    if (spec.cases.empty()) {
        std::cerr << "configuration error: cases: sweep needs at least one case\n";
        return kExitConfig;
    }
    const fs::path root(spec.output_dir);
    try {
        ensure_dir(root);
    } catch (const IoError& e) {
        std::cerr << "I/O error: " << e.what() << '\n';
        return kExitIo;
    }

    struct Row {
        std::optional<OriginComparison> origin;
        std::string status;
    };
    std::vector<Row> rows(spec.cases.size());
    std::atomic<std::size_t> next{0};
    std::mutex log_mutex;

    auto worker = [&] {
        for (std::size_t k = next++; k < spec.cases.size(); k = next++) {
            Row& row = rows[k];
            try {
                const RunConfig cfg = spec.case_config(k);
                const fs::path dir = root / fmt::format("case_{:03d}", k);
                ensure_dir(dir);
                const auto outcome = execute(cfg);
                const auto manifest =
                    build_manifest(outcome.record, outcome.report, dir.string(), outcome.seconds);
                write_text(dir / "manifest.json", manifest.dump(2));
                write_origin(dir / "origin.csv", outcome.record);
                row.origin = outcome.report.origin;
                if (outcome.record.termination == Termination::NumericalInstability) {
                    row.status = "numerical_instability";
                } else if (!row.origin) {
                    row.status = "no_fit";
                } else {
                    row.status = "ok";
                }
            } catch (const Error& e) {
                row.status = "error";
                std::lock_guard lock(log_mutex);
                std::cerr << fmt::format("case {}: {}\n", k, e.what());
            }
        }
    };

    const int count = std::clamp(workers, 1, static_cast<int>(spec.cases.size()));
    {
        std::vector<std::jthread> pool;
        for (int w = 1; w < count; ++w) pool.emplace_back(worker);
        worker();
    }

    std::size_t failures = 0;
    try {
        CsvWriter csv(root / "table.csv");
        csv.line("f0,v0,a_fit,T_fit,a_pred,T_pred,rel_err_a,rel_err_T,status");
        for (std::size_t k = 0; k < rows.size(); ++k) {
            const auto& c = spec.cases[k];
            const auto pred = geodesic_prediction(c.f0, c.v0);
            const auto& row = rows[k];
            if (row.status != "ok") ++failures;
            if (row.origin) {
                const auto& o = *row.origin;
                csv.line(fmt::format("{},{},{},{},{},{},{},{},{}", num(c.f0), num(c.v0), num(o.fit.a),
                                     num(o.fit.T), num(pred.a), num(pred.T), num(o.rel_err_a),
                                     num(o.rel_err_T), row.status));
            } else {
                csv.line(fmt::format("{},{},,,{},{},,,{}", num(c.f0), num(c.v0), num(pred.a),
                                     num(pred.T), row.status));
            }
        }
        csv.close();
    } catch (const IoError& e) {
        std::cerr << "I/O error: " << e.what() << '\n';
        return kExitIo;
    }
    return failures == rows.size() ? kExitNumerical : kExitOk;
}

int cmd_slices(const RunSpec& spec, const std::vector<double>& times, bool analyze) {
    const RunConfig& cfg = spec.config;
    std::map<std::int64_t, std::vector<std::size_t>> wanted;  // step -> requested indices
    for (std::size_t k = 0; k < times.size(); ++k) {
        if (!(times[k] >= 0.0 && times[k] <= cfg.t_max)) {
            std::cerr << fmt::format("configuration error: time {} outside [0, {}]\n", times[k], cfg.t_max);
            return kExitConfig;
        }
        wanted[std::llround(times[k] / cfg.dt)].push_back(k);
    }

    std::vector<std::optional<Snapshot>> captured(times.size());
    auto observer = [&](const SimulationState& s) {
        const auto it = wanted.find(s.step_index);
        if (it == wanted.end()) return;
        for (std::size_t k : it->second) captured[k] = Snapshot{s.t, s.f_curr.data()};
    };

    try {
        const fs::path dir = fs::path(spec.output_dir) / "slices";
        ensure_dir(dir);
        // Nothing after the last requested time is needed.
        RunConfig truncated = cfg;
        double latest = 0.0;
        for (double t : times) latest = std::max(latest, t);
        truncated.t_max = std::min(cfg.t_max, std::max(latest, cfg.dt));
        const auto record = run(truncated, observer);
        const auto nodes = record.grid->nodes();
        const double window = 0.5 * cfg.r_max;

        CsvWriter index(dir / "index.csv");
        index.line("t_requested,t_actual,status,file,a_axis,b_axis,k_center,p,h");
        for (std::size_t k = 0; k < times.size(); ++k) {
            if (!captured[k]) {
                index.line(fmt::format("{},,absent,,,,,,", num(times[k])));
                continue;
            }
            const Snapshot& snap = *captured[k];
            const std::string name = fmt::format("t_{}.csv", time_label(times[k]));

            std::optional<EllipseFit> ellipse;
            std::optional<ProfileParabolaFit> parabola;
            if (analyze) {
                try {
                    ellipse = fit_ellipse(nodes, snap.values, snap.values.back());
                } catch (const Error&) {
                }
                try {
                    parabola = fit_profile_parabola(nodes, snap.values, window);
                } catch (const Error&) {
                }
            }

            CsvWriter csv(dir / name);
            csv.line(analyze ? "r,f,f_ellipse,f_parabola" : "r,f");
            for (std::size_t i = 0; i < nodes.size(); ++i) {
                std::string line = num(nodes[i]) + "," + num(snap.values[i]);
                if (analyze) {
                    line += "," + (ellipse ? num(ellipse_upper(*ellipse, nodes[i])) : std::string());
                    const double r2 = nodes[i] * nodes[i];
                    line += "," + (parabola ? num(parabola->p * r2 + parabola->h) : std::string());
                }
                csv.line(line);
            }
            csv.close();

            auto field = [](const auto& o, auto member) {
                return o ? num((*o).*member) : std::string();
            };
            index.line(fmt::format("{},{},present,{},{},{},{},{},{}", num(times[k]), num(snap.t), name,
                                   field(ellipse, &EllipseFit::a_axis),
                                   field(ellipse, &EllipseFit::b_axis),
                                   field(ellipse, &EllipseFit::k_center),
                                   field(parabola, &ProfileParabolaFit::p),
                                   field(parabola, &ProfileParabolaFit::h)));
        }
        index.close();
        if (record.termination == Termination::NumericalInstability) {
            std::cerr << "run ended in numerical instability: " << record.message << '\n';
            return kExitNumerical;
        }
        return kExitOk;
    } catch (const IoError& e) {
        std::cerr << "I/O error: " << e.what() << '\n';
        return kExitIo;
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return kExitConfig;
    }
}

}  // namespace blowup
