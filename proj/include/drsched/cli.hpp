#pragma once

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "drsched/config.hpp"
#include "drsched/experiments.hpp"
#include "drsched/rollout.hpp"
#include "drsched/schedule_io.hpp"
#include "drsched/series_io.hpp"
#include "drsched/synth.hpp"

namespace drsched::cli {

namespace fs = std::filesystem;

enum ExitCode : int { kOk = 0, kUsage = 1, kDomain = 2, kInternal = 3 };

inline constexpr const char* kConfigEnv = "DRSCHED_CONFIG";

/// Domain-level "nothing to do" outcome (exit 2).
class EmptyResult : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Context {
    RunConfig config;
    fs::path config_dir = ".";
    std::optional<std::string> data_override;

    /// Relative dataset paths are taken relative to the config file.
    [[nodiscard]] fs::path dataset_path() const {
        if (data_override) {
            return *data_override;
        }
        const fs::path p = config.paths.dataset;
        return p.is_relative() ? config_dir / p : p;
    }

    [[nodiscard]] DaySeries load_data() const { return load_series_csv(dataset_path().string(), config.grid); }
};

namespace detail {

inline std::ofstream open_out(const fs::path& path) {
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    std::ofstream os(path, std::ios::binary);
    if (!os) {
        throw ValidationError("cannot write " + path.string());
    }
    return os;
}

inline void write_text(const fs::path& path, const std::string& text) {
    auto os = open_out(path);
    os << text;
}

inline DayId parse_day_flag(const std::string& text) {
    const auto d = parse_day(text);
    if (!d) {
        throw ValidationError("bad --day '" + text + "', expected YYYY-MM-DD");
    }
    return *d;
}

inline std::size_t day_index(const DaySeries& data, DayId day, const TimeGrid& grid) {
    const auto idx = data.find_day(day, grid);
    if (!idx) {
        throw ValidationError("day " + format_day(day) + " not in dataset");
    }
    return *idx;
}

inline fs::path sibling_json(const fs::path& csv) {
    fs::path p = csv;
    p.replace_extension(".json");
    return p;
}

inline std::string cell_name(const SweepRow& r) {
    return fmt::format("{}_theta{}_n{}_gas{}.csv", r.policy, r.theta, r.n, r.gas_price);
}

} // namespace detail

struct ScheduleArgs {
    std::string policy;
    std::string day;
    std::optional<double> theta;
    std::optional<double> alpha;
    std::optional<std::size_t> n;
    std::uint64_t seed = 1;
    std::optional<double> gas_price;
    std::string out;
    std::string summary;
};

inline int cmd_schedule(const Context& ctx, const ScheduleArgs& a, std::ostream& out) {
    const RunConfig& c = ctx.config;
    const auto policy = parse_policy(a.policy);
    if (!policy) {
        throw ValidationError("unknown policy '" + a.policy + "'");
    }
    AmbiguityConfig amb = c.ambiguity;
    amb.theta = a.theta.value_or(amb.theta);
    amb.alpha = a.alpha.value_or(amb.alpha);
    amb.sample_count = a.n.value_or(amb.sample_count);
    validate_ambiguity(amb);
    BoilerParams params = c.boiler;
    if (a.gas_price) {
        params.gas_price = EuroPerMWh(*a.gas_price);
    }
    validate_params(params);
    const DayId day_id = detail::parse_day_flag(a.day);

    const DaySeries data = ctx.load_data();
    const DaySeries day = data.day(detail::day_index(data, day_id, c.grid), c.grid);
    if (*policy == Policy::Oracle && !day.has_actual()) {
        throw ValidationError("oracle policy needs actual demand for " + a.day);
    }
    const PolicySpec spec{*policy, amb.theta, amb.sample_count, params.gas_price.value()};
    const Schedule s =
        schedule_policy(spec, day, data, params, c.grid, amb.alpha, a.seed, c.experiment.with_replacement);
    if (a.out.empty()) {
        write_schedule_csv(out, s);
    } else {
        auto os = detail::open_out(a.out);
        write_schedule_csv(os, s);
    }
    const std::string summary = a.summary.empty() && !a.out.empty() ? detail::sibling_json(a.out).string() : a.summary;
    if (!summary.empty()) {
        detail::write_text(summary, schedule_summary_json(s).dump(2) + "\n");
    }
    return kOk;
}

struct SimulateArgs {
    std::string schedule;
    std::string day;
    std::string out;
};

inline int cmd_simulate(const Context& ctx, const SimulateArgs& a, std::ostream& out) {
    const RunConfig& c = ctx.config;
    const Schedule s = load_schedule_csv(a.schedule);
    const DayId day_id = detail::parse_day_flag(a.day);
    const DaySeries data = ctx.load_data();
    if (!data.has_actual()) {
        throw ValidationError("dataset has no actual demand");
    }
    const DaySeries day = data.day(detail::day_index(data, day_id, c.grid), c.grid);
    const RolloutResult r = simulate_day(s, day.price, day.actual, c.boiler, c.grid);
    if (a.out.empty()) {
        write_rollout_csv(out, r);
        out << rollout_totals_json(r).dump(2) << '\n';
    } else {
        auto os = detail::open_out(a.out);
        write_rollout_csv(os, r);
        detail::write_text(detail::sibling_json(a.out), rollout_totals_json(r).dump(2) + "\n");
    }
    return kOk;
}

struct SweepArgs {
    std::string kind = "theta";
    std::optional<std::size_t> jobs;
    std::string out;
};

/// Writes <dir>/sweep.csv with every row, one CSV per cell under
/// <dir>/cells/ (a cell is one policy/theta/N/gas-price combination over all
/// seeds and days) and <dir>/aggregate.json.
inline void write_sweep_outputs(const fs::path& dir, const SweepReport& report) {
    fs::create_directories(dir / "cells");
    for (const auto& entry : fs::directory_iterator(dir / "cells")) {
        if (entry.path().extension() == ".csv") {
            fs::remove(entry.path());
        }
    }
    detail::write_text(dir / "sweep.csv", sweep_to_csv(report.rows));
    std::map<std::string, std::vector<SweepRow>> cells;
    for (const SweepRow& r : report.rows) {
        cells[detail::cell_name(r)].push_back(r);
    }
    for (const auto& [name, rows] : cells) {
        detail::write_text(dir / "cells" / name, sweep_to_csv(rows));
    }
    detail::write_text(dir / "aggregate.json", aggregate_json(aggregate(report.rows)).dump(2) + "\n");
}

inline SweepReport run_sweep(const RunConfig& c, const DaySeries& data, const std::string& kind, std::size_t jobs) {
    const ExperimentConfig& e = c.experiment;
    const auto days = select_target_days(data, c.grid, e.target_days, e.first_target);
    SweepOptions opts;
    opts.jobs = jobs;
    opts.with_replacement = e.with_replacement;
    opts.carry_storage = e.carry_storage;
    const double alpha = c.ambiguity.alpha;
    if (kind == "theta") {
        return run_theta_sweep(data, c.boiler, c.grid, e.thetas, alpha, c.ambiguity.sample_count, e.seeds, days, opts);
    }
    if (kind == "samples") {
        return run_sample_size_sweep(data, c.boiler, c.grid, e.thetas, alpha, e.sample_counts, e.seeds, days, opts);
    }
    if (kind == "gas") {
        return run_gas_price_sweep(data, c.boiler, c.grid, e.thetas, alpha, c.ambiguity.sample_count, e.gas_prices,
                                   e.seeds, days, opts);
    }
    throw ValidationError("unknown sweep kind '" + kind + "'");
}

inline int cmd_sweep(const Context& ctx, const SweepArgs& a, std::ostream& out) {
    const RunConfig& c = ctx.config;
    const DaySeries data = ctx.load_data();
    const SweepReport report = run_sweep(c, data, a.kind, a.jobs.value_or(c.experiment.jobs));
    const fs::path dir = a.out.empty() ? fs::path(c.paths.output) : fs::path(a.out);
    write_sweep_outputs(dir, report);
    out << fmt::format("{} rows ({} failed) written to {}\n", report.rows.size(), report.failed(), dir.string());
    return kOk;
}

inline int cmd_synth(const Context& ctx, const std::string& out_path, std::ostream& out) {
    const fs::path path = out_path.empty() ? ctx.dataset_path() : fs::path(out_path);
    const DaySeries s = synth_generate(ctx.config.synth, ctx.config.grid);
    auto os = detail::open_out(path);
    write_series_csv(os, s);
    out << fmt::format("{} days written to {}\n", s.day_count(ctx.config.grid), path.string());
    return kOk;
}

/// Cell CSVs of a sweep directory: <in>/cells/*.csv when that exists,
/// otherwise every *.csv directly in <in>. Sorted by name.
inline std::vector<fs::path> find_cells(const fs::path& in) {
    if (!fs::is_directory(in)) {
        throw ValidationError("not a directory: " + in.string());
    }
    const fs::path dir = fs::is_directory(in / "cells") ? in / "cells" : in;
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".csv") {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    return files;
}

inline int cmd_report(const std::string& in_dir, const std::string& out_path, std::ostream& out) {
    std::vector<SweepRow> rows;
    for (const fs::path& f : find_cells(in_dir)) {
        std::ifstream is(f);
        auto part = read_sweep_csv(is, f.string());
        std::move(part.begin(), part.end(), std::back_inserter(rows));
    }
    if (rows.empty()) {
        throw EmptyResult("no cells found in " + in_dir);
    }
    const std::string text = aggregate_json(aggregate(std::move(rows))).dump(2) + "\n";
    if (out_path.empty()) {
        out << text;
    } else {
        detail::write_text(out_path, text);
    }
    return kOk;
}

/// Entry point. `args` excludes the program name. Config path: --config,
/// else $DRSCHED_CONFIG, else built-in defaults.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Day-ahead electric boiler scheduling under demand uncertainty", "drsched"};
    app.require_subcommand(1);
    std::string config_path;
    std::string data_path;
    app.add_option("--config", config_path, "INI config file (default: $DRSCHED_CONFIG)");
    app.add_option("--data", data_path, "dataset CSV, overrides [paths] dataset");

    ScheduleArgs sa;
    auto* sched = app.add_subcommand("schedule", "compute a day-ahead schedule");
    sched->add_option("--policy", sa.policy, "det|saa|drcc|two-stage|oracle")->required();
    sched->add_option("--day", sa.day, "target day YYYY-MM-DD")->required();
    sched->add_option("--theta", sa.theta, "Wasserstein radius");
    sched->add_option("--alpha", sa.alpha, "CVaR risk level");
    sched->add_option("--n", sa.n, "number of residual samples");
    sched->add_option("--seed", sa.seed, "sampling seed");
    sched->add_option("--gas-price", sa.gas_price, "gas price for two-stage recourse");
    sched->add_option("--out", sa.out, "schedule CSV (default stdout)");
    sched->add_option("--summary", sa.summary, "summary JSON (default: --out with .json)");

    SimulateArgs ma;
    auto* sim = app.add_subcommand("simulate", "roll a schedule out against realized demand");
    sim->add_option("--schedule", ma.schedule, "schedule CSV")->required();
    sim->add_option("--day", ma.day, "day YYYY-MM-DD")->required();
    sim->add_option("--out", ma.out, "rollout CSV (default stdout)");

    SweepArgs wa;
    auto* sweep = app.add_subcommand("sweep", "run an experiment grid");
    sweep->add_option("--kind", wa.kind, "theta|samples|gas")->check(CLI::IsMember({"theta", "samples", "gas"}));
    sweep->add_option("--jobs", wa.jobs, "worker threads (default: all cores)");
    sweep->add_option("--out", wa.out, "output directory");

    std::string synth_out;
    auto* synth = app.add_subcommand("synth", "write a synthetic dataset");
    synth->add_option("--out", synth_out, "CSV path (default: [paths] dataset)");

    std::string report_in;
    std::string report_out;
    auto* report = app.add_subcommand("report", "aggregate cell CSVs");
    report->add_option("--in", report_in, "sweep directory")->required();
    report->add_option("--out", report_out, "aggregate JSON (default stdout)");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (report->parsed()) {
            return cmd_report(report_in, report_out, out);
        }
        Context ctx;
        if (config_path.empty()) {
            if (const char* env = std::getenv(kConfigEnv); env != nullptr && *env != '\0') {
                config_path = env;
            }
        }
        if (!config_path.empty()) {
            ctx.config = load_config(config_path);
            ctx.config_dir = fs::path(config_path).parent_path();
            if (ctx.config_dir.empty()) {
                ctx.config_dir = ".";
            }
        }
        for (const std::string& w : ctx.config.warnings) {
            err << "warning: " << w << '\n';
        }
        if (!data_path.empty()) {
            ctx.data_override = data_path;
        }
        if (sched->parsed()) {
            return cmd_schedule(ctx, sa, out);
        }
        if (sim->parsed()) {
            return cmd_simulate(ctx, ma, out);
        }
        if (sweep->parsed()) {
            return cmd_sweep(ctx, wa, out);
        }
        return cmd_synth(ctx, synth_out, out);
    } catch (const SchedulingError& e) {
        err << "error: " << e.what() << '\n';
        return kDomain;
    } catch (const EmptyResult& e) {
        err << "error: " << e.what() << '\n';
        return kDomain;
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return kInternal;
    }
}

} // namespace drsched::cli
