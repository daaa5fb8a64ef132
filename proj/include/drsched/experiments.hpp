#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <istream>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "drsched/calendar.hpp"
#include "drsched/domain.hpp"
#include "drsched/residuals.hpp"
#include "drsched/rollout.hpp"
#include "drsched/schedulers.hpp"
#include "drsched/series_io.hpp"

namespace drsched {

inline constexpr int kSweepSchemaVersion = 1;

enum class Policy { Deterministic, Saa, Drcc, TwoStage, Oracle };

inline std::string policy_name(Policy p) {
    switch (p) {
    case Policy::Deterministic:
        return "det";
    case Policy::Saa:
        return "saa";
    case Policy::Drcc:
        return "drcc";
    case Policy::TwoStage:
        return "two-stage";
    case Policy::Oracle:
        return "oracle";
    }
    return "?";
}

inline std::optional<Policy> parse_policy(std::string_view s) {
    for (const Policy p : {Policy::Deterministic, Policy::Saa, Policy::Drcc, Policy::TwoStage, Policy::Oracle}) {
        if (s == policy_name(p)) {
            return p;
        }
    }
    return std::nullopt;
}

/// One (policy, parameters, seed, day) evaluation. Failed cells keep their
/// keys, carry a non-"ok" status and NaN metrics.
struct SweepRow {
    std::string policy;
    double theta = 0.0;
    double alpha = 0.0;
    std::size_t n = 0;
    std::uint64_t seed = 0;
    DayId day{};
    double gas_price = 0.0;
    std::string status = "ok";

    double objective = 0.0;
    double electricity_cost = 0.0;
    double gas_cost = 0.0;
    double spill_cost = 0.0;
    double total_cost = 0.0;
    double avg_violation = 0.0;
    double delivered_mwh = 0.0;
    double gas_mwh = 0.0;
    double unmet_mwh = 0.0;
    double spill_mwh = 0.0;

    [[nodiscard]] bool ok() const { return status == "ok"; }

    [[nodiscard]] auto key() const { return std::tie(policy, gas_price, theta, n, seed, day); }
};

struct SweepReport {
    std::vector<SweepRow> rows;

    void sort() {
        std::sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) { return a.key() < b.key(); });
    }

    [[nodiscard]] std::size_t failed() const {
        return static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), [](const auto& r) { return !r.ok(); }));
    }
};

struct SweepOptions {
    std::size_t jobs = 0;
    bool with_replacement = false;
    bool carry_storage = false;
};

/// Which policy to run and with which parameters; `gas_price` drives the
/// two-stage recourse and the rollout's gas cost.
struct PolicySpec {
    Policy policy = Policy::Deterministic;
    double theta = 0.0;
    std::size_t n = 0;
    double gas_price = 0.0;
};

/// Days (indices into the dataset) used as simulation targets.
inline std::vector<std::size_t> select_target_days(const DaySeries& data, const TimeGrid& grid, std::size_t count,
                                                   std::optional<DayId> first = std::nullopt) {
    const std::size_t total = data.day_count(grid);
    std::size_t begin = total >= count ? total - count : 0;
    if (first) {
        const auto idx = data.find_day(*first, grid);
        if (!idx) {
            throw ValidationError("first target day " + format_day(*first) + " not in dataset");
        }
        begin = *idx;
    }
    if (begin + count > total) {
        throw ValidationError(fmt::format("dataset has {} days, {} target days requested from day {}", total, count,
                                          begin));
    }
    std::vector<std::size_t> out(count);
    for (std::size_t i = 0; i < count; ++i) {
        out[i] = begin + i;
    }
    return out;
}

/// Schedules one day with the given policy; samples are drawn from `data`
/// outside the target's ISO week.
inline Schedule schedule_policy(const PolicySpec& spec, const DaySeries& day, const DaySeries& data,
                                const BoilerParams& params, const TimeGrid& grid, double alpha, std::uint64_t seed,
                                bool with_replacement) {
    switch (spec.policy) {
    case Policy::Deterministic:
        return schedule_deterministic(day.forecast, day.price, params, grid);
    case Policy::Oracle:
        return schedule_oracle(day.actual, day.price, params, grid);
    case Policy::Saa:
    case Policy::Drcc:
    case Policy::TwoStage:
        break;
    }
    const DayId target = day.day_id(0, grid);
    const ResidualSampleSet samples = sample_training_set(data, target, spec.n, seed, grid, with_replacement);
    const AmbiguityConfig amb{spec.policy == Policy::Saa ? 0.0 : spec.theta, alpha, spec.n};
    if (spec.policy == Policy::TwoStage) {
        return schedule_two_stage(day.forecast, day.price, params, grid, samples, amb, EuroPerMWh(spec.gas_price));
    }
    return schedule_drcc(day.forecast, day.price, params, grid, samples, amb);
}

namespace detail {

inline void fill_failure(SweepRow& row, std::string status) {
    row.status = std::move(status);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    row.objective = row.electricity_cost = row.gas_cost = row.spill_cost = row.total_cost = nan;
    row.avg_violation = row.delivered_mwh = row.gas_mwh = row.unmet_mwh = row.spill_mwh = nan;
}

/// Runs one policy over consecutive target days. With carry_storage the
/// realized end storage of each day seeds the next; otherwise every day
/// starts from params.q_init.
inline std::vector<SweepRow> run_chain(const PolicySpec& spec, const std::vector<std::size_t>& days,
                                       const DaySeries& data, const BoilerParams& base, const TimeGrid& grid,
                                       double alpha, std::uint64_t seed, const SweepOptions& opts) {
    std::vector<SweepRow> rows;
    BoilerParams params = base;
    params.gas_price = EuroPerMWh(spec.gas_price);
    for (const std::size_t d : days) {
        const DaySeries day = data.day(d, grid);
        SweepRow row;
        row.policy = policy_name(spec.policy);
        row.theta = spec.policy == Policy::Saa ? 0.0 : spec.theta;
        row.alpha = alpha;
        row.n = spec.n;
        row.seed = seed;
        row.day = day.day_id(0, grid);
        row.gas_price = spec.gas_price;
        try {
            const Schedule s = drsched::schedule_policy(spec, day, data, params, grid, alpha, seed, opts.with_replacement);
            const RolloutResult r = simulate_day(s, day.price, day.actual, params, grid);
            row.objective = s.objective;
            row.electricity_cost = r.electricity_cost;
            row.gas_cost = r.gas_cost;
            row.spill_cost = r.spill_cost;
            row.total_cost = r.total_cost;
            row.avg_violation = r.avg_violation;
            for (std::size_t t = 0; t < r.periods(); ++t) {
                row.delivered_mwh += r.delivered[t];
                row.gas_mwh += r.gas[t];
                row.unmet_mwh += r.unmet[t];
                row.spill_mwh += r.spill[t];
            }
            if (opts.carry_storage) {
                params.q_init = MegaWattHour(
                    std::clamp(r.storage.back(), base.storage_min.value(), base.storage_max.value()));
            }
        } catch (const SchedulingError& e) {
            fill_failure(row, lp::to_string(e.status()));
        } catch (const std::exception& e) {
            fill_failure(row, "error");
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

inline std::size_t resolve_jobs(std::size_t jobs) {
    if (jobs != 0) {
        return jobs;
    }
    return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

} // namespace detail

/// Evaluates every (policy spec, seed) combination over the target days on
/// a pool of worker threads and returns canonically sorted rows.
inline SweepReport run_policies(const DaySeries& data, const BoilerParams& params, const TimeGrid& grid,
                                const std::vector<PolicySpec>& specs, double alpha,
                                const std::vector<std::uint64_t>& seeds, const std::vector<std::size_t>& days,
                                const SweepOptions& opts = {}) {
    validate_series(data, grid);
    validate_params(params);
    if (!data.has_actual()) {
        throw ValidationError("dataset has no actual demand");
    }
    validate_ambiguity({0.0, alpha, 1});
    for (const std::size_t d : days) {
        if (d >= data.day_count(grid)) {
            throw ValidationError(fmt::format("target day index {} out of range", d));
        }
    }
    struct Job {
        const PolicySpec* spec;
        std::uint64_t seed;
        std::vector<std::size_t> days;
    };
    std::vector<Job> jobs;
    for (const PolicySpec& spec : specs) {
        for (const std::uint64_t seed : seeds) {
            if (opts.carry_storage) {
                jobs.push_back({&spec, seed, days});
            } else {
                for (const std::size_t d : days) {
                    jobs.push_back({&spec, seed, {d}});
                }
            }
        }
    }
    std::vector<std::vector<SweepRow>> results(jobs.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    const auto worker = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= jobs.size()) {
                return;
            }
            try {
                results[i] = detail::run_chain(*jobs[i].spec, jobs[i].days, data, params, grid, alpha, jobs[i].seed,
                                               opts);
            } catch (...) {
                const std::lock_guard lock(failure_mutex);
                if (!failure) {
                    failure = std::current_exception();
                }
            }
        }
    };
    const std::size_t workers = std::min(detail::resolve_jobs(opts.jobs), std::max<std::size_t>(1, jobs.size()));
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back(worker);
        }
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
    SweepReport report;
    for (auto& r : results) {
        std::move(r.begin(), r.end(), std::back_inserter(report.rows));
    }
    report.sort();
    return report;
}

/// Single-stage DRCC over a theta grid (theta = 0 is reported as SAA), with
/// deterministic and oracle baselines for every (seed, day).
inline SweepReport run_theta_sweep(const DaySeries& data, const BoilerParams& params, const TimeGrid& grid,
                                   const std::vector<double>& thetas, double alpha, std::size_t n,
                                   const std::vector<std::uint64_t>& seeds, const std::vector<std::size_t>& days,
                                   const SweepOptions& opts = {}) {
    const double gas = params.gas_price.value();
    std::vector<PolicySpec> specs{{Policy::Deterministic, 0.0, 0, gas}, {Policy::Oracle, 0.0, 0, gas}};
    for (const double theta : thetas) {
        specs.push_back({theta == 0.0 ? Policy::Saa : Policy::Drcc, theta, n, gas});
    }
    return run_policies(data, params, grid, specs, alpha, seeds, days, opts);
}

/// Cross product of sample counts and thetas.
inline SweepReport run_sample_size_sweep(const DaySeries& data, const BoilerParams& params, const TimeGrid& grid,
                                         const std::vector<double>& thetas, double alpha,
                                         const std::vector<std::size_t>& sample_counts,
                                         const std::vector<std::uint64_t>& seeds,
                                         const std::vector<std::size_t>& days, const SweepOptions& opts = {}) {
    const double gas = params.gas_price.value();
    std::vector<PolicySpec> specs{{Policy::Deterministic, 0.0, 0, gas}, {Policy::Oracle, 0.0, 0, gas}};
    for (const std::size_t n : sample_counts) {
        for (const double theta : thetas) {
            specs.push_back({theta == 0.0 ? Policy::Saa : Policy::Drcc, theta, n, gas});
        }
    }
    return run_policies(data, params, grid, specs, alpha, seeds, days, opts);
}

/// Two-stage scheduling for each gas price and theta, with the single-stage
/// policy at the same (gas price, theta) for reference.
inline SweepReport run_gas_price_sweep(const DaySeries& data, const BoilerParams& params, const TimeGrid& grid,
                                       const std::vector<double>& thetas, double alpha, std::size_t n,
                                       const std::vector<double>& gas_prices,
                                       const std::vector<std::uint64_t>& seeds,
                                       const std::vector<std::size_t>& days, const SweepOptions& opts = {}) {
    std::vector<PolicySpec> specs;
    for (const double gas : gas_prices) {
        if (gas < 0.0) {
            throw ValidationError("gas_price is negative");
        }
        for (const double theta : thetas) {
            specs.push_back({Policy::TwoStage, theta, n, gas});
            specs.push_back({theta == 0.0 ? Policy::Saa : Policy::Drcc, theta, n, gas});
        }
    }
    return run_policies(data, params, grid, specs, alpha, seeds, days, opts);
}

/// All policies on identical (seed, day) cells.
inline SweepReport compare_policies(const DaySeries& data, const BoilerParams& params, const TimeGrid& grid,
                                    double theta, double alpha, std::size_t n,
                                    const std::vector<std::uint64_t>& seeds, const std::vector<std::size_t>& days,
                                    const SweepOptions& opts = {}) {
    const double gas = params.gas_price.value();
    const std::vector<PolicySpec> specs{{Policy::Deterministic, 0.0, 0, gas},
                                        {Policy::Saa, 0.0, n, gas},
                                        {Policy::Drcc, theta, n, gas},
                                        {Policy::TwoStage, theta, n, gas},
                                        {Policy::Oracle, 0.0, 0, gas}};
    return run_policies(data, params, grid, specs, alpha, seeds, days, opts);
}

// ---------------------------------------------------------------------------
// Serialization

inline constexpr std::string_view kSweepHeader =
    "schema_version,policy,theta,alpha,n,seed,day,gas_price,status,objective,electricity_cost,gas_cost,"
    "spill_cost,total_cost,avg_violation,delivered_mwh,gas_mwh,unmet_mwh,spill_mwh";

namespace detail {

inline std::string metric(double v) { return std::isnan(v) ? std::string() : fmt::format("{}", v); }

} // namespace detail

inline void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
    using detail::metric;
    os << kSweepHeader << '\n';
    for (const SweepRow& r : rows) {
        os << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", kSweepSchemaVersion,
                          r.policy, r.theta, r.alpha, r.n, r.seed, format_day(r.day), r.gas_price, r.status,
                          metric(r.objective), metric(r.electricity_cost), metric(r.gas_cost), metric(r.spill_cost),
                          metric(r.total_cost), metric(r.avg_violation), metric(r.delivered_mwh),
                          metric(r.gas_mwh), metric(r.unmet_mwh), metric(r.spill_mwh));
    }
}

inline std::string sweep_to_csv(const std::vector<SweepRow>& rows) {
    std::ostringstream os;
    write_sweep_csv(os, rows);
    return os.str();
}

inline std::vector<SweepRow> read_sweep_csv(std::istream& in, const std::string& source = "sweep") {
    std::string line;
    if (!std::getline(in, line)) {
        throw ValidationError(source + ": empty file");
    }
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    if (line != kSweepHeader) {
        throw ValidationError(source + ": unexpected header");
    }
    std::vector<SweepRow> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \r") == std::string::npos) {
            continue;
        }
        const auto cells = detail::split_csv(line);
        if (cells.size() != 19) {
            throw ValidationError(fmt::format("{}: row {} has {} fields, expected 19", source, lineno, cells.size()));
        }
        const auto num = [&](std::size_t i) {
            if (cells[i].empty()) {
                return std::numeric_limits<double>::quiet_NaN();
            }
            const auto v = detail::parse_double(cells[i]);
            if (!v) {
                throw ValidationError(fmt::format("{}: row {}: bad number '{}'", source, lineno, cells[i]));
            }
            return *v;
        };
        if (num(0) != kSweepSchemaVersion) {
            throw ValidationError(fmt::format("{}: row {}: unsupported schema_version {}", source, lineno, cells[0]));
        }
        SweepRow r;
        r.policy = std::string(cells[1]);
        r.theta = num(2);
        r.alpha = num(3);
        r.n = static_cast<std::size_t>(num(4));
        r.seed = static_cast<std::uint64_t>(num(5));
        const auto day = parse_day(cells[6]);
        if (!day) {
            throw ValidationError(fmt::format("{}: row {}: bad day '{}'", source, lineno, cells[6]));
        }
        r.day = *day;
        r.gas_price = num(7);
        r.status = std::string(cells[8]);
        r.objective = num(9);
        r.electricity_cost = num(10);
        r.gas_cost = num(11);
        r.spill_cost = num(12);
        r.total_cost = num(13);
        r.avg_violation = num(14);
        r.delivered_mwh = num(15);
        r.gas_mwh = num(16);
        r.unmet_mwh = num(17);
        r.spill_mwh = num(18);
        rows.push_back(std::move(r));
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Aggregation

struct Moments {
    std::size_t count = 0;
    double mean = 0.0;
    double std = 0.0; // sample standard deviation, 0 for a single value
};

inline Moments moments(const std::vector<double>& xs) {
    Moments m;
    m.count = xs.size();
    if (xs.empty()) {
        m.mean = std::numeric_limits<double>::quiet_NaN();
        return m;
    }
    double sum = 0.0;
    for (const double x : xs) {
        sum += x;
    }
    m.mean = sum / static_cast<double>(xs.size());
    if (xs.size() > 1) {
        double ss = 0.0;
        for (const double x : xs) {
            ss += (x - m.mean) * (x - m.mean);
        }
        m.std = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    }
    return m;
}

/// Per-(policy, gas price, theta, N) means and sample standard deviations
/// over the successful rows. Shares are per-row electric (storage) and gas
/// fractions of served heat, averaged.
struct AggregateGroup {
    std::string policy;
    double gas_price = 0.0;
    double theta = 0.0;
    std::size_t n = 0;
    std::size_t rows = 0;
    std::size_t failed = 0;
    std::map<std::string, Moments> metrics;
};

inline std::vector<AggregateGroup> aggregate(std::vector<SweepRow> rows) {
    std::sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) { return a.key() < b.key(); });
    std::vector<AggregateGroup> groups;
    std::size_t i = 0;
    while (i < rows.size()) {
        std::size_t j = i;
        const auto same = [&](const SweepRow& r) {
            return r.policy == rows[i].policy && r.gas_price == rows[i].gas_price && r.theta == rows[i].theta &&
                   r.n == rows[i].n;
        };
        std::map<std::string, std::vector<double>> values;
        AggregateGroup g;
        g.policy = rows[i].policy;
        g.gas_price = rows[i].gas_price;
        g.theta = rows[i].theta;
        g.n = rows[i].n;
        for (; j < rows.size() && same(rows[j]); ++j) {
            const SweepRow& r = rows[j];
            ++g.rows;
            if (!r.ok()) {
                ++g.failed;
                continue;
            }
            values["objective"].push_back(r.objective);
            values["electricity_cost"].push_back(r.electricity_cost);
            values["gas_cost"].push_back(r.gas_cost);
            values["spill_cost"].push_back(r.spill_cost);
            values["total_cost"].push_back(r.total_cost);
            values["avg_violation"].push_back(r.avg_violation);
            values["unmet_mwh"].push_back(r.unmet_mwh);
            values["spill_mwh"].push_back(r.spill_mwh);
            const double served = r.delivered_mwh + r.gas_mwh;
            if (served > 0.0) {
                values["electric_share"].push_back(r.delivered_mwh / served);
                values["gas_share"].push_back(r.gas_mwh / served);
            }
        }
        for (const auto& [name, xs] : values) {
            g.metrics[name] = moments(xs);
        }
        groups.push_back(std::move(g));
        i = j;
    }
    return groups;
}

inline const AggregateGroup* find_group(const std::vector<AggregateGroup>& groups, std::string_view policy,
                                        double theta, std::size_t n, std::optional<double> gas_price = std::nullopt) {
    for (const AggregateGroup& g : groups) {
        if (g.policy == policy && g.theta == theta && g.n == n && (!gas_price || g.gas_price == *gas_price)) {
            return &g;
        }
    }
    return nullptr;
}

inline nlohmann::ordered_json aggregate_json(const std::vector<AggregateGroup>& groups) {
    nlohmann::ordered_json out;
    out["schema_version"] = kSweepSchemaVersion;
    out["groups"] = nlohmann::ordered_json::array();
    for (const AggregateGroup& g : groups) {
        nlohmann::ordered_json j;
        j["policy"] = g.policy;
        j["gas_price"] = g.gas_price;
        j["theta"] = g.theta;
        j["n"] = g.n;
        j["rows"] = g.rows;
        j["failed"] = g.failed;
        nlohmann::ordered_json m = nlohmann::ordered_json::object();
        for (const auto& [name, mo] : g.metrics) {
            m[name] = {{"mean", mo.mean}, {"std", mo.std}, {"count", mo.count}};
        }
        j["metrics"] = std::move(m);
        out["groups"].push_back(std::move(j));
    }
    return out;
}

} // namespace drsched
