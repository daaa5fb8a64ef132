#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>
#include <fmt/ranges.h>

#include "drsched/calendar.hpp"
#include "drsched/domain.hpp"
#include "drsched/series_io.hpp"
#include "drsched/synth.hpp"

namespace drsched {

/// Sweep settings. Target days are the last `target_days` days of the
/// dataset unless `first_target` is set.
struct ExperimentConfig {
    std::vector<double> thetas{0.0, 0.01, 0.02, 0.05, 0.1, 0.5};
    std::vector<std::size_t> sample_counts{5, 10, 50, 100};
    std::vector<double> gas_prices{10.0, 25.0, 50.0, 100.0, 200.0};
    std::vector<std::uint64_t> seeds = default_seeds();
    std::size_t target_days = 30;
    std::optional<DayId> first_target;
    bool with_replacement = false;
    bool carry_storage = false;
    std::size_t jobs = 0; // 0 = hardware concurrency

    static std::vector<std::uint64_t> default_seeds() {
        std::vector<std::uint64_t> s(40);
        for (std::size_t i = 0; i < s.size(); ++i) {
            s[i] = i + 1;
        }
        return s;
    }
};

struct PathsConfig {
    std::string dataset = "data/demo.csv";
    std::string output = "out";
};

struct RunConfig {
    BoilerParams boiler;
    TimeGrid grid;
    AmbiguityConfig ambiguity;
    ExperimentConfig experiment;
    PathsConfig paths;
    SynthConfig synth;
    std::vector<std::string> warnings; // unknown keys, not serialized
};

namespace detail {

inline std::string fmt_double(double v) { return fmt::format("{}", v); }

template <typename T>
std::string join_list(const std::vector<T>& xs) {
    return fmt::format("{}", fmt::join(xs, ","));
}

inline double to_double(const std::string& key, const std::string& text) {
    const auto v = parse_double(text);
    if (!v || !std::isfinite(*v)) {
        throw ValidationError(fmt::format("{}: expected a number, got '{}'", key, text));
    }
    return *v;
}

inline std::uint64_t to_unsigned(const std::string& key, const std::string& text) {
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw ValidationError(fmt::format("{}: expected a non-negative integer, got '{}'", key, text));
    }
    return v;
}

inline bool to_bool(const std::string& key, const std::string& text) {
    if (text == "true" || text == "1" || text == "yes") {
        return true;
    }
    if (text == "false" || text == "0" || text == "no") {
        return false;
    }
    throw ValidationError(fmt::format("{}: expected true or false, got '{}'", key, text));
}

inline std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    for (const auto cell : split_csv(text)) {
        if (!cell.empty()) {
            out.emplace_back(cell);
        }
    }
    return out;
}

/// Walks the sections of a parsed tree and hands every known key to its
/// setter; everything else becomes a warning.
class KeyTable {
public:
    using Setter = std::function<void(const std::string& key, const std::string& value)>;

    void add(const std::string& section, const std::string& key, Setter set) {
        setters_[section + "." + key] = std::move(set);
    }

    std::vector<std::string> apply(const boost::property_tree::ptree& tree) const {
        std::vector<std::string> warnings;
        for (const auto& [section, body] : tree) {
            if (body.empty() && !body.data().empty()) {
                warnings.push_back(fmt::format("key '{}' outside any section ignored", section));
                continue;
            }
            for (const auto& [key, node] : body) {
                const std::string full = section + "." + key;
                const auto it = setters_.find(full);
                if (it == setters_.end()) {
                    warnings.push_back(fmt::format("unknown key '{}' ignored", full));
                    continue;
                }
                it->second(full, node.get_value<std::string>());
            }
        }
        return warnings;
    }

private:
    std::map<std::string, Setter> setters_;
};

inline KeyTable key_table(RunConfig& c) {
    KeyTable k;
    const auto num = [](double& field) {
        return [&field](const std::string& key, const std::string& v) { field = to_double(key, v); };
    };
    const auto qty = [](auto& field) {
        return [&field](const std::string& key, const std::string& v) {
            field = std::remove_reference_t<decltype(field)>(to_double(key, v));
        };
    };
    const auto count = [](std::size_t& field) {
        return [&field](const std::string& key, const std::string& v) {
            field = static_cast<std::size_t>(to_unsigned(key, v));
        };
    };
    const auto flag = [](bool& field) {
        return [&field](const std::string& key, const std::string& v) { field = to_bool(key, v); };
    };
    const auto text = [](std::string& field) {
        return [&field](const std::string&, const std::string& v) { field = v; };
    };

    BoilerParams& b = c.boiler;
    k.add("boiler", "p_min", qty(b.p_min));
    k.add("boiler", "p_max", qty(b.p_max));
    k.add("boiler", "storage_min", qty(b.storage_min));
    k.add("boiler", "storage_max", qty(b.storage_max));
    k.add("boiler", "q_init", qty(b.q_init));
    k.add("boiler", "eta_p2h", num(b.eta_p2h));
    k.add("boiler", "eta_loss", num(b.eta_loss));
    k.add("boiler", "gas_capacity", qty(b.gas_capacity));
    k.add("boiler", "gas_price", qty(b.gas_price));
    k.add("boiler", "spill_price", qty(b.spill_price));
    k.add("boiler", "terminal_storage_min", [&b](const std::string& key, const std::string& v) {
        if (v.empty() || v == "none") {
            b.terminal_storage_min.reset();
        } else {
            b.terminal_storage_min = MegaWattHour(to_double(key, v));
        }
    });

    k.add("grid", "periods", count(c.grid.periods));
    k.add("grid", "step", qty(c.grid.step));

    k.add("ambiguity", "theta", num(c.ambiguity.theta));
    k.add("ambiguity", "alpha", num(c.ambiguity.alpha));
    k.add("ambiguity", "sample_count", count(c.ambiguity.sample_count));

    ExperimentConfig& e = c.experiment;
    k.add("experiment", "thetas", [&e](const std::string& key, const std::string& v) {
        e.thetas.clear();
        for (const auto& x : split_list(v)) {
            e.thetas.push_back(to_double(key, x));
        }
    });
    k.add("experiment", "sample_counts", [&e](const std::string& key, const std::string& v) {
        e.sample_counts.clear();
        for (const auto& x : split_list(v)) {
            e.sample_counts.push_back(static_cast<std::size_t>(to_unsigned(key, x)));
        }
    });
    k.add("experiment", "gas_prices", [&e](const std::string& key, const std::string& v) {
        e.gas_prices.clear();
        for (const auto& x : split_list(v)) {
            e.gas_prices.push_back(to_double(key, x));
        }
    });
    k.add("experiment", "seeds", [&e](const std::string& key, const std::string& v) {
        e.seeds.clear();
        for (const auto& x : split_list(v)) {
            e.seeds.push_back(to_unsigned(key, x));
        }
    });
    k.add("experiment", "target_days", count(e.target_days));
    k.add("experiment", "first_target", [&e](const std::string& key, const std::string& v) {
        if (v.empty() || v == "none") {
            e.first_target.reset();
            return;
        }
        const auto d = parse_day(v);
        if (!d) {
            throw ValidationError(fmt::format("{}: expected YYYY-MM-DD, got '{}'", key, v));
        }
        e.first_target = *d;
    });
    k.add("experiment", "with_replacement", flag(e.with_replacement));
    k.add("experiment", "carry_storage", flag(e.carry_storage));
    k.add("experiment", "jobs", count(e.jobs));

    k.add("paths", "dataset", text(c.paths.dataset));
    k.add("paths", "output", text(c.paths.output));

    SynthConfig& s = c.synth;
    k.add("synth", "days", count(s.days));
    k.add("synth", "start", [&s](const std::string& key, const std::string& v) {
        const auto d = parse_day(v);
        if (!d) {
            throw ValidationError(fmt::format("{}: expected YYYY-MM-DD, got '{}'", key, v));
        }
        s.start = *d;
    });
    k.add("synth", "base_level", num(s.base_level));
    k.add("synth", "daily_amplitude", num(s.daily_amplitude));
    k.add("synth", "weekly_amplitude", num(s.weekly_amplitude));
    k.add("synth", "noise_ar1_rho", num(s.noise_ar1_rho));
    k.add("synth", "noise_sigma", num(s.noise_sigma));
    k.add("synth", "spike_prob", num(s.spike_prob));
    k.add("synth", "spike_scale", num(s.spike_scale));
    k.add("synth", "spike_decay", num(s.spike_decay));
    k.add("synth", "price_base", num(s.price_base));
    k.add("synth", "price_amplitude", num(s.price_amplitude));
    k.add("synth", "price_sigma", num(s.price_sigma));
    k.add("synth", "allow_negative_prices", flag(s.allow_negative_prices));
    k.add("synth", "seed", [&s](const std::string& key, const std::string& v) { s.seed = to_unsigned(key, v); });
    return k;
}

} // namespace detail

/// Checks every section; throws ValidationError on the first violation.
inline const RunConfig& validate_config(const RunConfig& c) {
    validate_grid(c.grid);
    validate_params(c.boiler);
    validate_ambiguity(c.ambiguity);
    validate_synth(c.synth);
    const ExperimentConfig& e = c.experiment;
    for (std::size_t i = 0; i < e.thetas.size(); ++i) {
        if (e.thetas[i] < 0.0) {
            throw ValidationError("theta must be >= 0");
        }
        if (i > 0 && e.thetas[i] <= e.thetas[i - 1]) {
            throw ValidationError("experiment.thetas must be strictly increasing");
        }
    }
    for (std::size_t i = 0; i < e.gas_prices.size(); ++i) {
        if (e.gas_prices[i] < 0.0) {
            throw ValidationError("gas_price is negative");
        }
        if (i > 0 && e.gas_prices[i] <= e.gas_prices[i - 1]) {
            throw ValidationError("experiment.gas_prices must be strictly increasing");
        }
    }
    for (const std::size_t n : e.sample_counts) {
        if (n < 1) {
            throw ValidationError("sample_count must be at least 1");
        }
    }
    if (e.seeds.empty()) {
        throw ValidationError("experiment.seeds is empty");
    }
    if (e.target_days < 1) {
        throw ValidationError("experiment.target_days must be at least 1");
    }
    return c;
}

inline RunConfig parse_config(std::istream& in, const std::string& source = "config") {
    boost::property_tree::ptree tree;
    try {
        boost::property_tree::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ValidationError(fmt::format("{}:{}: {}", source, e.line(), e.message()));
    }
    RunConfig c;
    const detail::KeyTable keys = detail::key_table(c);
    try {
        c.warnings = keys.apply(tree);
        validate_config(c);
    } catch (const ValidationError& e) {
        throw ValidationError(fmt::format("{}: {}", source, e.what()));
    }
    return c;
}

inline RunConfig parse_config_text(const std::string& text, const std::string& source = "config") {
    std::istringstream in(text);
    return parse_config(in, source);
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot open config " + path);
    }
    return parse_config(in, path);
}

/// INI text that parses back to the same values.
inline std::string serialize_config(const RunConfig& c) {
    using detail::fmt_double;
    using detail::join_list;
    std::string out;
    const BoilerParams& b = c.boiler;
    out += "[boiler]\n";
    out += fmt::format("p_min = {}\np_max = {}\n", fmt_double(b.p_min.value()), fmt_double(b.p_max.value()));
    out += fmt::format("storage_min = {}\nstorage_max = {}\nq_init = {}\n", fmt_double(b.storage_min.value()),
                       fmt_double(b.storage_max.value()), fmt_double(b.q_init.value()));
    out += fmt::format("eta_p2h = {}\neta_loss = {}\n", fmt_double(b.eta_p2h), fmt_double(b.eta_loss));
    out += fmt::format("gas_capacity = {}\ngas_price = {}\nspill_price = {}\n", fmt_double(b.gas_capacity.value()),
                       fmt_double(b.gas_price.value()), fmt_double(b.spill_price.value()));
    out += fmt::format("terminal_storage_min = {}\n",
                       b.terminal_storage_min ? fmt_double(b.terminal_storage_min->value()) : std::string("none"));
    out += fmt::format("\n[grid]\nperiods = {}\nstep = {}\n", c.grid.periods, fmt_double(c.grid.step.value()));
    out += fmt::format("\n[ambiguity]\ntheta = {}\nalpha = {}\nsample_count = {}\n", fmt_double(c.ambiguity.theta),
                       fmt_double(c.ambiguity.alpha), c.ambiguity.sample_count);
    const ExperimentConfig& e = c.experiment;
    out += "\n[experiment]\n";
    out += fmt::format("thetas = {}\nsample_counts = {}\ngas_prices = {}\nseeds = {}\n", join_list(e.thetas),
                       join_list(e.sample_counts), join_list(e.gas_prices), join_list(e.seeds));
    out += fmt::format("target_days = {}\nfirst_target = {}\n", e.target_days,
                       e.first_target ? format_day(*e.first_target) : std::string("none"));
    out += fmt::format("with_replacement = {}\ncarry_storage = {}\njobs = {}\n", e.with_replacement, e.carry_storage,
                       e.jobs);
    out += fmt::format("\n[paths]\ndataset = {}\noutput = {}\n", c.paths.dataset, c.paths.output);
    const SynthConfig& s = c.synth;
    out += "\n[synth]\n";
    out += fmt::format("days = {}\nstart = {}\nbase_level = {}\n", s.days, format_day(s.start),
                       fmt_double(s.base_level));
    out += fmt::format("daily_amplitude = {}\nweekly_amplitude = {}\n", fmt_double(s.daily_amplitude),
                       fmt_double(s.weekly_amplitude));
    out += fmt::format("noise_ar1_rho = {}\nnoise_sigma = {}\n", fmt_double(s.noise_ar1_rho),
                       fmt_double(s.noise_sigma));
    out += fmt::format("spike_prob = {}\nspike_scale = {}\nspike_decay = {}\n", fmt_double(s.spike_prob),
                       fmt_double(s.spike_scale), fmt_double(s.spike_decay));
    out += fmt::format("price_base = {}\nprice_amplitude = {}\nprice_sigma = {}\n", fmt_double(s.price_base),
                       fmt_double(s.price_amplitude), fmt_double(s.price_sigma));
    out += fmt::format("allow_negative_prices = {}\nseed = {}\n", s.allow_negative_prices, s.seed);
    return out;
}

} // namespace drsched
