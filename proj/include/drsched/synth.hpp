#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "drsched/calendar.hpp"
#include "drsched/domain.hpp"

namespace drsched {

/// Parameters of the synthetic demand/price generator. Heat values are MWh
/// per period, prices EUR/MWh.
struct SynthConfig {
    std::size_t days = 180;
    DayId start = std::chrono::sys_days{std::chrono::year{2024} / 10 / 1};
    double base_level = 3.5;
    double daily_amplitude = 1.0;
    double weekly_amplitude = 0.3;
    double noise_ar1_rho = 0.9;
    double noise_sigma = 0.4;
    double spike_prob = 0.01;
    double spike_scale = 1.5;
    double spike_decay = 0.0; // share of a spike carried into the next period
    double price_base = 8.0;
    double price_amplitude = 4.0;
    double price_sigma = 2.0;
    bool allow_negative_prices = false;
    std::uint64_t seed = 1;
};

inline SynthConfig validate_synth(const SynthConfig& c) {
    const auto finite = [](double v) { return std::isfinite(v); };
    if (c.days < 1) {
        throw ValidationError("days must be at least 1");
    }
    if (!finite(c.base_level) || c.base_level < 0.0) {
        throw ValidationError("base_level must be >= 0");
    }
    if (!finite(c.daily_amplitude) || !finite(c.weekly_amplitude) || !finite(c.price_base) ||
        !finite(c.price_amplitude)) {
        throw ValidationError("synth amplitudes must be finite");
    }
    if (!(c.noise_ar1_rho >= 0.0 && c.noise_ar1_rho < 1.0)) {
        throw ValidationError("noise_ar1_rho outside [0, 1)");
    }
    if (!finite(c.noise_sigma) || c.noise_sigma < 0.0) {
        throw ValidationError("noise_sigma must be >= 0");
    }
    if (!(c.spike_prob >= 0.0 && c.spike_prob <= 1.0)) {
        throw ValidationError("spike_prob outside [0, 1]");
    }
    if (!(c.spike_decay >= 0.0 && c.spike_decay < 1.0)) {
        throw ValidationError("spike_decay outside [0, 1)");
    }
    if (!finite(c.spike_scale) || c.spike_scale < 0.0) {
        throw ValidationError("spike_scale must be >= 0");
    }
    if (!finite(c.price_sigma) || c.price_sigma < 0.0) {
        throw ValidationError("price_sigma must be >= 0");
    }
    return c;
}

/// Generates `days` whole days on `grid`. The forecast is the noise-free
/// profile; actual = forecast + AR(1) noise (stationary std noise_sigma) +
/// occasional positive spikes of size spike_scale * U[0.5, 1.5], clamped at 0.
/// With spike_decay > 0 a spike fades geometrically over the following periods.
/// When `injected` is given it receives noise + spikes before clamping.
inline DaySeries synth_generate(const SynthConfig& raw, const TimeGrid& grid,
                                std::vector<double>* injected = nullptr) {
    const SynthConfig c = validate_synth(raw);
    validate_grid(grid);
    constexpr double two_pi = 2.0 * std::numbers::pi;
    std::mt19937_64 rng(c.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    const std::size_t n = c.days * grid.periods;
    const auto step = std::chrono::seconds(static_cast<long long>(std::llround(grid.dt() * 3600.0)));
    const double innovation = c.noise_sigma * std::sqrt(1.0 - c.noise_ar1_rho * c.noise_ar1_rho);

    DaySeries s;
    s.timestamps.reserve(n);
    s.forecast.reserve(n);
    s.actual.reserve(n);
    s.price.reserve(n);
    if (injected != nullptr) {
        injected->clear();
        injected->reserve(n);
    }
    double noise = c.noise_sigma * normal(rng);
    double spike = 0.0;
    for (std::size_t d = 0; d < c.days; ++d) {
        const DayId day = c.start + std::chrono::days{static_cast<int>(d)};
        const double weekday = static_cast<double>(std::chrono::weekday{day}.iso_encoding() - 1);
        for (std::size_t t = 0; t < grid.periods; ++t) {
            const Timestamp ts = Timestamp(day) + step * static_cast<long long>(t);
            const double hour = grid.dt() * static_cast<double>(t);
            // Morning peak around 07:00, weekend dip.
            const double profile = c.base_level + c.daily_amplitude * std::cos(two_pi * (hour - 7.0) / 24.0) +
                                   c.weekly_amplitude * std::cos(two_pi * weekday / 7.0);
            const double forecast = std::max(0.0, profile);

            if (d != 0 || t != 0) {
                noise = c.noise_ar1_rho * noise + innovation * normal(rng);
            }
            spike *= c.spike_decay;
            if (unit(rng) < c.spike_prob) {
                spike += c.spike_scale * (0.5 + unit(rng));
            }
            const double residual = noise + spike;

            double price = c.price_base + c.price_amplitude * std::cos(two_pi * (hour - 18.0) / 24.0) +
                           c.price_sigma * normal(rng);
            if (!c.allow_negative_prices) {
                price = std::max(0.0, price);
            }
            s.timestamps.push_back(ts);
            s.forecast.push_back(forecast);
            s.actual.push_back(std::max(0.0, forecast + residual));
            s.price.push_back(price);
            if (injected != nullptr) {
                injected->push_back(residual);
            }
        }
    }
    return s;
}

} // namespace drsched
