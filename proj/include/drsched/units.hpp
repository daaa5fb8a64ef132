#pragma once

#include <compare>

namespace drsched {

/// Thin tagged wrapper over a double. Quantities with different tags do not
/// mix; the only cross-tag operation is power x duration -> energy.
template <typename Tag>
class Quantity {
public:
    constexpr Quantity() = default;
    constexpr explicit Quantity(double value) : value_(value) {}

    [[nodiscard]] constexpr double value() const { return value_; }

    constexpr Quantity& operator+=(Quantity other) {
        value_ += other.value_;
        return *this;
    }
    constexpr Quantity& operator-=(Quantity other) {
        value_ -= other.value_;
        return *this;
    }

    friend constexpr Quantity operator+(Quantity a, Quantity b) { return Quantity(a.value_ + b.value_); }
    friend constexpr Quantity operator-(Quantity a, Quantity b) { return Quantity(a.value_ - b.value_); }
    friend constexpr Quantity operator*(double k, Quantity a) { return Quantity(k * a.value_); }
    friend constexpr Quantity operator*(Quantity a, double k) { return Quantity(k * a.value_); }
    friend constexpr auto operator<=>(Quantity, Quantity) = default;

private:
    double value_ = 0.0;
};

struct PowerTag {};
struct EnergyTag {};
struct HoursTag {};
struct PriceTag {};

using MegaWatt = Quantity<PowerTag>;      // MW
using MegaWattHour = Quantity<EnergyTag>; // MWh
using Hours = Quantity<HoursTag>;         // h
using EuroPerMWh = Quantity<PriceTag>;    // EUR/MWh

constexpr MegaWattHour operator*(MegaWatt p, Hours dt) { return MegaWattHour(p.value() * dt.value()); }
constexpr MegaWattHour operator*(Hours dt, MegaWatt p) { return p * dt; }
constexpr MegaWatt operator/(MegaWattHour e, Hours dt) { return MegaWatt(e.value() / dt.value()); }

namespace literals {
constexpr MegaWatt operator""_MW(long double v) { return MegaWatt(static_cast<double>(v)); }
constexpr MegaWatt operator""_MW(unsigned long long v) { return MegaWatt(static_cast<double>(v)); }
constexpr MegaWattHour operator""_MWh(long double v) { return MegaWattHour(static_cast<double>(v)); }
constexpr MegaWattHour operator""_MWh(unsigned long long v) { return MegaWattHour(static_cast<double>(v)); }
constexpr Hours operator""_h(long double v) { return Hours(static_cast<double>(v)); }
constexpr Hours operator""_h(unsigned long long v) { return Hours(static_cast<double>(v)); }
} // namespace literals

} // namespace drsched
