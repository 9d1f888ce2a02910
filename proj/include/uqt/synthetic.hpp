#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "uqt/calendar.hpp"
#include "uqt/series.hpp"

namespace uqt {

/// Parameters of the synthetic traffic generator.
///
/// level(t) = weekday_factor * rain_factor * (base + morning bump + evening bump),
/// flow(t)  = max(0, level(t) * (1 + z_t) + e_t), where z is an AR(1) process
/// with coefficient `ar_coefficient` and innovation sd `ar_sigma`, and
/// e_t ~ N(0, (sigma0 + kappa * level(t))^2).
struct SyntheticConfig {
    double base_level = 250.0;
    double morning_peak_amplitude = 900.0;
    double morning_peak_hour = 8.0;
    double morning_peak_width = 1.25;   // hours, Gaussian sd
    double evening_peak_amplitude = 700.0;
    double evening_peak_hour = 18.5;
    double evening_peak_width = 1.75;
    double weekend_factor = 0.6;        // applied on weekends and holidays
    double school_boost = 0.15;         // morning bump gain during school periods
    double rain_effect = 0.15;          // flow drop at >= 5 mm/h
    double sigma0 = 15.0;
    double kappa = 0.06;
    double ar_coefficient = 0.97;
    double ar_sigma = 0.02;
    std::string start_date = "2019-01-01";

    /// Throws ConfigError for non-positive amplitudes, negative noise, etc.
    void validate() const;

    /// Flat `key = value` text; unknown keys raise ConfigError.
    static SyntheticConfig from_file(const std::filesystem::path& path);
    static SyntheticConfig from_text(const std::string& text);
    std::string to_text() const;
};

/// Deterministic traffic level at `ts` before noise.
double synthetic_level(const SyntheticConfig& cfg, Timestamp ts, const CalendarInfo& calendar, double precipitation);

/// Noise standard deviation sigma0 + kappa * level.
inline double synthetic_noise_sd(const SyntheticConfig& cfg, double level) { return cfg.sigma0 + cfg.kappa * level; }

/// 96 samples per day, with weather. Bitwise deterministic for a given seed.
SensorSeries generate_synthetic(const SyntheticConfig& cfg, int days, std::uint64_t seed,
                                const CalendarInfo& calendar, std::string sensor_id = "synthetic");

}  // namespace uqt
