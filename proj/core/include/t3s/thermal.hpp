#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "t3s/common.hpp"

namespace t3s {

struct DailyTemperature {
  int day_of_year = 0;  // 1..366
  double t_min = 0.0;   // deg C
  double t_max = 0.0;   // deg C
};

struct ThermalConfig {
  double t_base = 0.0;  // deg C, development threshold
};

// Daily and running growing-degree-day totals for one site-year.
// gdd_cumulative is non-decreasing and gdd_cumulative[i] = sum(gdd_daily[0..i]).
struct ThermalSeries {
  std::vector<int> day_of_year;
  std::vector<double> gdd_daily;
  std::vector<double> gdd_cumulative;

  std::size_t size() const { return day_of_year.size(); }
};

// max(0, (t_max + t_min)/2 - t_base). Throws ValidationError on non-finite
// input or t_min > t_max.
double daily_gdd(double t_min, double t_max, const ThermalConfig& cfg = {});

// Prefix sums of daily_gdd over a gap-free, strictly increasing day series.
ThermalSeries cumulative_gdd(std::span<const DailyTemperature> temps,
                             const ThermalConfig& cfg = {});

// Cumulative GDD at each observation day, in input order. Every obs_day must
// be present in the series.
std::vector<double> gdd_at_observations(const ThermalSeries& series,
                                        std::span<const int> obs_days);

// CSV with header "day_of_year,t_min,t_max", one row per day.
std::vector<DailyTemperature> read_temperature_csv(
    const std::filesystem::path& file);
void write_temperature_csv(std::span<const DailyTemperature> temps,
                           const std::filesystem::path& file);

}  // namespace t3s
