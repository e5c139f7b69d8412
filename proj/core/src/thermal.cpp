#include "t3s/thermal.hpp"

#include <algorithm>
#include <cmath>
#include <charconv>
#include <fstream>
#include <sstream>
#include <string>

namespace t3s {

double daily_gdd(double t_min, double t_max, const ThermalConfig& cfg) {
  if (!std::isfinite(t_min) || !std::isfinite(t_max) ||
      !std::isfinite(cfg.t_base)) {
    throw ValidationError("daily_gdd: non-finite temperature input");
  }
  if (t_min > t_max) {
    throw ValidationError("daily_gdd: t_min " + fmt_g(t_min) +
                          " exceeds t_max " + fmt_g(t_max));
  }
  return std::max(0.0, (t_max + t_min) / 2.0 - cfg.t_base);
}

ThermalSeries cumulative_gdd(std::span<const DailyTemperature> temps,
                             const ThermalConfig& cfg) {
  if (temps.empty()) {
    throw ValidationError("cumulative_gdd: empty temperature series");
  }
  ThermalSeries out;
  out.day_of_year.reserve(temps.size());
  out.gdd_daily.reserve(temps.size());
  out.gdd_cumulative.reserve(temps.size());

  double running = 0.0;
  int prev_day = temps[0].day_of_year - 1;
  for (const auto& t : temps) {
    if (t.day_of_year < 1 || t.day_of_year > 366) {
      throw ValidationError("cumulative_gdd: day_of_year " +
                            std::to_string(t.day_of_year) + " out of range");
    }
    if (t.day_of_year != prev_day + 1) {
      throw ValidationError("cumulative_gdd: day gap between " +
                            std::to_string(prev_day) + " and " +
                            std::to_string(t.day_of_year));
    }
    prev_day = t.day_of_year;
    double g = daily_gdd(t.t_min, t.t_max, cfg);
    running += g;
    out.day_of_year.push_back(t.day_of_year);
    out.gdd_daily.push_back(g);
    out.gdd_cumulative.push_back(running);
  }
  return out;
}

std::vector<double> gdd_at_observations(const ThermalSeries& series,
                                        std::span<const int> obs_days) {
  std::vector<double> out;
  out.reserve(obs_days.size());
  const int first = series.day_of_year.empty() ? 0 : series.day_of_year.front();
  for (int day : obs_days) {
    auto idx = static_cast<std::ptrdiff_t>(day) - first;
    if (idx < 0 || idx >= static_cast<std::ptrdiff_t>(series.size()) ||
        series.day_of_year[static_cast<std::size_t>(idx)] != day) {
      throw ValidationError("gdd_at_observations: day " + std::to_string(day) +
                            " not covered by thermal series");
    }
    out.push_back(series.gdd_cumulative[static_cast<std::size_t>(idx)]);
  }
  return out;
}

namespace {

double parse_double(std::string_view s, const std::string& context) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw IoError("temperature csv: bad number '" + std::string(s) + "' in " +
                  context);
  }
  return value;
}

int parse_int(std::string_view s, const std::string& context) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw IoError("temperature csv: bad integer '" + std::string(s) + "' in " +
                  context);
  }
  return value;
}

}  // namespace

std::vector<DailyTemperature> read_temperature_csv(
    const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot open temperature csv: " + file.string());

  std::string line;
  if (!std::getline(in, line)) {
    throw IoError("temperature csv is empty: " + file.string());
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "day_of_year,t_min,t_max") {
    throw IoError("temperature csv: unexpected header '" + line + "'");
  }

  std::vector<DailyTemperature> out;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::string context = file.filename().string() + ":" + std::to_string(line_no);
    auto c1 = line.find(',');
    auto c2 = line.find(',', c1 == std::string::npos ? c1 : c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos) {
      throw IoError("temperature csv: malformed row at " + context);
    }
    DailyTemperature t;
    t.day_of_year = parse_int(std::string_view(line).substr(0, c1), context);
    t.t_min = parse_double(std::string_view(line).substr(c1 + 1, c2 - c1 - 1),
                           context);
    t.t_max = parse_double(std::string_view(line).substr(c2 + 1), context);
    out.push_back(t);
  }
  if (out.empty()) {
    throw IoError("temperature csv has no data rows: " + file.string());
  }
  for (std::size_t i = 1; i < out.size(); ++i) {
    if (out[i].day_of_year <= out[i - 1].day_of_year) {
      throw IoError("temperature csv: day_of_year not strictly increasing at row " +
                    std::to_string(i + 2));
    }
  }
  return out;
}

void write_temperature_csv(std::span<const DailyTemperature> temps,
                           const std::filesystem::path& file) {
  std::ostringstream ss;
  ss << "day_of_year,t_min,t_max\n";
  for (const auto& t : temps) {
    ss << t.day_of_year << ',' << fmt_g(t.t_min) << ',' << fmt_g(t.t_max)
       << '\n';
  }
  write_text_file(file.string(), ss.str());
}

}  // namespace t3s
