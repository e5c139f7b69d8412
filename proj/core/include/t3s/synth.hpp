#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "t3s/cube.hpp"
#include "t3s/thermal.hpp"

namespace t3s {

// Smooth annual temperature cycle plus a per-year shift and seeded daily
// noise. The noise stream depends on (seed, year) only, so two runs that
// differ only in year_anomaly produce day series offset by exactly the
// anomaly.
struct ClimateModel {
  double amplitude = 8.0;   // deg C, half swing of the annual cycle
  double offset = 10.0;     // deg C, annual mean
  double phase_day = 15.0;  // coldest day of year
  double daily_noise_sd = 1.0;
  std::map<int, double> year_anomaly;  // missing year -> 0
  std::uint64_t seed = 0;
};

std::vector<DailyTemperature> gen_temperature_year(const ClimateModel& climate,
                                                   int year);

// Double-logistic curve in thermal time, per class and channel.
struct ClassPhenology {
  std::string name;
  double g_onset = 0.0;   // degree-days
  double g_offset = 0.0;  // degree-days
  double growth_rate = 0.0;
  double senescence_rate = 0.0;
  std::vector<double> peak_amplitude;    // per channel
  std::vector<double> base_reflectance;  // per channel
  double pixel_noise_sd = 0.0;           // reflectance units
};

struct PhenologyParams {
  std::vector<ClassPhenology> classes;
  void validate(int n_channels) const;
};

// base + amplitude * (sigmoid(growth*(g-onset)) - sigmoid(senescence*(g-offset)))
// per channel, clamped to [0, 1].
std::vector<double> signature(int class_id, double cumulative_gdd,
                              const PhenologyParams& phenology);

struct CloudModel {
  double cloud_probability = 0.5;  // chance a timestep carries clouds
  int blob_count_min = 2;
  int blob_count_max = 6;
  int blob_radius_min = 6;   // pixels
  int blob_radius_max = 20;  // pixels
  std::uint64_t seed = 0;
};

// Rectangular fields tiling H x W; field_classes is row-major over the
// field grid.
struct FieldLayout {
  int height = 64, width = 64;
  int field_height = 8, field_width = 8;
  std::vector<int> field_classes;
  void validate(int n_classes) const;
};

DataCube gen_cube(int year, const ClimateModel& climate,
                  const PhenologyParams& phenology, const CloudModel& clouds,
                  const FieldLayout& layout, int obs_every_n_days,
                  std::uint64_t seed);

// Everything that determines a synthetic multi-year dataset.
struct SynthConfig {
  std::vector<int> years;
  ClimateModel climate;
  PhenologyParams phenology;
  CloudModel clouds;
  int tile_height = 64, tile_width = 64;
  int field_height = 8, field_width = 8;
  std::vector<int> field_counts;  // fields per class within one tile
  int tiles_per_year = 1;
  int obs_every_n_days = 3;
  double t_base = 0.0;
  std::uint64_t seed = 42;
  std::vector<std::string> channel_names;

  void validate() const;
};

SynthConfig default_benchmark_config();
std::string synth_config_to_json(const SynthConfig& config);
SynthConfig synth_config_from_json(const std::string& text);

// Layout for one tile: field counts shuffled into grid positions.
FieldLayout make_layout(const SynthConfig& config, int tile);

// Writes dataset.json, one temps.csv per year and one cube directory per
// (year, tile).
void generate_dataset(const SynthConfig& config,
                      const std::filesystem::path& out_dir);

}  // namespace t3s
