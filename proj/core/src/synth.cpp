#include "t3s/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <json.hpp>

namespace t3s {

namespace {

using nlohmann::json;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double annual_mean(const ClimateModel& climate, int year, int day) {
  double anomaly = 0.0;
  if (auto it = climate.year_anomaly.find(year);
      it != climate.year_anomaly.end()) {
    anomaly = it->second;
  }
  double angle = 2.0 * std::numbers::pi * (day - climate.phase_day) / 365.0;
  return climate.offset + anomaly - climate.amplitude * std::cos(angle);
}

}  // namespace

std::vector<DailyTemperature> gen_temperature_year(const ClimateModel& climate,
                                                   int year) {
  if (climate.amplitude < 0.0 || climate.daily_noise_sd < 0.0) {
    throw ValidationError("climate: amplitude and noise sd must be >= 0");
  }
  // Anomaly is applied outside the noise stream so it shifts every day by
  // exactly the configured amount.
  Rng rng(derive_seed(climate.seed, stream_id("temperature"), year));
  std::vector<DailyTemperature> out;
  out.reserve(365);
  for (int day = 1; day <= 365; ++day) {
    double mid = annual_mean(climate, year, day) +
                 climate.daily_noise_sd * rng.normal();
    double half_range = 2.5 * climate.daily_noise_sd * std::abs(rng.normal());
    DailyTemperature t;
    t.day_of_year = day;
    t.t_min = mid - half_range;
    t.t_max = mid + half_range;
    out.push_back(t);
  }
  return out;
}

void PhenologyParams::validate(int n_channels) const {
  if (classes.empty()) throw ValidationError("phenology: no classes");
  for (const auto& cls : classes) {
    if (!(cls.g_onset < cls.g_offset)) {
      throw ValidationError("phenology: class '" + cls.name +
                            "' needs g_onset < g_offset");
    }
    if (cls.peak_amplitude.size() != static_cast<std::size_t>(n_channels) ||
        cls.base_reflectance.size() != static_cast<std::size_t>(n_channels)) {
      throw ValidationError("phenology: class '" + cls.name +
                            "' channel count mismatch");
    }
    for (double a : cls.peak_amplitude) {
      if (!std::isfinite(a)) throw ValidationError("phenology: non-finite amplitude");
    }
    if (cls.pixel_noise_sd < 0.0) {
      throw ValidationError("phenology: pixel noise sd must be >= 0");
    }
  }
}

std::vector<double> signature(int class_id, double cumulative_gdd,
                              const PhenologyParams& phenology) {
  if (class_id < 0 ||
      class_id >= static_cast<int>(phenology.classes.size())) {
    throw ValidationError("signature: unknown class " + std::to_string(class_id));
  }
  const auto& cls = phenology.classes[static_cast<std::size_t>(class_id)];
  double growth = sigmoid(cls.growth_rate * (cumulative_gdd - cls.g_onset));
  double senescence =
      sigmoid(cls.senescence_rate * (cumulative_gdd - cls.g_offset));
  double activity = growth - senescence;
  std::vector<double> out(cls.base_reflectance.size());
  for (std::size_t ch = 0; ch < out.size(); ++ch) {
    out[ch] = std::clamp(
        cls.base_reflectance[ch] + cls.peak_amplitude[ch] * activity, 0.0, 1.0);
  }
  return out;
}

void FieldLayout::validate(int n_classes) const {
  if (height < 1 || width < 1 || field_height < 1 || field_width < 1) {
    throw ValidationError("layout: dimensions must be >= 1");
  }
  if (height % field_height != 0 || width % field_width != 0) {
    throw ValidationError("layout: fields do not tile the " +
                          std::to_string(height) + "x" + std::to_string(width) +
                          " image");
  }
  auto expected = static_cast<std::size_t>(height / field_height) *
                  static_cast<std::size_t>(width / field_width);
  if (field_classes.size() != expected) {
    throw ValidationError("layout: expected " + std::to_string(expected) +
                          " field classes, got " +
                          std::to_string(field_classes.size()));
  }
  for (int cls : field_classes) {
    if (cls < 0 || cls >= n_classes) {
      throw ValidationError("layout: field class " + std::to_string(cls) +
                            " out of range");
    }
  }
}

DataCube gen_cube(int year, const ClimateModel& climate,
                  const PhenologyParams& phenology, const CloudModel& clouds,
                  const FieldLayout& layout, int obs_every_n_days,
                  std::uint64_t seed) {
  auto n_classes = static_cast<int>(phenology.classes.size());
  layout.validate(n_classes);
  if (obs_every_n_days < 1) {
    throw ValidationError("gen_cube: obs_every_n_days must be >= 1");
  }
  if (!(clouds.cloud_probability >= 0.0 && clouds.cloud_probability <= 1.0)) {
    throw ValidationError("gen_cube: cloud probability must be in [0, 1]");
  }
  auto n_channels =
      static_cast<int>(phenology.classes.front().base_reflectance.size());
  phenology.validate(n_channels);

  auto temps = gen_temperature_year(climate, year);
  auto thermal = cumulative_gdd(temps);

  DataCube cube;
  cube.year = year;
  cube.h = layout.height;
  cube.w = layout.width;
  cube.c = n_channels;
  for (int day = obs_every_n_days; day <= 365; day += obs_every_n_days) {
    cube.obs_days.push_back(day);
  }
  cube.t = static_cast<int>(cube.obs_days.size());
  auto obs_gdd = gdd_at_observations(thermal, cube.obs_days);

  cube.channel_names.resize(static_cast<std::size_t>(cube.c));
  for (int ch = 0; ch < cube.c; ++ch) {
    cube.channel_names[ch] = "band_" + std::to_string(ch);
  }
  for (const auto& cls : phenology.classes) cube.class_names.push_back(cls.name);

  // labels
  const int fields_x = layout.width / layout.field_width;
  cube.labels.resize(static_cast<std::size_t>(cube.h) * cube.w);
  for (int y = 0; y < cube.h; ++y) {
    for (int x = 0; x < cube.w; ++x) {
      int field = (y / layout.field_height) * fields_x + (x / layout.field_width);
      cube.labels[cube.pixel_index(y, x)] =
          static_cast<std::uint8_t>(layout.field_classes[field]);
    }
  }

  // cloud mask: per-timestep blobby coverage
  auto xy = static_cast<std::size_t>(cube.h) * cube.w;
  cube.cloud_mask.assign(static_cast<std::size_t>(cube.t) * xy, 0);
  for (int ti = 0; ti < cube.t; ++ti) {
    Rng rng(derive_seed(clouds.seed, stream_id("clouds"), year,
                        static_cast<std::uint64_t>(ti)));
    if (rng.uniform() >= clouds.cloud_probability) continue;
    int blobs = rng.uniform_int(clouds.blob_count_min, clouds.blob_count_max);
    for (int bi = 0; bi < blobs; ++bi) {
      double cy = rng.uniform(0.0, cube.h);
      double cx = rng.uniform(0.0, cube.w);
      double radius =
          rng.uniform(static_cast<double>(clouds.blob_radius_min),
                      static_cast<double>(clouds.blob_radius_max));
      double r2 = radius * radius;
      int y0 = std::max(0, static_cast<int>(std::floor(cy - radius)));
      int y1 = std::min(cube.h - 1, static_cast<int>(std::ceil(cy + radius)));
      int x0 = std::max(0, static_cast<int>(std::floor(cx - radius)));
      int x1 = std::min(cube.w - 1, static_cast<int>(std::ceil(cx + radius)));
      for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
          double dy = y + 0.5 - cy, dx = x + 0.5 - cx;
          if (dy * dy + dx * dx <= r2) {
            cube.cloud_mask[ti * xy + cube.pixel_index(y, x)] = 1;
          }
        }
      }
    }
  }

  // reflectance: class signature at the observation's cumulative GDD plus
  // pixel noise; cloudy pixels are overwritten with bright cloud values.
  cube.reflectance.resize(static_cast<std::size_t>(cube.t) * cube.c * xy);
  std::vector<std::vector<double>> class_sig(
      static_cast<std::size_t>(n_classes));
  for (int ti = 0; ti < cube.t; ++ti) {
    for (int cls = 0; cls < n_classes; ++cls) {
      class_sig[cls] = signature(cls, obs_gdd[ti], phenology);
    }
    Rng rng(derive_seed(seed, stream_id("reflectance"), year,
                        static_cast<std::uint64_t>(ti)));
    for (int y = 0; y < cube.h; ++y) {
      for (int x = 0; x < cube.w; ++x) {
        auto pix = cube.pixel_index(y, x);
        int cls = cube.labels[pix];
        bool cloudy = cube.cloud_mask[ti * xy + pix] != 0;
        double noise_sd =
            phenology.classes[static_cast<std::size_t>(cls)].pixel_noise_sd;
        for (int ch = 0; ch < cube.c; ++ch) {
          double value;
          if (cloudy) {
            value = 0.85 + 0.05 * rng.normal();
          } else {
            value = class_sig[cls][ch] + noise_sd * rng.normal();
          }
          auto dn = std::llround(std::clamp(value, 0.0, 1.0) * kReflectanceScale);
          cube.reflectance[cube.refl_index(ti, ch, y, x)] =
              static_cast<std::uint16_t>(dn);
        }
      }
    }
  }

  cube.validate();
  return cube;
}

void SynthConfig::validate() const {
  if (years.empty()) throw ValidationError("synth: no years configured");
  for (std::size_t i = 1; i < years.size(); ++i) {
    if (years[i] == years[i - 1]) throw ValidationError("synth: duplicate year");
  }
  if (field_counts.size() != phenology.classes.size()) {
    throw ValidationError("synth: field_counts must match class count");
  }
  long long total = 0;
  for (int n : field_counts) {
    if (n < 0) throw ValidationError("synth: negative field count");
    total += n;
  }
  auto fields = static_cast<long long>(tile_height / field_height) *
                (tile_width / field_width);
  if (total != fields) {
    throw ValidationError("synth: field counts sum to " + std::to_string(total) +
                          " but the tile holds " + std::to_string(fields) +
                          " fields");
  }
  if (tiles_per_year < 1) throw ValidationError("synth: tiles_per_year must be >= 1");
  if (!channel_names.empty() &&
      channel_names.size() !=
          phenology.classes.front().base_reflectance.size()) {
    throw ValidationError("synth: channel_names length mismatch");
  }
}

FieldLayout make_layout(const SynthConfig& config, int tile) {
  FieldLayout layout;
  layout.height = config.tile_height;
  layout.width = config.tile_width;
  layout.field_height = config.field_height;
  layout.field_width = config.field_width;
  for (std::size_t cls = 0; cls < config.field_counts.size(); ++cls) {
    for (int i = 0; i < config.field_counts[cls]; ++i) {
      layout.field_classes.push_back(static_cast<int>(cls));
    }
  }
  Rng rng(derive_seed(config.seed, stream_id("layout"), tile));
  for (std::size_t i = layout.field_classes.size(); i > 1; --i) {
    auto j = static_cast<std::size_t>(rng.next_u64() % i);
    std::swap(layout.field_classes[i - 1], layout.field_classes[j]);
  }
  return layout;
}

SynthConfig default_benchmark_config() {
  SynthConfig config;
  config.years = {2021, 2022, 2023};
  config.climate.amplitude = 8.0;
  config.climate.offset = 10.0;
  config.climate.phase_day = 15.0;
  config.climate.daily_noise_sd = 1.0;
  config.climate.year_anomaly = {{2021, -1.5}, {2022, 0.0}, {2023, 1.5}};
  config.climate.seed = 17;
  config.clouds.cloud_probability = 0.5;
  config.clouds.blob_count_min = 2;
  config.clouds.blob_count_max = 6;
  config.clouds.blob_radius_min = 8;
  config.clouds.blob_radius_max = 28;
  config.clouds.seed = 23;
  config.tile_height = 64;
  config.tile_width = 64;
  config.field_height = 8;
  config.field_width = 8;
  // long-tail field counts over the 8x8 grid
  config.field_counts = {25, 16, 10, 7, 4, 2};
  config.tiles_per_year = 1;
  config.obs_every_n_days = 3;
  config.seed = 42;

  const int n_channels = 9;
  config.channel_names = {"band_0", "band_1", "band_2", "band_3", "band_4",
                          "band_5", "band_6", "band_7", "band_8"};
  // One shared soil background and one shared vegetation response shape:
  // classes are separable mainly by when they grow on the thermal clock.
  const std::vector<double> soil = {0.08, 0.10, 0.12, 0.13, 0.14,
                                    0.15, 0.16, 0.16, 0.20};
  const std::vector<double> veg = {0.02, 0.05, 0.03, 0.10, 0.25,
                                   0.32, 0.38, 0.36, 0.05};
  auto make_class = [&](std::string name, double onset, double offset,
                        double growth, double senescence, double veg_scale) {
    ClassPhenology cls;
    cls.name = std::move(name);
    cls.g_onset = onset;
    cls.g_offset = offset;
    cls.growth_rate = growth;
    cls.senescence_rate = senescence;
    cls.base_reflectance = soil;
    cls.peak_amplitude.resize(veg.size());
    for (std::size_t ch = 0; ch < veg.size(); ++ch) {
      cls.peak_amplitude[ch] = veg[ch] * veg_scale;
    }
    cls.pixel_noise_sd = 0.015;
    return cls;
  };
  config.phenology.classes = {
      make_class("meadow", 120.0, 3400.0, 0.012, 0.004, 1.00),
      make_class("winter_cereal", 250.0, 1450.0, 0.012, 0.010, 1.05),
      make_class("spring_barley", 550.0, 1750.0, 0.012, 0.010, 0.95),
      make_class("sugar_beet", 800.0, 3000.0, 0.010, 0.008, 1.10),
      make_class("maize", 1000.0, 2600.0, 0.010, 0.009, 1.02),
      make_class("vegetables", 1400.0, 2200.0, 0.015, 0.012, 0.90),
  };
  config.validate();
  return config;
}

namespace {

json climate_to_json(const ClimateModel& c) {
  json anomalies = json::object();
  for (const auto& [year, shift] : c.year_anomaly) {
    anomalies[std::to_string(year)] = shift;
  }
  return json{{"amplitude", c.amplitude},
              {"offset", c.offset},
              {"phase_day", c.phase_day},
              {"daily_noise_sd", c.daily_noise_sd},
              {"year_anomaly", anomalies},
              {"seed", c.seed}};
}

ClimateModel climate_from_json(const json& j) {
  ClimateModel c;
  c.amplitude = j.at("amplitude").get<double>();
  c.offset = j.at("offset").get<double>();
  c.phase_day = j.at("phase_day").get<double>();
  c.daily_noise_sd = j.at("daily_noise_sd").get<double>();
  for (const auto& [key, value] : j.at("year_anomaly").items()) {
    c.year_anomaly[std::stoi(key)] = value.get<double>();
  }
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

json class_to_json(const ClassPhenology& cls) {
  return json{{"name", cls.name},
              {"g_onset", cls.g_onset},
              {"g_offset", cls.g_offset},
              {"growth_rate", cls.growth_rate},
              {"senescence_rate", cls.senescence_rate},
              {"peak_amplitude", cls.peak_amplitude},
              {"base_reflectance", cls.base_reflectance},
              {"pixel_noise_sd", cls.pixel_noise_sd}};
}

ClassPhenology class_from_json(const json& j) {
  ClassPhenology cls;
  cls.name = j.at("name").get<std::string>();
  cls.g_onset = j.at("g_onset").get<double>();
  cls.g_offset = j.at("g_offset").get<double>();
  cls.growth_rate = j.at("growth_rate").get<double>();
  cls.senescence_rate = j.at("senescence_rate").get<double>();
  cls.peak_amplitude = j.at("peak_amplitude").get<std::vector<double>>();
  cls.base_reflectance = j.at("base_reflectance").get<std::vector<double>>();
  cls.pixel_noise_sd = j.at("pixel_noise_sd").get<double>();
  return cls;
}

json clouds_to_json(const CloudModel& c) {
  return json{{"cloud_probability", c.cloud_probability},
              {"blob_count_min", c.blob_count_min},
              {"blob_count_max", c.blob_count_max},
              {"blob_radius_min", c.blob_radius_min},
              {"blob_radius_max", c.blob_radius_max},
              {"seed", c.seed}};
}

CloudModel clouds_from_json(const json& j) {
  CloudModel c;
  c.cloud_probability = j.at("cloud_probability").get<double>();
  c.blob_count_min = j.at("blob_count_min").get<int>();
  c.blob_count_max = j.at("blob_count_max").get<int>();
  c.blob_radius_min = j.at("blob_radius_min").get<int>();
  c.blob_radius_max = j.at("blob_radius_max").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

}  // namespace

std::string synth_config_to_json(const SynthConfig& config) {
  json j;
  j["years"] = config.years;
  j["climate"] = climate_to_json(config.climate);
  json classes = json::array();
  for (const auto& cls : config.phenology.classes) {
    classes.push_back(class_to_json(cls));
  }
  j["classes"] = classes;
  j["clouds"] = clouds_to_json(config.clouds);
  j["tile_height"] = config.tile_height;
  j["tile_width"] = config.tile_width;
  j["field_height"] = config.field_height;
  j["field_width"] = config.field_width;
  j["field_counts"] = config.field_counts;
  j["tiles_per_year"] = config.tiles_per_year;
  j["obs_every_n_days"] = config.obs_every_n_days;
  j["t_base"] = config.t_base;
  j["seed"] = config.seed;
  j["channel_names"] = config.channel_names;
  return j.dump(2) + "\n";
}

SynthConfig synth_config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw IoError("synth config: parse error: " + std::string(e.what()));
  }
  SynthConfig config = default_benchmark_config();
  try {
    if (j.contains("years")) config.years = j.at("years").get<std::vector<int>>();
    if (j.contains("climate")) config.climate = climate_from_json(j.at("climate"));
    if (j.contains("classes")) {
      config.phenology.classes.clear();
      for (const auto& cj : j.at("classes")) {
        config.phenology.classes.push_back(class_from_json(cj));
      }
    }
    if (j.contains("clouds")) config.clouds = clouds_from_json(j.at("clouds"));
    if (j.contains("tile_height")) config.tile_height = j.at("tile_height").get<int>();
    if (j.contains("tile_width")) config.tile_width = j.at("tile_width").get<int>();
    if (j.contains("field_height")) config.field_height = j.at("field_height").get<int>();
    if (j.contains("field_width")) config.field_width = j.at("field_width").get<int>();
    if (j.contains("field_counts")) {
      config.field_counts = j.at("field_counts").get<std::vector<int>>();
    }
    if (j.contains("tiles_per_year")) {
      config.tiles_per_year = j.at("tiles_per_year").get<int>();
    }
    if (j.contains("obs_every_n_days")) {
      config.obs_every_n_days = j.at("obs_every_n_days").get<int>();
    }
    if (j.contains("t_base")) config.t_base = j.at("t_base").get<double>();
    if (j.contains("seed")) config.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("channel_names")) {
      config.channel_names = j.at("channel_names").get<std::vector<std::string>>();
    }
  } catch (const json::exception& e) {
    throw IoError("synth config: field error: " + std::string(e.what()));
  }
  config.validate();
  return config;
}

void generate_dataset(const SynthConfig& config,
                      const std::filesystem::path& out_dir) {
  config.validate();
  std::filesystem::create_directories(out_dir);
  write_text_file((out_dir / "dataset.json").string(),
                  synth_config_to_json(config));

  char name[32];
  for (int year : config.years) {
    auto year_dir = out_dir / ("year_" + std::to_string(year));
    std::filesystem::create_directories(year_dir);
    auto temps = gen_temperature_year(config.climate, year);
    write_temperature_csv(temps, year_dir / "temps.csv");
    for (int tile = 0; tile < config.tiles_per_year; ++tile) {
      auto layout = make_layout(config, tile);
      auto cube = gen_cube(year, config.climate, config.phenology,
                           config.clouds, layout, config.obs_every_n_days,
                           derive_seed(config.seed, stream_id("tile"), tile));
      if (!config.channel_names.empty()) {
        cube.channel_names = config.channel_names;
      }
      std::snprintf(name, sizeof(name), "tile_%03d", tile);
      write_cube(cube, year_dir / name);
    }
  }
}

}  // namespace t3s
