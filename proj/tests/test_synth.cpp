#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "t3s/synth.hpp"

using namespace t3s;

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

TEST_CASE("degenerate constant climate") {
  ClimateModel climate;
  climate.amplitude = 0.0;
  climate.offset = 10.0;
  climate.daily_noise_sd = 0.0;
  auto temps = gen_temperature_year(climate, 2021);
  REQUIRE(temps.size() == 365);
  for (const auto& t : temps) {
    CHECK(t.t_min == doctest::Approx(10.0));
    CHECK(t.t_max == doctest::Approx(10.0));
  }
  for (std::size_t i = 0; i < temps.size(); ++i) {
    CHECK(temps[i].day_of_year == static_cast<int>(i) + 1);
  }
}

TEST_CASE("temperature generation is deterministic per (seed, year)") {
  ClimateModel climate;
  climate.daily_noise_sd = 1.5;
  climate.seed = 99;
  auto a = gen_temperature_year(climate, 2022);
  auto b = gen_temperature_year(climate, 2022);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].t_min == b[i].t_min);
    CHECK(a[i].t_max == b[i].t_max);
  }
  auto c = gen_temperature_year(climate, 2023);
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    differs = differs || a[i].t_min != c[i].t_min;
  }
  CHECK(differs);
  for (const auto& t : a) CHECK(t.t_min <= t.t_max);
}

TEST_CASE("anomaly shifts cumulative gdd by exactly its daily sum") {
  // offset high enough that no day clamps at zero in either run
  ClimateModel base;
  base.amplitude = 5.0;
  base.offset = 12.0;
  base.daily_noise_sd = 0.3;
  base.seed = 4;
  base.year_anomaly = {{2021, 0.0}};
  ClimateModel shifted = base;
  shifted.year_anomaly = {{2021, 2.0}};

  auto series_a = cumulative_gdd(gen_temperature_year(base, 2021));
  auto series_b = cumulative_gdd(gen_temperature_year(shifted, 2021));
  for (double g : series_a.gdd_daily) CHECK(g > 0.0);  // no clamping
  double diff = series_b.gdd_cumulative.back() - series_a.gdd_cumulative.back();
  CHECK(diff == doctest::Approx(2.0 * 365.0).epsilon(1e-9));
}

TEST_CASE("signature hand cases") {
  PhenologyParams phen;
  ClassPhenology cls;
  cls.name = "x";
  cls.g_onset = 500.0;
  cls.g_offset = 1500.0;
  cls.growth_rate = 0.01;
  cls.senescence_rate = 0.01;
  cls.base_reflectance = {0.1, 0.2};
  cls.peak_amplitude = {0.3, 0.4};
  cls.pixel_noise_sd = 0.0;
  phen.classes = {cls, cls};

  SUBCASE("far below onset returns base") {
    auto sig = signature(0, -5000.0, phen);
    CHECK(std::abs(sig[0] - 0.1) < 1e-6);
    CHECK(std::abs(sig[1] - 0.2) < 1e-6);
  }
  SUBCASE("midpoint value computed directly") {
    double g = 1000.0, delta = 500.0, k = 0.01;
    double expect = sigmoid(k * delta) - sigmoid(-k * delta);
    auto sig = signature(0, g, phen);
    CHECK(sig[0] == doctest::Approx(0.1 + 0.3 * expect));
    CHECK(sig[1] == doctest::Approx(0.2 + 0.4 * expect));
  }
  SUBCASE("identical params give identical signatures") {
    CHECK(signature(0, 777.0, phen) == signature(1, 777.0, phen));
  }
  SUBCASE("unknown class is rejected") {
    CHECK_THROWS_AS(signature(5, 100.0, phen), ValidationError);
  }
}

TEST_CASE("layout validation") {
  auto config = default_benchmark_config();
  auto layout = make_layout(config, 0);
  layout.validate(static_cast<int>(config.phenology.classes.size()));

  FieldLayout bad = layout;
  bad.field_width = 7;  // 64 % 7 != 0
  CHECK_THROWS_AS(bad.validate(6), ValidationError);

  FieldLayout short_classes = layout;
  short_classes.field_classes.pop_back();
  CHECK_THROWS_AS(short_classes.validate(6), ValidationError);
}

TEST_CASE("gen_cube determinism and structure") {
  auto config = default_benchmark_config();
  config.tile_height = 16;
  config.tile_width = 16;
  config.field_height = 4;
  config.field_width = 4;
  config.field_counts = {5, 4, 3, 2, 1, 1};
  auto layout = make_layout(config, 0);

  auto a = gen_cube(2021, config.climate, config.phenology, config.clouds,
                    layout, 3, 7);
  auto b = gen_cube(2021, config.climate, config.phenology, config.clouds,
                    layout, 3, 7);
  CHECK(a.reflectance == b.reflectance);
  CHECK(a.cloud_mask == b.cloud_mask);
  CHECK(a.labels == b.labels);
  CHECK(a.obs_days == b.obs_days);
  CHECK(a.t == 121);  // days 3,6,...,363

  // labels form 4x4 blocks
  for (int y = 0; y < a.h; ++y) {
    for (int x = 0; x < a.w; ++x) {
      CHECK(a.labels[a.pixel_index(y, x)] ==
            a.labels[a.pixel_index(4 * (y / 4), 4 * (x / 4))]);
    }
  }
}

TEST_CASE("noise-free cloud-free single class is spatially constant") {
  auto config = default_benchmark_config();
  config.tile_height = 8;
  config.tile_width = 8;
  config.field_height = 8;
  config.field_width = 8;
  config.field_counts = {1, 0, 0, 0, 0, 0};
  config.clouds.cloud_probability = 0.0;
  for (auto& cls : config.phenology.classes) cls.pixel_noise_sd = 0.0;
  auto layout = make_layout(config, 0);
  auto cube = gen_cube(2022, config.climate, config.phenology, config.clouds,
                       layout, 10, 1);
  for (auto m : cube.cloud_mask) CHECK(m == 0);
  auto xy = static_cast<std::size_t>(cube.h) * cube.w;
  for (int t = 0; t < cube.t; ++t) {
    for (int c = 0; c < cube.c; ++c) {
      auto first = cube.reflectance[cube.refl_index(t, c, 0, 0)];
      for (std::size_t p = 0; p < xy; ++p) {
        CHECK(cube.reflectance[(static_cast<std::size_t>(t) * cube.c + c) * xy + p] ==
              first);
      }
    }
  }
}

TEST_CASE("warm year shifts the half-peak day but not its gdd") {
  auto config = default_benchmark_config();
  config.tile_height = 8;
  config.tile_width = 8;
  config.field_height = 8;
  config.field_width = 8;
  config.field_counts = {0, 0, 0, 0, 1, 0};  // maize only
  config.clouds.cloud_probability = 0.0;
  for (auto& cls : config.phenology.classes) cls.pixel_noise_sd = 0.0;
  config.climate.daily_noise_sd = 0.0;
  config.climate.year_anomaly = {{2021, 0.0}, {2023, 2.5}};
  auto layout = make_layout(config, 0);

  const int channel = 6;  // strong vegetation response
  auto scan = [&](int year) {
    auto cube = gen_cube(year, config.climate, config.phenology, config.clouds,
                         layout, 3, 9);
    auto thermal = cumulative_gdd(gen_temperature_year(config.climate, year));
    auto gdd = gdd_at_observations(thermal, cube.obs_days);
    std::uint16_t peak = 0;
    for (int t = 0; t < cube.t; ++t) {
      peak = std::max(peak, cube.reflectance[cube.refl_index(t, channel, 0, 0)]);
    }
    auto base = cube.reflectance[cube.refl_index(0, channel, 0, 0)];
    double half = base + (static_cast<double>(peak) - base) / 2.0;
    for (int t = 0; t < cube.t; ++t) {
      if (cube.reflectance[cube.refl_index(t, channel, 0, 0)] >= half) {
        return std::pair<int, double>{cube.obs_days[t], gdd[t]};
      }
    }
    return std::pair<int, double>{-1, -1.0};
  };

  auto [day_normal, gdd_normal] = scan(2021);
  auto [day_warm, gdd_warm] = scan(2023);
  REQUIRE(day_normal > 0);
  REQUIRE(day_warm > 0);
  CHECK(day_warm < day_normal);  // warm year reaches half-peak earlier
  // thermal position of the half-peak is stable within a few observation steps
  CHECK(std::abs(gdd_warm - gdd_normal) / gdd_normal < 0.05);
}

TEST_CASE("synth config json round trip") {
  auto config = default_benchmark_config();
  auto text = synth_config_to_json(config);
  auto back = synth_config_from_json(text);
  CHECK(back.years == config.years);
  CHECK(back.seed == config.seed);
  CHECK(back.field_counts == config.field_counts);
  CHECK(back.phenology.classes.size() == config.phenology.classes.size());
  for (std::size_t i = 0; i < back.phenology.classes.size(); ++i) {
    CHECK(back.phenology.classes[i].name == config.phenology.classes[i].name);
    CHECK(back.phenology.classes[i].g_onset ==
          config.phenology.classes[i].g_onset);
  }
  CHECK(back.climate.year_anomaly == config.climate.year_anomaly);
}

TEST_CASE("generate_dataset writes a loadable tree") {
  auto config = default_benchmark_config();
  config.tile_height = 16;
  config.tile_width = 16;
  config.field_height = 4;
  config.field_width = 4;
  config.field_counts = {5, 4, 3, 2, 1, 1};
  config.years = {2021, 2022};
  config.climate.year_anomaly = {{2021, -1.0}, {2022, 1.0}};

  auto dir = std::filesystem::temp_directory_path() / "t3s_synth_ds";
  std::filesystem::remove_all(dir);
  generate_dataset(config, dir);
  CHECK(std::filesystem::exists(dir / "dataset.json"));
  CHECK(std::filesystem::exists(dir / "year_2021" / "temps.csv"));
  CHECK(std::filesystem::exists(dir / "year_2021" / "tile_000" / "manifest.json"));
  CHECK(std::filesystem::exists(dir / "year_2022" / "tile_000" / "reflectance.u16"));

  auto cube = read_cube(dir / "year_2021" / "tile_000");
  CHECK(cube.h == 16);
  CHECK(cube.class_names.size() == 6);

  // same config generates bit-identical files
  auto dir2 = std::filesystem::temp_directory_path() / "t3s_synth_ds2";
  std::filesystem::remove_all(dir2);
  generate_dataset(config, dir2);
  auto bytes_a = read_text_file((dir / "year_2021" / "tile_000" / "reflectance.u16").string());
  auto bytes_b = read_text_file((dir2 / "year_2021" / "tile_000" / "reflectance.u16").string());
  CHECK(bytes_a == bytes_b);
  auto manifest_a = read_text_file((dir / "dataset.json").string());
  auto manifest_b = read_text_file((dir2 / "dataset.json").string());
  CHECK(manifest_a == manifest_b);

  std::filesystem::remove_all(dir);
  std::filesystem::remove_all(dir2);
}
