#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "oracles.hpp"
#include "t3s/sampling.hpp"

using namespace t3s;

namespace {

SamplerInput random_input(Rng& rng, int max_t = 64) {
  SamplerInput input;
  int t = rng.uniform_int(1, max_t);
  int day = rng.uniform_int(1, 10);
  double gdd = rng.uniform(0.0, 5.0);
  for (int i = 0; i < t; ++i) {
    input.obs_days.push_back(day);
    input.obs_gdd.push_back(gdd);
    input.clear_counts.push_back(rng.uniform_int(0, 4096));
    day += rng.uniform_int(1, 6);
    gdd += rng.uniform(0.0, 40.0);  // plateaus allowed
  }
  return input;
}

int interval_of(double value, double lo, double hi, int n) {
  if (!(hi > lo)) return 0;
  double delta = (hi - lo) / n;
  for (int j = 0; j < n; ++j) {
    bool last = j == n - 1;
    double w_lo = lo + j * delta;
    double w_hi = lo + (j + 1) * delta;
    if (last ? (value >= w_lo && value <= hi) : (value >= w_lo && value < w_hi))
      return j;
  }
  return -1;
}

}  // namespace

TEST_CASE("clear pixel count") {
  std::vector<std::uint8_t> all_clear(16, 0);
  CHECK(clear_pixel_count(all_clear) == 16);
  std::vector<std::uint8_t> all_cloudy(16, 1);
  CHECK(clear_pixel_count(all_cloudy) == 0);
  std::vector<std::uint8_t> checker = {0, 1, 1, 0};
  CHECK(clear_pixel_count(checker) == 2);
}

TEST_CASE("t3s hand case: window membership and argmax") {
  SamplerInput input;
  input.obs_days = {1, 2, 3, 4, 5, 6};
  input.obs_gdd = {0, 10, 20, 30, 40, 50};
  input.clear_counts = {5, 9, 3, 8, 7, 2};
  auto sel = t3s_select(input, 3);
  CHECK(sel.indices == std::vector<int>{1, 3, 4});
  CHECK(sel.valid == std::vector<std::uint8_t>{1, 1, 1});
}

TEST_CASE("t3s identity when one observation per interval") {
  SamplerInput input;
  for (int i = 0; i < 8; ++i) {
    input.obs_days.push_back(i + 1);
    input.obs_gdd.push_back(10.0 * i + 5.0);
    input.clear_counts.push_back(100);
  }
  auto sel = t3s_select(input, 8);
  std::vector<int> expect(8);
  std::iota(expect.begin(), expect.end(), 0);
  CHECK(sel.indices == expect);
}

TEST_CASE("t3s degenerate range returns single best index") {
  SamplerInput input;
  input.obs_days = {1, 2, 3};
  input.obs_gdd = {7.5, 7.5, 7.5};
  input.clear_counts = {4, 9, 9};
  auto sel = t3s_select(input, 5);
  CHECK(sel.indices == std::vector<int>{1});  // earliest of the tied maxima
  CHECK(sel.valid == std::vector<std::uint8_t>{1, 0, 0, 0, 0});
}

TEST_CASE("t3s input validation") {
  SamplerInput input;
  input.obs_days = {1};
  input.obs_gdd = {1.0};
  input.clear_counts = {1};
  CHECK_THROWS_AS(t3s_select(input, 0), ValidationError);
  SamplerInput empty;
  CHECK_THROWS_AS(t3s_select(empty, 4), ValidationError);
  SamplerInput decreasing;
  decreasing.obs_days = {1, 2};
  decreasing.obs_gdd = {5.0, 4.0};
  decreasing.clear_counts = {1, 1};
  CHECK_THROWS_AS(t3s_select(decreasing, 2), ValidationError);
}

TEST_CASE("deformable hand case") {
  std::vector<int> days = {1, 2, 100};
  std::vector<long long> clear = {1, 9, 5};
  auto sel = deformable_select(days, clear, 2);
  CHECK(sel.indices == std::vector<int>{1, 2});
}

TEST_CASE("deformable tie rule and single interval") {
  std::vector<int> days = {10, 20, 30, 40};
  std::vector<long long> equal = {5, 5, 5, 5};
  auto sel = deformable_select(days, equal, 2);
  CHECK(sel.indices == std::vector<int>{0, 2});  // earliest per interval

  std::vector<long long> clear = {1, 7, 3, 2};
  auto single = deformable_select(days, clear, 1);
  CHECK(single.indices == std::vector<int>{1});  // global argmax
}

TEST_CASE("uniform calendar selection") {
  std::vector<int> days(48);
  std::iota(days.begin(), days.end(), 1);

  SUBCASE("identity when L equals T") {
    std::vector<int> d24(days.begin(), days.begin() + 24);
    auto sel = uniform_calendar_select(d24, 24);
    std::vector<int> expect(24);
    std::iota(expect.begin(), expect.end(), 0);
    CHECK(sel.indices == expect);
  }
  SUBCASE("L = 1 takes the first index") {
    auto sel = uniform_calendar_select(days, 1);
    CHECK(sel.indices == std::vector<int>{0});
  }
  SUBCASE("T = 48, L = 24 follows the endpoint-inclusive rounding rule") {
    // Frozen by direct evaluation of round(k*47/23): spacing is 2 except
    // around the midpoint where rounding jumps (.., 22, 25, ..) and the last
    // index is 47.
    auto sel = uniform_calendar_select(days, 24);
    std::vector<int> expect = {0,  2,  4,  6,  8,  10, 12, 14, 16, 18, 20, 22,
                               25, 27, 29, 31, 33, 35, 37, 39, 41, 43, 45, 47};
    CHECK(sel.indices == expect);
  }
  SUBCASE("dedup pads the tail when L > T") {
    std::vector<int> three = {5, 9, 13};
    auto sel = uniform_calendar_select(three, 5);
    CHECK(sel.indices == std::vector<int>{0, 1, 2});
    CHECK(sel.valid == std::vector<std::uint8_t>{1, 1, 1, 0, 0});
  }
}

TEST_CASE("oracle equivalence for t3s and deformable") {
  Rng rng(90210);
  for (int trial = 0; trial < 400; ++trial) {
    auto input = random_input(rng);
    int target = rng.uniform_int(1, 16);

    auto [lo_it, hi_it] =
        std::minmax_element(input.obs_gdd.begin(), input.obs_gdd.end());
    auto expect_t3s = oracle::interval_argmax(input.obs_gdd, input.clear_counts,
                                              target, *lo_it, *hi_it);
    auto got_t3s = t3s_select(input, target);
    CHECK(got_t3s.indices == expect_t3s);

    std::vector<double> days(input.obs_days.begin(), input.obs_days.end());
    auto expect_def = oracle::interval_argmax(days, input.clear_counts, target,
                                              days.front(), days.back());
    auto got_def =
        deformable_select(input.obs_days, input.clear_counts, target);
    CHECK(got_def.indices == expect_def);
  }
}

TEST_CASE("interval soundness and output ordering") {
  Rng rng(555);
  for (int trial = 0; trial < 200; ++trial) {
    auto input = random_input(rng);
    int target = rng.uniform_int(1, 16);
    auto sel = t3s_select(input, target);
    auto [lo_it, hi_it] =
        std::minmax_element(input.obs_gdd.begin(), input.obs_gdd.end());

    REQUIRE(!sel.indices.empty());
    int prev_interval = -1;
    for (std::size_t i = 0; i < sel.indices.size(); ++i) {
      int idx = sel.indices[i];
      CHECK(idx >= 0);
      CHECK(idx < static_cast<int>(input.obs_gdd.size()));
      if (i > 0) CHECK(idx > sel.indices[i - 1]);
      int interval = interval_of(input.obs_gdd[idx], *lo_it, *hi_it, target);
      CHECK(interval >= 0);
      CHECK(interval > prev_interval);
      prev_interval = interval;
    }
    CHECK(static_cast<int>(sel.valid.size()) == target);
    std::size_t n_valid = 0;
    for (auto v : sel.valid) n_valid += v;
    CHECK(n_valid == sel.indices.size());
  }
}

TEST_CASE("clear-count dominance: boosting a winner keeps it selected") {
  Rng rng(556);
  for (int trial = 0; trial < 100; ++trial) {
    auto input = random_input(rng, 32);
    int target = rng.uniform_int(1, 8);
    auto sel = t3s_select(input, target);
    for (int idx : sel.indices) {
      SamplerInput boosted = input;
      boosted.clear_counts[idx] += rng.uniform_int(1, 1000);
      auto sel2 = t3s_select(boosted, target);
      CHECK(std::find(sel2.indices.begin(), sel2.indices.end(), idx) !=
            sel2.indices.end());
    }
  }
}

TEST_CASE("t3s equals deformable under a constant thermal clock") {
  // 1 GDD per day and daily observations make both range partitions
  // identical, so the samplers must agree exactly.
  Rng rng(557);
  for (int trial = 0; trial < 100; ++trial) {
    int t = rng.uniform_int(2, 64);
    SamplerInput input;
    for (int i = 0; i < t; ++i) {
      input.obs_days.push_back(i + 1);
      input.obs_gdd.push_back(static_cast<double>(i + 1));
      input.clear_counts.push_back(rng.uniform_int(0, 500));
    }
    int target = rng.uniform_int(1, 16);
    auto a = t3s_select(input, target);
    auto b = deformable_select(input.obs_days, input.clear_counts, target);
    CHECK(a.indices == b.indices);
  }
}

TEST_CASE("apply_selection gathers and pads") {
  DataCube cube;
  cube.t = 4;
  cube.c = 2;
  cube.h = 2;
  cube.w = 2;
  cube.year = 2021;
  cube.obs_days = {5, 15, 25, 35};
  cube.class_names = {"a"};
  cube.channel_names = {"b0", "b1"};
  cube.labels = {0, 0, 0, 0};
  auto n_refl = static_cast<std::size_t>(4) * 2 * 2 * 2;
  for (std::size_t i = 0; i < n_refl; ++i) {
    cube.reflectance.push_back(static_cast<std::uint16_t>(i * 10));
  }
  cube.cloud_mask.assign(static_cast<std::size_t>(4) * 2 * 2, 0);
  cube.cloud_mask[0] = 1;
  std::vector<double> positions = {5.0, 15.0, 25.0, 35.0};

  SUBCASE("identity selection returns the cube") {
    SampleSelection sel;
    sel.indices = {0, 1, 2, 3};
    sel.valid = {1, 1, 1, 1};
    sel.target_length = 4;
    auto g = apply_selection(cube, sel, positions);
    CHECK(g.reflectance == cube.reflectance);
    CHECK(g.cloud == cube.cloud_mask);
    CHECK(g.positions == positions);
    CHECK(g.valid == std::vector<std::uint8_t>{1, 1, 1, 1});
  }
  SUBCASE("two of four slots padded with zeros") {
    SampleSelection sel;
    sel.indices = {1, 3};
    sel.valid = {1, 1, 0, 0};
    sel.target_length = 4;
    auto g = apply_selection(cube, sel, positions);
    CHECK(g.positions[0] == 15.0);
    CHECK(g.positions[1] == 35.0);
    auto cxy = static_cast<std::size_t>(2) * 2 * 2;
    for (std::size_t i = 2 * cxy; i < 4 * cxy; ++i) CHECK(g.reflectance[i] == 0);
    CHECK(g.valid == std::vector<std::uint8_t>{1, 1, 0, 0});
    // gathered slot 0 equals source timestep 1
    for (std::size_t i = 0; i < cxy; ++i) {
      CHECK(g.reflectance[i] == cube.reflectance[cxy + i]);
    }
  }
  SUBCASE("gathered days follow the selection") {
    SampleSelection sel;
    sel.indices = {0, 2};
    sel.valid = {1, 1, 0};
    sel.target_length = 3;
    auto g = apply_selection(cube, sel, positions);
    CHECK(g.positions[0] == 5.0);
    CHECK(g.positions[1] == 25.0);
  }
}

TEST_CASE("run_sampler truncation") {
  SamplerInput input;
  for (int i = 0; i < 20; ++i) {
    input.obs_days.push_back(10 * (i + 1));  // days 10..200
    input.obs_gdd.push_back(15.0 * (i + 1));
    input.clear_counts.push_back(100 - i);
  }

  SelectionOptions beyond;
  beyond.truncation_day = 365;
  auto full = run_sampler(SamplerKind::T3s, input, 6, {});
  auto same = run_sampler(SamplerKind::T3s, input, 6, beyond);
  CHECK(full.indices == same.indices);

  SelectionOptions before_first;
  before_first.truncation_day = 5;
  CHECK_THROWS_AS(run_sampler(SamplerKind::T3s, input, 6, before_first),
                  ValidationError);

  SelectionOptions half;
  half.truncation_day = 100;
  auto truncated = run_sampler(SamplerKind::T3s, input, 6, half);
  for (int idx : truncated.indices) CHECK(input.obs_days[idx] <= 100);

  // keep-grid mode spans the full-season GDD range, so late intervals are
  // empty and the selection is shorter
  SelectionOptions keep = half;
  keep.rescale_grid = false;
  auto kept = run_sampler(SamplerKind::T3s, input, 6, keep);
  CHECK(kept.indices.size() < truncated.indices.size());
  for (int idx : kept.indices) CHECK(input.obs_days[idx] <= 100);
}
