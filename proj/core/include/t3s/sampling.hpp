#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "t3s/cube.hpp"
#include "t3s/thermal.hpp"

namespace t3s {

enum class SamplerKind { Uniform, Deformable, T3s };
SamplerKind sampler_from_string(std::string_view s);
std::string_view to_string(SamplerKind kind);

// Ordered timestep selection with a fixed-length validity mask. indices are
// strictly increasing; slots past indices.size() are padding (valid = 0).
struct SampleSelection {
  std::vector<int> indices;
  std::vector<std::uint8_t> valid;  // length target_length
  int target_length = 0;
};

struct SamplerInput {
  std::vector<int> obs_days;            // T, strictly increasing
  std::vector<double> obs_gdd;          // T, non-decreasing
  std::vector<long long> clear_counts;  // T, non-cloudy pixels per timestep
};

long long clear_pixel_count(std::span<const std::uint8_t> mask);
SamplerInput make_sampler_input(const DataCube& cube,
                                const ThermalSeries& thermal);

// Splits [gdd_lo, gdd_hi] into target_length equal-width intervals and picks
// the observation with the highest clear count inside each (ties: earliest
// index). The last interval is closed at the top so the final observation is
// selectable. Empty intervals yield no index; the tail of the valid mask is
// padding. The two-argument form uses the input's own GDD range.
SampleSelection t3s_select(const SamplerInput& input, int target_length);
SampleSelection t3s_select(const SamplerInput& input, int target_length,
                           double gdd_lo, double gdd_hi);

// Calendar-domain analogue of t3s_select: equal day intervals, least-cloudy
// observation per interval.
SampleSelection deformable_select(std::span<const int> obs_days,
                                  std::span<const long long> clear_counts,
                                  int target_length);
SampleSelection deformable_select(std::span<const int> obs_days,
                                  std::span<const long long> clear_counts,
                                  int target_length, double day_lo,
                                  double day_hi);

// Evenly spaced indices: i_k = round(k*(T-1)/(L-1)) for L > 1, deduplicated
// preserving order. Ignores clouds and GDD.
SampleSelection uniform_calendar_select(std::span<const int> obs_days,
                                        int target_length);

// How samplers behave under an early-season truncation.
struct SelectionOptions {
  std::optional<int> truncation_day;  // keep observations with day <= cutoff
  bool rescale_grid = true;  // false: keep the full-season interval grid
};

SampleSelection run_sampler(SamplerKind kind, const SamplerInput& input,
                            int target_length,
                            const SelectionOptions& opts = {});

// Selected timesteps gathered out of a cube. Pad slots are zero-filled and
// flagged invalid so the model's attention ignores them.
struct GatheredCube {
  int l = 0, c = 0, h = 0, w = 0;
  std::vector<std::uint16_t> reflectance;  // L*C*H*W
  std::vector<std::uint8_t> cloud;         // L*H*W
  std::vector<double> positions;           // L, raw PE values
  std::vector<std::uint8_t> valid;         // L
};

// positions holds one raw positional value per cube timestep (slot index,
// day-of-year or cumulative GDD, chosen by the caller); the selected entries
// are carried through.
GatheredCube apply_selection(const DataCube& cube, const SampleSelection& sel,
                             std::span<const double> positions);

}  // namespace t3s
