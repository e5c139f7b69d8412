#include "t3s/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace t3s {

SamplerKind sampler_from_string(std::string_view s) {
  if (s == "uniform") return SamplerKind::Uniform;
  if (s == "deformable") return SamplerKind::Deformable;
  if (s == "t3s") return SamplerKind::T3s;
  throw ValidationError("unknown sampler '" + std::string(s) + "'");
}

std::string_view to_string(SamplerKind kind) {
  switch (kind) {
    case SamplerKind::Uniform: return "uniform";
    case SamplerKind::Deformable: return "deformable";
    case SamplerKind::T3s: return "t3s";
  }
  return "?";
}

long long clear_pixel_count(std::span<const std::uint8_t> mask) {
  long long n = 0;
  for (auto m : mask) n += (m == 0);
  return n;
}

SamplerInput make_sampler_input(const DataCube& cube,
                                const ThermalSeries& thermal) {
  SamplerInput input;
  input.obs_days = cube.obs_days;
  input.obs_gdd = gdd_at_observations(thermal, cube.obs_days);
  input.clear_counts.reserve(cube.t);
  auto xy = static_cast<std::size_t>(cube.h) * cube.w;
  for (int ti = 0; ti < cube.t; ++ti) {
    std::span<const std::uint8_t> slice(cube.cloud_mask.data() + ti * xy, xy);
    input.clear_counts.push_back(clear_pixel_count(slice));
  }
  return input;
}

namespace {

void pad_selection(SampleSelection& sel) {
  sel.valid.assign(static_cast<std::size_t>(sel.target_length), 0);
  for (std::size_t i = 0; i < sel.indices.size(); ++i) sel.valid[i] = 1;
}

// Shared interval scan for the value-domain samplers. values must be
// non-decreasing; interval j is [lo + j*delta, lo + (j+1)*delta), the last
// one closed at hi.
SampleSelection interval_select(std::span<const double> values,
                                std::span<const long long> clear_counts,
                                int target_length, double lo, double hi) {
  if (target_length < 1) {
    throw ValidationError("sampler: target length must be >= 1");
  }
  auto t = static_cast<int>(values.size());
  if (t == 0) throw ValidationError("sampler: empty input");
  if (clear_counts.size() != values.size()) {
    throw ValidationError("sampler: clear_counts length mismatch");
  }

  SampleSelection sel;
  sel.target_length = target_length;

  if (!(hi > lo)) {
    // Degenerate range: one window holding everything in [lo, hi].
    int best = -1;
    for (int i = 0; i < t; ++i) {
      if (values[i] < lo || values[i] > hi) continue;
      if (best < 0 || clear_counts[i] > clear_counts[best]) best = i;
    }
    if (best >= 0) sel.indices.push_back(best);
    pad_selection(sel);
    return sel;
  }

  const double delta = (hi - lo) / target_length;
  int i = 0;
  // Skip observations below the grid (possible with a range override).
  while (i < t && values[i] < lo) ++i;
  for (int j = 0; j < target_length; ++j) {
    const bool last = (j == target_length - 1);
    const double upper = lo + (j + 1) * delta;
    int best = -1;
    while (i < t && (last ? values[i] <= hi : values[i] < upper)) {
      if (best < 0 || clear_counts[i] > clear_counts[best]) best = i;
      ++i;
    }
    if (best >= 0) sel.indices.push_back(best);
  }
  std::sort(sel.indices.begin(), sel.indices.end());
  pad_selection(sel);
  return sel;
}

}  // namespace

SampleSelection t3s_select(const SamplerInput& input, int target_length) {
  if (input.obs_gdd.empty()) throw ValidationError("t3s_select: empty input");
  auto [lo, hi] =
      std::minmax_element(input.obs_gdd.begin(), input.obs_gdd.end());
  return t3s_select(input, target_length, *lo, *hi);
}

SampleSelection t3s_select(const SamplerInput& input, int target_length,
                           double gdd_lo, double gdd_hi) {
  for (std::size_t i = 1; i < input.obs_gdd.size(); ++i) {
    if (input.obs_gdd[i] < input.obs_gdd[i - 1]) {
      throw ValidationError("t3s_select: obs_gdd must be non-decreasing");
    }
  }
  return interval_select(input.obs_gdd, input.clear_counts, target_length,
                         gdd_lo, gdd_hi);
}

SampleSelection deformable_select(std::span<const int> obs_days,
                                  std::span<const long long> clear_counts,
                                  int target_length) {
  if (obs_days.empty()) throw ValidationError("deformable_select: empty input");
  return deformable_select(obs_days, clear_counts, target_length,
                           static_cast<double>(obs_days.front()),
                           static_cast<double>(obs_days.back()));
}

SampleSelection deformable_select(std::span<const int> obs_days,
                                  std::span<const long long> clear_counts,
                                  int target_length, double day_lo,
                                  double day_hi) {
  std::vector<double> days(obs_days.begin(), obs_days.end());
  for (std::size_t i = 1; i < days.size(); ++i) {
    if (days[i] <= days[i - 1]) {
      throw ValidationError("deformable_select: obs_days must be increasing");
    }
  }
  return interval_select(days, clear_counts, target_length, day_lo, day_hi);
}

SampleSelection uniform_calendar_select(std::span<const int> obs_days,
                                        int target_length) {
  if (target_length < 1) {
    throw ValidationError("uniform_calendar_select: target length must be >= 1");
  }
  auto t = static_cast<int>(obs_days.size());
  if (t == 0) throw ValidationError("uniform_calendar_select: empty input");

  SampleSelection sel;
  sel.target_length = target_length;
  if (target_length == 1) {
    sel.indices.push_back(0);
  } else {
    int prev = -1;
    for (int k = 0; k < target_length; ++k) {
      auto pos = static_cast<double>(k) * (t - 1) / (target_length - 1);
      int idx = static_cast<int>(std::llround(pos));
      idx = std::clamp(idx, 0, t - 1);
      if (idx != prev) sel.indices.push_back(idx);
      prev = idx;
    }
  }
  pad_selection(sel);
  return sel;
}

SampleSelection run_sampler(SamplerKind kind, const SamplerInput& input,
                            int target_length, const SelectionOptions& opts) {
  const SamplerInput* in = &input;
  SamplerInput truncated;
  if (opts.truncation_day) {
    int cutoff = *opts.truncation_day;
    if (!input.obs_days.empty() && cutoff < input.obs_days.front()) {
      throw ValidationError("truncation day " + std::to_string(cutoff) +
                            " precedes the first observation");
    }
    std::size_t keep = 0;
    while (keep < input.obs_days.size() && input.obs_days[keep] <= cutoff) {
      ++keep;
    }
    truncated.obs_days.assign(input.obs_days.begin(),
                              input.obs_days.begin() + keep);
    truncated.obs_gdd.assign(input.obs_gdd.begin(),
                             input.obs_gdd.begin() + keep);
    truncated.clear_counts.assign(input.clear_counts.begin(),
                                  input.clear_counts.begin() + keep);
    in = &truncated;
  }

  switch (kind) {
    case SamplerKind::Uniform:
      return uniform_calendar_select(in->obs_days, target_length);
    case SamplerKind::Deformable:
      if (opts.truncation_day && !opts.rescale_grid) {
        return deformable_select(in->obs_days, in->clear_counts, target_length,
                                 static_cast<double>(input.obs_days.front()),
                                 static_cast<double>(input.obs_days.back()));
      }
      return deformable_select(in->obs_days, in->clear_counts, target_length);
    case SamplerKind::T3s:
      if (opts.truncation_day && !opts.rescale_grid) {
        auto [lo, hi] =
            std::minmax_element(input.obs_gdd.begin(), input.obs_gdd.end());
        return t3s_select(*in, target_length, *lo, *hi);
      }
      return t3s_select(*in, target_length);
  }
  throw ValidationError("run_sampler: unknown sampler kind");
}

GatheredCube apply_selection(const DataCube& cube, const SampleSelection& sel,
                             std::span<const double> positions) {
  if (positions.size() != static_cast<std::size_t>(cube.t)) {
    throw ValidationError("apply_selection: positions length must equal T");
  }
  if (sel.valid.size() != static_cast<std::size_t>(sel.target_length) ||
      sel.indices.size() > sel.valid.size()) {
    throw ValidationError("apply_selection: malformed selection");
  }
  for (int idx : sel.indices) {
    if (idx < 0 || idx >= cube.t) {
      throw ValidationError("apply_selection: index " + std::to_string(idx) +
                            " out of range");
    }
  }

  GatheredCube out;
  out.l = sel.target_length;
  out.c = cube.c;
  out.h = cube.h;
  out.w = cube.w;
  auto cxy = static_cast<std::size_t>(cube.c) * cube.h * cube.w;
  auto xy = static_cast<std::size_t>(cube.h) * cube.w;
  out.reflectance.assign(static_cast<std::size_t>(out.l) * cxy, 0);
  out.cloud.assign(static_cast<std::size_t>(out.l) * xy, 0);
  out.positions.assign(static_cast<std::size_t>(out.l), 0.0);
  out.valid = sel.valid;

  for (std::size_t slot = 0; slot < sel.indices.size(); ++slot) {
    int src = sel.indices[slot];
    std::copy_n(cube.reflectance.begin() + static_cast<std::ptrdiff_t>(src) * cxy,
                cxy, out.reflectance.begin() + static_cast<std::ptrdiff_t>(slot) * cxy);
    std::copy_n(cube.cloud_mask.begin() + static_cast<std::ptrdiff_t>(src) * xy,
                xy, out.cloud.begin() + static_cast<std::ptrdiff_t>(slot) * xy);
    out.positions[slot] = positions[static_cast<std::size_t>(src)];
  }
  return out;
}

}  // namespace t3s
