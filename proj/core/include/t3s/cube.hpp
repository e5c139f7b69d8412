#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "t3s/common.hpp"

namespace t3s {

inline constexpr std::uint8_t kIgnoreLabel = 255;
inline constexpr int kCubeFormatVersion = 1;
inline constexpr double kReflectanceScale = 10000.0;

// One site-year stack: T timesteps x C channels x H x W pixels, plus
// per-timestep day-of-year and cloud mask and a per-pixel label map.
// Reflectance is stored as digital numbers (reflectance * 10000).
struct DataCube {
  int t = 0, c = 0, h = 0, w = 0;
  int year = 0;
  std::vector<int> obs_days;               // T, strictly increasing
  std::vector<std::uint16_t> reflectance;  // T*C*H*W
  std::vector<std::uint8_t> cloud_mask;    // T*H*W, 1 = cloudy/invalid
  std::vector<std::uint8_t> labels;        // H*W, kIgnoreLabel = unlabeled
  std::vector<std::string> channel_names;  // C
  std::vector<std::string> class_names;

  std::size_t refl_index(int ti, int ci, int yi, int xi) const {
    return ((static_cast<std::size_t>(ti) * c + ci) * h + yi) * w + xi;
  }
  std::size_t mask_index(int ti, int yi, int xi) const {
    return (static_cast<std::size_t>(ti) * h + yi) * w + xi;
  }
  std::size_t pixel_index(int yi, int xi) const {
    return static_cast<std::size_t>(yi) * w + xi;
  }

  // Checks dimensional consistency, label validity, obs_days ordering.
  void validate() const;
};

inline double to_reflectance(std::uint16_t dn) {
  return static_cast<double>(dn) / kReflectanceScale;
}

// Directory layout: manifest.json, reflectance.u16, cloud.u8, labels.u8,
// days.u16. All arrays little-endian.
void write_cube(const DataCube& cube, const std::filesystem::path& directory);
DataCube read_cube(const std::filesystem::path& directory);

}  // namespace t3s
