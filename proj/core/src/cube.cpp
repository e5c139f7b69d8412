#include "t3s/cube.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <json.hpp>

namespace t3s {

namespace {

using nlohmann::json;

void check(bool ok, const std::string& msg) {
  if (!ok) throw ValidationError("cube: " + msg);
}

std::vector<std::uint8_t> read_binary(const std::filesystem::path& file,
                                      std::size_t expected_bytes,
                                      const std::string& array_name) {
  std::ifstream in(file, std::ios::binary);
  if (!in) {
    throw IoError("cube: missing array file '" + array_name + "' at " +
                  file.string());
  }
  in.seekg(0, std::ios::end);
  auto size = static_cast<std::size_t>(in.tellg());
  if (size != expected_bytes) {
    throw IoError("cube: array '" + array_name + "' has " +
                  std::to_string(size) + " bytes, expected " +
                  std::to_string(expected_bytes));
  }
  in.seekg(0);
  std::vector<std::uint8_t> buf(size);
  in.read(reinterpret_cast<char*>(buf.data()),
          static_cast<std::streamsize>(size));
  if (!in) throw IoError("cube: short read on '" + array_name + "'");
  return buf;
}

void write_binary(const std::filesystem::path& file, const void* data,
                  std::size_t bytes) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cube: cannot write " + file.string());
  out.write(static_cast<const char*>(data),
            static_cast<std::streamsize>(bytes));
  if (!out) throw IoError("cube: write failed for " + file.string());
}

std::vector<std::uint8_t> u16_to_le(const std::uint16_t* src, std::size_t n) {
  std::vector<std::uint8_t> out(n * 2);
  for (std::size_t i = 0; i < n; ++i) {
    out[2 * i] = static_cast<std::uint8_t>(src[i] & 0xff);
    out[2 * i + 1] = static_cast<std::uint8_t>(src[i] >> 8);
  }
  return out;
}

std::vector<std::uint16_t> le_to_u16(const std::vector<std::uint8_t>& src) {
  std::vector<std::uint16_t> out(src.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<std::uint16_t>(src[2 * i] |
                                        (static_cast<std::uint16_t>(src[2 * i + 1]) << 8));
  }
  return out;
}

}  // namespace

void DataCube::validate() const {
  check(t >= 1, "T must be >= 1");
  check(c >= 1, "C must be >= 1");
  check(h >= 1 && w >= 1, "H and W must be >= 1");
  auto tcxy = static_cast<std::size_t>(t) * c * h * w;
  auto txy = static_cast<std::size_t>(t) * h * w;
  auto xy = static_cast<std::size_t>(h) * w;
  check(reflectance.size() == tcxy, "reflectance size mismatch");
  check(cloud_mask.size() == txy, "cloud_mask size mismatch");
  check(labels.size() == xy, "labels size mismatch");
  check(obs_days.size() == static_cast<std::size_t>(t),
        "obs_days size mismatch");
  check(channel_names.size() == static_cast<std::size_t>(c),
        "channel_names size mismatch");
  for (std::size_t i = 1; i < obs_days.size(); ++i) {
    check(obs_days[i] > obs_days[i - 1], "obs_days not strictly increasing");
  }
  for (int d : obs_days) check(d >= 1 && d <= 366, "obs_day out of range");
  for (auto m : cloud_mask) check(m <= 1, "cloud_mask entry not 0/1");
  auto n_classes = class_names.size();
  for (auto lab : labels) {
    check(lab == kIgnoreLabel || lab < n_classes,
          "label " + std::to_string(lab) + " has no class name");
  }
}

void write_cube(const DataCube& cube, const std::filesystem::path& directory) {
  cube.validate();
  std::filesystem::create_directories(directory);

  json manifest;
  manifest["format_version"] = kCubeFormatVersion;
  manifest["year"] = cube.year;
  manifest["dims"] = {{"T", cube.t}, {"C", cube.c}, {"H", cube.h}, {"W", cube.w}};
  manifest["channel_names"] = cube.channel_names;
  manifest["class_names"] = cube.class_names;
  manifest["arrays"] = {{"reflectance", "reflectance.u16"},
                        {"cloud", "cloud.u8"},
                        {"labels", "labels.u8"},
                        {"days", "days.u16"}};
  manifest["byte_order"] = "little";
  write_text_file((directory / "manifest.json").string(), manifest.dump(2) + "\n");

  auto refl = u16_to_le(cube.reflectance.data(), cube.reflectance.size());
  write_binary(directory / "reflectance.u16", refl.data(), refl.size());
  write_binary(directory / "cloud.u8", cube.cloud_mask.data(),
               cube.cloud_mask.size());
  write_binary(directory / "labels.u8", cube.labels.data(), cube.labels.size());

  std::vector<std::uint16_t> days(cube.obs_days.size());
  for (std::size_t i = 0; i < days.size(); ++i) {
    days[i] = static_cast<std::uint16_t>(cube.obs_days[i]);
  }
  auto days_le = u16_to_le(days.data(), days.size());
  write_binary(directory / "days.u16", days_le.data(), days_le.size());
}

DataCube read_cube(const std::filesystem::path& directory) {
  auto manifest_path = directory / "manifest.json";
  if (!std::filesystem::exists(manifest_path)) {
    throw IoError("cube: no manifest.json in " + directory.string());
  }
  json manifest;
  try {
    manifest = json::parse(read_text_file(manifest_path.string()));
  } catch (const json::exception& e) {
    throw IoError("cube: manifest parse error: " + std::string(e.what()));
  }

  int version = manifest.value("format_version", -1);
  if (version != kCubeFormatVersion) {
    throw IoError("cube: unsupported format_version " +
                  std::to_string(version));
  }
  std::string byte_order = manifest.value("byte_order", "");
  if (byte_order != "little") {
    throw IoError("cube: unsupported byte_order '" + byte_order + "'");
  }

  DataCube cube;
  try {
    cube.year = manifest.at("year").get<int>();
    const auto& dims = manifest.at("dims");
    cube.t = dims.at("T").get<int>();
    cube.c = dims.at("C").get<int>();
    cube.h = dims.at("H").get<int>();
    cube.w = dims.at("W").get<int>();
    cube.channel_names = manifest.at("channel_names").get<std::vector<std::string>>();
    cube.class_names = manifest.at("class_names").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw IoError("cube: manifest field error: " + std::string(e.what()));
  }
  if (cube.t < 1 || cube.c < 1 || cube.h < 1 || cube.w < 1) {
    throw IoError("cube: manifest dims invalid");
  }

  const auto& arrays = manifest.at("arrays");
  auto rel = [&](const char* key) {
    return directory / arrays.at(key).get<std::string>();
  };

  auto tcxy = static_cast<std::size_t>(cube.t) * cube.c * cube.h * cube.w;
  auto txy = static_cast<std::size_t>(cube.t) * cube.h * cube.w;
  auto xy = static_cast<std::size_t>(cube.h) * cube.w;

  cube.reflectance = le_to_u16(read_binary(rel("reflectance"), tcxy * 2, "reflectance"));
  cube.cloud_mask = read_binary(rel("cloud"), txy, "cloud");
  cube.labels = read_binary(rel("labels"), xy, "labels");
  auto days = le_to_u16(read_binary(rel("days"), cube.t * 2, "days"));
  cube.obs_days.assign(days.begin(), days.end());

  cube.validate();
  return cube;
}

}  // namespace t3s
