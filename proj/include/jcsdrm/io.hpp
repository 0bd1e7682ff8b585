#pragma once

// PNG and JSON file formats used by the CLI.

#include <filesystem>
#include <stdexcept>
#include <string>

#include "jcsdrm/image.hpp"
#include "jcsdrm/rgbd_features.hpp"

namespace jcsdrm {

/// Unreadable, missing or malformed input; the message names the file.
class InputError : public std::runtime_error {
 public:
  explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

/// 8-bit RGB; gray, palette and alpha inputs are converted.
ColorImage read_color_png(const std::filesystem::path& path);
void write_color_png(const std::filesystem::path& path, const ColorImage& image);

/// 16-bit gray of raw depth units; meters = raw * depth_scale, 0 = missing.
DepthImage read_depth_png(const std::filesystem::path& path, double depth_scale);
void write_depth_png(const std::filesystem::path& path, const DepthImage& depth, double depth_scale);

/// 8- or 16-bit gray, one label per pixel value.
LabelMap read_label_png(const std::filesystem::path& path);
/// 16-bit gray; labels must lie in [0, 65535].
void write_label_png(const std::filesystem::path& path, const LabelMap& labels);

Intrinsics read_intrinsics(const std::filesystem::path& path);
void write_intrinsics(const std::filesystem::path& path, const Intrinsics& k);

}  // namespace jcsdrm
