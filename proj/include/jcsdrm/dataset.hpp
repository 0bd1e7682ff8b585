#pragma once

// Directory layout: {name}_color.png, {name}_depth.png, optional {name}_gt.png and one
// intrinsics.json shared by all frames.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "jcsdrm/image.hpp"
#include "jcsdrm/rgbd_features.hpp"
#include "jcsdrm/synth.hpp"

namespace jcsdrm {

struct DatasetEntry {
  std::string name;
  std::filesystem::path color;
  std::filesystem::path depth;
  std::optional<std::filesystem::path> gt;
};

struct Dataset {
  std::filesystem::path dir;
  Intrinsics intrinsics;
  std::vector<DatasetEntry> entries;  // sorted by name
};

/// Throws InputError when the directory, intrinsics.json or a depth image is missing.
Dataset scan_dataset(const std::filesystem::path& dir);
RgbdFrame load_frame(const DatasetEntry& entry, const Intrinsics& intrinsics);

/// Files in `dir` named {name}{suffix}.png, keyed by name.
std::vector<std::pair<std::string, std::filesystem::path>> find_label_maps(const std::filesystem::path& dir,
                                                                           const std::string& suffix);

/// Writes color, depth and gt images plus intrinsics.json.
void write_frame(const std::filesystem::path& dir, const std::string& name, const SyntheticFrame& frame);

}  // namespace jcsdrm
