#include "jcsdrm/dataset.hpp"

#include <algorithm>

#include "jcsdrm/io.hpp"

namespace jcsdrm {

namespace fs = std::filesystem;

std::vector<std::pair<std::string, fs::path>> find_label_maps(const fs::path& dir, const std::string& suffix) {
  if (!fs::is_directory(dir)) throw InputError(dir.string() + ": not a directory");
  const std::string tail = suffix + ".png";
  std::vector<std::pair<std::string, fs::path>> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string file = e.path().filename().string();
    if (!e.is_regular_file() || file.size() <= tail.size() || !file.ends_with(tail)) continue;
    out.emplace_back(file.substr(0, file.size() - tail.size()), e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

Dataset scan_dataset(const fs::path& dir) {
  Dataset ds;
  ds.dir = dir;
  ds.intrinsics = read_intrinsics(dir / "intrinsics.json");
  for (const auto& [name, color] : find_label_maps(dir, "_color")) {
    DatasetEntry e{name, color, dir / (name + "_depth.png"), std::nullopt};
    if (!fs::exists(e.depth)) throw InputError(e.depth.string() + ": missing depth image for " + color.string());
    if (fs::exists(dir / (name + "_gt.png"))) e.gt = dir / (name + "_gt.png");
    ds.entries.push_back(std::move(e));
  }
  if (ds.entries.empty()) throw InputError(dir.string() + ": no *_color.png frames");
  return ds;
}

RgbdFrame load_frame(const DatasetEntry& entry, const Intrinsics& intrinsics) {
  RgbdFrame f;
  f.color = read_color_png(entry.color);
  f.depth = read_depth_png(entry.depth, intrinsics.depth_scale);
  f.intrinsics = intrinsics;
  if (!f.color.same_shape(f.depth))
    throw InputError(entry.color.string() + ": color and depth sizes differ");
  return f;
}

void write_frame(const fs::path& dir, const std::string& name, const SyntheticFrame& frame) {
  fs::create_directories(dir);
  write_color_png(dir / (name + "_color.png"), frame.frame.color);
  write_depth_png(dir / (name + "_depth.png"), frame.frame.depth, frame.frame.intrinsics.depth_scale);
  write_label_png(dir / (name + "_gt.png"), frame.gt);
  write_intrinsics(dir / "intrinsics.json", frame.frame.intrinsics);
}

}  // namespace jcsdrm
