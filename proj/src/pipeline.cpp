#include "jcsdrm/pipeline.hpp"

#include <chrono>
#include <set>
#include <stdexcept>

namespace jcsdrm {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

const char* family_name(DirectionalFamily f) { return f == DirectionalFamily::Fisher ? "fisher" : "watson"; }

DirectionalFamily parse_family(const std::string& s) {
  if (s == "fisher") return DirectionalFamily::Fisher;
  if (s == "watson") return DirectionalFamily::Watson;
  throw std::invalid_argument("unknown directional family '" + s + "'");
}

template <typename T>
void read(const nlohmann::json& j, const char* key, T& field) {
  if (j.contains(key)) field = j.at(key).get<T>();
}

void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> keys, const std::string& where) {
  for (const auto& [k, v] : j.items()) {
    bool known = false;
    for (const char* key : keys) known = known || k == key;
    if (!known) throw std::invalid_argument("unknown config key '" + where + k + "'");
  }
}

}  // namespace

void PipelineConfig::validate() const {
  cluster.validate();
  merge.validate();
  if (normals.window < 3 || normals.window % 2 == 0) throw std::invalid_argument("normal window must be odd and >= 3");
  if (!(normals.depth_guard > 0.0)) throw std::invalid_argument("depth_guard must be positive");
  if (min_region_px < 1) throw std::invalid_argument("min_region_px must be positive");
  if (scale != 1 && scale != 2 && scale != 4 && scale != 8) throw std::invalid_argument("scale must be 1, 2, 4 or 8");
}

PipelineConfig config_from_json(const nlohmann::json& j, PipelineConfig base) {
  try {
    reject_unknown(j, {"cluster", "merge", "normals", "min_region_px", "scale"}, "");
    PipelineConfig c = base;
    if (j.contains("cluster")) {
      const auto& s = j.at("cluster");
      reject_unknown(s, {"k", "max_iters", "nllh_tol", "family", "seed", "stride", "kmeans_iters", "color_var_floor",
                         "pos_var_floor"},
                     "cluster.");
      read(s, "k", c.cluster.k);
      read(s, "max_iters", c.cluster.max_iters);
      read(s, "nllh_tol", c.cluster.nllh_tol);
      if (s.contains("family")) c.cluster.directional_family = parse_family(s.at("family").get<std::string>());
      read(s, "seed", c.cluster.seed);
      read(s, "stride", c.cluster.stride);
      read(s, "kmeans_iters", c.cluster.kmeans_iters);
      read(s, "color_var_floor", c.cluster.color_var_floor);
      read(s, "pos_var_floor", c.cluster.pos_var_floor);
    }
    if (j.contains("merge")) {
      const auto& s = j.at("merge");
      reject_unknown(s, {"kappa_p", "th_b", "th_d", "th_r", "ransac_iters", "ransac_inlier_dist", "ransac_seed",
                         "ransac_max_points"},
                     "merge.");
      read(s, "kappa_p", c.merge.kappa_p);
      read(s, "th_b", c.merge.th_b);
      read(s, "th_d", c.merge.th_d);
      read(s, "th_r", c.merge.th_r);
      read(s, "ransac_iters", c.merge.ransac.iters);
      read(s, "ransac_inlier_dist", c.merge.ransac.inlier_dist);
      read(s, "ransac_seed", c.merge.ransac.seed);
      read(s, "ransac_max_points", c.merge.ransac.max_points);
    }
    if (j.contains("normals")) {
      const auto& s = j.at("normals");
      reject_unknown(s, {"window", "depth_guard"}, "normals.");
      read(s, "window", c.normals.window);
      read(s, "depth_guard", c.normals.depth_guard);
    }
    read(j, "min_region_px", c.min_region_px);
    read(j, "scale", c.scale);
    c.validate();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
}

nlohmann::json to_json(const PipelineConfig& c) {
  return {{"cluster",
           {{"k", c.cluster.k},
            {"max_iters", c.cluster.max_iters},
            {"nllh_tol", c.cluster.nllh_tol},
            {"family", family_name(c.cluster.directional_family)},
            {"seed", c.cluster.seed},
            {"stride", c.cluster.stride},
            {"kmeans_iters", c.cluster.kmeans_iters},
            {"color_var_floor", c.cluster.color_var_floor},
            {"pos_var_floor", c.cluster.pos_var_floor}}},
          {"merge",
           {{"kappa_p", c.merge.kappa_p},
            {"th_b", c.merge.th_b},
            {"th_d", c.merge.th_d},
            {"th_r", c.merge.th_r},
            {"ransac_iters", c.merge.ransac.iters},
            {"ransac_inlier_dist", c.merge.ransac.inlier_dist},
            {"ransac_seed", c.merge.ransac.seed},
            {"ransac_max_points", c.merge.ransac.max_points}}},
          {"normals", {{"window", c.normals.window}, {"depth_guard", c.normals.depth_guard}}},
          {"min_region_px", c.min_region_px},
          {"scale", c.scale}};
}

SegmentResult segment(const RgbdFrame& frame, const PipelineConfig& cfg) {
  cfg.validate();
  const auto t0 = Clock::now();
  const FeatureSet fs = assemble_features(cfg.scale == 1 ? frame : downsample(frame, cfg.scale), cfg.normals);
  const double features = seconds_since(t0);
  SegmentResult r = segment_features(fs, cfg);
  r.timings.features = features;
  r.timings.total = seconds_since(t0);
  return r;
}

SegmentResult segment_features(const FeatureSet& fs, const PipelineConfig& cfg) {
  cfg.validate();
  SegmentResult r;
  r.warnings = fs.warnings;
  if (fs.features.empty()) throw std::invalid_argument("frame has no valid pixels");
  const auto t0 = Clock::now();

  const MixtureState mix = run_em(fs.features, cfg.cluster);
  const std::vector<int> assign = hard_assign(fs.features, mix.components);
  r.em_iterations = mix.iterations;
  r.em_converged = mix.converged;
  r.nllh_trace = mix.nllh_trace;
  if (!mix.converged) r.warnings.push_back("EM stopped at max_iters before the nLLH change fell below nllh_tol");
  const auto t1 = Clock::now();
  r.timings.clustering = std::chrono::duration<double>(t1 - t0).count();

  LabelMap clusters(fs.width, fs.height, kNoLabel);
  for (std::size_t f = 0; f < assign.size(); ++f) clusters[static_cast<std::size_t>(fs.pixel_of[f])] = assign[f];
  // The mode filter may spread labels onto excluded pixels; those stay excluded.
  LabelMap filtered = median_filter_labels(clusters);
  for (std::size_t p = 0; p < filtered.size(); ++p)
    if (clusters[p] == kNoLabel) filtered[p] = kNoLabel;
  const DirectionalFamily family = cfg.cluster.directional_family;
  const Regions regions = extract_regions(filtered, fs.normals, family, cfg.min_region_px);
  r.graph = build_rag(regions.labels, fs.normals, fs.gradient, family);
  r.jcsd_labels = fill_missing_labels(regions.labels);
  const auto t2 = Clock::now();
  r.timings.regions = std::chrono::duration<double>(t2 - t1).count();

  MergeResult merged = run_region_merging(r.graph, fs.points, fs.gradient, cfg.merge);
  r.trace = std::move(merged.trace);
  r.merged = std::move(merged.graph);
  r.final_labels = fill_missing_labels(merged.labels);
  r.timings.merging = seconds_since(t2);
  r.timings.total = seconds_since(t0);
  return r;
}

LabelMap downsample_labels(const LabelMap& labels, int factor) {
  if (factor < 1) throw std::invalid_argument("downsampling factor must be positive");
  LabelMap out(labels.width() / factor, labels.height() / factor);
  for (int y = 0; y < out.height(); ++y)
    for (int x = 0; x < out.width(); ++x) out(x, y) = labels(x * factor, y * factor);
  return out;
}

int region_count(const LabelMap& labels) {
  std::set<std::int32_t> seen;
  for (auto l : labels.data())
    if (l != kNoLabel) seen.insert(l);
  return static_cast<int>(seen.size());
}

nlohmann::json to_json(const StageTimings& t) {
  return {{"features", t.features},
          {"clustering", t.clustering},
          {"regions", t.regions},
          {"merging", t.merging},
          {"total", t.total}};
}

}  // namespace jcsdrm
