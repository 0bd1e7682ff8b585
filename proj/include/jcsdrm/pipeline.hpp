#pragma once

// Features -> JCSD clustering -> region graph -> region merging.

#include <string>
#include <vector>

#include "jcsdrm/jcsd.hpp"
#include "jcsdrm/merge.hpp"
#include "jcsdrm/rag.hpp"
#include "jcsdrm/rgbd_features.hpp"
#include "json.hpp"

namespace jcsdrm {

struct PipelineConfig {
  ClusterConfig cluster;
  MergeConfig merge;
  NormalOptions normals;
  int min_region_px = kMinRegionPixels;
  int scale = 1;  // nearest-neighbor downsampling factor: 1, 2, 4 or 8

  void validate() const;
};

/// Missing keys keep the values of `base`; unknown keys are rejected.
PipelineConfig config_from_json(const nlohmann::json& j, PipelineConfig base = {});
nlohmann::json to_json(const PipelineConfig& cfg);

/// Wall-clock seconds.
struct StageTimings {
  double features = 0.0;
  double clustering = 0.0;
  double regions = 0.0;
  double merging = 0.0;
  double total = 0.0;
};

struct SegmentResult {
  LabelMap jcsd_labels;   // regions straight after clustering
  LabelMap final_labels;  // after merging
  RegionGraph graph;      // before merging
  RegionGraph merged;     // after merging; node ids are survivor ids
  MergeTrace trace;
  int em_iterations = 0;
  bool em_converged = false;
  std::vector<double> nllh_trace;
  StageTimings timings;
  std::vector<std::string> warnings;
};

/// Output maps have the working (downsampled) resolution; missing pixels take the
/// label of the nearest labelled pixel.
SegmentResult segment(const RgbdFrame& frame, const PipelineConfig& cfg);
SegmentResult segment_features(const FeatureSet& features, const PipelineConfig& cfg);

LabelMap downsample_labels(const LabelMap& labels, int factor);

int region_count(const LabelMap& labels);

nlohmann::json to_json(const StageTimings& t);

}  // namespace jcsdrm
