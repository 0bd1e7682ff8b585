#pragma once

// Segmentation comparison: variation of information, probabilistic Rand index,
// ground-truth region covering, boundary displacement error and boundary F-measure.
// Every distinct value in a label map is a region, including negative values.

#include <cstdint>
#include <string>
#include <vector>

#include "jcsdrm/image.hpp"
#include "json.hpp"

namespace jcsdrm {

struct MetricReport {
  double voi = 0.0;
  double bde = 0.0;
  double pri = 1.0;
  double gtrc = 1.0;
  double bfm = 1.0;
};

double voi(const LabelMap& test, const LabelMap& gt);
double pri(const LabelMap& test, const LabelMap& gt);
double gtrc(const LabelMap& test, const LabelMap& gt);
double bde(const LabelMap& test, const LabelMap& gt);
/// tol_px < 0 selects 0.75% of the image diagonal.
double bfm(const LabelMap& test, const LabelMap& gt, double tol_px = -1.0);

MetricReport evaluate_metrics(const LabelMap& test, const LabelMap& gt, double tol_px = -1.0);

double default_boundary_tolerance(int width, int height);

/// One-pixel-wide boundaries: 1 where the right or lower neighbor carries a different label.
Image<std::uint8_t> boundary_map(const LabelMap& labels);

/// Exact Euclidean distance to the nearest nonzero pixel (infinity if there is none).
Image<double> distance_transform(const Image<std::uint8_t>& seeds);

nlohmann::json to_json(const MetricReport& r);

struct MetricSummary {
  std::size_t count = 0;
  MetricReport mean;
  MetricReport median;
  std::vector<int> gtrc_histogram;  // 10 bins over [0, 1]
};

MetricSummary summarize(const std::vector<MetricReport>& reports);

/// name,voi,bde,pri,gtrc,bfm rows plus mean and median rows.
std::string reports_csv(const std::vector<std::string>& names, const std::vector<MetricReport>& reports);
std::string histogram_csv(const MetricSummary& summary);

}  // namespace jcsdrm
