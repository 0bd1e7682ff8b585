#include "jcsdrm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace jcsdrm {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Contingency {
  std::vector<double> rows;  // test region sizes
  std::vector<double> cols;  // gt region sizes
  std::unordered_map<std::uint64_t, double> cells;
  double n = 0.0;
  std::size_t ncols = 0;
};

std::vector<int> dense(const LabelMap& m, std::size_t& count) {
  std::unordered_map<std::int32_t, int> ids;
  std::vector<int> out(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    const auto [it, inserted] = ids.try_emplace(m[i], static_cast<int>(ids.size()));
    out[i] = it->second;
  }
  count = ids.size();
  return out;
}

Contingency contingency(const LabelMap& test, const LabelMap& gt) {
  if (!test.same_shape(gt)) throw std::invalid_argument("label maps differ in size");
  std::size_t nt = 0, ng = 0;
  const auto a = dense(test, nt);
  const auto b = dense(gt, ng);
  Contingency c;
  c.rows.assign(nt, 0.0);
  c.cols.assign(ng, 0.0);
  c.ncols = ng;
  for (std::size_t i = 0; i < a.size(); ++i) {
    c.rows[a[i]] += 1;
    c.cols[b[i]] += 1;
    c.cells[static_cast<std::uint64_t>(a[i]) * ng + b[i]] += 1;
  }
  c.n = static_cast<double>(a.size());
  return c;
}

double entropy(const std::vector<double>& counts, double n) {
  double h = 0.0;
  for (double c : counts)
    if (c > 0) h -= c / n * std::log(c / n);
  return h;
}

double pairs(double x) { return 0.5 * x * (x - 1.0); }

constexpr double kFar = 1e20;  // stands in for +inf inside the lower envelope

// Squared distance transform of a sampled function (Felzenszwalb-Huttenlocher).
void dt1d(const std::vector<double>& f, std::vector<double>& d, std::vector<int>& v, std::vector<double>& z) {
  const int n = static_cast<int>(f.size());
  int k = 0;
  v[0] = 0;
  z[0] = -kInf;
  z[1] = kInf;
  for (int q = 1; q < n; ++q) {
    auto meet = [&](int r) {
      return ((f[q] + static_cast<double>(q) * q) - (f[r] + static_cast<double>(r) * r)) / (2.0 * (q - r));
    };
    double s = meet(v[k]);
    while (s <= z[k]) s = meet(v[--k]);
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = kInf;
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) ++k;
    const double dq = q - v[k];
    d[q] = dq * dq + f[v[k]];
  }
}

std::vector<int> boundary_pixels(const LabelMap& m) {
  const auto b = boundary_map(m);
  std::vector<int> out;
  for (int i = 0; i < static_cast<int>(b.size()); ++i)
    if (b[i]) out.push_back(i);
  return out;
}

Image<std::uint8_t> frame_map(int w, int h) {
  Image<std::uint8_t> f(w, h, 0);
  for (int x = 0; x < w; ++x) f(x, 0) = f(x, h - 1) = 1;
  for (int y = 0; y < h; ++y) f(0, y) = f(w - 1, y) = 1;
  return f;
}

double mean_distance(const std::vector<int>& from, const Image<double>& dist) {
  double s = 0.0;
  for (int p : from) s += dist[p];
  return s / static_cast<double>(from.size());
}

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace

double voi(const LabelMap& test, const LabelMap& gt) {
  const Contingency c = contingency(test, gt);
  double hj = 0.0;
  for (const auto& [key, v] : c.cells) hj -= v / c.n * std::log(v / c.n);
  return std::max(0.0, 2.0 * hj - entropy(c.rows, c.n) - entropy(c.cols, c.n));
}

double pri(const LabelMap& test, const LabelMap& gt) {
  const Contingency c = contingency(test, gt);
  if (c.n < 2) return 1.0;
  double same = 0.0, rows = 0.0, cols = 0.0;
  for (const auto& [key, v] : c.cells) same += pairs(v);
  for (double r : c.rows) rows += pairs(r);
  for (double g : c.cols) cols += pairs(g);
  const double total = pairs(c.n);
  return (total + 2.0 * same - rows - cols) / total;
}

double gtrc(const LabelMap& test, const LabelMap& gt) {
  const Contingency c = contingency(test, gt);
  std::vector<double> best(c.cols.size(), 0.0);
  for (const auto& [key, v] : c.cells) {
    const std::size_t r = key / c.ncols, g = key % c.ncols;
    best[g] = std::max(best[g], v / (c.rows[r] + c.cols[g] - v));
  }
  double cover = 0.0;
  for (std::size_t g = 0; g < best.size(); ++g) cover += c.cols[g] / c.n * best[g];
  return cover;
}

Image<std::uint8_t> boundary_map(const LabelMap& labels) {
  const int w = labels.width(), h = labels.height();
  Image<std::uint8_t> b(w, h, 0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const auto l = labels(x, y);
      if ((x + 1 < w && labels(x + 1, y) != l) || (y + 1 < h && labels(x, y + 1) != l)) b(x, y) = 1;
    }
  return b;
}

Image<double> distance_transform(const Image<std::uint8_t>& seeds) {
  const int w = seeds.width(), h = seeds.height();
  Image<double> sq(w, h);
  const int n = std::max(w, h);
  std::vector<double> f(n), d(n), z(n + 1);
  std::vector<int> v(n);
  for (int x = 0; x < w; ++x) {
    f.resize(h), d.resize(h);
    for (int y = 0; y < h; ++y) f[y] = seeds(x, y) ? 0.0 : kFar;
    dt1d(f, d, v, z);
    for (int y = 0; y < h; ++y) sq(x, y) = d[y];
  }
  for (int y = 0; y < h; ++y) {
    f.resize(w), d.resize(w);
    for (int x = 0; x < w; ++x) f[x] = sq(x, y);
    dt1d(f, d, v, z);
    for (int x = 0; x < w; ++x) sq(x, y) = d[x] >= 0.5 * kFar ? kInf : std::sqrt(d[x]);
  }
  return sq;
}

double bde(const LabelMap& test, const LabelMap& gt) {
  if (!test.same_shape(gt)) throw std::invalid_argument("label maps differ in size");
  const auto bt = boundary_pixels(test);
  const auto bg = boundary_pixels(gt);
  if (bt.empty() && bg.empty()) return 0.0;
  const int w = test.width(), h = test.height();
  if (bt.empty()) return mean_distance(bg, distance_transform(frame_map(w, h)));
  if (bg.empty()) return mean_distance(bt, distance_transform(frame_map(w, h)));
  const double a = mean_distance(bt, distance_transform(boundary_map(gt)));
  const double b = mean_distance(bg, distance_transform(boundary_map(test)));
  return 0.5 * (a + b);
}

double default_boundary_tolerance(int width, int height) {
  return 0.0075 * std::hypot(static_cast<double>(width), static_cast<double>(height));
}

double bfm(const LabelMap& test, const LabelMap& gt, double tol_px) {
  if (!test.same_shape(gt)) throw std::invalid_argument("label maps differ in size");
  const int w = test.width(), h = test.height();
  if (tol_px < 0.0) tol_px = default_boundary_tolerance(w, h);
  const auto bt = boundary_pixels(test);
  const auto bg_map = boundary_map(gt);
  std::size_t ng = 0;
  for (auto v : bg_map.data()) ng += v;
  if (bt.empty() && ng == 0) return 1.0;
  if (bt.empty() || ng == 0) return 0.0;

  // Greedy one-to-one matching, nearest unmatched ground-truth pixel first.
  const int r = static_cast<int>(std::floor(tol_px));
  std::vector<std::pair<int, int>> offsets;
  for (int dy = -r; dy <= r; ++dy)
    for (int dx = -r; dx <= r; ++dx)
      if (dx * dx + dy * dy <= tol_px * tol_px + 1e-9) offsets.emplace_back(dx, dy);
  std::stable_sort(offsets.begin(), offsets.end(), [](const auto& a, const auto& b) {
    return a.first * a.first + a.second * a.second < b.first * b.first + b.second * b.second;
  });
  Image<std::uint8_t> taken(w, h, 0);
  std::size_t matched = 0;
  for (int p : bt) {
    const int x = p % w, y = p / w;
    for (const auto& [dx, dy] : offsets) {
      const int qx = x + dx, qy = y + dy;
      if (!bg_map.contains(qx, qy) || !bg_map(qx, qy) || taken(qx, qy)) continue;
      taken(qx, qy) = 1;
      ++matched;
      break;
    }
  }
  const double precision = static_cast<double>(matched) / static_cast<double>(bt.size());
  const double recall = static_cast<double>(matched) / static_cast<double>(ng);
  return precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
}

MetricReport evaluate_metrics(const LabelMap& test, const LabelMap& gt, double tol_px) {
  return {voi(test, gt), bde(test, gt), pri(test, gt), gtrc(test, gt), bfm(test, gt, tol_px)};
}

nlohmann::json to_json(const MetricReport& r) {
  return {{"voi", r.voi}, {"bde", r.bde}, {"pri", r.pri}, {"gtrc", r.gtrc}, {"bfm", r.bfm}};
}

MetricSummary summarize(const std::vector<MetricReport>& reports) {
  MetricSummary s;
  s.count = reports.size();
  s.gtrc_histogram.assign(10, 0);
  if (reports.empty()) return s;
  std::vector<double> voi_v, bde_v, pri_v, gtrc_v, bfm_v;
  for (const auto& r : reports) {
    voi_v.push_back(r.voi), bde_v.push_back(r.bde), pri_v.push_back(r.pri);
    gtrc_v.push_back(r.gtrc), bfm_v.push_back(r.bfm);
    ++s.gtrc_histogram[std::clamp(static_cast<int>(r.gtrc * 10.0), 0, 9)];
  }
  auto mean = [](const std::vector<double>& v) {
    double t = 0.0;
    for (double x : v) t += x;
    return t / static_cast<double>(v.size());
  };
  s.mean = {mean(voi_v), mean(bde_v), mean(pri_v), mean(gtrc_v), mean(bfm_v)};
  s.median = {median_of(voi_v), median_of(bde_v), median_of(pri_v), median_of(gtrc_v), median_of(bfm_v)};
  return s;
}

std::string reports_csv(const std::vector<std::string>& names, const std::vector<MetricReport>& reports) {
  if (names.size() != reports.size()) throw std::invalid_argument("names and reports differ in length");
  std::ostringstream os;
  os.precision(10);
  auto row = [&](const std::string& name, const MetricReport& r) {
    os << name << ',' << r.voi << ',' << r.bde << ',' << r.pri << ',' << r.gtrc << ',' << r.bfm << '\n';
  };
  os << "name,voi,bde,pri,gtrc,bfm\n";
  for (std::size_t i = 0; i < names.size(); ++i) row(names[i], reports[i]);
  const MetricSummary s = summarize(reports);
  row("mean", s.mean);
  row("median", s.median);
  return os.str();
}

std::string histogram_csv(const MetricSummary& summary) {
  std::ostringstream os;
  os << "gtrc_lo,gtrc_hi,count\n";
  for (int b = 0; b < 10; ++b) os << b / 10.0 << ',' << (b + 1) / 10.0 << ',' << summary.gtrc_histogram[b] << '\n';
  return os.str();
}

}  // namespace jcsdrm
