#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "jcsdrm/dataset.hpp"
#include "jcsdrm/errors.hpp"
#include "jcsdrm/io.hpp"
#include "jcsdrm/metrics.hpp"
#include "jcsdrm/pipeline.hpp"
#include "jcsdrm/synth.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace jcsdrm;

namespace {

constexpr int kExitInput = 1;
constexpr int kExitNumerical = 2;

struct Overrides {
  std::optional<std::string> config;
  std::optional<int> k, max_iters, stride, kmeans_iters, ransac_iters, ransac_max_points, window, min_region_px, scale;
  std::optional<double> nllh_tol, color_var_floor, pos_var_floor, kappa_p, th_b, th_d, th_r, inlier_dist, depth_guard;
  std::optional<std::uint64_t> seed, ransac_seed;
  std::optional<std::string> family;
};

void add_pipeline_flags(CLI::App* app, Overrides& o) {
  app->add_option("--config", o.config, "JSON pipeline config (default: $JCSDRM_CONFIG)");
  app->add_option("--k", o.k, "number of mixture components");
  app->add_option("--max-iters", o.max_iters, "EM iteration cap");
  app->add_option("--nllh-tol", o.nllh_tol, "EM stops when |delta nLLH| falls below this");
  app->add_option("--family", o.family, "directional family")->check(CLI::IsMember({"fisher", "watson"}));
  app->add_option("--seed", o.seed, "clustering seed");
  app->add_option("--stride", o.stride, "fit EM on every n-th pixel");
  app->add_option("--kmeans-iters", o.kmeans_iters, "k-means initialization iterations");
  app->add_option("--color-var-floor", o.color_var_floor, "color covariance eigenvalue floor");
  app->add_option("--pos-var-floor", o.pos_var_floor, "position covariance eigenvalue floor (m^2)");
  app->add_option("--kappa-p", o.kappa_p, "planarity threshold");
  app->add_option("--th-b", o.th_b, "boundary weight threshold");
  app->add_option("--th-d", o.th_d, "directional weight threshold");
  app->add_option("--th-r", o.th_r, "plane inlier ratio threshold");
  app->add_option("--ransac-iters", o.ransac_iters, "RANSAC hypotheses");
  app->add_option("--ransac-inlier-dist", o.inlier_dist, "RANSAC inlier distance (m)");
  app->add_option("--ransac-seed", o.ransac_seed, "RANSAC seed");
  app->add_option("--ransac-max-points", o.ransac_max_points, "RANSAC point subsample size");
  app->add_option("--normal-window", o.window, "normal estimation window (odd)");
  app->add_option("--depth-guard", o.depth_guard, "relative depth jump excluded from normal windows");
  app->add_option("--min-region-px", o.min_region_px, "smaller regions are absorbed by a neighbor");
  app->add_option("--scale", o.scale, "downsampling factor")->check(CLI::IsMember({1, 2, 4, 8}));
}

nlohmann::json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError(path.string() + ": cannot open");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

PipelineConfig resolve_config(const Overrides& o) {
  PipelineConfig c;
  std::optional<std::string> path = o.config;
  if (!path) {
    if (const char* env = std::getenv("JCSDRM_CONFIG"); env && *env) path = env;
  }
  if (path) {
    try {
      c = config_from_json(read_json_file(*path));
    } catch (const std::invalid_argument& e) {
      throw InputError(*path + ": " + e.what());
    }
  }
  auto set = [](auto& field, const auto& value) {
    if (value) field = *value;
  };
  set(c.cluster.k, o.k);
  set(c.cluster.max_iters, o.max_iters);
  set(c.cluster.nllh_tol, o.nllh_tol);
  if (o.family) c.cluster.directional_family = *o.family == "watson" ? DirectionalFamily::Watson : DirectionalFamily::Fisher;
  set(c.cluster.seed, o.seed);
  set(c.cluster.stride, o.stride);
  set(c.cluster.kmeans_iters, o.kmeans_iters);
  set(c.cluster.color_var_floor, o.color_var_floor);
  set(c.cluster.pos_var_floor, o.pos_var_floor);
  set(c.merge.kappa_p, o.kappa_p);
  set(c.merge.th_b, o.th_b);
  set(c.merge.th_d, o.th_d);
  set(c.merge.th_r, o.th_r);
  set(c.merge.ransac.iters, o.ransac_iters);
  set(c.merge.ransac.inlier_dist, o.inlier_dist);
  set(c.merge.ransac.seed, o.ransac_seed);
  set(c.merge.ransac.max_points, o.ransac_max_points);
  set(c.normals.window, o.window);
  set(c.normals.depth_guard, o.depth_guard);
  set(c.min_region_px, o.min_region_px);
  set(c.scale, o.scale);
  c.validate();
  return c;
}

/// Runs fn(i) for i in [0, n) on up to `jobs` threads; the first exception is rethrown.
template <typename Fn>
void parallel_for(int n, int jobs, Fn fn) {
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex m;
  auto worker = [&] {
    for (int i; (i = next++) < n;) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(m);
        if (!error) error = std::current_exception();
        next = n;
      }
    }
  };
  std::vector<std::jthread> pool;
  for (int t = 1; t < std::min(jobs, n); ++t) pool.emplace_back(worker);
  worker();
  pool.clear();
  if (error) std::rethrow_exception(error);
}

void write_text(const std::optional<std::string>& path, const std::string& text) {
  if (!path) {
    std::cout << text;
    return;
  }
  std::ofstream out(*path);
  if (!out) throw InputError(*path + ": cannot write");
  out << text;
}

nlohmann::json sidecar(const std::string& name, const SegmentResult& r, const PipelineConfig& cfg) {
  nlohmann::json regions = nlohmann::json::array();
  for (const auto& [id, node] : r.merged.nodes) {
    const int label = r.final_labels[static_cast<std::size_t>(node.pixels.front())];
    regions.push_back({{"label", label},
                       {"pixels", node.pixel_count},
                       {"pi", node.pi},
                       {"mu", {node.mu.x(), node.mu.y(), node.mu.z()}},
                       {"kappa", node.kappa}});
  }
  std::sort(regions.begin(), regions.end(),
            [](const auto& a, const auto& b) { return a["label"].template get<int>() < b["label"].template get<int>(); });
  return {{"name", name},
          {"width", r.final_labels.width()},
          {"height", r.final_labels.height()},
          {"jcsd_regions", region_count(r.jcsd_labels)},
          {"final_regions", region_count(r.final_labels)},
          {"regions", regions},
          {"em", {{"iterations", r.em_iterations}, {"converged", r.em_converged}, {"nllh", r.nllh_trace}}},
          {"timings", to_json(r.timings)},
          {"trace", to_json(r.trace)},
          {"config", to_json(cfg)},
          {"warnings", r.warnings}};
}

LabelMap match_resolution(const LabelMap& gt, const LabelMap& test, const std::string& name) {
  if (gt.same_shape(test)) return gt;
  for (int f : {2, 4, 8})
    if (gt.width() / f == test.width() && gt.height() / f == test.height()) return downsample_labels(gt, f);
  throw InputError(name + ": test and ground-truth sizes differ (" + std::to_string(test.width()) + "x" +
                   std::to_string(test.height()) + " vs " + std::to_string(gt.width()) + "x" +
                   std::to_string(gt.height()) + ")");
}

// ---- segment --------------------------------------------------------------

struct SegmentArgs {
  Overrides o;
  std::optional<std::string> color, depth, intrinsics, dataset, name;
  std::string out_dir;
  int jobs = 1;
};

int run_segment(const SegmentArgs& a) {
  const PipelineConfig cfg = resolve_config(a.o);
  fs::create_directories(a.out_dir);
  std::vector<DatasetEntry> entries;
  Intrinsics k;
  if (a.dataset) {
    if (a.color || a.depth) throw InputError("use either --dataset or --color/--depth");
    const Dataset ds = scan_dataset(*a.dataset);
    entries = ds.entries;
    k = ds.intrinsics;
  } else {
    if (!a.color || !a.depth) throw InputError("segment needs --color and --depth, or --dataset");
    std::string name = a.name.value_or(fs::path(*a.color).stem().string());
    if (!a.name && name.ends_with("_color")) name.resize(name.size() - 6);
    entries.push_back({name, *a.color, *a.depth, std::nullopt});
    if (a.intrinsics) k = read_intrinsics(*a.intrinsics);
  }
  std::mutex out_mutex;
  parallel_for(static_cast<int>(entries.size()), a.jobs, [&](int i) {
    const DatasetEntry& e = entries[static_cast<std::size_t>(i)];
    const SegmentResult r = segment(load_frame(e, k), cfg);
    const fs::path dir(a.out_dir);
    write_label_png(dir / (e.name + "_jcsd.png"), r.jcsd_labels);
    write_label_png(dir / (e.name + "_final.png"), r.final_labels);
    std::ofstream(dir / (e.name + "_final.json")) << sidecar(e.name, r, cfg).dump(2) << '\n';
    std::lock_guard lock(out_mutex);
    for (const auto& w : r.warnings) std::cerr << e.name << ": warning: " << w << '\n';
    std::cout << e.name << ": " << region_count(r.jcsd_labels) << " JCSD regions, " << region_count(r.final_labels)
              << " after merging, " << r.timings.total << " s\n";
  });
  return 0;
}

// ---- evaluate -------------------------------------------------------------

struct EvaluateArgs {
  std::string test_dir, gt_dir, suffix = "_final";
  std::optional<std::string> csv, histogram, summary;
  int jobs = 1;
};

int run_evaluate(const EvaluateArgs& a) {
  const auto tests = find_label_maps(a.test_dir, a.suffix);
  const auto gts = find_label_maps(a.gt_dir, "_gt");
  std::map<std::string, fs::path> gt_of(gts.begin(), gts.end());
  std::vector<std::pair<std::string, fs::path>> pairs;
  for (const auto& [name, path] : tests) {
    if (gt_of.count(name)) {
      pairs.emplace_back(name, path);
      gt_of.erase(name);
    } else {
      std::cerr << "unmatched test map: " << path.string() << '\n';
    }
  }
  for (const auto& [name, path] : gt_of) std::cerr << "unmatched ground truth: " << path.string() << '\n';
  if (pairs.empty()) throw InputError("no matching test/ground-truth pairs");

  std::vector<MetricReport> reports(pairs.size());
  std::vector<std::string> names;
  for (const auto& p : pairs) names.push_back(p.first);
  parallel_for(static_cast<int>(pairs.size()), a.jobs, [&](int i) {
    const auto& [name, path] = pairs[static_cast<std::size_t>(i)];
    const LabelMap test = read_label_png(path);
    const LabelMap gt = match_resolution(read_label_png(fs::path(a.gt_dir) / (name + "_gt.png")), test, name);
    reports[static_cast<std::size_t>(i)] = evaluate_metrics(test, gt);
  });
  write_text(a.csv, reports_csv(names, reports));
  const MetricSummary s = summarize(reports);
  if (a.histogram) write_text(a.histogram, histogram_csv(s));
  const nlohmann::json j = {{"count", s.count}, {"mean", to_json(s.mean)}, {"median", to_json(s.median)}};
  if (a.summary) write_text(a.summary, j.dump(2) + "\n");
  else std::cerr << j.dump() << '\n';
  return 0;
}

// ---- sweep ----------------------------------------------------------------

struct SweepArgs {
  Overrides o;
  std::string param, dataset, output = "final";
  std::vector<double> values;
  std::optional<std::string> csv;
  int jobs = 1;
};

void set_param(PipelineConfig& c, const std::string& param, double v) {
  if (param == "k") {
    if (v != std::floor(v)) throw InputError("k values must be integers");
    c.cluster.k = static_cast<int>(v);
  } else if (param == "kappa_p") {
    c.merge.kappa_p = v;
  } else if (param == "th_b") {
    c.merge.th_b = v;
  } else if (param == "th_d") {
    c.merge.th_d = v;
  } else if (param == "th_r") {
    c.merge.th_r = v;
  } else {
    throw InputError("unknown sweep parameter '" + param + "' (k, kappa_p, th_b, th_d, th_r)");
  }
}

int run_sweep(const SweepArgs& a) {
  const PipelineConfig base = resolve_config(a.o);
  const Dataset ds = scan_dataset(a.dataset);
  std::vector<DatasetEntry> frames;
  for (const auto& e : ds.entries)
    if (e.gt) frames.push_back(e);
    else std::cerr << "skipping " << e.name << ": no ground truth\n";
  if (frames.empty()) throw InputError(a.dataset + ": no frames with ground truth");

  std::vector<PipelineConfig> configs;
  for (double v : a.values) {
    PipelineConfig c = base;
    set_param(c, a.param, v);
    try {
      c.validate();
    } catch (const std::invalid_argument& e) {
      throw InputError(a.param + " = " + std::to_string(v) + ": " + e.what());
    }
    configs.push_back(c);
  }

  const std::size_t nf = frames.size();
  std::vector<MetricReport> reports(configs.size() * nf);
  parallel_for(static_cast<int>(reports.size()), a.jobs, [&](int i) {
    const auto& e = frames[static_cast<std::size_t>(i) % nf];
    const PipelineConfig& c = configs[static_cast<std::size_t>(i) / nf];
    const SegmentResult r = segment(load_frame(e, ds.intrinsics), c);
    const LabelMap& test = a.output == "jcsd" ? r.jcsd_labels : r.final_labels;
    const LabelMap gt = match_resolution(read_label_png(*e.gt), test, e.name);
    reports[static_cast<std::size_t>(i)] = evaluate_metrics(test, gt);
  });

  std::ostringstream os;
  os << "metric";
  for (double v : a.values) os << ',' << a.param << '=' << v;
  os << '\n';
  std::vector<MetricReport> means;
  for (std::size_t c = 0; c < configs.size(); ++c)
    means.push_back(summarize({reports.begin() + c * nf, reports.begin() + (c + 1) * nf}).mean);
  const std::pair<const char*, double MetricReport::*> rows[] = {
      {"VoI", &MetricReport::voi}, {"BDE", &MetricReport::bde}, {"PRI", &MetricReport::pri},
      {"GTRC", &MetricReport::gtrc}, {"BFM", &MetricReport::bfm}};
  for (const auto& [label, field] : rows) {
    os << label;
    for (const auto& m : means) os << ',' << m.*field;
    os << '\n';
  }
  write_text(a.csv, os.str());
  return 0;
}

// ---- synth ----------------------------------------------------------------

struct SynthArgs {
  std::string preset = "box", out_dir, name = "synth";
  std::optional<std::string> scene;
  std::optional<std::uint64_t> seed;
  std::optional<int> width, height;
  bool print = false;
};

int run_synth(const SynthArgs& a) {
  SceneSpec spec;
  if (a.scene) {
    spec = scene_from_json(read_json_file(*a.scene));
  } else {
    spec = box_scene(a.width.value_or(320), a.height.value_or(240));
  }
  if (a.scene && (a.width || a.height)) throw InputError("--width/--height apply to presets only");
  if (a.seed) spec.seed = *a.seed;
  if (a.print) {
    std::cout << to_json(spec).dump(2) << '\n';
    return 0;
  }
  if (a.out_dir.empty()) throw InputError("synth needs --out-dir (or --print)");
  const SyntheticFrame f = render_scene(spec);
  write_frame(a.out_dir, a.name, f);
  std::cout << a.name << ": " << spec.width << "x" << spec.height << ", " << region_count(f.gt)
            << " ground-truth regions\n";
  return 0;
}

// ---- bench ----------------------------------------------------------------

struct BenchArgs {
  Overrides o;
  std::optional<std::string> dataset, csv;
  std::vector<int> scales{1, 2, 4, 8};
  int width = 640, height = 480;
};

int run_bench(const BenchArgs& a) {
  const PipelineConfig base = resolve_config(a.o);
  std::vector<std::pair<std::string, RgbdFrame>> frames;
  if (a.dataset) {
    const Dataset ds = scan_dataset(*a.dataset);
    for (const auto& e : ds.entries) frames.emplace_back(e.name, load_frame(e, ds.intrinsics));
  } else {
    frames.emplace_back("box", render_scene(box_scene(a.width, a.height)).frame);
  }
  std::ostringstream os;
  os << "name,scale,width,height,pixels,em_iterations,features_s,clustering_s,regions_s,merging_s,total_s\n";
  std::vector<double> pixels, times;
  for (const auto& [name, frame] : frames)
    for (int s : a.scales) {
      PipelineConfig c = base;
      c.scale = s;
      c.validate();
      const SegmentResult r = segment(frame, c);
      const StageTimings& t = r.timings;
      const double m = static_cast<double>(r.final_labels.size());
      os << name << ',' << s << ',' << r.final_labels.width() << ',' << r.final_labels.height() << ',' << m << ','
         << r.em_iterations << ',' << t.features << ',' << t.clustering << ',' << t.regions << ',' << t.merging << ','
         << t.total << '\n';
      pixels.push_back(m);
      times.push_back(t.clustering);
    }
  write_text(a.csv, os.str());
  // Least-squares c in t = c * M for the clustering stage.
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < pixels.size(); ++i) num += pixels[i] * times[i], den += pixels[i] * pixels[i];
  const double c = num / den;
  double worst = 0.0;
  for (std::size_t i = 0; i < pixels.size(); ++i) worst = std::max(worst, std::abs(times[i] / (c * pixels[i]) - 1.0));
  std::cerr << "clustering fit t = " << c * 1e6 << " us * M, worst relative deviation " << worst << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Unsupervised RGB-D segmentation: joint color-spatial-directional clustering and region merging"};
  app.require_subcommand(1);

  SegmentArgs seg;
  auto* s = app.add_subcommand("segment", "segment one frame or a dataset directory");
  add_pipeline_flags(s, seg.o);
  s->add_option("--color", seg.color, "8-bit RGB PNG");
  s->add_option("--depth", seg.depth, "16-bit depth PNG");
  s->add_option("--intrinsics", seg.intrinsics, "intrinsics JSON (default: 525/525/319.5/239.5, mm depth)");
  s->add_option("--dataset", seg.dataset, "directory of {name}_color.png/{name}_depth.png + intrinsics.json");
  s->add_option("--name", seg.name, "output prefix for a single frame");
  s->add_option("--out-dir", seg.out_dir, "output directory")->required();
  s->add_option("--jobs", seg.jobs, "frames processed in parallel")->check(CLI::PositiveNumber);

  EvaluateArgs ev;
  auto* e = app.add_subcommand("evaluate", "score label maps against ground truth");
  e->add_option("--test", ev.test_dir, "directory of {name}<suffix>.png")->required();
  e->add_option("--gt", ev.gt_dir, "directory of {name}_gt.png")->required();
  e->add_option("--suffix", ev.suffix, "test file suffix (default _final; _jcsd for clustering only)");
  e->add_option("--csv", ev.csv, "per-image CSV (default stdout)");
  e->add_option("--histogram", ev.histogram, "GTRC histogram CSV");
  e->add_option("--summary", ev.summary, "mean/median JSON (default stderr)");
  e->add_option("--jobs", ev.jobs, "images scored in parallel")->check(CLI::PositiveNumber);

  SweepArgs sw;
  auto* w = app.add_subcommand("sweep", "one parameter over several values, evaluated on a dataset");
  add_pipeline_flags(w, sw.o);
  w->add_option("--param", sw.param, "k, kappa_p, th_b, th_d or th_r")->required();
  w->add_option("--values", sw.values, "comma separated values")->required()->delimiter(',');
  w->add_option("--dataset", sw.dataset, "dataset directory with ground truth")->required();
  w->add_option("--output", sw.output, "which map to score")->check(CLI::IsMember({"jcsd", "final"}));
  w->add_option("--csv", sw.csv, "table CSV (default stdout)");
  w->add_option("--jobs", sw.jobs, "runs in parallel")->check(CLI::PositiveNumber);

  SynthArgs sy;
  auto* y = app.add_subcommand("synth", "render a synthetic RGB-D frame with ground truth");
  y->add_option("--preset", sy.preset, "built-in scene")->check(CLI::IsMember({"box"}));
  y->add_option("--scene", sy.scene, "scene JSON instead of a preset");
  y->add_option("--width", sy.width, "preset width");
  y->add_option("--height", sy.height, "preset height");
  y->add_option("--seed", sy.seed, "noise seed");
  y->add_option("--out-dir", sy.out_dir, "output directory");
  y->add_option("--name", sy.name, "frame name");
  y->add_flag("--print", sy.print, "print the scene JSON and exit");

  BenchArgs be;
  auto* b = app.add_subcommand("bench", "stage timings over a resolution ladder");
  add_pipeline_flags(b, be.o);
  b->add_option("--dataset", be.dataset, "dataset directory (default: synthetic box scene)");
  b->add_option("--scales", be.scales, "downsampling factors")->delimiter(',')->check(CLI::IsMember({1, 2, 4, 8}));
  b->add_option("--width", be.width, "synthetic frame width");
  b->add_option("--height", be.height, "synthetic frame height");
  b->add_option("--csv", be.csv, "timings CSV (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : kExitInput;
  }

  try {
    if (s->parsed()) return run_segment(seg);
    if (e->parsed()) return run_evaluate(ev);
    if (w->parsed()) return run_sweep(sw);
    if (y->parsed()) return run_synth(sy);
    if (b->parsed()) return run_bench(be);
  } catch (const NumericalError& err) {
    std::cerr << "numerical error: " << err.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kExitInput;
  }
  return 0;
}
