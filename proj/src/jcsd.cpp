#include "jcsdrm/jcsd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

namespace jcsdrm {
namespace {

constexpr double kLog4Pi = 2.5310242469692907;

struct Accumulator {
  double w = 0.0;
  Eigen::Vector3d sc = Eigen::Vector3d::Zero();
  Eigen::Vector3d sp = Eigen::Vector3d::Zero();
  Eigen::Matrix3d scc = Eigen::Matrix3d::Zero();
  Eigen::Matrix3d spp = Eigen::Matrix3d::Zero();
  DirectionalExpParams sn;

  explicit Accumulator(DirectionalFamily family) : sn(directional_zero(family)) {}

  void add(const FeatureVector& x, double wt) {
    w += wt;
    sc += wt * x.color;
    sp += wt * x.pos;
    scc.noalias() += wt * x.color * x.color.transpose();
    spp.noalias() += wt * x.pos * x.pos.transpose();
    directional_accumulate(sn, x.normal, wt);
  }

  ComponentParams finish(double total, const ClusterConfig& cfg) const {
    ComponentParams c;
    c.pi = w / total;
    c.color = {sc / w, -scc / w};
    c.pos = {sp / w, -spp / w};
    c.normal = directional_scale(sn, 1.0 / w);
    apply_variance_floors(c, cfg);
    return c;
  }
};

void floor_block(GaussianExpParams<3>& eta, double floor) {
  Eigen::Matrix3d sigma = -eta.Phi - eta.phi * eta.phi.transpose();
  sigma = 0.5 * (sigma + sigma.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(sigma);
  Eigen::Vector3d ev = eig.eigenvalues();
  if (ev.minCoeff() >= floor) return;
  ev = ev.cwiseMax(floor);
  sigma = eig.eigenvectors() * ev.asDiagonal() * eig.eigenvectors().transpose();
  eta.Phi = -(sigma + eta.phi * eta.phi.transpose());
}

void normalize_priors(std::vector<ComponentParams>& comps) {
  for (auto& c : comps) c.pi = std::max(c.pi, kPriorFloor);
  double total = 0.0;
  for (const auto& c : comps) total += c.pi;
  for (auto& c : comps) c.pi /= total;
}

// k-means feature space: min-max normalized color and position plus the raw normal.
struct KPoint {
  Eigen::Vector3d c, p, n;
};

struct KCenter {
  Eigen::Vector3d c = Eigen::Vector3d::Zero();
  Eigen::Vector3d p = Eigen::Vector3d::Zero();
  Eigen::Vector3d n = Eigen::Vector3d::UnitZ();
};

double kdistance(const KPoint& x, const KCenter& m, bool axial) {
  const double cosine = x.n.dot(m.n);
  return (x.c - m.c).norm() + (x.p - m.p).norm() + (1.0 - (axial ? std::abs(cosine) : cosine));
}

std::vector<KPoint> normalize_for_kmeans(const std::vector<FeatureVector>& data) {
  Eigen::Matrix<double, 6, 1> lo = Eigen::Matrix<double, 6, 1>::Constant(std::numeric_limits<double>::infinity());
  Eigen::Matrix<double, 6, 1> hi = -lo;
  for (const auto& x : data) {
    Eigen::Matrix<double, 6, 1> v;
    v << x.color, x.pos;
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  std::vector<KPoint> out(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    Eigen::Matrix<double, 6, 1> v;
    v << data[i].color, data[i].pos;
    for (int d = 0; d < 6; ++d) v(d) = hi(d) > lo(d) ? (v(d) - lo(d)) / (hi(d) - lo(d)) : 0.0;
    out[i] = {v.head<3>(), v.tail<3>(), data[i].normal};
  }
  return out;
}

Eigen::Vector3d mean_direction(const Eigen::Vector3d& sum, const Eigen::Matrix3d& scatter, bool axial) {
  if (axial) {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(scatter);
    return eig.eigenvectors().col(2).normalized();
  }
  const double n = sum.norm();
  return n > 0.0 ? Eigen::Vector3d(sum / n) : Eigen::Vector3d::UnitZ();
}

std::vector<KCenter> compute_centers(const std::vector<KPoint>& pts, const std::vector<int>& labels, int k, bool axial,
                                     std::vector<int>& counts) {
  std::vector<KCenter> centers(k);
  std::vector<Eigen::Vector3d> nsum(k, Eigen::Vector3d::Zero());
  std::vector<Eigen::Matrix3d> nscatter(k, Eigen::Matrix3d::Zero());
  counts.assign(k, 0);
  for (auto& m : centers) m.c.setZero(), m.p.setZero();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const int j = labels[i];
    centers[j].c += pts[i].c;
    centers[j].p += pts[i].p;
    nsum[j] += pts[i].n;
    if (axial) nscatter[j].noalias() += pts[i].n * pts[i].n.transpose();
    ++counts[j];
  }
  for (int j = 0; j < k; ++j) {
    if (counts[j] == 0) continue;
    centers[j].c /= counts[j];
    centers[j].p /= counts[j];
    centers[j].n = mean_direction(nsum[j], nscatter[j], axial);
  }
  return centers;
}

// Gives every empty cluster a member: the point farthest from its center, or half
// of the largest cluster when all points sit on their centers.
bool fill_empty_clusters(const std::vector<KPoint>& pts, std::vector<int>& labels, const std::vector<KCenter>& centers,
                         std::vector<int>& counts, bool axial) {
  bool changed = false;
  for (int j = 0; j < static_cast<int>(counts.size()); ++j) {
    if (counts[j] > 0) continue;
    changed = true;
    int best = -1;
    double best_d = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (counts[labels[i]] < 2) continue;
      const double d = kdistance(pts[i], centers[labels[i]], axial);
      if (d > best_d) best_d = d, best = static_cast<int>(i);
    }
    if (best >= 0) {
      --counts[labels[best]];
      labels[best] = j;
      counts[j] = 1;
      continue;
    }
    const int donor = static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
    if (counts[donor] < 2) throw std::invalid_argument("k-means: fewer points than clusters");
    int seen = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (labels[i] != donor) continue;
      if (seen++ % 2 == 1) {
        labels[i] = j;
        --counts[donor];
        ++counts[j];
      }
    }
  }
  return changed;
}

std::vector<FeatureVector> subsample(const std::vector<FeatureVector>& data, int stride) {
  if (stride <= 1) return data;
  std::vector<FeatureVector> out;
  out.reserve(data.size() / stride + 1);
  for (std::size_t i = 0; i < data.size(); i += stride) out.push_back(data[i]);
  return out;
}

}  // namespace

void ClusterConfig::validate() const {
  if (k < 1) throw std::invalid_argument("k must be positive");
  if (max_iters < 1) throw std::invalid_argument("max_iters must be positive");
  if (!(nllh_tol > 0.0)) throw std::invalid_argument("nllh_tol must be positive");
  if (stride < 1) throw std::invalid_argument("stride must be >= 1");
  if (!(color_var_floor > 0.0) || !(pos_var_floor > 0.0)) throw std::invalid_argument("variance floors must be positive");
}

double ComponentScorer::log_likelihood(const FeatureVector& x) const {
  return color.log_density(x.color) + pos.log_density(x.pos) +
         directional_log_kernel(x.normal, normal, normal_log_normalizer) - kLog4Pi;
}

ComponentScorer make_scorer(const ComponentParams& c) {
  ComponentScorer s;
  s.log_pi = std::log(c.pi);
  s.color = gaussian_natural(gaussian_source(c.color));
  s.pos = gaussian_natural(gaussian_source(c.pos));
  s.normal = directional_source(c.normal);
  s.normal_log_normalizer = directional_log_normalizer(s.normal);
  return s;
}

std::vector<ComponentScorer> make_scorers(const std::vector<ComponentParams>& comps) {
  std::vector<ComponentScorer> out;
  out.reserve(comps.size());
  for (const auto& c : comps) out.push_back(make_scorer(c));
  return out;
}

double log_likelihood(const FeatureVector& x, const ComponentParams& c) { return make_scorer(c).log_likelihood(x); }

double combined_divergence(const ComponentParams& a, const ComponentParams& b) {
  return gaussian_divergence(a.color, b.color) + gaussian_divergence(a.pos, b.pos) +
         directional_divergence(a.normal, b.normal);
}

double point_divergence(const FeatureVector& x, const ComponentScorer& c) { return -c.log_likelihood(x); }

ComponentParams observation_params(const FeatureVector& x, DirectionalFamily family) {
  return {1.0, gaussian_stats<3>(x.color), gaussian_stats<3>(x.pos), directional_stats(x.normal, family)};
}

void apply_variance_floors(ComponentParams& c, const ClusterConfig& cfg) {
  floor_block(c.color, cfg.color_var_floor);
  floor_block(c.pos, cfg.pos_var_floor);
}

ComponentParams estimate_component(const std::vector<FeatureVector>& data, const std::vector<double>& weights,
                                   const ClusterConfig& cfg) {
  if (weights.size() != data.size()) throw std::invalid_argument("weights and data differ in length");
  Accumulator acc(cfg.directional_family);
  for (std::size_t i = 0; i < data.size(); ++i)
    if (weights[i] != 0.0) acc.add(data[i], weights[i]);
  if (!(acc.w > 0.0)) throw std::invalid_argument("component has no weight");
  return acc.finish(static_cast<double>(data.size()), cfg);
}

KMeansResult kmeans_init(const std::vector<FeatureVector>& data, const ClusterConfig& cfg) {
  cfg.validate();
  const int k = cfg.k;
  const std::size_t m = data.size();
  if (m < static_cast<std::size_t>(k)) throw std::invalid_argument("k-means: fewer points than clusters");
  const bool axial = cfg.directional_family == DirectionalFamily::Watson;
  const std::vector<KPoint> pts = normalize_for_kmeans(data);

  // k-means++ seeding on the combined distance.
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  auto pick_uniform = [&]() { return std::min(m - 1, static_cast<std::size_t>(u01(rng) * static_cast<double>(m))); };
  std::vector<KCenter> centers;
  centers.reserve(k);
  auto as_center = [&](std::size_t i) { return KCenter{pts[i].c, pts[i].p, pts[i].n}; };
  centers.push_back(as_center(pick_uniform()));
  std::vector<double> d2(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double d = kdistance(pts[i], centers[0], axial);
    d2[i] = d * d;
  }
  while (static_cast<int>(centers.size()) < k) {
    const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
    std::size_t pick = 0;
    if (total > 0.0) {
      const double target = u01(rng) * total;
      double run = 0.0;
      pick = m - 1;
      for (std::size_t i = 0; i < m; ++i) {
        run += d2[i];
        if (run > target && d2[i] > 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = pick_uniform();
    }
    centers.push_back(as_center(pick));
    for (std::size_t i = 0; i < m; ++i) {
      const double d = kdistance(pts[i], centers.back(), axial);
      d2[i] = std::min(d2[i], d * d);
    }
  }

  std::vector<int> labels(m, -1);
  std::vector<int> counts;
  for (int it = 0; it < cfg.kmeans_iters; ++it) {
    bool changed = false;
    for (std::size_t i = 0; i < m; ++i) {
      int best = labels[i] >= 0 ? labels[i] : 0;
      double best_d = kdistance(pts[i], centers[best], axial);
      for (int j = 0; j < k; ++j) {
        const double d = kdistance(pts[i], centers[j], axial);
        if (d < best_d) best_d = d, best = j;
      }
      if (best != labels[i]) labels[i] = best, changed = true;
    }
    centers = compute_centers(pts, labels, k, axial, counts);
    if (fill_empty_clusters(pts, labels, centers, counts, axial)) {
      centers = compute_centers(pts, labels, k, axial, counts);
      changed = true;
    }
    if (!changed) break;
  }

  KMeansResult res;
  res.labels = labels;
  std::vector<Accumulator> accs(k, Accumulator(cfg.directional_family));
  for (std::size_t i = 0; i < m; ++i) accs[labels[i]].add(data[i], 1.0);
  for (int j = 0; j < k; ++j) res.components.push_back(accs[j].finish(static_cast<double>(m), cfg));
  normalize_priors(res.components);
  return res;
}

EStepResult e_step(const std::vector<FeatureVector>& data, const std::vector<ComponentParams>& comps) {
  EStepResult res;
  const EStepResult r = e_step(data, comps, res.posteriors);
  res.nllh = r.nllh;
  res.underflow_rows = r.underflow_rows;
  return res;
}

EStepResult e_step(const std::vector<FeatureVector>& data, const std::vector<ComponentParams>& comps,
                   Posteriors& posteriors) {
  const std::vector<ComponentScorer> scorers = make_scorers(comps);
  const int k = static_cast<int>(scorers.size());
  const auto m = static_cast<Eigen::Index>(data.size());
  EStepResult res;
  posteriors.resize(m, k);
  std::vector<double> logp(k);
  for (Eigen::Index i = 0; i < m; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < k; ++j) {
      logp[j] = scorers[j].log_pi + scorers[j].log_likelihood(data[i]);
      if (logp[j] > mx) mx = logp[j];
    }
    if (!std::isfinite(mx)) {
      posteriors.row(i).setConstant(1.0 / k);
      ++res.underflow_rows;
      continue;
    }
    double sum = 0.0;
    for (int j = 0; j < k; ++j) {
      logp[j] = std::exp(logp[j] - mx);
      sum += logp[j];
    }
    for (int j = 0; j < k; ++j) posteriors(i, j) = logp[j] / sum;
    res.nllh -= mx + std::log(sum);
  }
  return res;
}

MStepResult m_step(const std::vector<FeatureVector>& data, const Posteriors& posteriors, const ClusterConfig& cfg) {
  const int k = static_cast<int>(posteriors.cols());
  const std::size_t m = data.size();
  if (static_cast<std::size_t>(posteriors.rows()) != m) throw std::invalid_argument("posterior rows differ from data");
  std::vector<Accumulator> accs(k, Accumulator(cfg.directional_family));
  for (std::size_t i = 0; i < m; ++i)
    for (int j = 0; j < k; ++j) {
      const double p = posteriors(static_cast<Eigen::Index>(i), j);
      if (p > 0.0) accs[j].add(data[i], p);
    }

  const double starved = kPriorFloor * static_cast<double>(m);
  MStepResult res;
  res.components.resize(k);
  std::vector<int> healthy, hungry;
  for (int j = 0; j < k; ++j) {
    if (accs[j].w < starved || !(accs[j].w > 0.0)) {
      hungry.push_back(j);
    } else {
      res.components[j] = accs[j].finish(static_cast<double>(m), cfg);
      healthy.push_back(j);
    }
  }
  if (healthy.empty()) throw NumericalError("EM: every component lost its support");

  if (!hungry.empty()) {
    // Re-seed at the worst-explained points, borrowing the spread of the component they fall in.
    std::vector<ComponentParams> good;
    for (int j : healthy) good.push_back(res.components[j]);
    const auto scorers = make_scorers(good);
    std::vector<std::pair<double, int>> worst;  // (divergence to assigned, assigned)
    worst.reserve(m);
    for (std::size_t i = 0; i < m; ++i) {
      double best = std::numeric_limits<double>::infinity();
      int arg = 0;
      for (int g = 0; g < static_cast<int>(scorers.size()); ++g) {
        const double d = point_divergence(data[i], scorers[g]);
        if (d < best) best = d, arg = g;
      }
      worst.emplace_back(best, arg);
    }
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return worst[a].first > worst[b].first; });
    for (std::size_t h = 0; h < hungry.size(); ++h) {
      const std::size_t i = order[h % m];
      const ComponentParams& donor = good[worst[i].second];
      const ComponentScorer& ds = scorers[worst[i].second];
      const Eigen::Matrix3d cc = gaussian_covariance(donor.color);
      const Eigen::Matrix3d pc = gaussian_covariance(donor.pos);
      ComponentParams c;
      c.pi = kPriorFloor;
      c.color = gaussian_expectation<3>({data[i].color, cc});
      c.pos = gaussian_expectation<3>({data[i].pos, pc});
      c.normal = directional_expectation({ds.normal.family, data[i].normal, ds.normal.kappa});
      res.components[hungry[h]] = c;
      ++res.reseeded;
    }
  }
  normalize_priors(res.components);
  return res;
}

MixtureState run_em(const std::vector<FeatureVector>& data, const ClusterConfig& cfg) {
  cfg.validate();
  const std::vector<FeatureVector> sub = subsample(data, cfg.stride);
  MixtureState state;
  state.components = kmeans_init(sub, cfg).components;
  for (int it = 0; it < cfg.max_iters; ++it) {
    const EStepResult e = e_step(sub, state.components, state.posteriors);
    state.underflow_rows += e.underflow_rows;
    state.nllh_trace.push_back(e.nllh);
    const auto n = state.nllh_trace.size();
    if (n >= 2 && std::abs(state.nllh_trace[n - 1] - state.nllh_trace[n - 2]) < cfg.nllh_tol) {
      state.converged = true;
      break;
    }
    MStepResult mres = m_step(sub, state.posteriors, cfg);
    state.components = std::move(mres.components);
    state.reseeded += mres.reseeded;
    ++state.iterations;
  }
  return state;
}

std::vector<int> hard_assign(const std::vector<FeatureVector>& data, const std::vector<ComponentParams>& comps) {
  const auto scorers = make_scorers(comps);
  std::vector<int> labels(data.size(), 0);
  for (std::size_t i = 0; i < data.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (int j = 0; j < static_cast<int>(scorers.size()); ++j) {
      const double d = point_divergence(data[i], scorers[j]);
      if (d < best) best = d, labels[i] = j;
    }
  }
  return labels;
}

}  // namespace jcsdrm
