#include "madprops/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

namespace madprops {

EssResult ess(const Vec& series) {
  const std::size_t n = series.size();
  if (n < 10) throw ParameterError("ess: need at least 10 points");
  double mean = 0.0;
  for (double x : series) mean += x;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double x : series) var += (x - mean) * (x - mean);
  var /= static_cast<double>(n);
  if (var <= 0.0) return {static_cast<double>(n), true, false};

  auto acov = [&](std::size_t k) {
    double s = 0.0;
    for (std::size_t i = 0; i + k < n; ++i)
      s += (series[i] - mean) * (series[i + k] - mean);
    return s / static_cast<double>(n);
  };

  // Geyer: sum adjacent autocovariance pairs while positive, enforcing a
  // monotone non-increasing sequence.
  double tau_sum = 0.0;  // sum of Gamma_m
  double prev = std::numeric_limits<double>::infinity();
  const std::size_t max_pair = n / 2;
  for (std::size_t m = 0; m < max_pair; ++m) {
    const std::size_t k = 2 * m;
    double gamma = acov(k) + (k + 1 < n ? acov(k + 1) : 0.0);
    if (gamma <= 0.0) break;
    gamma = std::min(gamma, prev);
    prev = gamma;
    tau_sum += gamma;
  }
  const double tau = std::max(-1.0 + 2.0 * tau_sum / var, 1e-12);
  double value = static_cast<double>(n) / tau;
  bool capped = false;
  if (value > static_cast<double>(n)) {
    value = static_cast<double>(n);
    capped = true;
  }
  return {value, false, capped};
}

namespace {

double ks_from_sorted(const Vec& a, const Vec& b) {
  double d = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    // Consume ties on both sides before reading the CDF gap.
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == v) ++i;
    while (j < b.size() && b[j] == v) ++j;
    const double fa = static_cast<double>(i) / a.size();
    const double fb = static_cast<double>(j) / b.size();
    d = std::max(d, std::fabs(fa - fb));
  }
  return d;
}

}  // namespace

double ks_distance(const Vec& a, const Vec& b) {
  if (a.size() < 10 || b.size() < 10) throw ParameterError("ks_distance: need n >= 10");
  Vec sa = a, sb = b;
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  return ks_from_sorted(sa, sb);
}

double ks_distance_cdf(const Vec& a, const std::function<double(double)>& cdf) {
  if (a.size() < 10) throw ParameterError("ks_distance: need n >= 10");
  Vec sa = a;
  std::sort(sa.begin(), sa.end());
  double d = 0.0;
  const double n = static_cast<double>(sa.size());
  for (std::size_t i = 0; i < sa.size(); ++i) {
    const double f = cdf(sa[i]);
    d = std::max(d, std::fabs(static_cast<double>(i + 1) / n - f));
    d = std::max(d, std::fabs(f - static_cast<double>(i) / n));
  }
  return d;
}

double ks_pvalue(double statistic, std::size_t n1, std::size_t n2) {
  const double ne = static_cast<double>(n1) * static_cast<double>(n2) /
                    (static_cast<double>(n1) + static_cast<double>(n2));
  const double sqrt_ne = std::sqrt(ne);
  const double lambda = (sqrt_ne + 0.12 + 0.11 / sqrt_ne) * statistic;
  double p = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    p += 2.0 * sign * term;
    sign = -sign;
    if (term < 1e-12) break;
  }
  return std::clamp(p, 0.0, 1.0);
}

double tv_estimate(const Vec& a, const Vec& b, int bins) {
  if (a.empty() || b.empty()) throw ParameterError("tv_estimate: empty sample");
  const std::size_t n_min = std::min(a.size(), b.size());
  if (bins < 1 || static_cast<double>(bins) > std::sqrt(static_cast<double>(n_min)) + 1.0)
    throw ParameterError("tv_estimate: bin count must be at most sqrt(n)");
  double lo = std::min(*std::min_element(a.begin(), a.end()),
                       *std::min_element(b.begin(), b.end()));
  double hi = std::max(*std::max_element(a.begin(), a.end()),
                       *std::max_element(b.begin(), b.end()));
  if (lo == hi) return 0.0;
  const double width = (hi - lo) / bins;
  Vec pa(static_cast<std::size_t>(bins), 0.0), pb(static_cast<std::size_t>(bins), 0.0);
  auto fill = [&](const Vec& x, Vec& hist) {
    for (double v : x) {
      int idx = static_cast<int>((v - lo) / width);
      idx = std::clamp(idx, 0, bins - 1);
      hist[static_cast<std::size_t>(idx)] += 1.0;
    }
    for (auto& h : hist) h /= static_cast<double>(x.size());
  };
  fill(a, pa);
  fill(b, pb);
  double tv = 0.0;
  for (int i = 0; i < bins; ++i)
    tv += std::fabs(pa[static_cast<std::size_t>(i)] - pb[static_cast<std::size_t>(i)]);
  return 0.5 * tv;
}

double order_stat_mse(const std::vector<Vec>& chain_samples,
                      const std::vector<Vec>& exact_samples) {
  const std::size_t n = std::min(chain_samples.size(), exact_samples.size());
  if (n == 0) throw ParameterError("order_stat_mse: empty input");
  const std::size_t d = chain_samples.front().size();
  if (exact_samples.front().size() != d)
    throw ParameterError("order_stat_mse: dimension mismatch");
  double total = 0.0;
  Vec ca(n), ea(n);
  for (std::size_t dim = 0; dim < d; ++dim) {
    for (std::size_t i = 0; i < n; ++i) {
      ca[i] = chain_samples[i][dim];
      ea[i] = exact_samples[i][dim];
    }
    std::sort(ca.begin(), ca.end());
    std::sort(ea.begin(), ea.end());
    double mse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double gap = ca[i] - ea[i];
      mse += gap * gap;
    }
    total += mse / static_cast<double>(n);
  }
  return total / static_cast<double>(d);
}

namespace {

struct GridLevel {
  double z;
  std::array<double, 6> moments;
  double sup_density;
  double boundary_fraction;  // mass in the outermost cell ring
};

GridLevel grid_level(const TargetModel& target, const Box2D& box, int n) {
  const double hx = (box.x_hi - box.x_lo) / n;
  const double hy = (box.y_hi - box.y_lo) / n;
  double z = 0.0, sup = 0.0, boundary = 0.0;
  std::array<double, 6> raw{};
  Vec q(2);
  for (int i = 0; i < n; ++i) {
    q[0] = box.x_lo + (i + 0.5) * hx;
    for (int j = 0; j < n; ++j) {
      q[1] = box.y_lo + (j + 0.5) * hy;
      const double dens = std::exp(-target.phi(q));
      sup = std::max(sup, dens);
      z += dens;
      if (i == 0 || j == 0 || i == n - 1 || j == n - 1)
        boundary = std::max(boundary, dens);
      const double r = std::sqrt(q[0] * q[0] + q[1] * q[1]);
      double rk = 1.0;
      for (int k = 0; k < 6; ++k) {
        rk *= r;
        raw[static_cast<std::size_t>(k)] += dens * rk;
      }
    }
  }
  GridLevel lvl;
  lvl.z = z * hx * hy;
  for (int k = 0; k < 6; ++k) lvl.moments[static_cast<std::size_t>(k)] = raw[static_cast<std::size_t>(k)] / z;
  lvl.sup_density = sup;
  lvl.boundary_fraction = boundary / sup;
  return lvl;
}

bool levels_agree(const GridLevel& a, const GridLevel& b, double tol) {
  auto rel = [](double x, double y) {
    return std::fabs(x - y) / std::max({std::fabs(x), std::fabs(y), 1e-300});
  };
  if (rel(a.z, b.z) > tol) return false;
  for (int k = 0; k < 6; ++k)
    if (rel(a.moments[static_cast<std::size_t>(k)], b.moments[static_cast<std::size_t>(k)]) > tol)
      return false;
  return true;
}

}  // namespace

GridOracle grid_oracle_build(const TargetModel& target, const Box2D& box,
                             int start_resolution, double tolerance,
                             int max_levels) {
  if (target.dim != 2) throw ParameterError("grid oracle: 2-D targets only");
  if (start_resolution < 4) throw ParameterError("grid oracle: resolution too small");
  GridOracle oracle;
  oracle.box = box;
  oracle.tolerance = tolerance;

  int n = start_resolution;
  GridLevel prev = grid_level(target, box, n);
  for (int level = 1; level < max_levels; ++level) {
    n *= 2;
    GridLevel cur = grid_level(target, box, n);
    oracle.levels = level + 1;
    if (levels_agree(prev, cur, tolerance)) {
      // A box that truncates the target has non-negligible density on the
      // outermost cell ring; refuse to report such values as converged.
      if (cur.boundary_fraction > 0.3)
        throw NumericError("grid oracle: mass escapes the box");
      oracle.converged = true;
      oracle.final_resolution = n;
      oracle.z = cur.z;
      oracle.moments = cur.moments;
      oracle.sup_density = cur.sup_density;
      return oracle;
    }
    prev = cur;
  }
  throw NumericError("grid oracle failed to converge; box too small or tolerance too tight");
}

GridOracle grid_oracle_build_cached(const TargetModel& target, const Box2D& box,
                                    int start_resolution, double tolerance,
                                    const std::string& cache_dir) {
  namespace fs = std::filesystem;
  char buf[256];
  std::snprintf(buf, sizeof(buf), "oracle_%s_%g_%g_%g_%g_tol%g_v1.json",
                target.id.c_str(), box.x_lo, box.x_hi, box.y_lo, box.y_hi, tolerance);
  const fs::path path = fs::path(cache_dir) / buf;
  if (fs::exists(path)) {
    std::ifstream in(path);
    nlohmann::json j;
    in >> j;
    GridOracle oracle;
    oracle.box = box;
    oracle.tolerance = tolerance;
    oracle.levels = j.at("levels").get<int>();
    oracle.final_resolution = j.at("final_resolution").get<int>();
    oracle.z = j.at("z").get<double>();
    auto m = j.at("moments").get<std::vector<double>>();
    for (int k = 0; k < 6; ++k) oracle.moments[static_cast<std::size_t>(k)] = m[static_cast<std::size_t>(k)];
    oracle.sup_density = j.at("sup_density").get<double>();
    oracle.converged = j.at("converged").get<bool>();
    return oracle;
  }
  GridOracle oracle = grid_oracle_build(target, box, start_resolution, tolerance);
  fs::create_directories(fs::path(cache_dir));
  nlohmann::json j;
  j["levels"] = oracle.levels;
  j["final_resolution"] = oracle.final_resolution;
  j["z"] = oracle.z;
  j["moments"] = std::vector<double>(oracle.moments.begin(), oracle.moments.end());
  j["sup_density"] = oracle.sup_density;
  j["converged"] = oracle.converged;
  std::ofstream out(path);
  out << j.dump(2) << "\n";
  return oracle;
}

GridSampler::GridSampler(const TargetModel& target, const Box2D& box, int resolution)
    : box_(box), n_(resolution) {
  if (target.dim != 2) throw ParameterError("grid sampler: 2-D targets only");
  const double hx = (box.x_hi - box.x_lo) / n_;
  const double hy = (box.y_hi - box.y_lo) / n_;
  row_cdf_.assign(static_cast<std::size_t>(n_), 0.0);
  cell_cdf_.assign(static_cast<std::size_t>(n_), Vec(static_cast<std::size_t>(n_), 0.0));
  Vec q(2);
  double total = 0.0;
  for (int i = 0; i < n_; ++i) {
    q[0] = box.x_lo + (i + 0.5) * hx;
    double row = 0.0;
    for (int j = 0; j < n_; ++j) {
      q[1] = box.y_lo + (j + 0.5) * hy;
      row += std::exp(-target.phi(q));
      cell_cdf_[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = row;
    }
    for (auto& c : cell_cdf_[static_cast<std::size_t>(i)]) c /= row;
    total += row;
    row_cdf_[static_cast<std::size_t>(i)] = total;
  }
  for (auto& c : row_cdf_) c /= total;
}

Vec GridSampler::draw(RngStream& rng) const {
  const double ux = rng.uniform();
  const auto row_it = std::lower_bound(row_cdf_.begin(), row_cdf_.end(), ux);
  const int i = static_cast<int>(std::min<std::ptrdiff_t>(
      row_it - row_cdf_.begin(), n_ - 1));
  const Vec& col = cell_cdf_[static_cast<std::size_t>(i)];
  const double uy = rng.uniform();
  const auto col_it = std::lower_bound(col.begin(), col.end(), uy);
  const int j = static_cast<int>(std::min<std::ptrdiff_t>(col_it - col.begin(), n_ - 1));
  const double hx = (box_.x_hi - box_.x_lo) / n_;
  const double hy = (box_.y_hi - box_.y_lo) / n_;
  return {box_.x_lo + (i + rng.uniform()) * hx, box_.y_lo + (j + rng.uniform()) * hy};
}

double banana_loss(const std::vector<Vec>& samples, const GridOracle& oracle) {
  if (!oracle.converged) throw NumericError("banana_loss: oracle not converged");
  if (samples.size() < 100) throw ParameterError("banana_loss: need at least 100 samples");
  std::array<double, 6> emp{};
  for (const auto& q : samples) {
    const double r = norm2(q);
    double rk = 1.0;
    for (int k = 0; k < 6; ++k) {
      rk *= r;
      emp[static_cast<std::size_t>(k)] += rk;
    }
  }
  double loss = 0.0;
  for (int k = 0; k < 6; ++k) {
    const double m_hat = emp[static_cast<std::size_t>(k)] / static_cast<double>(samples.size());
    const double m = oracle.moments[static_cast<std::size_t>(k)];
    loss += std::fabs(m_hat - m) / m;
  }
  return loss;
}

double loglog_slope(const Vec& p_values, const Vec& distances) {
  if (p_values.size() != distances.size() || p_values.size() < 2)
    throw ParameterError("loglog_slope: need at least two points");
  const std::size_t n = p_values.size();
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = std::log(p_values[i]);
    const double y = std::log(std::max(distances[i], 1e-300));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace madprops
