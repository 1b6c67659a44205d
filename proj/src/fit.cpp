// Copyright 2026 The skylm Authors.
// SPDX-License-Identifier: Apache-2.0

#include "skylm/fit.h"

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <string>

#include "skylm/envmap.h"
#include "skylm/random.h"

namespace skylm {
namespace {

// Positive parameters whose range starts at 0 are floored at this fraction
// of their maximum in log space.
constexpr double kLogFloor = 1e-12;

constexpr double kInitTurbidity = 3.0;
constexpr double kInitBeta = 40.0;
constexpr double kInitKappa = 0.1;

using Point = std::vector<double>;
using Channels = std::array<std::vector<double>, 3>;

double log_lo(const ParamRange& r) { return std::log(std::max(r.min, r.max * kLogFloor)); }
double log_hi(const ParamRange& r) { return std::log(r.max); }

// T applied to each channel of env.
Channels render_channels(const TransportMatrix& transport, const EnvMap& env) {
  if (env.width() != transport.env_width() || env.height() != transport.env_height())
    throw DimensionMismatch("panorama size does not match the transport matrix");
  const std::size_t n = transport.cols();
  std::vector<float> planes(3 * n);
  const auto e = env.data();
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t c = 0; c < 3; ++c) planes[c * n + j] = e[3 * j + c];
  const std::span<const float> in[3] = {{planes.data(), n}, {planes.data() + n, n}, {planes.data() + 2 * n, n}};
  std::vector<double> out(3 * transport.rows());
  transport.apply_scalar_batch(in, out);
  Channels ch;
  for (std::size_t c = 0; c < 3; ++c)
    ch[c].assign(out.begin() + c * transport.rows(), out.begin() + (c + 1) * transport.rows());
  return ch;
}

// Renders of the scalar sky and sun shapes for many shape parameters at once.
class ShapeRenderer {
 public:
  ShapeRenderer(const TransportMatrix& transport, const SunPosition& sun, const EnvRenderOptions& opts)
      : transport_(&transport), sampler_(sun, transport.env_height(), opts) {}

  void render(const std::vector<double>& turbidities, const std::vector<std::pair<double, double>>& lobes,
              std::vector<std::vector<double>>& sky, std::vector<std::vector<double>>& sun) const {
    const std::size_t n = sampler_.texel_count();
    const std::size_t k = turbidities.size() + lobes.size();
    std::vector<float> shapes(k * n);
    std::vector<std::span<const float>> in;
    for (std::size_t i = 0; i < k; ++i) {
      const std::span<float> dst(shapes.data() + i * n, n);
      if (i < turbidities.size()) {
        sampler_.sky_shape(turbidities[i], dst);
      } else {
        const auto& [beta, kappa] = lobes[i - turbidities.size()];
        sampler_.sun_shape(beta, kappa, dst);
      }
      in.push_back(dst);
    }
    const std::size_t rows = transport_->rows();
    std::vector<double> out(k * rows);
    transport_->apply_scalar_batch(in, out);
    sky.resize(turbidities.size());
    sun.resize(lobes.size());
    for (std::size_t i = 0; i < k; ++i) {
      auto& dst = i < turbidities.size() ? sky[i] : sun[i - turbidities.size()];
      dst.assign(out.begin() + i * rows, out.begin() + (i + 1) * rows);
    }
  }

  const ComponentSampler& sampler() const { return sampler_; }

 private:
  const TransportMatrix* transport_;
  ComponentSampler sampler_;
};

// Nonlinear least squares in a box; residuals come in batches so that
// several Jacobian columns share one pass over the transport matrix.
class Problem {
 public:
  virtual ~Problem() = default;
  virtual void residuals(const std::vector<Point>& xs, std::vector<std::vector<double>>& out) const = 0;

  Point lo, hi;

  int dim() const { return static_cast<int>(lo.size()); }
  void project(Point& x) const {
    for (int i = 0; i < dim(); ++i) x[i] = std::clamp(x[i], lo[i], hi[i]);
  }
  std::vector<double> residual(const Point& x) const {
    std::vector<std::vector<double>> r;
    residuals({x}, r);
    return std::move(r[0]);
  }
};

double sum_sq(const std::vector<double>& r) {
  double s = 0.0;
  for (double v : r) s += v * v;
  return s;
}

// Sorted unique values; index lookup by exact equality.
template <typename K>
class KeySet {
 public:
  std::size_t add(const K& k) { return map_.emplace(k, map_.size()).first->second; }
  std::size_t at(const K& k) const { return map_.at(k); }
  std::vector<K> keys() const {
    std::vector<K> out(map_.size());
    for (const auto& [k, i] : map_) out[i] = k;
    return out;
  }

 private:
  std::map<K, std::size_t> map_;
};

// x = [log w_sky (3), log t, log w_sun (3), log beta, log kappa].
class LMProblem : public Problem {
 public:
  LMProblem(const TransportMatrix& transport, const EnvMap& p_hdr, const SunPosition& sun,
            const FitConfig& cfg)
      : shapes_(transport, sun, cfg.render), ranges_(cfg.ranges) {
    hdr_ = render_channels(transport, p_hdr);
    ldr_ = render_channels(transport, clipped_ldr(p_hdr));
    for (int c = 0; c < 3; ++c) {
      sun_[c] = hdr_[c];
      for (std::size_t p = 0; p < sun_[c].size(); ++p) sun_[c][p] -= ldr_[c][p];
    }
    const double n = 3.0 * static_cast<double>(transport.rows());
    s_lm_ = std::sqrt(cfg.weights.lm_render / n);
    s_sky_ = std::sqrt(cfg.weights.sky_render / n);
    s_sun_ = std::sqrt(cfg.weights.sun_render / n);

    const auto& r = cfg.ranges;
    // Turbidity stays one difference step inside its range so that the
    // central differences never leave the model's domain.
    const double h = cfg.gradient_step;
    lo = {log_lo(r.w_sky[0]), log_lo(r.w_sky[1]), log_lo(r.w_sky[2]), std::log(r.turbidity.min) + h,
          log_lo(r.w_sun[0]), log_lo(r.w_sun[1]), log_lo(r.w_sun[2]), log_lo(r.beta), log_lo(r.kappa)};
    hi = {log_hi(r.w_sky[0]), log_hi(r.w_sky[1]), log_hi(r.w_sky[2]), std::log(r.turbidity.max) - h,
          log_hi(r.w_sun[0]), log_hi(r.w_sun[1]), log_hi(r.w_sun[2]), log_hi(r.beta), log_hi(r.kappa)};
  }

  void residuals(const std::vector<Point>& xs, std::vector<std::vector<double>>& out) const override {
    KeySet<double> ts;
    KeySet<std::pair<double, double>> lobes;
    for (const Point& x : xs) {
      ts.add(std::exp(x[3]));
      lobes.add({std::exp(x[7]), std::exp(x[8])});
    }
    std::vector<std::vector<double>> sky, sun;
    shapes_.render(ts.keys(), lobes.keys(), sky, sun);

    const std::size_t rows = hdr_[0].size();
    out.resize(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const Point& x = xs[i];
      const auto& s = sky[ts.at(std::exp(x[3]))];
      const auto& u = sun[lobes.at({std::exp(x[7]), std::exp(x[8])})];
      auto& r = out[i];
      r.resize(9 * rows);
      for (int c = 0; c < 3; ++c) {
        const double a = std::exp(x[c]);
        const double b = std::exp(x[4 + c]);
        double* r_lm = r.data() + c * rows;
        double* r_sky = r.data() + (3 + c) * rows;
        double* r_sun = r.data() + (6 + c) * rows;
        for (std::size_t p = 0; p < rows; ++p) {
          const double sky_p = a * s[p];
          const double sun_p = b * u[p];
          r_lm[p] = s_lm_ * (hdr_[c][p] - sky_p - sun_p);
          r_sky[p] = s_sky_ * (ldr_[c][p] - sky_p);
          r_sun[p] = s_sun_ * (sun_[c][p] - sun_p);
        }
      }
    }
  }

  Point to_x(const LMParams& q) const {
    const auto lg = [](double v, double lo_v) { return v > 0.0 ? std::log(v) : lo_v; };
    Point x(9);
    for (int c = 0; c < 3; ++c) {
      x[c] = lg(q.sky.w_sky[c], lo[c]);
      x[4 + c] = lg(q.sun.w_sun[c], lo[4 + c]);
    }
    x[3] = std::log(q.sky.turbidity);
    x[7] = lg(q.sun.beta, lo[7]);
    x[8] = lg(q.sun.kappa, lo[8]);
    return x;
  }

  LMParams to_params(const Point& x, const SunPosition& sun_pos) const {
    LMParams q;
    q.sun_pos = sun_pos;
    for (int c = 0; c < 3; ++c) {
      q.sky.w_sky[c] = std::clamp(std::exp(x[c]), ranges_.w_sky[c].min, ranges_.w_sky[c].max);
      q.sun.w_sun[c] = std::clamp(std::exp(x[4 + c]), ranges_.w_sun[c].min, ranges_.w_sun[c].max);
    }
    q.sky.turbidity = std::clamp(std::exp(x[3]), ranges_.turbidity.min, ranges_.turbidity.max);
    q.sun.beta = std::clamp(std::exp(x[7]), ranges_.beta.min, ranges_.beta.max);
    q.sun.kappa = std::clamp(std::exp(x[8]), ranges_.kappa.min, ranges_.kappa.max);
    return q;
  }

  const ShapeRenderer& shapes() const { return shapes_; }
  const Channels& hdr() const { return hdr_; }
  const Channels& ldr() const { return ldr_; }
  const Channels& sun_target() const { return sun_; }
  double s_lm() const { return s_lm_; }
  double s_sky() const { return s_sky_; }
  double s_sun() const { return s_sun_; }

 private:
  ShapeRenderer shapes_;
  ParamRanges ranges_;
  Channels hdr_, ldr_, sun_;
  double s_lm_ = 0.0, s_sky_ = 0.0, s_sun_ = 0.0;
};

// x = [log w_sky (3), log t]; residual = T P_ldr - T f_sky.
class SkyProblem : public Problem {
 public:
  SkyProblem(const TransportMatrix& transport, const EnvMap& p_ldr, const SunPosition& sun,
             const FitConfig& cfg)
      : shapes_(transport, sun, cfg.render) {
    ldr_ = render_channels(transport, p_ldr);
    scale_ = std::sqrt(1.0 / (3.0 * static_cast<double>(transport.rows())));
    const auto& r = cfg.ranges;
    const double h = cfg.gradient_step;
    lo = {log_lo(r.w_sky[0]), log_lo(r.w_sky[1]), log_lo(r.w_sky[2]), std::log(r.turbidity.min) + h};
    hi = {log_hi(r.w_sky[0]), log_hi(r.w_sky[1]), log_hi(r.w_sky[2]), std::log(r.turbidity.max) - h};
  }

  void residuals(const std::vector<Point>& xs, std::vector<std::vector<double>>& out) const override {
    KeySet<double> ts;
    for (const Point& x : xs) ts.add(std::exp(x[3]));
    std::vector<std::vector<double>> sky, sun;
    shapes_.render(ts.keys(), {}, sky, sun);
    const std::size_t rows = ldr_[0].size();
    out.resize(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const auto& s = sky[ts.at(std::exp(xs[i][3]))];
      out[i].resize(3 * rows);
      for (int c = 0; c < 3; ++c) {
        const double a = std::exp(xs[i][c]);
        for (std::size_t p = 0; p < rows; ++p) out[i][c * rows + p] = scale_ * (ldr_[c][p] - a * s[p]);
      }
    }
  }

  const ShapeRenderer& shapes() const { return shapes_; }
  const Channels& ldr() const { return ldr_; }

 private:
  ShapeRenderer shapes_;
  Channels ldr_;
  double scale_ = 0.0;
};

// Central differences of the residual vector, all 2 * dim points in one batch.
std::vector<std::vector<double>> jacobian_columns(const Problem& problem, const Point& x, double h) {
  std::vector<Point> pts;
  for (int i = 0; i < problem.dim(); ++i) {
    Point a = x, b = x;
    a[i] += h;
    b[i] -= h;
    pts.push_back(std::move(a));
    pts.push_back(std::move(b));
  }
  std::vector<std::vector<double>> r;
  problem.residuals(pts, r);
  std::vector<std::vector<double>> cols(problem.dim());
  for (int i = 0; i < problem.dim(); ++i) {
    const auto& a = r[2 * i];
    const auto& b = r[2 * i + 1];
    cols[i].resize(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) cols[i][k] = (a[k] - b[k]) / (2.0 * h);
  }
  return cols;
}

struct Outcome {
  Point x;
  double cost = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> history;
};

// Levenberg-Marquardt with Marquardt diagonal scaling. Variables sitting on a
// bound whose descent direction points outward are frozen for the step.
Outcome levenberg_marquardt(const Problem& problem, Point x, const FitConfig& cfg) {
  problem.project(x);
  std::vector<double> r = problem.residual(x);
  Outcome out;
  out.cost = sum_sq(r);
  out.history.push_back(out.cost);
  const int n = problem.dim();
  double mu = -1.0;

  for (int iter = 1; iter <= cfg.max_iterations; ++iter) {
    out.iterations = iter;
    if (out.cost == 0.0) {
      out.converged = true;
      break;
    }
    const auto cols = jacobian_columns(problem, x, cfg.gradient_step);
    Eigen::MatrixXd a(n, n);
    Eigen::VectorXd g(n);
    for (int i = 0; i < n; ++i) {
      double gi = 0.0;
      for (std::size_t k = 0; k < r.size(); ++k) gi += cols[i][k] * r[k];
      g(i) = gi;
      for (int j = 0; j <= i; ++j) {
        double aij = 0.0;
        for (std::size_t k = 0; k < r.size(); ++k) aij += cols[i][k] * cols[j][k];
        a(i, j) = a(j, i) = aij;
      }
    }
    double max_diag = 0.0;
    for (int i = 0; i < n; ++i) max_diag = std::max(max_diag, a(i, i));
    if (max_diag == 0.0) {
      out.converged = true;
      break;
    }
    if (mu < 0.0) mu = 1e-3;

    std::vector<int> free;
    for (int i = 0; i < n; ++i) {
      const bool at_lo = x[i] <= problem.lo[i] && g(i) > 0.0;
      const bool at_hi = x[i] >= problem.hi[i] && g(i) < 0.0;
      if (!at_lo && !at_hi) free.push_back(i);
    }
    if (free.empty()) {
      out.converged = true;
      break;
    }

    bool accepted = false;
    for (int attempt = 0; attempt < 30 && !accepted; ++attempt) {
      const int m = static_cast<int>(free.size());
      Eigen::MatrixXd am(m, m);
      Eigen::VectorXd gm(m);
      for (int i = 0; i < m; ++i) {
        gm(i) = g(free[i]);
        for (int j = 0; j < m; ++j) am(i, j) = a(free[i], free[j]);
        am(i, i) += mu * std::max(a(free[i], free[i]), 1e-9 * max_diag);
      }
      const Eigen::VectorXd step = am.ldlt().solve(-gm);
      Point xn = x;
      for (int i = 0; i < m; ++i) xn[free[i]] += step(i);
      problem.project(xn);
      if (xn == x) break;
      std::vector<double> rn = problem.residual(xn);
      const double cn = sum_sq(rn);
      if (cn < out.cost) {
        const double rel = (out.cost - cn) / out.cost;
        x = std::move(xn);
        r = std::move(rn);
        out.cost = cn;
        out.history.push_back(cn);
        mu = std::max(mu / 3.0, 1e-12);
        accepted = true;
        if (rel < cfg.tolerance) out.converged = true;
      } else {
        mu *= 4.0;
      }
    }
    // No decrease at any damping: a minimum at the resolution of the
    // finite differences.
    if (!accepted) out.converged = true;
    if (out.converged) break;
  }
  out.x = std::move(x);
  return out;
}

Outcome best_of_restarts(const Problem& problem, const Point& x0, const FitConfig& cfg, int& winner) {
  Outcome best;
  winner = -1;
  for (int k = 0; k < cfg.restarts; ++k) {
    Point start = x0;
    if (k > 0) {
      Rng rng(derive_seed(cfg.seed, "restart/" + std::to_string(k)));
      for (double& v : start) v += cfg.restart_sigma * rng.normal();
    }
    Outcome o = levenberg_marquardt(problem, start, cfg);
    if (winner < 0 || o.cost < best.cost) {
      best = std::move(o);
      winner = k;
    }
  }
  return best;
}

// Mean over texels in the top quarter of rows that are below saturation in
// the clipped map. Falls back to all upper-hemisphere texels.
Rgb zenith_mean(const EnvMap& values, const EnvMap& clipped) {
  const auto mean_over = [&](int rows) {
    Rgb sum;
    double count = 0.0;
    for (int v = 0; v < rows; ++v)
      for (int u = 0; u < values.width(); ++u) {
        const Rgb c = clipped.texel(u, v);
        if (std::max({c.r, c.g, c.b}) >= 1.0) continue;
        sum = sum + values.texel(u, v);
        count += 1.0;
      }
    return std::make_pair(sum, count);
  };
  auto [sum, count] = mean_over(std::max(1, values.height() / 4));
  if (count == 0.0) std::tie(sum, count) = mean_over(values.height() / 2);
  return count == 0.0 ? Rgb{} : sum * (1.0 / count);
}

// Mean HDR value over texels saturated in the clipped map, or zero.
Rgb saturated_mean(const EnvMap& p_hdr, const EnvMap& clipped) {
  Rgb sum;
  double count = 0.0;
  for (int v = 0; v < p_hdr.height() / 2; ++v)
    for (int u = 0; u < p_hdr.width(); ++u) {
      const Rgb c = clipped.texel(u, v);
      if (std::max({c.r, c.g, c.b}) < 1.0) continue;
      sum = sum + p_hdr.texel(u, v);
      count += 1.0;
    }
  return count == 0.0 ? Rgb{} : sum * (1.0 / count);
}

// Non-negative least squares for min |t - a s - b u|^2 over a, b >= 0.
std::pair<double, double> nnls2(double ss, double su, double uu, double ts, double tu) {
  const double det = ss * uu - su * su;
  if (det > 1e-12 * ss * uu) {
    const double a = (ts * uu - tu * su) / det;
    const double b = (tu * ss - ts * su) / det;
    if (a >= 0.0 && b >= 0.0) return {a, b};
  }
  const double a_only = ss > 0.0 ? std::max(0.0, ts / ss) : 0.0;
  const double b_only = uu > 0.0 ? std::max(0.0, tu / uu) : 0.0;
  // Compare the two one-sided solutions by their residual reduction.
  return a_only * ts >= b_only * tu ? std::make_pair(a_only, 0.0) : std::make_pair(0.0, b_only);
}

bool is_zero(const EnvMap& env) {
  for (float v : env.data())
    if (v != 0.0f) return false;
  return true;
}

void set_final_losses(FitResult& res, const TransportMatrix& transport, const EnvMap& target_hdr,
                      const EnvMap& target_ldr, const FitConfig& cfg) {
  const RenderLosses l = lm_render_losses(transport, target_hdr, target_ldr, res.params, cfg.render);
  res.losses.sky = l.sky;
  res.losses.sun = l.sun;
  res.losses.lm = l.lm;
  res.losses.pano_l1 = pano_l1(target_hdr, render_envmap(res.params, target_hdr.height(), cfg.render));
}

// Parameters floored in log space are reported as the range minimum.
void snap_floors(LMParams& q, const ParamRanges& r) {
  const auto snap = [](double& v, const ParamRange& range) {
    if (range.min == 0.0 && v <= range.max * kLogFloor * (1.0 + 1e-9)) v = 0.0;
  };
  for (int c = 0; c < 3; ++c) {
    snap(q.sky.w_sky[c], r.w_sky[c]);
    snap(q.sun.w_sun[c], r.w_sun[c]);
  }
  snap(q.sun.beta, r.beta);
}

}  // namespace

void FitConfig::validate() const {
  if (max_iterations < 1) throw InvalidInput("max_iterations must be >= 1");
  if (!(tolerance > 0.0)) throw InvalidInput("tolerance must be > 0");
  if (restarts < 1) throw InvalidInput("restarts must be >= 1");
  if (!(restart_sigma >= 0.0)) throw InvalidInput("restart_sigma must be >= 0");
  if (!(gradient_step > 0.0)) throw InvalidInput("gradient_step must be > 0");
  weights.validate();
  ranges.validate();
  if (ranges.turbidity.min < kTurbidityMin || ranges.turbidity.max > kTurbidityMax)
    throw InvalidInput("turbidity range must lie within [1.7, 20]");
  if (ranges.kappa.min <= 0.0) throw InvalidInput("kappa range must be positive");
  for (const ParamRange* r : {&ranges.beta, &ranges.w_sun[0], &ranges.w_sun[1], &ranges.w_sun[2],
                              &ranges.w_sky[0], &ranges.w_sky[1], &ranges.w_sky[2]})
    if (r->min < 0.0 || r->max <= 0.0) throw InvalidInput("weight and beta ranges must be non-negative");
}

const char* to_string(SunSource source) {
  switch (source) {
    case SunSource::kHint:
      return "hint";
    case SunSource::kDetected:
      return "detected";
    case SunSource::kGridSearch:
      return "grid_search";
  }
  return "unknown";
}

EnvMap clipped_ldr(const EnvMap& p_hdr) { return ldr_to_linear(ldr_simulate(p_hdr, 1.0)); }

std::optional<SunPosition> detect_sun_hdr(const EnvMap& p_hdr) { return detect_sun(ldr_simulate(p_hdr, 1.0)); }

SunPosition grid_search_sun(const EnvMap& p_hdr, const EnvRenderOptions& opts) {
  const int h = p_hdr.height();
  const int w = p_hdr.width();
  const std::size_t upper = static_cast<std::size_t>(w) * (h / 2);
  std::vector<double> weight(upper);
  for (std::size_t j = 0; j < upper; ++j) weight[j] = texel_solid_angle(static_cast<int>(j / w), w, h);

  double best = std::numeric_limits<double>::infinity();
  SunPosition best_pos;
  for (int e = 0; e < kSunElevationBins; ++e) {
    for (int a = 0; a < kSunAzimuthBins; ++a) {
      const SunPosition cand = bin_center(e, a);
      const ComponentSampler sampler(cand, h, opts);
      const std::vector<float> s = sampler.sky_shape(kInitTurbidity);
      const std::vector<float> u = sampler.sun_shape(kInitBeta, kInitKappa);
      double sse = 0.0;
      for (int c = 0; c < 3; ++c) {
        double ss = 0, su = 0, uu = 0, ts = 0, tu = 0, tt = 0;
        for (std::size_t j = 0; j < upper; ++j) {
          const double t = p_hdr.data()[3 * j + c];
          const double wj = weight[j];
          ss += wj * s[j] * s[j];
          su += wj * s[j] * u[j];
          uu += wj * u[j] * u[j];
          ts += wj * t * s[j];
          tu += wj * t * u[j];
          tt += wj * t * t;
        }
        const auto [ka, kb] = nnls2(ss, su, uu, ts, tu);
        sse += tt - 2.0 * (ka * ts + kb * tu) + ka * ka * ss + 2.0 * ka * kb * su + kb * kb * uu;
      }
      if (sse < best) {
        best = sse;
        best_pos = cand;
      }
    }
  }
  return best_pos;
}

struct LMObjective::Impl {
  Impl(const TransportMatrix& t, const EnvMap& p, const SunPosition& s, const FitConfig& c)
      : problem(t, p, s, c), sun_pos(s), cfg(c) {}
  LMProblem problem;
  SunPosition sun_pos;
  FitConfig cfg;
};

LMObjective::LMObjective(const TransportMatrix& transport, const EnvMap& p_hdr, const SunPosition& sun_pos,
                         const FitConfig& cfg) {
  cfg.validate();
  impl_ = std::make_shared<const Impl>(transport, p_hdr, sun_pos, cfg);
}

std::vector<double> LMObjective::to_x(const LMParams& q) const { return impl_->problem.to_x(q); }

LMParams LMObjective::to_params(const std::vector<double>& x) const {
  return impl_->problem.to_params(x, impl_->sun_pos);
}

void LMObjective::project(std::vector<double>& x) const { impl_->problem.project(x); }

double LMObjective::value(const std::vector<double>& x) const { return sum_sq(impl_->problem.residual(x)); }

std::vector<double> LMObjective::gradient(const std::vector<double>& x) const {
  const auto cols = jacobian_columns(impl_->problem, x, impl_->cfg.gradient_step);
  const std::vector<double> r = impl_->problem.residual(x);
  std::vector<double> g(kDim, 0.0);
  for (int i = 0; i < kDim; ++i)
    for (std::size_t k = 0; k < r.size(); ++k) g[i] += 2.0 * cols[i][k] * r[k];
  return g;
}

FitResult fit_lm_to_hdr(const TransportMatrix& transport, const EnvMap& p_hdr,
                        const std::optional<SunPosition>& sun_hint, const FitConfig& cfg) {
  cfg.validate();
  if (p_hdr.width() != transport.env_width() || p_hdr.height() != transport.env_height())
    throw DimensionMismatch("panorama size does not match the transport matrix");

  FitResult res;
  const EnvMap clipped = clipped_ldr(p_hdr);
  SunPosition sun_pos;
  if (sun_hint) {
    sun_pos = *sun_hint;
    res.sun_source = SunSource::kHint;
  } else if (auto d = detect_sun(ldr_simulate(p_hdr, 1.0))) {
    sun_pos = *d;
    res.sun_source = SunSource::kDetected;
  } else if (is_zero(p_hdr)) {
    res.sun_source = SunSource::kGridSearch;
  } else {
    sun_pos = grid_search_sun(p_hdr, cfg.render);
    res.sun_source = SunSource::kGridSearch;
  }

  res.params.sun_pos = sun_pos;
  res.params.sky.turbidity = std::clamp(kInitTurbidity, cfg.ranges.turbidity.min, cfg.ranges.turbidity.max);
  res.params.sun.beta = std::clamp(kInitBeta, cfg.ranges.beta.min, cfg.ranges.beta.max);
  res.params.sun.kappa = std::clamp(kInitKappa, cfg.ranges.kappa.min, cfg.ranges.kappa.max);
  if (is_zero(p_hdr)) {
    res.converged = true;
    res.history = {0.0};
    return res;
  }

  const LMProblem problem(transport, p_hdr, sun_pos, cfg);

  // Anchors from the panorama itself, then the weights that best explain
  // the render at the anchor shape parameters.
  LMParams init = res.params;
  init.sky.w_sky = zenith_mean(p_hdr, clipped);
  init.sun.w_sun = saturated_mean(p_hdr, clipped);
  {
    std::vector<std::vector<double>> s, u;
    problem.shapes().render({init.sky.turbidity}, {{init.sun.beta, init.sun.kappa}}, s, u);
    const double l2 = problem.s_lm() * problem.s_lm();
    const double k2 = problem.s_sky() * problem.s_sky();
    const double n2 = problem.s_sun() * problem.s_sun();
    for (int c = 0; c < 3; ++c) {
      double ss = 0, su = 0, uu = 0, ts = 0, tu = 0;
      for (std::size_t p = 0; p < s[0].size(); ++p) {
        ss += (l2 + k2) * s[0][p] * s[0][p];
        su += l2 * s[0][p] * u[0][p];
        uu += (l2 + n2) * u[0][p] * u[0][p];
        ts += l2 * problem.hdr()[c][p] * s[0][p] + k2 * problem.ldr()[c][p] * s[0][p];
        tu += l2 * problem.hdr()[c][p] * u[0][p] + n2 * problem.sun_target()[c][p] * u[0][p];
      }
      // Without a saturated region the sun stays off: its log weight sits on
      // the floor where the gradient vanishes.
      if (init.sun.w_sun[c] == 0.0) {
        if (ss > 0.0 && ts > 0.0) init.sky.w_sky[c] = ts / ss;
        continue;
      }
      const auto [a, b] = nnls2(ss, su, uu, ts, tu);
      if (a > 0.0) init.sky.w_sky[c] = a;
      if (b > 0.0) init.sun.w_sun[c] = b;
    }
  }

  int winner = 0;
  Outcome best = best_of_restarts(problem, problem.to_x(init), cfg, winner);
  res.params = problem.to_params(best.x, sun_pos);
  snap_floors(res.params, cfg.ranges);
  res.objective = best.cost;
  res.iterations = best.iterations;
  res.restart = winner;
  res.converged = best.converged;
  res.history = std::move(best.history);
  set_final_losses(res, transport, p_hdr, clipped, cfg);
  return res;
}

FitResult fit_sky_to_ldr(const TransportMatrix& transport, const LdrImage& p_ldr, const SunPosition& sun_pos,
                         const FitConfig& cfg) {
  cfg.validate();
  const EnvMap ldr = ldr_to_linear(p_ldr);
  if (ldr.width() != transport.env_width() || ldr.height() != transport.env_height())
    throw DimensionMismatch("panorama size does not match the transport matrix");

  FitResult res;
  res.sun_source = SunSource::kHint;
  res.params.sun_pos = sun_pos;
  res.params.sky.turbidity = std::clamp(kInitTurbidity, cfg.ranges.turbidity.min, cfg.ranges.turbidity.max);
  // Sun weights stay zero; shape values are placeholders inside their ranges.
  res.params.sun.beta = std::clamp(kInitBeta, cfg.ranges.beta.min, cfg.ranges.beta.max);
  res.params.sun.kappa = std::clamp(kInitKappa, cfg.ranges.kappa.min, cfg.ranges.kappa.max);
  if (is_zero(ldr)) {
    res.converged = true;
    res.history = {0.0};
    return res;
  }

  const SkyProblem problem(transport, ldr, sun_pos, cfg);
  Point x0(4);
  {
    std::vector<std::vector<double>> s, u;
    problem.shapes().render({res.params.sky.turbidity}, {}, s, u);
    const Rgb anchor = zenith_mean(ldr, ldr);
    for (int c = 0; c < 3; ++c) {
      double ss = 0, ts = 0;
      for (std::size_t p = 0; p < s[0].size(); ++p) {
        ss += s[0][p] * s[0][p];
        ts += problem.ldr()[c][p] * s[0][p];
      }
      const double a = ss > 0.0 && ts > 0.0 ? ts / ss : anchor[c];
      x0[c] = a > 0.0 ? std::log(a) : problem.lo[c];
    }
    x0[3] = std::log(res.params.sky.turbidity);
  }

  int winner = 0;
  Outcome best = best_of_restarts(problem, x0, cfg, winner);
  for (int c = 0; c < 3; ++c)
    res.params.sky.w_sky[c] = std::clamp(std::exp(best.x[c]), cfg.ranges.w_sky[c].min, cfg.ranges.w_sky[c].max);
  res.params.sky.turbidity =
      std::clamp(std::exp(best.x[3]), cfg.ranges.turbidity.min, cfg.ranges.turbidity.max);
  snap_floors(res.params, cfg.ranges);
  res.objective = best.cost;
  res.iterations = best.iterations;
  res.restart = winner;
  res.converged = best.converged;
  res.history = std::move(best.history);
  set_final_losses(res, transport, ldr, ldr, cfg);
  return res;
}

}  // namespace skylm
