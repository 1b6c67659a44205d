// Copyright 2026 The skylm Authors.
// SPDX-License-Identifier: Apache-2.0

#include "skylm/json_io.h"

#include <fstream>
#include <set>
#include <sstream>

namespace skylm {
namespace {

[[noreturn]] void fail(const std::string& key, const std::string& what) {
  throw ValidationError("\"" + key + "\": " + what);
}

const Json& field(const Json& j, const std::string& key) {
  if (!j.is_object()) fail(key, "expected an enclosing object");
  const auto it = j.find(key);
  if (it == j.end()) fail(key, "missing");
  return *it;
}

double number(const Json& v, const std::string& key) {
  if (!v.is_number()) fail(key, "expected a number");
  return v.get<double>();
}

std::int64_t integer(const Json& v, const std::string& key) {
  if (!v.is_number_integer()) fail(key, "expected an integer");
  return v.get<std::int64_t>();
}

Rgb rgb(const Json& v, const std::string& key) {
  if (!v.is_array() || v.size() != 3) fail(key, "expected an [r, g, b] array");
  return {number(v[0], key), number(v[1], key), number(v[2], key)};
}

Json rgb_json(const Rgb& c) { return Json::array({c.r, c.g, c.b}); }

void reject_unknown(const Json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) fail(where, "expected an object");
  const std::set<std::string> keys(allowed.begin(), allowed.end());
  for (const auto& [k, v] : j.items())
    if (!keys.count(k)) fail(where + "." + k, "unknown key");
}

ParamRange range(const Json& v, const std::string& key) {
  if (!v.is_array() || v.size() != 2) fail(key, "expected a [min, max] array");
  return {number(v[0], key), number(v[1], key)};
}

// Either one [min, max] for all channels or three of them.
std::array<ParamRange, 3> channel_ranges(const Json& v, const std::string& key) {
  if (v.is_array() && v.size() == 3 && v[0].is_array()) {
    return {range(v[0], key), range(v[1], key), range(v[2], key)};
  }
  const ParamRange r = range(v, key);
  return {r, r, r};
}

template <typename F>
void rethrow_invalid(F&& f) {
  try {
    f();
  } catch (const InvalidInput& e) {
    throw ValidationError(e.what());
  }
}

}  // namespace

Json to_json(const LMParams& q) {
  Json j;
  j["sun_zenith"] = q.sun_pos.zenith_angle;
  j["sun_azimuth"] = q.sun_pos.azimuth;
  j["w_sun"] = rgb_json(q.sun.w_sun);
  j["beta"] = q.sun.beta;
  j["kappa"] = q.sun.kappa;
  j["w_sky"] = rgb_json(q.sky.w_sky);
  j["turbidity"] = q.sky.turbidity;
  return j;
}

LMParams lm_params_from_json(const Json& j) {
  reject_unknown(j, {"sun_zenith", "sun_azimuth", "w_sun", "beta", "kappa", "w_sky", "turbidity"}, "params");
  LMParams q;
  rethrow_invalid([&] {
    q.sun_pos = SunPosition::make(number(field(j, "sun_zenith"), "sun_zenith"),
                                  number(field(j, "sun_azimuth"), "sun_azimuth"));
    q.sun.w_sun = rgb(field(j, "w_sun"), "w_sun");
    q.sun.beta = number(field(j, "beta"), "beta");
    q.sun.kappa = number(field(j, "kappa"), "kappa");
    q.sky.w_sky = rgb(field(j, "w_sky"), "w_sky");
    q.sky.turbidity = number(field(j, "turbidity"), "turbidity");
    validate(q);
  });
  return q;
}

Json to_json(const ParamRanges& r) {
  Json j;
  const auto pr = [](const ParamRange& x) { return Json::array({x.min, x.max}); };
  j["beta"] = pr(r.beta);
  j["kappa"] = pr(r.kappa);
  j["turbidity"] = pr(r.turbidity);
  j["w_sun"] = Json::array({pr(r.w_sun[0]), pr(r.w_sun[1]), pr(r.w_sun[2])});
  j["w_sky"] = Json::array({pr(r.w_sky[0]), pr(r.w_sky[1]), pr(r.w_sky[2])});
  return j;
}

ParamRanges param_ranges_from_json(const Json& j, ParamRanges r) {
  reject_unknown(j, {"beta", "kappa", "turbidity", "w_sun", "w_sky"}, "ranges");
  if (j.contains("beta")) r.beta = range(j["beta"], "ranges.beta");
  if (j.contains("kappa")) r.kappa = range(j["kappa"], "ranges.kappa");
  if (j.contains("turbidity")) r.turbidity = range(j["turbidity"], "ranges.turbidity");
  if (j.contains("w_sun")) r.w_sun = channel_ranges(j["w_sun"], "ranges.w_sun");
  if (j.contains("w_sky")) r.w_sky = channel_ranges(j["w_sky"], "ranges.w_sky");
  rethrow_invalid([&] { r.validate(); });
  return r;
}

Json to_json(const LossWeights& w) {
  Json j;
  j["beta"] = w.beta;
  j["kappa"] = w.kappa;
  j["w_sun"] = w.w_sun;
  j["turbidity"] = w.turbidity;
  j["w_sky"] = w.w_sky;
  j["sky_render"] = w.sky_render;
  j["sun_render"] = w.sun_render;
  j["lm_render"] = w.lm_render;
  return j;
}

LossWeights loss_weights_from_json(const Json& j, LossWeights w) {
  reject_unknown(j, {"beta", "kappa", "w_sun", "turbidity", "w_sky", "sky_render", "sun_render", "lm_render"},
                 "weights");
  const auto set = [&](const char* k, double& dst) {
    if (j.contains(k)) dst = number(j[k], std::string("weights.") + k);
  };
  set("beta", w.beta);
  set("kappa", w.kappa);
  set("w_sun", w.w_sun);
  set("turbidity", w.turbidity);
  set("w_sky", w.w_sky);
  set("sky_render", w.sky_render);
  set("sun_render", w.sun_render);
  set("lm_render", w.lm_render);
  rethrow_invalid([&] { w.validate(); });
  return w;
}

Json to_json(const SoftnessConfig& s) {
  Json j;
  j["band_rows"] = s.band_rows;
  j["bins"] = s.bins;
  j["gradient_range"] = s.gradient_range;
  j["kernel_sigma_bins"] = s.kernel_sigma_bins;
  j["eps"] = s.eps;
  j["cut_low"] = s.cut_low;
  j["cut_high"] = s.cut_high;
  return j;
}

SoftnessConfig softness_config_from_json(const Json& j, SoftnessConfig s) {
  reject_unknown(j, {"band_rows", "bins", "gradient_range", "kernel_sigma_bins", "eps", "cut_low", "cut_high"},
                 "softness");
  if (j.contains("band_rows")) s.band_rows = static_cast<int>(integer(j["band_rows"], "softness.band_rows"));
  if (j.contains("bins")) s.bins = static_cast<int>(integer(j["bins"], "softness.bins"));
  const auto set = [&](const char* k, double& dst) {
    if (j.contains(k)) dst = number(j[k], std::string("softness.") + k);
  };
  set("gradient_range", s.gradient_range);
  set("kernel_sigma_bins", s.kernel_sigma_bins);
  set("eps", s.eps);
  set("cut_low", s.cut_low);
  set("cut_high", s.cut_high);
  rethrow_invalid([&] { s.validate(); });
  return s;
}

FitConfig fit_config_from_json(const Json& j, FitConfig f) {
  reject_unknown(j, {"max_iterations", "tolerance", "restarts", "seed", "restart_sigma", "gradient_step",
                     "sun_supersampling", "weights", "ranges"},
                 "fit");
  if (j.contains("max_iterations"))
    f.max_iterations = static_cast<int>(integer(j["max_iterations"], "fit.max_iterations"));
  if (j.contains("tolerance")) f.tolerance = number(j["tolerance"], "fit.tolerance");
  if (j.contains("restarts")) f.restarts = static_cast<int>(integer(j["restarts"], "fit.restarts"));
  if (j.contains("seed")) f.seed = static_cast<std::uint64_t>(integer(j["seed"], "fit.seed"));
  if (j.contains("restart_sigma")) f.restart_sigma = number(j["restart_sigma"], "fit.restart_sigma");
  if (j.contains("gradient_step")) f.gradient_step = number(j["gradient_step"], "fit.gradient_step");
  if (j.contains("sun_supersampling"))
    f.render.sun_supersampling = static_cast<int>(integer(j["sun_supersampling"], "fit.sun_supersampling"));
  if (j.contains("weights")) f.weights = loss_weights_from_json(j["weights"], f.weights);
  if (j.contains("ranges")) f.ranges = param_ranges_from_json(j["ranges"], f.ranges);
  rethrow_invalid([&] { f.validate(); });
  return f;
}

Json to_json(const CropSpec& c) {
  Json j;
  j["azimuth"] = c.azimuth;
  j["elevation"] = c.elevation;
  j["fov_horizontal"] = c.fov_horizontal;
  j["width"] = c.width;
  j["height"] = c.height;
  return j;
}

Json to_json(const std::vector<CropSpec>& crops) {
  Json j = Json::array();
  for (const CropSpec& c : crops) j.push_back(to_json(c));
  return j;
}

std::vector<CropSpec> crop_specs_from_json(const Json& j) {
  if (!j.is_array()) fail("crops", "expected an array");
  std::vector<CropSpec> out;
  for (const Json& e : j) {
    reject_unknown(e, {"azimuth", "elevation", "fov_horizontal", "width", "height"}, "crop");
    CropSpec c;
    c.azimuth = number(field(e, "azimuth"), "azimuth");
    c.elevation = number(field(e, "elevation"), "elevation");
    c.fov_horizontal = number(field(e, "fov_horizontal"), "fov_horizontal");
    c.width = static_cast<int>(integer(field(e, "width"), "width"));
    c.height = static_cast<int>(integer(field(e, "height"), "height"));
    rethrow_invalid([&] { validate(c); });
    out.push_back(c);
  }
  return out;
}

PipelineConfig pipeline_config_from_json(const Json& j, PipelineConfig p) {
  reject_unknown(j, {"seed", "env_height", "probe_size", "cache_dir", "fit", "ranges", "weights", "softness"},
                 "config");
  if (j.contains("seed")) p.seed = static_cast<std::uint64_t>(integer(j["seed"], "seed"));
  if (j.contains("env_height")) p.env_height = static_cast<int>(integer(j["env_height"], "env_height"));
  if (j.contains("probe_size")) p.probe_size = static_cast<int>(integer(j["probe_size"], "probe_size"));
  if (j.contains("cache_dir")) {
    if (!j["cache_dir"].is_string()) fail("cache_dir", "expected a string");
    p.cache_dir = j["cache_dir"].get<std::string>();
  }
  if (j.contains("fit")) p.fit = fit_config_from_json(j["fit"], p.fit);
  if (j.contains("ranges")) p.fit.ranges = param_ranges_from_json(j["ranges"], p.fit.ranges);
  if (j.contains("weights")) p.fit.weights = loss_weights_from_json(j["weights"], p.fit.weights);
  if (j.contains("softness")) p.softness = softness_config_from_json(j["softness"], p.softness);
  if (p.env_height < 8 || p.env_height % 2 != 0) fail("env_height", "must be even and >= 8");
  if (p.probe_size < 8) fail("probe_size", "must be >= 8");
  return p;
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << j.dump(2) << "\n";
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace skylm
