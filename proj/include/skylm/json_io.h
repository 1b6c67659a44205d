// Copyright 2026 The skylm Authors.
// SPDX-License-Identifier: Apache-2.0

// JSON interchange for parameters, configuration and crop sets. Every reader
// throws ValidationError with the offending key on a schema violation.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "skylm/envmap.h"
#include "skylm/fit.h"
#include "skylm/lm_sky.h"
#include "skylm/losses.h"
#include "skylm/metrics.h"

namespace skylm {

using Json = nlohmann::ordered_json;

// {"sun_zenith", "sun_azimuth", "w_sun": [r, g, b], "beta", "kappa",
//  "w_sky": [r, g, b], "turbidity"}. Reading also validates the values.
Json to_json(const LMParams& q);
LMParams lm_params_from_json(const Json& j);

Json to_json(const ParamRanges& r);
Json to_json(const LossWeights& w);
Json to_json(const SoftnessConfig& s);
Json to_json(const CropSpec& c);
Json to_json(const std::vector<CropSpec>& crops);
std::vector<CropSpec> crop_specs_from_json(const Json& j);

// Partial objects override the given defaults key by key. Unknown keys are
// rejected so that typos do not pass silently.
ParamRanges param_ranges_from_json(const Json& j, ParamRanges defaults = {});
LossWeights loss_weights_from_json(const Json& j, LossWeights defaults = {});
SoftnessConfig softness_config_from_json(const Json& j, SoftnessConfig defaults = {});
FitConfig fit_config_from_json(const Json& j, FitConfig defaults = {});

// Settings shared by every command.
struct PipelineConfig {
  std::uint64_t seed = 0;
  int env_height = 64;
  int probe_size = 64;
  // Empty means no on-disk transport cache.
  std::filesystem::path cache_dir;
  FitConfig fit;
  SoftnessConfig softness;
};

// Keys: seed, env_height, probe_size, cache_dir, fit, ranges, weights,
// softness. The "ranges" and "weights" objects land in fit.
PipelineConfig pipeline_config_from_json(const Json& j, PipelineConfig defaults = {});

Json read_json_file(const std::filesystem::path& path);
// Pretty-printed with a trailing newline.
void write_json_file(const std::filesystem::path& path, const Json& j);

}  // namespace skylm
