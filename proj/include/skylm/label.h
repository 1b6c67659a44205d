// Copyright 2026 The skylm Authors.
// SPDX-License-Identifier: Apache-2.0

// Dataset labeling (fit every panorama in a directory, one JSON line each)
// and evaluation of label files against ground-truth panoramas.

#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "skylm/fit.h"
#include "skylm/json_io.h"
#include "skylm/metrics.h"
#include "skylm/transport.h"

namespace skylm {

using WarnFn = std::function<void(const std::string&)>;

// Transport matrices and softness classifiers per panorama height, built on
// first use (through the on-disk cache when cache_dir is set). Thread safe.
class TransportProvider {
 public:
  TransportProvider(ProbeScene scene, std::filesystem::path cache_dir, SoftnessConfig softness = {},
                    WarnFn warn = {});

  const TransportMatrix& transport(int env_height);
  const SoftnessClassifier& classifier(int env_height);
  const ProbeScene& scene() const { return scene_; }

 private:
  struct Entry {
    TransportMatrix transport;
    std::unique_ptr<SoftnessClassifier> classifier;
  };
  Entry& entry(int env_height);

  ProbeScene scene_;
  std::filesystem::path cache_dir_;
  SoftnessConfig softness_;
  WarnFn warn_;
  std::mutex mutex_;
  std::map<int, std::unique_ptr<Entry>> entries_;
};

struct LabelOptions {
  FitConfig fit;
  // Worker threads for fitting; 0 uses the hardware concurrency.
  unsigned threads = 0;
};

struct LabelSummary {
  int records = 0;
  int errors = 0;
};

// Sorted .pfm files (case-insensitive extension) directly inside dir.
// Throws IoError when dir cannot be read.
std::vector<std::filesystem::path> list_panoramas(const std::filesystem::path& dir);

// Label record for one panorama; failures become {"file", "error"}.
// Each file's fit seed is derived from the configured seed and its name.
Json label_panorama(const std::filesystem::path& path, TransportProvider& provider, const FitConfig& cfg);

// Writes a header comment line followed by one record per panorama in sorted
// filename order, independent of thread scheduling.
LabelSummary label_dataset(const std::filesystem::path& dir, TransportProvider& provider,
                           const LabelOptions& opts, const std::filesystem::path& out);

struct EvalRecord {
  std::string file;
  std::optional<std::string> error;
  double rmse = 0.0;
  double si_rmse = 0.0;
  int bucket = 0;
  double kl = 0.0;
  // Angle between the labeled sun and the sun detected in the ground truth,
  // when the ground truth has a saturated region.
  std::optional<double> sun_error;
};

struct EvalOutcome {
  std::vector<EvalRecord> records;
  std::optional<BucketReport> report;
};

// Renders the probe under each label's parameters and under its ground-truth
// panorama gt_dir / file, and buckets by the softness of the ground truth
// (rotated to the labeled sun azimuth). Error records in the label file and
// missing or unreadable ground truth become per-record errors.
EvalOutcome evaluate_labels(const std::filesystem::path& labels, const std::filesystem::path& gt_dir,
                            TransportProvider& provider);

Json to_json(const EvalOutcome& outcome);

}  // namespace skylm
