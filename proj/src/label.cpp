// Copyright 2026 The skylm Authors.
// SPDX-License-Identifier: Apache-2.0

#include "skylm/label.h"

#include <algorithm>
#include <cctype>
#include <fstream>

#include "skylm/image_io.h"
#include "skylm/parallel.h"
#include "skylm/random.h"

namespace skylm {
namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

Json error_record(const std::string& file, const std::string& message) {
  Json j;
  j["file"] = file;
  j["error"] = message;
  return j;
}

}  // namespace

TransportProvider::TransportProvider(ProbeScene scene, std::filesystem::path cache_dir, SoftnessConfig softness,
                                     WarnFn warn)
    : scene_(scene), cache_dir_(std::move(cache_dir)), softness_(softness), warn_(std::move(warn)) {
  scene_.validate();
  softness_.validate();
}

TransportProvider::Entry& TransportProvider::entry(int env_height) {
  std::lock_guard<std::mutex> lock(mutex_);
  auto& slot = entries_[env_height];
  if (!slot) {
    auto e = std::make_unique<Entry>();
    e->transport = cache_dir_.empty() ? build_transport(scene_, env_height)
                                      : load_or_build_transport(cache_dir_, scene_, env_height, warn_);
    e->classifier = std::make_unique<SoftnessClassifier>(e->transport, scene_, softness_);
    slot = std::move(e);
  }
  return *slot;
}

const TransportMatrix& TransportProvider::transport(int env_height) { return entry(env_height).transport; }

const SoftnessClassifier& TransportProvider::classifier(int env_height) {
  return *entry(env_height).classifier;
}

std::vector<std::filesystem::path> list_panoramas(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::directory_iterator it(dir, ec);
  if (ec) throw IoError("cannot read directory " + dir.string() + ": " + ec.message());
  std::vector<std::filesystem::path> out;
  for (const auto& e : it)
    if (e.is_regular_file() && lower(e.path().extension().string()) == ".pfm") out.push_back(e.path());
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.filename().string() < b.filename().string(); });
  return out;
}

Json label_panorama(const std::filesystem::path& path, TransportProvider& provider, const FitConfig& cfg) {
  const std::string name = path.filename().string();
  try {
    const EnvMap env = read_envmap(path);
    FitConfig file_cfg = cfg;
    file_cfg.seed = derive_seed(cfg.seed, "label/" + name);
    const FitResult fit = fit_lm_to_hdr(provider.transport(env.height()), env, std::nullopt, file_cfg);
    const SoftnessResult soft = provider.classifier(env.height()).classify_env(env, fit.params.sun_pos.azimuth);

    Json j;
    j["file"] = name;
    j["params"] = to_json(fit.params);
    j["sun_detected"] = fit.sun_source == SunSource::kDetected;
    j["losses"] = {{"sky", fit.losses.sky}, {"sun", fit.losses.sun}, {"lm", fit.losses.lm},
                   {"pano_l1", fit.losses.pano_l1}};
    j["softness"] = soft.bucket;
    j["converged"] = fit.converged;
    j["restarts"] = file_cfg.restarts;
    return j;
  } catch (const Error& e) {
    return error_record(name, e.what());
  }
}

LabelSummary label_dataset(const std::filesystem::path& dir, TransportProvider& provider,
                           const LabelOptions& opts, const std::filesystem::path& out) {
  opts.fit.validate();
  const auto files = list_panoramas(dir);
  std::vector<Json> records(files.size());
  parallel_for(
      files.size(), [&](std::size_t i) { records[i] = label_panorama(files[i], provider, opts.fit); },
      opts.threads);

  std::ofstream os(out, std::ios::binary);
  if (!os) throw IoError("cannot open " + out.string() + " for writing");
  os << "# skylm labels: one JSON object per line, seed " << opts.fit.seed << "\n";
  LabelSummary summary;
  for (const Json& r : records) {
    os << r.dump() << "\n";
    ++summary.records;
    if (r.contains("error")) ++summary.errors;
  }
  if (!os) throw IoError("failed writing " + out.string());
  return summary;
}

EvalOutcome evaluate_labels(const std::filesystem::path& labels, const std::filesystem::path& gt_dir,
                            TransportProvider& provider) {
  std::ifstream in(labels);
  if (!in) throw IoError("cannot open " + labels.string());
  EvalOutcome outcome;
  std::vector<EvalPair> pairs;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    EvalRecord rec;
    try {
      Json j;
      try {
        j = Json::parse(line);
      } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError("line " + std::to_string(line_no) + ": " + e.what());
      }
      if (!j.is_object() || !j.contains("file") || !j["file"].is_string())
        throw ValidationError("line " + std::to_string(line_no) + ": record without a file name");
      rec.file = j["file"].get<std::string>();
      if (j.contains("error")) throw ValidationError("label record is an error: " + j["error"].dump());
      if (!j.contains("params")) throw ValidationError("label record has no params");
      const LMParams q = lm_params_from_json(j["params"]);
      const EnvMap gt = read_envmap(gt_dir / rec.file);
      const TransportMatrix& t = provider.transport(gt.height());
      const RenderImage gt_render = render_probe(t, gt);
      const RenderImage pred = render_probe(t, render_envmap(q, gt.height()));
      rec.rmse = rmse(gt_render, pred);
      rec.si_rmse = si_rmse(gt_render, pred);
      const SoftnessResult soft = provider.classifier(gt.height()).classify_env(gt, q.sun_pos.azimuth);
      rec.bucket = soft.bucket;
      rec.kl = soft.kl;
      if (const auto s = detect_sun_hdr(gt)) rec.sun_error = sun_angular_error(*s, q.sun_pos);
      pairs.push_back({gt_render, pred, rec.bucket});
    } catch (const Error& e) {
      rec.error = e.what();
    }
    outcome.records.push_back(std::move(rec));
  }
  if (!pairs.empty()) outcome.report = bucketed_report(pairs);
  return outcome;
}

Json to_json(const EvalOutcome& outcome) {
  Json j;
  j["report"] = outcome.report ? Json::parse(outcome.report->to_json()) : Json(nullptr);
  Json recs = Json::array();
  for (const EvalRecord& r : outcome.records) {
    Json e;
    e["file"] = r.file;
    if (r.error) {
      e["error"] = *r.error;
    } else {
      e["rmse"] = r.rmse;
      e["si_rmse"] = r.si_rmse;
      e["softness"] = r.bucket;
      e["kl"] = r.kl;
      e["sun_error"] = r.sun_error ? Json(*r.sun_error) : Json(nullptr);
    }
    recs.push_back(e);
  }
  j["records"] = recs;
  return j;
}

}  // namespace skylm
