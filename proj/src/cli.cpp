// Copyright 2026 The skylm Authors.
// SPDX-License-Identifier: Apache-2.0

#include "skylm/cli.h"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "skylm/envmap.h"
#include "skylm/fit.h"
#include "skylm/image_io.h"
#include "skylm/json_io.h"
#include "skylm/label.h"
#include "skylm/metrics.h"
#include "skylm/random.h"

namespace skylm {
namespace {

namespace fs = std::filesystem;

struct GlobalFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> env_height;
  std::optional<int> probe_size;
  std::optional<std::string> cache_dir;
};

struct FitFlags {
  std::optional<int> max_iterations;
  std::optional<int> restarts;
  std::optional<double> tolerance;
};

void add_fit_flags(CLI::App* cmd, FitFlags& f) {
  cmd->add_option("--max-iterations", f.max_iterations, "Levenberg-Marquardt iterations per start (default 60)");
  cmd->add_option("--restarts", f.restarts, "Number of starts, the first deterministic (default 2)");
  cmd->add_option("--tolerance", f.tolerance, "Relative loss decrease that ends a start (default 1e-6)");
}

// Defaults, then the config file, then explicit flags.
PipelineConfig resolve(const GlobalFlags& g, const FitFlags* f) {
  PipelineConfig p;
  if (!g.config.empty()) p = pipeline_config_from_json(read_json_file(g.config), p);
  if (g.seed) p.seed = *g.seed;
  if (g.env_height) p.env_height = *g.env_height;
  if (g.probe_size) p.probe_size = *g.probe_size;
  if (g.cache_dir) p.cache_dir = *g.cache_dir;
  if (f) {
    if (f->max_iterations) p.fit.max_iterations = *f->max_iterations;
    if (f->restarts) p.fit.restarts = *f->restarts;
    if (f->tolerance) p.fit.tolerance = *f->tolerance;
  }
  p.fit.seed = p.seed;
  if (p.env_height < 8 || p.env_height % 2 != 0) throw InvalidInput("--env-height must be even and >= 8");
  if (p.probe_size < 8) throw InvalidInput("--probe-size must be >= 8");
  p.fit.validate();
  return p;
}

ProbeScene scene_for(const PipelineConfig& p) {
  ProbeScene s;
  s.render_width = p.probe_size;
  s.render_height = p.probe_size;
  return s;
}

bool has_ext(const fs::path& p, const char* ext) {
  std::string e = p.extension().string();
  for (char& c : e) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return e == ext;
}

void write_preview(const fs::path& path, const RenderImage& img, double exposure) {
  write_png(path, ldr_simulate(img, exposure, true));
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os << text;
  if (!os) throw IoError("failed writing " + path.string());
}

Json fit_json(const FitResult& r) {
  Json j;
  j["params"] = to_json(r.params);
  j["losses"] = {{"sky", r.losses.sky}, {"sun", r.losses.sun}, {"lm", r.losses.lm}, {"pano_l1", r.losses.pano_l1}};
  j["objective"] = r.objective;
  j["iterations"] = r.iterations;
  j["restart"] = r.restart;
  j["converged"] = r.converged;
  j["sun_source"] = to_string(r.sun_source);
  return j;
}

void emit_json(const std::string& out_path, const Json& j, std::ostream& out) {
  if (out_path.empty() || out_path == "-") {
    out << j.dump(2) << "\n";
  } else {
    write_json_file(out_path, j);
  }
}

std::optional<SunPosition> sun_from_flags(const std::optional<double>& zenith, const std::optional<double>& azimuth) {
  if (zenith.has_value() != azimuth.has_value())
    throw InvalidInput("--sun-zenith and --sun-azimuth must be given together");
  if (!zenith) return std::nullopt;
  return SunPosition::make(*zenith, *azimuth);
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Lalonde-Matthews sky model: render, fit, label and evaluate outdoor illumination."};
  app.require_subcommand(1);
  GlobalFlags g;
  app.add_option("--config", g.config, "JSON config (flags override it, it overrides defaults)");
  app.add_option("--seed", g.seed, "Seed for every random draw (default 0)");
  app.add_option("--env-height", g.env_height, "Environment map height in texels (default 64)");
  app.add_option("--probe-size", g.probe_size, "Probe render width and height (default 64)");
  app.add_option("--cache-dir", g.cache_dir, "Directory for cached transport matrices (default: no cache)");

  // render
  auto* render = app.add_subcommand("render", "Rasterize LM parameters into an HDR environment map");
  std::string render_params, render_out, render_preview;
  std::optional<int> render_height;
  double render_exposure = 1.0;
  render->add_option("--params", render_params, "LM parameter JSON")->required();
  render->add_option("--height", render_height, "Map height (default --env-height)");
  render->add_option("--out", render_out, "Output PFM")->required();
  render->add_option("--preview", render_preview, "Also write a gamma 2.2 PNG");
  render->add_option("--exposure", render_exposure, "Preview exposure (default 1)");

  // probe
  auto* probe = app.add_subcommand("probe", "Render the probe scene under a map or LM parameters");
  std::string probe_env, probe_params, probe_out, probe_preview;
  double probe_exposure = 1.0;
  auto* probe_env_opt = probe->add_option("--env", probe_env, "HDR environment map (PFM)");
  probe->add_option("--params", probe_params, "LM parameter JSON")->excludes(probe_env_opt);
  probe->add_option("--out", probe_out, "Output PFM")->required();
  probe->add_option("--preview", probe_preview, "Also write a gamma 2.2 PNG");
  probe->add_option("--exposure", probe_exposure, "Preview exposure (default 1)");

  // ldr-sim
  auto* ldr = app.add_subcommand("ldr-sim", "Simulate an 8-bit LDR panorama from an HDR one");
  std::string ldr_in, ldr_out;
  std::optional<double> ldr_exposure;
  std::vector<double> ldr_range;
  bool ldr_gamma = false;
  ldr->add_option("--in", ldr_in, "HDR panorama (PFM)")->required();
  auto* fixed = ldr->add_option("--exposure", ldr_exposure, "Fixed exposure factor");
  ldr->add_option("--exposure-range", ldr_range, "Log-uniform exposure range MIN MAX, drawn from --seed")
      ->expected(2)
      ->excludes(fixed);
  ldr->add_flag("--gamma", ldr_gamma, "Gamma-encode with 1/2.2 (display only; losses use linear)");
  ldr->add_option("--out", ldr_out, "Output PNG; the drawn exposure goes to the .json sidecar")->required();

  // crop
  auto* crop = app.add_subcommand("crop", "Extract seeded pinhole crops from a panorama");
  std::string crop_in, crop_dir;
  int crop_count = 7;
  double crop_fov = kPi / 3;
  int crop_w = 320, crop_h = 240;
  crop->add_option("--in", crop_in, "Panorama, PFM (HDR crops) or PNG (LDR crops)")->required();
  crop->add_option("--count", crop_count, "Number of crops (default 7)");
  crop->add_option("--fov", crop_fov, "Horizontal field of view in radians (default pi/3)");
  crop->add_option("--width", crop_w, "Crop width (default 320)");
  crop->add_option("--height", crop_h, "Crop height (default 240)");
  crop->add_option("--out-dir", crop_dir, "Output directory")->required();

  // sun-detect
  auto* sund = app.add_subcommand("sun-detect", "Locate the sun as the largest saturated region");
  std::string sund_in, sund_out;
  int sund_threshold = kDefaultSaturationThreshold;
  sund->add_option("--in", sund_in, "Panorama: PNG, or PFM clipped at exposure 1")->required();
  sund->add_option("--threshold", sund_threshold, "Saturation threshold on 8-bit values (default 254)");
  sund->add_option("--out", sund_out, "Output JSON (default stdout)");

  // softness
  auto* soft = app.add_subcommand("softness", "Classify the shadow softness of a probe render");
  std::string soft_render, soft_env, soft_out;
  std::optional<double> soft_azimuth;
  auto* soft_render_opt = soft->add_option("--render", soft_render, "Probe render (PFM) with the sun behind it");
  soft->add_option("--env", soft_env, "HDR map; rendered after rotating --sun-azimuth to the centre")
      ->excludes(soft_render_opt);
  soft->add_option("--sun-azimuth", soft_azimuth, "Sun azimuth of --env (default: detected)");
  soft->add_option("--out", soft_out, "Output JSON (default stdout)");

  // fit-hdr
  auto* fit_hdr = app.add_subcommand("fit-hdr", "Fit LM parameters to an HDR panorama");
  std::string fh_in, fh_out;
  std::optional<double> fh_zenith, fh_azimuth;
  FitFlags fh_flags;
  fit_hdr->add_option("--in", fh_in, "HDR panorama (PFM)")->required();
  fit_hdr->add_option("--sun-zenith", fh_zenith, "Sun zenith hint in radians");
  fit_hdr->add_option("--sun-azimuth", fh_azimuth, "Sun azimuth hint in radians");
  fit_hdr->add_option("--out", fh_out, "Output JSON (default stdout)");
  add_fit_flags(fit_hdr, fh_flags);

  // fit-sky-ldr
  auto* fit_ldr = app.add_subcommand("fit-sky-ldr", "Fit the sky term only to an LDR panorama");
  std::string fl_in, fl_out;
  std::optional<double> fl_zenith, fl_azimuth;
  FitFlags fl_flags;
  fit_ldr->add_option("--in", fl_in, "Linear LDR panorama (PNG)")->required();
  fit_ldr->add_option("--sun-zenith", fl_zenith, "Sun zenith in radians (default: detected)");
  fit_ldr->add_option("--sun-azimuth", fl_azimuth, "Sun azimuth in radians (default: detected)");
  fit_ldr->add_option("--out", fl_out, "Output JSON (default stdout)");
  add_fit_flags(fit_ldr, fl_flags);

  // label
  auto* label = app.add_subcommand("label", "Fit every PFM panorama in a directory, writing JSONL");
  std::string lb_dir, lb_out;
  unsigned lb_threads = 0;
  FitFlags lb_flags;
  label->add_option("--dir", lb_dir, "Directory of HDR panoramas")->required();
  label->add_option("--out", lb_out, "Output JSONL")->required();
  label->add_option("--threads", lb_threads, "Worker threads (default: all cores)");
  add_fit_flags(label, lb_flags);

  // eval
  auto* eval = app.add_subcommand("eval", "Compare labels with ground-truth panoramas by shadow softness");
  std::string ev_labels, ev_gt, ev_out, ev_text, ev_curve;
  eval->add_option("--labels", ev_labels, "Label JSONL")->required();
  eval->add_option("--gt-dir", ev_gt, "Directory with the ground-truth panoramas")->required();
  eval->add_option("--out", ev_out, "Report JSON")->required();
  eval->add_option("--text", ev_text, "Also write the aligned text table here ('-' for stdout)");
  eval->add_option("--curve", ev_curve, "Cumulative sun angular error CSV (threshold in degrees, fraction)");

  std::vector<std::string> argv_store = args;
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (render->parsed()) {
      const PipelineConfig p = resolve(g, nullptr);
      const LMParams q = lm_params_from_json(read_json_file(render_params));
      const EnvMap env = render_envmap(q, render_height.value_or(p.env_height));
      write_envmap(render_out, env);
      if (!render_preview.empty()) write_preview(render_preview, to_render_image(env), render_exposure);
    } else if (probe->parsed()) {
      const PipelineConfig p = resolve(g, nullptr);
      if (probe_env.empty() == probe_params.empty()) throw InvalidInput("give exactly one of --env or --params");
      const EnvMap env = probe_env.empty()
                             ? render_envmap(lm_params_from_json(read_json_file(probe_params)), p.env_height)
                             : read_envmap(probe_env);
      TransportProvider provider(scene_for(p), p.cache_dir, p.softness,
                                 [&](const std::string& m) { err << "warning: " << m << "\n"; });
      const RenderImage img = render_probe(provider.transport(env.height()), env);
      write_pfm(probe_out, img);
      if (!probe_preview.empty()) write_preview(probe_preview, img, probe_exposure);
    } else if (ldr->parsed()) {
      const PipelineConfig p = resolve(g, nullptr);
      const EnvMap env = read_envmap(ldr_in);
      double exposure = 1.0;
      if (ldr_exposure) {
        exposure = *ldr_exposure;
      } else if (!ldr_range.empty()) {
        exposure = draw_exposure(derive_seed(p.seed, "ldr-sim"), {ldr_range[0], ldr_range[1]});
      }
      if (!(exposure > 0.0)) throw InvalidInput("exposure must be > 0");
      write_png(ldr_out, ldr_simulate(env, exposure, ldr_gamma));
      Json side;
      side["source"] = fs::path(ldr_in).filename().string();
      side["exposure"] = exposure;
      side["gamma_encoded"] = ldr_gamma;
      if (!ldr_range.empty()) side["exposure_range"] = ldr_range;
      write_json_file(fs::path(ldr_out).replace_extension(".json"), side);
    } else if (crop->parsed()) {
      const PipelineConfig p = resolve(g, nullptr);
      if (crop_count < 1) throw InvalidInput("--count must be >= 1");
      const auto specs = make_crop_set(derive_seed(p.seed, "crop"), crop_count, crop_fov, 0.0, crop_w, crop_h);
      fs::create_directories(crop_dir);
      const bool hdr = has_ext(crop_in, ".pfm");
      const std::optional<EnvMap> env = hdr ? std::optional<EnvMap>(read_envmap(crop_in)) : std::nullopt;
      const std::optional<LdrImage> png = hdr ? std::nullopt : std::optional<LdrImage>(read_png(crop_in));
      for (std::size_t i = 0; i < specs.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "crop_%02zu.%s", i, hdr ? "pfm" : "png");
        if (hdr) {
          write_pfm(fs::path(crop_dir) / name, extract_crop(*env, specs[i]));
        } else {
          write_png(fs::path(crop_dir) / name, extract_crop(*png, specs[i]));
        }
      }
      write_json_file(fs::path(crop_dir) / "crops.json", to_json(specs));
    } else if (sund->parsed()) {
      resolve(g, nullptr);
      const LdrImage pano = has_ext(sund_in, ".pfm") ? ldr_simulate(read_envmap(sund_in), 1.0) : read_png(sund_in);
      const auto sun = detect_sun(pano, sund_threshold);
      Json j;
      j["detected"] = sun.has_value();
      if (sun) {
        j["sun_zenith"] = sun->zenith_angle;
        j["sun_azimuth"] = sun->azimuth;
        j["elevation_bin"] = elevation_bin(sun->elevation());
        j["azimuth_bin"] = azimuth_bin(sun->azimuth);
      }
      emit_json(sund_out, j, out);
    } else if (soft->parsed()) {
      const PipelineConfig p = resolve(g, nullptr);
      if (soft_render.empty() == soft_env.empty()) throw InvalidInput("give exactly one of --render or --env");
      TransportProvider provider(scene_for(p), p.cache_dir, p.softness,
                                 [&](const std::string& m) { err << "warning: " << m << "\n"; });
      SoftnessResult r;
      if (!soft_render.empty()) {
        r = provider.classifier(p.env_height).classify(read_pfm(soft_render));
      } else {
        const EnvMap env = read_envmap(soft_env);
        double az = 0.0;
        if (soft_azimuth) {
          az = *soft_azimuth;
        } else if (const auto s = detect_sun_hdr(env)) {
          az = s->azimuth;
        } else {
          throw InvalidInput("no saturated sun in --env; pass --sun-azimuth");
        }
        r = provider.classifier(env.height()).classify_env(env, az);
      }
      Json j;
      j["kl"] = r.kl;
      j["bucket"] = r.bucket;
      emit_json(soft_out, j, out);
    } else if (fit_hdr->parsed()) {
      const PipelineConfig p = resolve(g, &fh_flags);
      const EnvMap env = read_envmap(fh_in);
      TransportProvider provider(scene_for(p), p.cache_dir, p.softness,
                                 [&](const std::string& m) { err << "warning: " << m << "\n"; });
      const FitResult r =
          fit_lm_to_hdr(provider.transport(env.height()), env, sun_from_flags(fh_zenith, fh_azimuth), p.fit);
      emit_json(fh_out, fit_json(r), out);
    } else if (fit_ldr->parsed()) {
      const PipelineConfig p = resolve(g, &fl_flags);
      const LdrImage pano = read_png(fl_in);
      std::optional<SunPosition> sun = sun_from_flags(fl_zenith, fl_azimuth);
      if (!sun) sun = detect_sun(pano);
      if (!sun) throw InvalidInput("no saturated sun in --in; pass --sun-zenith and --sun-azimuth");
      TransportProvider provider(scene_for(p), p.cache_dir, p.softness,
                                 [&](const std::string& m) { err << "warning: " << m << "\n"; });
      const FitResult r = fit_sky_to_ldr(provider.transport(pano.height), pano, *sun, p.fit);
      emit_json(fl_out, fit_json(r), out);
    } else if (label->parsed()) {
      const PipelineConfig p = resolve(g, &lb_flags);
      TransportProvider provider(scene_for(p), p.cache_dir, p.softness,
                                 [&](const std::string& m) { err << "warning: " << m << "\n"; });
      const LabelSummary s = label_dataset(lb_dir, provider, {p.fit, lb_threads}, lb_out);
      err << "labeled " << s.records << " panorama(s)";
      if (s.errors > 0) err << ", warning: " << s.errors << " failed (see error records)";
      err << "\n";
    } else if (eval->parsed()) {
      const PipelineConfig p = resolve(g, nullptr);
      TransportProvider provider(scene_for(p), p.cache_dir, p.softness,
                                 [&](const std::string& m) { err << "warning: " << m << "\n"; });
      const EvalOutcome o = evaluate_labels(ev_labels, ev_gt, provider);
      write_json_file(ev_out, to_json(o));
      int failed = 0;
      for (const auto& r : o.records) failed += r.error ? 1 : 0;
      if (failed > 0) err << "warning: " << failed << " record(s) could not be evaluated\n";
      if (!ev_text.empty()) {
        const std::string table = o.report ? o.report->to_text() : std::string("no evaluable records\n");
        if (ev_text == "-") {
          out << table;
        } else {
          write_text(ev_text, table);
        }
      }
      if (!ev_curve.empty()) {
        std::vector<double> errors_deg;
        for (const auto& r : o.records)
          if (r.sun_error) errors_deg.push_back(*r.sun_error * 180.0 / kPi);
        std::string csv = "threshold_deg,fraction\n";
        if (!errors_deg.empty()) {
          std::vector<double> grid;
          for (int t = 0; t <= 180; ++t) grid.push_back(t);
          const auto frac = cumulative_curve(errors_deg, grid);
          char row[64];
          for (std::size_t i = 0; i < grid.size(); ++i) {
            std::snprintf(row, sizeof(row), "%g,%.17g\n", grid[i], frac[i]);
            csv += row;
          }
        }
        write_text(ev_curve, csv);
      }
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace skylm
