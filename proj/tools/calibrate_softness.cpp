// Copyright 2026 The skylm Authors.
// SPDX-License-Identifier: Apache-2.0

// Prints the softness KL of probe renders over a beta / kappa sweep at the
// reference sun flux, plus sunless skies. The bucket cut points in
// SoftnessConfig were chosen from this table.
//
// Output columns: beta, kappa, w_sun, shadow contrast, KL. Shadow contrast is
// 1 - (darkest band pixel / band mean), a direct measure of how visible the
// cast shadow is.

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "skylm/metrics.h"
#include "skylm/synthetic.h"

using namespace skylm;

namespace {

double shadow_contrast(const RenderImage& img, const ProbeScene& scene, int band_rows) {
  const int first = scene.footprint_last_row() + 1;
  double mean = 0.0, lo = 1e300;
  int n = 0;
  for (int y = first; y < first + band_rows; ++y)
    for (int x = 0; x < img.width; ++x) {
      const double l = luminance({img.at(x, y, 0), img.at(x, y, 1), img.at(x, y, 2)});
      mean += l;
      lo = std::min(lo, l);
      ++n;
    }
  mean /= n;
  return mean > 0.0 ? 1.0 - lo / mean : 0.0;
}

}  // namespace

int main() {
  const int h = 64;
  const ProbeScene scene;
  const TransportMatrix t = build_transport(scene, h);
  const SoftnessClassifier cls(t, scene);
  const LMParams ref = softness_reference_params(h);
  const double flux = ref.sun.w_sun.r * sun_irradiance(ref.sun_pos, ref.sun.beta, ref.sun.kappa, h);
  std::printf("# reference flux %.6g\n# beta kappa w_sun contrast kl\n", flux);

  int counts[3] = {0, 0, 0};
  const int n_beta = 20, n_kappa = 10;
  for (int i = 0; i < n_beta; ++i) {
    const double beta = std::exp(std::log(1.0) + (std::log(200.0) - std::log(1.0)) * i / (n_beta - 1));
    for (int k = 0; k < n_kappa; ++k) {
      const double kappa = std::exp(std::log(0.005) + (std::log(1.0) - std::log(0.005)) * k / (n_kappa - 1));
      LMParams q = ref;
      q.sun.beta = beta;
      q.sun.kappa = kappa;
      const double w = flux / sun_irradiance(q.sun_pos, beta, kappa, h);
      q.sun.w_sun = {w, w, w};
      const RenderImage img = render_probe(t, render_envmap(q, h));
      const SoftnessResult r = cls.classify(img);
      ++counts[r.bucket - 1];
      std::printf("%.6g %.6g %.6g %.6f %.6f\n", beta, kappa, w, shadow_contrast(img, scene, 5), r.kl);
    }
  }
  for (double turbidity : {1.7, 2.5, 5.0, 10.0, 20.0}) {
    LMParams q = ref;
    q.sun.w_sun = {};
    q.sky.turbidity = turbidity;
    const RenderImage img = render_probe(t, render_envmap(q, h));
    std::printf("# sunless t=%.1f contrast %.6f kl %.6f\n", turbidity, shadow_contrast(img, scene, 5),
                cls.classify(img).kl);
  }
  std::printf("# buckets at cut points %.3g / %.3g: %d %d %d\n", cls.config().cut_low, cls.config().cut_high,
              counts[0], counts[1], counts[2]);
  return 0;
}
