#pragma once

#include <artsplat/render/rasterize.hpp>

#include <chrono>

namespace artsplat {

struct ThroughputReport {
  int repeats = 0;
  int n_primitives = 0;
  int width = 0, height = 0;
  double seconds_total = 0;
  double fps = 0;
};

// Wall-clock forward rendering rate; no tape, color+alpha only, which is the
// configuration a live preview would use.
inline ThroughputReport render_throughput_report(const ArticulatedGaussianModel& model,
                                                 const PoseSet& q, const Camera& cam,
                                                 int repeats, int threads = 1) {
  if (repeats <= 0) throw ValidationError("render_throughput_report: repeats must be >= 1");
  RasterParams params;
  params.with_tape = false;
  params.with_semantics = false;
  params.with_depth = false;
  params.threads = threads;
  ThroughputReport rep;
  rep.repeats = repeats;
  rep.n_primitives = model.size();
  rep.width = cam.width;
  rep.height = cam.height;
  volatile double sink = 0;  // keep the render from being optimized away
  const auto t0 = std::chrono::steady_clock::now();
  for (int r = 0; r < repeats; ++r) {
    RenderOutput out = rasterize(model, q, cam, params);
    sink = sink + out.alpha.at(0, 0);
  }
  const auto t1 = std::chrono::steady_clock::now();
  rep.seconds_total = std::chrono::duration<double>(t1 - t0).count();
  rep.fps = repeats / std::max(1e-12, rep.seconds_total);
  return rep;
}

}  // namespace artsplat
