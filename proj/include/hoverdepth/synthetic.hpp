#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hoverdepth/pipeline.hpp"

namespace hoverdepth {

enum class TextureKind { kNone, kNoise, kLinear };

/// A planar surface in the reference camera frame, limited to the set of
/// points whose reference projection lies in the pixel rectangle
/// [x0, x1) x [y0, y1). The rectangle may extend past the image.
struct SurfaceSpec {
  PlaneSurface plane;
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;
  Rgb color{128.0f, 128.0f, 128.0f};
  TextureKind texture = TextureKind::kNoise;
  double amplitude = 8.0;  // luma levels
  double period = 0.03;    // meters, in plane coordinates
  double dropout = 0.0;    // probability of discarding a sparse point
};

struct SceneSpec {
  int width = 640;
  int height = 480;
  CameraIntrinsics intrinsics{525.0, 525.0, 319.5, 239.5};
  int views = 20;
  double baseline = 0.005;          // max camera displacement, meters
  double max_rotation_deg = 0.5;
  double noise_sigma = 0.0;         // per-pixel gray noise, intensity levels
  double seed_density = 0.01;       // sparse points per visible pixel
  double reproj_min = 0.01;         // px
  double reproj_max = 0.08;         // px
  double position_noise = 0.0;      // meters
  Rgb background{0.0f, 0.0f, 0.0f};
  std::uint64_t seed = 1;
  std::vector<SurfaceSpec> surfaces;
};

struct SyntheticScene {
  Dataset dataset;
  DepthMap truth;
  std::vector<int> labels;          // visible surface per reference pixel, -1 for none
  std::vector<int> point_surface;   // surface of each sparse point
};

/// Renders all views of the scene (view 0 is the reference with identity
/// pose), samples the sparse cloud and returns the analytic reference depth.
/// Throws kInvalidInput on an inconsistent spec.
SyntheticScene generate_synthetic(const SceneSpec& spec);

/// Nearest surface hit along the ray from `center` in `direction` (world
/// frame); returns the surface index or -1 and writes the hit distance.
int cast_ray(const SceneSpec& spec, const Eigen::Vector3d& center,
             const Eigen::Vector3d& direction, double* t_hit);

/// Reference-frame color of a surface point, without noise.
Rgb surface_color(const SceneSpec& spec, int surface, const Eigen::Vector3d& point);

/// Convenience scenes used by the tests and the CLI examples.
SurfaceSpec fronto_surface(double depth, int x0, int y0, int x1, int y1, Rgb color);

}  // namespace hoverdepth
