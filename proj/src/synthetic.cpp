#include "hoverdepth/synthetic.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "hoverdepth/error.hpp"

namespace hoverdepth {

namespace {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Lattice value in [-1, 1].
double lattice(std::int64_t i, std::int64_t j, std::uint64_t salt) {
  const std::uint64_t h = mix64(mix64(static_cast<std::uint64_t>(i) ^ salt) +
                                static_cast<std::uint64_t>(j));
  return static_cast<double>(h >> 11) * (2.0 / 9007199254740992.0) - 1.0;
}

double quintic(double t) { return t * t * t * (t * (t * 6.0 - 15.0) + 10.0); }

double value_noise(double a, double b, std::uint64_t salt) {
  const double fa = std::floor(a);
  const double fb = std::floor(b);
  const auto i = static_cast<std::int64_t>(fa);
  const auto j = static_cast<std::int64_t>(fb);
  const double u = quintic(a - fa);
  const double v = quintic(b - fb);
  const double v00 = lattice(i, j, salt);
  const double v10 = lattice(i + 1, j, salt);
  const double v01 = lattice(i, j + 1, salt);
  const double v11 = lattice(i + 1, j + 1, salt);
  return (v00 * (1 - u) + v10 * u) * (1 - v) + (v01 * (1 - u) + v11 * u) * v;
}

void plane_basis(const Eigen::Vector3d& n, Eigen::Vector3d* u, Eigen::Vector3d* v) {
  const Eigen::Vector3d axis =
      std::abs(n.x()) < 0.9 ? Eigen::Vector3d::UnitX() : Eigen::Vector3d::UnitY();
  *u = n.cross(axis).normalized();
  *v = n.cross(*u);
}

bool in_region(const SceneSpec& spec, const SurfaceSpec& s, const Eigen::Vector3d& p) {
  if (p.z() <= 0.0) return false;
  const double x = spec.intrinsics.fx * p.x() / p.z() + spec.intrinsics.cx;
  const double y = spec.intrinsics.fy * p.y() / p.z() + spec.intrinsics.cy;
  return x >= s.x0 - 0.5 && x < s.x1 - 0.5 && y >= s.y0 - 0.5 && y < s.y1 - 0.5;
}

void check_spec(const SceneSpec& spec) {
  if (spec.width < 2 || spec.height < 2) throw Error(ErrorCode::kInvalidInput, "scene too small");
  if (spec.views < 2) throw Error(ErrorCode::kInvalidInput, "scene needs at least two views");
  if (!(spec.baseline > 0.0)) throw Error(ErrorCode::kInvalidInput, "baseline must be positive");
  if (!(spec.max_rotation_deg >= 0.0) || !(spec.noise_sigma >= 0.0) ||
      !(spec.seed_density >= 0.0) || !(spec.position_noise >= 0.0)) {
    throw Error(ErrorCode::kInvalidInput, "scene parameters must be non-negative");
  }
  if (!(spec.reproj_min >= 0.0 && spec.reproj_min <= spec.reproj_max)) {
    throw Error(ErrorCode::kInvalidInput, "invalid reprojection error range");
  }
  if (spec.surfaces.empty()) throw Error(ErrorCode::kInvalidInput, "scene has no surfaces");
  for (const auto& s : spec.surfaces) {
    if (std::abs(s.plane.normal.norm() - 1.0) > 1e-6) {
      throw Error(ErrorCode::kInvalidInput, "surface normal must be unit length");
    }
    if (s.x1 <= s.x0 || s.y1 <= s.y0) throw Error(ErrorCode::kInvalidInput, "empty surface region");
    if (!(s.dropout >= 0.0 && s.dropout <= 1.0)) {
      throw Error(ErrorCode::kInvalidInput, "dropout must lie in [0, 1]");
    }
    if (s.texture != TextureKind::kNone && !(s.period > 0.0)) {
      throw Error(ErrorCode::kInvalidInput, "texture period must be positive");
    }
  }
}

ColorImage render_view(const SceneSpec& spec, const Pose& pose) {
  ColorImage img(spec.width, spec.height);
  const Eigen::Matrix3d rt = pose.rotation.transpose();
  const Eigen::Vector3d center = -rt * pose.translation;
  const auto& k = spec.intrinsics;
#pragma omp parallel for schedule(static)
  for (int y = 0; y < spec.height; ++y) {
    for (int x = 0; x < spec.width; ++x) {
      const Eigen::Vector3d ray((x - k.cx) / k.fx, (y - k.cy) / k.fy, 1.0);
      const Eigen::Vector3d dir = rt * ray;
      double t = 0.0;
      const int s = cast_ray(spec, center, dir, &t);
      img(x, y) = s < 0 ? spec.background : surface_color(spec, s, center + t * dir);
    }
  }
  return img;
}

}  // namespace

int cast_ray(const SceneSpec& spec, const Eigen::Vector3d& center,
             const Eigen::Vector3d& direction, double* t_hit) {
  int best = -1;
  double best_t = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < spec.surfaces.size(); ++i) {
    const auto& s = spec.surfaces[i];
    const double denom = s.plane.normal.dot(direction);
    if (std::abs(denom) < kGeomEpsilon) continue;
    const double t = s.plane.normal.dot(s.plane.point - center) / denom;
    if (!(t > 0.0) || t >= best_t) continue;
    if (!in_region(spec, s, center + t * direction)) continue;
    best = static_cast<int>(i);
    best_t = t;
  }
  if (t_hit != nullptr) *t_hit = best_t;
  return best;
}

Rgb surface_color(const SceneSpec& spec, int surface, const Eigen::Vector3d& point) {
  const auto& s = spec.surfaces[static_cast<std::size_t>(surface)];
  double tex = 0.0;
  if (s.texture != TextureKind::kNone) {
    Eigen::Vector3d u, v;
    plane_basis(s.plane.normal, &u, &v);
    const Eigen::Vector3d d = point - s.plane.point;
    const double a = d.dot(u) / s.period;
    const double b = d.dot(v) / s.period;
    if (s.texture == TextureKind::kLinear) {
      tex = s.amplitude * (a + 0.5 * b);
    } else {
      const auto salt = static_cast<std::uint64_t>(surface) * 0x632be59bd9b4e019ULL + spec.seed;
      tex = s.amplitude * (value_noise(a, b, salt) + 0.5 * value_noise(2.0 * a, 2.0 * b, ~salt));
    }
  }
  const auto t = static_cast<float>(tex);
  return {s.color.r + t, s.color.g + t, s.color.b + t};
}

SurfaceSpec fronto_surface(double depth, int x0, int y0, int x1, int y1, Rgb color) {
  SurfaceSpec s;
  s.plane.point = {0.0, 0.0, depth};
  s.plane.normal = {0.0, 0.0, -1.0};
  s.x0 = x0;
  s.y0 = y0;
  s.x1 = x1;
  s.y1 = y1;
  s.color = color;
  return s;
}

SyntheticScene generate_synthetic(const SceneSpec& spec) {
  check_spec(spec);
  SyntheticScene out;
  Dataset& ds = out.dataset;
  ds.intrinsics = spec.intrinsics;
  ds.reference = 0;
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  ds.poses.resize(static_cast<std::size_t>(spec.views));
  const double max_angle = spec.max_rotation_deg * std::numbers::pi / 180.0;
  for (int i = 1; i < spec.views; ++i) {
    Eigen::Vector3d dir(gauss(rng), gauss(rng), gauss(rng));
    dir.normalize();
    const Eigen::Vector3d center = dir * spec.baseline * (0.5 + 0.5 * unit(rng));
    Eigen::Vector3d axis(gauss(rng), gauss(rng), gauss(rng));
    axis.normalize();
    const Eigen::Matrix3d r = rotation_from_axis_angle(axis * max_angle * unit(rng));
    ds.poses[i].rotation = r;
    ds.poses[i].translation = -r * center;
  }

  for (int i = 0; i < spec.views; ++i) {
    ColorImage img = render_view(spec, ds.poses[i]);
    if (spec.noise_sigma > 0.0) {
      for (auto& c : img.data()) {
        const auto n = static_cast<float>(spec.noise_sigma * gauss(rng));
        c = {c.r + n, c.g + n, c.b + n};
      }
    }
    ds.images.push_back(std::move(img));
  }

  const auto& k = spec.intrinsics;
  out.truth = DepthMap(spec.width, spec.height);
  out.labels.assign(static_cast<std::size_t>(spec.width) * spec.height, -1);
  std::vector<std::vector<int>> visible(spec.surfaces.size());
  for (int y = 0; y < spec.height; ++y) {
    for (int x = 0; x < spec.width; ++x) {
      const Eigen::Vector3d ray((x - k.cx) / k.fx, (y - k.cy) / k.fy, 1.0);
      double t = 0.0;
      const int s = cast_ray(spec, Eigen::Vector3d::Zero(), ray, &t);
      if (s < 0) continue;
      out.truth.set(x, y, t);
      const std::size_t idx = out.truth.index(x, y);
      out.labels[idx] = s;
      visible[static_cast<std::size_t>(s)].push_back(static_cast<int>(idx));
    }
  }

  for (std::size_t s = 0; s < spec.surfaces.size(); ++s) {
    const auto& pixels = visible[s];
    if (pixels.empty()) continue;
    const auto count = static_cast<long>(std::llround(spec.seed_density * pixels.size()));
    std::uniform_int_distribution<std::size_t> pick(0, pixels.size() - 1);
    for (long n = 0; n < count; ++n) {
      const int idx = pixels[pick(rng)];
      const double px = idx % spec.width + unit(rng) - 0.5;
      const double py = idx / spec.width + unit(rng) - 0.5;
      const double keep = unit(rng);
      const double err = spec.reproj_min + (spec.reproj_max - spec.reproj_min) * unit(rng);
      const Eigen::Vector3d jitter(gauss(rng), gauss(rng), gauss(rng));
      const Eigen::Vector3d ray((px - k.cx) / k.fx, (py - k.cy) / k.fy, 1.0);
      double t = 0.0;
      if (cast_ray(spec, Eigen::Vector3d::Zero(), ray, &t) != static_cast<int>(s)) continue;
      if (keep < spec.surfaces[s].dropout) continue;
      const Eigen::Vector3d hit = t * ray;
      SparsePoint p;
      p.position = hit + spec.position_noise * jitter;
      p.color = surface_color(spec, static_cast<int>(s), hit);
      p.reproj_error = err;
      ds.cloud.push_back(p);
      out.point_surface.push_back(static_cast<int>(s));
    }
  }
  return out;
}

}  // namespace hoverdepth
