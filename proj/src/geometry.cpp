#include "hoverdepth/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>
#include <Eigen/Geometry>

#include "hoverdepth/error.hpp"

namespace hoverdepth {

Eigen::Matrix3d CameraIntrinsics::matrix() const {
  Eigen::Matrix3d k;
  k << fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
  return k;
}

Eigen::Matrix3d CameraIntrinsics::inverse() const {
  Eigen::Matrix3d k;
  k << 1.0 / fx, 0.0, -cx / fx, 0.0, 1.0 / fy, -cy / fy, 0.0, 0.0, 1.0;
  return k;
}

CameraView make_view(const CameraIntrinsics& intrinsics,
                     const Eigen::Matrix3d& rotation,
                     const Eigen::Vector3d& translation, GrayImage image,
                     double view_weight) {
  if (!(intrinsics.fx > 0.0) || !(intrinsics.fy > 0.0)) {
    throw Error(ErrorCode::kInvalidInput, "focal lengths must be positive");
  }
  if (!image.empty() &&
      (intrinsics.cx < 0.0 || intrinsics.cy < 0.0 ||
       intrinsics.cx > image.width() - 1 || intrinsics.cy > image.height() - 1)) {
    throw Error(ErrorCode::kInvalidInput, "principal point outside the image");
  }
  const double orth =
      (rotation.transpose() * rotation - Eigen::Matrix3d::Identity()).norm();
  if (!(orth < 1e-9) || rotation.determinant() < 0.0) {
    throw Error(ErrorCode::kInvalidInput, "rotation is not a proper rotation");
  }
  if (!translation.allFinite()) {
    throw Error(ErrorCode::kInvalidInput, "translation is not finite");
  }
  if (!(view_weight > 0.0 && view_weight <= 1.0)) {
    throw Error(ErrorCode::kInvalidInput, "view weight must lie in (0, 1]");
  }
  CameraView view;
  view.intrinsics = intrinsics;
  view.rotation = rotation;
  view.translation = translation;
  view.gradient = gradient_magnitude(image);
  view.image = std::move(image);
  view.view_weight = view_weight;
  return view;
}

PlaneSurface canonicalize(PlaneSurface plane, const Eigen::Vector3d& viewpoint) {
  plane.normal.normalize();
  if (plane.normal.dot(viewpoint - plane.point) < 0.0) plane.normal = -plane.normal;
  return plane;
}

Eigen::Vector2d project(const CameraView& view, const Eigen::Vector3d& world) {
  const Eigen::Vector3d x = view.to_camera(world);
  if (!(x.z() > kGeomEpsilon)) {
    throw Error(ErrorCode::kNonPositiveDepth, "point is not in front of the camera");
  }
  const auto& k = view.intrinsics;
  return {k.fx * x.x() / x.z() + k.cx, k.fy * x.y() / x.z() + k.cy};
}

Eigen::Matrix3d plane_homography(const CameraView& ref, const CameraView& target,
                                 const PlaneSurface& plane) {
  const Eigen::Vector3d n = ref.rotation * plane.normal;
  const double d = n.dot(ref.to_camera(plane.point));
  if (std::abs(d) < kGeomEpsilon) {
    throw Error(ErrorCode::kDegeneratePlane, "plane passes through the reference center");
  }
  const Eigen::Matrix3d r_rel = target.rotation * ref.rotation.transpose();
  const Eigen::Vector3d t_rel = target.translation - r_rel * ref.translation;
  return target.intrinsics.matrix() * (r_rel + t_rel * n.transpose() / d) *
         ref.intrinsics.inverse();
}

PlaneFit fit_plane(std::span<const Eigen::Vector3d> points,
                   const Eigen::Vector3d& viewpoint, std::size_t min_count) {
  if (points.size() < std::max<std::size_t>(min_count, 3)) {
    throw Error(ErrorCode::kDegenerateConfiguration, "too few points for a plane");
  }
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  for (const auto& p : points) centroid += p;
  centroid /= static_cast<double>(points.size());

  Eigen::Matrix3d scatter = Eigen::Matrix3d::Zero();
  for (const auto& p : points) {
    const Eigen::Vector3d d = p - centroid;
    scatter += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(scatter);
  const Eigen::Vector3d eig = solver.eigenvalues();  // ascending
  // Collinear (or coincident) input leaves two vanishing eigenvalues.
  if (!(eig(1) > 1e-12 * std::max(eig(2), 1e-300)) || eig(2) <= 0.0) {
    throw Error(ErrorCode::kDegenerateConfiguration, "points are collinear");
  }
  PlaneFit fit;
  fit.plane.point = centroid;
  fit.plane.normal = solver.eigenvectors().col(0);
  fit.plane = canonicalize(fit.plane, viewpoint);
  double sq = 0.0;
  for (const auto& p : points) {
    const double r = fit.plane.signed_distance(p);
    sq += r * r;
  }
  fit.rms = std::sqrt(sq / static_cast<double>(points.size()));
  return fit;
}

namespace {

// Returns the camera-frame depth or sets *error.
double intersect_depth(const CameraView& view, const Eigen::Vector2d& pixel,
                       const PlaneSurface& plane, ErrorCode* error) {
  const Eigen::Vector3d ray = view.ray(pixel);
  const Eigen::Vector3d n = view.rotation * plane.normal;
  const Eigen::Vector3d p = view.to_camera(plane.point);
  const double denom = n.dot(ray);
  if (std::abs(denom) <= kGeomEpsilon) {
    *error = ErrorCode::kRayParallelToPlane;
    return std::numeric_limits<double>::quiet_NaN();
  }
  const double depth = n.dot(p) / denom;
  if (!(depth > kGeomEpsilon)) {
    *error = ErrorCode::kNegativeIntersection;
    return std::numeric_limits<double>::quiet_NaN();
  }
  return depth;
}

}  // namespace

double depth_on_plane(const CameraView& view, const Eigen::Vector2d& pixel,
                      const PlaneSurface& plane) {
  ErrorCode error = ErrorCode::kInvalidInput;
  const double depth = intersect_depth(view, pixel, plane, &error);
  if (std::isnan(depth)) {
    throw Error(error, "ray does not meet the plane in front of the camera");
  }
  return depth;
}

double depth_on_plane_or_nan(const CameraView& view, const Eigen::Vector2d& pixel,
                             const PlaneSurface& plane) {
  ErrorCode error = ErrorCode::kInvalidInput;
  return intersect_depth(view, pixel, plane, &error);
}

PlaneSurface fronto_parallel_plane(const CameraView& view, double depth) {
  PlaneSurface plane;
  plane.point = view.to_world(Eigen::Vector3d(0.0, 0.0, depth));
  plane.normal = -(view.rotation.transpose() * Eigen::Vector3d::UnitZ());
  return plane;
}

PlaneSurface plane_from_depth_normal(const CameraView& view,
                                     const Eigen::Vector2d& pixel, double depth,
                                     const Eigen::Vector3d& camera_normal) {
  PlaneSurface plane;
  plane.point = view.to_world(view.ray(pixel) * depth);
  plane.normal = view.rotation.transpose() * camera_normal.normalized();
  return canonicalize(plane, view.center());
}

Eigen::Matrix3d rotation_from_axis_angle(const Eigen::Vector3d& axis_angle) {
  const double angle = axis_angle.norm();
  if (angle < 1e-300) return Eigen::Matrix3d::Identity();
  return Eigen::AngleAxisd(angle, axis_angle / angle).toRotationMatrix();
}

double convex_hull_area(std::span<const Eigen::Vector2d> points) {
  if (points.size() < 3) return 0.0;
  std::vector<Eigen::Vector2d> pts(points.begin(), points.end());
  std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  auto cross = [](const Eigen::Vector2d& o, const Eigen::Vector2d& a,
                  const Eigen::Vector2d& b) {
    return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
  };
  // Andrew's monotone chain.
  std::vector<Eigen::Vector2d> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0.0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
    while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k > 0 ? k - 1 : 0);
  if (hull.size() < 3) return 0.0;
  double area = 0.0;
  for (std::size_t i = 0; i < hull.size(); ++i) {
    const auto& a = hull[i];
    const auto& b = hull[(i + 1) % hull.size()];
    area += a.x() * b.y() - b.x() * a.y();
  }
  return 0.5 * std::abs(area);
}

}  // namespace hoverdepth
