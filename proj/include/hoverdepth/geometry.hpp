#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "hoverdepth/image.hpp"

namespace hoverdepth {

/// Degeneracy guard for all geometric predicates (meters).
inline constexpr double kGeomEpsilon = 1e-9;

struct CameraIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;

  Eigen::Matrix3d matrix() const;
  Eigen::Matrix3d inverse() const;
};

/// One calibrated view: pinhole intrinsics, world->camera pose, grayscale
/// intensities and their gradient magnitude. `view_weight` is the
/// un-normalized priority of the view in the photometric variance.
struct CameraView {
  CameraIntrinsics intrinsics;
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
  GrayImage image;
  GrayImage gradient;
  double view_weight = 1.0;

  Eigen::Vector3d center() const { return -rotation.transpose() * translation; }
  Eigen::Vector3d to_camera(const Eigen::Vector3d& world) const {
    return rotation * world + translation;
  }
  Eigen::Vector3d to_world(const Eigen::Vector3d& camera) const {
    return rotation.transpose() * (camera - translation);
  }
  /// Camera-frame ray through `pixel`, scaled so that z == 1.
  Eigen::Vector3d ray(const Eigen::Vector2d& pixel) const {
    return {(pixel.x() - intrinsics.cx) / intrinsics.fx,
            (pixel.y() - intrinsics.cy) / intrinsics.fy, 1.0};
  }
  int width() const { return image.width(); }
  int height() const { return image.height(); }
};

/// Builds a view and checks its invariants; the gradient image is derived
/// from `image`. Throws Error(kInvalidInput) on a non-rotation or bad K.
CameraView make_view(const CameraIntrinsics& intrinsics,
                     const Eigen::Matrix3d& rotation,
                     const Eigen::Vector3d& translation, GrayImage image,
                     double view_weight = 1.0);

struct SparsePoint {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Rgb color;
  double reproj_error = 0.0;
};

/// Plane through `point` with unit `normal`. Canonical planes have the
/// normal facing the reference camera center.
struct PlaneSurface {
  Eigen::Vector3d point = Eigen::Vector3d::Zero();
  Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();

  double signed_distance(const Eigen::Vector3d& x) const {
    return normal.dot(x - point);
  }
  friend bool operator==(const PlaneSurface&, const PlaneSurface&) = default;
};

/// Flip the normal, if needed, so that it points toward `viewpoint`.
PlaneSurface canonicalize(PlaneSurface plane, const Eigen::Vector3d& viewpoint);

/// Pinhole projection. Throws kNonPositiveDepth if the camera-frame depth is
/// not above kGeomEpsilon.
Eigen::Vector2d project(const CameraView& view, const Eigen::Vector3d& world);

/// Homography mapping reference pixels to target pixels through `plane`:
/// H = K_t (R_rel + t_rel n^T / d) K_r^-1 with the plane n^T X = d written in
/// the reference camera frame. Throws kDegeneratePlane when |d| is tiny.
Eigen::Matrix3d plane_homography(const CameraView& ref,
                                 const CameraView& target,
                                 const PlaneSurface& plane);

inline Eigen::Vector2d apply_homography(const Eigen::Matrix3d& h,
                                        const Eigen::Vector2d& pixel) {
  const Eigen::Vector3d q = h * pixel.homogeneous();
  return q.hnormalized();
}

struct PlaneFit {
  PlaneSurface plane;
  double rms = 0.0;
};

/// Total-least-squares plane: centroid plus the smallest-scatter direction,
/// oriented toward `viewpoint`. Throws kDegenerateConfiguration when there
/// are fewer than `min_count` points or they are (nearly) collinear.
PlaneFit fit_plane(std::span<const Eigen::Vector3d> points,
                   const Eigen::Vector3d& viewpoint, std::size_t min_count = 3);

/// Camera-frame depth where the ray through `pixel` meets `plane`.
/// Throws kRayParallelToPlane or kNegativeIntersection.
double depth_on_plane(const CameraView& view, const Eigen::Vector2d& pixel,
                      const PlaneSurface& plane);

/// Non-throwing variant used in hot loops; returns NaN when undefined.
double depth_on_plane_or_nan(const CameraView& view,
                             const Eigen::Vector2d& pixel,
                             const PlaneSurface& plane);

/// Plane perpendicular to the optical axis of `view` at camera depth `depth`.
PlaneSurface fronto_parallel_plane(const CameraView& view, double depth);

/// Plane through the point at `depth` along the ray of `pixel`, with a
/// camera-frame normal. Canonicalized toward the view center.
PlaneSurface plane_from_depth_normal(const CameraView& view,
                                     const Eigen::Vector2d& pixel, double depth,
                                     const Eigen::Vector3d& camera_normal);

/// Rotation from an axis-angle vector (radians).
Eigen::Matrix3d rotation_from_axis_angle(const Eigen::Vector3d& axis_angle);

/// Area of the convex hull of 2D points (0 for fewer than three points).
double convex_hull_area(std::span<const Eigen::Vector2d> points);

}  // namespace hoverdepth
