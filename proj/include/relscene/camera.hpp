#pragma once

#include <array>
#include <optional>
#include <string>

#include "relscene/geometry.hpp"

namespace relscene {

/// Row-major 4x4 rigid transform.
using Mat4 = std::array<double, 16>;

Mat4 identity_pose();

/// World-to-camera pose of a camera at `eye` looking at `target`, image y
/// pointing along -up. Throws DomainError when eye == target or the view
/// direction is parallel to `up`.
Mat4 look_at(const Vec3& eye, const Vec3& target, const Vec3& up = {0.0, 0.0, 1.0});

/// Pinhole camera for one multi-view image. Right-handed, +z forward,
/// no distortion.
struct CameraView {
  std::string view_id;
  double fx = 1.0, fy = 1.0, cx = 0.0, cy = 0.0;
  Mat4 world_to_camera = identity_pose();
  int width = 1, height = 1;
  std::optional<std::string> image_ref;

  Vec3 to_camera(const Vec3& world) const;
};

/// Throws DomainError when focal lengths, image size or the rotation
/// block (orthonormal within 1e-6, det +1) are invalid.
void validate_view(const CameraView& view);

}  // namespace relscene
