#include "relscene/camera.hpp"

#include <cmath>

#include "relscene/errors.hpp"

namespace relscene {

Mat4 identity_pose() {
  return {1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1};
}

Mat4 look_at(const Vec3& eye, const Vec3& target, const Vec3& up) {
  auto normalize = [](Vec3 v) {
    const double n = std::sqrt(v.x * v.x + v.y * v.y + v.z * v.z);
    if (!(n > 1e-12)) throw DomainError("look_at: degenerate direction");
    return Vec3{v.x / n, v.y / n, v.z / n};
  };
  auto cross = [](const Vec3& a, const Vec3& b) {
    return Vec3{a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
  };
  const Vec3 f = normalize({target.x - eye.x, target.y - eye.y, target.z - eye.z});
  const Vec3 r = normalize(cross(f, up));
  const Vec3 d = cross(f, r);
  auto dot = [](const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; };
  return {r.x, r.y, r.z, -dot(r, eye),
          d.x, d.y, d.z, -dot(d, eye),
          f.x, f.y, f.z, -dot(f, eye),
          0.0, 0.0, 0.0, 1.0};
}

Vec3 CameraView::to_camera(const Vec3& p) const {
  const Mat4& m = world_to_camera;
  return {m[0] * p.x + m[1] * p.y + m[2] * p.z + m[3],
          m[4] * p.x + m[5] * p.y + m[6] * p.z + m[7],
          m[8] * p.x + m[9] * p.y + m[10] * p.z + m[11]};
}

void validate_view(const CameraView& view) {
  const std::string where = "view '" + view.view_id + "': ";
  if (view.view_id.empty()) throw DomainError("view with empty view_id");
  if (!(view.fx > 0.0) || !(view.fy > 0.0)) {
    throw DomainError(where + "focal lengths must be positive");
  }
  if (!std::isfinite(view.cx) || !std::isfinite(view.cy)) {
    throw DomainError(where + "non-finite principal point");
  }
  if (view.width < 1 || view.height < 1) {
    throw DomainError(where + "image size must be at least 1x1");
  }
  const Mat4& m = view.world_to_camera;
  for (double v : m) {
    if (!std::isfinite(v)) throw DomainError(where + "non-finite pose entry");
  }
  if (m[12] != 0.0 || m[13] != 0.0 || m[14] != 0.0 || m[15] != 1.0) {
    throw DomainError(where + "pose bottom row must be (0,0,0,1)");
  }
  // R * R^T == I
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      double dot = 0.0;
      for (int k = 0; k < 3; ++k) dot += m[i * 4 + k] * m[j * 4 + k];
      if (std::abs(dot - (i == j ? 1.0 : 0.0)) > 1e-6) {
        throw DomainError(where + "rotation block is not orthonormal");
      }
    }
  }
  const double det = m[0] * (m[5] * m[10] - m[6] * m[9]) -
                     m[1] * (m[4] * m[10] - m[6] * m[8]) +
                     m[2] * (m[4] * m[9] - m[5] * m[8]);
  if (det < 0.0) throw DomainError(where + "rotation block is a reflection");
}

}  // namespace relscene
