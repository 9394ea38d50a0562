#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace relscene {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend bool operator==(const Vec3&, const Vec3&) = default;
};

/// One colored scan point. Stored as float32 so scene files round-trip
/// bit-exactly.
struct Point {
  float x = 0.f, y = 0.f, z = 0.f;
  float r = 0.f, g = 0.f, b = 0.f;

  Vec3 position() const { return {x, y, z}; }
  friend bool operator==(const Point&, const Point&) = default;
};

inline constexpr int kMaxObjectIndex = 999;

/// "<OBJ" + 3-digit zero-padded index + ">". Throws DomainError outside
/// [0, 999].
std::string make_identifier(int index);

/// Inverse of make_identifier; nullopt unless the token is exactly of the
/// identifier form.
std::optional<int> parse_identifier(std::string_view token);

/// A segmented object: its points, its identifier token and an optional
/// category label.
class ObjectProposal {
 public:
  ObjectProposal(int index, std::vector<Point> points,
                 std::optional<std::string> label = std::nullopt);

  int index() const { return index_; }
  const std::string& identifier() const { return identifier_; }
  std::span<const Point> points() const { return points_; }
  const std::optional<std::string>& label() const { return label_; }

  /// Label, or "object" for unlabeled proposals.
  std::string display_label() const;
  Vec3 centroid() const;

 private:
  int index_;
  std::string identifier_;
  std::vector<Point> points_;
  std::optional<std::string> label_;
};

/// Axis-aligned box in world coordinates, closed bounds.
struct Aabb {
  Vec3 min;
  Vec3 max;

  double volume() const;
  bool contains(const Vec3& p) const;
  bool contains(const Aabb& other) const;
  Aabb translated(const Vec3& t) const;
  bool valid() const;

  friend bool operator==(const Aabb&, const Aabb&) = default;
};

/// Componentwise min/max envelope. Throws DomainError on an empty span.
Aabb aabb_from_points(std::span<const Point> points);
Aabb aabb_from_points(std::span<const Vec3> points);

/// Intersection volume over union volume. Zero-volume unions yield 0, so
/// degenerate boxes never score a hit.
double iou_aabb(const Aabb& a, const Aabb& b);

}  // namespace relscene
