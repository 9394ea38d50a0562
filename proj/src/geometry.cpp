#include "relscene/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "relscene/errors.hpp"

namespace relscene {

std::string make_identifier(int index) {
  if (index < 0 || index > kMaxObjectIndex) {
    throw DomainError("object index " + std::to_string(index) +
                      " outside identifier range [0, 999]");
  }
  char buf[16];
  std::snprintf(buf, sizeof(buf), "<OBJ%03d>", index);
  return buf;
}

std::optional<int> parse_identifier(std::string_view token) {
  if (token.size() != 8 || token.substr(0, 4) != "<OBJ" || token[7] != '>') {
    return std::nullopt;
  }
  int value = 0;
  for (char c : token.substr(4, 3)) {
    if (c < '0' || c > '9') return std::nullopt;
    value = value * 10 + (c - '0');
  }
  return value;
}

ObjectProposal::ObjectProposal(int index, std::vector<Point> points,
                               std::optional<std::string> label)
    : index_(index),
      identifier_(make_identifier(index)),
      points_(std::move(points)),
      label_(std::move(label)) {
  if (points_.empty()) {
    throw DomainError("object " + identifier_ + " has no points");
  }
  for (std::size_t i = 0; i < points_.size(); ++i) {
    const Point& p = points_[i];
    for (float c : {p.r, p.g, p.b}) {
      if (!(c >= 0.f && c <= 1.f)) {
        throw DomainError("object " + identifier_ + " point " +
                          std::to_string(i) + ": rgb outside [0,1]");
      }
    }
    for (float c : {p.x, p.y, p.z}) {
      if (!std::isfinite(c)) {
        throw DomainError("object " + identifier_ + " point " +
                          std::to_string(i) + ": non-finite coordinate");
      }
    }
  }
  if (label_ && label_->empty()) label_.reset();
}

std::string ObjectProposal::display_label() const {
  return label_ ? *label_ : std::string("object");
}

Vec3 ObjectProposal::centroid() const {
  Vec3 c;
  for (const Point& p : points_) {
    c.x += p.x;
    c.y += p.y;
    c.z += p.z;
  }
  const double n = static_cast<double>(points_.size());
  return {c.x / n, c.y / n, c.z / n};
}

double Aabb::volume() const {
  return std::max(0.0, max.x - min.x) * std::max(0.0, max.y - min.y) *
         std::max(0.0, max.z - min.z);
}

bool Aabb::contains(const Vec3& p) const {
  return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y &&
         p.z >= min.z && p.z <= max.z;
}

bool Aabb::contains(const Aabb& other) const {
  return contains(other.min) && contains(other.max);
}

Aabb Aabb::translated(const Vec3& t) const {
  return {{min.x + t.x, min.y + t.y, min.z + t.z},
          {max.x + t.x, max.y + t.y, max.z + t.z}};
}

bool Aabb::valid() const {
  return min.x <= max.x && min.y <= max.y && min.z <= max.z;
}

namespace {

template <typename It, typename Get>
Aabb envelope(It first, It last, Get get) {
  if (first == last) throw DomainError("aabb_from_points: empty point list");
  Vec3 lo = get(*first);
  Vec3 hi = lo;
  for (auto it = first; it != last; ++it) {
    const Vec3 p = get(*it);
    lo = {std::min(lo.x, p.x), std::min(lo.y, p.y), std::min(lo.z, p.z)};
    hi = {std::max(hi.x, p.x), std::max(hi.y, p.y), std::max(hi.z, p.z)};
  }
  return {lo, hi};
}

}  // namespace

Aabb aabb_from_points(std::span<const Point> points) {
  return envelope(points.begin(), points.end(),
                  [](const Point& p) { return p.position(); });
}

Aabb aabb_from_points(std::span<const Vec3> points) {
  return envelope(points.begin(), points.end(),
                  [](const Vec3& p) { return p; });
}

double iou_aabb(const Aabb& a, const Aabb& b) {
  const double ix = std::max(0.0, std::min(a.max.x, b.max.x) - std::max(a.min.x, b.min.x));
  const double iy = std::max(0.0, std::min(a.max.y, b.max.y) - std::max(a.min.y, b.min.y));
  const double iz = std::max(0.0, std::min(a.max.z, b.max.z) - std::max(a.min.z, b.min.z));
  const double inter = ix * iy * iz;
  const double uni = a.volume() + b.volume() - inter;
  if (!(uni > 0.0)) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

}  // namespace relscene
