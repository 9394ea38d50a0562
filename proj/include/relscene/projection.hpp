#pragma once

#include <optional>
#include <span>
#include <vector>

#include "relscene/camera.hpp"
#include "relscene/geometry.hpp"
#include "relscene/scene.hpp"

namespace relscene {

inline constexpr double kDepthEpsilon = 1e-6;

struct Pixel {
  double u = 0.0;
  double v = 0.0;
  friend bool operator==(const Pixel&, const Pixel&) = default;
};

struct PixelBox {
  double u_min, v_min, u_max, v_max;
  friend bool operator==(const PixelBox&, const PixelBox&) = default;
};

struct ProjectedPoint {
  Pixel px;
  double depth;
};

/// Optional per-view depth image (meters, row-major) for a z-buffer test.
struct DepthMap {
  int width = 0;
  int height = 0;
  std::vector<float> depth;
  double tolerance = 0.05;

  /// nullopt outside the map or where depth is non-positive (no reading).
  std::optional<double> at(const Pixel& px) const;
};

struct ProjectionResult {
  int object_index = 0;
  int visible_point_count = 0;
  double visible_fraction = 0.0;
  std::optional<Pixel> center_px;
  std::optional<PixelBox> bbox2d;
  std::optional<double> mean_depth;

  bool visible() const { return visible_point_count > 0; }
};

/// Camera transform plus perspective divide. nullopt when the point is at
/// or behind depth_eps or lands outside [0,width) x [0,height).
std::optional<ProjectedPoint> project_point(const CameraView& view,
                                            const Vec3& p);

/// Per-point projection of one proposal. With a depth map, points more
/// than depth->tolerance behind the recorded surface count as occluded.
ProjectionResult project_object(const CameraView& view,
                                const ObjectProposal& proposal,
                                const DepthMap* depth = nullptr);

/// All objects in all views; outer index follows scene.views, inner
/// follows scene.objects. Views are projected concurrently, output order
/// does not depend on the schedule.
std::vector<std::vector<ProjectionResult>> project_scene(
    const Scene& scene, int parallelism = 1);

struct KeyObjectPolicy {
  /// Side of the central box as a fraction of the image; 0.5 keeps
  /// u in [0.25w, 0.75w] and v in [0.25h, 0.75h].
  double central_fraction = 0.5;
  int min_visible = 50;
};

bool in_central_region(const CameraView& view, const Pixel& px,
                       const KeyObjectPolicy& policy);

/// Central, sufficiently visible objects ordered by descending visible
/// count, ties by ascending index.
std::vector<int> select_key_objects(const CameraView& view,
                                    std::span<const ProjectionResult> results,
                                    const KeyObjectPolicy& policy = {});

/// Projected center clamped to [2, w-2] x [2, h-2]. Throws DomainError for
/// an invisible result.
Pixel label_anchor(const CameraView& view, const ProjectionResult& result);

struct WeightedEmbedding {
  std::vector<double> embedding;
  double weight = 0.0;
};

/// Size-weighted mean sum(w_i e_i) / sum(w_i). Throws DomainError when all
/// weights are zero, any weight is negative, or dimensions disagree.
std::vector<double> aggregate_view_features(
    std::span<const WeightedEmbedding> per_view);

}  // namespace relscene
