#include "relscene/projection.hpp"

#include <algorithm>
#include <cmath>
#include <future>

#include "relscene/errors.hpp"

namespace relscene {

std::optional<double> DepthMap::at(const Pixel& px) const {
  const int u = static_cast<int>(std::floor(px.u));
  const int v = static_cast<int>(std::floor(px.v));
  if (u < 0 || v < 0 || u >= width || v >= height) return std::nullopt;
  const float d = depth[static_cast<std::size_t>(v) * width + u];
  if (!(d > 0.f)) return std::nullopt;
  return d;
}

std::optional<ProjectedPoint> project_point(const CameraView& view,
                                            const Vec3& p) {
  const Vec3 c = view.to_camera(p);
  if (!(c.z > kDepthEpsilon)) return std::nullopt;
  const double u = view.fx * c.x / c.z + view.cx;
  const double v = view.fy * c.y / c.z + view.cy;
  if (!(u >= 0.0 && u < view.width && v >= 0.0 && v < view.height)) {
    return std::nullopt;
  }
  return ProjectedPoint{{u, v}, c.z};
}

ProjectionResult project_object(const CameraView& view,
                                const ObjectProposal& proposal,
                                const DepthMap* depth) {
  ProjectionResult r;
  r.object_index = proposal.index();
  double su = 0.0, sv = 0.0, sd = 0.0;
  PixelBox box{0, 0, 0, 0};
  for (const Point& p : proposal.points()) {
    const auto pp = project_point(view, p.position());
    if (!pp) continue;
    if (depth) {
      const auto surface = depth->at(pp->px);
      if (surface && pp->depth > *surface + depth->tolerance) continue;
    }
    if (r.visible_point_count == 0) {
      box = {pp->px.u, pp->px.v, pp->px.u, pp->px.v};
    } else {
      box.u_min = std::min(box.u_min, pp->px.u);
      box.v_min = std::min(box.v_min, pp->px.v);
      box.u_max = std::max(box.u_max, pp->px.u);
      box.v_max = std::max(box.v_max, pp->px.v);
    }
    ++r.visible_point_count;
    su += pp->px.u;
    sv += pp->px.v;
    sd += pp->depth;
  }
  r.visible_fraction = static_cast<double>(r.visible_point_count) /
                       static_cast<double>(proposal.points().size());
  if (r.visible_point_count > 0) {
    const double n = r.visible_point_count;
    r.center_px = Pixel{su / n, sv / n};
    r.bbox2d = box;
    r.mean_depth = sd / n;
  }
  return r;
}

std::vector<std::vector<ProjectionResult>> project_scene(const Scene& scene,
                                                         int parallelism) {
  std::vector<std::vector<ProjectionResult>> out(scene.views.size());
  auto project_view = [&scene, &out](std::size_t v) {
    auto& row = out[v];
    row.reserve(scene.objects.size());
    for (const auto& obj : scene.objects) {
      row.push_back(project_object(scene.views[v], obj));
    }
  };
  if (parallelism <= 1 || scene.views.size() <= 1) {
    for (std::size_t v = 0; v < scene.views.size(); ++v) project_view(v);
    return out;
  }
  // each task owns a disjoint slot of `out`
  std::vector<std::future<void>> tasks;
  const std::size_t workers =
      std::min<std::size_t>(parallelism, scene.views.size());
  for (std::size_t w = 0; w < workers; ++w) {
    tasks.push_back(std::async(std::launch::async, [&, w] {
      for (std::size_t v = w; v < scene.views.size(); v += workers) {
        project_view(v);
      }
    }));
  }
  for (auto& t : tasks) t.get();
  return out;
}

bool in_central_region(const CameraView& view, const Pixel& px,
                       const KeyObjectPolicy& policy) {
  const double margin = (1.0 - policy.central_fraction) / 2.0;
  return px.u >= margin * view.width && px.u <= (1.0 - margin) * view.width &&
         px.v >= margin * view.height && px.v <= (1.0 - margin) * view.height;
}

std::vector<int> select_key_objects(const CameraView& view,
                                    std::span<const ProjectionResult> results,
                                    const KeyObjectPolicy& policy) {
  std::vector<const ProjectionResult*> keys;
  for (const auto& r : results) {
    if (!r.center_px || r.visible_point_count < policy.min_visible) continue;
    if (!in_central_region(view, *r.center_px, policy)) continue;
    keys.push_back(&r);
  }
  std::sort(keys.begin(), keys.end(), [](const auto* a, const auto* b) {
    if (a->visible_point_count != b->visible_point_count) {
      return a->visible_point_count > b->visible_point_count;
    }
    return a->object_index < b->object_index;
  });
  std::vector<int> out;
  out.reserve(keys.size());
  for (const auto* k : keys) out.push_back(k->object_index);
  return out;
}

Pixel label_anchor(const CameraView& view, const ProjectionResult& result) {
  if (!result.center_px) {
    throw DomainError("label_anchor: object " +
                      std::to_string(result.object_index) +
                      " is not visible in view '" + view.view_id + "'");
  }
  auto clamp_axis = [](double x, int extent) {
    const double lo = 2.0;
    const double hi = extent - 2.0;
    if (hi < lo) return extent / 2.0;  // image too small for the margin
    return std::clamp(x, lo, hi);
  };
  return {clamp_axis(result.center_px->u, view.width),
          clamp_axis(result.center_px->v, view.height)};
}

std::vector<double> aggregate_view_features(
    std::span<const WeightedEmbedding> per_view) {
  if (per_view.empty()) {
    throw DomainError("aggregate_view_features: no views");
  }
  const std::size_t dim = per_view.front().embedding.size();
  double total = 0.0;
  for (const auto& e : per_view) {
    if (e.embedding.size() != dim) {
      throw DomainError("aggregate_view_features: dimension mismatch (" +
                        std::to_string(e.embedding.size()) + " vs " +
                        std::to_string(dim) + ")");
    }
    if (!(e.weight >= 0.0) || !std::isfinite(e.weight)) {
      throw DomainError("aggregate_view_features: invalid weight");
    }
    total += e.weight;
  }
  if (!(total > 0.0)) {
    throw DomainError("aggregate_view_features: all weights are zero");
  }
  std::vector<double> out(dim, 0.0);
  for (const auto& e : per_view) {
    const double w = e.weight / total;
    for (std::size_t i = 0; i < dim; ++i) out[i] += w * e.embedding[i];
  }
  return out;
}

}  // namespace relscene
