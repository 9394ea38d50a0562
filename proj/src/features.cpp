#include "relscene/features.hpp"

#include <cmath>
#include <random>

#include "relscene/errors.hpp"

namespace relscene {

namespace {

constexpr int kPointFeatures = 10;
constexpr int kViewFeatures = 8;

std::vector<double> project_tanh(const std::vector<double>& w, int dim,
                                 const std::vector<double>& f) {
  std::vector<double> out(dim);
  const std::size_t in = f.size();
  for (int i = 0; i < dim; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < in; ++j) acc += w[i * in + j] * f[j];
    out[i] = std::tanh(acc);
  }
  return out;
}

}  // namespace

std::vector<double> seeded_uniform(std::uint64_t seed, std::size_t n) {
  std::mt19937_64 rng(seed);
  std::vector<double> out(n);
  for (auto& x : out) {
    const double unit = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    x = 2.0 * unit - 1.0;
  }
  return out;
}

MockPointEncoder::MockPointEncoder(int dim, std::uint64_t seed)
    : dim_(dim), weights_(seeded_uniform(seed ^ 0x5043ULL, static_cast<std::size_t>(dim) * kPointFeatures)) {
  if (dim <= 0) throw DomainError("MockPointEncoder: dim must be positive");
}

std::vector<double> MockPointEncoder::encode(const ObjectProposal& object) const {
  const Aabb box = aabb_from_points(object.points());
  const Vec3 c = object.centroid();
  double r = 0, g = 0, b = 0;
  for (const Point& p : object.points()) {
    r += p.r;
    g += p.g;
    b += p.b;
  }
  const double n = static_cast<double>(object.points().size());
  const std::vector<double> f{c.x, c.y, c.z,
                              box.max.x - box.min.x, box.max.y - box.min.y, box.max.z - box.min.z,
                              r / n, g / n, b / n, std::log1p(n)};
  return project_tanh(weights_, dim_, f);
}

MockVisualEncoder::MockVisualEncoder(int dim, std::uint64_t seed)
    : dim_(dim), weights_(seeded_uniform(seed ^ 0x5649ULL, static_cast<std::size_t>(dim) * kViewFeatures)) {
  if (dim <= 0) throw DomainError("MockVisualEncoder: dim must be positive");
}

std::optional<std::vector<double>> MockVisualEncoder::encode_view(
    const CameraView& view, const ObjectProposal& object) const {
  double r = 0, g = 0, b = 0;
  int count = 0;
  for (const Point& p : object.points()) {
    if (!project_point(view, p.position())) continue;
    r += p.r;
    g += p.g;
    b += p.b;
    ++count;
  }
  if (count == 0) return std::nullopt;
  const ProjectionResult pr = project_object(view, object);
  const PixelBox& box = *pr.bbox2d;
  const double w = view.width, h = view.height;
  const std::vector<double> f{r / count, g / count, b / count,
                              box.u_min / w, box.v_min / h, box.u_max / w, box.v_max / h,
                              1.0 / (1.0 + *pr.mean_depth)};
  return project_tanh(weights_, dim_, f);
}

std::vector<double> MockVisualEncoder::encode(const Scene& scene,
                                              const ObjectProposal& object) const {
  std::vector<WeightedEmbedding> per_view;
  for (const auto& view : scene.views) {
    auto e = encode_view(view, object);
    if (!e) continue;
    const double weight = project_object(view, object).visible_point_count;
    per_view.push_back({std::move(*e), weight});
  }
  if (per_view.empty()) return std::vector<double>(dim_, 0.0);
  return aggregate_view_features(per_view);
}

}  // namespace relscene
