#pragma once

#include <cstdint>
#include <vector>

#include "relscene/projection.hpp"
#include "relscene/scene.hpp"

namespace relscene {

inline constexpr int kDefaultPointDim = 1024;
inline constexpr int kDefaultVisualDim = 1024;

/// Deterministic stand-in for a point-cloud encoder: a fixed random
/// projection of summary statistics (centroid, extent, mean color, size)
/// squashed with tanh.
class MockPointEncoder {
 public:
  explicit MockPointEncoder(int dim = kDefaultPointDim, std::uint64_t seed = 42);
  int dim() const { return dim_; }
  std::vector<double> encode(const ObjectProposal& object) const;

 private:
  int dim_;
  std::vector<double> weights_;
};

/// Deterministic stand-in for per-view crop embeddings. Each view's crop
/// vector comes from the visible points' color and 2D footprint; views are
/// merged with aggregate_view_features weighted by visible point count.
class MockVisualEncoder {
 public:
  explicit MockVisualEncoder(int dim = kDefaultVisualDim, std::uint64_t seed = 42);
  int dim() const { return dim_; }

  /// nullopt when the object is not visible in the view.
  std::optional<std::vector<double>> encode_view(const CameraView& view,
                                                 const ObjectProposal& object) const;

  /// Zero vector when the object is invisible in every view.
  std::vector<double> encode(const Scene& scene, const ObjectProposal& object) const;

 private:
  int dim_;
  std::vector<double> weights_;
};

/// Portable uniform(-1, 1) draws from mt19937_64.
std::vector<double> seeded_uniform(std::uint64_t seed, std::size_t n);

}  // namespace relscene
