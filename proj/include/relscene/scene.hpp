#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "relscene/camera.hpp"
#include "relscene/geometry.hpp"

namespace relscene {

inline constexpr std::size_t kDefaultProposalCap = 100;

struct Scene {
  std::string scene_id;
  std::vector<ObjectProposal> objects;
  std::vector<CameraView> views;

  /// nullptr when no object carries that index.
  const ObjectProposal* find(int index) const;
  const CameraView* find_view(std::string_view view_id) const;
};

/// Checks identifier uniqueness, the proposal cap, RGB ranges and every
/// camera. Throws DomainError naming the offending object or view.
void validate_scene(const Scene& scene,
                    std::size_t proposal_cap = kDefaultProposalCap);

}  // namespace relscene
