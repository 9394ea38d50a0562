#include "relscene/scene.hpp"

#include <set>

#include "relscene/errors.hpp"

namespace relscene {

const ObjectProposal* Scene::find(int index) const {
  for (const auto& o : objects) {
    if (o.index() == index) return &o;
  }
  return nullptr;
}

const CameraView* Scene::find_view(std::string_view view_id) const {
  for (const auto& v : views) {
    if (v.view_id == view_id) return &v;
  }
  return nullptr;
}

void validate_scene(const Scene& scene, std::size_t proposal_cap) {
  if (scene.objects.size() > proposal_cap) {
    throw DomainError("scene '" + scene.scene_id + "' has " +
                      std::to_string(scene.objects.size()) +
                      " objects, cap is " + std::to_string(proposal_cap));
  }
  std::set<std::string> ids;
  for (const auto& o : scene.objects) {
    if (!ids.insert(o.identifier()).second) {
      throw DomainError("scene '" + scene.scene_id + "': duplicate identifier " +
                        o.identifier());
    }
  }
  std::set<std::string> view_ids;
  for (const auto& v : scene.views) {
    validate_view(v);
    if (!view_ids.insert(v.view_id).second) {
      throw DomainError("scene '" + scene.scene_id + "': duplicate view id '" +
                        v.view_id + "'");
    }
  }
}

}  // namespace relscene
