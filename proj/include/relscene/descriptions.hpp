#pragma once

#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "relscene/projection.hpp"
#include "relscene/scene.hpp"

namespace relscene {

/// Per-view projections, outer index following scene.views.
using ProjectionTable = std::vector<std::vector<ProjectionResult>>;

/// A name overlaid on the image at an object's projected center.
struct Annotation {
  int object_index = 0;
  Pixel anchor;
  std::string display_name;
};

/// A name the describer may use, and the object it refers to. Recorded at
/// planning time so later rewrites can map names back to identifiers.
struct NameMention {
  std::string name;
  int object_index = 0;

  friend bool operator==(const NameMention&, const NameMention&) = default;
};

struct VlmRequest {
  std::string view_id;
  int key_object_index = 0;
  std::vector<int> visible_object_indices;
  std::string prompt_text;
  std::vector<Annotation> annotations;
  std::vector<NameMention> mentions;

  const Annotation* annotation_for(int object_index) const;
  const std::string& key_name() const;
};

enum class DescriptionStatus { Generated, Fallback, Missing };

std::string_view to_string(DescriptionStatus status);
DescriptionStatus parse_description_status(std::string_view s);

struct DescriptionRecord {
  int object_index = 0;
  std::string text;
  std::string source_view;
  DescriptionStatus status = DescriptionStatus::Missing;
  std::vector<NameMention> mentions;
  /// Fields read from a descriptions file that this type does not model.
  nlohmann::json extra = nlohmann::json::object();
};

using DescriptionMap = std::map<int, DescriptionRecord>;

/// The relationship prompt with names substituted. An empty `other_names`
/// drops the parenthesised list.
std::string build_vlm_prompt(const std::string& key_name,
                             const std::vector<std::string>& other_names);

/// Request for `key` in view `view_pos`, listing every visible object of
/// that view. Duplicate labels become "chair 1", "chair 2" in index order.
VlmRequest make_vlm_request(const Scene& scene, std::size_t view_pos,
                            std::span<const ProjectionResult> results,
                            int key);

/// Views in scene order, key objects in selection order; an object already
/// covered by an earlier request is skipped.
std::vector<VlmRequest> plan_description_requests(
    const Scene& scene, const ProjectionTable& projections,
    const KeyObjectPolicy& policy = {});

/// Vision-language seam. Implementations must tolerate concurrent calls and
/// signal failure by throwing (BackendError after their own retries).
class DescriptionBackend {
 public:
  virtual ~DescriptionBackend() = default;
  virtual std::string describe(const VlmRequest& request) = 0;
};

/// Executes the plan with up to `parallelism` concurrent calls. Results are
/// committed in plan order; failures become Missing records.
DescriptionMap run_descriptions(const std::vector<VlmRequest>& plan,
                                DescriptionBackend& backend,
                                int parallelism = 1);

/// Geometric stand-in for the vision-language model. Relations come from
/// centroids: near (< 1.0 m apart), left/right of (camera-space x differs
/// by > 0.2 m), above/below (world z differs by > 0.3 m).
std::string mock_describe(const VlmRequest& request, const Scene& scene);

class MockDescriptionBackend : public DescriptionBackend {
 public:
  explicit MockDescriptionBackend(const Scene& scene) : scene_(scene) {}
  std::string describe(const VlmRequest& request) override;

 private:
  const Scene& scene_;
};

struct CoverageOptions {
  bool fallback = true;
};

struct CoverageReport {
  DescriptionMap records;  // one per scene object
  std::vector<int> generated;
  std::vector<int> fallback;
  std::vector<int> missing;
};

/// Completes `records` to one entry per scene object. With fallback on,
/// never-central objects are described from the view where most of their
/// points are visible; objects visible nowhere stay Missing.
CoverageReport coverage_report(const Scene& scene,
                               const ProjectionTable& projections,
                               DescriptionMap records,
                               DescriptionBackend& backend,
                               const CoverageOptions& options = {});

}  // namespace relscene
