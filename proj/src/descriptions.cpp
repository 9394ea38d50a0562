#include "relscene/descriptions.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <optional>
#include <set>
#include <thread>

#include "relscene/errors.hpp"
#include "relscene/log.hpp"

namespace relscene {

const Annotation* VlmRequest::annotation_for(int object_index) const {
  for (const auto& a : annotations) {
    if (a.object_index == object_index) return &a;
  }
  return nullptr;
}

const std::string& VlmRequest::key_name() const {
  const Annotation* a = annotation_for(key_object_index);
  if (!a) throw DomainError("request has no annotation for its key object");
  return a->display_name;
}

std::string_view to_string(DescriptionStatus status) {
  switch (status) {
    case DescriptionStatus::Generated: return "generated";
    case DescriptionStatus::Fallback: return "fallback";
    case DescriptionStatus::Missing: return "missing";
  }
  return "missing";
}

DescriptionStatus parse_description_status(std::string_view s) {
  if (s == "generated") return DescriptionStatus::Generated;
  if (s == "fallback") return DescriptionStatus::Fallback;
  if (s == "missing") return DescriptionStatus::Missing;
  throw DomainError("unknown description status '" + std::string(s) + "'");
}

std::string build_vlm_prompt(const std::string& key_name,
                             const std::vector<std::string>& other_names) {
  std::string out = "Describe clearly and briefly the relationships between the " +
                    key_name + " in the scene and nearby objects";
  if (!other_names.empty()) {
    out += " (";
    for (std::size_t i = 0; i < other_names.size(); ++i) {
      if (i) out += ", ";
      out += other_names[i];
    }
    out += ")";
  }
  out += ". Do not describe objects you cannot see.";
  return out;
}

VlmRequest make_vlm_request(const Scene& scene, std::size_t view_pos,
                            std::span<const ProjectionResult> results,
                            int key) {
  const CameraView& view = scene.views.at(view_pos);
  VlmRequest req;
  req.view_id = view.view_id;
  req.key_object_index = key;

  std::vector<const ProjectionResult*> visible;
  for (const auto& r : results) {
    if (r.visible()) visible.push_back(&r);
  }
  std::sort(visible.begin(), visible.end(), [](const auto* a, const auto* b) {
    return a->object_index < b->object_index;
  });

  std::map<std::string, int> label_count;
  for (const auto* r : visible) {
    const ObjectProposal* obj = scene.find(r->object_index);
    if (!obj) throw DomainError("projection refers to unknown object");
    ++label_count[obj->display_label()];
  }
  const ObjectProposal* key_obj = scene.find(key);
  if (!key_obj) throw DomainError("unknown key object " + std::to_string(key));

  std::map<std::string, int> seen;
  std::set<std::string> bare_done;
  for (const auto* r : visible) {
    const ObjectProposal& obj = *scene.find(r->object_index);
    const std::string label = obj.display_label();
    std::string name = label;
    if (label_count[label] > 1) name += " " + std::to_string(++seen[label]);
    req.visible_object_indices.push_back(obj.index());
    req.annotations.push_back({obj.index(), label_anchor(view, *r), name});
    req.mentions.push_back({name, obj.index()});
  }
  // Bare labels of duplicated categories resolve to the key object when it
  // carries the label, otherwise to the lowest visible index.
  for (const auto& [label, count] : label_count) {
    if (count < 2) continue;
    int target = -1;
    if (key_obj->display_label() == label) {
      target = key;
    } else {
      for (const auto* r : visible) {
        if (scene.find(r->object_index)->display_label() == label) {
          target = r->object_index;
          break;
        }
      }
    }
    req.mentions.push_back({label, target});
  }
  if (std::find(req.visible_object_indices.begin(), req.visible_object_indices.end(), key) ==
      req.visible_object_indices.end()) {
    throw DomainError("key object " + std::to_string(key) + " is not visible in view '" +
                      view.view_id + "'");
  }

  std::vector<std::string> others;
  for (const auto& a : req.annotations) {
    if (a.object_index != key) others.push_back(a.display_name);
  }
  req.prompt_text = build_vlm_prompt(req.key_name(), others);
  return req;
}

std::vector<VlmRequest> plan_description_requests(const Scene& scene,
                                                  const ProjectionTable& projections,
                                                  const KeyObjectPolicy& policy) {
  if (projections.size() != scene.views.size()) {
    throw DomainError("plan_description_requests: projections missing for some views");
  }
  std::vector<VlmRequest> plan;
  std::set<int> covered;
  for (std::size_t v = 0; v < scene.views.size(); ++v) {
    const auto keys = select_key_objects(scene.views[v], projections[v], policy);
    for (int key : keys) {
      if (!covered.insert(key).second) continue;
      plan.push_back(make_vlm_request(scene, v, projections[v], key));
    }
  }
  return plan;
}

namespace {

DescriptionRecord make_record(const VlmRequest& req, std::optional<std::string> text,
                              DescriptionStatus ok_status) {
  DescriptionRecord rec;
  rec.object_index = req.key_object_index;
  rec.source_view = req.view_id;
  rec.mentions = req.mentions;
  if (text && !text->empty()) {
    rec.text = std::move(*text);
    rec.status = ok_status;
  } else {
    rec.status = DescriptionStatus::Missing;
  }
  return rec;
}

std::optional<std::string> call_backend(DescriptionBackend& backend, const VlmRequest& req) {
  try {
    return backend.describe(req);
  } catch (const std::exception& e) {
    warn("description for object " + std::to_string(req.key_object_index) + " in view '" +
         req.view_id + "' failed: " + e.what());
    return std::nullopt;
  }
}

}  // namespace

DescriptionMap run_descriptions(const std::vector<VlmRequest>& plan,
                                DescriptionBackend& backend, int parallelism) {
  if (parallelism < 1) throw DomainError("parallelism must be at least 1");
  std::vector<std::optional<std::string>> slots(plan.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < plan.size(); i = next++) {
      slots[i] = call_backend(backend, plan[i]);
    }
  };
  const std::size_t n_threads = std::min<std::size_t>(parallelism, plan.size());
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }

  DescriptionMap out;
  for (std::size_t i = 0; i < plan.size(); ++i) {
    // first request for an object wins
    out.try_emplace(plan[i].key_object_index,
                    make_record(plan[i], std::move(slots[i]), DescriptionStatus::Generated));
  }
  return out;
}

std::string mock_describe(const VlmRequest& request, const Scene& scene) {
  const CameraView* view = scene.find_view(request.view_id);
  if (!view) throw DomainError("mock_describe: unknown view '" + request.view_id + "'");
  const ObjectProposal* key = scene.find(request.key_object_index);
  if (!key) throw DomainError("mock_describe: unknown key object");
  const std::string& key_name = request.key_name();

  const Vec3 kw = key->centroid();
  const Vec3 kc = view->to_camera(kw);
  std::string out = "There is a " + key_name + " in the room.";
  auto sentence = [&](std::string_view predicate, const std::string& other) {
    out += " The " + key_name + " is ";
    out += predicate;
    out += " the " + other + ".";
  };

  std::vector<int> others = request.visible_object_indices;
  std::sort(others.begin(), others.end());
  for (int idx : others) {
    if (idx == request.key_object_index) continue;
    const ObjectProposal* obj = scene.find(idx);
    const Annotation* ann = request.annotation_for(idx);
    if (!obj || !ann) continue;
    const Vec3 ow = obj->centroid();
    const Vec3 oc = view->to_camera(ow);
    const double dist = std::sqrt((ow.x - kw.x) * (ow.x - kw.x) + (ow.y - kw.y) * (ow.y - kw.y) +
                                  (ow.z - kw.z) * (ow.z - kw.z));
    if (dist < 1.0) sentence("near", ann->display_name);
    if (oc.x - kc.x > 0.2) sentence("to the left of", ann->display_name);
    if (kc.x - oc.x > 0.2) sentence("to the right of", ann->display_name);
    if (kw.z - ow.z > 0.3) sentence("above", ann->display_name);
    if (ow.z - kw.z > 0.3) sentence("below", ann->display_name);
  }
  return out;
}

std::string MockDescriptionBackend::describe(const VlmRequest& request) {
  return mock_describe(request, scene_);
}

CoverageReport coverage_report(const Scene& scene, const ProjectionTable& projections,
                               DescriptionMap records, DescriptionBackend& backend,
                               const CoverageOptions& options) {
  if (projections.size() != scene.views.size()) {
    throw DomainError("coverage_report: projections missing for some views");
  }
  CoverageReport report;
  std::vector<int> indices;
  for (const auto& o : scene.objects) indices.push_back(o.index());
  std::sort(indices.begin(), indices.end());

  for (int idx : indices) {
    auto it = records.find(idx);
    if (it != records.end() && it->second.status != DescriptionStatus::Missing) {
      (it->second.status == DescriptionStatus::Fallback ? report.fallback : report.generated)
          .push_back(idx);
      report.records.emplace(idx, std::move(it->second));
      continue;
    }
    std::optional<DescriptionRecord> rec;
    if (options.fallback) {
      // view with the most visible points, earliest on ties
      std::optional<std::size_t> best_view;
      int best_count = 0;
      for (std::size_t v = 0; v < projections.size(); ++v) {
        for (const auto& r : projections[v]) {
          if (r.object_index == idx && r.visible_point_count > best_count) {
            best_count = r.visible_point_count;
            best_view = v;
          }
        }
      }
      if (best_view) {
        const VlmRequest req = make_vlm_request(scene, *best_view, projections[*best_view], idx);
        rec = make_record(req, call_backend(backend, req), DescriptionStatus::Fallback);
      }
    }
    if (!rec) {
      if (it != records.end()) {
        rec = std::move(it->second);
      } else {
        rec = DescriptionRecord{};
        rec->object_index = idx;
        rec->status = DescriptionStatus::Missing;
      }
    }
    (rec->status == DescriptionStatus::Missing ? report.missing : report.fallback).push_back(idx);
    report.records.emplace(idx, std::move(*rec));
  }
  return report;
}

}  // namespace relscene
