// Regenerates the bundled toy scene and tasks:
//   make_toy_scene <out_dir>
// Writes scene.json, scene.points.bin and tasks.jsonl.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "relscene/io.hpp"
#include "relscene/pipeline.hpp"

using namespace relscene;
namespace fs = std::filesystem;

namespace {

struct ToyObject {
  int index;
  const char* label;
  Vec3 center;
  Vec3 size;
  float rgb[3];
};

const ToyObject kObjects[] = {
    {1, "table", {3.0, 3.0, 0.375}, {1.2, 0.8, 0.75}, {0.55f, 0.35f, 0.20f}},
    {2, "chair", {2.1, 3.0, 0.45}, {0.5, 0.5, 0.9}, {0.30f, 0.30f, 0.70f}},
    {3, "chair", {3.9, 3.0, 0.45}, {0.5, 0.5, 0.9}, {0.30f, 0.30f, 0.70f}},
    {4, "sofa", {3.0, 5.2, 0.4}, {2.0, 0.9, 0.8}, {0.60f, 0.15f, 0.15f}},
    {5, "lamp", {5.2, 5.3, 0.8}, {0.3, 0.3, 1.6}, {0.95f, 0.90f, 0.60f}},
    {6, "window", {3.0, 5.97, 1.7}, {1.4, 0.04, 1.2}, {0.75f, 0.85f, 0.95f}},
    {7, "curtain", {1.9, 5.9, 1.5}, {0.6, 0.1, 2.0}, {0.85f, 0.80f, 0.65f}},
    {8, "bookshelf", {0.3, 1.4, 0.9}, {0.4, 1.2, 1.8}, {0.40f, 0.25f, 0.10f}},
};

ObjectProposal make_object(const ToyObject& s, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  std::uniform_real_distribution<float> jitter(-0.05f, 0.05f);
  std::vector<Point> pts(400);
  for (auto& p : pts) {
    p.x = static_cast<float>(s.center.x + u(rng) * s.size.x);
    p.y = static_cast<float>(s.center.y + u(rng) * s.size.y);
    p.z = static_cast<float>(s.center.z + u(rng) * s.size.z);
    p.r = std::clamp(s.rgb[0] + jitter(rng), 0.f, 1.f);
    p.g = std::clamp(s.rgb[1] + jitter(rng), 0.f, 1.f);
    p.b = std::clamp(s.rgb[2] + jitter(rng), 0.f, 1.f);
  }
  return ObjectProposal(s.index, std::move(pts), std::string(s.label));
}

CameraView make_view(const char* id, Vec3 eye, Vec3 target) {
  CameraView v;
  v.view_id = id;
  v.width = 640;
  v.height = 480;
  v.fx = v.fy = 400.0;
  v.cx = 320.0;
  v.cy = 240.0;
  v.world_to_camera = look_at(eye, target);
  v.image_ref = std::string("images/") + id + ".jpg";
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::fprintf(stderr, "usage: make_toy_scene <out_dir>\n");
    return 64;
  }
  const fs::path out = argv[1];

  Scene scene;
  scene.scene_id = "toy_livingroom";
  std::mt19937_64 rng(20240601);
  for (const auto& s : kObjects) scene.objects.push_back(make_object(s, rng));
  scene.views.push_back(make_view("view_000", {3.0, 0.3, 1.6}, {3.0, 3.0, 0.5}));
  scene.views.push_back(make_view("view_001", {5.7, 1.2, 1.6}, {3.9, 3.0, 0.45}));
  scene.views.push_back(make_view("view_002", {1.0, 1.0, 1.6}, {3.0, 5.2, 0.6}));
  validate_scene(scene);

  PipelineOptions options;
  MockDescriptionBackend mock(scene);
  const CoverageReport coverage = describe_scene(scene, mock, options);

  auto box_of = [&](int idx) { return aabb_from_points(scene.find(idx)->points()); };

  std::vector<TaskInstance> tasks;
  // Grounding queries quote generated descriptions that no other object shares.
  std::multiset<std::string> texts;
  for (const auto& [idx, rec] : coverage.records) texts.insert(rec.text);
  int n = 0;
  for (const auto& [idx, rec] : coverage.records) {
    if (n == 3) break;
    if (rec.status != DescriptionStatus::Generated || texts.count(rec.text) != 1) continue;
    TaskInstance t;
    t.id = "toy_ground_" + std::to_string(n++);
    t.kind = TaskKind::GroundSingle;
    t.query = rec.text;
    t.gt_boxes = {box_of(idx)};
    t.target_object = idx;
    tasks.push_back(t);
  }
  if (n != 3) {
    std::fprintf(stderr, "make_toy_scene: only %d distinct generated descriptions\n", n);
    return 1;
  }

  TaskInstance multi;
  multi.id = "toy_multi_0";
  multi.kind = TaskKind::GroundMulti;
  multi.query = "Find all the chairs around the table.";
  multi.gt_boxes = {box_of(2), box_of(3)};
  tasks.push_back(multi);

  TaskInstance caption;
  caption.id = "toy_caption_0";
  caption.kind = TaskKind::Caption;
  caption.query = "Describe the sofa and the objects around it.";
  caption.gt_boxes = {box_of(4)};
  caption.gt_texts = {coverage.records.at(4).text, "a red sofa standing under the window"};
  caption.target_object = 4;
  tasks.push_back(caption);

  TaskInstance qa;
  qa.id = "toy_qa_0";
  qa.kind = TaskKind::QA;
  qa.query = "What is the lamp next to?";
  qa.gt_texts = {"the sofa", "sofa"};
  qa.target_object = 5;
  tasks.push_back(qa);

  for (const auto& t : tasks) validate_task(t);
  write_scene(scene, out / "scene.json");
  write_tasks(out / "tasks.jsonl", tasks);

  for (const auto& [idx, rec] : coverage.records) {
    std::fprintf(stderr, "%s [%s] %s\n", make_identifier(idx).c_str(),
                 std::string(to_string(rec.status)).c_str(), rec.text.c_str());
  }
  return 0;
}
