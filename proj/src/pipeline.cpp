#include "relscene/pipeline.hpp"

#include <algorithm>

#include "relscene/errors.hpp"
#include "relscene/features.hpp"
#include "relscene/log.hpp"
#include "relscene/projection.hpp"
#include "relscene/text_encoding.hpp"

namespace relscene {

namespace {

std::vector<float> to_float(const std::vector<double>& v) {
  return {v.begin(), v.end()};
}

Eigen::VectorXd modality_vector(const std::map<int, std::vector<float>>& table, int index, int dim,
                                const char* name) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(dim);
  const auto it = table.find(index);
  if (it == table.end()) {
    warn(std::string("no ") + name + " embedding for " + make_identifier(index) +
         "; using zeros");
    return out;
  }
  if (static_cast<int>(it->second.size()) != dim) {
    throw DomainError(std::string(name) + " embedding for " + make_identifier(index) +
                      " has dimension " + std::to_string(it->second.size()) + ", expected " +
                      std::to_string(dim));
  }
  for (int i = 0; i < dim; ++i) out[i] = it->second[i];
  return out;
}

}  // namespace

CoverageReport describe_scene(const Scene& scene, DescriptionBackend& backend,
                              const PipelineOptions& options) {
  const ProjectionTable projections = project_scene(scene, options.parallelism);
  const auto plan = plan_description_requests(scene, projections, options.policy);
  auto records = run_descriptions(plan, backend, options.parallelism);
  return coverage_report(scene, projections, std::move(records), backend, options.coverage);
}

SceneEmbeddings mock_scene_embeddings(const Scene& scene, const DescriptionMap& descriptions,
                                      const FusionConfig& config, std::uint64_t seed) {
  SceneEmbeddings out;
  const MockPointEncoder point(config.point_dim, seed);
  const MockVisualEncoder visual(config.visual_dim, seed);
  for (const auto& o : scene.objects) {
    out.point[o.index()] = to_float(point.encode(o));
    out.visual[o.index()] = to_float(visual.encode(scene, o));
  }
  const MockTextEncoder text(config.text_dim);
  for (auto& r : encode_descriptions(descriptions, text)) out.text[r.object_index] = std::move(r.vector);
  return out;
}

std::map<int, ObjectTokenBlock> fuse_scene(const Scene& scene, const SceneEmbeddings& embeddings,
                                           const ModalityHeads& heads,
                                           const IdentifierEmbeddings& identifiers,
                                           const FusionConfig& config) {
  std::map<int, ObjectTokenBlock> blocks;
  for (const auto& o : scene.objects) {
    const int idx = o.index();
    blocks.emplace(idx, build_object_block(
                            identifiers.embedding(idx),
                            modality_vector(embeddings.point, idx, config.point_dim, "point"),
                            modality_vector(embeddings.visual, idx, config.visual_dim, "visual"),
                            modality_vector(embeddings.text, idx, config.text_dim, "text"), heads));
  }
  return blocks;
}

std::vector<AssembledPrompt> build_task_prompts(const Scene& scene,
                                                const std::map<int, ObjectTokenBlock>* blocks,
                                                const DescriptionMap& descriptions,
                                                std::span<const TaskInstance> tasks,
                                                const PipelineOptions& options) {
  std::vector<AssembledPrompt> out;
  out.reserve(tasks.size());
  for (const auto& task : tasks) {
    auto p = assemble_prompt(scene, blocks, descriptions, task.query, options.style, options.flags,
                             options.prompt_template);
    p.bundle.task_id = task.id;
    p.bundle.task_kind = std::string(to_string(task.kind));
    out.push_back(std::move(p));
  }
  return out;
}

Prediction prediction_from_answer(const Scene& scene, const TaskInstance& task,
                                  const std::string& answer) {
  Prediction p;
  p.id = task.id;
  std::string rest;
  std::size_t i = 0;
  while (i < answer.size()) {
    if (answer.compare(i, 4, "<OBJ") == 0 && i + 8 <= answer.size()) {
      if (const auto idx = parse_identifier(std::string_view(answer).substr(i, 8))) {
        if (const ObjectProposal* obj = scene.find(*idx)) {
          p.boxes.push_back(aabb_from_points(obj->points()));
        }
        i += 8;
        continue;
      }
    }
    rest.push_back(answer[i++]);
  }
  if (task.kind == TaskKind::GroundSingle && p.boxes.size() > 1) p.boxes.resize(1);
  if (task.kind == TaskKind::Caption || task.kind == TaskKind::QA) {
    const auto b = rest.find_first_not_of(" \t\n");
    if (b != std::string::npos) {
      const auto e = rest.find_last_not_of(" \t\n");
      p.text = rest.substr(b, e - b + 1);
    } else {
      p.text = std::string();
    }
  }
  return p;
}

E2eResult run_e2e_mock(const Scene& scene, std::span<const TaskInstance> tasks,
                       const PipelineOptions& options) {
  E2eResult result;
  MockDescriptionBackend describer(scene);
  result.coverage = describe_scene(scene, describer, options);
  const auto& descriptions = result.coverage.records;

  const SceneEmbeddings embeddings =
      mock_scene_embeddings(scene, descriptions, options.fusion, options.seed);
  const ModalityHeads heads = ModalityHeads::random(options.fusion, options.seed);
  const IdentifierEmbeddings identifiers(options.fusion.token_dim, options.seed);
  const auto blocks = fuse_scene(scene, embeddings, heads, identifiers, options.fusion);

  MockAnswerBackend answerer(descriptions);
  for (const auto& p : build_task_prompts(scene, &blocks, descriptions, tasks, options)) {
    result.prompts.push_back(p.bundle);
  }
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    result.predictions.push_back(
        prediction_from_answer(scene, tasks[i], answerer.answer(result.prompts[i])));
  }
  result.report = evaluate(tasks, result.predictions);
  return result;
}

}  // namespace relscene
