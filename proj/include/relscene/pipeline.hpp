#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "relscene/backends.hpp"
#include "relscene/descriptions.hpp"
#include "relscene/fusion.hpp"
#include "relscene/metrics.hpp"
#include "relscene/prompt.hpp"
#include "relscene/scene.hpp"

namespace relscene {

struct PipelineOptions {
  KeyObjectPolicy policy;
  CoverageOptions coverage;
  ReferenceStyle style = ReferenceStyle::IdOnly;
  IntegrationFlags flags;
  FusionConfig fusion;
  PromptTemplate prompt_template;
  int parallelism = 4;
  std::uint64_t seed = 42;
};

/// project -> plan -> run -> coverage.
CoverageReport describe_scene(const Scene& scene, DescriptionBackend& backend,
                              const PipelineOptions& options);

struct SceneEmbeddings {
  std::map<int, std::vector<float>> point;
  std::map<int, std::vector<float>> visual;
  std::map<int, std::vector<float>> text;
};

/// Point and visual vectors from the mock encoders, text from the mock
/// sentence encoder (zero vector for missing descriptions).
SceneEmbeddings mock_scene_embeddings(const Scene& scene, const DescriptionMap& descriptions,
                                      const FusionConfig& config, std::uint64_t seed);

/// One block per scene object. Absent modality vectors become zero vectors
/// with a warning before projection.
std::map<int, ObjectTokenBlock> fuse_scene(const Scene& scene, const SceneEmbeddings& embeddings,
                                           const ModalityHeads& heads,
                                           const IdentifierEmbeddings& identifiers,
                                           const FusionConfig& config);

std::vector<AssembledPrompt> build_task_prompts(const Scene& scene,
                                                const std::map<int, ObjectTokenBlock>* blocks,
                                                const DescriptionMap& descriptions,
                                                std::span<const TaskInstance> tasks,
                                                const PipelineOptions& options);

/// Identifier tokens in the answer become boxes of those objects (first one
/// only for single-target grounding); for caption and QA the remaining text
/// is the predicted text.
Prediction prediction_from_answer(const Scene& scene, const TaskInstance& task,
                                  const std::string& answer);

struct E2eResult {
  CoverageReport coverage;
  std::vector<PromptBundle> prompts;
  std::vector<Prediction> predictions;
  EvaluationReport report;
};

/// All stages with mock backends, in memory.
E2eResult run_e2e_mock(const Scene& scene, std::span<const TaskInstance> tasks,
                       const PipelineOptions& options);

}  // namespace relscene
