#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "relscene/descriptions.hpp"
#include "relscene/fusion.hpp"
#include "relscene/metrics.hpp"
#include "relscene/prompt.hpp"
#include "relscene/scene.hpp"
#include "relscene/text_encoding.hpp"

namespace relscene {

std::string read_file(const std::filesystem::path& path);
/// Creates parent directories as needed.
void write_file(const std::filesystem::path& path, std::string_view content);

// ---------------------------------------------------------------------------
// Embedding interchange (binary, little-endian)
//
//   offset  size  field
//   0       4     magic "D3DE"
//   4       2     version (u16) = 1
//   6       1     kind (u8): 0 point3d, 1 visual2d, 2 text, 3 head weights
//   7       4     dim (u32)
//   11      4     count (u32)
//   [kind 3 only: u32 n, then n u32 head layout = depth, d_0 .. d_depth]
//   then count records of: object_index (u32), dim x float32
// ---------------------------------------------------------------------------

inline constexpr char kEmbeddingMagic[4] = {'D', '3', 'D', 'E'};
inline constexpr std::uint16_t kEmbeddingVersion = 1;

struct EmbeddingEntry {
  std::uint32_t object_index = 0;
  std::vector<float> values;
};

struct EmbeddingFile {
  EmbeddingKind kind = EmbeddingKind::Text;
  std::uint32_t dim = 0;
  std::vector<std::uint32_t> head_layout;  // kind 3 only
  std::vector<EmbeddingEntry> records;
};

std::string encode_embedding_file(const EmbeddingFile& file);
/// Rejects bad magic/version/kind, truncation, trailing bytes, duplicate
/// indices and non-finite values; messages name `source`, record and field.
EmbeddingFile decode_embedding_file(std::string_view bytes, const std::string& source);

void write_embedding_file(const std::filesystem::path& path, const EmbeddingFile& file);
EmbeddingFile read_embedding_file(const std::filesystem::path& path);

EmbeddingFile make_embedding_file(EmbeddingKind kind, int dim,
                                  std::span<const EmbeddingRecord> records);
std::vector<EmbeddingRecord> embedding_records(const EmbeddingFile& file);

/// Head weights as a kind-3 file: one record (index 0) with each layer's
/// weight matrix (row-major) followed by its bias.
EmbeddingFile head_to_embedding_file(const ProjectionHead& head);
ProjectionHead head_from_embedding_file(const EmbeddingFile& file, const std::string& source);

// ---------------------------------------------------------------------------
// Scenes: JSON manifest plus a binary point blob next to it
// (<stem>.points.bin): per object in manifest order, point count (u32) then
// count x 6 float32 (x y z r g b). The manifest stores the blob's FNV-1a 64
// checksum.
// ---------------------------------------------------------------------------

nlohmann::json view_to_json(const CameraView& view);
CameraView view_from_json(const nlohmann::json& j, const std::string& source,
                          const std::string& record);

void write_scene(const Scene& scene, const std::filesystem::path& manifest_path);
Scene read_scene(const std::filesystem::path& manifest_path,
                 std::size_t proposal_cap = kDefaultProposalCap);

/// {"views": [...]} with the same view schema as the manifest.
std::vector<CameraView> read_views(const std::filesystem::path& path);
void write_views(const std::filesystem::path& path, std::span<const CameraView> views);

// ---------------------------------------------------------------------------
// JSON-lines records. One compact JSON object per line, keys sorted;
// unknown fields survive a read/write cycle.
// ---------------------------------------------------------------------------

std::string descriptions_to_jsonl(const DescriptionMap& records);
DescriptionMap descriptions_from_jsonl(std::string_view text, const std::string& source);
void write_descriptions(const std::filesystem::path& path, const DescriptionMap& records);
DescriptionMap read_descriptions(const std::filesystem::path& path);

nlohmann::json box_to_json(const Aabb& box);

std::string tasks_to_jsonl(std::span<const TaskInstance> tasks);
std::vector<TaskInstance> tasks_from_jsonl(std::string_view text, const std::string& source);
void write_tasks(const std::filesystem::path& path, std::span<const TaskInstance> tasks);
std::vector<TaskInstance> read_tasks(const std::filesystem::path& path);

std::string predictions_to_jsonl(std::span<const Prediction> predictions);
std::vector<Prediction> predictions_from_jsonl(std::string_view text, const std::string& source);
void write_predictions(const std::filesystem::path& path, std::span<const Prediction> predictions);
std::vector<Prediction> read_predictions(const std::filesystem::path& path);

std::string prompts_to_jsonl(std::span<const PromptBundle> prompts);
std::vector<PromptBundle> prompts_from_jsonl(std::string_view text, const std::string& source);
void write_prompts(const std::filesystem::path& path, std::span<const PromptBundle> prompts);
std::vector<PromptBundle> read_prompts(const std::filesystem::path& path);

/// {"instances": [...], "scores": {task: {metric: value}}}, two-space
/// indent, trailing newline.
std::string results_to_json(const EvaluationReport& report);
void write_results(const std::filesystem::path& path, const EvaluationReport& report);

std::string projections_to_json(const Scene& scene, const ProjectionTable& projections,
                                 const KeyObjectPolicy& policy);
std::string tokens_to_json(const Scene& scene, const SceneTokens& tokens, bool embedding_fusion);

}  // namespace relscene
