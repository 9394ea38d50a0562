#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "relscene/descriptions.hpp"
#include "relscene/fusion.hpp"
#include "relscene/scene.hpp"

namespace relscene {

/// How object mentions appear in injected description text.
enum class ReferenceStyle { NameOnly, NameWithId, IdOnly };

/// Accepts "name", "name-id" and "id".
ReferenceStyle parse_reference_style(std::string_view s);
std::string_view to_string(ReferenceStyle style);

struct IntegrationFlags {
  bool embedding_fusion = true;
  bool prompt_injection = true;
};

/// Dialogue layout. full_text is
///   system_label + system_text + scene placeholder + scene_suffix + "\n"
///   + user_label + user turn + "\n" + assistant_label
/// where the user turn holds injected descriptions before (or after) the
/// query, joined by description_separator.
struct PromptTemplate {
  std::string system_label = "System: ";
  std::string system_text =
      "A chat between a curious user and an artificial intelligence assistant. The assistant "
      "gives helpful, detailed, and polite answers to the user’s questions. The conversation "
      "centers around an indoor scene: ";
  std::string scene_suffix = ".";
  std::string user_label = "User: ";
  std::string assistant_label = "Assistant:";
  std::string description_separator = " ";
  bool descriptions_before_query = true;

  /// key = value lines; '#' starts a comment; "\n" in values is a newline.
  /// Unknown keys are a FormatError.
  static PromptTemplate load(const std::filesystem::path& path);
};

struct PromptBundle {
  std::string task_id;
  std::string task_kind;  // empty for free-form queries
  std::string system_text;
  std::string scene_token_placeholder;
  std::vector<int> referenced_objects;
  std::vector<std::string> injected_descriptions;
  std::string user_text;
  std::string full_text;
};

/// Lowercased category names and identifier tokens of one scene.
class SceneVocabulary {
 public:
  explicit SceneVocabulary(const Scene& scene);

  /// Longest names first.
  const std::vector<std::pair<std::string, std::vector<int>>>& names() const { return names_; }
  bool has_index(int index) const;

 private:
  std::vector<std::pair<std::string, std::vector<int>>> names_;
  std::vector<int> indices_;
};

/// Left-to-right, longest-match, case-insensitive scan. Identifier tokens
/// must match exactly; a category name (optionally pluralised with "s" or
/// "es") selects every object bearing it. Ordered by first occurrence,
/// without duplicates.
std::vector<int> detect_referenced_objects(std::string_view query, const SceneVocabulary& vocab);

using NameMap = std::vector<NameMention>;

/// The record's own mentions first, then scene labels not already covered.
/// A scene label shared by several objects maps to the lowest index.
NameMap build_name_map(const Scene& scene, const DescriptionRecord& record);

/// NameOnly leaves the text alone; NameWithId appends " (<OBJnnn>)" after
/// the first occurrence of each name; IdOnly replaces every occurrence with
/// its identifier. Matching is case-insensitive, longest name first, on
/// word boundaries.
std::string rewrite_description(const DescriptionRecord& record, ReferenceStyle style,
                                const NameMap& name_map);

/// Injected descriptions and the query joined in template order.
std::string compose_user_turn(const PromptBundle& bundle, const PromptTemplate& tmpl);

/// "[<OBJ001> <FEAT> <OBJ002> <FEAT> ...]" marking where token blocks go.
std::string scene_placeholder(const Scene& scene);

struct AssembledPrompt {
  PromptBundle bundle;
  std::optional<SceneTokens> tokens;
};

/// Builds the dialogue prompt for one query. Prompt injection prepends the
/// rewritten descriptions of the referenced objects to the user turn;
/// embedding fusion only affects the serialized token blocks.
AssembledPrompt assemble_prompt(const Scene& scene, const std::map<int, ObjectTokenBlock>* blocks,
                                const DescriptionMap& records, std::string_view query,
                                ReferenceStyle style, IntegrationFlags flags,
                                const PromptTemplate& tmpl = {});

}  // namespace relscene
