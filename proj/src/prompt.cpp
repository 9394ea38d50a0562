#include "relscene/prompt.hpp"

#include <algorithm>
#include <set>

#include "relscene/config.hpp"
#include "relscene/errors.hpp"
#include "relscene/log.hpp"
#include "relscene/text_norm.hpp"

namespace relscene {

ReferenceStyle parse_reference_style(std::string_view s) {
  if (s == "name") return ReferenceStyle::NameOnly;
  if (s == "name-id") return ReferenceStyle::NameWithId;
  if (s == "id") return ReferenceStyle::IdOnly;
  throw DomainError("unknown reference style '" + std::string(s) + "' (name|name-id|id)");
}

std::string_view to_string(ReferenceStyle style) {
  switch (style) {
    case ReferenceStyle::NameOnly: return "name";
    case ReferenceStyle::NameWithId: return "name-id";
    case ReferenceStyle::IdOnly: return "id";
  }
  return "id";
}

PromptTemplate PromptTemplate::load(const std::filesystem::path& path) {
  PromptTemplate t;
  for (const auto& [key, value] : read_key_value_file(path)) {
    if (key == "system_label") t.system_label = value;
    else if (key == "system_text") t.system_text = value;
    else if (key == "scene_suffix") t.scene_suffix = value;
    else if (key == "user_label") t.user_label = value;
    else if (key == "assistant_label") t.assistant_label = value;
    else if (key == "description_separator") t.description_separator = value;
    else if (key == "descriptions_before_query") t.descriptions_before_query = parse_bool_value(value, key);
    else throw FormatError(path.string() + ": unknown field '" + key + "'");
  }
  return t;
}

SceneVocabulary::SceneVocabulary(const Scene& scene) {
  std::map<std::string, std::vector<int>> by_name;
  for (const auto& o : scene.objects) {
    indices_.push_back(o.index());
    if (o.label()) by_name[to_lower(*o.label())].push_back(o.index());
  }
  std::sort(indices_.begin(), indices_.end());
  for (auto& [name, idx] : by_name) {
    std::sort(idx.begin(), idx.end());
    names_.emplace_back(name, idx);
  }
  std::stable_sort(names_.begin(), names_.end(),
                   [](const auto& a, const auto& b) { return a.first.size() > b.first.size(); });
}

bool SceneVocabulary::has_index(int index) const {
  return std::binary_search(indices_.begin(), indices_.end(), index);
}

std::vector<int> detect_referenced_objects(std::string_view query, const SceneVocabulary& vocab) {
  std::vector<int> out;
  std::set<int> seen;
  auto add = [&](int idx) {
    if (seen.insert(idx).second) out.push_back(idx);
  };
  std::size_t i = 0;
  while (i < query.size()) {
    if (query.compare(i, 4, "<OBJ") == 0 && i + 8 <= query.size()) {
      if (const auto idx = parse_identifier(query.substr(i, 8)); idx && vocab.has_index(*idx)) {
        add(*idx);
        i += 8;
        continue;
      }
    }
    if (i == 0 || !is_word_char(query[i - 1])) {
      bool matched = false;
      for (const auto& [name, indices] : vocab.names()) {
        if (!matches_at(query, i, name)) continue;
        for (std::string_view suffix : {"es", "s", ""}) {
          const std::size_t len = name.size() + suffix.size();
          if (!suffix.empty() && !matches_at(query, i + name.size(), suffix)) continue;
          if (!at_word_boundary(query, i, len)) continue;
          for (int idx : indices) add(idx);
          i += len;
          matched = true;
          break;
        }
        if (matched) break;
      }
      if (matched) continue;
    }
    ++i;
  }
  return out;
}

NameMap build_name_map(const Scene& scene, const DescriptionRecord& record) {
  NameMap out;
  std::set<std::string> have;
  for (const auto& m : record.mentions) {
    const std::string key = to_lower(m.name);
    if (key.empty() || !have.insert(key).second) continue;
    out.push_back({key, m.object_index});
  }
  std::map<std::string, int> lowest;
  for (const auto& o : scene.objects) {
    const std::string key = to_lower(o.display_label());
    const auto it = lowest.find(key);
    if (it == lowest.end() || o.index() < it->second) lowest[key] = o.index();
  }
  for (const auto& [name, idx] : lowest) {
    if (have.insert(name).second) out.push_back({name, idx});
  }
  return out;
}

std::string rewrite_description(const DescriptionRecord& record, ReferenceStyle style,
                                const NameMap& name_map) {
  if (style == ReferenceStyle::NameOnly) return record.text;
  NameMap names;
  for (const auto& m : name_map) names.push_back({to_lower(m.name), m.object_index});
  std::stable_sort(names.begin(), names.end(),
                   [](const auto& a, const auto& b) { return a.name.size() > b.name.size(); });

  const std::string& text = record.text;
  std::string out;
  out.reserve(text.size() + 32);
  std::set<std::string> annotated;
  std::size_t i = 0;
  while (i < text.size()) {
    const NameMention* hit = nullptr;
    if (i == 0 || !is_word_char(text[i - 1])) {
      for (const auto& m : names) {
        if (!m.name.empty() && matches_at(text, i, m.name) && at_word_boundary(text, i, m.name.size())) {
          hit = &m;
          break;
        }
      }
    }
    if (!hit) {
      out.push_back(text[i++]);
      continue;
    }
    const std::string id = make_identifier(hit->object_index);
    if (style == ReferenceStyle::IdOnly) {
      out += id;
    } else {
      out.append(text, i, hit->name.size());
      if (annotated.insert(hit->name).second) out += " (" + id + ")";
    }
    i += hit->name.size();
  }
  return out;
}

std::string scene_placeholder(const Scene& scene) {
  std::vector<int> indices;
  for (const auto& o : scene.objects) indices.push_back(o.index());
  std::sort(indices.begin(), indices.end());
  std::string out = "[";
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (i) out += ' ';
    out += make_identifier(indices[i]) + " <FEAT>";
  }
  out += "]";
  return out;
}

std::string compose_user_turn(const PromptBundle& bundle, const PromptTemplate& tmpl) {
  std::string out;
  auto append = [&](const std::string& part) {
    if (!out.empty()) out += tmpl.description_separator;
    out += part;
  };
  if (!tmpl.descriptions_before_query) append(bundle.user_text);
  for (const auto& d : bundle.injected_descriptions) append(d);
  if (tmpl.descriptions_before_query) append(bundle.user_text);
  return out;
}

AssembledPrompt assemble_prompt(const Scene& scene, const std::map<int, ObjectTokenBlock>* blocks,
                                const DescriptionMap& records, std::string_view query,
                                ReferenceStyle style, IntegrationFlags flags,
                                const PromptTemplate& tmpl) {
  AssembledPrompt result;
  PromptBundle& b = result.bundle;
  b.system_text = tmpl.system_text;
  b.scene_token_placeholder = scene_placeholder(scene);
  b.user_text = std::string(query);
  b.referenced_objects = detect_referenced_objects(query, SceneVocabulary(scene));

  if (flags.prompt_injection) {
    for (int idx : b.referenced_objects) {
      const auto it = records.find(idx);
      if (it == records.end() || it->second.status == DescriptionStatus::Missing ||
          it->second.text.empty()) {
        warn("no description to inject for " + make_identifier(idx));
        continue;
      }
      b.injected_descriptions.push_back(
          rewrite_description(it->second, style, build_name_map(scene, it->second)));
    }
  }

  b.full_text = tmpl.system_label + b.system_text + b.scene_token_placeholder + tmpl.scene_suffix +
                "\n" + tmpl.user_label + compose_user_turn(b, tmpl) + "\n" + tmpl.assistant_label;

  if (blocks) result.tokens = serialize_scene_tokens(scene, *blocks, flags.embedding_fusion);
  return result;
}

}  // namespace relscene
