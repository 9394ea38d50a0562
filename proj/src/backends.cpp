#include "relscene/backends.hpp"

#include <cstdio>
#include <map>

#include <nlohmann/json.hpp>

#include "relscene/config.hpp"
#include "relscene/errors.hpp"
#include "relscene/text_norm.hpp"
#include "http_detail.hpp"

namespace relscene {

using nlohmann::json;

void BackendConfig::validate() const {
  if (endpoint_url.empty()) throw DomainError("backend config: endpoint_url is empty");
  if (endpoint_url.rfind("http://", 0) != 0 && endpoint_url.rfind("https://", 0) != 0) {
    throw DomainError("backend config: endpoint_url must start with http:// or https://");
  }
  if (timeout_ms <= 0) throw DomainError("backend config: timeout_ms must be positive");
  if (max_retries < 0) throw DomainError("backend config: max_retries must be >= 0");
  if (initial_backoff_ms < 0) throw DomainError("backend config: initial_backoff_ms must be >= 0");
  if (request_parallelism < 1) throw DomainError("backend config: request_parallelism must be >= 1");
}

BackendConfig BackendConfig::load(const std::filesystem::path& path) {
  BackendConfig c;
  for (const auto& [key, value] : read_key_value_file(path)) {
    if (key == "endpoint_url") c.endpoint_url = value;
    else if (key == "model_name") c.model_name = value;
    else if (key == "timeout_ms") c.timeout_ms = parse_int_value(value, key);
    else if (key == "max_retries") c.max_retries = parse_int_value(value, key);
    else if (key == "initial_backoff_ms") c.initial_backoff_ms = parse_int_value(value, key);
    else if (key == "auth_token_env_var") c.auth_token_env_var = value;
    else if (key == "request_parallelism") c.request_parallelism = parse_int_value(value, key);
    else throw FormatError(path.string() + ": unknown field '" + key + "'");
  }
  c.validate();
  return c;
}

std::string render_annotations(const VlmRequest& request) {
  std::string out = request.prompt_text;
  if (request.annotations.empty()) return out;
  out += "\nLabels drawn on the image:";
  for (std::size_t i = 0; i < request.annotations.size(); ++i) {
    const auto& a = request.annotations[i];
    char buf[64];
    std::snprintf(buf, sizeof(buf), " at (%.1f, %.1f)", a.anchor.u, a.anchor.v);
    out += (i ? "; " : " ") + a.display_name + buf;
  }
  out += ".";
  return out;
}

std::string build_vlm_request_body(const std::string& model, const std::string& text,
                                   const std::optional<ImageData>& image) {
  json content = json::array();
  content.push_back({{"type", "text"}, {"text", text}});
  if (image) {
    std::string url = "data:" + image->mime_type + ";base64,";
    url += detail::base64_encode(image->bytes);
    content.push_back({{"type", "image_url"}, {"image_url", {{"url", url}}}});
  }
  json body = {{"model", model},
               {"messages", json::array({{{"role", "user"}, {"content", content}}})}};
  return body.dump();
}

std::string build_llm_request_body(const std::string& model, const PromptBundle& bundle,
                                   const PromptTemplate& tmpl) {
  const std::string system =
      bundle.system_text + bundle.scene_token_placeholder + tmpl.scene_suffix;
  json messages = json::array();
  messages.push_back(
      {{"role", "system"}, {"content", json::array({{{"type", "text"}, {"text", system}}})}});
  messages.push_back({{"role", "user"},
                      {"content", json::array({{{"type", "text"},
                                                {"text", compose_user_turn(bundle, tmpl)}}})}});
  return json{{"model", model}, {"messages", messages}}.dump();
}

std::string parse_chat_response(const std::string& body) {
  auto fail = [&](const std::string& why) -> std::string {
    const std::string excerpt = body.size() > 200 ? body.substr(0, 200) + "..." : body;
    throw ProtocolError("malformed chat response (" + why + "): " + excerpt);
  };
  json j;
  try {
    j = json::parse(body);
  } catch (const json::parse_error&) {
    return fail("not JSON");
  }
  if (!j.is_object() || !j.contains("choices") || !j["choices"].is_array() || j["choices"].empty()) {
    return fail("no choices");
  }
  const json& choice = j["choices"][0];
  if (!choice.is_object() || !choice.contains("message") || !choice["message"].is_object()) {
    return fail("no message");
  }
  const json& msg = choice["message"];
  if (!msg.contains("content")) return fail("no content");
  const json& content = msg["content"];
  if (content.is_string()) return content.get<std::string>();
  if (content.is_array()) {
    std::string out;
    for (const auto& part : content) {
      if (part.is_object() && part.value("type", "") == "text" && part.contains("text") &&
          part["text"].is_string()) {
        out += part["text"].get<std::string>();
      }
    }
    return out;
  }
  return fail("content is neither string nor parts");
}

std::string vlm_describe(const ChatClient& client, const VlmRequest& request,
                         const std::optional<ImageData>& image) {
  return client.complete(
      build_vlm_request_body(client.config().model_name, render_annotations(request), image));
}

std::string llm_answer(const ChatClient& client, const PromptBundle& bundle,
                       const PromptTemplate& tmpl) {
  return client.complete(build_llm_request_body(client.config().model_name, bundle, tmpl));
}

namespace {

std::map<std::string, int> ngram_multiset(const std::vector<std::string>& toks, int n) {
  std::map<std::string, int> out;
  for (std::size_t i = 0; i + n <= toks.size(); ++i) {
    std::string key = toks[i];
    for (int k = 1; k < n; ++k) key += ' ' + toks[i + k];
    ++out[key];
  }
  return out;
}

}  // namespace

double lexical_overlap(std::string_view a, std::string_view b) {
  const auto ta = tokenize(a);
  const auto tb = tokenize(b);
  double matched = 0.0, total = 0.0;
  for (int n = 1; n <= 4; ++n) {
    const auto ma = ngram_multiset(ta, n);
    const auto mb = ngram_multiset(tb, n);
    for (const auto& [g, c] : ma) {
      total += c;
      if (const auto it = mb.find(g); it != mb.end()) matched += std::min(c, it->second);
    }
    for (const auto& [g, c] : mb) total += c;
  }
  return total > 0.0 ? 2.0 * matched / total : 0.0;
}

std::string MockAnswerBackend::answer(const PromptBundle& bundle) {
  const bool with_description = bundle.task_kind == "caption" || bundle.task_kind == "qa";
  return answer(bundle.user_text, with_description);
}

std::string MockAnswerBackend::answer(std::string_view query, bool with_description) const {
  const DescriptionRecord* best = nullptr;
  double best_score = -1.0;
  for (const auto& [idx, rec] : records_) {
    if (rec.status == DescriptionStatus::Missing || rec.text.empty()) continue;
    const double s = lexical_overlap(query, rec.text);
    if (s > best_score) {
      best_score = s;
      best = &rec;
    }
  }
  if (!best) return {};
  std::string out = make_identifier(best->object_index);
  if (with_description) out += " " + best->text;
  return out;
}

}  // namespace relscene
