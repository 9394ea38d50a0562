#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>

#include "relscene/descriptions.hpp"
#include "relscene/prompt.hpp"

namespace relscene {

struct BackendConfig {
  std::string endpoint_url;  // e.g. http://127.0.0.1:8000/v1/chat/completions
  std::string model_name;
  int timeout_ms = 30000;
  int max_retries = 2;
  int initial_backoff_ms = 250;
  /// Name of the environment variable holding the bearer token. The token
  /// itself never appears in config files.
  std::string auth_token_env_var;
  int request_parallelism = 4;

  /// Throws DomainError.
  void validate() const;

  /// Keys match the field names. Unknown keys are a FormatError.
  static BackendConfig load(const std::filesystem::path& path);
};

/// Image payload attached to a describe request.
struct ImageData {
  std::string bytes;
  std::string mime_type = "image/jpeg";
};

/// Prompt text plus the overlay labels spelled out, for backends that
/// receive the raw image (or none) rather than a rendered overlay.
std::string render_annotations(const VlmRequest& request);

/// {"messages":[{"content":[{"text":..,"type":"text"}, image?],"role":"user"}],"model":..}
/// Keys are emitted in sorted order, so bodies are byte-stable.
std::string build_vlm_request_body(const std::string& model, const std::string& text,
                                   const std::optional<ImageData>& image);

/// System message carries the system text and scene placeholder; the user
/// message carries the user turn exactly as it appears in full_text.
std::string build_llm_request_body(const std::string& model, const PromptBundle& bundle,
                                   const PromptTemplate& tmpl = {});

/// First choice's message content (string, or the concatenated text parts).
/// Throws ProtocolError with an excerpt of the body otherwise.
std::string parse_chat_response(const std::string& body);

/// Blocking chat-completion client. Transport failures, 408, 429 and 5xx
/// are retried with exponential backoff up to max_retries; other statuses
/// fail immediately. Safe to share between threads.
class ChatClient {
 public:
  explicit ChatClient(BackendConfig config);
  const BackendConfig& config() const { return config_; }

  /// POSTs the body and returns the parsed response text.
  std::string complete(const std::string& body) const;

 private:
  BackendConfig config_;
  std::string scheme_host_port_;
  std::string path_;
};

std::string vlm_describe(const ChatClient& client, const VlmRequest& request,
                         const std::optional<ImageData>& image);
std::string llm_answer(const ChatClient& client, const PromptBundle& bundle,
                       const PromptTemplate& tmpl = {});

/// Vision-language backend over HTTP. Images come from the view's
/// image_ref when the file exists. Without a renderer the overlay labels
/// are spelled out in the text prompt.
class HttpDescriptionBackend : public DescriptionBackend {
 public:
  using Renderer = std::function<ImageData(const VlmRequest&, const ImageData&)>;

  HttpDescriptionBackend(const Scene& scene, BackendConfig config, Renderer renderer = {});
  std::string describe(const VlmRequest& request) override;

 private:
  const Scene& scene_;
  ChatClient client_;
  Renderer renderer_;
};

/// Language-model seam.
class AnswerBackend {
 public:
  virtual ~AnswerBackend() = default;
  virtual std::string answer(const PromptBundle& bundle) = 0;
};

class HttpAnswerBackend : public AnswerBackend {
 public:
  explicit HttpAnswerBackend(BackendConfig config, PromptTemplate tmpl = {});
  std::string answer(const PromptBundle& bundle) override;

 private:
  ChatClient client_;
  PromptTemplate template_;
};

/// Dice overlap of the clipped 1..4-gram multisets of two texts, in [0,1].
double lexical_overlap(std::string_view a, std::string_view b);

/// Answers with the identifier of the object whose description overlaps the
/// query most (lowest index on ties). With `with_description`, the
/// description text follows the identifier.
class MockAnswerBackend : public AnswerBackend {
 public:
  explicit MockAnswerBackend(const DescriptionMap& records) : records_(records) {}
  std::string answer(const PromptBundle& bundle) override;
  std::string answer(std::string_view query, bool with_description) const;

 private:
  const DescriptionMap& records_;
};

}  // namespace relscene
