#include "relscene/backends.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "http_detail.hpp"
#include "relscene/errors.hpp"
#include "relscene/log.hpp"

namespace relscene {

namespace detail {

std::string base64_encode(const std::string& bytes) { return httplib::detail::base64_encode(bytes); }

}  // namespace detail

namespace {

bool retryable_status(int status) { return status == 408 || status == 429 || status >= 500; }

std::optional<ImageData> load_image(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  ImageData img{ss.str(), "image/jpeg"};
  if (path.ends_with(".png")) img.mime_type = "image/png";
  return img;
}

}  // namespace

ChatClient::ChatClient(BackendConfig config) : config_(std::move(config)) {
  config_.validate();
  const auto scheme_end = config_.endpoint_url.find("://");
  const auto path_start = config_.endpoint_url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) {
    scheme_host_port_ = config_.endpoint_url;
    path_ = "/";
  } else {
    scheme_host_port_ = config_.endpoint_url.substr(0, path_start);
    path_ = config_.endpoint_url.substr(path_start);
  }
}

std::string ChatClient::complete(const std::string& body) const {
  httplib::Client cli(scheme_host_port_);
  const auto timeout = std::chrono::milliseconds(config_.timeout_ms);
  cli.set_connection_timeout(timeout);
  cli.set_read_timeout(timeout);
  cli.set_write_timeout(timeout);

  httplib::Headers headers;
  if (!config_.auth_token_env_var.empty()) {
    if (const char* token = std::getenv(config_.auth_token_env_var.c_str()); token && *token) {
      headers.emplace("Authorization", std::string("Bearer ") + token);
    } else {
      warn("environment variable " + config_.auth_token_env_var + " is not set; sending no token");
    }
  }

  std::string last_error;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(
          static_cast<long long>(config_.initial_backoff_ms) << (attempt - 1)));
    }
    auto res = cli.Post(path_, headers, body, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 200 && res->status < 300) return parse_chat_response(res->body);
    last_error = "HTTP " + std::to_string(res->status);
    if (!retryable_status(res->status)) break;
  }
  throw BackendError(config_.endpoint_url + ": " + last_error + " after " +
                     std::to_string(config_.max_retries + 1) + " attempt(s)");
}

HttpDescriptionBackend::HttpDescriptionBackend(const Scene& scene, BackendConfig config,
                                               Renderer renderer)
    : scene_(scene), client_(std::move(config)), renderer_(std::move(renderer)) {}

std::string HttpDescriptionBackend::describe(const VlmRequest& request) {
  std::optional<ImageData> image;
  if (const CameraView* view = scene_.find_view(request.view_id); view && view->image_ref) {
    image = load_image(*view->image_ref);
    if (!image) warn("cannot read image '" + *view->image_ref + "'; describing from text only");
  }
  if (image && renderer_) {
    const ImageData rendered = renderer_(request, *image);
    return client_.complete(build_vlm_request_body(client_.config().model_name,
                                                   request.prompt_text, rendered));
  }
  return vlm_describe(client_, request, image);
}

HttpAnswerBackend::HttpAnswerBackend(BackendConfig config, PromptTemplate tmpl)
    : client_(std::move(config)), template_(std::move(tmpl)) {}

std::string HttpAnswerBackend::answer(const PromptBundle& bundle) {
  return llm_answer(client_, bundle, template_);
}

}  // namespace relscene
