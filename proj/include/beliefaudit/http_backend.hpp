#pragma once

// Chat-completions backend over HTTP(S). HTTPS needs CPPHTTPLIB_OPENSSL_SUPPORT
// defined (and libssl linked) in the including translation unit.

#include <chrono>
#include <cstdlib>
#include <string>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "beliefaudit/backend.hpp"
#include "beliefaudit/errors.hpp"

namespace beliefaudit {

inline constexpr const char* kApiKeyEnv = "BELIEFAUDIT_API_KEY";
inline constexpr const char* kDefaultCompletionsPath = "/v1/chat/completions";

struct HttpBackendConfig {
  std::string url;    // e.g. https://host/v1/chat/completions
  std::string model;  // sent as "model"
  std::string api_key;
  std::size_t max_attempts = 4;
  std::chrono::milliseconds initial_backoff{500};
  std::chrono::seconds timeout{120};
};

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

inline SplitUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("backend URL needs a scheme: " + url);
  const std::string scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") throw ConfigError("unsupported URL scheme: " + scheme);
  const auto path_start = url.find('/', scheme_end + 3);
  SplitUrl s;
  s.origin = url.substr(0, path_start);
  s.path = path_start == std::string::npos ? std::string() : url.substr(path_start);
  if (s.path.empty() || s.path == "/") s.path = kDefaultCompletionsPath;
  if (s.origin.size() <= scheme_end + 3) throw ConfigError("backend URL has no host: " + url);
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
  if (scheme == "https") throw ConfigError("this build has no TLS support; use an http:// endpoint");
#endif
  return s;
}

inline nlohmann::json chat_request_body(const std::string& model, const PromptBundle& prompt,
                                        const GenerationParams& params) {
  return {{"model", model},
          {"messages",
           nlohmann::json::array({{{"role", "system"}, {"content", prompt.system}},
                                  {{"role", "user"}, {"content", prompt.user}}})},
          {"temperature", params.temperature},
          {"max_tokens", params.max_tokens}};
}

// choices[0].message.content; throws BackendError on any other shape.
inline std::string chat_response_text(const std::string& body) {
  const auto j = nlohmann::json::parse(body, nullptr, false);
  if (j.is_discarded()) throw BackendError("backend returned non-JSON body");
  try {
    const auto& content = j.at("choices").at(0).at("message").at("content");
    if (!content.is_string()) throw BackendError("backend reply content is not text");
    return content.get<std::string>();
  } catch (const nlohmann::json::exception&) {
    throw BackendError("backend reply lacks choices[0].message.content");
  }
}

class HttpBackend final : public AgentBackend {
 public:
  explicit HttpBackend(HttpBackendConfig config) : config_(std::move(config)), url_(split_url(config_.url)) {
    if (config_.model.empty()) throw ConfigError("backend model name is empty");
    if (config_.max_attempts == 0) throw ConfigError("max_attempts must be positive");
  }

  std::string complete(const PromptBundle& prompt, const GenerationParams& params) override {
    const std::string body = chat_request_body(config_.model, prompt, params).dump();
    httplib::Headers headers;
    if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);
    auto backoff = config_.initial_backoff;
    std::string last_error;
    for (std::size_t attempt = 0; attempt < config_.max_attempts; ++attempt) {
      if (attempt > 0) {
        std::this_thread::sleep_for(backoff);
        backoff *= 2;
      }
      httplib::Client client(url_.origin);
      client.set_connection_timeout(config_.timeout);
      client.set_read_timeout(config_.timeout);
      client.set_write_timeout(config_.timeout);
      auto res = client.Post(url_.path, headers, body, "application/json");
      if (!res) {
        last_error = "request failed: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status == 429 || res->status >= 500) {
        last_error = "HTTP " + std::to_string(res->status);
        continue;
      }
      if (res->status != 200) throw BackendError("HTTP " + std::to_string(res->status) + " from backend");
      return chat_response_text(res->body);
    }
    throw BackendError("backend unavailable after " + std::to_string(config_.max_attempts) + " attempts (" +
                       last_error + ")");
  }

  std::string identity() const override { return "http:" + config_.model + "@" + url_.origin + url_.path; }

 private:
  HttpBackendConfig config_;
  SplitUrl url_;
};

}  // namespace beliefaudit
