#pragma once

#include <atomic>
#include <cstddef>
#include <string>

#include <nlohmann/json.hpp>

#include "beliefaudit/elicitation.hpp"

namespace beliefaudit {

// Generation settings forwarded to the agent and copied into every record.
struct GenerationParams {
  double temperature = 0.0;
  int max_tokens = 2048;

  nlohmann::json to_json() const { return {{"max_tokens", max_tokens}, {"temperature", temperature}}; }
};

// Anything that turns a prompt into reply text. Implementations must be
// stateless from the caller's point of view and safe to call concurrently;
// failures (including timeouts) throw BackendError rather than returning
// empty text.
class AgentBackend {
 public:
  virtual ~AgentBackend() = default;
  virtual std::string complete(const PromptBundle& prompt, const GenerationParams& params) = 0;
  virtual std::string identity() const = 0;
};

// Counts calls forwarded to another backend.
class CountingBackend final : public AgentBackend {
 public:
  explicit CountingBackend(AgentBackend& inner) : inner_(inner) {}

  std::string complete(const PromptBundle& prompt, const GenerationParams& params) override {
    calls_.fetch_add(1, std::memory_order_relaxed);
    return inner_.complete(prompt, params);
  }
  std::string identity() const override { return inner_.identity(); }

  std::size_t calls() const noexcept { return calls_.load(std::memory_order_relaxed); }

 private:
  AgentBackend& inner_;
  std::atomic<std::size_t> calls_{0};
};

}  // namespace beliefaudit
