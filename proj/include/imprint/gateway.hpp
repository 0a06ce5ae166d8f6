#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "imprint/config.hpp"
#include "imprint/errors.hpp"
#include "imprint/persona.hpp"
#include "imprint/task.hpp"

namespace imprint::gateway {

using persona::PromptBundle;

struct ModelSpec {
  std::string provider;
  std::string model_id;

  bool operator==(const ModelSpec&) const = default;

  // "gemini/gemini-2.5-pro" -> provider "gemini". Throws ContractError for an empty id.
  static ModelSpec parse(std::string_view model_id);
};

// Primary model first, then fallbacks.
class ModelChain {
 public:
  ModelChain() = default;
  // Throws ContractError when empty or when a model id repeats.
  explicit ModelChain(std::vector<ModelSpec> specs);

  // llm_config.preferred_models followed by llm_config.fallback_models, repeats dropped.
  static ModelChain from_config(const config::ResolvedConfig& cfg);

  const std::vector<ModelSpec>& specs() const noexcept { return specs_; }
  std::size_t size() const noexcept { return specs_.size(); }

 private:
  std::vector<ModelSpec> specs_;
};

enum class AttemptOutcome { ok, transport_error, provider_error, timeout };
std::string_view to_string(AttemptOutcome outcome);

struct SamplingParams {
  double temperature = 0.0;
  int max_tokens = 1;
  std::chrono::milliseconds timeout{60'000};

  bool operator==(const SamplingParams&) const = default;
};

struct PromptRequest {
  PromptBundle bundle;
  TaskKind task_kind = TaskKind::analytical;
  double temperature = 0.0;
  int max_tokens = 1;
  ModelChain chain;

  // Throws ContractError for temperature outside [0,2], non-positive max_tokens or an empty chain.
  void check() const;
};

// One entry per chain position that was tried. `tries` counts transport retries.
struct AttemptRecord {
  std::string model_id;
  AttemptOutcome outcome = AttemptOutcome::ok;
  int tries = 1;
  double temperature = 0.0;
  int max_tokens = 0;
  double latency_ms = 0.0;
  std::string error;
  std::optional<int> prompt_tokens;
  std::optional<int> completion_tokens;
};

struct ModelResponse {
  std::string text;
  ModelSpec served_by;
  std::vector<AttemptRecord> attempts;
};

class ExhaustionError : public Error {
 public:
  explicit ExhaustionError(std::vector<AttemptRecord> attempts);
  const std::vector<AttemptRecord>& attempts() const noexcept { return attempts_; }

 private:
  std::vector<AttemptRecord> attempts_;
};

struct AdapterReply {
  AttemptOutcome outcome = AttemptOutcome::ok;
  std::string text;
  std::string error;
  std::optional<int> prompt_tokens;
  std::optional<int> completion_tokens;
};

// A provider backend. Implementations must be stateless or synchronize
// internally; the gateway calls them from concurrent threads.
class ProviderAdapter {
 public:
  virtual ~ProviderAdapter() = default;
  virtual AdapterReply complete(const ModelSpec& model, const PromptBundle& prompt, const SamplingParams& params) = 0;
};

// Adapters are looked up by exact model id first, then by provider name.
class AdapterRegistry {
 public:
  AdapterRegistry& add(std::string key, std::shared_ptr<ProviderAdapter> adapter);
  ProviderAdapter* find(const ModelSpec& model) const;

 private:
  std::map<std::string, std::shared_ptr<ProviderAdapter>> adapters_;
};

class AuditSink {
 public:
  virtual ~AuditSink() = default;
  virtual void record(const nlohmann::json& entry) = 0;
};

// Appends one JSON object per line.
class FileAuditLog : public AuditSink {
 public:
  explicit FileAuditLog(std::string path);
  void record(const nlohmann::json& entry) override;
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
  std::mutex mutex_;
};

class MemoryAuditLog : public AuditSink {
 public:
  void record(const nlohmann::json& entry) override;
  std::vector<nlohmann::json> entries() const;

 private:
  mutable std::mutex mutex_;
  std::vector<nlohmann::json> entries_;
};

struct GatewayOptions {
  int transport_retries = 1;
  std::chrono::milliseconds attempt_timeout{60'000};
  // ISO-8601 timestamps for audit entries.
  std::function<std::string()> clock;
};

std::string utc_now_iso();

class Gateway {
 public:
  explicit Gateway(AdapterRegistry adapters, GatewayOptions options = {}, std::shared_ptr<AuditSink> audit = nullptr);

  // Tries the chain in order and returns the first success. Every chain entry
  // must have an adapter (ConfigurationError before any call otherwise).
  // Throws ExhaustionError with every attempt when all adapters fail.
  ModelResponse call(const PromptRequest& request) const;

  const AdapterRegistry& adapters() const noexcept { return adapters_; }

 private:
  AdapterRegistry adapters_;
  GatewayOptions options_;
  std::shared_ptr<AuditSink> audit_;
};

ModelResponse call(const PromptRequest& request, const AdapterRegistry& adapters);

// creative -> llm_config.temperature; analytical and critical -> 0.0.
double temperature_for(TaskKind kind, const config::ResolvedConfig& cfg);
// Throws UsageError for an undeclared kind.
double temperature_for(std::string_view kind, const config::ResolvedConfig& cfg);
// llm_config.max_tokens.<kind> or 4096 / 2048 / 2048.
int max_tokens_for(TaskKind kind, const config::ResolvedConfig& cfg);

// Request with the sampling policy and model chain taken from `cfg`.
PromptRequest make_request(PromptBundle bundle, const config::ResolvedConfig& cfg);

// ---------------------------------------------------------------------------
// Adapters

// Deterministic stand-in: the reply text is a function of (prompt hash, seed) only.
class MockAdapter : public ProviderAdapter {
 public:
  explicit MockAdapter(std::uint64_t seed = 0) : seed_(seed) {}
  AdapterReply complete(const ModelSpec& model, const PromptBundle& prompt, const SamplingParams& params) override;

  static std::string text_for(const PromptBundle& prompt, std::uint64_t seed);

 private:
  std::uint64_t seed_;
};

// Test double that delegates to a function and remembers what it was asked.
class ScriptedAdapter : public ProviderAdapter {
 public:
  using Script = std::function<AdapterReply(const ModelSpec&, const PromptBundle&, const SamplingParams&)>;

  explicit ScriptedAdapter(Script script) : script_(std::move(script)) {}
  static std::shared_ptr<ScriptedAdapter> always(AttemptOutcome outcome, std::string text = {});

  AdapterReply complete(const ModelSpec& model, const PromptBundle& prompt, const SamplingParams& params) override;

  struct Call {
    ModelSpec model;
    PromptBundle prompt;
    SamplingParams params;
  };
  std::vector<Call> calls() const;

 private:
  Script script_;
  mutable std::mutex mutex_;
  std::vector<Call> calls_;
};

// OpenAI-style chat completions over plain HTTP (for example a local LiteLLM
// proxy). The API key comes from <PROVIDER>_API_KEY when set.
class HttpAdapter : public ProviderAdapter {
 public:
  explicit HttpAdapter(std::string base_url, std::string path = "/v1/chat/completions");
  AdapterReply complete(const ModelSpec& model, const PromptBundle& prompt, const SamplingParams& params) override;

  static std::string api_key_variable(std::string_view provider);

 private:
  std::string base_url_;
  std::string path_;
};

// ---------------------------------------------------------------------------
// Human gates

struct ApprovalRecord {
  std::string actor;
  std::string timestamp;
  std::string note;
};

struct GateRequirement {
  std::string action_kind;
  bool requires_human = true;
  std::optional<ApprovalRecord> approval;

  bool may_execute() const noexcept { return !requires_human || approval.has_value(); }
  // Throws GateError when a human approval is required and absent.
  void ensure_may_execute() const;
  // Throws ContractError for an empty actor.
  GateRequirement& approve(std::string actor, std::string timestamp, std::string note = {});
};

// Fails closed: only the listed low-stakes kinds run without a human.
GateRequirement gate(std::string_view action_kind);

}  // namespace imprint::gateway
