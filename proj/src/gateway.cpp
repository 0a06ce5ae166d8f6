#include "imprint/gateway.hpp"

#include <array>
#include <ctime>
#include <fstream>
#include <set>

#include "imprint/text.hpp"

namespace imprint::gateway {

ModelSpec ModelSpec::parse(std::string_view model_id) {
  auto id = text::trim(model_id);
  if (id.empty()) throw ContractError("model id must be non-empty");
  auto slash = id.find('/');
  return {slash == std::string::npos ? id : id.substr(0, slash), id};
}

ModelChain::ModelChain(std::vector<ModelSpec> specs) : specs_(std::move(specs)) {
  if (specs_.empty()) throw ContractError("model chain must contain at least one model");
  std::set<std::string> seen;
  for (const auto& s : specs_) {
    if (s.model_id.empty()) throw ContractError("model id must be non-empty");
    if (!seen.insert(s.model_id).second) throw ContractError("model '" + s.model_id + "' appears twice in the chain");
  }
}

ModelChain ModelChain::from_config(const config::ResolvedConfig& cfg) {
  std::vector<ModelSpec> specs;
  std::set<std::string> seen;
  auto add = [&](const std::vector<std::string>& ids) {
    for (const auto& id : ids) {
      auto spec = ModelSpec::parse(id);
      if (seen.insert(spec.model_id).second) specs.push_back(spec);
    }
  };
  add(cfg.strings("llm_config.preferred_models"));
  add(cfg.get_strings("llm_config.fallback_models").value_or(std::vector<std::string>{}));
  return ModelChain(std::move(specs));
}

std::string_view to_string(AttemptOutcome outcome) {
  switch (outcome) {
    case AttemptOutcome::ok: return "ok";
    case AttemptOutcome::transport_error: return "transport_error";
    case AttemptOutcome::provider_error: return "provider_error";
    case AttemptOutcome::timeout: return "timeout";
  }
  return "?";
}

void PromptRequest::check() const {
  if (!(temperature >= 0.0 && temperature <= 2.0)) throw ContractError("temperature must lie in [0,2]");
  if (max_tokens <= 0) throw ContractError("max_tokens must be positive");
  if (chain.size() == 0) throw ContractError("request has an empty model chain");
}

namespace {
std::string describe_exhaustion(const std::vector<AttemptRecord>& attempts) {
  std::string out = "all " + std::to_string(attempts.size()) + " models in the chain failed:";
  for (const auto& a : attempts) {
    out += " " + a.model_id + "=" + std::string(to_string(a.outcome));
  }
  return out;
}
}  // namespace

ExhaustionError::ExhaustionError(std::vector<AttemptRecord> attempts)
    : Error("exhaustion", describe_exhaustion(attempts)), attempts_(std::move(attempts)) {}

AdapterRegistry& AdapterRegistry::add(std::string key, std::shared_ptr<ProviderAdapter> adapter) {
  if (!adapter) throw ContractError("adapter for '" + key + "' is null");
  adapters_[std::move(key)] = std::move(adapter);
  return *this;
}

ProviderAdapter* AdapterRegistry::find(const ModelSpec& model) const {
  if (auto it = adapters_.find(model.model_id); it != adapters_.end()) return it->second.get();
  if (auto it = adapters_.find(model.provider); it != adapters_.end()) return it->second.get();
  return nullptr;
}

FileAuditLog::FileAuditLog(std::string path) : path_(std::move(path)) {}

void FileAuditLog::record(const nlohmann::json& entry) {
  std::lock_guard lock(mutex_);
  std::ofstream out(path_, std::ios::app | std::ios::binary);
  if (!out) throw StoreError("cannot append to audit log " + path_);
  out << entry.dump() << '\n';
}

void MemoryAuditLog::record(const nlohmann::json& entry) {
  std::lock_guard lock(mutex_);
  entries_.push_back(entry);
}

std::vector<nlohmann::json> MemoryAuditLog::entries() const {
  std::lock_guard lock(mutex_);
  return entries_;
}

std::string utc_now_iso() {
  auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Gateway::Gateway(AdapterRegistry adapters, GatewayOptions options, std::shared_ptr<AuditSink> audit)
    : adapters_(std::move(adapters)), options_(std::move(options)), audit_(std::move(audit)) {
  if (!options_.clock) options_.clock = utc_now_iso;
  if (options_.transport_retries < 0) throw ContractError("transport_retries must be non-negative");
}

ModelResponse Gateway::call(const PromptRequest& request) const {
  request.check();
  std::vector<ProviderAdapter*> resolved;
  for (const auto& spec : request.chain.specs()) {
    ProviderAdapter* adapter = adapters_.find(spec);
    if (!adapter) throw ConfigurationError("no adapter registered for model '" + spec.model_id + "'");
    resolved.push_back(adapter);
  }

  const SamplingParams params{request.temperature, request.max_tokens, options_.attempt_timeout};
  std::vector<AttemptRecord> attempts;
  for (std::size_t i = 0; i < resolved.size(); ++i) {
    const auto& spec = request.chain.specs()[i];
    AttemptRecord record;
    record.model_id = spec.model_id;
    record.temperature = params.temperature;
    record.max_tokens = params.max_tokens;
    record.tries = 0;
    AdapterReply reply;
    for (int attempt = 0; attempt <= options_.transport_retries; ++attempt) {
      auto started = std::chrono::steady_clock::now();
      try {
        reply = resolved[i]->complete(spec, request.bundle, params);
      } catch (const std::exception& e) {
        reply = AdapterReply{AttemptOutcome::provider_error, {}, e.what(), std::nullopt, std::nullopt};
      }
      double latency = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
      ++record.tries;
      record.latency_ms += latency;
      if (audit_) {
        nlohmann::json entry = {{"timestamp", options_.clock()},
                                {"model_id", spec.model_id},
                                {"task_kind", std::string(to_string(request.task_kind))},
                                {"outcome", std::string(to_string(reply.outcome))},
                                {"try", record.tries},
                                {"latency_ms", latency},
                                {"temperature", params.temperature},
                                {"max_tokens", params.max_tokens}};
        if (reply.prompt_tokens) entry["prompt_tokens"] = *reply.prompt_tokens;
        if (reply.completion_tokens) entry["completion_tokens"] = *reply.completion_tokens;
        if (!reply.error.empty()) entry["error"] = reply.error;
        audit_->record(entry);
      }
      if (reply.outcome != AttemptOutcome::transport_error) break;
    }
    record.outcome = reply.outcome;
    record.error = reply.error;
    record.prompt_tokens = reply.prompt_tokens;
    record.completion_tokens = reply.completion_tokens;
    attempts.push_back(record);
    if (reply.outcome == AttemptOutcome::ok) {
      return ModelResponse{std::move(reply.text), spec, std::move(attempts)};
    }
  }
  throw ExhaustionError(std::move(attempts));
}

ModelResponse call(const PromptRequest& request, const AdapterRegistry& adapters) {
  return Gateway(adapters).call(request);
}

double temperature_for(TaskKind kind, const config::ResolvedConfig& cfg) {
  switch (kind) {
    case TaskKind::creative: return cfg.number("llm_config.temperature");
    case TaskKind::analytical:
    case TaskKind::critical: return 0.0;
  }
  throw UsageError("undeclared task kind");
}

double temperature_for(std::string_view kind, const config::ResolvedConfig& cfg) {
  return temperature_for(parse_task_kind(kind), cfg);
}

int max_tokens_for(TaskKind kind, const config::ResolvedConfig& cfg) {
  if (const auto* table = cfg.find("llm_config.max_tokens"); table && table->is_object()) {
    auto key = std::string(to_string(kind));
    if (table->contains(key) && (*table)[key].is_number_integer()) {
      auto v = (*table)[key].get<int>();
      if (v > 0) return v;
    }
  }
  return kind == TaskKind::creative ? 4096 : 2048;
}

PromptRequest make_request(PromptBundle bundle, const config::ResolvedConfig& cfg) {
  PromptRequest req;
  req.task_kind = bundle.task_kind;
  req.temperature = temperature_for(bundle.task_kind, cfg);
  req.max_tokens = max_tokens_for(bundle.task_kind, cfg);
  req.chain = ModelChain::from_config(cfg);
  req.bundle = std::move(bundle);
  return req;
}

// ---------------------------------------------------------------------------
// Adapters

std::string MockAdapter::text_for(const PromptBundle& prompt, std::uint64_t seed) {
  static constexpr std::array<std::string_view, 16> kWords = {
      "stillness", "signal", "archive", "lattice", "threshold", "ember",  "harbor", "cipher",
      "meridian",  "orchard", "ledger",  "compass", "tide",      "kiln",   "vessel", "margin"};
  std::uint64_t h = text::fnv1a64(prompt.system_text + "\x1f" + prompt.user_text) ^ (seed * 0x9e3779b97f4a7c15ULL);
  std::string out = "mock:" + text::hex64(h);
  for (int i = 0; i < 8; ++i) {
    h ^= h >> 33;
    h *= 0xff51afd7ed558ccdULL;
    h ^= h >> 33;
    out += " ";
    out += kWords[h % kWords.size()];
  }
  return out;
}

AdapterReply MockAdapter::complete(const ModelSpec&, const PromptBundle& prompt, const SamplingParams&) {
  return {AttemptOutcome::ok, text_for(prompt, seed_), {}, std::nullopt, std::nullopt};
}

std::shared_ptr<ScriptedAdapter> ScriptedAdapter::always(AttemptOutcome outcome, std::string text) {
  return std::make_shared<ScriptedAdapter>([outcome, text](const ModelSpec&, const PromptBundle&, const SamplingParams&) {
    AdapterReply reply;
    reply.outcome = outcome;
    if (outcome == AttemptOutcome::ok) {
      reply.text = text;
    } else {
      reply.error = std::string("scripted ") + std::string(to_string(outcome));
    }
    return reply;
  });
}

AdapterReply ScriptedAdapter::complete(const ModelSpec& model, const PromptBundle& prompt, const SamplingParams& params) {
  {
    std::lock_guard lock(mutex_);
    calls_.push_back({model, prompt, params});
  }
  return script_(model, prompt, params);
}

std::vector<ScriptedAdapter::Call> ScriptedAdapter::calls() const {
  std::lock_guard lock(mutex_);
  return calls_;
}

// ---------------------------------------------------------------------------
// Gates

void GateRequirement::ensure_may_execute() const {
  if (!may_execute()) throw GateError("action '" + action_kind + "' requires a recorded human approval");
}

GateRequirement& GateRequirement::approve(std::string actor, std::string timestamp, std::string note) {
  if (text::trim(actor).empty()) throw ContractError("an approval needs a named actor");
  approval = ApprovalRecord{std::move(actor), std::move(timestamp), std::move(note)};
  return *this;
}

GateRequirement gate(std::string_view action_kind) {
  static const std::set<std::string, std::less<>> low_stakes = {"matchup_evaluation", "draft_generation",
                                                                "proposal_generation"};
  GateRequirement req;
  req.action_kind = std::string(action_kind);
  req.requires_human = !low_stakes.count(action_kind);
  return req;
}

}  // namespace imprint::gateway
