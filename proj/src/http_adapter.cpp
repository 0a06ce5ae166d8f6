#include <cctype>
#include <cstdlib>

#include <httplib.h>

#include "imprint/gateway.hpp"

namespace imprint::gateway {

HttpAdapter::HttpAdapter(std::string base_url, std::string path) : base_url_(std::move(base_url)), path_(std::move(path)) {
  if (base_url_.empty()) throw ConfigurationError("HTTP adapter needs a base URL");
}

std::string HttpAdapter::api_key_variable(std::string_view provider) {
  std::string out;
  for (char c : provider) {
    out += std::isalnum(static_cast<unsigned char>(c)) ? static_cast<char>(std::toupper(static_cast<unsigned char>(c))) : '_';
  }
  return out + "_API_KEY";
}

AdapterReply HttpAdapter::complete(const ModelSpec& model, const PromptBundle& prompt, const SamplingParams& params) {
  httplib::Client client(base_url_);
  auto secs = params.timeout.count() / 1000;
  auto usecs = (params.timeout.count() % 1000) * 1000;
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);

  httplib::Headers headers;
  if (const char* key = std::getenv(api_key_variable(model.provider).c_str()); key && *key) {
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }

  nlohmann::json body = {{"model", model.model_id},
                         {"temperature", params.temperature},
                         {"max_tokens", params.max_tokens},
                         {"messages",
                          nlohmann::json::array({{{"role", "system"}, {"content", prompt.system_text}},
                                                 {{"role", "user"}, {"content", prompt.user_text}}})}};

  auto started = std::chrono::steady_clock::now();
  auto res = client.Post(path_, headers, body.dump(), "application/json");
  AdapterReply reply;
  if (!res) {
    auto err = res.error();
    auto elapsed = std::chrono::steady_clock::now() - started;
    bool timed_out = err == httplib::Error::ConnectionTimeout ||
                     (err == httplib::Error::Read && elapsed >= params.timeout - std::chrono::milliseconds(50));
    reply.outcome = timed_out ? AttemptOutcome::timeout : AttemptOutcome::transport_error;
    reply.error = httplib::to_string(err);
    return reply;
  }
  if (res->status < 200 || res->status >= 300) {
    reply.outcome = AttemptOutcome::provider_error;
    reply.error = "HTTP " + std::to_string(res->status);
    return reply;
  }
  try {
    auto parsed = nlohmann::json::parse(res->body);
    reply.text = parsed.at("choices").at(0).at("message").at("content").get<std::string>();
    if (auto u = parsed.find("usage"); u != parsed.end() && u->is_object()) {
      if (u->contains("prompt_tokens")) reply.prompt_tokens = (*u)["prompt_tokens"].get<int>();
      if (u->contains("completion_tokens")) reply.completion_tokens = (*u)["completion_tokens"].get<int>();
    }
    reply.outcome = AttemptOutcome::ok;
  } catch (const std::exception& e) {
    reply.outcome = AttemptOutcome::provider_error;
    reply.error = std::string("malformed provider response: ") + e.what();
  }
  return reply;
}

}  // namespace imprint::gateway
