#pragma once

// Chat-completion gateway: model registry, retry/timeout policy, bounded
// parallelism and cost accounting in front of pluggable providers.

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <optional>
#include <semaphore>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "socrates/cost_ledger.hpp"
#include "socrates/json_util.hpp"

namespace socrates {

enum class ProviderKind { http_openai_style, scripted };

struct ModelSpec {
  std::string model_id;
  ProviderKind provider = ProviderKind::scripted;
  std::optional<std::string> endpoint_url;
  // Selects the SOCRATES_API_KEY_<TAG> environment variable for HTTP providers.
  std::string provider_tag;
  double price_in = 0.0;   // USD per 1M input tokens
  double price_out = 0.0;  // USD per 1M output tokens
  int max_output_tokens = 1024;
  // Scripted providers only: script file, resolved relative to the config file.
  std::optional<std::string> script;

  bool operator==(const ModelSpec&) const = default;
};

struct ChatMessage {
  std::string role;  // "system" or "user"
  std::string content;

  bool operator==(const ChatMessage&) const = default;
};

struct ChatRequest {
  std::string model_id;
  std::vector<ChatMessage> messages;
  double temperature = 1.0;
  int max_output_tokens = 0;  // 0: use the model's limit
  int trial_index = 0;
};

struct ChatResponse {
  std::string text;
  std::int64_t tokens_in = 0;
  std::int64_t tokens_out = 0;
  std::int64_t latency_ms = 0;
  std::string model_id;

  bool operator==(const ChatResponse&) const = default;
};

// What a provider hands back for a single attempt.
struct ProviderReply {
  std::string text;
  std::int64_t tokens_in = 0;
  std::int64_t tokens_out = 0;
  // Providers that know their latency (scripted replay) report it; otherwise
  // the gateway measures wall time.
  std::optional<std::int64_t> latency_ms;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnknownModel : public std::runtime_error {
 public:
  explicit UnknownModel(const std::string& id) : std::runtime_error("unknown model: " + id) {}
};

// Timeout, connection failure, HTTP 429 or 5xx. Retried by the gateway.
class TransientProviderError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ProviderUnreachable : public std::runtime_error {
 public:
  ProviderUnreachable(const std::string& model_id, int attempts, const std::string& last_error);
  int attempts() const noexcept { return attempts_; }

 private:
  int attempts_;
};

// Non-retryable rejection (4xx other than 429, malformed response body).
class ProviderRejected : public std::runtime_error {
 public:
  ProviderRejected(int status, std::string body_excerpt);
  int status() const noexcept { return status_; }
  const std::string& body_excerpt() const noexcept { return body_excerpt_; }

 private:
  int status_;
  std::string body_excerpt_;
};

class ChatProvider {
 public:
  virtual ~ChatProvider() = default;
  virtual ProviderReply call(const ChatRequest& req, const ModelSpec& spec,
                             std::chrono::milliseconds timeout) = 0;
};

// sha256 over the canonical JSON of the message list.
std::string prompt_hash(const std::vector<ChatMessage>& messages);

// Deterministic replay provider. Lookup order for a request:
//   1. exact (prompt_sha256, trial_index) entry,
//   2. first rule whose `contains` substrings all occur in the prompt text
//      (system + "\n" + user messages) and whose optional `model` matches;
//      the rule answers with responses[trial_index % responses.size()],
//   3. the `default` response.
// A scripted response may carry `status` (>= 400) or `"unreachable": true` to
// simulate provider failures. Missing token counts default to ceil(bytes / 4).
class ScriptedProvider final : public ChatProvider {
 public:
  struct Response {
    std::string text;
    std::optional<std::int64_t> tokens_in;
    std::optional<std::int64_t> tokens_out;
    std::int64_t latency_ms = 0;
    int status = 200;
    bool unreachable = false;
  };
  struct Rule {
    std::vector<std::string> contains;
    std::optional<std::string> model;
    std::vector<Response> responses;
  };

  ScriptedProvider() = default;
  explicit ScriptedProvider(const json& script);
  static std::shared_ptr<ScriptedProvider> from_file(const std::string& path);

  void add_exact(std::string prompt_sha256, int trial_index, Response r);
  void add_rule(Rule rule);
  void set_default(Response r);

  ProviderReply call(const ChatRequest& req, const ModelSpec& spec,
                     std::chrono::milliseconds timeout) override;

 private:
  std::map<std::pair<std::string, int>, Response> exact_;
  std::vector<Rule> rules_;
  std::optional<Response> default_;
};

// OpenAI-style POST {model, messages, temperature, max_tokens}; reads
// choices[0].message.content and usage.{prompt,completion}_tokens.
class HttpChatProvider final : public ChatProvider {
 public:
  HttpChatProvider(std::string endpoint_url, std::string api_key);

  ProviderReply call(const ChatRequest& req, const ModelSpec& spec,
                     std::chrono::milliseconds timeout) override;

 private:
  std::string scheme_host_port_;
  std::string path_;
  std::string api_key_;
};

struct GatewayOptions {
  int retries = 3;
  std::chrono::milliseconds timeout{60'000};
  std::chrono::milliseconds backoff_base{1'000};
  double backoff_factor = 2.0;
  // Each backoff delay is scaled by a uniform factor in [1 - jitter, 1 + jitter].
  double jitter = 0.2;
  int parallelism = 5;
  std::function<void(std::chrono::milliseconds)> sleep;  // default: this_thread::sleep_for
  std::function<std::int64_t()> now_ms;                   // default: system clock
};

class Gateway {
 public:
  explicit Gateway(GatewayOptions options = {});

  void register_model(ModelSpec spec, std::shared_ptr<ChatProvider> provider);
  bool has_model(std::string_view model_id) const;
  const ModelSpec& spec(std::string_view model_id) const;
  std::vector<std::string> model_ids() const;

  // Blocks for at most timeout * (retries + 1) plus backoff. Appends one ledger
  // entry per successful call.
  ChatResponse complete(const ChatRequest& req, Component component);

  CostLedger& ledger() { return ledger_; }
  const CostLedger& ledger() const { return ledger_; }
  const GatewayOptions& options() const { return options_; }

 private:
  struct Registered {
    ModelSpec spec;
    std::shared_ptr<ChatProvider> provider;
  };

  std::chrono::milliseconds backoff_delay(int attempt);

  GatewayOptions options_;
  std::map<std::string, Registered, std::less<>> models_;
  std::counting_semaphore<> slots_;
  CostLedger ledger_;
  std::mutex rng_mu_;
  std::mt19937_64 rng_;
};

// Provider config: a JSON array of ModelSpec objects.
std::vector<ModelSpec> parse_provider_config(const json& j);
std::vector<ModelSpec> load_provider_config(const std::string& path);
json model_spec_to_json(const ModelSpec& spec);

struct GatewayBuildOptions {
  GatewayOptions gateway;
  // Never construct HTTP providers; every model is served by a scripted one.
  bool dry_run = false;
  // Script used for dry-run substitution of HTTP models. Falls back to the
  // first scripted model's script in the config.
  std::optional<std::string> dry_run_script;
};

// Reads SOCRATES_API_KEY_<TAG> for HTTP models. Script paths are resolved
// relative to `config_dir`.
std::unique_ptr<Gateway> build_gateway(const std::vector<ModelSpec>& specs,
                                       const std::string& config_dir,
                                       const GatewayBuildOptions& opts);

std::string api_key_env_name(std::string_view provider_tag);

}  // namespace socrates
