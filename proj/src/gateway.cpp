#include "socrates/gateway.hpp"

#include <httplib.h>

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

namespace socrates {

namespace {

constexpr std::size_t kBodyExcerptBytes = 200;

std::int64_t approx_tokens(std::size_t bytes) {
  return static_cast<std::int64_t>((bytes + 3) / 4);
}

std::string prompt_text(const ChatRequest& req) {
  std::string out;
  for (std::size_t i = 0; i < req.messages.size(); ++i) {
    if (i) out.push_back('\n');
    out += req.messages[i].content;
  }
  return out;
}

ScriptedProvider::Response parse_scripted_response(const json& j) {
  ScriptedProvider::Response r;
  r.text = j.value("text", std::string{});
  if (j.contains("tokens_in")) r.tokens_in = j.at("tokens_in").get<std::int64_t>();
  if (j.contains("tokens_out")) r.tokens_out = j.at("tokens_out").get<std::int64_t>();
  r.latency_ms = j.value("latency_ms", std::int64_t{0});
  r.status = j.value("status", 200);
  r.unreachable = j.value("unreachable", false);
  return r;
}

std::string redact(std::string text, const std::string& secret) {
  if (secret.empty()) return text;
  for (auto pos = text.find(secret); pos != std::string::npos; pos = text.find(secret, pos)) {
    text.replace(pos, secret.size(), "[redacted]");
  }
  return text;
}

}  // namespace

ProviderUnreachable::ProviderUnreachable(const std::string& model_id, int attempts,
                                         const std::string& last_error)
    : std::runtime_error("provider for " + model_id + " unreachable after " +
                         std::to_string(attempts) + " attempts: " + last_error),
      attempts_(attempts) {}

ProviderRejected::ProviderRejected(int status, std::string body_excerpt)
    : std::runtime_error("provider rejected request with status " + std::to_string(status) +
                         ": " + body_excerpt),
      status_(status),
      body_excerpt_(std::move(body_excerpt)) {}

std::string prompt_hash(const std::vector<ChatMessage>& messages) {
  json arr = json::array();
  for (const auto& m : messages) arr.push_back({{"role", m.role}, {"content", m.content}});
  return sha256_hex(canonical_dump(arr));
}

// ---------------------------------------------------------------------------
// ScriptedProvider

ScriptedProvider::ScriptedProvider(const json& script) {
  if (!script.is_object()) throw ConfigError("script must be a JSON object");
  try {
    for (const auto& e : script.value("responses", json::array())) {
      add_exact(e.at("prompt_sha256").get<std::string>(), e.value("trial_index", 0),
                parse_scripted_response(e));
    }
    for (const auto& jr : script.value("rules", json::array())) {
      Rule rule;
      for (const auto& c : jr.value("contains", json::array())) {
        rule.contains.push_back(c.get<std::string>());
      }
      if (jr.contains("model")) rule.model = jr.at("model").get<std::string>();
      for (const auto& resp : jr.at("responses")) {
        rule.responses.push_back(parse_scripted_response(resp));
      }
      if (rule.responses.empty()) throw ConfigError("script rule without responses");
      add_rule(std::move(rule));
    }
    if (script.contains("default")) set_default(parse_scripted_response(script.at("default")));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid script: ") + e.what());
  }
}

std::shared_ptr<ScriptedProvider> ScriptedProvider::from_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open script file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return std::make_shared<ScriptedProvider>(json::parse(ss.str()));
  } catch (const json::parse_error& e) {
    throw ConfigError("malformed script file " + path + ": " + e.what());
  }
}

void ScriptedProvider::add_exact(std::string prompt_sha256, int trial_index, Response r) {
  exact_[{std::move(prompt_sha256), trial_index}] = std::move(r);
}

void ScriptedProvider::add_rule(Rule rule) { rules_.push_back(std::move(rule)); }

void ScriptedProvider::set_default(Response r) { default_ = std::move(r); }

ProviderReply ScriptedProvider::call(const ChatRequest& req, const ModelSpec& /*spec*/,
                                     std::chrono::milliseconds /*timeout*/) {
  const Response* chosen = nullptr;
  if (!exact_.empty()) {
    auto it = exact_.find({prompt_hash(req.messages), req.trial_index});
    if (it != exact_.end()) chosen = &it->second;
  }
  const std::string text = prompt_text(req);
  if (!chosen) {
    for (const auto& rule : rules_) {
      if (rule.model && *rule.model != req.model_id) continue;
      bool all = true;
      for (const auto& needle : rule.contains) {
        if (text.find(needle) == std::string::npos) {
          all = false;
          break;
        }
      }
      if (all) {
        const auto n = rule.responses.size();
        chosen = &rule.responses[static_cast<std::size_t>(req.trial_index) % n];
        break;
      }
    }
  }
  if (!chosen && default_) chosen = &*default_;
  if (!chosen) throw ProviderRejected(404, "no scripted response for prompt");

  if (chosen->unreachable) throw TransientProviderError("scripted: unreachable");
  if (chosen->status == 429 || chosen->status >= 500) {
    throw TransientProviderError("scripted: HTTP " + std::to_string(chosen->status));
  }
  if (chosen->status >= 400) {
    throw ProviderRejected(chosen->status, chosen->text.substr(0, kBodyExcerptBytes));
  }
  ProviderReply reply;
  reply.text = chosen->text;
  reply.tokens_in = chosen->tokens_in.value_or(approx_tokens(text.size()));
  reply.tokens_out = chosen->tokens_out.value_or(approx_tokens(chosen->text.size()));
  reply.latency_ms = chosen->latency_ms;
  return reply;
}

// ---------------------------------------------------------------------------
// HttpChatProvider

HttpChatProvider::HttpChatProvider(std::string endpoint_url, std::string api_key)
    : api_key_(std::move(api_key)) {
  const auto scheme_end = endpoint_url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("endpoint_url must include a scheme");
  const auto path_start = endpoint_url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) {
    scheme_host_port_ = endpoint_url;
    path_ = "/";
  } else {
    scheme_host_port_ = endpoint_url.substr(0, path_start);
    path_ = endpoint_url.substr(path_start);
  }
}

ProviderReply HttpChatProvider::call(const ChatRequest& req, const ModelSpec& spec,
                                     std::chrono::milliseconds timeout) {
  json body;
  body["model"] = req.model_id;
  body["messages"] = json::array();
  for (const auto& m : req.messages) {
    body["messages"].push_back({{"role", m.role}, {"content", m.content}});
  }
  body["temperature"] = req.temperature;
  body["max_tokens"] = req.max_output_tokens > 0 ? req.max_output_tokens : spec.max_output_tokens;

  httplib::Client client(scheme_host_port_);
  const auto secs = static_cast<time_t>(timeout.count() / 1000);
  const auto usecs = static_cast<time_t>((timeout.count() % 1000) * 1000);
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

  auto res = client.Post(path_, headers, body.dump(), "application/json");
  if (!res) {
    throw TransientProviderError("transport error: " + httplib::to_string(res.error()));
  }
  if (res->status == 429 || res->status >= 500) {
    throw TransientProviderError("HTTP " + std::to_string(res->status));
  }
  const std::string excerpt = redact(res->body.substr(0, kBodyExcerptBytes), api_key_);
  if (res->status != 200) throw ProviderRejected(res->status, excerpt);

  try {
    const json j = json::parse(res->body);
    ProviderReply reply;
    const json& content = j.at("choices").at(0).at("message").at("content");
    reply.text = content.is_null() ? std::string{} : content.get<std::string>();
    if (j.contains("usage") && j.at("usage").is_object()) {
      const json& usage = j.at("usage");
      reply.tokens_in = usage.value("prompt_tokens", std::int64_t{0});
      reply.tokens_out = usage.value("completion_tokens", std::int64_t{0});
    }
    if (reply.tokens_in < 0 || reply.tokens_out < 0) {
      throw ProviderRejected(res->status, "negative token usage");
    }
    return reply;
  } catch (const json::exception&) {
    throw ProviderRejected(res->status, "unparseable response: " + excerpt);
  }
}

// ---------------------------------------------------------------------------
// Gateway

Gateway::Gateway(GatewayOptions options)
    : options_(std::move(options)),
      slots_(std::max(1, options_.parallelism)),
      rng_(std::random_device{}()) {
  if (!options_.sleep) {
    options_.sleep = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  }
  if (!options_.now_ms) {
    options_.now_ms = [] {
      return std::chrono::duration_cast<std::chrono::milliseconds>(
                 std::chrono::system_clock::now().time_since_epoch())
          .count();
    };
  }
}

void Gateway::register_model(ModelSpec spec, std::shared_ptr<ChatProvider> provider) {
  if (spec.price_in < 0 || spec.price_out < 0) {
    throw ConfigError("negative price for model " + spec.model_id);
  }
  if (!provider) throw ConfigError("null provider for model " + spec.model_id);
  auto id = spec.model_id;
  models_.insert_or_assign(std::move(id), Registered{std::move(spec), std::move(provider)});
}

bool Gateway::has_model(std::string_view model_id) const {
  return models_.find(model_id) != models_.end();
}

const ModelSpec& Gateway::spec(std::string_view model_id) const {
  auto it = models_.find(model_id);
  if (it == models_.end()) throw UnknownModel(std::string(model_id));
  return it->second.spec;
}

std::vector<std::string> Gateway::model_ids() const {
  std::vector<std::string> out;
  for (const auto& [id, _] : models_) out.push_back(id);
  return out;
}

std::chrono::milliseconds Gateway::backoff_delay(int attempt) {
  double scale = 1.0;
  if (options_.jitter > 0) {
    std::lock_guard lock(rng_mu_);
    std::uniform_real_distribution<double> dist(1.0 - options_.jitter, 1.0 + options_.jitter);
    scale = dist(rng_);
  }
  const double base = static_cast<double>(options_.backoff_base.count()) *
                      std::pow(options_.backoff_factor, attempt);
  return std::chrono::milliseconds(static_cast<std::int64_t>(std::llround(base * scale)));
}

ChatResponse Gateway::complete(const ChatRequest& req, Component component) {
  auto it = models_.find(req.model_id);
  if (it == models_.end()) throw UnknownModel(req.model_id);
  const Registered& reg = it->second;
  if (req.messages.empty()) throw std::invalid_argument("chat request without messages");
  if (req.messages.front().role != "system" && req.messages.front().role != "user") {
    throw std::invalid_argument("first message must be system or user");
  }

  std::string last_error;
  const int attempts = options_.retries + 1;
  for (int attempt = 0; attempt < attempts; ++attempt) {
    if (attempt > 0) options_.sleep(backoff_delay(attempt - 1));
    ProviderReply reply;
    const auto started = std::chrono::steady_clock::now();
    try {
      slots_.acquire();
      struct Release {
        std::counting_semaphore<>& s;
        ~Release() { s.release(); }
      } release{slots_};
      reply = reg.provider->call(req, reg.spec, options_.timeout);
    } catch (const TransientProviderError& e) {
      last_error = e.what();
      continue;
    }
    const auto measured = std::chrono::duration_cast<std::chrono::milliseconds>(
                              std::chrono::steady_clock::now() - started)
                              .count();
    ChatResponse resp;
    resp.text = std::move(reply.text);
    resp.tokens_in = std::max<std::int64_t>(0, reply.tokens_in);
    resp.tokens_out = std::max<std::int64_t>(0, reply.tokens_out);
    resp.latency_ms = reply.latency_ms.value_or(measured);
    resp.model_id = req.model_id;

    CostEntry entry;
    entry.timestamp_ms = options_.now_ms();
    entry.component = component;
    entry.model_id = req.model_id;
    entry.tokens_in = resp.tokens_in;
    entry.tokens_out = resp.tokens_out;
    entry.usd = token_cost_usd(resp.tokens_in, resp.tokens_out, reg.spec.price_in,
                               reg.spec.price_out);
    ledger_.append(std::move(entry));
    return resp;
  }
  throw ProviderUnreachable(req.model_id, attempts, last_error);
}

// ---------------------------------------------------------------------------
// Config

std::string api_key_env_name(std::string_view provider_tag) {
  std::string name = "SOCRATES_API_KEY_";
  for (char c : provider_tag) {
    name.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  }
  return name;
}

std::vector<ModelSpec> parse_provider_config(const json& j) {
  if (!j.is_array()) throw ConfigError("provider config must be a JSON array of model specs");
  std::vector<ModelSpec> out;
  std::set<std::string> ids;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const json& e = j[i];
    const std::string where = "provider config entry " + std::to_string(i);
    try {
      ModelSpec spec;
      spec.model_id = e.at("model_id").get<std::string>();
      const auto kind = e.at("provider").get<std::string>();
      if (kind == "http_openai_style") {
        spec.provider = ProviderKind::http_openai_style;
      } else if (kind == "scripted") {
        spec.provider = ProviderKind::scripted;
      } else {
        throw ConfigError(where + ": unknown provider '" + kind + "'");
      }
      if (e.contains("endpoint_url")) spec.endpoint_url = e.at("endpoint_url").get<std::string>();
      spec.provider_tag = e.value("provider_tag", std::string{});
      spec.price_in = e.at("price_in").get<double>();
      spec.price_out = e.at("price_out").get<double>();
      spec.max_output_tokens = e.value("max_output_tokens", 1024);
      if (e.contains("script")) spec.script = e.at("script").get<std::string>();

      if (spec.model_id.empty()) throw ConfigError(where + ": empty model_id");
      if (spec.price_in < 0 || spec.price_out < 0) throw ConfigError(where + ": negative price");
      if (spec.max_output_tokens < 1) throw ConfigError(where + ": max_output_tokens < 1");
      const bool http = spec.provider == ProviderKind::http_openai_style;
      if (http != spec.endpoint_url.has_value()) {
        throw ConfigError(where + ": endpoint_url is required iff provider is http_openai_style");
      }
      if (http && spec.provider_tag.empty()) throw ConfigError(where + ": missing provider_tag");
      if (!ids.insert(spec.model_id).second) {
        throw ConfigError(where + ": duplicate model_id " + spec.model_id);
      }
      out.push_back(std::move(spec));
    } catch (const json::exception& ex) {
      throw ConfigError(where + ": " + ex.what());
    }
  }
  return out;
}

std::vector<ModelSpec> load_provider_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open provider config: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_provider_config(json::parse(ss.str()));
  } catch (const json::parse_error& e) {
    throw ConfigError("malformed provider config " + path + ": " + e.what());
  }
}

json model_spec_to_json(const ModelSpec& spec) {
  json j = {{"model_id", spec.model_id},
            {"provider", spec.provider == ProviderKind::scripted ? "scripted" : "http_openai_style"},
            {"price_in", spec.price_in},
            {"price_out", spec.price_out},
            {"max_output_tokens", spec.max_output_tokens}};
  if (spec.endpoint_url) j["endpoint_url"] = *spec.endpoint_url;
  if (!spec.provider_tag.empty()) j["provider_tag"] = spec.provider_tag;
  if (spec.script) j["script"] = *spec.script;
  return j;
}

std::unique_ptr<Gateway> build_gateway(const std::vector<ModelSpec>& specs,
                                       const std::string& config_dir,
                                       const GatewayBuildOptions& opts) {
  namespace fs = std::filesystem;
  auto resolve = [&](const std::string& p) {
    fs::path path(p);
    return path.is_absolute() ? path.string() : (fs::path(config_dir) / path).string();
  };

  std::map<std::string, std::shared_ptr<ScriptedProvider>> scripts;
  auto scripted_for = [&](const std::string& path) {
    auto& slot = scripts[path];
    if (!slot) slot = ScriptedProvider::from_file(path);
    return slot;
  };

  std::optional<std::string> fallback_script;
  if (opts.dry_run_script) {
    fallback_script = *opts.dry_run_script;
  } else {
    for (const auto& s : specs) {
      if (s.provider == ProviderKind::scripted && s.script) {
        fallback_script = resolve(*s.script);
        break;
      }
    }
  }

  auto gateway = std::make_unique<Gateway>(opts.gateway);
  for (const auto& spec : specs) {
    std::shared_ptr<ChatProvider> provider;
    if (spec.provider == ProviderKind::scripted) {
      if (spec.script) {
        provider = scripted_for(resolve(*spec.script));
      } else if (fallback_script) {
        provider = scripted_for(*fallback_script);
      } else {
        throw ConfigError("scripted model " + spec.model_id + " has no script");
      }
    } else if (opts.dry_run) {
      if (!fallback_script) {
        throw ConfigError("dry run needs a script for HTTP model " + spec.model_id);
      }
      provider = scripted_for(*fallback_script);
    } else {
      const char* key = std::getenv(api_key_env_name(spec.provider_tag).c_str());
      provider = std::make_shared<HttpChatProvider>(*spec.endpoint_url, key ? key : "");
    }
    gateway->register_model(spec, std::move(provider));
  }
  return gateway;
}

}  // namespace socrates
