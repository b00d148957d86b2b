#include "toolsim/backend.hpp"

#include <chrono>
#include <cstdlib>
#include <iostream>
#include <thread>

#include <httplib.h>

namespace toolsim::llm {

std::string to_string(Role role) {
  switch (role) {
    case Role::user_agent: return "user_agent";
    case Role::assistant_agent: return "assistant_agent";
    case Role::executor_agent: return "executor_agent";
    case Role::doc_generator: return "doc_generator";
    case Role::judge: return "judge";
  }
  return "unknown";
}

Role role_from_string(const std::string& tag) {
  if (tag == "user_agent") return Role::user_agent;
  if (tag == "assistant_agent") return Role::assistant_agent;
  if (tag == "executor_agent") return Role::executor_agent;
  if (tag == "doc_generator") return Role::doc_generator;
  if (tag == "judge") return Role::judge;
  throw std::runtime_error("unknown role tag: " + tag);
}

Sampling default_sampling(Role role) {
  Sampling s;
  s.temperature = (role == Role::user_agent) ? 0.7 : 0.0;
  return s;
}

// Counting gate bounding concurrent provider calls.
class Backend::Gate {
 public:
  explicit Gate(int limit) : limit_(limit) {}

  void acquire() {
    std::unique_lock lk(mutex_);
    cv_.wait(lk, [&] { return active_ < limit_; });
    ++active_;
  }

  void release() {
    {
      std::lock_guard lk(mutex_);
      --active_;
    }
    cv_.notify_one();
  }

 private:
  int limit_;
  int active_ = 0;
  std::mutex mutex_;
  std::condition_variable cv_;
};

namespace {

void validate_request(const CompletionRequest& request) {
  if (request.prompt.empty()) {
    throw BackendError(BackendErrorKind::invalid_request, "prompt is empty");
  }
  for (const auto& marker : request.stop_markers) {
    if (marker.empty()) {
      throw BackendError(BackendErrorKind::invalid_request, "empty stop marker");
    }
  }
  if (request.sampling.temperature < 0.0 || request.sampling.temperature > 2.0) {
    throw BackendError(BackendErrorKind::invalid_request, "temperature out of [0,2]");
  }
  if (request.sampling.max_output_tokens <= 0) {
    throw BackendError(BackendErrorKind::invalid_request, "max_output_tokens must be positive");
  }
}

}  // namespace

Backend::Backend(BackendConfig config)
    : config_(std::move(config)), gate_(std::make_unique<Gate>(std::max(1, config_.concurrency_limit))) {}

Backend::~Backend() = default;

void Backend::backoff_sleep(int ms) {
  std::this_thread::sleep_for(std::chrono::milliseconds(ms));
}

std::string Backend::complete(const CompletionRequest& request) {
  validate_request(request);
  if (!config_.bindings.count(request.role)) {
    throw BackendError(BackendErrorKind::unbound_role,
                       "no provider binding for role " + to_string(request.role));
  }

  gate_->acquire();
  struct Release {
    Gate* g;
    ~Release() { g->release(); }
  } release{gate_.get()};

  const int max_attempts = std::max(1, config_.retry.max_attempts);
  std::string last_error;
  for (int attempt = 1; attempt <= max_attempts; ++attempt) {
    try {
      return truncate_at_stop(complete_raw(request), request.stop_markers);
    } catch (const BackendError& e) {
      if (e.kind() != BackendErrorKind::transient) throw;
      last_error = e.what();
      if (attempt < max_attempts) {
        backoff_sleep(config_.retry.backoff_base_ms * (1 << (attempt - 1)));
      }
    }
  }
  throw BackendError(BackendErrorKind::retries_exhausted,
                     "gave up after " + std::to_string(max_attempts) + " attempts: " + last_error);
}

std::string truncate_at_stop(std::string text, const std::vector<std::string>& stop_markers) {
  std::size_t cut = std::string::npos;
  for (const auto& marker : stop_markers) {
    const std::size_t pos = text.find(marker);
    if (pos != std::string::npos && pos < cut) cut = pos;
  }
  if (cut != std::string::npos) text.resize(cut);
  return text;
}

// --- scripted backend ---

FixtureMap scripted_fixture_load(const std::string& path) {
  const std::string content = read_file(path);
  if (trim(content).empty()) return {};

  json doc;
  try {
    doc = json::parse(content);
  } catch (const json::exception& e) {
    throw std::runtime_error("malformed fixture file " + path + ": " + e.what());
  }
  if (!doc.is_array()) {
    throw std::runtime_error("malformed fixture file " + path + ": expected a JSON array");
  }

  FixtureMap fixtures;
  for (const auto& entry : doc) {
    if (!entry.is_object() || !entry.contains("role") || !entry.contains("prompt_digest") ||
        !entry.contains("response")) {
      throw std::runtime_error("malformed fixture file " + path +
                               ": entries need role, prompt_digest, response");
    }
    fixtures[{entry.at("role").get<std::string>(), entry.at("prompt_digest").get<std::string>()}] =
        entry.at("response").get<std::string>();
  }
  return fixtures;
}

void scripted_fixture_save(const FixtureMap& fixtures, const std::string& path) {
  json doc = json::array();
  for (const auto& [key, response] : fixtures) {
    doc.push_back({{"role", key.role}, {"prompt_digest", key.digest}, {"response", response}});
  }
  write_file(path, doc.dump(2) + "\n");
}

BackendConfig ScriptedBackend::scripted_config() {
  BackendConfig config;
  for (Role role : {Role::user_agent, Role::assistant_agent, Role::executor_agent,
                    Role::doc_generator, Role::judge}) {
    config.bindings[role] = ProviderBinding{"scripted", "scripted", ""};
  }
  config.retry.max_attempts = 1;
  return config;
}

ScriptedBackend::ScriptedBackend(FixtureMap fixtures, BackendConfig config)
    : Backend(std::move(config)), fixtures_(std::move(fixtures)) {
  json canonical = json::array();
  for (const auto& [key, response] : fixtures_) {
    canonical.push_back({{"role", key.role}, {"prompt_digest", key.digest}, {"response", response}});
  }
  id_ = "scripted:" + json_digest(canonical);
}

std::shared_ptr<ScriptedBackend> ScriptedBackend::from_file(const std::string& path) {
  return std::make_shared<ScriptedBackend>(scripted_fixture_load(path));
}

std::string ScriptedBackend::complete_raw(const CompletionRequest& request) {
  const FixtureKey key{to_string(request.role), prompt_digest(to_string(request.role), request.prompt)};
  auto it = fixtures_.find(key);
  if (it == fixtures_.end()) {
    throw BackendError(BackendErrorKind::fixture_miss,
                       "fixture miss for role " + key.role + ", digest " + key.digest);
  }
  return it->second;
}

// --- recording backend ---

RecordingBackend::RecordingBackend(std::shared_ptr<Backend> inner)
    : Backend(inner->config()), inner_(std::move(inner)) {}

std::string RecordingBackend::id() const { return "recording:" + inner_->id(); }

std::string RecordingBackend::complete_raw(const CompletionRequest& request) {
  const std::string response = inner_->complete(request);
  const FixtureKey key{to_string(request.role), prompt_digest(to_string(request.role), request.prompt)};
  std::lock_guard lk(mutex_);
  recorded_[key] = response;
  return response;
}

FixtureMap RecordingBackend::recorded() const {
  std::lock_guard lk(mutex_);
  return recorded_;
}

void RecordingBackend::save(const std::string& path) const {
  scripted_fixture_save(recorded(), path);
}

// --- live backend ---

HttpBackend::HttpBackend(BackendConfig config) : Backend(std::move(config)) {}

std::string HttpBackend::id() const {
  std::string models;
  for (const auto& [role, binding] : config().bindings) {
    if (!models.empty()) models += ",";
    models += to_string(role) + "=" + binding.model;
  }
  return "live:" + fnv1a_hex(models);
}

std::string HttpBackend::complete_raw(const CompletionRequest& request) {
  const ProviderBinding& binding = config().bindings.at(request.role);

  std::string credential;
  if (!binding.credential_env.empty()) {
    const char* value = std::getenv(binding.credential_env.c_str());
    if (!value) {
      throw BackendError(BackendErrorKind::provider_rejected,
                         "credential env var not set: " + binding.credential_env);
    }
    credential = value;
  }

  json body = {
      {"model", binding.model},
      {"messages", json::array({{{"role", "user"}, {"content", request.prompt}}})},
      {"temperature", request.sampling.temperature},
      {"max_tokens", request.sampling.max_output_tokens},
  };
  if (!request.stop_markers.empty()) body["stop"] = request.stop_markers;

  httplib::Client client(binding.endpoint);
  client.set_connection_timeout(10);
  client.set_read_timeout(120);

  httplib::Headers headers;
  if (!credential.empty()) headers.emplace("Authorization", "Bearer " + credential);

  if (config().verbose) {
    std::cerr << "[llm] POST " << binding.endpoint << "/v1/chat/completions "
              << "(credential redacted) body=" << body.dump() << "\n";
  }

  auto res = client.Post("/v1/chat/completions", headers, body.dump(), "application/json");
  if (!res) {
    throw BackendError(BackendErrorKind::transient,
                       "network failure reaching " + binding.endpoint);
  }
  if (config().verbose) {
    std::cerr << "[llm] status " << res->status << " body=" << res->body << "\n";
  }

  if (res->status == 401 || res->status == 403) {
    throw BackendError(BackendErrorKind::provider_rejected, "provider rejected credentials");
  }
  if (res->status == 429 || res->status >= 500) {
    throw BackendError(BackendErrorKind::transient,
                       "provider returned status " + std::to_string(res->status));
  }
  if (res->status != 200) {
    throw BackendError(BackendErrorKind::provider_rejected,
                       "provider returned status " + std::to_string(res->status) + ": " + res->body);
  }

  json doc;
  try {
    doc = json::parse(res->body);
  } catch (const json::exception&) {
    throw BackendError(BackendErrorKind::transient, "unparseable provider response body");
  }
  if (!doc.contains("choices") || doc["choices"].empty()) {
    throw BackendError(BackendErrorKind::provider_rejected, "provider response has no choices");
  }
  const json& first = doc["choices"][0];
  if (first.contains("message") && first["message"].contains("content")) {
    return first["message"]["content"].get<std::string>();
  }
  if (first.contains("text")) {
    return first["text"].get<std::string>();
  }
  throw BackendError(BackendErrorKind::provider_rejected, "provider response has no content");
}

// --- selectors and config files ---

BackendConfig backend_config_from_json(const json& j) {
  BackendConfig config;
  if (j.contains("concurrency_limit")) config.concurrency_limit = j.at("concurrency_limit").get<int>();
  if (config.concurrency_limit < 1) throw std::runtime_error("concurrency_limit must be positive");
  if (j.contains("retry")) {
    const json& r = j.at("retry");
    if (r.contains("max_attempts")) config.retry.max_attempts = r.at("max_attempts").get<int>();
    if (r.contains("backoff_base_ms")) config.retry.backoff_base_ms = r.at("backoff_base_ms").get<int>();
    if (config.retry.max_attempts < 1) throw std::runtime_error("retry.max_attempts must be >= 1");
  }
  if (!j.contains("bindings") || !j.at("bindings").is_object()) {
    throw std::runtime_error("backend config needs a bindings object");
  }
  for (const auto& [tag, b] : j.at("bindings").items()) {
    ProviderBinding binding;
    binding.endpoint = b.at("endpoint").get<std::string>();
    binding.model = b.at("model").get<std::string>();
    binding.credential_env = b.value("credential_env", "");
    config.bindings[role_from_string(tag)] = binding;
  }
  return config;
}

json backend_config_to_json(const BackendConfig& config) {
  json bindings = json::object();
  for (const auto& [role, b] : config.bindings) {
    bindings[to_string(role)] = {
        {"endpoint", b.endpoint}, {"model", b.model}, {"credential_env", b.credential_env}};
  }
  return {{"bindings", bindings},
          {"concurrency_limit", config.concurrency_limit},
          {"retry",
           {{"max_attempts", config.retry.max_attempts},
            {"backoff_base_ms", config.retry.backoff_base_ms}}}};
}

std::shared_ptr<Backend> make_backend(const std::string& selector) {
  const std::size_t colon = selector.find(':');
  if (colon == std::string::npos) {
    throw std::runtime_error("backend selector must be scripted:<fixture path> or live:<config path>");
  }
  const std::string kind = selector.substr(0, colon);
  const std::string path = selector.substr(colon + 1);
  if (kind == "scripted") {
    return ScriptedBackend::from_file(path);
  }
  if (kind == "live") {
    return std::make_shared<HttpBackend>(backend_config_from_json(json::parse(read_file(path))));
  }
  throw std::runtime_error("unknown backend kind: " + kind);
}

}  // namespace toolsim::llm
