#pragma once

#include <condition_variable>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "toolsim/util.hpp"

namespace toolsim::llm {

// The five agent roles a completion can be issued for. Each role may be
// bound to a different provider and model; the assignment is pure
// configuration.
enum class Role { user_agent, assistant_agent, executor_agent, doc_generator, judge };

std::string to_string(Role role);
Role role_from_string(const std::string& tag);

struct Sampling {
  double temperature = 0.0;  // [0, 2]
  int max_output_tokens = 1024;
};

// Per-role defaults: 0.7 for instruction drafting (diversity), 0.0 everywhere
// else (determinism).
Sampling default_sampling(Role role);

struct CompletionRequest {
  Role role = Role::assistant_agent;
  std::string prompt;
  Sampling sampling;
  std::vector<std::string> stop_markers;
};

struct RetryPolicy {
  int max_attempts = 3;  // >= 1
  int backoff_base_ms = 100;
};

struct ProviderBinding {
  std::string endpoint;        // base URL for live providers
  std::string model;           // provider model identifier
  std::string credential_env;  // name of env var holding the credential
};

struct BackendConfig {
  std::map<Role, ProviderBinding> bindings;
  int concurrency_limit = 4;
  RetryPolicy retry;
  bool verbose = false;
};

enum class BackendErrorKind {
  invalid_request,    // malformed CompletionRequest
  unbound_role,       // no binding for the request's role
  retries_exhausted,  // transient failures beyond max_attempts
  provider_rejected,  // auth, quota, bad request: not retryable
  fixture_miss,       // scripted backend has no entry for the key
  transient,          // retryable provider/network failure
};

class BackendError : public std::runtime_error {
 public:
  BackendError(BackendErrorKind kind, std::string message)
      : std::runtime_error(std::move(message)), kind_(kind) {}

  BackendErrorKind kind() const { return kind_; }

 private:
  BackendErrorKind kind_;
};

// Base class for text-completion providers. complete() validates the request,
// enforces the concurrency limit, runs the retry policy around the provider
// call, and truncates the result at the first stop marker. Safe to invoke
// concurrently.
class Backend {
 public:
  explicit Backend(BackendConfig config);
  virtual ~Backend();

  std::string complete(const CompletionRequest& request);

  const BackendConfig& config() const { return config_; }

  // Short identifier recorded in provenance, e.g. "scripted:<digest>".
  virtual std::string id() const = 0;

 protected:
  // One provider call. Throws BackendError{transient} for retryable failures.
  virtual std::string complete_raw(const CompletionRequest& request) = 0;

  // Test hook: sleep between retries. Overridable so tests run instantly.
  virtual void backoff_sleep(int ms);

 private:
  class Gate;

  BackendConfig config_;
  std::unique_ptr<Gate> gate_;
};

// Truncates text before the earliest occurrence of any stop marker.
std::string truncate_at_stop(std::string text, const std::vector<std::string>& stop_markers);

// --- scripted backend ---

struct FixtureKey {
  std::string role;
  std::string digest;

  bool operator<(const FixtureKey& o) const {
    return role != o.role ? role < o.role : digest < o.digest;
  }
};

using FixtureMap = std::map<FixtureKey, std::string>;

// Fixture file: JSON array of {role, prompt_digest, response}. An empty or
// whitespace-only file is an empty map.
FixtureMap scripted_fixture_load(const std::string& path);
void scripted_fixture_save(const FixtureMap& fixtures, const std::string& path);

// Deterministic replay backend keyed on (role, prompt digest). Read-only
// after construction.
class ScriptedBackend : public Backend {
 public:
  explicit ScriptedBackend(FixtureMap fixtures, BackendConfig config = scripted_config());

  static std::shared_ptr<ScriptedBackend> from_file(const std::string& path);

  // Binds every role so scripted configs need no provider setup.
  static BackendConfig scripted_config();

  std::string id() const override { return id_; }

  const FixtureMap& fixtures() const { return fixtures_; }

 protected:
  std::string complete_raw(const CompletionRequest& request) override;

 private:
  FixtureMap fixtures_;
  std::string id_;
};

// Wraps another backend and records every (role, digest) -> response pair.
// Used to author fixture packs from a programmable backend.
class RecordingBackend : public Backend {
 public:
  explicit RecordingBackend(std::shared_ptr<Backend> inner);

  std::string id() const override;
  FixtureMap recorded() const;
  void save(const std::string& path) const;

 protected:
  std::string complete_raw(const CompletionRequest& request) override;

 private:
  std::shared_ptr<Backend> inner_;
  mutable std::mutex mutex_;
  FixtureMap recorded_;
};

// Live chat-completion backend speaking the provider-standard HTTP exchange.
// The credential is resolved from the environment variable named in the
// role's binding, never from configuration files.
class HttpBackend : public Backend {
 public:
  explicit HttpBackend(BackendConfig config);

  std::string id() const override;

 protected:
  std::string complete_raw(const CompletionRequest& request) override;
};

// Parses "scripted:<fixture path>" / "live:<config path>" selectors.
std::shared_ptr<Backend> make_backend(const std::string& selector);

// Loads a BackendConfig from a JSON file (live backends).
BackendConfig backend_config_from_json(const json& j);
json backend_config_to_json(const BackendConfig& config);

}  // namespace toolsim::llm
