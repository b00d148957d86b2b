#include <doctest.h>

#include <httplib.h>

#include <atomic>
#include <cstdlib>
#include <thread>

#include "test_helpers.hpp"

using namespace toolsim;
using namespace toolsim::test;

TEST_SUITE("backend") {

TEST_CASE("fixture files load into keyed maps") {
  const auto dir = temp_dir("fixtures");

  SUBCASE("empty file yields an empty map") {
    write_file((dir / "empty.json").string(), "");
    CHECK(llm::scripted_fixture_load((dir / "empty.json").string()).empty());
  }

  SUBCASE("three entries yield a map of size three") {
    json doc = json::array();
    for (int i = 0; i < 3; ++i) {
      doc.push_back({{"role", "judge"}, {"prompt_digest", "d" + std::to_string(i)},
                     {"response", "r"}});
    }
    write_file((dir / "three.json").string(), doc.dump());
    CHECK(llm::scripted_fixture_load((dir / "three.json").string()).size() == 3);
  }

  SUBCASE("malformed files are rejected") {
    write_file((dir / "bad.json").string(), "{\"not\": \"an array\"}");
    CHECK_THROWS(llm::scripted_fixture_load((dir / "bad.json").string()));
    write_file((dir / "bad2.json").string(), "[{\"role\": \"judge\"}]");
    CHECK_THROWS(llm::scripted_fixture_load((dir / "bad2.json").string()));
  }
}

TEST_CASE("scripted backend replays by digest and misses loudly") {
  llm::FixtureMap fixtures;
  add_fixture(fixtures, llm::Role::judge, "what is 2+2?", "4");
  llm::ScriptedBackend backend(fixtures);

  llm::CompletionRequest request;
  request.role = llm::Role::judge;
  request.prompt = "what is 2+2?";

  CHECK(backend.complete(request) == "4");
  CHECK(backend.complete(request) == "4");  // bitwise identical replay

  request.prompt = "what is 3+3?";
  try {
    backend.complete(request);
    FAIL("expected fixture miss");
  } catch (const llm::BackendError& e) {
    CHECK(e.kind() == llm::BackendErrorKind::fixture_miss);
    CHECK(std::string(e.what()).find(prompt_digest("judge", "what is 3+3?")) !=
          std::string::npos);
  }
}

TEST_CASE("stop markers truncate before the first occurrence") {
  CHECK(llm::truncate_at_stop("Thought: x\nObservation: y", {"Observation:"}) == "Thought: x\n");
  CHECK(llm::truncate_at_stop("abc", {"Observation:"}) == "abc");
  CHECK(llm::truncate_at_stop("a STOP b HALT c", {"HALT", "STOP"}) == "a ");

  FnBackend backend([](const llm::CompletionRequest&) {
    return std::string("Thought: x\nObservation: y");
  });
  llm::CompletionRequest request;
  request.role = llm::Role::assistant_agent;
  request.prompt = "p";
  request.stop_markers = {"Observation:"};
  CHECK(backend.complete(request) == "Thought: x\n");
}

TEST_CASE("request validation rejects bad inputs before any provider call") {
  FnBackend backend([](const llm::CompletionRequest&) { return std::string("ok"); });
  llm::CompletionRequest request;
  request.role = llm::Role::judge;

  request.prompt = "";
  CHECK_THROWS_AS(backend.complete(request), llm::BackendError);
  request.prompt = "p";
  request.stop_markers = {""};
  CHECK_THROWS_AS(backend.complete(request), llm::BackendError);
  request.stop_markers = {};
  request.sampling.temperature = 3.0;
  CHECK_THROWS_AS(backend.complete(request), llm::BackendError);
  CHECK(backend.calls() == 0);
}

TEST_CASE("unbound roles are a distinct error") {
  llm::BackendConfig config;  // no bindings at all
  config.bindings[llm::Role::judge] = {"x", "y", ""};
  FnBackend backend([](const llm::CompletionRequest&) { return std::string("ok"); },
                    config);

  llm::CompletionRequest request;
  request.role = llm::Role::user_agent;
  request.prompt = "p";
  try {
    backend.complete(request);
    FAIL("expected unbound role");
  } catch (const llm::BackendError& e) {
    CHECK(e.kind() == llm::BackendErrorKind::unbound_role);
  }
}

TEST_CASE("two transient failures succeed on the third attempt") {
  std::atomic<int> attempts{0};
  auto config = llm::ScriptedBackend::scripted_config();
  config.retry.max_attempts = 3;
  config.retry.backoff_base_ms = 1;
  FnBackend backend(
      [&](const llm::CompletionRequest&) -> std::string {
        if (++attempts <= 2) {
          throw llm::BackendError(llm::BackendErrorKind::transient, "injected");
        }
        return "recovered";
      },
      config);

  llm::CompletionRequest request;
  request.role = llm::Role::judge;
  request.prompt = "p";
  CHECK(backend.complete(request) == "recovered");
  CHECK(attempts == 3);
}

TEST_CASE("retry count never exceeds max_attempts") {
  auto config = llm::ScriptedBackend::scripted_config();
  config.retry.max_attempts = 4;
  config.retry.backoff_base_ms = 1;
  FnBackend backend(
      [](const llm::CompletionRequest&) -> std::string {
        throw llm::BackendError(llm::BackendErrorKind::transient, "always down");
      },
      config);

  llm::CompletionRequest request;
  request.role = llm::Role::judge;
  request.prompt = "p";
  try {
    backend.complete(request);
    FAIL("expected exhaustion");
  } catch (const llm::BackendError& e) {
    CHECK(e.kind() == llm::BackendErrorKind::retries_exhausted);
  }
  CHECK(backend.calls() == 4);
}

TEST_CASE("provider rejections are not retried") {
  auto config = llm::ScriptedBackend::scripted_config();
  config.retry.max_attempts = 3;
  FnBackend backend(
      [](const llm::CompletionRequest&) -> std::string {
        throw llm::BackendError(llm::BackendErrorKind::provider_rejected, "bad credentials");
      },
      config);

  llm::CompletionRequest request;
  request.role = llm::Role::judge;
  request.prompt = "p";
  CHECK_THROWS_AS(backend.complete(request), llm::BackendError);
  CHECK(backend.calls() == 1);
}

TEST_CASE("no more than concurrency_limit requests run at once") {
  auto config = llm::ScriptedBackend::scripted_config();
  config.concurrency_limit = 3;

  std::atomic<int> active{0};
  std::atomic<int> peak{0};
  FnBackend backend(
      [&](const llm::CompletionRequest&) {
        const int now = ++active;
        int expected = peak.load();
        while (now > expected && !peak.compare_exchange_weak(expected, now)) {
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
        --active;
        return std::string("ok");
      },
      config);

  std::vector<std::thread> threads;
  for (int i = 0; i < 12; ++i) {
    threads.emplace_back([&] {
      llm::CompletionRequest request;
      request.role = llm::Role::judge;
      request.prompt = "p";
      backend.complete(request);
    });
  }
  for (auto& t : threads) t.join();

  CHECK(backend.calls() == 12);
  CHECK(peak.load() <= 3);
}

TEST_CASE("recording backend captures replayable fixtures") {
  auto inner = std::make_shared<FnBackend>(
      [](const llm::CompletionRequest& r) { return "echo:" + r.prompt; });
  llm::RecordingBackend recorder(inner);

  llm::CompletionRequest request;
  request.role = llm::Role::doc_generator;
  request.prompt = "alpha";
  CHECK(recorder.complete(request) == "echo:alpha");

  llm::ScriptedBackend replay(recorder.recorded());
  CHECK(replay.complete(request) == "echo:alpha");
}

TEST_CASE("backend selector syntax") {
  CHECK_THROWS(llm::make_backend("nonsense"));
  CHECK_THROWS(llm::make_backend("ftp:whatever"));

  const auto dir = temp_dir("selector");
  write_file((dir / "fx.json").string(), "[]");
  auto backend = llm::make_backend("scripted:" + (dir / "fx.json").string());
  CHECK(backend->id().rfind("scripted:", 0) == 0);
}

TEST_CASE("the live backend speaks the chat-completion exchange") {
  httplib::Server server;
  std::atomic<int> hits{0};
  std::string seen_auth, seen_model, seen_prompt;
  server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    const int n = ++hits;
    seen_auth = req.get_header_value("Authorization");
    const json body = json::parse(req.body);
    seen_model = body.at("model");
    seen_prompt = body.at("messages")[0].at("content");
    if (n <= 2) {
      res.status = 500;  // two injected transient failures
      res.set_content("{\"error\": \"flaky\"}", "application/json");
      return;
    }
    const json reply = {
        {"choices", json::array({{{"message", {{"role", "assistant"},
                                               {"content", "Thought: ok\nObservation: cut"}}}}})}};
    res.set_content(reply.dump(), "application/json");
  });

  const int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread server_thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  setenv("TOOLSIM_TEST_CREDENTIAL", "secret-token", 1);

  llm::BackendConfig config;
  config.bindings[llm::Role::assistant_agent] = {"http://127.0.0.1:" + std::to_string(port),
                                                 "test-model", "TOOLSIM_TEST_CREDENTIAL"};
  config.retry.max_attempts = 3;
  config.retry.backoff_base_ms = 1;

  llm::HttpBackend backend(config);
  llm::CompletionRequest request;
  request.role = llm::Role::assistant_agent;
  request.prompt = "hello over the wire";
  request.stop_markers = {"Observation:"};

  SUBCASE("success on the third attempt after two 500s") {
    const std::string text = backend.complete(request);
    CHECK(text == "Thought: ok\n");  // stop marker applied to the wire text
    CHECK(hits == 3);
    CHECK(seen_auth == "Bearer secret-token");
    CHECK(seen_model == "test-model");
    CHECK(seen_prompt == "hello over the wire");
  }

  SUBCASE("a 401 is a provider rejection, not a retry") {
    server.Post("/v1/auth-fail", [](const httplib::Request&, httplib::Response&) {});
    llm::BackendConfig bad = config;
    bad.bindings[llm::Role::assistant_agent].credential_env = "TOOLSIM_TEST_MISSING_VAR";
    unsetenv("TOOLSIM_TEST_MISSING_VAR");
    llm::HttpBackend rejected(bad);
    try {
      rejected.complete(request);
      FAIL("expected rejection");
    } catch (const llm::BackendError& e) {
      CHECK(e.kind() == llm::BackendErrorKind::provider_rejected);
    }
  }

  server.stop();
  server_thread.join();
}

TEST_CASE("an unreachable live endpoint exhausts retries") {
  llm::BackendConfig config;
  config.bindings[llm::Role::judge] = {"http://127.0.0.1:9", "m", ""};
  config.retry.max_attempts = 2;
  config.retry.backoff_base_ms = 1;
  llm::HttpBackend backend(config);

  llm::CompletionRequest request;
  request.role = llm::Role::judge;
  request.prompt = "p";
  try {
    backend.complete(request);
    FAIL("expected exhaustion");
  } catch (const llm::BackendError& e) {
    CHECK(e.kind() == llm::BackendErrorKind::retries_exhausted);
  }
}

TEST_CASE("default sampling is diverse for drafting, deterministic elsewhere") {
  CHECK(llm::default_sampling(llm::Role::user_agent).temperature == doctest::Approx(0.7));
  CHECK(llm::default_sampling(llm::Role::assistant_agent).temperature == 0.0);
  CHECK(llm::default_sampling(llm::Role::executor_agent).temperature == 0.0);
  CHECK(llm::default_sampling(llm::Role::judge).temperature == 0.0);
}

}  // TEST_SUITE
