#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "convrec/transport.hpp"

using namespace convrec;
using json = nlohmann::json;

namespace {

const std::vector<ChatTurn> k_messages = {
    {Role::system, "Rewrite the message."},
    {Role::user, "I loved Dune. Any recommendations along those lines?"},
};

struct TestServer {
    httplib::Server server;
    int port = 0;
    std::thread thread;

    explicit TestServer(httplib::Server::Handler handler) {
        server.Post("/v1/chat/completions", std::move(handler));
        port = server.bind_to_any_port("127.0.0.1");
        REQUIRE(port > 0);
        thread = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }

    ~TestServer() {
        server.stop();
        thread.join();
    }

    std::string url() const { return "http://127.0.0.1:" + std::to_string(port); }
};

std::string completion_payload(const std::string& content) {
    return json{{"choices", json::array({json{{"message", json{{"role", "assistant"}, {"content", content}}}}})}}
        .dump();
}

}  // namespace

TEST_CASE("request fingerprints are stable and sensitive") {
    CompletionParams params;
    const auto a = request_fingerprint(k_messages, params);
    const auto b = request_fingerprint(k_messages, params);
    CHECK(a == b);
    CHECK(a.size() == 64);

    CompletionParams warmer = params;
    warmer.temperature = 0.9;
    CHECK(request_fingerprint(k_messages, warmer) != a);

    auto other = k_messages;
    other[1].content += "!";
    CHECK(request_fingerprint(other, params) != a);
}

TEST_CASE("mock transport echoes the last user message deterministically") {
    MockTransport mock;
    CompletionParams params;
    CHECK(mock.mode() == TransportMode::mock);
    CHECK(mock.complete(k_messages, params) == "I loved Dune. Any recommendations along those lines?");
    CHECK(mock.complete(k_messages, params) == mock.complete(k_messages, params));
    CHECK(mock.complete({{Role::system, "only system"}}, params) == "");
}

TEST_CASE("replay transport serves recorded responses and rejects unknown requests") {
    CompletionParams params;
    ReplayTransport recorder;
    recorder.record(request_fingerprint(k_messages, params), "Dune was great, what else is like it?");
    const std::string cassette = recorder.to_jsonl();

    auto replay = ReplayTransport::from_jsonl(cassette);
    CHECK(replay.mode() == TransportMode::replay);
    CHECK(replay.complete(k_messages, params) == "Dune was great, what else is like it?");

    auto other = k_messages;
    other[1].content = "something unrecorded";
    try {
        replay.complete(other, params);
        FAIL("expected throw");
    } catch (const TransportError& e) {
        CHECK(e.code == TransportError::Code::missing_recording);
    }

    CHECK_THROWS_AS(ReplayTransport::from_jsonl("not json\n"), TransportError);
}

TEST_CASE("http transport reads choices[0].message.content") {
    TestServer server([](const httplib::Request& req, httplib::Response& res) {
        const json body = json::parse(req.body);
        CHECK(body.at("model") == "llama-3.1-405b");
        CHECK(body.at("messages").size() == 2);
        CHECK(body.at("messages")[0].at("role") == "system");
        res.set_content(completion_payload("rewritten: " + body.at("messages")[1].at("content").get<std::string>()),
                        "application/json");
    });
    HttpTransport transport(server.url());
    CompletionParams params;
    CHECK(transport.mode() == TransportMode::live);
    CHECK(transport.complete(k_messages, params) ==
          "rewritten: I loved Dune. Any recommendations along those lines?");
}

TEST_CASE("http transport sends the bearer token from LLM_API_KEY") {
    setenv("LLM_API_KEY", "secret-key", 1);
    TestServer server([](const httplib::Request& req, httplib::Response& res) {
        CHECK(req.get_header_value("Authorization") == "Bearer secret-key");
        res.set_content(completion_payload("ok"), "application/json");
    });
    HttpTransport transport(server.url());
    CompletionParams params;
    CHECK(transport.complete(k_messages, params) == "ok");
    unsetenv("LLM_API_KEY");
}

TEST_CASE("http transport retries server errors then succeeds") {
    std::atomic<int> hits{0};
    TestServer server([&](const httplib::Request&, httplib::Response& res) {
        if (++hits < 3) {
            res.status = 500;
            return;
        }
        res.set_content(completion_payload("third time lucky"), "application/json");
    });
    HttpTransport transport(server.url());
    transport.set_backoff_ms(1);
    CompletionParams params;
    CHECK(transport.complete(k_messages, params) == "third time lucky");
    CHECK(hits == 3);
}

TEST_CASE("http transport gives up after three attempts") {
    std::atomic<int> hits{0};
    TestServer server([&](const httplib::Request&, httplib::Response& res) {
        ++hits;
        res.status = 503;
    });
    HttpTransport transport(server.url());
    transport.set_backoff_ms(1);
    CompletionParams params;
    try {
        transport.complete(k_messages, params);
        FAIL("expected throw");
    } catch (const TransportError& e) {
        CHECK(e.code == TransportError::Code::request_failed);
    }
    CHECK(hits == k_transport_max_attempts);
}

TEST_CASE("http transport does not retry hard client errors") {
    std::atomic<int> hits{0};
    TestServer server([&](const httplib::Request&, httplib::Response& res) {
        ++hits;
        res.status = 401;
        res.set_content("{\"error\": \"bad key\"}", "application/json");
    });
    HttpTransport transport(server.url());
    transport.set_backoff_ms(1);
    CompletionParams params;
    CHECK_THROWS_AS(transport.complete(k_messages, params), TransportError);
    CHECK(hits == 1);
}

TEST_CASE("malformed completion payloads are a bad_response") {
    TestServer server([](const httplib::Request&, httplib::Response& res) {
        res.set_content("{\"choices\": []}", "application/json");
    });
    HttpTransport transport(server.url());
    CompletionParams params;
    try {
        transport.complete(k_messages, params);
        FAIL("expected throw");
    } catch (const TransportError& e) {
        CHECK(e.code == TransportError::Code::bad_response);
    }
}
