#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "convrec/promptkit.hpp"

namespace convrec {

enum class TransportMode { live, mock, replay };

struct CompletionParams {
    std::string model = "llama-3.1-405b";
    double temperature = 0.7;
    int max_tokens = 256;
};

struct TransportError : std::runtime_error {
    enum class Code { request_failed, bad_response, missing_recording };
    Code code;
    TransportError(Code c, const std::string& msg) : std::runtime_error(msg), code(c) {}
};

// Canonical chat-completions request body (sorted keys); its SHA-256 is the
// cassette key, so live and replay agree on what identifies a request.
nlohmann::json chat_request_body(const std::vector<ChatTurn>& messages, const CompletionParams& params);
std::string request_fingerprint(const std::vector<ChatTurn>& messages, const CompletionParams& params);

class Transport {
public:
    virtual ~Transport() = default;
    virtual TransportMode mode() const = 0;
    virtual std::string complete(const std::vector<ChatTurn>& messages, const CompletionParams& params) = 0;
};

// Offline stand-in: answers with the last user message. Deterministic in the
// request bytes, which is all the generation pipeline needs to be replayable.
class MockTransport final : public Transport {
public:
    TransportMode mode() const override { return TransportMode::mock; }
    std::string complete(const std::vector<ChatTurn>& messages, const CompletionParams& params) override;
};

// Serves recorded responses keyed by request fingerprint. Cassettes are
// JSON-lines of {"request_sha256": ..., "response_text": ...}.
class ReplayTransport final : public Transport {
public:
    static ReplayTransport from_jsonl(std::string_view text);

    void record(std::string fingerprint, std::string response);
    std::string to_jsonl() const;

    TransportMode mode() const override { return TransportMode::replay; }
    std::string complete(const std::vector<ChatTurn>& messages, const CompletionParams& params) override;

private:
    std::map<std::string, std::string> responses_;
};

// POSTs to {base_url}/v1/chat/completions with a bearer token from
// LLM_API_KEY; reads choices[0].message.content. Retries up to 3 attempts
// with exponential backoff starting at 500 ms.
class HttpTransport final : public Transport {
public:
    explicit HttpTransport(std::string base_url);

    TransportMode mode() const override { return TransportMode::live; }
    std::string complete(const std::vector<ChatTurn>& messages, const CompletionParams& params) override;

    // Test hook: shrink the backoff so retry behavior stays testable.
    void set_backoff_ms(int initial_ms) { backoff_ms_ = initial_ms; }

private:
    std::string base_url_;
    int backoff_ms_ = 500;
};

inline constexpr int k_transport_max_attempts = 3;

}  // namespace convrec
