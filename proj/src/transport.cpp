#include "convrec/transport.hpp"

#include <chrono>
#include <thread>

#include <httplib.h>

#include "convrec/sha256.hpp"
#include "convrec/text.hpp"

namespace convrec {

namespace {

using json = nlohmann::json;

}  // namespace

json chat_request_body(const std::vector<ChatTurn>& messages, const CompletionParams& params) {
    json msgs = json::array();
    for (const auto& m : messages) {
        msgs.push_back({{"role", std::string(role_name(m.role))}, {"content", m.content}});
    }
    return json{
        {"model", params.model},
        {"messages", std::move(msgs)},
        {"temperature", params.temperature},
        {"max_tokens", params.max_tokens},
    };
}

std::string request_fingerprint(const std::vector<ChatTurn>& messages, const CompletionParams& params) {
    return sha256_hex(chat_request_body(messages, params).dump());
}

std::string MockTransport::complete(const std::vector<ChatTurn>& messages, const CompletionParams& params) {
    (void)params;
    for (auto it = messages.rbegin(); it != messages.rend(); ++it) {
        if (it->role == Role::user) return it->content;
    }
    return "";
}

ReplayTransport ReplayTransport::from_jsonl(std::string_view text_in) {
    ReplayTransport transport;
    size_t pos = 0;
    size_t line_no = 0;
    while (pos < text_in.size()) {
        size_t eol = text_in.find('\n', pos);
        if (eol == std::string_view::npos) eol = text_in.size();
        const std::string line = text::trim(text_in.substr(pos, eol - pos));
        pos = eol + 1;
        ++line_no;
        if (line.empty()) continue;
        try {
            const json entry = json::parse(line);
            transport.responses_[entry.at("request_sha256").get<std::string>()] =
                entry.at("response_text").get<std::string>();
        } catch (const json::exception& ex) {
            throw TransportError(TransportError::Code::bad_response,
                                 "cassette line " + std::to_string(line_no) + ": " + ex.what());
        }
    }
    return transport;
}

void ReplayTransport::record(std::string fingerprint, std::string response) {
    responses_[std::move(fingerprint)] = std::move(response);
}

std::string ReplayTransport::to_jsonl() const {
    std::string out;
    for (const auto& [fingerprint, response] : responses_) {
        out += json{{"request_sha256", fingerprint}, {"response_text", response}}.dump();
        out += "\n";
    }
    return out;
}

std::string ReplayTransport::complete(const std::vector<ChatTurn>& messages, const CompletionParams& params) {
    const std::string fingerprint = request_fingerprint(messages, params);
    auto it = responses_.find(fingerprint);
    if (it == responses_.end()) {
        throw TransportError(TransportError::Code::missing_recording,
                             "no recorded response for request " + fingerprint);
    }
    return it->second;
}

HttpTransport::HttpTransport(std::string base_url) : base_url_(std::move(base_url)) {}

std::string HttpTransport::complete(const std::vector<ChatTurn>& messages, const CompletionParams& params) {
    const std::string body = chat_request_body(messages, params).dump();
    httplib::Headers headers;
    if (const char* key = std::getenv("LLM_API_KEY")) {
        headers.emplace("Authorization", std::string("Bearer ") + key);
    }

    std::string last_error;
    for (int attempt = 0; attempt < k_transport_max_attempts; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms_ << (attempt - 1)));
        }
        httplib::Client client(base_url_);
        client.set_connection_timeout(10);
        client.set_read_timeout(120);
        auto res = client.Post("/v1/chat/completions", headers, body, "application/json");
        if (!res) {
            last_error = "no response from " + base_url_;
            continue;
        }
        if (res->status != 200) {
            last_error = "HTTP " + std::to_string(res->status);
            // Client errors other than rate limiting will not improve on retry.
            if (res->status >= 400 && res->status < 500 && res->status != 429 && res->status != 408) {
                throw TransportError(TransportError::Code::request_failed,
                                     last_error + " from " + base_url_ + ": " + res->body);
            }
            continue;
        }
        try {
            const json payload = json::parse(res->body);
            return payload.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const json::exception& ex) {
            throw TransportError(TransportError::Code::bad_response,
                                 std::string("unexpected chat-completions payload: ") + ex.what());
        }
    }
    throw TransportError(TransportError::Code::request_failed,
                         "request failed after " + std::to_string(k_transport_max_attempts) +
                             " attempts: " + last_error);
}

}  // namespace convrec
