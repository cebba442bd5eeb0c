#include "convrec/promptkit.hpp"

#include <algorithm>
#include <cstdio>

#include <nlohmann/json.hpp>

namespace convrec {

namespace {

using json = nlohmann::json;

constexpr std::string_view k_begin = "<|begin_of_text|>";
constexpr std::string_view k_start_header = "<|start_header_id|>";
constexpr std::string_view k_end_header = "<|end_header_id|>";
constexpr std::string_view k_eot = "<|eot_id|>";
constexpr std::string_view k_end = "<|end_of_text|>";

void check_content(const std::string& content) {
    for (std::string_view token : k_reserved_tokens) {
        const size_t at = content.find(token);
        if (at != std::string::npos) {
            throw PromptError(PromptError::Code::reserved_token_in_content,
                              "content contains reserved token " + std::string(token), at);
        }
    }
}

void check_order(const std::vector<ChatTurn>& transcript) {
    size_t i = 0;
    if (i < transcript.size() && transcript[i].role == Role::system) ++i;
    Role expected = Role::user;
    for (; i < transcript.size(); ++i) {
        if (transcript[i].role != expected) {
            throw PromptError(PromptError::Code::bad_turn_order,
                              "turn " + std::to_string(i) + " should be " + std::string(role_name(expected)) +
                                  ", got " + std::string(role_name(transcript[i].role)));
        }
        expected = expected == Role::user ? Role::assistant : Role::user;
    }
}

std::string format_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

}  // namespace

std::string_view role_name(Role r) {
    switch (r) {
        case Role::system: return "system";
        case Role::user: return "user";
        case Role::assistant: return "assistant";
    }
    return "?";
}

std::string_view intent_name(Intent i) {
    return i == Intent::rec ? "rec" : "non_rec";
}

std::string render_llama(const std::vector<ChatTurn>& transcript) {
    check_order(transcript);
    std::string out{k_begin};
    for (const auto& turn : transcript) {
        check_content(turn.content);
        out += k_start_header;
        out += role_name(turn.role);
        out += k_end_header;
        out += "\n";
        out += turn.content;
        out += k_eot;
        out += "\n";
    }
    out += k_end;
    return out;
}

std::vector<ChatTurn> parse_llama(std::string_view rendered) {
    size_t pos = 0;
    auto fail = [&](const std::string& why) -> PromptError {
        return PromptError(PromptError::Code::malformed_frame, why + " at byte " + std::to_string(pos), pos);
    };
    auto expect = [&](std::string_view token, const std::string& what) {
        if (rendered.compare(pos, token.size(), token) != 0) {
            throw fail("expected " + what);
        }
        pos += token.size();
    };

    expect(k_begin, "<|begin_of_text|>");
    std::vector<ChatTurn> turns;
    while (true) {
        if (rendered.compare(pos, k_end.size(), k_end) == 0) {
            pos += k_end.size();
            break;
        }
        expect(k_start_header, "<|start_header_id|> or <|end_of_text|>");
        const size_t role_end = rendered.find(k_end_header, pos);
        if (role_end == std::string_view::npos) throw fail("unterminated header");
        const std::string_view role_text = rendered.substr(pos, role_end - pos);
        Role role;
        if (role_text == "system") {
            role = Role::system;
        } else if (role_text == "user") {
            role = Role::user;
        } else if (role_text == "assistant") {
            role = Role::assistant;
        } else {
            throw fail("unknown role \"" + std::string(role_text) + "\"");
        }
        pos = role_end + k_end_header.size();
        if (pos >= rendered.size() || rendered[pos] != '\n') throw fail("missing newline after header");
        ++pos;
        const size_t content_end = rendered.find(k_eot, pos);
        if (content_end == std::string_view::npos) throw fail("unterminated turn content");
        ChatTurn turn{role, std::string(rendered.substr(pos, content_end - pos))};
        try {
            check_content(turn.content);
        } catch (const PromptError& e) {
            pos += e.position;
            throw fail("stray reserved token in content");
        }
        pos = content_end + k_eot.size();
        if (pos >= rendered.size() || rendered[pos] != '\n') throw fail("missing newline after <|eot_id|>");
        ++pos;
        turns.push_back(std::move(turn));
    }
    if (pos != rendered.size()) throw fail("trailing bytes after <|end_of_text|>");
    return turns;
}

const std::string k_intent_system_prompt =
    "You will receive User prompt with questions about Movies. Your task is to classify the intent "
    "among items in list [\"rec\", \"non_rec\"].Where 'rec' means the prompt is asking for "
    "recommendations and 'non_rec' means the prompt is asking about non-recommendations general "
    "information about movie related stuff for example:Who directed 'Forrest Gump' and what other "
    "films has he made?.Respond in json for example: {\"intent\": \"non_rec\"}\n";

std::string entity_system_prompt(const std::vector<std::string>& classes) {
    std::string list;
    for (const auto& c : classes) {
        if (!list.empty()) list += ", ";
        list += "\"" + c + "\"";
    }
    return "You will receive a User prompt about Movies. Extract the entities mentioned in the prompt "
           "for the classes [" + list + "]. Respond with a json object mapping each class to the list "
           "of extracted values, for example: {\"title\": [\"Forrest Gump\"]}. Use only the listed "
           "classes and copy entity values verbatim from the prompt.";
}

bool is_entity_class(std::string_view name) {
    return std::find(k_entity_classes.begin(), k_entity_classes.end(), name) != k_entity_classes.end();
}

TrainingRecord build_intent_record(std::string_view prompt, Intent label) {
    TrainingRecord rec;
    rec.task = TrainingRecord::Task::intent;
    rec.transcript = {
        {Role::system, k_intent_system_prompt},
        {Role::user, std::string(prompt)},
        // Formatted by hand: the answer layout (space after the colon) is part
        // of the trained output format.
        {Role::assistant, std::string("{\"intent\": \"") + std::string(intent_name(label)) + "\"}"},
    };
    rec.rendered = render_llama(rec.transcript);
    return rec;
}

TrainingRecord build_entity_record(std::string_view prompt,
                                   const std::map<std::string, std::vector<std::string>>& entities) {
    std::vector<std::string> classes;
    for (const auto& [cls, values] : entities) {
        (void)values;
        if (!is_entity_class(cls)) {
            throw PromptError(PromptError::Code::unknown_entity_class, "unknown entity class \"" + cls + "\"");
        }
        classes.push_back(cls);
    }
    if (classes.empty()) {
        classes.assign(k_entity_classes.begin(), k_entity_classes.end());
    }

    json answer = json::object();
    for (const auto& [cls, values] : entities) {
        answer[cls] = values;
    }

    TrainingRecord rec;
    rec.task = TrainingRecord::Task::entity;
    rec.transcript = {
        {Role::system, entity_system_prompt(classes)},
        {Role::user, std::string(prompt)},
        {Role::assistant, answer.dump()},
    };
    rec.rendered = render_llama(rec.transcript);
    return rec;
}

std::string emit_finetune_config(const FinetuneConfig& cfg) {
    if (cfg.target_layers.empty()) {
        throw PromptError(PromptError::Code::invalid_config, "target_layers must not be empty");
    }
    std::vector<std::string> seen;
    for (const auto& layer : cfg.target_layers) {
        if (std::find(k_legal_target_layers.begin(), k_legal_target_layers.end(), layer) ==
            k_legal_target_layers.end()) {
            std::string legal;
            for (auto l : k_legal_target_layers) {
                if (!legal.empty()) legal += ", ";
                legal += l;
            }
            throw PromptError(PromptError::Code::invalid_layer_name,
                              "invalid target layer \"" + layer + "\"; legal layers: " + legal);
        }
        if (std::find(seen.begin(), seen.end(), layer) != seen.end()) {
            throw PromptError(PromptError::Code::invalid_config, "duplicate target layer \"" + layer + "\"");
        }
        seen.push_back(layer);
    }
    if (cfg.rank <= 0) throw PromptError(PromptError::Code::invalid_config, "rank must be positive");
    if (cfg.alpha <= 0) throw PromptError(PromptError::Code::invalid_config, "alpha must be positive");
    if (cfg.dropout < 0 || cfg.dropout >= 1) {
        throw PromptError(PromptError::Code::invalid_config, "dropout must be in [0, 1)");
    }

    std::string layers;
    for (const auto& layer : cfg.target_layers) {
        if (!layers.empty()) layers += ", ";
        layers += layer;
    }
    std::string out;
    out += "base_model = " + cfg.base_model_id + "\n";
    out += "target_layers = " + layers + "\n";
    out += "rank = " + std::to_string(cfg.rank) + "\n";
    out += "alpha = " + format_number(cfg.alpha) + "\n";
    out += "dropout = " + format_number(cfg.dropout) + "\n";
    out += std::string("quantization = ") +
           (cfg.quantization == FinetuneConfig::Quantization::four_bit ? "four_bit" : "none") + "\n";
    return out;
}

}  // namespace convrec
