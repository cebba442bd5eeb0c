#pragma once

#include <array>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace convrec {

enum class Role { system, user, assistant };
enum class Intent { rec, non_rec };

std::string_view role_name(Role r);
std::string_view intent_name(Intent i);

struct ChatTurn {
    Role role;
    std::string content;

    bool operator==(const ChatTurn&) const = default;
};

struct PromptError : std::runtime_error {
    enum class Code {
        reserved_token_in_content,
        bad_turn_order,
        malformed_frame,
        unknown_entity_class,
        invalid_layer_name,
        invalid_config,
    };
    Code code;
    size_t position;
    PromptError(Code c, const std::string& msg, size_t pos = 0)
        : std::runtime_error(msg), code(c), position(pos) {}
};

inline constexpr std::array<std::string_view, 5> k_reserved_tokens = {
    "<|begin_of_text|>", "<|start_header_id|>", "<|end_header_id|>", "<|eot_id|>", "<|end_of_text|>"};

// Serialize a transcript into the Llama training-string layout:
// `<|begin_of_text|>` once, each turn as
// `<|start_header_id|>{role}<|end_header_id|>\n{content}<|eot_id|>\n`,
// then a final `<|end_of_text|>`. Turns must be an optional system turn
// followed by user/assistant alternating from user; contents must not contain
// reserved tokens.
std::string render_llama(const std::vector<ChatTurn>& transcript);

// Exact inverse of render_llama on its image; anything else (stray reserved
// tokens, missing frame pieces, trailing bytes) is MalformedFrame.
std::vector<ChatTurn> parse_llama(std::string_view rendered);

// System instruction for the intent-routing task. The trailing newline is
// part of the instruction text: the reference training strings carry it
// inside the system segment.
extern const std::string k_intent_system_prompt;

// System instruction prefix for the entity-extraction task; the class list is
// appended per record.
std::string entity_system_prompt(const std::vector<std::string>& classes);

inline constexpr std::array<std::string_view, 6> k_entity_classes = {
    "actor", "director", "genre", "plot", "theme", "title"};

bool is_entity_class(std::string_view name);

struct TrainingRecord {
    enum class Task { intent, entity };
    Task task;
    std::vector<ChatTurn> transcript;  // system, user, assistant
    std::string rendered;
};

// Intent task record: fixed system instruction, the prompt as the user turn,
// and `{"intent": "<label>"}` as the assistant answer.
TrainingRecord build_intent_record(std::string_view prompt, Intent label);

// Entity task record: system instruction naming the present classes, strict
// JSON object answer with one array per class, keys sorted. Classes outside
// k_entity_classes are rejected.
TrainingRecord build_entity_record(std::string_view prompt,
                                   const std::map<std::string, std::vector<std::string>>& entities);

inline constexpr std::array<std::string_view, 7> k_legal_target_layers = {
    "q_proj", "k_proj", "v_proj", "o_proj", "up_proj", "down_proj", "gate_proj"};

struct FinetuneConfig {
    std::string base_model_id = "llama-3.2-3b";
    std::vector<std::string> target_layers = {"q_proj", "v_proj", "o_proj"};
    int rank = 16;
    double alpha = 32.0;
    double dropout = 0.05;
    enum class Quantization { none, four_bit };
    Quantization quantization = Quantization::four_bit;
};

// Key/value config document with a stable field order. Layers are emitted in
// the given order; any name outside the legal seven, duplicates, or an empty
// list is rejected.
std::string emit_finetune_config(const FinetuneConfig& cfg);

}  // namespace convrec
