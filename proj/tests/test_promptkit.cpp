#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "convrec/promptkit.hpp"
#include "convrec/rng.hpp"

using namespace convrec;
using json = nlohmann::json;

namespace {

// Frozen byte-for-byte: the intent-task training string for the
// "Game of Thrones" production-company question. Kept as an independent
// literal here on purpose; nothing in the library is allowed to drift it.
const std::string k_golden_intent_string =
    "<|begin_of_text|><|start_header_id|>system<|end_header_id|>\n"
    "You will receive User prompt with questions about Movies. Your task is to classify the intent "
    "among items in list [\"rec\", \"non_rec\"].Where 'rec' means the prompt is asking for "
    "recommendations and 'non_rec' means the prompt is asking about non-recommendations general "
    "information about movie related stuff for example:Who directed 'Forrest Gump' and what other "
    "films has he made?.Respond in json for example: {\"intent\": \"non_rec\"}\n"
    "<|eot_id|>\n"
    "<|start_header_id|>user<|end_header_id|>\n"
    "Can you provide information on the production company behind 'Game of Thrones'?<|eot_id|>\n"
    "<|start_header_id|>assistant<|end_header_id|>\n"
    "{\"intent\": \"non_rec\"}<|eot_id|>\n"
    "<|end_of_text|>";

const std::string k_got_prompt =
    "Can you provide information on the production company behind 'Game of Thrones'?";

std::vector<ChatTurn> golden_transcript() {
    return {
        {Role::system, k_intent_system_prompt},
        {Role::user, k_got_prompt},
        {Role::assistant, "{\"intent\": \"non_rec\"}"},
    };
}

}  // namespace

TEST_CASE("render_llama reproduces the golden intent training string byte-for-byte") {
    CHECK(render_llama(golden_transcript()) == k_golden_intent_string);
}

#ifdef CONVREC_GOLDEN_DIR
TEST_CASE("the rendered string matches the golden file exactly") {
    std::ifstream in(std::string(CONVREC_GOLDEN_DIR) + "/intent_training_example.txt", std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    CHECK(render_llama(golden_transcript()) == buf.str());
    CHECK(buf.str() == k_golden_intent_string);
}
#endif

TEST_CASE("parse_llama recovers the golden transcript exactly") {
    const auto turns = parse_llama(k_golden_intent_string);
    REQUIRE(turns.size() == 3);
    CHECK(turns == golden_transcript());
    CHECK(turns[1].content == k_got_prompt);
}

TEST_CASE("empty transcript renders the degenerate frame") {
    CHECK(render_llama({}) == "<|begin_of_text|><|end_of_text|>");
    CHECK(parse_llama("<|begin_of_text|><|end_of_text|>").empty());
}

TEST_CASE("malformed frames are rejected with a position") {
    auto expect_malformed = [](const std::string& s) {
        try {
            parse_llama(s);
            FAIL_CHECK("expected MalformedFrame for: " << s);
        } catch (const PromptError& e) {
            CHECK(e.code == PromptError::Code::malformed_frame);
        }
    };
    expect_malformed("");
    expect_malformed("<|begin_of_text|>");
    expect_malformed(k_golden_intent_string.substr(0, k_golden_intent_string.size() - 5));
    expect_malformed(k_golden_intent_string + "tail");
    expect_malformed("<|begin_of_text|><|start_header_id|>robot<|end_header_id|>\nhi<|eot_id|>\n<|end_of_text|>");
    expect_malformed("<|begin_of_text|><|start_header_id|>user<|end_header_id|>hi<|eot_id|>\n<|end_of_text|>");
    expect_malformed("no frame at all");
}

TEST_CASE("reserved tokens in content are rejected on render") {
    try {
        render_llama({{Role::user, "sneaky <|eot_id|> body"}});
        FAIL("expected throw");
    } catch (const PromptError& e) {
        CHECK(e.code == PromptError::Code::reserved_token_in_content);
    }
}

TEST_CASE("turn order is validated") {
    auto expect_bad_order = [](std::vector<ChatTurn> turns) {
        try {
            render_llama(turns);
            FAIL_CHECK("expected BadTurnOrder");
        } catch (const PromptError& e) {
            CHECK(e.code == PromptError::Code::bad_turn_order);
        }
    };
    expect_bad_order({{Role::assistant, "hi"}});
    expect_bad_order({{Role::user, "a"}, {Role::user, "b"}});
    expect_bad_order({{Role::user, "a"}, {Role::system, "late system"}});
    CHECK_NOTHROW(render_llama({{Role::system, "s"}, {Role::user, "u"}}));
    CHECK_NOTHROW(render_llama({{Role::user, "u"}, {Role::assistant, "a"}, {Role::user, "u2"}}));
}

TEST_CASE("random transcripts round-trip through render/parse") {
    const std::vector<std::string> words = {"movie", "night\nplans", "dune?", "", "  padded  ", "ok"};
    SplitMix64 rng(11);
    for (int i = 0; i < 300; ++i) {
        std::vector<ChatTurn> transcript;
        if (rng.coin()) transcript.push_back({Role::system, words[rng.bounded(words.size())]});
        const size_t pairs = rng.bounded(4);
        for (size_t p = 0; p < pairs; ++p) {
            transcript.push_back({Role::user, words[rng.bounded(words.size())]});
            transcript.push_back({Role::assistant, words[rng.bounded(words.size())]});
        }
        if (rng.coin()) transcript.push_back({Role::user, words[rng.bounded(words.size())]});
        CHECK(parse_llama(render_llama(transcript)) == transcript);
    }
}

TEST_CASE("build_intent_record matches the golden string and labels correctly") {
    const auto non_rec = build_intent_record(k_got_prompt, Intent::non_rec);
    CHECK(non_rec.rendered == k_golden_intent_string);
    CHECK(non_rec.task == TrainingRecord::Task::intent);

    const auto rec = build_intent_record("I loved Forrest Gump. Any recommendations along those lines?",
                                         Intent::rec);
    const json answer = json::parse(rec.transcript.back().content);
    CHECK(answer.at("intent") == "rec");
    CHECK(parse_llama(rec.rendered) == rec.transcript);
}

TEST_CASE("build_entity_record emits strict sorted JSON") {
    const auto rec = build_entity_record("I loved Forrest Gump. Any recommendations along those lines?",
                                         {{"title", {"Forrest Gump"}}});
    CHECK(rec.transcript.back().content == "{\"title\":[\"Forrest Gump\"]}");
    CHECK(rec.transcript.front().content.find("\"title\"") != std::string::npos);

    const auto multi = build_entity_record("x", {{"theme", {"loyalty"}}, {"genre", {"fantasy", "drama"}}});
    const json answer = json::parse(multi.transcript.back().content);
    CHECK(answer.dump() == "{\"genre\":[\"fantasy\",\"drama\"],\"theme\":[\"loyalty\"]}");

    CHECK(build_entity_record("x", {}).transcript.back().content == "{}");

    try {
        build_entity_record("x", {{"studio", {"HBO"}}});
        FAIL("expected throw");
    } catch (const PromptError& e) {
        CHECK(e.code == PromptError::Code::unknown_entity_class);
    }
}

TEST_CASE("finetune config accepts the default layer trio in order") {
    FinetuneConfig cfg;
    const std::string doc = emit_finetune_config(cfg);
    CHECK(doc ==
          "base_model = llama-3.2-3b\n"
          "target_layers = q_proj, v_proj, o_proj\n"
          "rank = 16\n"
          "alpha = 32\n"
          "dropout = 0.05\n"
          "quantization = four_bit\n");
}

TEST_CASE("finetune config accepts the full seven-layer set") {
    FinetuneConfig cfg;
    cfg.target_layers = {"q_proj", "k_proj", "v_proj", "o_proj", "up_proj", "down_proj", "gate_proj"};
    cfg.quantization = FinetuneConfig::Quantization::none;
    const std::string doc = emit_finetune_config(cfg);
    CHECK(doc.find("target_layers = q_proj, k_proj, v_proj, o_proj, up_proj, down_proj, gate_proj") !=
          std::string::npos);
    CHECK(doc.find("quantization = none") != std::string::npos);
}

TEST_CASE("finetune config rejects bad layer sets and parameters") {
    auto code_of = [](FinetuneConfig cfg) {
        try {
            emit_finetune_config(cfg);
        } catch (const PromptError& e) {
            return e.code;
        }
        return PromptError::Code::malformed_frame;  // sentinel for "no throw"
    };
    FinetuneConfig bad_name;
    bad_name.target_layers = {"x_proj"};
    CHECK(code_of(bad_name) == PromptError::Code::invalid_layer_name);

    try {
        emit_finetune_config(bad_name);
    } catch (const PromptError& e) {
        CHECK(std::string(e.what()).find("x_proj") != std::string::npos);
        CHECK(std::string(e.what()).find("gate_proj") != std::string::npos);  // legal set listed
    }

    FinetuneConfig dup;
    dup.target_layers = {"q_proj", "q_proj"};
    CHECK(code_of(dup) == PromptError::Code::invalid_config);

    FinetuneConfig empty;
    empty.target_layers = {};
    CHECK(code_of(empty) == PromptError::Code::invalid_config);

    FinetuneConfig bad_rank;
    bad_rank.rank = 0;
    CHECK(code_of(bad_rank) == PromptError::Code::invalid_config);

    FinetuneConfig bad_dropout;
    bad_dropout.dropout = 1.0;
    CHECK(code_of(bad_dropout) == PromptError::Code::invalid_config);
}
