#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace convrec {

// Recovery options for model output that is almost-but-not-quite JSON.
// allow_code_fences tolerates prose and markdown fences around the document;
// with it off the (whitespace-trimmed) input must itself be the JSON object.
// key_aliases renames object keys to their canonical schema spelling; when
// both alias and canonical key are present the canonical one wins.
struct LenientJsonOptions {
    bool allow_code_fences = true;
    bool allow_single_quotes = true;
    bool allow_trailing_commas = true;
    bool allow_unquoted_keys = true;
    std::map<std::string, std::string> key_aliases;
};

struct EvalError : std::runtime_error {
    enum class Code { no_json_found, unrepairable_json, length_mismatch, empty_input, unknown_entity_class };
    Code code;
    size_t position;
    EvalError(Code c, const std::string& msg, size_t pos = 0)
        : std::runtime_error(msg), code(c), position(pos) {}
};

// Locate the first balanced {...} region, apply the enabled repairs
// (single->double quotes outside strings, trailing commas stripped, bare keys
// quoted), canonicalize keys, and hand back a strict JSON value.
nlohmann::json extract_json_lenient(std::string_view text, const LenientJsonOptions& opts = {});

struct ClassMetrics {
    long long tp = 0;
    long long fp = 0;
    long long fn = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct EvalReport {
    std::map<std::string, ClassMetrics> per_class;
    double macro_f1 = 0.0;
    size_t n_examples = 0;
    size_t n_parse_failures = 0;

    nlohmann::json to_json() const;
    std::string to_table() const;
};

using ConfusionCounts = std::map<std::string, ClassMetrics>;

// Predictions are optional: nullopt marks an output that could not be parsed,
// which costs a false negative for the gold class and no false positive.

// Single-label confusion counts; classes absent from both sides are excluded.
ConfusionCounts intent_confusion(const std::vector<std::string>& gold,
                                 const std::vector<std::optional<std::string>>& pred);

// Fill precision/recall/f1/macro from raw counts. Counts are additive, so
// sharded scoring can sum ConfusionCounts and finish with this.
EvalReport report_from_counts(ConfusionCounts counts, size_t n_examples, size_t n_parse_failures);

EvalReport macro_f1(const std::vector<std::string>& gold,
                    const std::vector<std::optional<std::string>>& pred);

using EntityMap = std::map<std::string, std::vector<std::string>>;

// Set-based entity scoring: gold/pred flatten to (class, normalized value)
// pairs per example; normalization is case-fold + trim + whitespace collapse.
// Macro averages over classes occurring in gold.
EvalReport entity_macro_f1(const std::vector<EntityMap>& gold,
                           const std::vector<std::optional<EntityMap>>& pred);

ConfusionCounts entity_confusion(const std::vector<EntityMap>& gold,
                                 const std::vector<std::optional<EntityMap>>& pred);

struct DiversityReport {
    double distinct_1 = 0.0;
    std::optional<double> distinct_2;  // absent when the corpus has no bigrams
    size_t vocab_size = 0;
    double mean_token_length = 0.0;
    std::optional<double> template_entropy_bits;  // absent without provenance

    nlohmann::json to_json() const;
};

// Lexical diversity over case-folded, punctuation-stripped tokens; bigrams do
// not cross prompt boundaries. template_ids, when given, must parallel
// prompts and yields the Shannon entropy of the template distribution.
DiversityReport diversity(const std::vector<std::string>& prompts,
                          const std::vector<int>* template_ids = nullptr);

// Published Macro-F1 scores for Llama 3.2 3B on the two tasks this toolkit
// prepares data for, kept as comparison points for new reports. They came
// from GPU fine-tuning runs and are not reproduction targets; the entity
// baselines were scored span-wise and are not directly comparable to the
// set-based metric here.
namespace reference_scores {
inline constexpr double k_entity_finetuned = 1.0;
inline constexpr double k_entity_base = 0.9753;
inline constexpr double k_entity_bert_base_ner = 0.2191;
inline constexpr double k_entity_roberta_movie = 0.3253;
inline constexpr double k_intent_finetuned = 0.9935;
inline constexpr double k_intent_base = 0.9805;
}  // namespace reference_scores

// The reference block for one task ("intent" or "entity"), for embedding in
// report JSON.
nlohmann::json reference_scores_json(std::string_view task);

}  // namespace convrec
