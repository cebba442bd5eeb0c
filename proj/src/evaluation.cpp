#include "convrec/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "convrec/promptkit.hpp"
#include "convrec/text.hpp"

namespace convrec {

namespace {

using json = nlohmann::json;

bool is_ident_char(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' || c == '-';
}

bool is_ws(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

// Scan from `start` (which must point at '{') to the matching '}', honoring
// string literals. Returns one past the closing brace, or npos if unbalanced.
size_t find_balanced_end(std::string_view s, size_t start, bool single_quotes) {
    int depth = 0;
    char quote = 0;
    for (size_t i = start; i < s.size(); ++i) {
        const char c = s[i];
        if (quote != 0) {
            if (c == '\\') {
                ++i;
            } else if (c == quote) {
                quote = 0;
            }
            continue;
        }
        if (c == '"' || (single_quotes && c == '\'')) {
            quote = c;
        } else if (c == '{') {
            ++depth;
        } else if (c == '}') {
            --depth;
            if (depth == 0) return i + 1;
        }
    }
    return std::string_view::npos;
}

std::string repair_region(std::string_view region, const LenientJsonOptions& opts) {
    std::string out;
    out.reserve(region.size());
    size_t i = 0;
    while (i < region.size()) {
        const char c = region[i];
        if (c == '"') {
            out.push_back(c);
            ++i;
            while (i < region.size()) {
                out.push_back(region[i]);
                if (region[i] == '\\' && i + 1 < region.size()) {
                    out.push_back(region[i + 1]);
                    i += 2;
                    continue;
                }
                if (region[i] == '"') {
                    ++i;
                    break;
                }
                ++i;
            }
            continue;
        }
        if (c == '\'' && opts.allow_single_quotes) {
            out.push_back('"');
            ++i;
            while (i < region.size() && region[i] != '\'') {
                if (region[i] == '\\' && i + 1 < region.size() && region[i + 1] == '\'') {
                    out.push_back('\'');
                    i += 2;
                    continue;
                }
                if (region[i] == '"') {
                    out += "\\\"";
                    ++i;
                    continue;
                }
                out.push_back(region[i]);
                ++i;
            }
            ++i;  // closing quote
            out.push_back('"');
            continue;
        }
        if (c == ',' && opts.allow_trailing_commas) {
            size_t j = i + 1;
            while (j < region.size() && is_ws(region[j])) ++j;
            if (j < region.size() && (region[j] == '}' || region[j] == ']')) {
                ++i;  // drop the comma
                continue;
            }
        }
        if (opts.allow_unquoted_keys && (std::isalpha(static_cast<unsigned char>(c)) || c == '_')) {
            size_t j = i;
            while (j < region.size() && is_ident_char(region[j])) ++j;
            size_t k = j;
            while (k < region.size() && is_ws(region[k])) ++k;
            if (k < region.size() && region[k] == ':') {
                out.push_back('"');
                out += region.substr(i, j - i);
                out.push_back('"');
                i = j;
                continue;
            }
        }
        out.push_back(c);
        ++i;
    }
    return out;
}

void apply_aliases(json& value, const std::map<std::string, std::string>& aliases) {
    if (value.is_object()) {
        json renamed = json::object();
        for (auto& [key, sub] : value.items()) {
            apply_aliases(sub, aliases);
            auto it = aliases.find(key);
            const std::string target = it == aliases.end() ? key : it->second;
            if (!renamed.contains(target) || target == key) {
                renamed[target] = std::move(sub);
            }
        }
        value = std::move(renamed);
    } else if (value.is_array()) {
        for (auto& sub : value) apply_aliases(sub, aliases);
    }
}

std::string normalize_value(std::string_view v) {
    return text::to_lower(text::collapse_whitespace(v));
}

void check_entity_classes(const EntityMap& m, const char* side, size_t example) {
    for (const auto& [cls, values] : m) {
        (void)values;
        if (!is_entity_class(cls)) {
            throw EvalError(EvalError::Code::unknown_entity_class,
                            std::string("unknown entity class \"") + cls + "\" in " + side + " example " +
                                std::to_string(example));
        }
    }
}

double safe_div(long long num, long long den) { return den == 0 ? 0.0 : double(num) / double(den); }

}  // namespace

json extract_json_lenient(std::string_view text_in, const LenientJsonOptions& opts) {
    size_t start;
    size_t end;
    if (opts.allow_code_fences) {
        start = text_in.find('{');
        if (start == std::string_view::npos) {
            throw EvalError(EvalError::Code::no_json_found, "no JSON object in text");
        }
        end = find_balanced_end(text_in, start, opts.allow_single_quotes);
        if (end == std::string_view::npos) {
            throw EvalError(EvalError::Code::unrepairable_json, "unbalanced braces", text_in.size());
        }
    } else {
        const std::string trimmed = text::trim(text_in);
        if (trimmed.empty() || trimmed.front() != '{' || trimmed.back() != '}') {
            throw EvalError(EvalError::Code::no_json_found, "input is not a JSON object");
        }
        start = text_in.find('{');
        end = text_in.rfind('}') + 1;
    }

    const std::string repaired = repair_region(text_in.substr(start, end - start), opts);
    json value;
    try {
        value = json::parse(repaired);
    } catch (const json::parse_error& ex) {
        throw EvalError(EvalError::Code::unrepairable_json, ex.what(), start + ex.byte);
    }
    if (!opts.key_aliases.empty()) {
        apply_aliases(value, opts.key_aliases);
    }
    return value;
}

ConfusionCounts intent_confusion(const std::vector<std::string>& gold,
                                 const std::vector<std::optional<std::string>>& pred) {
    ConfusionCounts counts;
    for (size_t i = 0; i < gold.size(); ++i) {
        if (!pred[i]) {
            counts[gold[i]].fn += 1;
        } else if (*pred[i] == gold[i]) {
            counts[gold[i]].tp += 1;
        } else {
            counts[gold[i]].fn += 1;
            counts[*pred[i]].fp += 1;
        }
    }
    return counts;
}

EvalReport report_from_counts(ConfusionCounts counts, size_t n_examples, size_t n_parse_failures) {
    EvalReport report;
    report.n_examples = n_examples;
    report.n_parse_failures = n_parse_failures;
    double f1_sum = 0.0;
    for (auto& [cls, m] : counts) {
        (void)cls;
        m.precision = safe_div(m.tp, m.tp + m.fp);
        m.recall = safe_div(m.tp, m.tp + m.fn);
        m.f1 = safe_div(2 * m.tp, 2 * m.tp + m.fp + m.fn);
        f1_sum += m.f1;
    }
    report.per_class = std::move(counts);
    report.macro_f1 = report.per_class.empty() ? 0.0 : f1_sum / double(report.per_class.size());
    return report;
}

EvalReport macro_f1(const std::vector<std::string>& gold,
                    const std::vector<std::optional<std::string>>& pred) {
    if (gold.empty()) throw EvalError(EvalError::Code::empty_input, "no examples to score");
    if (gold.size() != pred.size()) {
        throw EvalError(EvalError::Code::length_mismatch,
                        "gold has " + std::to_string(gold.size()) + " examples, pred has " +
                            std::to_string(pred.size()));
    }
    size_t failures = 0;
    for (const auto& p : pred) {
        if (!p) ++failures;
    }
    return report_from_counts(intent_confusion(gold, pred), gold.size(), failures);
}

ConfusionCounts entity_confusion(const std::vector<EntityMap>& gold,
                                 const std::vector<std::optional<EntityMap>>& pred) {
    using Pair = std::pair<std::string, std::string>;
    ConfusionCounts counts;
    std::set<std::string> gold_classes;

    for (size_t i = 0; i < gold.size(); ++i) {
        check_entity_classes(gold[i], "gold", i);
        std::set<Pair> g;
        for (const auto& [cls, values] : gold[i]) {
            gold_classes.insert(cls);
            for (const auto& v : values) g.emplace(cls, normalize_value(v));
        }
        std::set<Pair> p;
        if (pred[i]) {
            check_entity_classes(*pred[i], "pred", i);
            for (const auto& [cls, values] : *pred[i]) {
                for (const auto& v : values) p.emplace(cls, normalize_value(v));
            }
        }
        for (const auto& pair : g) {
            if (p.count(pair)) {
                counts[pair.first].tp += 1;
            } else {
                counts[pair.first].fn += 1;
            }
        }
        for (const auto& pair : p) {
            if (!g.count(pair)) {
                counts[pair.first].fp += 1;
            }
        }
    }
    // Macro runs over classes occurring in gold; false positives for classes
    // the gold never mentions have no class to live under and are dropped.
    for (auto it = counts.begin(); it != counts.end();) {
        if (!gold_classes.count(it->first)) {
            it = counts.erase(it);
        } else {
            ++it;
        }
    }
    return counts;
}

EvalReport entity_macro_f1(const std::vector<EntityMap>& gold,
                           const std::vector<std::optional<EntityMap>>& pred) {
    if (gold.empty()) throw EvalError(EvalError::Code::empty_input, "no examples to score");
    if (gold.size() != pred.size()) {
        throw EvalError(EvalError::Code::length_mismatch,
                        "gold has " + std::to_string(gold.size()) + " examples, pred has " +
                            std::to_string(pred.size()));
    }
    size_t failures = 0;
    for (const auto& p : pred) {
        if (!p) ++failures;
    }
    return report_from_counts(entity_confusion(gold, pred), gold.size(), failures);
}

json EvalReport::to_json() const {
    json per = json::object();
    for (const auto& [cls, m] : per_class) {
        per[cls] = {
            {"tp", m.tp},       {"fp", m.fp},         {"fn", m.fn},
            {"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1},
        };
    }
    return json{
        {"macro_f1", macro_f1},
        {"n_examples", n_examples},
        {"n_parse_failures", n_parse_failures},
        {"per_class", per},
    };
}

std::string EvalReport::to_table() const {
    std::ostringstream out;
    out << "class            tp     fp     fn   precision  recall      f1\n";
    char line[160];
    for (const auto& [cls, m] : per_class) {
        std::snprintf(line, sizeof(line), "%-14s %6lld %6lld %6lld   %9.4f %7.4f %7.4f\n", cls.c_str(),
                      m.tp, m.fp, m.fn, m.precision, m.recall, m.f1);
        out << line;
    }
    std::snprintf(line, sizeof(line), "macro_f1 %.6f over %zu examples (%zu parse failures)\n", macro_f1,
                  n_examples, n_parse_failures);
    out << line;
    return out.str();
}

DiversityReport diversity(const std::vector<std::string>& prompts, const std::vector<int>* template_ids) {
    if (prompts.empty()) throw EvalError(EvalError::Code::empty_input, "no prompts");
    if (template_ids && template_ids->size() != prompts.size()) {
        throw EvalError(EvalError::Code::length_mismatch, "template_ids must parallel prompts");
    }

    std::set<std::string> unigrams;
    std::set<std::pair<std::string, std::string>> bigrams;
    size_t total_unigrams = 0;
    size_t total_bigrams = 0;
    size_t total_chars = 0;
    for (const auto& prompt : prompts) {
        const auto tokens = text::tokenize(prompt);
        total_unigrams += tokens.size();
        for (const auto& t : tokens) {
            total_chars += t.size();
            unigrams.insert(t);
        }
        for (size_t i = 0; i + 1 < tokens.size(); ++i) {
            ++total_bigrams;
            bigrams.emplace(tokens[i], tokens[i + 1]);
        }
    }
    if (total_unigrams == 0) {
        throw EvalError(EvalError::Code::empty_input, "prompts contain no tokens");
    }

    DiversityReport report;
    report.distinct_1 = double(unigrams.size()) / double(total_unigrams);
    if (total_bigrams > 0) {
        report.distinct_2 = double(bigrams.size()) / double(total_bigrams);
    }
    report.vocab_size = unigrams.size();
    report.mean_token_length = double(total_chars) / double(total_unigrams);

    if (template_ids) {
        std::map<int, size_t> freq;
        for (int id : *template_ids) freq[id] += 1;
        double entropy = 0.0;
        for (const auto& [id, n] : freq) {
            (void)id;
            const double p = double(n) / double(template_ids->size());
            entropy -= p * std::log2(p);
        }
        report.template_entropy_bits = entropy;
    }
    return report;
}

json reference_scores_json(std::string_view task) {
    if (task == "intent") {
        return json{
            {"finetuned_llama_3_2_3b", reference_scores::k_intent_finetuned},
            {"base_llama_3_2_3b", reference_scores::k_intent_base},
        };
    }
    return json{
        {"finetuned_llama_3_2_3b", reference_scores::k_entity_finetuned},
        {"base_llama_3_2_3b", reference_scores::k_entity_base},
        {"bert_base_ner_span_scored", reference_scores::k_entity_bert_base_ner},
        {"roberta_movie_span_scored", reference_scores::k_entity_roberta_movie},
    };
}

json DiversityReport::to_json() const {
    json j{
        {"distinct_1", distinct_1},
        {"vocab_size", vocab_size},
        {"mean_token_length", mean_token_length},
    };
    if (distinct_2) j["distinct_2"] = *distinct_2;
    if (template_entropy_bits) j["template_entropy_bits"] = *template_entropy_bits;
    return j;
}

}  // namespace convrec
