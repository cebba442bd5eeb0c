#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "convrec/grammar.hpp"
#include "convrec/kg.hpp"
#include "convrec/promptkit.hpp"
#include "convrec/transport.hpp"

namespace convrec {

// A pack template plus its declared intent. Packs carry intent in
// `#! intent=rec|non_rec` directive lines, which plain pack loading treats as
// comments; a directive applies to the templates after it (default: rec).
struct TemplateSpec {
    int id = 0;
    std::string source;
    TemplateAst ast;
    Intent intent = Intent::rec;
};

std::vector<TemplateSpec> load_labeled_pack(std::string_view text);

struct Provenance {
    int template_id = 0;
    std::map<std::string, std::string> seed_assignments;
    std::optional<std::string> anchor_title;
    bool paraphrased = false;
};

struct LabeledExample {
    std::string example_id;
    std::string prompt;
    Intent intent = Intent::rec;
    std::map<std::string, std::vector<std::string>> entities;
    Provenance provenance;
};

nlohmann::json example_to_json(const LabeledExample& ex);
LabeledExample example_from_json(const nlohmann::json& j);

struct SynthError : std::runtime_error {
    enum class Code { unsatisfiable, budget_exhausted, transport_failure, bad_job, bad_data };
    Code code;
    SynthError(Code c, const std::string& msg) : std::runtime_error(msg), code(c) {}
};

// A failed grounding check: the two attribute mentions that do not co-occur
// on one catalog title (or a single mention missing from the graph).
struct Violation {
    std::string first;
    std::string second;
    std::string reason;
};

// Pass iff every entity value co-occurs on the example's anchor title (the
// provenance anchor, or the title entity when no anchor is recorded; with
// neither, any common hosting title is accepted).
std::optional<Violation> ground_check(const LabeledExample& ex, const KnowledgeGraph& g);

// Streaming near-duplicate filter. A prompt is dropped when its normalized
// form (case-fold, whitespace-collapse, punctuation-strip) equals a kept one
// or its token-3-gram Jaccard similarity with any kept prompt is >= 0.9.
class Deduper {
public:
    bool try_keep(const std::string& prompt);
    size_t kept() const { return sizes_.size(); }

private:
    std::unordered_set<std::string> normalized_;
    std::vector<size_t> sizes_;  // trigram-set size per kept prompt
    std::unordered_map<uint64_t, std::vector<uint32_t>> inverted_;
};

// The dedupe predicate on its own, for pairwise re-checks of emitted data.
bool is_near_duplicate(const std::string& a, const std::string& b);

inline constexpr double k_dedupe_jaccard_threshold = 0.9;
inline constexpr size_t k_retry_budget_factor = 20;

// Instruction sent with each paraphrase request.
extern const std::string k_paraphrase_system_prompt;

struct GenerationJob {
    std::vector<TemplateSpec> templates;
    SlotRegistry registry;
    const KnowledgeGraph* graph = nullptr;
    size_t target_count = 1;
    uint64_t rng_seed = 0;
    bool paraphrase = false;
    Transport* transport = nullptr;
    size_t max_in_flight = 1;
    CompletionParams params;
};

struct QualityReport {
    size_t attempts = 0;
    size_t emitted = 0;
    size_t rejected_duplicate = 0;
    size_t rejected_ground = 0;
    size_t paraphrase_kept_original = 0;
    size_t transport_requests = 0;

    double rejection_rate() const {
        return attempts == 0 ? 0.0 : double(attempts - emitted) / double(attempts);
    }
    nlohmann::json to_json() const;
};

// Rotate templates round-robin, sample a fresh grounded seed per candidate,
// fill, optionally paraphrase (labels never change; the original prompt is
// kept when the paraphrase drops an entity surface string), ground-check,
// dedupe, and emit exactly target_count examples in generation order.
// Paraphrase requests run up to max_in_flight at a time; ordering is by
// generation index, so concurrency never changes the emitted bytes.
QualityReport run_job(const GenerationJob& job, const std::function<void(const LabeledExample&)>& sink);
std::pair<std::vector<LabeledExample>, QualityReport> run_job(const GenerationJob& job);

}  // namespace convrec
