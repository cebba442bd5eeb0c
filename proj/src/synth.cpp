#include "convrec/synth.hpp"

#include <algorithm>
#include <cstdio>
#include <future>
#include <set>

#include "convrec/text.hpp"

namespace convrec {

namespace {

using json = nlohmann::json;

struct ClassBinding {
    NodeKind node_kind;
    SlotKind slot_kind;
};

const std::map<std::string, ClassBinding>& class_bindings() {
    static const std::map<std::string, ClassBinding> bindings = {
        {"title", {NodeKind::title, SlotKind::title}},
        {"genre", {NodeKind::genre, SlotKind::genre}},
        {"theme", {NodeKind::theme, SlotKind::theme}},
        {"plot", {NodeKind::plot_keyword, SlotKind::plot_keyword}},
        {"actor", {NodeKind::person, SlotKind::actor}},
        {"director", {NodeKind::person, SlotKind::director}},
    };
    return bindings;
}

std::string entity_class_for(SlotKind kind) {
    switch (kind) {
        case SlotKind::title: return "title";
        case SlotKind::actor: return "actor";
        case SlotKind::director: return "director";
        case SlotKind::genre: return "genre";
        case SlotKind::theme: return "theme";
        case SlotKind::plot_keyword: return "plot";
    }
    return "?";
}

std::string tag(const std::string& cls, const std::string& value) { return cls + ":" + value; }

std::vector<uint64_t> trigram_set(const std::string& normalized) {
    std::vector<std::string> tokens;
    size_t i = 0;
    while (i < normalized.size()) {
        size_t j = normalized.find(' ', i);
        if (j == std::string::npos) j = normalized.size();
        if (j > i) tokens.emplace_back(normalized.substr(i, j - i));
        i = j + 1;
    }
    std::set<uint64_t> grams;
    for (size_t t = 0; t + 2 < tokens.size(); ++t) {
        grams.insert(text::fnv1a64(tokens[t] + "\x1f" + tokens[t + 1] + "\x1f" + tokens[t + 2]));
    }
    return {grams.begin(), grams.end()};
}

// jaccard >= 0.9 in exact integer arithmetic:
// shared / (a + b - shared) >= 9/10  <=>  19 * shared >= 9 * (a + b)
bool over_threshold(size_t shared, size_t size_a, size_t size_b) {
    if (size_a == 0 && size_b == 0) return false;
    return 19 * shared >= 9 * (size_a + size_b);
}

// Titles hosting a (class, value) mention, as a sorted id list.
std::vector<NodeId> hosting_titles(const KnowledgeGraph& g, const std::string& cls, const std::string& value) {
    const auto& binding = class_bindings().at(cls);
    const auto node = g.find(binding.node_kind, value);
    if (!node) return {};
    if (binding.node_kind == NodeKind::title) return {*node};
    EdgeKind ek;
    switch (binding.slot_kind) {
        case SlotKind::actor: ek = EdgeKind::acted_in; break;
        case SlotKind::director: ek = EdgeKind::directed; break;
        case SlotKind::genre: ek = EdgeKind::has_genre; break;
        case SlotKind::theme: ek = EdgeKind::has_theme; break;
        case SlotKind::plot_keyword: ek = EdgeKind::has_plot_keyword; break;
        default: return {};
    }
    std::vector<NodeId> out = g.neighbor_ids(*node, ek);
    std::sort(out.begin(), out.end());
    return out;
}

struct PreparedTemplate {
    const TemplateSpec* spec = nullptr;
    std::vector<std::pair<std::string, SlotKind>> signature;       // graph-backed slots
    std::vector<std::pair<std::string, const std::vector<std::string>*>> literal_slots;
    std::vector<NodeId> candidates;  // anchors supporting the signature
};

struct Candidate {
    LabeledExample example;
    std::vector<ChatTurn> paraphrase_request;
};

bool contains_fold(const std::string& haystack, const std::string& needle) {
    return text::to_lower(haystack).find(text::to_lower(needle)) != std::string::npos;
}

}  // namespace

const std::string k_paraphrase_system_prompt =
    "Rewrite the user's message as a natural movie-related request with the same meaning. Keep every "
    "movie title, person name, genre, theme and plot detail exactly as written. Reply with the "
    "rewritten message only.";

std::vector<TemplateSpec> load_labeled_pack(std::string_view text_in) {
    std::vector<TemplateSpec> out;
    Intent current = Intent::rec;
    size_t pos = 0;
    size_t line_no = 0;
    while (pos < text_in.size()) {
        size_t eol = text_in.find('\n', pos);
        if (eol == std::string_view::npos) eol = text_in.size();
        std::string line(text_in.substr(pos, eol - pos));
        pos = eol + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const std::string trimmed = text::trim(line);
        if (trimmed.empty()) continue;
        if (trimmed.front() == '#') {
            if (trimmed.rfind("#!", 0) == 0) {
                const std::string directive = text::trim(std::string_view(trimmed).substr(2));
                if (directive == "intent=rec") {
                    current = Intent::rec;
                } else if (directive == "intent=non_rec") {
                    current = Intent::non_rec;
                } else {
                    throw SynthError(SynthError::Code::bad_data,
                                     "line " + std::to_string(line_no) + ": unknown directive \"" + directive + "\"");
                }
            }
            continue;
        }
        TemplateSpec spec;
        spec.id = static_cast<int>(out.size()) + 1;
        spec.source = line;
        spec.ast = parse_template(line);
        spec.intent = current;
        out.push_back(std::move(spec));
    }
    return out;
}

json example_to_json(const LabeledExample& ex) {
    json entities = json::object();
    for (const auto& [cls, values] : ex.entities) {
        entities[cls] = values;
    }
    json provenance{
        {"template_id", ex.provenance.template_id},
        {"seed", ex.provenance.seed_assignments},
        {"paraphrased", ex.provenance.paraphrased},
    };
    if (ex.provenance.anchor_title) {
        provenance["anchor_title"] = *ex.provenance.anchor_title;
    } else {
        provenance["anchor_title"] = nullptr;
    }
    return json{
        {"example_id", ex.example_id},
        {"prompt", ex.prompt},
        {"intent", std::string(intent_name(ex.intent))},
        {"entities", std::move(entities)},
        {"provenance", std::move(provenance)},
    };
}

LabeledExample example_from_json(const json& j) {
    LabeledExample ex;
    try {
        ex.example_id = j.at("example_id").get<std::string>();
        ex.prompt = j.at("prompt").get<std::string>();
        const std::string intent = j.at("intent").get<std::string>();
        if (intent == "rec") {
            ex.intent = Intent::rec;
        } else if (intent == "non_rec") {
            ex.intent = Intent::non_rec;
        } else {
            throw SynthError(SynthError::Code::bad_data, "unknown intent \"" + intent + "\"");
        }
        if (j.contains("entities")) {
            for (const auto& [cls, values] : j.at("entities").items()) {
                ex.entities[cls] = values.get<std::vector<std::string>>();
            }
        }
        if (j.contains("provenance")) {
            const auto& p = j.at("provenance");
            ex.provenance.template_id = p.value("template_id", 0);
            if (p.contains("seed")) {
                for (const auto& [slot, value] : p.at("seed").items()) {
                    ex.provenance.seed_assignments[slot] = value.get<std::string>();
                }
            }
            if (p.contains("anchor_title") && !p.at("anchor_title").is_null()) {
                ex.provenance.anchor_title = p.at("anchor_title").get<std::string>();
            }
            ex.provenance.paraphrased = p.value("paraphrased", false);
        }
    } catch (const json::exception& e) {
        throw SynthError(SynthError::Code::bad_data, std::string("bad example record: ") + e.what());
    }
    return ex;
}

std::optional<Violation> ground_check(const LabeledExample& ex, const KnowledgeGraph& g) {
    std::vector<std::pair<std::string, std::string>> pairs;
    for (const auto& [cls, values] : ex.entities) {
        if (!class_bindings().count(cls)) {
            return Violation{tag(cls, values.empty() ? "" : values.front()), "", "unknown entity class"};
        }
        for (const auto& v : values) pairs.emplace_back(cls, v);
    }
    if (pairs.empty()) return std::nullopt;

    std::optional<NodeId> anchor;
    if (ex.provenance.anchor_title) {
        anchor = g.find(NodeKind::title, *ex.provenance.anchor_title);
        if (!anchor) {
            return Violation{tag("title", *ex.provenance.anchor_title), "", "anchor title not in graph"};
        }
    } else {
        auto it = ex.entities.find("title");
        if (it != ex.entities.end() && !it->second.empty()) {
            anchor = g.find(NodeKind::title, it->second.front());
            if (!anchor) {
                return Violation{tag("title", it->second.front()), "", "title not in graph"};
            }
        }
    }

    if (anchor) {
        const std::string anchor_value = g.node(*anchor).value;
        for (const auto& [cls, value] : pairs) {
            if (cls == "title") {
                if (value != anchor_value) {
                    return Violation{tag("title", value), tag("title", anchor_value),
                                     "second title differs from the anchor"};
                }
                continue;
            }
            const auto hosts = hosting_titles(g, cls, value);
            if (!std::binary_search(hosts.begin(), hosts.end(), *anchor)) {
                return Violation{tag("title", anchor_value), tag(cls, value),
                                 hosts.empty() ? "value not in graph" : "value not incident to the anchor title"};
            }
        }
        return std::nullopt;
    }

    if (pairs.size() == 1) {
        const auto& [cls, value] = pairs.front();
        if (hosting_titles(g, cls, value).empty()) {
            return Violation{tag(cls, value), "", "value not in graph"};
        }
        return std::nullopt;
    }

    // No anchor recorded: the mentions must share at least one hosting title.
    std::vector<NodeId> common = hosting_titles(g, pairs[0].first, pairs[0].second);
    for (size_t i = 1; i < pairs.size(); ++i) {
        const auto hosts = hosting_titles(g, pairs[i].first, pairs[i].second);
        std::vector<NodeId> next;
        std::set_intersection(common.begin(), common.end(), hosts.begin(), hosts.end(),
                              std::back_inserter(next));
        if (next.empty()) {
            return Violation{tag(pairs[0].first, pairs[0].second), tag(pairs[i].first, pairs[i].second),
                             "no title hosts both mentions"};
        }
        common = std::move(next);
    }
    return std::nullopt;
}

bool Deduper::try_keep(const std::string& prompt) {
    const std::string normalized = text::normalize_prompt(prompt);
    if (normalized_.count(normalized)) return false;

    const auto grams = trigram_set(normalized);
    std::unordered_map<uint32_t, size_t> shared;
    for (uint64_t gram : grams) {
        auto it = inverted_.find(gram);
        if (it == inverted_.end()) continue;
        for (uint32_t id : it->second) shared[id] += 1;
    }
    for (const auto& [id, count] : shared) {
        if (over_threshold(count, grams.size(), sizes_[id])) return false;
    }

    const auto id = static_cast<uint32_t>(sizes_.size());
    normalized_.insert(normalized);
    sizes_.push_back(grams.size());
    for (uint64_t gram : grams) {
        inverted_[gram].push_back(id);
    }
    return true;
}

bool is_near_duplicate(const std::string& a, const std::string& b) {
    const std::string na = text::normalize_prompt(a);
    const std::string nb = text::normalize_prompt(b);
    if (na == nb) return true;
    const auto ga = trigram_set(na);
    const auto gb = trigram_set(nb);
    std::vector<uint64_t> both;
    std::set_intersection(ga.begin(), ga.end(), gb.begin(), gb.end(), std::back_inserter(both));
    return over_threshold(both.size(), ga.size(), gb.size());
}

json QualityReport::to_json() const {
    return json{
        {"attempts", attempts},
        {"emitted", emitted},
        {"rejected_duplicate", rejected_duplicate},
        {"rejected_ground", rejected_ground},
        {"paraphrase_kept_original", paraphrase_kept_original},
        {"transport_requests", transport_requests},
        {"rejection_rate", rejection_rate()},
    };
}

QualityReport run_job(const GenerationJob& job, const std::function<void(const LabeledExample&)>& sink) {
    if (job.target_count < 1) throw SynthError(SynthError::Code::bad_job, "target_count must be >= 1");
    if (job.max_in_flight < 1) throw SynthError(SynthError::Code::bad_job, "max_in_flight must be >= 1");
    if (job.templates.empty()) throw SynthError(SynthError::Code::bad_job, "no templates");
    if (job.graph == nullptr) throw SynthError(SynthError::Code::bad_job, "no knowledge graph");
    if (job.paraphrase && job.transport == nullptr) {
        throw SynthError(SynthError::Code::bad_job, "paraphrase requires a transport");
    }
    const KnowledgeGraph& graph = *job.graph;

    std::vector<PreparedTemplate> prepared;
    prepared.reserve(job.templates.size());
    for (const auto& spec : job.templates) {
        PreparedTemplate pt;
        pt.spec = &spec;
        for (const auto& slot : template_slots(spec.ast)) {
            const auto& entry = job.registry.lookup(slot);  // throws unregistered_slot
            if (entry.kind) {
                pt.signature.emplace_back(slot, *entry.kind);
            } else {
                if (entry.domain.empty()) {
                    throw SynthError(SynthError::Code::bad_job,
                                     "slot \"" + slot + "\" has an empty literal domain");
                }
                pt.literal_slots.emplace_back(slot, &entry.domain);
            }
        }
        if (!pt.signature.empty()) {
            pt.candidates = anchor_candidates(graph, pt.signature);
            if (pt.candidates.empty()) {
                throw SynthError(SynthError::Code::unsatisfiable,
                                 "graph cannot support template " + std::to_string(spec.id) + " (\"" +
                                     spec.source + "\")");
            }
        }
        prepared.push_back(std::move(pt));
    }

    SplitMix64 rng(job.rng_seed);
    Deduper deduper;
    QualityReport report;
    const size_t budget = k_retry_budget_factor * job.target_count;
    size_t generated = 0;

    auto make_candidate = [&]() {
        const PreparedTemplate& pt = prepared[generated % prepared.size()];
        ++generated;

        SeedTuple tuple = sample_seed_tuple_from(graph, pt.candidates, pt.signature, rng);
        for (const auto& [slot, domain] : pt.literal_slots) {
            tuple.assignments[slot] = (*domain)[rng.bounded(domain->size())];
        }

        Candidate c;
        c.example.prompt = fill(pt.spec->ast, tuple, rng);
        c.example.intent = pt.spec->intent;
        for (const auto& [slot, kind] : pt.signature) {
            auto& values = c.example.entities[entity_class_for(kind)];
            values.push_back(tuple.assignments.at(slot));
        }
        for (auto& [cls, values] : c.example.entities) {
            (void)cls;
            std::sort(values.begin(), values.end());
            values.erase(std::unique(values.begin(), values.end()), values.end());
        }
        c.example.provenance.template_id = pt.spec->id;
        c.example.provenance.seed_assignments = tuple.assignments;
        if (tuple.anchor_title) {
            c.example.provenance.anchor_title = graph.node(*tuple.anchor_title).value;
        }
        if (job.paraphrase) {
            c.paraphrase_request = {{Role::system, k_paraphrase_system_prompt},
                                    {Role::user, c.example.prompt}};
        }
        return c;
    };

    while (report.emitted < job.target_count && report.attempts < budget) {
        // Candidates are batched only to keep max_in_flight paraphrase
        // requests going; without a transport stage waves add nothing.
        const size_t wave =
            job.paraphrase ? std::min(job.max_in_flight, budget - report.attempts) : 1;
        std::vector<Candidate> candidates;
        candidates.reserve(wave);
        for (size_t i = 0; i < wave; ++i) {
            candidates.push_back(make_candidate());
        }

        std::vector<std::string> paraphrases(candidates.size());
        if (job.paraphrase) {
            report.transport_requests += candidates.size();
            try {
                if (candidates.size() == 1) {
                    paraphrases[0] = job.transport->complete(candidates[0].paraphrase_request, job.params);
                } else {
                    std::vector<std::future<std::string>> futures;
                    futures.reserve(candidates.size());
                    for (const auto& c : candidates) {
                        futures.push_back(std::async(std::launch::async, [&job, &c] {
                            return job.transport->complete(c.paraphrase_request, job.params);
                        }));
                    }
                    for (size_t i = 0; i < futures.size(); ++i) {
                        paraphrases[i] = futures[i].get();
                    }
                }
            } catch (const TransportError& ex) {
                throw SynthError(SynthError::Code::transport_failure, ex.what());
            }
        }

        for (size_t i = 0; i < candidates.size() && report.emitted < job.target_count; ++i) {
            ++report.attempts;
            LabeledExample& ex = candidates[i].example;
            if (job.paraphrase) {
                const std::string rewritten = text::trim(paraphrases[i]);
                bool keeps_entities = !rewritten.empty();
                for (const auto& [cls, values] : ex.entities) {
                    (void)cls;
                    for (const auto& v : values) {
                        if (!contains_fold(rewritten, v)) {
                            keeps_entities = false;
                            break;
                        }
                    }
                    if (!keeps_entities) break;
                }
                if (keeps_entities) {
                    ex.prompt = rewritten;
                    ex.provenance.paraphrased = true;
                } else {
                    ++report.paraphrase_kept_original;
                }
            }
            if (ground_check(ex, graph)) {
                ++report.rejected_ground;
                continue;
            }
            if (!deduper.try_keep(ex.prompt)) {
                ++report.rejected_duplicate;
                continue;
            }
            char id[16];
            std::snprintf(id, sizeof(id), "ex%06zu", report.emitted);
            ex.example_id = id;
            ++report.emitted;
            sink(ex);
        }
    }

    if (report.emitted < job.target_count) {
        throw SynthError(SynthError::Code::budget_exhausted,
                         "emitted " + std::to_string(report.emitted) + " of " +
                             std::to_string(job.target_count) + " examples after " +
                             std::to_string(report.attempts) + " attempts");
    }
    return report;
}

std::pair<std::vector<LabeledExample>, QualityReport> run_job(const GenerationJob& job) {
    std::vector<LabeledExample> examples;
    QualityReport report = run_job(job, [&](const LabeledExample& ex) { examples.push_back(ex); });
    return {std::move(examples), std::move(report)};
}

}  // namespace convrec
