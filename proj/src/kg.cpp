#include "convrec/kg.hpp"

#include <algorithm>
#include <array>
#include <sstream>
#include <unordered_set>

#include "convrec/text.hpp"

namespace convrec {

namespace {

const std::array<std::pair<NodeKind, std::string_view>, 5> k_node_kinds = {{
    {NodeKind::title, "title"},
    {NodeKind::person, "person"},
    {NodeKind::genre, "genre"},
    {NodeKind::theme, "theme"},
    {NodeKind::plot_keyword, "plot_keyword"},
}};

const std::array<std::pair<EdgeKind, std::string_view>, 5> k_edge_kinds = {{
    {EdgeKind::has_genre, "has_genre"},
    {EdgeKind::has_theme, "has_theme"},
    {EdgeKind::acted_in, "acted_in"},
    {EdgeKind::directed, "directed"},
    {EdgeKind::has_plot_keyword, "has_plot_keyword"},
}};

const std::array<std::pair<SlotKind, std::string_view>, 6> k_slot_kinds = {{
    {SlotKind::title, "title"},
    {SlotKind::actor, "actor"},
    {SlotKind::director, "director"},
    {SlotKind::genre, "genre"},
    {SlotKind::theme, "theme"},
    {SlotKind::plot_keyword, "plot_keyword"},
}};

// ~150 common English words; plot keywords are lowercase tokens of length
// >= 4 that are not in this list.
const std::unordered_set<std::string_view>& stop_words() {
    static const std::unordered_set<std::string_view> words = {
        "about", "above", "after", "again", "against", "alone", "along", "already", "also", "although",
        "always", "among", "another", "anyone", "anything", "around", "away", "back", "became", "because",
        "become", "becomes", "been", "before", "began", "begin", "behind", "being", "below", "between",
        "both", "came", "cannot", "come", "comes", "could", "does", "doing", "done", "down",
        "during", "each", "either", "else", "even", "ever", "every", "everyone", "everything", "finally",
        "find", "finds", "first", "follow", "follows", "former", "from", "gets", "give", "gives",
        "goes", "gone", "gotten", "have", "having", "hers", "herself", "himself", "however", "into",
        "itself", "just", "keep", "keeps", "know", "knows", "last", "later", "least", "less",
        "life", "like", "long", "made", "make", "makes", "many", "might", "more", "most",
        "much", "must", "myself", "near", "need", "needs", "neither", "never", "next", "none",
        "often", "once", "ones", "only", "onto", "other", "others", "ours", "ourselves", "over",
        "perhaps", "quite", "rather", "really", "same", "seem", "seemed", "seems", "several", "shall",
        "should", "since", "some", "someone", "something", "soon", "still", "such", "take", "takes",
        "than", "that", "their", "theirs", "them", "themselves", "then", "there", "these", "they",
        "things", "this", "those", "though", "three", "through", "thus", "together", "told", "tries",
        "turn", "turns", "under", "until", "upon", "uses", "very", "well", "went", "were",
        "what", "when", "where", "which", "while", "whole", "whom", "whose", "will", "with",
        "within", "without", "would", "years", "your", "yours", "yourself",
    };
    return words;
}

EdgeKind edge_kind_for_slot(SlotKind slot) {
    switch (slot) {
        case SlotKind::actor: return EdgeKind::acted_in;
        case SlotKind::director: return EdgeKind::directed;
        case SlotKind::genre: return EdgeKind::has_genre;
        case SlotKind::theme: return EdgeKind::has_theme;
        case SlotKind::plot_keyword: return EdgeKind::has_plot_keyword;
        case SlotKind::title: break;
    }
    throw KgError(KgError::Code::bad_edge, "title slots have no edge kind");
}

}  // namespace

std::string_view node_kind_name(NodeKind k) {
    for (const auto& [kind, name] : k_node_kinds) {
        if (kind == k) return name;
    }
    return "?";
}

std::string_view edge_kind_name(EdgeKind k) {
    for (const auto& [kind, name] : k_edge_kinds) {
        if (kind == k) return name;
    }
    return "?";
}

std::string_view slot_kind_name(SlotKind k) {
    for (const auto& [kind, name] : k_slot_kinds) {
        if (kind == k) return name;
    }
    return "?";
}

std::optional<NodeKind> node_kind_from_name(std::string_view name) {
    for (const auto& [kind, n] : k_node_kinds) {
        if (n == name) return kind;
    }
    return std::nullopt;
}

std::optional<EdgeKind> edge_kind_from_name(std::string_view name) {
    for (const auto& [kind, n] : k_edge_kinds) {
        if (n == name) return kind;
    }
    return std::nullopt;
}

std::optional<SlotKind> slot_kind_from_name(std::string_view name) {
    for (const auto& [kind, n] : k_slot_kinds) {
        if (n == name) return kind;
    }
    return std::nullopt;
}

NodeId KnowledgeGraph::add_node(NodeKind kind, std::string value) {
    if (value.empty()) {
        throw KgError(KgError::Code::bad_format, "empty node value");
    }
    auto it = node_index_.find({kind, value});
    if (it != node_index_.end()) return it->second;
    const NodeId id = static_cast<NodeId>(nodes_.size());
    node_index_.emplace(std::make_pair(kind, value), id);
    nodes_.push_back({kind, std::move(value), id});
    adjacency_.emplace_back();
    return id;
}

void KnowledgeGraph::add_edge(NodeId from, NodeId to, EdgeKind kind) {
    const EntityNode& a = node(from);
    const EntityNode& b = node(to);
    const bool person_to_title = a.kind == NodeKind::person && b.kind == NodeKind::title;
    bool ok = false;
    switch (kind) {
        case EdgeKind::acted_in:
        case EdgeKind::directed:
            ok = person_to_title;
            break;
        case EdgeKind::has_genre:
            ok = a.kind == NodeKind::title && b.kind == NodeKind::genre;
            break;
        case EdgeKind::has_theme:
            ok = a.kind == NodeKind::title && b.kind == NodeKind::theme;
            break;
        case EdgeKind::has_plot_keyword:
            ok = a.kind == NodeKind::title && b.kind == NodeKind::plot_keyword;
            break;
    }
    if (!ok) {
        throw KgError(KgError::Code::bad_edge,
                      std::string(edge_kind_name(kind)) + " cannot connect " +
                          std::string(node_kind_name(a.kind)) + " to " + std::string(node_kind_name(b.kind)));
    }
    const Edge e{from, to, kind};
    if (!edge_set_.insert(e).second) return;
    edges_.push_back(e);
    adjacency_[from].emplace_back(kind, to);
    adjacency_[to].emplace_back(kind, from);
}

const EntityNode& KnowledgeGraph::node(NodeId id) const {
    if (id >= nodes_.size()) {
        throw KgError(KgError::Code::unknown_node, "unknown node id " + std::to_string(id));
    }
    return nodes_[id];
}

std::optional<NodeId> KnowledgeGraph::find(NodeKind kind, std::string_view value) const {
    auto it = node_index_.find({kind, std::string(value)});
    if (it == node_index_.end()) return std::nullopt;
    return it->second;
}

std::vector<EntityNode> KnowledgeGraph::neighbors(NodeId id, EdgeKind kind) const {
    std::vector<EntityNode> out;
    for (NodeId other : neighbor_ids(id, kind)) {
        out.push_back(nodes_[other]);
    }
    return out;
}

std::vector<NodeId> KnowledgeGraph::neighbor_ids(NodeId id, EdgeKind kind) const {
    node(id);  // validates
    std::vector<NodeId> out;
    for (const auto& [k, other] : adjacency_[id]) {
        if (k == kind) out.push_back(other);
    }
    std::sort(out.begin(), out.end(),
              [this](NodeId a, NodeId b) { return nodes_[a].value < nodes_[b].value; });
    return out;
}

bool KnowledgeGraph::title_supports(NodeId title, SlotKind slot) const {
    const EntityNode& t = node(title);
    if (t.kind != NodeKind::title) return false;
    if (slot == SlotKind::title) return true;
    const EdgeKind ek = edge_kind_for_slot(slot);
    for (const auto& [k, other] : adjacency_[title]) {
        (void)other;
        if (k == ek) return true;
    }
    return false;
}

std::vector<std::string> KnowledgeGraph::slot_values_at(NodeId title, SlotKind slot) const {
    if (slot == SlotKind::title) return {node(title).value};
    std::vector<std::string> out;
    for (const auto& n : neighbors(title, edge_kind_for_slot(slot))) {
        out.push_back(n.value);
    }
    return out;
}

std::vector<NodeId> KnowledgeGraph::title_ids() const {
    std::vector<NodeId> out;
    for (const auto& n : nodes_) {
        if (n.kind == NodeKind::title) out.push_back(n.node_id);
    }
    return out;
}

std::string KnowledgeGraph::to_text() const {
    std::vector<NodeId> order(nodes_.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<NodeId>(i);
    std::sort(order.begin(), order.end(), [&](NodeId a, NodeId b) {
        const auto& na = nodes_[a];
        const auto& nb = nodes_[b];
        if (na.kind != nb.kind) return na.kind < nb.kind;
        return na.value < nb.value;
    });
    std::vector<size_t> ordinal(nodes_.size());
    for (size_t i = 0; i < order.size(); ++i) ordinal[order[i]] = i;

    std::ostringstream out;
    for (NodeId id : order) {
        out << "N\t" << node_kind_name(nodes_[id].kind) << "\t" << nodes_[id].value << "\n";
    }
    std::vector<std::tuple<size_t, size_t, EdgeKind>> sorted_edges;
    sorted_edges.reserve(edges_.size());
    for (const auto& e : edges_) {
        sorted_edges.emplace_back(ordinal[e.from], ordinal[e.to], e.kind);
    }
    std::sort(sorted_edges.begin(), sorted_edges.end());
    for (const auto& [f, t, k] : sorted_edges) {
        out << "E\t" << f << "\t" << t << "\t" << edge_kind_name(k) << "\n";
    }
    return out.str();
}

KnowledgeGraph KnowledgeGraph::from_text(std::string_view text_in) {
    KnowledgeGraph g;
    size_t pos = 0;
    size_t line_no = 0;
    while (pos < text_in.size()) {
        size_t eol = text_in.find('\n', pos);
        if (eol == std::string_view::npos) eol = text_in.size();
        const std::string line(text_in.substr(pos, eol - pos));
        pos = eol + 1;
        ++line_no;
        if (line.empty()) continue;
        const auto parts = text::split(line, '\t');
        auto bad = [&](const std::string& why) {
            return KgError(KgError::Code::bad_format, "line " + std::to_string(line_no) + ": " + why);
        };
        if (parts[0] == "N") {
            if (parts.size() != 3) throw bad("N line needs kind and value");
            const auto kind = node_kind_from_name(parts[1]);
            if (!kind) throw bad("unknown node kind \"" + parts[1] + "\"");
            g.add_node(*kind, parts[2]);
        } else if (parts[0] == "E") {
            if (parts.size() != 4) throw bad("E line needs from, to and kind");
            const auto kind = edge_kind_from_name(parts[3]);
            if (!kind) throw bad("unknown edge kind \"" + parts[3] + "\"");
            try {
                const auto from = static_cast<NodeId>(std::stoul(parts[1]));
                const auto to = static_cast<NodeId>(std::stoul(parts[2]));
                g.add_edge(from, to, *kind);
            } catch (const std::logic_error&) {
                throw bad("bad node ordinal");
            }
        } else {
            throw bad("expected N or E line");
        }
    }
    return g;
}

std::vector<std::string> plot_keywords(std::string_view plot) {
    std::vector<std::string> out;
    std::unordered_set<std::string> seen;
    for (auto& token : text::tokenize(plot)) {
        if (token.size() < 4) continue;
        if (stop_words().count(token)) continue;
        if (seen.insert(token).second) out.push_back(std::move(token));
    }
    return out;
}

KnowledgeGraph build_graph(const std::vector<MediaRecord>& records, const KeywordExtractor& extract) {
    KnowledgeGraph g;
    for (const auto& rec : records) {
        const NodeId title = g.add_node(NodeKind::title, rec.title);
        for (const auto& genre : rec.genres) {
            g.add_edge(title, g.add_node(NodeKind::genre, genre), EdgeKind::has_genre);
        }
        for (const auto& theme : rec.themes) {
            g.add_edge(title, g.add_node(NodeKind::theme, theme), EdgeKind::has_theme);
        }
        for (const auto& person : rec.cast) {
            g.add_edge(g.add_node(NodeKind::person, person), title, EdgeKind::acted_in);
        }
        for (const auto& person : rec.directors) {
            g.add_edge(g.add_node(NodeKind::person, person), title, EdgeKind::directed);
        }
        if (rec.plot) {
            for (const auto& kw : extract(*rec.plot)) {
                g.add_edge(title, g.add_node(NodeKind::plot_keyword, kw), EdgeKind::has_plot_keyword);
            }
        }
    }
    return g;
}

std::vector<NodeId> anchor_candidates(const KnowledgeGraph& g,
                                      const std::vector<std::pair<std::string, SlotKind>>& signature) {
    std::vector<NodeId> candidates;
    if (signature.empty()) return candidates;
    for (NodeId title : g.title_ids()) {
        bool ok = true;
        for (const auto& [name, kind] : signature) {
            (void)name;
            if (!g.title_supports(title, kind)) {
                ok = false;
                break;
            }
        }
        if (ok) candidates.push_back(title);
    }
    return candidates;
}

SeedTuple sample_seed_tuple_from(const KnowledgeGraph& g, const std::vector<NodeId>& candidates,
                                 const std::vector<std::pair<std::string, SlotKind>>& signature,
                                 SplitMix64& rng) {
    SeedTuple tuple;
    if (signature.empty()) return tuple;
    if (candidates.empty()) {
        std::string sig;
        for (const auto& [name, kind] : signature) {
            if (!sig.empty()) sig += ", ";
            sig += name;
            sig += ":";
            sig += slot_kind_name(kind);
        }
        throw KgError(KgError::Code::unsatisfiable, "no title supports signature [" + sig + "]");
    }

    const NodeId anchor = candidates[rng.bounded(candidates.size())];
    tuple.anchor_title = anchor;
    for (const auto& [name, kind] : signature) {
        if (kind == SlotKind::title) {
            tuple.assignments[name] = g.node(anchor).value;
            continue;
        }
        const auto ids = g.neighbor_ids(anchor, edge_kind_for_slot(kind));
        tuple.assignments[name] = g.node(ids[rng.bounded(ids.size())]).value;
    }
    return tuple;
}

SeedTuple sample_seed_tuple(const KnowledgeGraph& g,
                            const std::vector<std::pair<std::string, SlotKind>>& signature,
                            SplitMix64& rng) {
    return sample_seed_tuple_from(g, anchor_candidates(g, signature), signature, rng);
}

}  // namespace convrec
