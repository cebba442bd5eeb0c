#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "convrec/catalog.hpp"
#include "convrec/rng.hpp"

namespace convrec {

enum class NodeKind { title, person, genre, theme, plot_keyword };
enum class EdgeKind { has_genre, has_theme, acted_in, directed, has_plot_keyword };

// Slot kinds a registry/signature may request. actor and director both select
// person nodes, restricted to acted_in / directed edges, so a "directed by
// [director]" slot can never be filled with someone who only acted in the
// anchor title.
enum class SlotKind { title, actor, director, genre, theme, plot_keyword };

std::string_view node_kind_name(NodeKind k);
std::string_view edge_kind_name(EdgeKind k);
std::string_view slot_kind_name(SlotKind k);
std::optional<NodeKind> node_kind_from_name(std::string_view name);
std::optional<EdgeKind> edge_kind_from_name(std::string_view name);
std::optional<SlotKind> slot_kind_from_name(std::string_view name);

using NodeId = uint32_t;

struct EntityNode {
    NodeKind kind;
    std::string value;
    NodeId node_id;

    bool operator==(const EntityNode&) const = default;
};

struct Edge {
    NodeId from;
    NodeId to;
    EdgeKind kind;

    auto operator<=>(const Edge&) const = default;
};

struct KgError : std::runtime_error {
    enum class Code { unknown_node, unsatisfiable, bad_edge, bad_format };
    Code code;
    KgError(Code c, const std::string& msg) : std::runtime_error(msg), code(c) {}
};

// One grounded slot-value assignment. When two or more assignments come from
// the graph they all sit on the same anchor title, which is what keeps
// generated prompts free of incompatible attribute combinations.
struct SeedTuple {
    std::map<std::string, std::string> assignments;
    std::optional<NodeId> anchor_title;
};

class KnowledgeGraph {
public:
    // Nodes are deduplicated by (kind, value); edges by (from, to, kind).
    // Edge endpoints are checked against the schema: acted_in/directed are
    // person->title, has_* are title->attribute.
    NodeId add_node(NodeKind kind, std::string value);
    void add_edge(NodeId from, NodeId to, EdgeKind kind);

    const EntityNode& node(NodeId id) const;  // throws unknown_node
    std::optional<NodeId> find(NodeKind kind, std::string_view value) const;

    size_t node_count() const { return nodes_.size(); }
    size_t edge_count() const { return edges_.size(); }
    const std::vector<EntityNode>& nodes() const { return nodes_; }
    const std::vector<Edge>& edges() const { return edges_; }

    // Nodes reachable from `id` over edges of `kind`, in either direction,
    // sorted by value.
    std::vector<EntityNode> neighbors(NodeId id, EdgeKind kind) const;
    // Same traversal returning ids only (still value-sorted); avoids copying
    // node values in hot paths.
    std::vector<NodeId> neighbor_ids(NodeId id, EdgeKind kind) const;

    // Does `title` have at least one incident node satisfying `slot`?
    bool title_supports(NodeId title, SlotKind slot) const;
    // All incident values for `slot` at `title`, sorted.
    std::vector<std::string> slot_values_at(NodeId title, SlotKind slot) const;
    std::vector<NodeId> title_ids() const;

    // Line format for fixtures and inspection:
    //   N<TAB>kind<TAB>value
    //   E<TAB>from<TAB>to<TAB>kind
    // Node ids in E lines are 0-based ordinals of the N lines. Export is
    // canonical (nodes by (kind, value), edges by (from, to, kind)).
    std::string to_text() const;
    static KnowledgeGraph from_text(std::string_view text);

private:
    std::vector<EntityNode> nodes_;
    std::map<std::pair<NodeKind, std::string>, NodeId> node_index_;
    std::vector<Edge> edges_;
    std::set<Edge> edge_set_;
    std::vector<std::vector<std::pair<EdgeKind, NodeId>>> adjacency_;
};

using KeywordExtractor = std::function<std::vector<std::string>(std::string_view)>;

// Lowercase plot tokens of length >= 4 minus the embedded stop-word list.
std::vector<std::string> plot_keywords(std::string_view plot);

// One title node per record; person/genre/theme/keyword nodes shared across
// titles. Node ids are assigned in record order, so identical inputs build
// identical graphs.
KnowledgeGraph build_graph(const std::vector<MediaRecord>& records,
                           const KeywordExtractor& extract = plot_keywords);

// Titles supporting every slot of the signature, in id order. Empty
// signature yields an empty list (a tuple with no slots needs no anchor).
std::vector<NodeId> anchor_candidates(const KnowledgeGraph& g,
                                      const std::vector<std::pair<std::string, SlotKind>>& signature);

// Pick an anchor title uniformly among titles supporting every slot in the
// signature, then one incident value per slot. Same seed, same tuple.
// Throws KgError{unsatisfiable} when no title supports the signature.
SeedTuple sample_seed_tuple(const KnowledgeGraph& g,
                            const std::vector<std::pair<std::string, SlotKind>>& signature,
                            SplitMix64& rng);

// Same sampling with a precomputed candidate list, for callers that draw
// many tuples against one signature.
SeedTuple sample_seed_tuple_from(const KnowledgeGraph& g, const std::vector<NodeId>& candidates,
                                 const std::vector<std::pair<std::string, SlotKind>>& signature,
                                 SplitMix64& rng);

}  // namespace convrec
