#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "convrec/kg.hpp"
#include "convrec/rng.hpp"

namespace convrec {

// Template grammar:
//   [name]            slot; an optional hint after the first comma is kept
//                     as an annotation ("[plot theme, e.g., time travel]")
//   {a|b|c}           alternation, two or more branches
//   (?text)           optional group
//   backslash         escapes the next character
// Constructs nest to depth 4.
struct TemplateNode {
    enum class Kind { literal, slot, alternation, optional_group };

    Kind kind = Kind::literal;
    std::string text;        // literal
    std::string slot_name;   // slot
    std::string annotation;  // slot hint, may be empty
    // alternation: one sequence per branch; optional_group: branches[0]
    std::vector<std::vector<TemplateNode>> branches;

    bool operator==(const TemplateNode&) const = default;
};

struct TemplateAst {
    std::vector<TemplateNode> nodes;

    bool operator==(const TemplateAst&) const = default;
};

struct GrammarError : std::runtime_error {
    enum class Code {
        unbalanced_bracket,
        empty_slot_name,
        empty_alternation_branch,
        single_branch_alternation,
        nesting_too_deep,
        unregistered_slot,
        unbounded_slot,
        missing_slot_value,
    };
    Code code;
    size_t position;
    GrammarError(Code c, size_t pos, const std::string& msg)
        : std::runtime_error(msg), code(c), position(pos) {}
};

TemplateAst parse_template(std::string_view src);

// Canonical source form; parse(canonical_render(ast)) == ast for well-formed
// ASTs (trimmed slot names, merged adjacent literals). Literals re-escape
// every grammar metacharacter.
std::string canonical_render(const TemplateAst& ast);

// Slot names in first-appearance order, deduplicated.
std::vector<std::string> template_slots(const TemplateAst& ast);

// Slot -> graph kind or explicit literal domain. Exactly one of the two is
// set per slot.
struct SlotRegistry {
    struct Entry {
        std::optional<SlotKind> kind;
        std::vector<std::string> domain;
    };
    std::map<std::string, Entry> slots;

    void register_graph_slot(std::string name, SlotKind kind);
    void register_literal_slot(std::string name, std::vector<std::string> domain);
    const Entry& lookup(const std::string& name) const;  // throws unregistered_slot
};

// Number of exhaustive expansion combinations: sequences multiply, alternation
// branches add, an optional adds one empty variant, a slot contributes its
// literal-domain size. Graph-backed slots are rejected (unbounded_slot). The
// count equals the number of distinct expansion strings whenever branches and
// domain values do not collide textually.
uint64_t expansion_cardinality(const TemplateAst& ast, const SlotRegistry& reg);

// Substitute slot values from the seed and resolve alternations/optionals
// with the rng (document order, depth first). Literal whitespace is kept
// verbatim. Throws missing_slot_value if the seed lacks a slot.
std::string fill(const TemplateAst& ast, const SeedTuple& seed, SplitMix64& rng);

// Template packs: one template per line, '#' comments and blank lines
// ignored; id is the 1-based ordinal among template lines.
struct PackedTemplate {
    int id = 0;
    std::string source;
    TemplateAst ast;
};

std::vector<PackedTemplate> load_template_pack(std::string_view text);

}  // namespace convrec
