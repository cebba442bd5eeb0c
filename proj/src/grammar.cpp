#include "convrec/grammar.hpp"

#include <limits>

#include "convrec/text.hpp"

namespace convrec {

namespace {

constexpr int k_max_depth = 4;
constexpr std::string_view k_meta_chars = "\\[]{}()|";

struct Parser {
    std::string_view src;
    size_t pos = 0;

    bool done() const { return pos >= src.size(); }
    char peek() const { return src[pos]; }

    [[noreturn]] void fail(GrammarError::Code code, size_t at, const std::string& msg) {
        throw GrammarError(code, at, msg + " at position " + std::to_string(at));
    }

    void append_literal(std::vector<TemplateNode>& seq, char c) {
        if (seq.empty() || seq.back().kind != TemplateNode::Kind::literal) {
            TemplateNode lit;
            lit.kind = TemplateNode::Kind::literal;
            seq.push_back(std::move(lit));
        }
        seq.back().text.push_back(c);
    }

    TemplateNode parse_slot() {
        const size_t open = pos;
        ++pos;  // consume '['
        std::string inner;
        while (true) {
            if (done()) fail(GrammarError::Code::unbalanced_bracket, open, "unterminated '['");
            const char c = src[pos];
            if (c == '\\') {
                if (pos + 1 >= src.size()) fail(GrammarError::Code::unbalanced_bracket, open, "unterminated '['");
                inner.push_back(src[pos + 1]);
                pos += 2;
                continue;
            }
            if (c == ']') {
                ++pos;
                break;
            }
            inner.push_back(c);
            ++pos;
        }
        TemplateNode slot;
        slot.kind = TemplateNode::Kind::slot;
        const size_t comma = inner.find(',');
        if (comma == std::string::npos) {
            slot.slot_name = text::trim(inner);
        } else {
            slot.slot_name = text::trim(std::string_view(inner).substr(0, comma));
            slot.annotation = text::trim(std::string_view(inner).substr(comma + 1));
        }
        if (slot.slot_name.empty()) {
            fail(GrammarError::Code::empty_slot_name, open, "slot without a name");
        }
        return slot;
    }

    TemplateNode parse_alternation(int depth) {
        const size_t open = pos;
        if (depth > k_max_depth) {
            fail(GrammarError::Code::nesting_too_deep, open, "nesting deeper than " + std::to_string(k_max_depth));
        }
        ++pos;  // consume '{'
        TemplateNode alt;
        alt.kind = TemplateNode::Kind::alternation;
        while (true) {
            alt.branches.push_back(parse_sequence(depth, /*in_alternation=*/true, /*in_optional=*/false));
            if (done()) fail(GrammarError::Code::unbalanced_bracket, open, "unterminated '{'");
            if (peek() == '|') {
                ++pos;
                continue;
            }
            // '}' terminates
            ++pos;
            break;
        }
        for (size_t b = 0; b < alt.branches.size(); ++b) {
            if (alt.branches[b].empty()) {
                fail(GrammarError::Code::empty_alternation_branch, open,
                     "empty branch " + std::to_string(b + 1) + " in alternation");
            }
        }
        if (alt.branches.size() < 2) {
            fail(GrammarError::Code::single_branch_alternation, open, "alternation needs at least two branches");
        }
        return alt;
    }

    TemplateNode parse_optional(int depth) {
        const size_t open = pos;
        if (depth > k_max_depth) {
            fail(GrammarError::Code::nesting_too_deep, open, "nesting deeper than " + std::to_string(k_max_depth));
        }
        pos += 2;  // consume "(?"
        TemplateNode opt;
        opt.kind = TemplateNode::Kind::optional_group;
        opt.branches.push_back(parse_sequence(depth, /*in_alternation=*/false, /*in_optional=*/true));
        if (done()) fail(GrammarError::Code::unbalanced_bracket, open, "unterminated '(?'");
        ++pos;  // consume ')'
        return opt;
    }

    std::vector<TemplateNode> parse_sequence(int depth, bool in_alternation, bool in_optional) {
        std::vector<TemplateNode> seq;
        while (!done()) {
            const char c = peek();
            if (c == '\\') {
                if (pos + 1 >= src.size()) {
                    fail(GrammarError::Code::unbalanced_bracket, pos, "dangling escape");
                }
                append_literal(seq, src[pos + 1]);
                pos += 2;
            } else if (c == '[') {
                seq.push_back(parse_slot());
            } else if (c == '{') {
                seq.push_back(parse_alternation(depth + 1));
            } else if (c == '(' && pos + 1 < src.size() && src[pos + 1] == '?') {
                seq.push_back(parse_optional(depth + 1));
            } else if (in_alternation && (c == '|' || c == '}')) {
                return seq;
            } else if (in_optional && c == ')') {
                return seq;
            } else {
                append_literal(seq, c);
                ++pos;
            }
        }
        if (in_alternation || in_optional) {
            // Caller reports the opener position.
            return seq;
        }
        return seq;
    }
};

std::string escape_literal(std::string_view raw) {
    std::string out;
    out.reserve(raw.size());
    for (char c : raw) {
        if (k_meta_chars.find(c) != std::string_view::npos) out.push_back('\\');
        out.push_back(c);
    }
    return out;
}

void render_sequence(const std::vector<TemplateNode>& seq, std::string& out);

void render_node(const TemplateNode& node, std::string& out) {
    switch (node.kind) {
        case TemplateNode::Kind::literal:
            out += escape_literal(node.text);
            break;
        case TemplateNode::Kind::slot:
            out.push_back('[');
            out += escape_literal(node.slot_name);
            if (!node.annotation.empty()) {
                out += ", ";
                out += escape_literal(node.annotation);
            }
            out.push_back(']');
            break;
        case TemplateNode::Kind::alternation:
            out.push_back('{');
            for (size_t i = 0; i < node.branches.size(); ++i) {
                if (i > 0) out.push_back('|');
                render_sequence(node.branches[i], out);
            }
            out.push_back('}');
            break;
        case TemplateNode::Kind::optional_group:
            out += "(?";
            render_sequence(node.branches.front(), out);
            out.push_back(')');
            break;
    }
}

void render_sequence(const std::vector<TemplateNode>& seq, std::string& out) {
    for (const auto& node : seq) render_node(node, out);
}

void collect_slots(const std::vector<TemplateNode>& seq, std::vector<std::string>& out) {
    for (const auto& node : seq) {
        if (node.kind == TemplateNode::Kind::slot) {
            bool seen = false;
            for (const auto& s : out) {
                if (s == node.slot_name) {
                    seen = true;
                    break;
                }
            }
            if (!seen) out.push_back(node.slot_name);
        } else {
            for (const auto& branch : node.branches) collect_slots(branch, out);
        }
    }
}

uint64_t checked_mul(uint64_t a, uint64_t b) {
    if (a != 0 && b > std::numeric_limits<uint64_t>::max() / a) {
        throw GrammarError(GrammarError::Code::unbounded_slot, 0, "expansion count overflows");
    }
    return a * b;
}

uint64_t sequence_cardinality(const std::vector<TemplateNode>& seq, const SlotRegistry& reg);

uint64_t node_cardinality(const TemplateNode& node, const SlotRegistry& reg) {
    switch (node.kind) {
        case TemplateNode::Kind::literal:
            return 1;
        case TemplateNode::Kind::slot: {
            const auto& entry = reg.lookup(node.slot_name);
            if (entry.kind) {
                throw GrammarError(GrammarError::Code::unbounded_slot, 0,
                                   "slot \"" + node.slot_name + "\" is graph-backed, not a finite domain");
            }
            return entry.domain.size();
        }
        case TemplateNode::Kind::alternation: {
            uint64_t total = 0;
            for (const auto& branch : node.branches) {
                total += sequence_cardinality(branch, reg);
            }
            return total;
        }
        case TemplateNode::Kind::optional_group:
            return 1 + sequence_cardinality(node.branches.front(), reg);
    }
    return 1;
}

uint64_t sequence_cardinality(const std::vector<TemplateNode>& seq, const SlotRegistry& reg) {
    uint64_t product = 1;
    for (const auto& node : seq) {
        product = checked_mul(product, node_cardinality(node, reg));
    }
    return product;
}

void fill_sequence(const std::vector<TemplateNode>& seq, const SeedTuple& seed, SplitMix64& rng,
                   std::string& out) {
    for (const auto& node : seq) {
        switch (node.kind) {
            case TemplateNode::Kind::literal:
                out += node.text;
                break;
            case TemplateNode::Kind::slot: {
                auto it = seed.assignments.find(node.slot_name);
                if (it == seed.assignments.end()) {
                    throw GrammarError(GrammarError::Code::missing_slot_value, 0,
                                       "no value for slot \"" + node.slot_name + "\"");
                }
                out += it->second;
                break;
            }
            case TemplateNode::Kind::alternation: {
                const uint64_t pick = rng.bounded(node.branches.size());
                fill_sequence(node.branches[static_cast<size_t>(pick)], seed, rng, out);
                break;
            }
            case TemplateNode::Kind::optional_group:
                if (rng.coin()) {
                    fill_sequence(node.branches.front(), seed, rng, out);
                }
                break;
        }
    }
}

}  // namespace

TemplateAst parse_template(std::string_view src) {
    Parser p{src};
    TemplateAst ast;
    ast.nodes = p.parse_sequence(0, false, false);
    if (!p.done()) {
        // Only reachable via an unmatched closer leaking out of a nested
        // sequence, e.g. "{a|b" followed by "}" at top level is consumed as a
        // literal, so this guards internal consistency.
        throw GrammarError(GrammarError::Code::unbalanced_bracket, p.pos, "unexpected trailing input");
    }
    return ast;
}

std::string canonical_render(const TemplateAst& ast) {
    std::string out;
    render_sequence(ast.nodes, out);
    return out;
}

std::vector<std::string> template_slots(const TemplateAst& ast) {
    std::vector<std::string> out;
    collect_slots(ast.nodes, out);
    return out;
}

void SlotRegistry::register_graph_slot(std::string name, SlotKind kind) {
    Entry e;
    e.kind = kind;
    slots[std::move(name)] = std::move(e);
}

void SlotRegistry::register_literal_slot(std::string name, std::vector<std::string> domain) {
    Entry e;
    e.domain = std::move(domain);
    slots[std::move(name)] = std::move(e);
}

const SlotRegistry::Entry& SlotRegistry::lookup(const std::string& name) const {
    auto it = slots.find(name);
    if (it == slots.end()) {
        throw GrammarError(GrammarError::Code::unregistered_slot, 0, "slot \"" + name + "\" is not registered");
    }
    return it->second;
}

uint64_t expansion_cardinality(const TemplateAst& ast, const SlotRegistry& reg) {
    return sequence_cardinality(ast.nodes, reg);
}

std::string fill(const TemplateAst& ast, const SeedTuple& seed, SplitMix64& rng) {
    std::string out;
    fill_sequence(ast.nodes, seed, rng, out);
    return out;
}

std::vector<PackedTemplate> load_template_pack(std::string_view text_in) {
    std::vector<PackedTemplate> out;
    size_t pos = 0;
    while (pos < text_in.size()) {
        size_t eol = text_in.find('\n', pos);
        if (eol == std::string_view::npos) eol = text_in.size();
        std::string line(text_in.substr(pos, eol - pos));
        pos = eol + 1;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const std::string trimmed = text::trim(line);
        if (trimmed.empty() || trimmed.front() == '#') continue;
        PackedTemplate t;
        t.id = static_cast<int>(out.size()) + 1;
        t.source = line;
        t.ast = parse_template(line);
        out.push_back(std::move(t));
    }
    return out;
}

}  // namespace convrec
