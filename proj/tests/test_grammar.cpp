#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "convrec/grammar.hpp"
#include "convrec/rng.hpp"
#include "oracles.hpp"

using namespace convrec;

namespace {

// Canonical-form AST generator for the round-trip property: no adjacent or
// empty literals, trimmed slot names, depth <= 4.
struct AstGen {
    SplitMix64 rng;
    int next_id = 0;

    explicit AstGen(uint64_t seed) : rng(seed) {}

    std::string literal_text() {
        // Mix in metacharacters so canonical escaping gets exercised.
        static const std::vector<std::string> pool = {
            "hello", "movie night", "good, bad", "a[b", "x{y}", "p|q", "(?look)", "back\\slash", "plain"};
        return pool[rng.bounded(pool.size())];
    }

    TemplateNode literal() {
        TemplateNode n;
        n.kind = TemplateNode::Kind::literal;
        n.text = literal_text();
        return n;
    }

    TemplateNode slot() {
        TemplateNode n;
        n.kind = TemplateNode::Kind::slot;
        n.slot_name = "slot" + std::to_string(next_id++);
        if (rng.coin()) n.annotation = "e.g. time travel, friendship";
        return n;
    }

    std::vector<TemplateNode> sequence(int depth, bool allow_empty) {
        std::vector<TemplateNode> seq;
        const size_t len = (allow_empty ? 0 : 1) + rng.bounded(3);
        bool last_was_literal = false;
        for (size_t i = 0; i < len; ++i) {
            const uint64_t pick = depth >= 4 ? rng.bounded(2) : rng.bounded(4);
            TemplateNode node;
            switch (pick) {
                case 0:
                    if (last_was_literal) {
                        node = slot();
                        break;
                    }
                    node = literal();
                    break;
                case 1: node = slot(); break;
                case 2: node = alternation(depth + 1); break;
                default: node = optional(depth + 1); break;
            }
            last_was_literal = node.kind == TemplateNode::Kind::literal;
            seq.push_back(std::move(node));
        }
        return seq;
    }

    TemplateNode alternation(int depth) {
        TemplateNode n;
        n.kind = TemplateNode::Kind::alternation;
        const size_t branches = 2 + rng.bounded(2);
        for (size_t b = 0; b < branches; ++b) {
            n.branches.push_back(sequence(depth, /*allow_empty=*/false));
        }
        return n;
    }

    TemplateNode optional(int depth) {
        TemplateNode n;
        n.kind = TemplateNode::Kind::optional_group;
        n.branches.push_back(sequence(depth, /*allow_empty=*/true));
        return n;
    }

    TemplateAst ast() {
        TemplateAst a;
        a.nodes = sequence(1, /*allow_empty=*/true);
        return a;
    }
};

// Templates whose every choice point carries a globally unique token, so
// expansion combinations map 1:1 onto distinct strings.
struct DistinctTemplateGen {
    SplitMix64 rng;
    int next_token = 0;
    SlotRegistry* registry;
    int next_slot = 0;

    DistinctTemplateGen(uint64_t seed, SlotRegistry* reg) : rng(seed), registry(reg) {}

    std::string token() { return "tk" + std::to_string(next_token++); }

    TemplateNode unique_literal() {
        TemplateNode n;
        n.kind = TemplateNode::Kind::literal;
        n.text = " " + token() + " ";
        return n;
    }

    std::vector<TemplateNode> sequence(int depth) {
        std::vector<TemplateNode> seq;
        seq.push_back(unique_literal());
        const size_t extra = rng.bounded(3);
        for (size_t i = 0; i < extra; ++i) {
            const uint64_t pick = depth >= 3 ? rng.bounded(2) : rng.bounded(4);
            switch (pick) {
                case 0: {
                    const std::string name = "s" + std::to_string(next_slot++);
                    std::vector<std::string> domain;
                    const size_t size = 1 + rng.bounded(3);
                    for (size_t v = 0; v < size; ++v) domain.push_back(token());
                    registry->register_literal_slot(name, domain);
                    TemplateNode slot;
                    slot.kind = TemplateNode::Kind::slot;
                    slot.slot_name = name;
                    seq.push_back(std::move(slot));
                    break;
                }
                case 1:
                    seq.push_back(unique_literal());
                    break;
                case 2: {
                    TemplateNode alt;
                    alt.kind = TemplateNode::Kind::alternation;
                    const size_t branches = 2 + rng.bounded(2);
                    for (size_t b = 0; b < branches; ++b) alt.branches.push_back(sequence(depth + 1));
                    seq.push_back(std::move(alt));
                    break;
                }
                default: {
                    TemplateNode opt;
                    opt.kind = TemplateNode::Kind::optional_group;
                    opt.branches.push_back(sequence(depth + 1));
                    seq.push_back(std::move(opt));
                    break;
                }
            }
        }
        return seq;
    }

    TemplateAst ast() {
        TemplateAst a;
        a.nodes = sequence(1);
        return a;
    }
};

}  // namespace

TEST_CASE("the recommendation template parses to literal, slot, literal") {
    const auto ast = parse_template("I loved [movie title]. Any recommendations along those lines?");
    REQUIRE(ast.nodes.size() == 3);
    CHECK(ast.nodes[0].kind == TemplateNode::Kind::literal);
    CHECK(ast.nodes[0].text == "I loved ");
    CHECK(ast.nodes[1].kind == TemplateNode::Kind::slot);
    CHECK(ast.nodes[1].slot_name == "movie title");
    CHECK(ast.nodes[2].text == ". Any recommendations along those lines?");
}

TEST_CASE("a plain sentence is a single literal") {
    const auto ast = parse_template("Hello.");
    REQUIRE(ast.nodes.size() == 1);
    CHECK(ast.nodes[0].kind == TemplateNode::Kind::literal);
    CHECK(template_slots(ast).empty());
}

TEST_CASE("alternation plus slot hand-parse") {
    const auto ast = parse_template("{Hi|Hey} [genre]");
    REQUIRE(ast.nodes.size() == 3);
    CHECK(ast.nodes[0].kind == TemplateNode::Kind::alternation);
    REQUIRE(ast.nodes[0].branches.size() == 2);
    CHECK(ast.nodes[0].branches[0][0].text == "Hi");
    CHECK(ast.nodes[0].branches[1][0].text == "Hey");
    CHECK(ast.nodes[1].kind == TemplateNode::Kind::literal);
    CHECK(ast.nodes[1].text == " ");
    CHECK(ast.nodes[2].kind == TemplateNode::Kind::slot);
    CHECK(ast.nodes[2].slot_name == "genre");
}

TEST_CASE("slot hints split on the first comma and stay as annotation") {
    const auto ast = parse_template("Can you recommend a movie about [plot theme, e.g., time travel, friendship]?");
    REQUIRE(ast.nodes.size() == 3);
    CHECK(ast.nodes[1].slot_name == "plot theme");
    CHECK(ast.nodes[1].annotation == "e.g., time travel, friendship");
}

TEST_CASE("escapes make brackets literal") {
    const auto ast = parse_template("not \\[a slot\\] and not \\{alt\\}");
    REQUIRE(ast.nodes.size() == 1);
    CHECK(ast.nodes[0].text == "not [a slot] and not {alt}");

    // Bare parentheses and pipes outside constructs stay literal.
    const auto bare = parse_template("The Film (2004) a|b");
    REQUIRE(bare.nodes.size() == 1);
    CHECK(bare.nodes[0].text == "The Film (2004) a|b");
}

TEST_CASE("parse errors carry position and code") {
    auto code_of = [](const std::string& src) {
        try {
            parse_template(src);
        } catch (const GrammarError& e) {
            return e.code;
        }
        return GrammarError::Code::missing_slot_value;  // sentinel for "no throw"
    };
    CHECK(code_of("[unclosed") == GrammarError::Code::unbalanced_bracket);
    CHECK(code_of("{a|b") == GrammarError::Code::unbalanced_bracket);
    CHECK(code_of("(?oops") == GrammarError::Code::unbalanced_bracket);
    CHECK(code_of("[]") == GrammarError::Code::empty_slot_name);
    CHECK(code_of("[ , hint]") == GrammarError::Code::empty_slot_name);
    CHECK(code_of("{a|}") == GrammarError::Code::empty_alternation_branch);
    CHECK(code_of("{|a}") == GrammarError::Code::empty_alternation_branch);
    CHECK(code_of("{only}") == GrammarError::Code::single_branch_alternation);
    CHECK(code_of("{a|{b|{c|{d|{e|f}}}}}") == GrammarError::Code::nesting_too_deep);
    CHECK(code_of("dangling\\") == GrammarError::Code::unbalanced_bracket);

    try {
        parse_template("ok [");
        FAIL("expected throw");
    } catch (const GrammarError& e) {
        CHECK(e.position == 3);
    }
}

TEST_CASE("nesting to depth 4 is accepted") {
    CHECK_NOTHROW(parse_template("{a|{b|{c|{d|e}}}}"));
}

TEST_CASE("expansion cardinality worked examples") {
    SlotRegistry reg;
    reg.register_literal_slot("g", {"a", "b", "c"});

    CHECK(expansion_cardinality(parse_template("Hello."), reg) == 1);

    const auto alt = parse_template("{Hi|Hey} [g]");
    CHECK(expansion_cardinality(alt, reg) == 6);
    // Brute-force enumeration agrees: 6 distinct strings.
    const auto all = oracle::enumerate_template(alt, reg);
    CHECK(std::set<std::string>(all.begin(), all.end()).size() == 6);

    const auto opt = parse_template("(?really )good");
    CHECK(expansion_cardinality(opt, reg) == 2);
    const auto opt_all = oracle::enumerate_template(opt, reg);
    CHECK(std::set<std::string>(opt_all.begin(), opt_all.end()) ==
          std::set<std::string>{"good", "really good"});
}

TEST_CASE("cardinality rejects unregistered and graph-backed slots") {
    SlotRegistry reg;
    reg.register_graph_slot("genre", SlotKind::genre);
    CHECK_THROWS_AS(expansion_cardinality(parse_template("[mystery]"), reg), GrammarError);
    try {
        expansion_cardinality(parse_template("[genre]"), reg);
        FAIL("expected throw");
    } catch (const GrammarError& e) {
        CHECK(e.code == GrammarError::Code::unbounded_slot);
    }
}

TEST_CASE("fill substitutes seeds and preserves literal whitespace") {
    const auto ast = parse_template("I loved [movie title]. Any recommendations along those lines?");
    SeedTuple seed;
    seed.assignments["movie title"] = "Forrest Gump";
    SplitMix64 rng(1);
    CHECK(fill(ast, seed, rng) == "I loved Forrest Gump. Any recommendations along those lines?");
}

TEST_CASE("zero-slot template fills to its literal text") {
    SeedTuple seed;
    SplitMix64 rng(9);
    CHECK(fill(parse_template("Hello there."), seed, rng) == "Hello there.");
}

TEST_CASE("fill is deterministic for a fixed rng seed") {
    const auto ast = parse_template("{Hi|Hey}(?, friend)");
    SeedTuple seed;
    SplitMix64 a(42), b(42);
    CHECK(fill(ast, seed, a) == fill(ast, seed, b));
}

TEST_CASE("fill reports the missing slot by name") {
    const auto ast = parse_template("[who]?");
    SeedTuple seed;
    SplitMix64 rng(0);
    try {
        fill(ast, seed, rng);
        FAIL("expected throw");
    } catch (const GrammarError& e) {
        CHECK(e.code == GrammarError::Code::missing_slot_value);
        CHECK(std::string(e.what()).find("who") != std::string::npos);
    }
}

TEST_CASE("round-trip: parse(canonical_render(ast)) == ast for 1000 random ASTs") {
    for (uint64_t seed = 0; seed < 1000; ++seed) {
        AstGen gen(seed);
        const TemplateAst ast = gen.ast();
        const std::string source = canonical_render(ast);
        CAPTURE(source);
        const TemplateAst round = parse_template(source);
        CHECK(round == ast);
    }
}

TEST_CASE("exhaustive expansion count equals cardinality for 100 random templates") {
    int verified = 0;
    uint64_t seed = 0;
    while (verified < 100) {
        SlotRegistry reg;
        DistinctTemplateGen gen(seed++, &reg);
        const TemplateAst ast = gen.ast();
        const uint64_t card = expansion_cardinality(ast, reg);
        if (card > 1000) continue;
        const auto all = oracle::enumerate_template(ast, reg);
        const std::set<std::string> distinct(all.begin(), all.end());
        CAPTURE(canonical_render(ast));
        CHECK(distinct.size() == card);
        CHECK(all.size() == card);
        ++verified;
    }
}

TEST_CASE("fill output of clean templates has no unconsumed metacharacters") {
    for (uint64_t seed = 0; seed < 50; ++seed) {
        SlotRegistry reg;
        DistinctTemplateGen gen(seed + 5000, &reg);
        const TemplateAst ast = gen.ast();
        SeedTuple tuple;
        for (const auto& name : template_slots(ast)) {
            tuple.assignments[name] = reg.lookup(name).domain.front();
        }
        SplitMix64 rng(seed);
        const std::string out = fill(ast, tuple, rng);
        CHECK(out.find('[') == std::string::npos);
        CHECK(out.find('{') == std::string::npos);
        CHECK(out.find("(?") == std::string::npos);
    }
}

TEST_CASE("escaped metacharacters do appear in fill output") {
    SeedTuple seed;
    SplitMix64 rng(0);
    CHECK(fill(parse_template("literal \\[brackets\\]"), seed, rng) == "literal [brackets]");
}

TEST_CASE("template packs skip comments and blanks and number templates 1-based") {
    const std::string pack =
        "# a comment\n"
        "\n"
        "#! intent=rec\n"
        "I loved [movie title]. Any recommendations along those lines?\n"
        "\r\n"
        "{Hi|Hey} [genre]\n"
        "# trailing comment";
    const auto templates = load_template_pack(pack);
    REQUIRE(templates.size() == 2);
    CHECK(templates[0].id == 1);
    CHECK(templates[0].source == "I loved [movie title]. Any recommendations along those lines?");
    CHECK(templates[1].id == 2);
    CHECK(template_slots(templates[1].ast) == std::vector<std::string>{"genre"});
}
