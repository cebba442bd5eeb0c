#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>

#include "convrec/catalog.hpp"
#include "convrec/rng.hpp"
#include "helpers.hpp"

using namespace convrec;
using testutil::make_record;

namespace {

SourceDescriptor test_descriptor() {
    SourceDescriptor desc;
    desc.source_id = "tmdb";
    desc.field_mapping = {
        {"title", "title"},          {"year", "release_year"}, {"genres", "listed_genres"},
        {"cast", "people"},          {"directors", "helmers"}, {"plot", "summary"},
        {"themes", "motifs"},
    };
    desc.list_delimiter = ';';
    desc.field_delimiter = ',';
    return desc;
}

constexpr const char* k_three_row_fixture =
    "title,release_year,listed_genres,people,helmers,summary,motifs\n"
    "Forrest Gump,1994,Drama;Romance,Tom Hanks;Robin Wright,Robert Zemeckis,"
    "\"A kind-hearted man from Alabama, witness to history\",friendship\n"
    "Dune,n/a,Sci-Fi;Adventure,Timothee Chalamet,Denis Villeneuve,"
    "Paul journeys to the desert planet Arrakis,destiny\n"
    ",2001,Comedy,,,,\n";

}  // namespace

TEST_CASE("parse_catalog on the 3-row fixture matches the hand-parsed expectation") {
    const auto result = parse_catalog(k_three_row_fixture, test_descriptor());

    // Hand parse: row 1 clean, row 2 keeps the record but loses the year,
    // row 3 has no title and is rejected.
    REQUIRE(result.records.size() == 2);
    REQUIRE(result.issues.size() == 2);

    const auto& gump = result.records[0];
    CHECK(gump.title == "Forrest Gump");
    CHECK(gump.year == 1994);
    CHECK(gump.genres == std::set<std::string>{"drama", "romance"});
    CHECK(gump.cast == std::vector<std::string>{"Tom Hanks", "Robin Wright"});
    CHECK(gump.directors == std::vector<std::string>{"Robert Zemeckis"});
    CHECK(gump.plot == "A kind-hearted man from Alabama, witness to history");
    CHECK(gump.themes == std::set<std::string>{"friendship"});
    CHECK(gump.record_id == "tmdb:1");
    CHECK(gump.source_id == "tmdb");

    const auto& dune = result.records[1];
    CHECK(dune.title == "Dune");
    CHECK(!dune.year.has_value());

    CHECK(result.issues[0].row == 2);
    CHECK(result.issues[0].reason.find("year") != std::string::npos);
    CHECK(result.issues[1].row == 3);
    CHECK(result.issues[1].reason.find("title") != std::string::npos);
}

TEST_CASE("header-only file yields empty output") {
    const auto result = parse_catalog("title,release_year,listed_genres,people,helmers,summary,motifs\n",
                                      test_descriptor());
    CHECK(result.records.empty());
    CHECK(result.issues.empty());
}

TEST_CASE("every data row lands as a record or an issue when errors reject rows") {
    const std::string raw =
        "title,release_year,listed_genres,people,helmers,summary,motifs\n"
        "Alien,1979,,,,,\n"
        ",1980,,,,,\n"
        "   ,1981,,,,,\n"
        "Blade Runner,1982,,,,,\n";
    const auto result = parse_catalog(raw, test_descriptor());
    CHECK(result.records.size() + result.issues.size() == 4);
    CHECK(result.records.size() == 2);
}

TEST_CASE("missing header and mapping mismatch") {
    CHECK_THROWS_WITH_AS(parse_catalog("", test_descriptor()), doctest::Contains("header"), CatalogError);

    SourceDescriptor bad = test_descriptor();
    bad.field_mapping["genres"] = "nonexistent_column";
    CHECK_THROWS_AS(parse_catalog(k_three_row_fixture, bad), CatalogError);

    SourceDescriptor titleless;
    titleless.source_id = "x";
    titleless.field_mapping = {{"year", "release_year"}};
    CHECK_THROWS_AS(parse_catalog(k_three_row_fixture, titleless), CatalogError);
}

TEST_CASE("rfc-4180 quoting") {
    SourceDescriptor desc;
    desc.source_id = "q";
    desc.field_mapping = {{"title", "t"}, {"plot", "p"}};
    const auto result = parse_catalog("t,p\n\"A, B\",\"He said \"\"hi\"\"\"\r\nPlain,done\n", desc);
    REQUIRE(result.records.size() == 2);
    CHECK(result.records[0].title == "A, B");
    CHECK(result.records[0].plot == "He said \"hi\"");
    CHECK(result.records[1].title == "Plain");
}

TEST_CASE("normalize_record examples") {
    auto r = make_record("  Forrest   Gump ", 1994);
    CHECK(normalize_record(r).title == "Forrest Gump");

    auto dup = make_record("Dune", 2021, {"Drama", "drama"});
    CHECK(normalize_record(dup).genres == std::set<std::string>{"drama"});

    auto clean = normalize_record(make_record("Dune", 2021, {"drama"}, {"destiny"}, {"Zendaya"}));
    CHECK(normalize_record(clean) == clean);

    CHECK_THROWS_AS(normalize_record(make_record("   ", 2000)), CatalogError);
}

TEST_CASE("normalize_record is idempotent on randomized records") {
    SplitMix64 rng(7);
    const std::vector<std::string> pieces = {"  The", "GREAT ", " escape\t", "Z", "  ", "mixed Case"};
    for (int i = 0; i < 200; ++i) {
        MediaRecord r;
        r.record_id = "r" + std::to_string(i);
        r.title = pieces[rng.bounded(pieces.size())] + " " + pieces[rng.bounded(pieces.size())] + "x";
        if (rng.coin()) r.year = 1900 + int(rng.bounded(200));
        for (int g = 0; g < 3; ++g) {
            if (rng.coin()) r.genres.insert(pieces[rng.bounded(pieces.size())] + "g");
        }
        for (int t = 0; t < 2; ++t) {
            if (rng.coin()) r.themes.insert(pieces[rng.bounded(pieces.size())]);
        }
        if (rng.coin()) r.cast.push_back("  some  Person ");
        if (rng.coin()) r.plot = "  a plot  ";
        const auto once = normalize_record(r);
        CHECK(normalize_record(once) == once);
    }
}

TEST_CASE("merge unions attribute sets for equal (title, year)") {
    const auto a = make_record("Dune", 2021, {"sci-fi"}, {"destiny"}, {"Timothee Chalamet"}, {}, "short", "tmdb");
    const auto b = make_record("dune", 2021, {"adventure"}, {}, {"Zendaya"}, {"Denis Villeneuve"},
                               "a longer plot text", "netflix");
    const auto merged = merge_catalogs({{a}, {b}});
    REQUIRE(merged.size() == 1);
    CHECK(merged[0].genres == std::set<std::string>{"adventure", "sci-fi"});
    CHECK(merged[0].themes == std::set<std::string>{"destiny"});
    CHECK(merged[0].cast == std::vector<std::string>{"Timothee Chalamet", "Zendaya"});
    CHECK(merged[0].directors == std::vector<std::string>{"Denis Villeneuve"});
    CHECK(merged[0].plot == "a longer plot text");
    CHECK(merged[0].source_id == "netflix+tmdb");
    // Lexicographically least original spelling wins ('D' < 'd').
    CHECK(merged[0].title == "Dune");
}

TEST_CASE("same title with different years stays separate") {
    const auto merged = merge_catalogs({{make_record("Dune", 1984), make_record("Dune", 2021)}});
    REQUIRE(merged.size() == 2);
    CHECK(merged[0].year == 1984);
    CHECK(merged[1].year == 2021);
}

TEST_CASE("single-catalog merge reorders canonically and keeps records") {
    const auto a = make_record("Zulu", 1964, {"war"});
    const auto b = make_record("Alien", 1979, {"horror"});
    const auto merged = merge_catalogs({{a, b}});
    REQUIRE(merged.size() == 2);
    CHECK(merged[0].title == "Alien");
    CHECK(merged[1].title == "Zulu");
    CHECK(merged[0].genres == b.genres);
}

TEST_CASE("merge is invariant under input permutation") {
    std::vector<MediaRecord> pool;
    for (int i = 0; i < 12; ++i) {
        pool.push_back(make_record("Movie " + std::to_string(i % 5), 2000 + (i % 3),
                                   {"g" + std::to_string(i % 4)}, {}, {"Actor " + std::to_string(i)}, {},
                                   std::string(size_t(i), 'p'), "s" + std::to_string(i % 2)));
    }
    const auto base = merge_catalogs({{pool.begin(), pool.begin() + 6}, {pool.begin() + 6, pool.end()}});
    std::mt19937 shuffle_rng(3);
    for (int round = 0; round < 10; ++round) {
        auto shuffled = pool;
        std::shuffle(shuffled.begin(), shuffled.end(), shuffle_rng);
        const auto again = merge_catalogs({{shuffled.begin(), shuffled.begin() + 4},
                                           {shuffled.begin() + 4, shuffled.end()}});
        CHECK(again == base);
    }
}

TEST_CASE("merged output never repeats a (title, year) key") {
    const auto merged = merge_catalogs({{make_record("A", 2000), make_record("a", 2000)},
                                        {make_record("A", 2000), make_record("A", 2001)}});
    std::set<std::pair<std::string, std::optional<int>>> keys;
    for (const auto& r : merged) {
        CHECK(keys.insert({r.title, r.year}).second);
    }
    CHECK(merged.size() == 2);
}

TEST_CASE("catalog jsonl round-trip") {
    const std::vector<MediaRecord> records = {
        make_record("Dune", 2021, {"sci-fi"}, {"destiny"}, {"Zendaya"}, {"Denis Villeneuve"}, "sand"),
        make_record("No Year", std::nullopt),
    };
    const auto round = catalog_from_jsonl(catalog_to_jsonl(records));
    CHECK(round == records);
}
