#pragma once

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace convrec {

// Column layout of one ingest source. field_mapping maps canonical field
// names (title, year, genres, cast, directors, plot, themes) to the source's
// column names; "title" must be mapped. field_delimiter separates cells in
// the file (',' for CSV, '\t' for TSV); list_delimiter splits multi-valued
// cells like "Drama;Comedy".
struct SourceDescriptor {
    std::string source_id;
    std::map<std::string, std::string> field_mapping;
    char list_delimiter = ',';
    char field_delimiter = ',';
};

struct MediaRecord {
    std::string record_id;
    std::string title;
    std::optional<int> year;
    std::set<std::string> genres;
    std::vector<std::string> cast;
    std::vector<std::string> directors;
    std::optional<std::string> plot;
    std::set<std::string> themes;
    std::string source_id;

    bool operator==(const MediaRecord&) const = default;
};

// One parse problem; row is the 1-based data-row ordinal (header excluded).
struct RowIssue {
    size_t row = 0;
    std::string reason;
};

struct CatalogError : std::runtime_error {
    enum class Code { missing_header, mapping_mismatch, empty_title };
    Code code;
    CatalogError(Code c, const std::string& msg) : std::runtime_error(msg), code(c) {}
};

struct ParsedCatalog {
    std::vector<MediaRecord> records;
    std::vector<RowIssue> issues;
};

inline constexpr int k_year_min = 1870;
inline constexpr int k_year_max = 2100;

// Parse a delimited UTF-8 text file (RFC-4180-style quoting, '"' quote char,
// header row required). One record per parseable row; a missing or empty
// title rejects the row with an issue, any other bad field is dropped with
// an issue while the record is kept. Records come back normalized.
ParsedCatalog parse_catalog(std::string_view raw, const SourceDescriptor& desc);

// Collapse title whitespace, case-fold genres/themes, trim names. Idempotent.
// Throws CatalogError{empty_title} if the title is empty after cleanup.
MediaRecord normalize_record(const MediaRecord& r);

// Merge records across sources. Records sharing (case-folded title, year) are
// combined: genres/themes/cast/directors are unioned (people deduplicated
// case-insensitively and sorted, so the result does not depend on input
// order), the longest plot wins (ties by lexicographic order). Output is
// sorted by (case-folded title, year).
std::vector<MediaRecord> merge_catalogs(const std::vector<std::vector<MediaRecord>>& catalogs);

// Catalog persistence: JSON-lines, one record per line, keys sorted.
std::string catalog_to_jsonl(const std::vector<MediaRecord>& records);
std::vector<MediaRecord> catalog_from_jsonl(std::string_view text);

// RFC-4180 row splitter, exposed for the CLI and tests.
std::vector<std::vector<std::string>> parse_delimited(std::string_view raw, char delimiter);

}  // namespace convrec
