#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace convrec {

// Flat key/value configuration document: one `key = value` per line,
// `#` comment lines and blank lines ignored, keys and values trimmed.
// Keys may contain spaces and dots (dots are used as a section convention,
// e.g. `source.tmdb.map.title`). Order is preserved; duplicate keys keep the
// last value on lookup.
struct KvDocument {
    std::vector<std::pair<std::string, std::string>> entries;

    static KvDocument parse(std::string_view text);

    std::optional<std::string> get(std::string_view key) const;
    std::string get_or(std::string_view key, std::string_view fallback) const;

    // Entries whose key starts with `prefix`, with the prefix removed.
    std::vector<std::pair<std::string, std::string>> with_prefix(std::string_view prefix) const;

    // Distinct first path segments among keys starting with `prefix`,
    // in first-seen order. `with_prefix("source.")` + `segments_under("source.")`
    // together enumerate config sections.
    std::vector<std::string> segments_under(std::string_view prefix) const;
};

}  // namespace convrec
