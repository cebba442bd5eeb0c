#include "convrec/catalog.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

#include <nlohmann/json.hpp>

#include "convrec/text.hpp"

namespace convrec {

namespace {

using json = nlohmann::json;

std::string fold(std::string_view s) { return text::to_lower(text::collapse_whitespace(s)); }

// Case-insensitive name dedupe keeping the lexicographically least spelling,
// output sorted case-insensitively (exact string breaks ties). Keeps
// merge_catalogs independent of input order.
std::vector<std::string> union_names(const std::vector<std::vector<std::string>>& lists) {
    std::map<std::string, std::string> by_fold;
    for (const auto& list : lists) {
        for (const auto& name : list) {
            const std::string key = fold(name);
            auto it = by_fold.find(key);
            if (it == by_fold.end() || name < it->second) {
                by_fold[key] = name;
            }
        }
    }
    std::vector<std::string> out;
    out.reserve(by_fold.size());
    for (auto& [k, v] : by_fold) {
        (void)k;
        out.push_back(v);
    }
    std::sort(out.begin(), out.end(), [](const std::string& a, const std::string& b) {
        const std::string fa = fold(a), fb = fold(b);
        return fa != fb ? fa < fb : a < b;
    });
    return out;
}

std::optional<int> parse_year(std::string_view cell, std::string* why) {
    const std::string t = text::trim(cell);
    if (t.empty()) return std::nullopt;
    int value = 0;
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
    if (ec != std::errc() || ptr != t.data() + t.size()) {
        *why = "unparsed year \"" + t + "\"";
        return std::nullopt;
    }
    if (value < k_year_min || value > k_year_max) {
        *why = "year " + t + " out of range";
        return std::nullopt;
    }
    return value;
}

std::vector<std::string> split_list(std::string_view cell, char delim) {
    std::vector<std::string> out;
    for (const auto& part : text::split(cell, delim)) {
        std::string t = text::trim(part);
        if (!t.empty()) out.push_back(std::move(t));
    }
    return out;
}

}  // namespace

std::vector<std::vector<std::string>> parse_delimited(std::string_view raw, char delimiter) {
    // Strip a UTF-8 BOM if present.
    if (raw.size() >= 3 && raw.substr(0, 3) == "\xEF\xBB\xBF") {
        raw.remove_prefix(3);
    }
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool in_quotes = false;
    bool row_started = false;

    auto end_field = [&] {
        row.push_back(std::move(field));
        field.clear();
    };
    auto end_row = [&] {
        end_field();
        rows.push_back(std::move(row));
        row.clear();
        row_started = false;
    };

    for (size_t i = 0; i < raw.size(); ++i) {
        const char c = raw[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < raw.size() && raw[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                field.push_back(c);
            }
            continue;
        }
        if (c == '"' && field.empty()) {
            in_quotes = true;
            row_started = true;
        } else if (c == delimiter) {
            end_field();
            row_started = true;
        } else if (c == '\n') {
            if (row_started || !field.empty()) end_row();
        } else if (c == '\r') {
            // Consumed as part of CRLF; a bare CR also ends the row.
            if (i + 1 < raw.size() && raw[i + 1] == '\n') continue;
            if (row_started || !field.empty()) end_row();
        } else {
            field.push_back(c);
            row_started = true;
        }
    }
    if (row_started || !field.empty()) end_row();
    return rows;
}

ParsedCatalog parse_catalog(std::string_view raw, const SourceDescriptor& desc) {
    const auto rows = parse_delimited(raw, desc.field_delimiter);
    if (rows.empty()) {
        throw CatalogError(CatalogError::Code::missing_header, "no header row in source \"" + desc.source_id + "\"");
    }
    const auto& header = rows.front();

    std::map<std::string, size_t> column_of;  // canonical field -> column index
    for (const auto& [field_name, column_name] : desc.field_mapping) {
        auto it = std::find(header.begin(), header.end(), column_name);
        if (it == header.end()) {
            throw CatalogError(CatalogError::Code::mapping_mismatch,
                               "column \"" + column_name + "\" (mapped to " + field_name +
                                   ") not in header of source \"" + desc.source_id + "\"");
        }
        column_of[field_name] = static_cast<size_t>(it - header.begin());
    }
    if (!column_of.count("title")) {
        throw CatalogError(CatalogError::Code::mapping_mismatch,
                           "source \"" + desc.source_id + "\" does not map the title field");
    }

    ParsedCatalog out;
    for (size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        const size_t row_no = r;  // 1-based data row
        auto cell = [&](const std::string& field) -> std::string_view {
            auto it = column_of.find(field);
            if (it == column_of.end() || it->second >= row.size()) return {};
            return row[it->second];
        };

        MediaRecord rec;
        rec.source_id = desc.source_id;
        rec.record_id = desc.source_id + ":" + std::to_string(row_no);
        rec.title = text::collapse_whitespace(cell("title"));
        if (rec.title.empty()) {
            out.issues.push_back({row_no, "missing or empty title"});
            continue;
        }

        std::string why;
        rec.year = parse_year(cell("year"), &why);
        if (!why.empty()) out.issues.push_back({row_no, why});

        for (const auto& g : split_list(cell("genres"), desc.list_delimiter)) {
            rec.genres.insert(text::to_lower(g));
        }
        for (const auto& t : split_list(cell("themes"), desc.list_delimiter)) {
            rec.themes.insert(text::to_lower(t));
        }
        rec.cast = split_list(cell("cast"), desc.list_delimiter);
        rec.directors = split_list(cell("directors"), desc.list_delimiter);

        const std::string plot = text::trim(cell("plot"));
        if (!plot.empty()) rec.plot = plot;

        out.records.push_back(normalize_record(rec));
    }
    return out;
}

MediaRecord normalize_record(const MediaRecord& r) {
    MediaRecord out = r;
    out.title = text::collapse_whitespace(r.title);
    if (out.title.empty()) {
        throw CatalogError(CatalogError::Code::empty_title,
                           "record " + r.record_id + " has an empty title after normalization");
    }
    out.genres.clear();
    for (const auto& g : r.genres) {
        const std::string v = text::to_lower(text::trim(g));
        if (!v.empty()) out.genres.insert(v);
    }
    out.themes.clear();
    for (const auto& t : r.themes) {
        const std::string v = text::to_lower(text::trim(t));
        if (!v.empty()) out.themes.insert(v);
    }
    auto trim_names = [](const std::vector<std::string>& names) {
        std::vector<std::string> out_names;
        for (const auto& n : names) {
            std::string v = text::collapse_whitespace(n);
            if (!v.empty()) out_names.push_back(std::move(v));
        }
        return out_names;
    };
    out.cast = trim_names(r.cast);
    out.directors = trim_names(r.directors);
    if (out.plot) {
        const std::string p = text::trim(*out.plot);
        if (p.empty()) {
            out.plot.reset();
        } else {
            out.plot = p;
        }
    }
    return out;
}

std::vector<MediaRecord> merge_catalogs(const std::vector<std::vector<MediaRecord>>& catalogs) {
    using Key = std::pair<std::string, std::optional<int>>;
    std::map<Key, std::vector<const MediaRecord*>> groups;
    for (const auto& catalog : catalogs) {
        for (const auto& rec : catalog) {
            groups[{fold(rec.title), rec.year}].push_back(&rec);
        }
    }

    std::vector<MediaRecord> merged;
    merged.reserve(groups.size());
    for (const auto& [key, members] : groups) {
        MediaRecord out;
        out.title = members.front()->title;
        out.year = key.second;

        std::vector<std::vector<std::string>> casts, directors;
        std::set<std::string> sources;
        for (const auto* m : members) {
            if (m->title < out.title) out.title = m->title;
            out.genres.insert(m->genres.begin(), m->genres.end());
            out.themes.insert(m->themes.begin(), m->themes.end());
            casts.push_back(m->cast);
            directors.push_back(m->directors);
            sources.insert(m->source_id);
            if (m->plot) {
                if (!out.plot || m->plot->size() > out.plot->size() ||
                    (m->plot->size() == out.plot->size() && *m->plot < *out.plot)) {
                    out.plot = m->plot;
                }
            }
        }
        out.cast = union_names(casts);
        out.directors = union_names(directors);

        std::string joined_sources;
        for (const auto& s : sources) {
            if (!joined_sources.empty()) joined_sources += "+";
            joined_sources += s;
        }
        out.source_id = joined_sources;

        std::ostringstream id;
        id << "m" << std::hex << text::fnv1a64(key.first + "\x1f" + (key.second ? std::to_string(*key.second) : ""));
        out.record_id = id.str();
        merged.push_back(std::move(out));
    }
    // std::map iteration already gives (folded title, year) order; nullopt
    // years sort before concrete years via std::optional ordering.
    return merged;
}

std::string catalog_to_jsonl(const std::vector<MediaRecord>& records) {
    std::string out;
    for (const auto& r : records) {
        json j;
        j["record_id"] = r.record_id;
        j["title"] = r.title;
        if (r.year) {
            j["year"] = *r.year;
        } else {
            j["year"] = nullptr;
        }
        j["genres"] = r.genres;
        j["cast"] = r.cast;
        j["directors"] = r.directors;
        if (r.plot) {
            j["plot"] = *r.plot;
        } else {
            j["plot"] = nullptr;
        }
        j["themes"] = r.themes;
        j["source_id"] = r.source_id;
        out += j.dump();
        out += "\n";
    }
    return out;
}

std::vector<MediaRecord> catalog_from_jsonl(std::string_view text_in) {
    std::vector<MediaRecord> out;
    size_t pos = 0;
    size_t line_no = 0;
    while (pos < text_in.size()) {
        size_t eol = text_in.find('\n', pos);
        if (eol == std::string_view::npos) eol = text_in.size();
        const std::string line = text::trim(text_in.substr(pos, eol - pos));
        pos = eol + 1;
        ++line_no;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& ex) {
            throw CatalogError(CatalogError::Code::missing_header,
                               "catalog line " + std::to_string(line_no) + ": " + ex.what());
        }
        MediaRecord r;
        r.record_id = j.value("record_id", "");
        r.title = j.value("title", "");
        if (j.contains("year") && !j["year"].is_null()) r.year = j["year"].get<int>();
        if (j.contains("genres")) r.genres = j["genres"].get<std::set<std::string>>();
        if (j.contains("cast")) r.cast = j["cast"].get<std::vector<std::string>>();
        if (j.contains("directors")) r.directors = j["directors"].get<std::vector<std::string>>();
        if (j.contains("plot") && !j["plot"].is_null()) r.plot = j["plot"].get<std::string>();
        if (j.contains("themes")) r.themes = j["themes"].get<std::set<std::string>>();
        r.source_id = j.value("source_id", "");
        out.push_back(normalize_record(r));
    }
    return out;
}

}  // namespace convrec
