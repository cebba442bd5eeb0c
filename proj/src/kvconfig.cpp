#include "convrec/kvconfig.hpp"

#include <algorithm>

#include "convrec/text.hpp"

namespace convrec {

KvDocument KvDocument::parse(std::string_view text) {
    KvDocument doc;
    size_t pos = 0;
    while (pos < text.size()) {
        size_t eol = text.find('\n', pos);
        if (eol == std::string_view::npos) eol = text.size();
        const std::string line = text::trim(text.substr(pos, eol - pos));
        pos = eol + 1;
        if (line.empty() || line.front() == '#') continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos) continue;
        doc.entries.emplace_back(text::trim(std::string_view(line).substr(0, eq)),
                                 text::trim(std::string_view(line).substr(eq + 1)));
    }
    return doc;
}

std::optional<std::string> KvDocument::get(std::string_view key) const {
    std::optional<std::string> found;
    for (const auto& [k, v] : entries) {
        if (k == key) found = v;
    }
    return found;
}

std::string KvDocument::get_or(std::string_view key, std::string_view fallback) const {
    auto v = get(key);
    return v ? *v : std::string(fallback);
}

std::vector<std::pair<std::string, std::string>> KvDocument::with_prefix(std::string_view prefix) const {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& [k, v] : entries) {
        if (k.size() > prefix.size() && k.compare(0, prefix.size(), prefix) == 0) {
            out.emplace_back(k.substr(prefix.size()), v);
        }
    }
    return out;
}

std::vector<std::string> KvDocument::segments_under(std::string_view prefix) const {
    std::vector<std::string> out;
    for (const auto& [rest, v] : with_prefix(prefix)) {
        (void)v;
        const size_t dot = rest.find('.');
        std::string seg = dot == std::string::npos ? rest : rest.substr(0, dot);
        if (std::find(out.begin(), out.end(), seg) == out.end()) {
            out.push_back(seg);
        }
    }
    return out;
}

}  // namespace convrec
