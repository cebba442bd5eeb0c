#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "convrec/catalog.hpp"

namespace convrec::testutil {

inline MediaRecord make_record(std::string title, std::optional<int> year,
                               std::set<std::string> genres = {},
                               std::set<std::string> themes = {},
                               std::vector<std::string> cast = {},
                               std::vector<std::string> directors = {},
                               std::optional<std::string> plot = std::nullopt,
                               std::string source = "test") {
    MediaRecord r;
    r.record_id = source + ":" + title;
    r.title = std::move(title);
    r.year = year;
    r.genres = std::move(genres);
    r.themes = std::move(themes);
    r.cast = std::move(cast);
    r.directors = std::move(directors);
    r.plot = std::move(plot);
    r.source_id = std::move(source);
    return r;
}

}  // namespace convrec::testutil
