#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

// Shared text helpers. All normalization here is byte-level and ASCII-only:
// bytes >= 0x80 pass through untouched, which keeps every operation
// deterministic and locale-independent.
namespace convrec::text {

// ASCII lowercase; non-ASCII bytes unchanged.
std::string to_lower(std::string_view s);

// Trim ends and collapse internal whitespace runs to a single space.
std::string collapse_whitespace(std::string_view s);

// Replace ASCII punctuation with spaces (so "state-of-the-art" splits into
// words rather than fusing).
std::string strip_punctuation(std::string_view s);

// Case-fold + punctuation-strip + whitespace-collapse. This is the prompt
// normalization used by dedupe, diversity and the hashed embedder.
std::string normalize_prompt(std::string_view s);

// normalize_prompt followed by a whitespace split.
std::vector<std::string> tokenize(std::string_view s);

std::string trim(std::string_view s);

// Raw split on a single delimiter; fields are not trimmed.
std::vector<std::string> split(std::string_view s, char delim);

uint64_t fnv1a64(std::string_view s);

}  // namespace convrec::text
