#pragma once

#include <string>
#include <string_view>

namespace convrec {

// SHA-256 digest as a lowercase hex string. Used to fingerprint transport
// requests for replay cassettes.
std::string sha256_hex(std::string_view data);

}  // namespace convrec
