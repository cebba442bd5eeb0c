#pragma once

#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "convrec/catalog.hpp"

namespace convrec {

struct RetrievalError : std::runtime_error {
    enum class Code { empty_text, empty_query, bad_index_file, provider_failure };
    Code code;
    RetrievalError(Code c, const std::string& msg) : std::runtime_error(msg), code(c) {}
};

inline constexpr size_t k_default_embedding_dim = 256;

// Deterministic feature-hashing embedder: case-fold + punctuation-strip
// tokenization, FNV-1a 64 per token, bucket = hash mod d, sign from bit 63,
// counts accumulated and L2-normalized. Throws empty_text when tokenization
// yields nothing.
std::vector<float> embed_hashed(std::string_view text, size_t dim = k_default_embedding_dim);

class EmbeddingProvider {
public:
    enum class Kind { hashed_local, external_endpoint };

    virtual ~EmbeddingProvider() = default;
    virtual Kind kind() const = 0;
    virtual size_t dimension() const = 0;
    virtual std::vector<float> embed(std::string_view text) = 0;
};

class HashedEmbeddingProvider final : public EmbeddingProvider {
public:
    explicit HashedEmbeddingProvider(size_t dim = k_default_embedding_dim) : dim_(dim) {}
    Kind kind() const override { return Kind::hashed_local; }
    size_t dimension() const override { return dim_; }
    std::vector<float> embed(std::string_view text) override { return embed_hashed(text, dim_); }

private:
    size_t dim_;
};

// Calls an OpenAI-compatible `/v1/embeddings` endpoint; bearer token from
// LLM_API_KEY. Only plain-http endpoints are supported in this build.
class EndpointEmbeddingProvider final : public EmbeddingProvider {
public:
    EndpointEmbeddingProvider(std::string base_url, std::string model, size_t dim);
    Kind kind() const override { return Kind::external_endpoint; }
    size_t dimension() const override { return dim_; }
    std::vector<float> embed(std::string_view text) override;

private:
    std::string base_url_;
    std::string model_;
    size_t dim_;
};

struct CatalogIndex {
    size_t dim = 0;
    std::vector<std::string> record_ids;
    std::vector<std::vector<float>> vectors;  // unit norm, parallel to record_ids
};

// Document text per record is title + genres + themes + plot. Vectors come
// back unit-normalized; provider errors are rethrown with the record id.
CatalogIndex index_catalog(const std::vector<MediaRecord>& records, EmbeddingProvider& provider);

// Query profile = entity values + free text. Top-k by cosine score
// descending, ties broken by record_id ascending.
std::vector<std::pair<std::string, float>> rank(const CatalogIndex& index,
                                                const std::map<std::string, std::vector<std::string>>& query_entities,
                                                std::string_view free_text, size_t k);

// Binary persistence: little-endian header (magic "CRFI", version u16, d u32,
// count u64), then per record a u32-length-prefixed UTF-8 id and d f32 values.
std::string serialize_index(const CatalogIndex& index);
CatalogIndex deserialize_index(std::string_view bytes);

}  // namespace convrec
