#include "convrec/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "convrec/text.hpp"

namespace convrec {

namespace {

using json = nlohmann::json;

constexpr char k_index_magic[4] = {'C', 'R', 'F', 'I'};
constexpr uint16_t k_index_version = 1;

void put_u16(std::string& out, uint16_t v) {
    out.push_back(static_cast<char>(v & 0xFF));
    out.push_back(static_cast<char>((v >> 8) & 0xFF));
}

void put_u32(std::string& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string& out, uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

struct ByteReader {
    std::string_view bytes;
    size_t pos = 0;

    void need(size_t n) {
        if (pos + n > bytes.size()) {
            throw RetrievalError(RetrievalError::Code::bad_index_file, "truncated index file");
        }
    }
    uint16_t u16() {
        need(2);
        uint16_t v = uint16_t(uint8_t(bytes[pos])) | (uint16_t(uint8_t(bytes[pos + 1])) << 8);
        pos += 2;
        return v;
    }
    uint32_t u32() {
        need(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= uint32_t(uint8_t(bytes[pos + i])) << (8 * i);
        pos += 4;
        return v;
    }
    uint64_t u64() {
        need(8);
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= uint64_t(uint8_t(bytes[pos + i])) << (8 * i);
        pos += 8;
        return v;
    }
    std::string str(size_t n) {
        need(n);
        std::string v(bytes.substr(pos, n));
        pos += n;
        return v;
    }
    float f32() {
        const uint32_t raw = u32();
        float v;
        std::memcpy(&v, &raw, sizeof(v));
        return v;
    }
};

float dot(const std::vector<float>& a, const std::vector<float>& b) {
    float sum = 0.0f;
    for (size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
    return sum;
}

std::string record_document(const MediaRecord& r) {
    std::string doc = r.title;
    for (const auto& g : r.genres) {
        doc += " ";
        doc += g;
    }
    for (const auto& t : r.themes) {
        doc += " ";
        doc += t;
    }
    if (r.plot) {
        doc += " ";
        doc += *r.plot;
    }
    return doc;
}

}  // namespace

std::vector<float> embed_hashed(std::string_view text_in, size_t dim) {
    const auto tokens = text::tokenize(text_in);
    if (tokens.empty()) {
        throw RetrievalError(RetrievalError::Code::empty_text, "no tokens to embed");
    }
    std::vector<float> vec(dim, 0.0f);
    for (const auto& token : tokens) {
        const uint64_t h = text::fnv1a64(token);
        const size_t bucket = static_cast<size_t>(h % dim);
        const float sign = (h >> 63) ? -1.0f : 1.0f;
        vec[bucket] += sign;
    }
    double norm_sq = 0.0;
    for (float v : vec) norm_sq += double(v) * double(v);
    if (norm_sq == 0.0) {
        // Sign cancellation across colliding tokens; keep determinism by
        // falling back to an unsigned count on the first token's bucket.
        vec[static_cast<size_t>(text::fnv1a64(tokens.front()) % dim)] = 1.0f;
        norm_sq = 1.0;
    }
    const double inv = 1.0 / std::sqrt(norm_sq);
    for (float& v : vec) v = static_cast<float>(double(v) * inv);
    return vec;
}

EndpointEmbeddingProvider::EndpointEmbeddingProvider(std::string base_url, std::string model, size_t dim)
    : base_url_(std::move(base_url)), model_(std::move(model)), dim_(dim) {}

std::vector<float> EndpointEmbeddingProvider::embed(std::string_view text_in) {
    httplib::Client client(base_url_);
    client.set_connection_timeout(10);
    client.set_read_timeout(60);
    httplib::Headers headers;
    if (const char* key = std::getenv("LLM_API_KEY")) {
        headers.emplace("Authorization", std::string("Bearer ") + key);
    }
    const json body{{"model", model_}, {"input", std::string(text_in)}};
    auto res = client.Post("/v1/embeddings", headers, body.dump(), "application/json");
    if (!res || res->status != 200) {
        throw RetrievalError(RetrievalError::Code::provider_failure,
                             "embeddings endpoint failed: " +
                                 (res ? "HTTP " + std::to_string(res->status) : "no response"));
    }
    try {
        const json payload = json::parse(res->body);
        const auto& data = payload.at("data").at(0).at("embedding");
        std::vector<float> vec;
        vec.reserve(data.size());
        for (const auto& v : data) vec.push_back(v.get<float>());
        if (vec.size() != dim_) {
            throw RetrievalError(RetrievalError::Code::provider_failure,
                                 "endpoint returned dimension " + std::to_string(vec.size()) +
                                     ", expected " + std::to_string(dim_));
        }
        double norm_sq = 0.0;
        for (float v : vec) norm_sq += double(v) * double(v);
        if (norm_sq > 0.0) {
            const float inv = static_cast<float>(1.0 / std::sqrt(norm_sq));
            for (float& v : vec) v *= inv;
        }
        return vec;
    } catch (const json::exception& ex) {
        throw RetrievalError(RetrievalError::Code::provider_failure,
                             std::string("bad embeddings payload: ") + ex.what());
    }
}

CatalogIndex index_catalog(const std::vector<MediaRecord>& records, EmbeddingProvider& provider) {
    if (records.empty()) {
        throw RetrievalError(RetrievalError::Code::empty_text, "no records to index");
    }
    CatalogIndex index;
    index.dim = provider.dimension();
    index.record_ids.reserve(records.size());
    index.vectors.reserve(records.size());
    for (const auto& r : records) {
        try {
            index.vectors.push_back(provider.embed(record_document(r)));
        } catch (const RetrievalError& ex) {
            throw RetrievalError(ex.code, "record " + r.record_id + ": " + ex.what());
        }
        index.record_ids.push_back(r.record_id);
    }
    return index;
}

std::vector<std::pair<std::string, float>> rank(const CatalogIndex& index,
                                                const std::map<std::string, std::vector<std::string>>& query_entities,
                                                std::string_view free_text, size_t k) {
    std::string query;
    for (const auto& [cls, values] : query_entities) {
        (void)cls;
        for (const auto& v : values) {
            query += v;
            query += " ";
        }
    }
    query += free_text;
    if (text::tokenize(query).empty()) {
        throw RetrievalError(RetrievalError::Code::empty_query, "query profile is empty");
    }
    const auto qvec = embed_hashed(query, index.dim);

    std::vector<std::pair<std::string, float>> scored;
    scored.reserve(index.record_ids.size());
    for (size_t i = 0; i < index.record_ids.size(); ++i) {
        scored.emplace_back(index.record_ids[i], dot(qvec, index.vectors[i]));
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (scored.size() > k) scored.resize(k);
    return scored;
}

std::string serialize_index(const CatalogIndex& index) {
    std::string out;
    out.append(k_index_magic, sizeof(k_index_magic));
    put_u16(out, k_index_version);
    put_u32(out, static_cast<uint32_t>(index.dim));
    put_u64(out, index.record_ids.size());
    for (size_t i = 0; i < index.record_ids.size(); ++i) {
        const auto& id = index.record_ids[i];
        put_u32(out, static_cast<uint32_t>(id.size()));
        out += id;
        for (float v : index.vectors[i]) {
            uint32_t raw;
            std::memcpy(&raw, &v, sizeof(raw));
            put_u32(out, raw);
        }
    }
    return out;
}

CatalogIndex deserialize_index(std::string_view bytes) {
    ByteReader reader{bytes};
    if (reader.str(4) != std::string(k_index_magic, 4)) {
        throw RetrievalError(RetrievalError::Code::bad_index_file, "bad magic, not an index file");
    }
    const uint16_t version = reader.u16();
    if (version != k_index_version) {
        throw RetrievalError(RetrievalError::Code::bad_index_file,
                             "unsupported index version " + std::to_string(version));
    }
    CatalogIndex index;
    index.dim = reader.u32();
    const uint64_t count = reader.u64();
    for (uint64_t i = 0; i < count; ++i) {
        const uint32_t id_len = reader.u32();
        index.record_ids.push_back(reader.str(id_len));
        std::vector<float> vec(index.dim);
        for (size_t d = 0; d < index.dim; ++d) vec[d] = reader.f32();
        index.vectors.push_back(std::move(vec));
    }
    if (reader.pos != bytes.size()) {
        throw RetrievalError(RetrievalError::Code::bad_index_file, "trailing bytes in index file");
    }
    return index;
}

}  // namespace convrec
