#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "coderag/scoring.hpp"

namespace coderag {

struct EmbeddingProviderConfig {
    std::string base_url;  // e.g. http://localhost:8080/v1
    std::string model;
    int token_limit = 512;                        // inputs truncated from the right
    std::int64_t max_tokens_per_request = 120000;  // batch size bound
    std::string cache_dir;                         // empty disables persistence
    bool use_cache = true;
    int retry_attempts = 3;
    int retry_base_ms = 250;
    std::string api_key_env = "EMBED_API_KEY";
};

// Right truncation by the 4-characters-per-token heuristic; the wire
// protocol does not report provider token counts.
std::string truncate_to_token_limit(std::string_view text, int token_limit);
std::int64_t estimate_tokens(std::string_view text);

/// Client for the POST {base_url}/embeddings protocol:
///   request  {"model": str, "input": [str, ...]}
///   response {"data": [{"index": int, "embedding": [number, ...]}, ...]}
/// Batches are sized to the provider token budget, transport failures are
/// retried with exponential backoff, and vectors are cached on disk keyed
/// by (provider, content hash).
class EmbeddingClient {
public:
    explicit EmbeddingClient(EmbeddingProviderConfig config);
    ~EmbeddingClient();

    // Vectors in input order. Throws after exhausting retries or on a
    // dimension mismatch within the result set.
    std::vector<EmbeddingVector> embed_texts(const std::vector<std::string>& texts,
                                             bool bypass_cache = false);

    const EmbeddingProviderConfig& config() const { return config_; }
    std::string provider_id() const;

private:
    std::vector<EmbeddingVector> request_batch(const std::vector<std::string>& inputs);
    std::optional<EmbeddingVector> cache_get(std::uint64_t key) const;
    void cache_put(std::uint64_t key, const EmbeddingVector& vec);
    void load_cache_file();
    std::string cache_file_path() const;

    EmbeddingProviderConfig config_;
    mutable std::mutex cache_mutex_;
    std::unordered_map<std::uint64_t, EmbeddingVector> cache_;
    bool cache_loaded_ = false;
};

}  // namespace coderag
