#include "coderag/embed_client.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "coderag/http_util.hpp"
#include "coderag/util.hpp"

namespace coderag {

using nlohmann::json;

std::string truncate_to_token_limit(std::string_view text, int token_limit) {
    if (token_limit <= 0) return std::string(text);
    std::size_t char_limit = static_cast<std::size_t>(token_limit) * 4;
    if (util::count_scalars(text) <= char_limit) return std::string(text);
    // Keep the prefix: cut after char_limit scalars, on a code point boundary.
    std::size_t count = 0;
    std::size_t i = 0;
    while (i < text.size() && count < char_limit) {
        ++i;
        while (i < text.size() && (static_cast<unsigned char>(text[i]) & 0xc0) == 0x80) ++i;
        ++count;
    }
    return std::string(text.substr(0, i));
}

std::int64_t estimate_tokens(std::string_view text) {
    return static_cast<std::int64_t>((util::count_scalars(text) + 3) / 4);
}

EmbeddingClient::EmbeddingClient(EmbeddingProviderConfig config) : config_(std::move(config)) {
    if (config_.base_url.empty())
        throw std::invalid_argument("embedding provider base_url not configured");
}

EmbeddingClient::~EmbeddingClient() = default;

std::string EmbeddingClient::provider_id() const {
    return util::to_hex(util::fnv1a64(config_.base_url + "|" + config_.model));
}

std::string EmbeddingClient::cache_file_path() const {
    return config_.cache_dir + "/embed_" + provider_id() + ".jsonl";
}

void EmbeddingClient::load_cache_file() {
    cache_loaded_ = true;
    if (config_.cache_dir.empty()) return;
    std::ifstream in(cache_file_path());
    if (!in) return;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        try {
            json j = json::parse(line);
            EmbeddingVector vec;
            vec.values = j.at("v").get<std::vector<double>>();
            cache_.emplace(std::stoull(j.at("h").get<std::string>(), nullptr, 16),
                           std::move(vec));
        } catch (...) {
            // A torn tail line is not fatal; drop it.
        }
    }
}

std::optional<EmbeddingVector> EmbeddingClient::cache_get(std::uint64_t key) const {
    std::lock_guard<std::mutex> lock(cache_mutex_);
    auto it = cache_.find(key);
    if (it == cache_.end()) return std::nullopt;
    return it->second;
}

void EmbeddingClient::cache_put(std::uint64_t key, const EmbeddingVector& vec) {
    {
        std::lock_guard<std::mutex> lock(cache_mutex_);
        if (!cache_.emplace(key, vec).second) return;
    }
    if (config_.cache_dir.empty()) return;
    std::filesystem::create_directories(config_.cache_dir);
    std::ofstream out(cache_file_path(), std::ios::app);
    json j = {{"h", util::to_hex(key)}, {"v", vec.values}};
    out << j.dump() << "\n";
}

std::vector<EmbeddingVector> EmbeddingClient::request_batch(
    const std::vector<std::string>& inputs) {
    json body = {{"model", config_.model}, {"input", inputs}};
    json response = http::post_json_with_retries(config_.base_url, "/embeddings", body,
                                                 config_.api_key_env, config_.retry_attempts,
                                                 config_.retry_base_ms);
    if (!response.contains("data") || !response["data"].is_array())
        throw std::runtime_error("embedding response missing data array");
    std::vector<EmbeddingVector> out(inputs.size());
    std::vector<bool> seen(inputs.size(), false);
    for (const auto& item : response["data"]) {
        std::size_t idx = item.at("index").get<std::size_t>();
        if (idx >= inputs.size())
            throw std::runtime_error("embedding response index out of range");
        out[idx].values = item.at("embedding").get<std::vector<double>>();
        seen[idx] = true;
    }
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        if (!seen[i]) throw std::runtime_error("embedding response missing input " +
                                               std::to_string(i));
    }
    return out;
}

std::vector<EmbeddingVector> EmbeddingClient::embed_texts(const std::vector<std::string>& texts,
                                                          bool bypass_cache) {
    if (texts.empty()) throw std::invalid_argument("embed_texts requires at least one text");
    {
        std::lock_guard<std::mutex> lock(cache_mutex_);
        if (!cache_loaded_) load_cache_file();
    }

    std::vector<std::string> truncated;
    truncated.reserve(texts.size());
    for (const auto& t : texts) truncated.push_back(truncate_to_token_limit(t, config_.token_limit));

    std::vector<EmbeddingVector> out(texts.size());
    std::vector<std::size_t> pending;
    const std::string id = provider_id();
    std::vector<std::uint64_t> keys(texts.size());
    for (std::size_t i = 0; i < truncated.size(); ++i) {
        keys[i] = util::fnv1a64(id + "\x1f" + truncated[i]);
        if (config_.use_cache && !bypass_cache) {
            if (auto hit = cache_get(keys[i])) {
                out[i] = std::move(*hit);
                continue;
            }
        }
        pending.push_back(i);
    }

    // Batch pending inputs under the provider's per-request token budget.
    std::size_t start = 0;
    while (start < pending.size()) {
        std::vector<std::string> batch;
        std::vector<std::size_t> batch_idx;
        std::int64_t batch_tokens = 0;
        while (start < pending.size()) {
            std::size_t i = pending[start];
            std::int64_t t = estimate_tokens(truncated[i]);
            if (!batch.empty() && batch_tokens + t > config_.max_tokens_per_request) break;
            batch.push_back(truncated[i]);
            batch_idx.push_back(i);
            batch_tokens += t;
            ++start;
        }
        auto vectors = request_batch(batch);
        for (std::size_t k = 0; k < batch_idx.size(); ++k) {
            out[batch_idx[k]] = vectors[k];
            if (config_.use_cache && !bypass_cache) cache_put(keys[batch_idx[k]], vectors[k]);
        }
    }

    std::size_t dim = out.front().values.size();
    for (const auto& v : out) {
        if (v.values.size() != dim)
            throw std::runtime_error("embedding dimension mismatch within batch: " +
                                     std::to_string(v.values.size()) + " vs " +
                                     std::to_string(dim));
    }
    return out;
}

}  // namespace coderag
