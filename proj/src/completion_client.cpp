#include "coderag/completion_client.hpp"

#include <stdexcept>

#include "coderag/http_util.hpp"

namespace coderag {

using nlohmann::json;

std::string request_one_line_completion(const CompletionProviderConfig& config,
                                        const std::string& prompt) {
    if (config.base_url.empty())
        throw std::invalid_argument("completion provider base_url not configured");
    json body = {{"model", config.model},
                 {"prompt", prompt},
                 {"max_tokens", config.max_tokens},
                 {"stop", json::array({"\n"})}};
    json response = http::post_json_with_retries(config.base_url, "/completions", body,
                                                 config.api_key_env, config.retry_attempts,
                                                 config.retry_base_ms);
    if (!response.contains("choices") || !response["choices"].is_array() ||
        response["choices"].empty())
        throw std::runtime_error("completion response missing choices");
    std::string text = response["choices"][0].at("text").get<std::string>();
    std::size_t nl = text.find('\n');
    return nl == std::string::npos ? text : text.substr(0, nl);
}

}  // namespace coderag
