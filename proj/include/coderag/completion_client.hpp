#pragma once

#include <string>

namespace coderag {

struct CompletionProviderConfig {
    std::string base_url;
    std::string model;
    int max_tokens = 64;
    int retry_attempts = 3;
    int retry_base_ms = 250;
    std::string api_key_env = "COMPLETION_API_KEY";
};

// POST {base_url}/completions {"model", "prompt", "max_tokens", "stop": ["\n"]}
// -> {"choices": [{"text": str}]}; the first line of text is the prediction.
std::string request_one_line_completion(const CompletionProviderConfig& config,
                                        const std::string& prompt);

}  // namespace coderag
