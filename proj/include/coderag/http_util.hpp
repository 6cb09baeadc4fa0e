#pragma once

#include <string>
#include <string_view>

#include <json.hpp>

namespace coderag::http {

struct ParsedUrl {
    std::string host_port;     // scheme://host:port, as cpp-httplib wants it
    std::string path_prefix;   // may be empty
};

ParsedUrl parse_base_url(std::string_view base_url);

// POST json to base_url + endpoint with retries and exponential backoff.
// Adds Authorization: Bearer $<api_key_env> when the variable is set.
nlohmann::json post_json_with_retries(const std::string& base_url, const std::string& endpoint,
                                      const nlohmann::json& body, const std::string& api_key_env,
                                      int attempts, int base_delay_ms);

}  // namespace coderag::http
