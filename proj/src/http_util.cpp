#include "coderag/http_util.hpp"

#include <chrono>
#include <cstdlib>
#include <stdexcept>
#include <thread>

#include <httplib.h>

namespace coderag::http {

ParsedUrl parse_base_url(std::string_view base_url) {
    std::string url(base_url);
    while (!url.empty() && url.back() == '/') url.pop_back();
    std::size_t scheme_end = url.find("://");
    if (scheme_end == std::string::npos)
        throw std::invalid_argument("base_url must include a scheme: " + url);
    std::size_t path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, ""};
    return {url.substr(0, path_start), url.substr(path_start)};
}

nlohmann::json post_json_with_retries(const std::string& base_url, const std::string& endpoint,
                                      const nlohmann::json& body, const std::string& api_key_env,
                                      int attempts, int base_delay_ms) {
    ParsedUrl parsed = parse_base_url(base_url);
    httplib::Client client(parsed.host_port);
    client.set_connection_timeout(10, 0);
    client.set_read_timeout(120, 0);

    httplib::Headers headers;
    if (!api_key_env.empty()) {
        if (const char* key = std::getenv(api_key_env.c_str()); key && *key)
            headers.emplace("Authorization", std::string("Bearer ") + key);
    }

    const std::string path = parsed.path_prefix + endpoint;
    const std::string payload = body.dump();
    std::string last_error;
    for (int attempt = 0; attempt < std::max(1, attempts); ++attempt) {
        if (attempt > 0) {
            auto delay = std::chrono::milliseconds(base_delay_ms << (attempt - 1));
            std::this_thread::sleep_for(delay);
        }
        auto res = client.Post(path, headers, payload, "application/json");
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status >= 500) {
            last_error = "server error: HTTP " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200)
            throw std::runtime_error("request to " + path + " failed: HTTP " +
                                     std::to_string(res->status) + " " + res->body);
        try {
            return nlohmann::json::parse(res->body);
        } catch (const std::exception& e) {
            throw std::runtime_error("invalid JSON from " + path + ": " + e.what());
        }
    }
    throw std::runtime_error("request to " + path + " failed after " +
                             std::to_string(std::max(1, attempts)) + " attempts: " + last_error);
}

}  // namespace coderag::http
