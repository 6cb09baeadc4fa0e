#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "coderag/config.hpp"

namespace coderag::cli {

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitMissingArtifact = 2;
inline constexpr int kExitUsage = 64;
inline constexpr int kExitInternal = 70;

struct CommonFlags {
    std::optional<std::string> out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
};

int cmd_index(const std::string& config_path, const std::optional<std::string>& repo_dir,
              const CommonFlags& flags);

int cmd_query(const std::string& index_path, const std::optional<std::string>& query_text,
              const std::optional<std::string>& query_file, std::size_t top_k,
              std::optional<std::int64_t> budget, const std::optional<std::string>& config_path);

int cmd_eval_cc(const std::string& config_path, const CommonFlags& flags);
int cmd_eval_bl(const std::string& config_path, const CommonFlags& flags);
int cmd_bench(const std::string& config_path, const CommonFlags& flags);
int cmd_search(const std::string& config_path, const CommonFlags& flags);

}  // namespace coderag::cli
