#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

namespace coderag {

enum class Language { python, kotlin, java, other };

Language language_from_string(std::string_view name);
std::string to_string(Language lang);

struct SourceFile {
    std::string path;  // relative, '/'-separated
    std::string text;  // UTF-8, invalid input bytes replaced at load time
    std::size_t line_count = 0;
};

/// Immutable set of source files plus corpus statistics. Files are kept
/// sorted by path; total_symbols counts Unicode scalar values across all
/// file texts and is the normalization denominator for latency reporting.
class RepoSnapshot {
public:
    RepoSnapshot() = default;

    // Validates paths, sorts by path, computes line counts and totals.
    static RepoSnapshot from_files(std::string root_label, std::vector<SourceFile> files);

    const std::vector<SourceFile>& files() const { return files_; }
    const SourceFile* find_file(std::string_view path) const;
    // Index of `path` in files(), or files().size() when absent.
    std::size_t file_index(std::string_view path) const;
    std::uint64_t total_symbols() const { return total_symbols_; }
    const std::string& root_label() const { return root_label_; }

    std::uint64_t content_hash() const;

    nlohmann::json to_json() const;
    static RepoSnapshot from_json(const nlohmann::json& j);

private:
    std::vector<SourceFile> files_;
    std::unordered_map<std::string, std::size_t> index_by_path_;
    std::uint64_t total_symbols_ = 0;
    std::string root_label_;
};

// Default include globs: python, kotlin and java sources. Pass explicit
// globs (e.g. {"*"}) to index every regular file.
const std::vector<std::string>& default_include_globs();

RepoSnapshot load_repo(const std::filesystem::path& root_dir,
                       const std::vector<std::string>& include_globs = {},
                       std::vector<std::string>* warnings = nullptr);

struct CompletionInstance {
    std::shared_ptr<const RepoSnapshot> repo;
    std::string completion_file;
    std::size_t target_line_index = 0;
    Language language = Language::other;
    // Optional ground-truth labels enabling the retrieval-level proxy metric.
    std::vector<std::string> relevant_files;
};

struct BugLocalizationInstance {
    std::shared_ptr<const RepoSnapshot> repo;
    std::string issue_text;
    std::vector<std::string> ground_truth_files;  // unordered, non-empty
};

std::vector<CompletionInstance> load_cc_dataset(const std::filesystem::path& path,
                                                const std::vector<std::string>& include_globs = {});

std::vector<BugLocalizationInstance> load_bl_dataset(
    const std::filesystem::path& path, const std::vector<std::string>& include_globs = {});

std::uint64_t repo_symbol_count(const RepoSnapshot& repo);

}  // namespace coderag
