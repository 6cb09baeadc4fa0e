#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace coderag {

enum class SplitterKind { line, word, bpe, none };

SplitterKind splitter_from_string(std::string_view name);
std::string to_string(SplitterKind kind);

/// Multiset of string tokens. BM25 consumes the counts, IoU only the key set.
struct TokenBag {
    std::unordered_map<std::string, std::uint32_t> counts;
    std::uint64_t total = 0;

    void add(std::string token) {
        ++counts[std::move(token)];
        ++total;
    }
    std::size_t distinct() const { return counts.size(); }
    bool empty() const { return counts.empty(); }
};

/// Ranked byte-pair merge rules; rank 0 applies first.
struct MergeTable {
    std::vector<std::pair<std::string, std::string>> pairs;
    std::unordered_map<std::string, int> rank_by_pair;  // key: left + ' ' + right

    void add_pair(std::string left, std::string right);
    int rank_of(const std::string& left, const std::string& right) const;
    bool empty() const { return pairs.empty(); }
};

// One token per distinct line; trailing '\r' stripped, blank lines dropped.
TokenBag split_lines(std::string_view text);

// Maximal alphanumeric runs; all-digit runs dropped. No case folding,
// no stemming, no identifier de-camelization.
TokenBag split_words(std::string_view text);

// Whitespace pre-split, then per piece: single characters merged by rank
// order until no rule applies. Merges never cross whitespace.
TokenBag split_bpe(std::string_view text, const MergeTable& merges);

// Merges file: one "left right" pair per line; '#' lines are headers.
MergeTable load_merge_table(const std::filesystem::path& path);

TokenBag split_text(std::string_view text, SplitterKind kind, const MergeTable* merges = nullptr);

std::int64_t count_whitespace_tokens(std::string_view text);
std::int64_t count_bpe_tokens(std::string_view text, const MergeTable& merges);

}  // namespace coderag
