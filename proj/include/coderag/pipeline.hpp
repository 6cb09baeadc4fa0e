#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "coderag/chunking.hpp"
#include "coderag/corpus.hpp"
#include "coderag/embed_client.hpp"
#include "coderag/scoring.hpp"
#include "coderag/splitting.hpp"

namespace coderag {

enum class ScorerKind { bm25, iou, dense, path_distance, structure, hybrid };

ScorerKind scorer_from_string(std::string_view name);
std::string to_string(ScorerKind kind);

// Splitters only apply to sparse scoring (and to the sparse backfill of the
// hybrid composer).
bool scorer_uses_splitter(ScorerKind kind);

struct RetrievalConfig {
    ChunkerConfig chunker;
    SplitterKind splitter = SplitterKind::word;
    ScorerKind scorer = ScorerKind::bm25;
    Bm25Params bm25;
    std::size_t query_window_lines = 32;
    std::int64_t budget_tokens = 4096;
    std::string bpe_merges_path;  // used by the bpe splitter and budget counting
    bool strict_stop = false;     // stop packing at the first overflow
    bool bl_prepend_file_path = true;
    std::optional<EmbeddingProviderConfig> embedding;

    nlohmann::json to_json() const;
    std::string label() const;  // e.g. "bm25-word-fixed32"
    std::uint64_t config_hash() const;
};

struct PackedItem {
    Chunk chunk;
    std::int64_t token_count = 0;
};

/// Result of greedy budget packing: included items in rank order, never
/// exceeding the budget.
struct PackedPrompt {
    std::vector<PackedItem> items;
    std::int64_t total_tokens = 0;
    std::int64_t budget = 0;
    std::size_t skipped_count = 0;

    nlohmann::json to_json() const;
    std::string context_text() const;  // chunk texts joined by newlines
};

using TokenCounter = std::function<std::int64_t(std::string_view)>;

// Budget counting uses the configured BPE merge table when present,
// whitespace tokens otherwise.
TokenCounter make_budget_token_counter(const RetrievalConfig& config,
                                       std::shared_ptr<const MergeTable> merges);

std::shared_ptr<const MergeTable> load_config_merges(const RetrievalConfig& config);

// The last `query_window_lines` lines strictly preceding the target line.
// The target line itself is never included.
std::string build_cc_query(const CompletionInstance& instance, std::size_t query_window_lines);

std::string build_bl_query(const BugLocalizationInstance& instance);

// Drops chunks of the completion file whose span reaches the target line or
// any later line; earlier spans stay indexable.
std::vector<Chunk> exclude_self_context(std::vector<Chunk> chunks,
                                        const CompletionInstance& instance);

PackedPrompt pack_prompt(const RankedList& ranked, const std::vector<Chunk>& chunks,
                         std::int64_t budget, const TokenCounter& token_counter,
                         bool strict_stop = false);

// Structural candidates first (order preserved), then backfill items not
// already present. Scores are reassigned as strictly decreasing ranks.
RankedList hybrid_compose(const RankedList& structural, const RankedList& backfill);

/// Chunk candidates plus their ranking; the budget-independent part of the
/// CC pipeline.
struct RankedCandidates {
    std::vector<Chunk> chunks;
    RankedList ranking;
};

RankedCandidates rank_cc(const RetrievalConfig& config, const CompletionInstance& instance);

PackedPrompt run_cc_retrieval(const RetrievalConfig& config, const CompletionInstance& instance);

// File-level ranking for bug localization; no packing budget. Requires the
// whole_file chunker.
RankedList run_bl_retrieval(const RetrievalConfig& config,
                            const BugLocalizationInstance& instance);

}  // namespace coderag
