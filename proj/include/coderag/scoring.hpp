#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "coderag/chunking.hpp"
#include "coderag/corpus.hpp"
#include "coderag/splitting.hpp"

namespace coderag {

enum class ItemKind { chunk, file };

struct ScoredItem {
    std::uint32_t id = 0;
    double score = 0.0;
};

/// Scores non-increasing, ties broken by ascending item id; ids unique.
struct RankedList {
    ItemKind kind = ItemKind::chunk;
    std::vector<ScoredItem> items;
};

// Sorts by descending score, breaking ties by ascending id.
void sort_ranked(std::vector<ScoredItem>& items);

struct Posting {
    std::uint32_t chunk_id = 0;
    std::uint32_t term_frequency = 0;
};

struct InvertedIndex {
    std::unordered_map<std::string, std::vector<Posting>> postings;  // sorted by chunk_id
    std::unordered_map<std::uint32_t, std::uint32_t> doc_len;        // bag totals
    std::unordered_map<std::uint32_t, std::uint32_t> doc_distinct;   // distinct token counts
    std::size_t doc_count = 0;
    double avg_doc_len = 0.0;
};

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;
    // Weight contributions by query term frequency; standard Okapi practice
    // for short queries is off.
    bool use_query_tf = false;
};

InvertedIndex build_index(const std::vector<Chunk>& chunks, SplitterKind splitter,
                          const MergeTable* merges = nullptr);

// Okapi BM25 with the non-negative +1-inside-log IDF:
//   score(q, d) = sum_t idf(t) * tf * (k1 + 1) / (tf + k1 * (1 - b + b * |d| / avgdl))
//   idf(t)     = ln((N - df + 0.5) / (df + 0.5) + 1)
// Zero-overlap documents are omitted.
RankedList score_bm25(const InvertedIndex& index, const TokenBag& query,
                      const Bm25Params& params = {});

// |distinct(q) ∩ distinct(d)| / |distinct(q) ∪ distinct(d)|; zero-overlap
// documents omitted.
RankedList score_iou(const InvertedIndex& index, const TokenBag& query);

// Directory-tree distance between two file paths: edges up from the first
// file's directory to the common ancestor plus edges down to the second's.
std::size_t path_tree_distance(std::string_view file_a, std::string_view file_b);

// Ranks every other repo file by directory proximity to query_file
// (score = -distance). Item ids are file indices.
RankedList score_path_distance(const RepoSnapshot& repo, std::string_view query_file);

/// Directed import edges between repo files, by file index. Best-effort
/// textual resolution of import statements to repository paths.
struct ImportGraph {
    std::vector<std::vector<std::uint32_t>> edges_from;
};

ImportGraph build_import_graph(const RepoSnapshot& repo, Language language);

// Files the query file imports directly, ordered by path. The list is
// typically much shorter than the candidate pool.
RankedList score_structure(const ImportGraph& graph, const RepoSnapshot& repo,
                           std::string_view query_file);

struct EmbeddingVector {
    std::vector<double> values;
};

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b);

// Cosine scores for all documents; zero-norm vectors score 0. Throws on
// dimension mismatch.
RankedList score_dense(const EmbeddingVector& query,
                       const std::vector<std::pair<std::uint32_t, EmbeddingVector>>& docs,
                       ItemKind kind = ItemKind::chunk);

}  // namespace coderag
