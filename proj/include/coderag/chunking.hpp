#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "coderag/corpus.hpp"

namespace coderag {

/// An indexed retrieval unit: a contiguous, non-overlapping line span of one
/// source file. `text` is the '\n'-join of the spanned lines.
struct Chunk {
    std::uint32_t id = 0;
    std::string file_path;
    std::size_t start_line = 0;
    std::size_t end_line = 0;  // inclusive
    std::string text;
};

enum class ChunkerKind { whole_file, fixed_lines, recursive };

ChunkerKind chunker_from_string(std::string_view name);
std::string to_string(ChunkerKind kind);

struct ChunkerConfig {
    ChunkerKind kind = ChunkerKind::whole_file;
    std::size_t window_lines = 0;  // fixed_lines window; 0 means whole-file
    std::size_t target_chars = 0;  // recursive target; 0 means match window_lines
};

// One chunk spanning the whole file. An empty file yields one chunk with
// empty text and the degenerate span [0, 0].
std::vector<Chunk> chunk_whole_file(const SourceFile& file);

// Consecutive windows of exactly L lines; the final partial window is kept.
std::vector<Chunk> chunk_fixed_lines(const SourceFile& file, std::size_t window_lines);

// Splits on a language-specific separator hierarchy (top-level declaration
// starts, blank lines, single lines), greedily merging adjacent small pieces
// up to target_chars. Results are whole-line spans; only a single line may
// exceed the target.
std::vector<Chunk> chunk_recursive(const SourceFile& file, std::size_t target_chars,
                                   Language language);

// target_chars matched to a fixed-line window: L times the repo's mean line
// length in scalars (newline included). Falls back to L * 80 for repos with
// no lines.
std::size_t match_target_chars(std::size_t window_lines, const RepoSnapshot& repo);

// All files of the repo chunked per config, ids dense in (file, span) order.
std::vector<Chunk> chunk_repo(const RepoSnapshot& repo, const ChunkerConfig& config,
                              Language language);

}  // namespace coderag
