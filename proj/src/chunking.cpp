#include "coderag/chunking.hpp"

#include <cmath>
#include <stdexcept>

#include "coderag/util.hpp"

namespace coderag {

ChunkerKind chunker_from_string(std::string_view name) {
    if (name == "whole_file") return ChunkerKind::whole_file;
    if (name == "fixed_lines") return ChunkerKind::fixed_lines;
    if (name == "recursive") return ChunkerKind::recursive;
    throw std::invalid_argument("unknown chunker: " + std::string(name));
}

std::string to_string(ChunkerKind kind) {
    switch (kind) {
        case ChunkerKind::whole_file: return "whole_file";
        case ChunkerKind::fixed_lines: return "fixed_lines";
        case ChunkerKind::recursive: return "recursive";
    }
    return "whole_file";
}

namespace {

Chunk make_chunk(const SourceFile& file, const std::vector<std::string_view>& lines,
                 std::size_t start, std::size_t end) {
    Chunk c;
    c.file_path = file.path;
    c.start_line = start;
    c.end_line = end;
    std::vector<std::string_view> span(lines.begin() + static_cast<std::ptrdiff_t>(start),
                                       lines.begin() + static_cast<std::ptrdiff_t>(end) + 1);
    c.text = util::join_lines(span);
    return c;
}

}  // namespace

std::vector<Chunk> chunk_whole_file(const SourceFile& file) {
    auto lines = util::split_lines(file.text);
    if (lines.empty()) {
        Chunk c;
        c.file_path = file.path;
        return {c};  // span [0,0], empty text
    }
    return {make_chunk(file, lines, 0, lines.size() - 1)};
}

std::vector<Chunk> chunk_fixed_lines(const SourceFile& file, std::size_t window_lines) {
    if (window_lines < 1) throw std::invalid_argument("window_lines must be >= 1");
    auto lines = util::split_lines(file.text);
    std::vector<Chunk> out;
    for (std::size_t start = 0; start < lines.size(); start += window_lines) {
        std::size_t end = std::min(start + window_lines, lines.size()) - 1;
        out.push_back(make_chunk(file, lines, start, end));
    }
    return out;
}

namespace {

// Line-start prefixes marking top-level declarations, tried in order.
const std::vector<std::string>& declaration_prefixes(Language language) {
    static const std::vector<std::string> python = {"class ", "def ", "\tdef "};
    static const std::vector<std::string> jvm = {"class ", "fun ",     "void ",
                                                 "public ", "private "};
    static const std::vector<std::string> none = {};
    switch (language) {
        case Language::python: return python;
        case Language::kotlin:
        case Language::java: return jvm;
        case Language::other: return none;
    }
    return none;
}

struct LineRange {
    std::size_t start;
    std::size_t end;  // inclusive
};

std::uint64_t range_chars(const std::vector<std::uint64_t>& prefix, const LineRange& r) {
    // Scalar count of the joined span, one separator per line break.
    return prefix[r.end + 1] - prefix[r.start] + (r.end - r.start);
}

// Split [range] at the given interior line boundaries (each boundary b starts
// a new piece at line b).
std::vector<LineRange> split_at(const LineRange& range, const std::vector<std::size_t>& bounds) {
    std::vector<LineRange> out;
    std::size_t cur = range.start;
    for (std::size_t b : bounds) {
        out.push_back({cur, b - 1});
        cur = b;
    }
    out.push_back({cur, range.end});
    return out;
}

class RecursiveSplitter {
public:
    RecursiveSplitter(const std::vector<std::string_view>& lines, std::size_t target,
                      Language language)
        : lines_(lines), target_(target), prefixes_(declaration_prefixes(language)) {
        scalar_prefix_.resize(lines.size() + 1, 0);
        for (std::size_t i = 0; i < lines.size(); ++i)
            scalar_prefix_[i + 1] = scalar_prefix_[i] + util::count_scalars(lines[i]);
    }

    std::vector<LineRange> run() {
        std::vector<LineRange> pieces;
        split({0, lines_.size() - 1}, 0, pieces);
        return merge_greedy(pieces);
    }

private:
    // Separator levels: each declaration prefix, then blank lines, then
    // every line. All boundaries fall on line starts, so chunks stay
    // whole-line spans by construction.
    std::size_t level_count() const { return prefixes_.size() + 2; }

    std::vector<std::size_t> boundaries(const LineRange& range, std::size_t level) const {
        std::vector<std::size_t> out;
        if (level < prefixes_.size()) {
            const std::string& prefix = prefixes_[level];
            for (std::size_t i = range.start + 1; i <= range.end; ++i) {
                if (lines_[i].starts_with(prefix)) out.push_back(i);
            }
        } else if (level == prefixes_.size()) {
            // Paragraph breaks: a non-blank line directly after a blank one.
            for (std::size_t i = range.start + 1; i <= range.end; ++i) {
                if (util::trim(lines_[i - 1]).empty() && !util::trim(lines_[i]).empty())
                    out.push_back(i);
            }
        } else {
            for (std::size_t i = range.start + 1; i <= range.end; ++i) out.push_back(i);
        }
        return out;
    }

    void split(const LineRange& range, std::size_t level, std::vector<LineRange>& out) const {
        if (range_chars(scalar_prefix_, range) <= target_) {
            out.push_back(range);
            return;
        }
        while (level < level_count()) {
            auto bounds = boundaries(range, level);
            if (!bounds.empty()) {
                for (const auto& piece : split_at(range, bounds)) split(piece, level + 1, out);
                return;
            }
            ++level;
        }
        // Single line longer than the target; word-level cuts would be
        // snapped back to this same line, so keep it whole.
        out.push_back(range);
    }

    std::vector<LineRange> merge_greedy(const std::vector<LineRange>& pieces) const {
        std::vector<LineRange> out;
        for (const auto& p : pieces) {
            if (!out.empty()) {
                LineRange joined{out.back().start, p.end};
                if (range_chars(scalar_prefix_, joined) <= target_) {
                    out.back() = joined;
                    continue;
                }
            }
            out.push_back(p);
        }
        return out;
    }

    const std::vector<std::string_view>& lines_;
    std::size_t target_;
    const std::vector<std::string>& prefixes_;
    std::vector<std::uint64_t> scalar_prefix_;
};

}  // namespace

std::vector<Chunk> chunk_recursive(const SourceFile& file, std::size_t target_chars,
                                   Language language) {
    if (target_chars < 1) throw std::invalid_argument("target_chars must be >= 1");
    auto lines = util::split_lines(file.text);
    if (lines.empty()) return {};
    RecursiveSplitter splitter(lines, target_chars, language);
    std::vector<Chunk> out;
    for (const auto& r : splitter.run()) out.push_back(make_chunk(file, lines, r.start, r.end));
    return out;
}

std::size_t match_target_chars(std::size_t window_lines, const RepoSnapshot& repo) {
    if (window_lines < 1) throw std::invalid_argument("window_lines must be >= 1");
    std::uint64_t total_lines = 0;
    std::uint64_t total_chars = 0;
    for (const auto& f : repo.files()) {
        total_lines += f.line_count;
        total_chars += util::count_scalars(f.text);
    }
    if (total_lines == 0) return window_lines * 80;
    // Mean line length; file text retains the newline terminators, so they
    // are already counted.
    double mean = static_cast<double>(total_chars) / static_cast<double>(total_lines);
    auto result =
        static_cast<std::size_t>(std::llround(static_cast<double>(window_lines) * mean));
    return result < 1 ? 1 : result;
}

std::vector<Chunk> chunk_repo(const RepoSnapshot& repo, const ChunkerConfig& config,
                              Language language) {
    std::size_t target = config.target_chars;
    if (config.kind == ChunkerKind::recursive && target == 0) {
        std::size_t window = config.window_lines == 0 ? 32 : config.window_lines;
        target = match_target_chars(window, repo);
    }
    std::vector<Chunk> out;
    for (const auto& file : repo.files()) {
        std::vector<Chunk> chunks;
        switch (config.kind) {
            case ChunkerKind::whole_file: chunks = chunk_whole_file(file); break;
            case ChunkerKind::fixed_lines:
                chunks = config.window_lines == 0 ? chunk_whole_file(file)
                                                  : chunk_fixed_lines(file, config.window_lines);
                break;
            case ChunkerKind::recursive: chunks = chunk_recursive(file, target, language); break;
        }
        for (auto& c : chunks) {
            c.id = static_cast<std::uint32_t>(out.size());
            out.push_back(std::move(c));
        }
    }
    return out;
}

}  // namespace coderag
