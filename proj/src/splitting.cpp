#include "coderag/splitting.hpp"

#include <cctype>
#include <fstream>
#include <stdexcept>

#include "coderag/util.hpp"

namespace coderag {

SplitterKind splitter_from_string(std::string_view name) {
    if (name == "line") return SplitterKind::line;
    if (name == "word") return SplitterKind::word;
    if (name == "bpe") return SplitterKind::bpe;
    if (name == "none" || name == "n/a" || name.empty()) return SplitterKind::none;
    throw std::invalid_argument("unknown splitter: " + std::string(name));
}

std::string to_string(SplitterKind kind) {
    switch (kind) {
        case SplitterKind::line: return "line";
        case SplitterKind::word: return "word";
        case SplitterKind::bpe: return "bpe";
        case SplitterKind::none: return "none";
    }
    return "none";
}

void MergeTable::add_pair(std::string left, std::string right) {
    std::string key = left + ' ' + right;
    if (rank_by_pair.count(key)) throw std::invalid_argument("duplicate merge pair: " + key);
    rank_by_pair.emplace(std::move(key), static_cast<int>(pairs.size()));
    pairs.emplace_back(std::move(left), std::move(right));
}

int MergeTable::rank_of(const std::string& left, const std::string& right) const {
    auto it = rank_by_pair.find(left + ' ' + right);
    return it == rank_by_pair.end() ? -1 : it->second;
}

TokenBag split_lines(std::string_view text) {
    TokenBag bag;
    for (auto line : util::split_lines(text)) {
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;
        bag.add(std::string(line));
    }
    return bag;
}

namespace {

inline bool is_word_char(unsigned char c) {
    return std::isalnum(c) != 0;
}

inline bool is_digit_only(std::string_view tok) {
    for (unsigned char c : tok) {
        if (!std::isdigit(c)) return false;
    }
    return true;
}

}  // namespace

TokenBag split_words(std::string_view text) {
    TokenBag bag;
    std::size_t i = 0;
    while (i < text.size()) {
        if (!is_word_char(static_cast<unsigned char>(text[i]))) {
            ++i;
            continue;
        }
        std::size_t start = i;
        while (i < text.size() && is_word_char(static_cast<unsigned char>(text[i]))) ++i;
        std::string_view tok = text.substr(start, i - start);
        if (is_digit_only(tok)) continue;
        bag.add(std::string(tok));
    }
    return bag;
}

namespace {

// Single UTF-8 code points of a whitespace-free piece.
std::vector<std::string> to_character_symbols(std::string_view piece) {
    std::vector<std::string> symbols;
    std::size_t i = 0;
    while (i < piece.size()) {
        std::size_t len = 1;
        unsigned char c = static_cast<unsigned char>(piece[i]);
        if ((c & 0xe0) == 0xc0) len = 2;
        else if ((c & 0xf0) == 0xe0) len = 3;
        else if ((c & 0xf8) == 0xf0) len = 4;
        if (i + len > piece.size()) len = 1;
        symbols.emplace_back(piece.substr(i, len));
        i += len;
    }
    return symbols;
}

void bpe_encode_piece(std::string_view piece, const MergeTable& merges, TokenBag& bag) {
    std::vector<std::string> symbols = to_character_symbols(piece);
    while (symbols.size() > 1 && !merges.empty()) {
        int best_rank = -1;
        std::size_t best_pos = 0;
        for (std::size_t i = 0; i + 1 < symbols.size(); ++i) {
            int r = merges.rank_of(symbols[i], symbols[i + 1]);
            if (r >= 0 && (best_rank < 0 || r < best_rank)) {
                best_rank = r;
                best_pos = i;
            }
        }
        if (best_rank < 0) break;
        // Merge every occurrence of the winning pair, left to right.
        const std::string left = symbols[best_pos];
        const std::string right = symbols[best_pos + 1];
        std::vector<std::string> merged;
        merged.reserve(symbols.size());
        for (std::size_t i = 0; i < symbols.size();) {
            if (i + 1 < symbols.size() && symbols[i] == left && symbols[i + 1] == right) {
                merged.push_back(left + right);
                i += 2;
            } else {
                merged.push_back(std::move(symbols[i]));
                ++i;
            }
        }
        symbols = std::move(merged);
    }
    for (auto& s : symbols) bag.add(std::move(s));
}

}  // namespace

TokenBag split_bpe(std::string_view text, const MergeTable& merges) {
    TokenBag bag;
    std::size_t i = 0;
    while (i < text.size()) {
        if (std::isspace(static_cast<unsigned char>(text[i]))) {
            ++i;
            continue;
        }
        std::size_t start = i;
        while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        bpe_encode_piece(text.substr(start, i - start), merges, bag);
    }
    return bag;
}

MergeTable load_merge_table(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open merges file: " + path.string());
    MergeTable table;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view s = util::trim(line);
        if (s.empty()) continue;
        if (s.front() == '#') continue;
        std::size_t space = s.find(' ');
        if (space == std::string_view::npos || space == 0 || space + 1 >= s.size() ||
            s.find(' ', space + 1) != std::string_view::npos) {
            throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                                     ": merges line must be exactly \"left right\"");
        }
        table.add_pair(std::string(s.substr(0, space)), std::string(s.substr(space + 1)));
    }
    return table;
}

TokenBag split_text(std::string_view text, SplitterKind kind, const MergeTable* merges) {
    switch (kind) {
        case SplitterKind::line: return split_lines(text);
        case SplitterKind::word: return split_words(text);
        case SplitterKind::bpe: {
            static const MergeTable empty_table;
            return split_bpe(text, merges ? *merges : empty_table);
        }
        case SplitterKind::none:
            throw std::invalid_argument("splitter 'none' cannot produce a token bag");
    }
    throw std::invalid_argument("bad splitter kind");
}

std::int64_t count_whitespace_tokens(std::string_view text) {
    std::int64_t n = 0;
    bool in_token = false;
    for (unsigned char c : text) {
        if (std::isspace(c)) {
            in_token = false;
        } else if (!in_token) {
            in_token = true;
            ++n;
        }
    }
    return n;
}

std::int64_t count_bpe_tokens(std::string_view text, const MergeTable& merges) {
    return static_cast<std::int64_t>(split_bpe(text, merges).total);
}

}  // namespace coderag
