#include <doctest.h>

#include <random>
#include <regex>

#include "coderag/splitting.hpp"
#include "support/fixtures.hpp"

using namespace coderag;

TEST_CASE("split_lines tokenizes distinct lines with counts") {
    TokenBag bag = split_lines("x=1\ny=2\nx=1\n");
    CHECK(bag.counts.at("x=1") == 2);
    CHECK(bag.counts.at("y=2") == 1);
    CHECK(bag.total == 3);
    CHECK(bag.distinct() == 2);
}

TEST_CASE("split_lines degenerate inputs") {
    CHECK(split_lines("").empty());
    CHECK(split_lines("\n\n\n").empty());
    TokenBag crlf = split_lines("a\r\nb\r\n");
    CHECK(crlf.counts.count("a") == 1);
    CHECK(crlf.counts.count("b") == 1);
}

TEST_CASE("split_words drops punctuation and numerals") {
    TokenBag bag = split_words("foo_bar(42) + baz");
    CHECK(bag.counts.at("foo") == 1);
    CHECK(bag.counts.at("bar") == 1);
    CHECK(bag.counts.at("baz") == 1);
    CHECK(bag.counts.count("42") == 0);
    CHECK(bag.total == 3);
}

TEST_CASE("split_words keeps mixed alphanumerics") {
    TokenBag bag = split_words("x1 = x1");
    CHECK(bag.counts.at("x1") == 2);
    CHECK(split_words("12 34 56").empty());
    // No case folding.
    TokenBag cased = split_words("Foo foo FOO");
    CHECK(cased.distinct() == 3);
}

namespace {

// Reference tokenizer: [A-Za-z0-9]+ runs, minus ^[0-9]+$ tokens.
TokenBag words_oracle(const std::string& text) {
    TokenBag bag;
    static const std::regex run("[A-Za-z0-9]+");
    static const std::regex digits("^[0-9]+$");
    for (auto it = std::sregex_iterator(text.begin(), text.end(), run);
         it != std::sregex_iterator(); ++it) {
        std::string tok = it->str();
        if (std::regex_match(tok, digits)) continue;
        bag.add(tok);
    }
    return bag;
}

std::string random_text(std::mt19937_64& rng, std::size_t len) {
    static const std::string alphabet =
        "abcXYZ0189_ ()+-.\t\n#\"';:,/*!=<>[]{}";
    std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
    std::string out;
    for (std::size_t i = 0; i < len; ++i) out.push_back(alphabet[pick(rng)]);
    return out;
}

}  // namespace

TEST_CASE("split_words matches the regex oracle on random text") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 300; ++trial) {
        std::string text = random_text(rng, 120);
        TokenBag engine = split_words(text);
        TokenBag oracle = words_oracle(text);
        REQUIRE(engine.total == oracle.total);
        CHECK(engine.counts == oracle.counts);
    }
}

TEST_CASE("split_words is invariant under punctuation insertion") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 100; ++trial) {
        std::string text = random_text(rng, 60);
        TokenBag base = split_words(text);
        // Double every punctuation boundary.
        std::string padded;
        for (char c : text) {
            padded.push_back(c);
            if (!std::isalnum(static_cast<unsigned char>(c))) padded += "!?";
        }
        CHECK(split_words(padded).counts == base.counts);
    }
}

TEST_CASE("split_words bag adds over concatenation with a separator") {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 100; ++trial) {
        std::string a = random_text(rng, 50);
        std::string b = random_text(rng, 50);
        TokenBag bag_a = split_words(a);
        TokenBag bag_b = split_words(b);
        TokenBag joint = split_words(a + ";" + b);
        CHECK(joint.total == bag_a.total + bag_b.total);
        for (const auto& [tok, n] : joint.counts) {
            std::uint32_t expect = 0;
            if (auto it = bag_a.counts.find(tok); it != bag_a.counts.end()) expect += it->second;
            if (auto it = bag_b.counts.find(tok); it != bag_b.counts.end()) expect += it->second;
            CHECK(n == expect);
        }
    }
}

TEST_CASE("split_bpe with no merges yields characters") {
    MergeTable empty;
    TokenBag bag = split_bpe("ab", empty);
    CHECK(bag.counts.at("a") == 1);
    CHECK(bag.counts.at("b") == 1);
}

TEST_CASE("split_bpe applies merges in rank order") {
    MergeTable table;
    table.add_pair("a", "b");
    TokenBag bag = split_bpe("abab", table);
    CHECK(bag.counts.at("ab") == 2);
    CHECK(bag.total == 2);

    MergeTable two;
    two.add_pair("a", "b");
    two.add_pair("ab", "c");
    TokenBag merged = split_bpe("abc", two);
    CHECK(merged.counts.at("abc") == 1);
    CHECK(merged.total == 1);
}

TEST_CASE("split_bpe never merges across whitespace") {
    MergeTable table;
    table.add_pair("a", "b");
    TokenBag bag = split_bpe("a b", table);
    CHECK(bag.counts.count("ab") == 0);
    CHECK(bag.total == 2);
}

TEST_CASE("split_bpe one token per character on whitespace-free input with empty table") {
    MergeTable empty;
    std::mt19937_64 rng(17);
    std::uniform_int_distribution<int> ch('a', 'z');
    for (int trial = 0; trial < 50; ++trial) {
        std::string word;
        for (int i = 0; i < 20; ++i) word.push_back(static_cast<char>(ch(rng)));
        CHECK(split_bpe(word, empty).total == word.size());
    }
}

TEST_CASE("load_merge_table parses ranks in line order") {
    testsupport::TempDir dir("merges");
    auto path = dir.write("m.txt", "a b\nab c\n");
    MergeTable table = load_merge_table(path);
    REQUIRE(table.pairs.size() == 2);
    CHECK(table.rank_of("a", "b") == 0);
    CHECK(table.rank_of("ab", "c") == 1);
}

TEST_CASE("load_merge_table skips headers and rejects bad lines") {
    testsupport::TempDir dir("merges2");
    MergeTable with_header = load_merge_table(dir.write("h.txt", "#version\na b\n"));
    CHECK(with_header.pairs.size() == 1);

    auto bad = dir.write("bad.txt", "a b c\n");
    CHECK_THROWS_WITH_AS(static_cast<void>(load_merge_table(bad)),
                         doctest::Contains(":1:"), std::runtime_error);
}

TEST_CASE("bundled code merges load and merge something") {
    MergeTable table = load_merge_table(std::string(CODERAG_DATA_DIR) + "/code.merges");
    CHECK(table.pairs.size() >= 100);
    TokenBag bag = split_bpe("const int result = count;", table);
    // Merged subwords mean fewer tokens than characters.
    CHECK(bag.total < 20);
}

TEST_CASE("splitters are total on arbitrary bytes") {
    std::string junk(256, '\0');
    for (int i = 0; i < 256; ++i) junk[static_cast<std::size_t>(i)] = static_cast<char>(i);
    CHECK_NOTHROW(split_lines(junk));
    CHECK_NOTHROW(split_words(junk));
    MergeTable empty;
    CHECK_NOTHROW(split_bpe(junk, empty));
}
