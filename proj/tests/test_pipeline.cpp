#include <doctest.h>

#include <random>
#include <set>

#include "coderag/pipeline.hpp"
#include "support/fixtures.hpp"

using namespace coderag;

namespace {

std::string numbered_lines(std::size_t n) {
    std::string text;
    for (std::size_t i = 0; i < n; ++i) text += "line" + std::to_string(i) + "\n";
    return text;
}

CompletionInstance instance_for(std::shared_ptr<const RepoSnapshot> repo, std::string file,
                                std::size_t target) {
    CompletionInstance inst;
    inst.repo = std::move(repo);
    inst.completion_file = std::move(file);
    inst.target_line_index = target;
    inst.language = Language::python;
    return inst;
}

std::string tokens_text(int n) {
    std::string text;
    for (int i = 0; i < n; ++i) {
        if (i > 0) text += ' ';
        text += "tok";
    }
    return text;
}

Chunk chunk_with_tokens(std::uint32_t id, int tokens) {
    Chunk c;
    c.id = id;
    c.file_path = "f.py";
    c.text = tokens_text(tokens);
    return c;
}

RankedList ranking_of(std::vector<std::uint32_t> ids) {
    RankedList ranked;
    double score = static_cast<double>(ids.size());
    for (auto id : ids) ranked.items.push_back({id, score--});
    return ranked;
}

const TokenCounter whitespace_counter = [](std::string_view t) {
    return count_whitespace_tokens(t);
};

}  // namespace

TEST_CASE("build_cc_query extracts the window before the target line") {
    auto repo = testsupport::make_repo_ptr({{"f.py", numbered_lines(10)}});
    CHECK(build_cc_query(instance_for(repo, "f.py", 5), 3) == "line2\nline3\nline4");
    CHECK(build_cc_query(instance_for(repo, "f.py", 0), 8).empty());
    CHECK(build_cc_query(instance_for(repo, "f.py", 2), 128) == "line0\nline1");
}

TEST_CASE("build_bl_query returns the issue text verbatim") {
    BugLocalizationInstance inst;
    inst.issue_text = "NPE in Foo.bar";
    CHECK(build_bl_query(inst) == "NPE in Foo.bar");
    inst.issue_text = "";
    CHECK(build_bl_query(inst).empty());
    inst.issue_text = "first\nsecond\n";
    CHECK(build_bl_query(inst) == "first\nsecond\n");
}

TEST_CASE("exclude_self_context removes target and later spans only") {
    auto repo = testsupport::make_repo_ptr(
        {{"f.py", numbered_lines(16)}, {"g.py", numbered_lines(16)}});
    CompletionInstance inst = instance_for(repo, "f.py", 5);

    std::vector<Chunk> chunks;
    Chunk covering;  // spans the target
    covering.id = 0;
    covering.file_path = "f.py";
    covering.start_line = 0;
    covering.end_line = 7;
    Chunk before;  // strictly preceding
    before.id = 1;
    before.file_path = "f.py";
    before.start_line = 0;
    before.end_line = 3;
    Chunk after;  // later lines only
    after.id = 2;
    after.file_path = "f.py";
    after.start_line = 8;
    after.end_line = 15;
    Chunk other;  // different file, same span as `covering`
    other.id = 3;
    other.file_path = "g.py";
    other.start_line = 0;
    other.end_line = 7;
    chunks = {covering, before, after, other};

    auto kept = exclude_self_context(chunks, inst);
    REQUIRE(kept.size() == 2);
    CHECK(kept[0].id == 1);
    CHECK(kept[1].id == 3);
}

TEST_CASE("pack_prompt greedy example") {
    std::vector<Chunk> chunks = {chunk_with_tokens(0, 100), chunk_with_tokens(1, 80),
                                 chunk_with_tokens(2, 50)};
    PackedPrompt packed =
        pack_prompt(ranking_of({0, 1, 2}), chunks, 150, whitespace_counter);
    REQUIRE(packed.items.size() == 2);
    CHECK(packed.items[0].chunk.id == 0);
    CHECK(packed.items[1].chunk.id == 2);
    CHECK(packed.total_tokens == 150);
    CHECK(packed.skipped_count == 1);
}

TEST_CASE("pack_prompt zero budget and all-fit cases") {
    std::vector<Chunk> chunks = {chunk_with_tokens(0, 5), chunk_with_tokens(1, 5)};
    PackedPrompt zero = pack_prompt(ranking_of({0, 1}), chunks, 0, whitespace_counter);
    CHECK(zero.items.empty());
    CHECK(zero.skipped_count == 2);

    PackedPrompt all = pack_prompt(ranking_of({1, 0}), chunks, 100, whitespace_counter);
    REQUIRE(all.items.size() == 2);
    CHECK(all.items[0].chunk.id == 1);  // rank order preserved
    CHECK(all.items[1].chunk.id == 0);
    CHECK(all.skipped_count == 0);
}

TEST_CASE("pack_prompt strict stop discards everything after the first overflow") {
    std::vector<Chunk> chunks = {chunk_with_tokens(0, 100), chunk_with_tokens(1, 80),
                                 chunk_with_tokens(2, 50)};
    PackedPrompt packed =
        pack_prompt(ranking_of({0, 1, 2}), chunks, 150, whitespace_counter, true);
    REQUIRE(packed.items.size() == 1);
    CHECK(packed.items[0].chunk.id == 0);
    CHECK(packed.skipped_count == 2);
}

TEST_CASE("pack_prompt never exceeds budget and preserves rank order") {
    std::mt19937_64 rng(41);
    std::uniform_int_distribution<int> n_items(0, 30);
    std::uniform_int_distribution<int> tokens(0, 60);
    std::uniform_int_distribution<std::int64_t> budget_dist(0, 300);
    for (int trial = 0; trial < 500; ++trial) {
        int n = n_items(rng);
        std::vector<Chunk> chunks;
        std::vector<std::uint32_t> order;
        for (int i = 0; i < n; ++i) {
            chunks.push_back(chunk_with_tokens(static_cast<std::uint32_t>(i), tokens(rng)));
            order.push_back(static_cast<std::uint32_t>(i));
        }
        std::shuffle(order.begin(), order.end(), rng);
        std::int64_t budget = budget_dist(rng);
        PackedPrompt packed =
            pack_prompt(ranking_of(order), chunks, budget, whitespace_counter);

        CHECK(packed.total_tokens <= budget);
        // Output ids must be a subsequence of the ranking.
        std::size_t cursor = 0;
        for (const auto& item : packed.items) {
            while (cursor < order.size() && order[cursor] != item.chunk.id) ++cursor;
            REQUIRE(cursor < order.size());
            ++cursor;
        }
    }
}

TEST_CASE("hybrid_compose prepends structure and backfills") {
    // ids: a=0, b=1, c=2, d=3
    RankedList structural = ranking_of({1, 2});
    RankedList backfill = ranking_of({0, 1, 3});
    RankedList combined = hybrid_compose(structural, backfill);
    REQUIRE(combined.items.size() == 4);
    CHECK(combined.items[0].id == 1);
    CHECK(combined.items[1].id == 2);
    CHECK(combined.items[2].id == 0);
    CHECK(combined.items[3].id == 3);
    for (std::size_t i = 1; i < combined.items.size(); ++i)
        CHECK(combined.items[i - 1].score > combined.items[i].score);
}

TEST_CASE("hybrid_compose with an empty side") {
    RankedList empty;
    RankedList backfill = ranking_of({2, 0, 1});
    RankedList right = hybrid_compose(empty, backfill);
    REQUIRE(right.items.size() == 3);
    CHECK(right.items[0].id == 2);

    RankedList left = hybrid_compose(backfill, empty);
    REQUIRE(left.items.size() == 3);
    CHECK(left.items[0].id == 2);
}

namespace {

// Fixture: the query tail uses an identifier defined in exactly one other file.
std::shared_ptr<const RepoSnapshot> lexical_repo() {
    std::string completion =
        "import os\n"
        "value = frobnicate_widget(seed)\n"
        "result = value + 1\n";  // target line 2
    std::string defining =
        "def frobnicate_widget(seed):\n"
        "    widget = seed * 3\n"
        "    return widget\n";
    std::string noise1 = "def unrelated_helper():\n    return 42\n";
    std::string noise2 = "def another_thing():\n    print('hello')\n";
    return testsupport::make_repo_ptr({{"main.py", completion},
                                       {"lib/widgets.py", defining},
                                       {"lib/noise1.py", noise1},
                                       {"util/noise2.py", noise2}});
}

}  // namespace

TEST_CASE("run_cc_retrieval ranks the lexically overlapping chunk first") {
    auto repo = lexical_repo();
    CompletionInstance inst = instance_for(repo, "main.py", 2);

    RetrievalConfig config;
    config.chunker = {ChunkerKind::whole_file, 0, 0};
    config.scorer = ScorerKind::bm25;
    config.splitter = SplitterKind::word;
    config.query_window_lines = 2;
    config.budget_tokens = 4096;

    PackedPrompt packed = run_cc_retrieval(config, inst);
    REQUIRE(!packed.items.empty());
    CHECK(packed.items[0].chunk.file_path == "lib/widgets.py");
}

TEST_CASE("run_cc_retrieval with a tiny budget packs nothing") {
    auto repo = lexical_repo();
    CompletionInstance inst = instance_for(repo, "main.py", 2);
    RetrievalConfig config;
    config.chunker = {ChunkerKind::whole_file, 0, 0};
    config.query_window_lines = 2;
    config.budget_tokens = 1;
    PackedPrompt packed = run_cc_retrieval(config, inst);
    CHECK(packed.items.empty());
    CHECK(packed.skipped_count > 0);
}

TEST_CASE("run_cc_retrieval with path distance follows directory proximity") {
    auto repo = testsupport::make_repo_ptr({{"pkg/main.py", numbered_lines(4)},
                                            {"pkg/near.py", "alpha\n"},
                                            {"far/away.py", "beta\n"}});
    CompletionInstance inst = instance_for(repo, "pkg/main.py", 1);
    RetrievalConfig config;
    config.chunker = {ChunkerKind::whole_file, 0, 0};
    config.scorer = ScorerKind::path_distance;
    config.budget_tokens = 4096;
    PackedPrompt packed = run_cc_retrieval(config, inst);
    REQUIRE(packed.items.size() == 2);
    CHECK(packed.items[0].chunk.file_path == "pkg/near.py");
    CHECK(packed.items[1].chunk.file_path == "far/away.py");
}

TEST_CASE("run_cc_retrieval never packs the target line or later self context") {
    std::mt19937_64 rng(59);
    std::uniform_int_distribution<std::size_t> lines(1, 40);
    std::uniform_int_distribution<std::size_t> window(1, 3);
    static const std::vector<std::string> words = {"alpha", "beta", "gamma", "delta"};
    std::uniform_int_distribution<std::size_t> word(0, words.size() - 1);

    for (int trial = 0; trial < 200; ++trial) {
        std::size_t n = lines(rng);
        std::string completion;
        for (std::size_t i = 0; i < n; ++i) completion += words[word(rng)] + "\n";
        std::string other;
        for (int i = 0; i < 10; ++i) other += words[word(rng)] + "\n";
        auto repo = testsupport::make_repo_ptr({{"cf.py", completion}, {"o.py", other}});
        std::uniform_int_distribution<std::size_t> target(0, n - 1);
        CompletionInstance inst = instance_for(repo, "cf.py", target(rng));

        RetrievalConfig config;
        config.chunker = {ChunkerKind::fixed_lines, 4 * window(rng), 0};
        config.query_window_lines = 8;
        config.budget_tokens = 10000;
        PackedPrompt packed = run_cc_retrieval(config, inst);
        for (const auto& item : packed.items) {
            if (item.chunk.file_path == inst.completion_file)
                CHECK(item.chunk.end_line < inst.target_line_index);
        }
    }
}

TEST_CASE("run_cc_retrieval is deterministic end to end") {
    auto repo = lexical_repo();
    CompletionInstance inst = instance_for(repo, "main.py", 2);
    RetrievalConfig config;
    config.chunker = {ChunkerKind::fixed_lines, 2, 0};
    config.query_window_lines = 2;
    config.budget_tokens = 64;
    std::string first = run_cc_retrieval(config, inst).to_json().dump();
    std::string second = run_cc_retrieval(config, inst).to_json().dump();
    CHECK(first == second);
}

TEST_CASE("run_bl_retrieval ranks the file containing the issue text first") {
    auto repo = testsupport::make_repo_ptr(
        {{"a.py", "def parse_header(data):\n    raise ValueError('bad header')\n"},
         {"b.py", "def write_footer(data):\n    return data\n"},
         {"c.py", "x = 1\n"}});
    BugLocalizationInstance inst;
    inst.repo = repo;
    inst.issue_text = "ValueError bad header when calling parse_header";
    inst.ground_truth_files = {"a.py"};

    RetrievalConfig config;
    config.chunker = {ChunkerKind::whole_file, 0, 0};
    config.scorer = ScorerKind::bm25;
    config.splitter = SplitterKind::word;

    RankedList ranked = run_bl_retrieval(config, inst);
    REQUIRE(!ranked.items.empty());
    CHECK(ranked.kind == ItemKind::file);
    CHECK(repo->files()[ranked.items[0].id].path == "a.py");
}

TEST_CASE("run_bl_retrieval degenerate and invalid configurations") {
    auto repo = testsupport::make_repo_ptr({{"a.py", "x\n"}});
    BugLocalizationInstance inst;
    inst.repo = repo;
    inst.issue_text = "";
    inst.ground_truth_files = {"a.py"};

    RetrievalConfig config;
    config.chunker = {ChunkerKind::whole_file, 0, 0};
    CHECK(run_bl_retrieval(config, inst).items.empty());

    config.chunker = {ChunkerKind::fixed_lines, 8, 0};
    inst.issue_text = "x";
    CHECK_THROWS_AS(run_bl_retrieval(config, inst), std::invalid_argument);

    config.chunker = {ChunkerKind::whole_file, 0, 0};
    config.scorer = ScorerKind::path_distance;
    CHECK_THROWS_AS(run_bl_retrieval(config, inst), std::invalid_argument);
}

TEST_CASE("bl file path context is searchable when enabled") {
    auto repo = testsupport::make_repo_ptr(
        {{"billing/invoice.py", "total = 0\n"}, {"auth/login.py", "user = None\n"}});
    BugLocalizationInstance inst;
    inst.repo = repo;
    inst.issue_text = "invoice billing bug";
    inst.ground_truth_files = {"billing/invoice.py"};

    RetrievalConfig config;
    config.chunker = {ChunkerKind::whole_file, 0, 0};
    config.scorer = ScorerKind::bm25;
    config.splitter = SplitterKind::word;
    config.bl_prepend_file_path = true;
    RankedList with_path = run_bl_retrieval(config, inst);
    REQUIRE(!with_path.items.empty());
    CHECK(repo->files()[with_path.items[0].id].path == "billing/invoice.py");

    config.bl_prepend_file_path = false;
    RankedList without_path = run_bl_retrieval(config, inst);
    CHECK(without_path.items.empty());  // path words appear nowhere in file bodies
}

TEST_CASE("hybrid scorer prepends imported files before lexical backfill") {
    auto repo = testsupport::make_repo_ptr(
        {{"main.py", "import helper\nvalue = shared_token\nx = value\n"},
         {"helper.py", "def helper_fn():\n    return 1\n"},
         {"lexical.py", "shared_token = 99\n"}});
    CompletionInstance inst = instance_for(repo, "main.py", 2);

    RetrievalConfig config;
    config.chunker = {ChunkerKind::whole_file, 0, 0};
    config.scorer = ScorerKind::hybrid;
    config.splitter = SplitterKind::word;
    config.query_window_lines = 2;
    config.budget_tokens = 4096;

    PackedPrompt packed = run_cc_retrieval(config, inst);
    REQUIRE(packed.items.size() >= 2);
    // helper.py is imported by the completion file, so it precedes the
    // purely lexical match even though the query never mentions it.
    CHECK(packed.items[0].chunk.file_path == "helper.py");
    CHECK(packed.items[1].chunk.file_path == "lexical.py");
}
