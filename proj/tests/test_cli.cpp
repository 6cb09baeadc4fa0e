#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>

#include <sys/wait.h>

#include <json.hpp>

#include "coderag/scoring.hpp"
#include "coderag/splitting.hpp"
#include "coderag/util.hpp"
#include "support/fixtures.hpp"

using namespace coderag;
using nlohmann::json;
using testsupport::TempDir;

namespace {

namespace fs = std::filesystem;

int cli(const std::string& args, const fs::path& log) {
    std::string cmd = std::string(CODERAG_CLI_PATH) + " " + args + " > " + log.string() +
                      " 2>&1";
    int rc = std::system(cmd.c_str());
    return rc == -1 ? -1 : WEXITSTATUS(rc);
}

std::string slurp(const fs::path& p) {
    return util::read_file(p);
}

struct CliFixture {
    TempDir dir{"cli"};
    fs::path config;
    fs::path repo;
    fs::path out;

    CliFixture() {
        repo = dir.path() / "repo";
        out = dir.path() / "out";
        dir.write("repo/a.py", "def alpha_fn():\n    return widget_count\n");
        dir.write("repo/b.py", "def beta_fn():\n    return other_value\n");
        dir.write("repo/c/d.py", "widget_count = 7\n");
        config = dir.write("run.toml",
                           "task = \"cc\"\n"
                           "out_dir = \"" + out.string() + "\"\n"
                           "[retrieval]\n"
                           "chunker = \"whole_file\"\n"
                           "splitter = \"word\"\n"
                           "scorer = \"bm25\"\n"
                           "budget_tokens = 64\n"
                           "[data]\n"
                           "repo_dir = \"" + repo.string() + "\"\n");
    }
};

}  // namespace

TEST_CASE("cli index produces an artifact that reloads to identical scores") {
    CliFixture fx;
    REQUIRE(cli("index --config " + fx.config.string(), fx.dir.path() / "index.log") == 0);
    fs::path artifact = fx.out / "index.json";
    REQUIRE(fs::exists(artifact));

    // Round-trip oracle: rebuild an index directly and compare BM25 scores
    // over random queries against the reloaded artifact via `query`.
    RepoSnapshot repo = load_repo(fx.repo);
    auto chunks = chunk_repo(repo, {ChunkerKind::whole_file, 0, 0}, Language::python);
    InvertedIndex direct = build_index(chunks, SplitterKind::word);

    std::mt19937_64 rng(71);
    static const std::vector<std::string> vocab = {"alpha", "beta",  "widget", "count",
                                                   "return", "value", "def",   "other"};
    std::uniform_int_distribution<std::size_t> pick(0, vocab.size() - 1);
    std::uniform_int_distribution<int> qlen(1, 5);
    for (int q = 0; q < 100; ++q) {
        std::string query;
        int n = qlen(rng);
        for (int i = 0; i < n; ++i) {
            if (i) query += ' ';
            query += vocab[pick(rng)];
        }
        fs::path out_log = fx.dir.path() / "query_out.json";
        REQUIRE(cli("query --index " + artifact.string() + " --query \"" + query +
                        "\" --budget 100000",
                    out_log) == 0);
        json packed = json::parse(slurp(out_log));

        RankedList expected = score_bm25(direct, split_words(query));
        REQUIRE(packed.at("items").size() == expected.items.size());
        for (std::size_t i = 0; i < expected.items.size(); ++i) {
            const Chunk& c = chunks[expected.items[i].id];
            CHECK(packed["items"][i]["file"] == c.file_path);
        }
    }
}

TEST_CASE("cli query exit codes") {
    CliFixture fx;
    fs::path log = fx.dir.path() / "q.log";

    SUBCASE("missing index artifact exits 2") {
        CHECK(cli("query --index /nope/index.json --query x", log) == 2);
    }

    SUBCASE("contradictory flags exit 64") {
        REQUIRE(cli("index --config " + fx.config.string(), log) == 0);
        fs::path artifact = fx.out / "index.json";
        CHECK(cli("query --index " + artifact.string(), log) == 64);  // no query
        CHECK(cli("query --index " + artifact.string() + " --query a --query-file b", log) ==
              64);
        CHECK(cli("query --index " + artifact.string() + " --unknown-flag", log) == 64);
    }

    SUBCASE("top_k zero yields empty items") {
        REQUIRE(cli("index --config " + fx.config.string(), log) == 0);
        fs::path out_json = fx.dir.path() / "out.json";
        REQUIRE(cli("query --index " + (fx.out / "index.json").string() +
                        " --query widget --top-k 0",
                    out_json) == 0);
        json packed = json::parse(slurp(out_json));
        CHECK(packed.at("items").empty());
    }

    SUBCASE("budget smaller than the smallest chunk packs nothing") {
        REQUIRE(cli("index --config " + fx.config.string(), log) == 0);
        fs::path out_json = fx.dir.path() / "out.json";
        REQUIRE(cli("query --index " + (fx.out / "index.json").string() +
                        " --query widget --budget 1",
                    out_json) == 0);
        json packed = json::parse(slurp(out_json));
        CHECK(packed.at("items").empty());
        CHECK(packed.at("skipped").get<int>() > 0);
    }
}

TEST_CASE("cli query refuses a mismatched config hash") {
    CliFixture fx;
    fs::path log = fx.dir.path() / "log";
    REQUIRE(cli("index --config " + fx.config.string(), log) == 0);
    fs::path artifact = fx.out / "index.json";

    // Same config verifies fine.
    CHECK(cli("query --index " + artifact.string() + " --query x --config " +
                  fx.config.string(),
              log) == 0);

    fs::path other = fx.dir.write("other.toml",
                                  "task = \"cc\"\n"
                                  "[retrieval]\n"
                                  "chunker = \"fixed_lines\"\n"
                                  "window_lines = 8\n"
                                  "splitter = \"line\"\n"
                                  "scorer = \"iou\"\n");
    CHECK(cli("query --index " + artifact.string() + " --query x --config " + other.string(),
              log) == 2);
    CHECK(slurp(log).find("config hash mismatch") != std::string::npos);
}

TEST_CASE("cli index on an empty repo produces a valid artifact") {
    CliFixture fx;
    fs::path empty_repo = fx.dir.path() / "empty";
    fs::create_directories(empty_repo);
    fs::path log = fx.dir.path() / "log";
    REQUIRE(cli("index --config " + fx.config.string() + " --repo " + empty_repo.string(),
                log) == 0);
    json artifact = json::parse(slurp(fx.out / "index.json"));
    CHECK(artifact.at("index").at("doc_count") == 0);
    CHECK(artifact.at("chunks").empty());

    fs::path out_json = fx.dir.path() / "q.json";
    REQUIRE(cli("query --index " + (fx.out / "index.json").string() + " --query anything",
                out_json) == 0);
    CHECK(json::parse(slurp(out_json)).at("items").empty());
}

TEST_CASE("cli rejects invalid configs with exit 64") {
    CliFixture fx;
    fs::path bad = fx.dir.write("bad.toml", "task = \"nope\"\n");
    fs::path log = fx.dir.path() / "log";
    CHECK(cli("eval-cc --config " + bad.string(), log) == 64);
    CHECK(slurp(log).find("task") != std::string::npos);

    fs::path malformed = fx.dir.write("broken.toml", "key value\n");
    CHECK(cli("eval-cc --config " + malformed.string(), log) == 64);
    CHECK(slurp(log).find(":1:") != std::string::npos);
}

TEST_CASE("cli maps runtime failures to exit 70") {
    CliFixture fx;
    fs::path cfg = fx.dir.write("missing_ds.toml",
                                "task = \"cc\"\n"
                                "out_dir = \"" + fx.out.string() + "\"\n"
                                "[retrieval]\n"
                                "scorer = \"bm25\"\n"
                                "[data]\n"
                                "cc_dataset = \"" + (fx.dir.path() / "absent.jsonl").string() +
                                    "\"\n");
    fs::path log = fx.dir.path() / "log";
    CHECK(cli("eval-cc --config " + cfg.string(), log) == 70);
    CHECK(slurp(log).find("cannot open dataset") != std::string::npos);
}

TEST_CASE("cli bench writes sorted latency rows") {
    CliFixture fx;
    fs::path cfg = fx.dir.write("bench.toml",
                                "task = \"cc\"\n"
                                "seed = 5\n"
                                "out_dir = \"" + fx.out.string() + "\"\n"
                                "[retrieval]\n"
                                "chunker = \"fixed_lines\"\n"
                                "window_lines = 32\n"
                                "[bench]\n"
                                "repetitions = 1\n"
                                "synthetic_symbols = 30000\n"
                                "queries = 3\n"
                                "presets = [\"path_distance\", \"iou+line\", \"bm25+word\"]\n");
    fs::path log = fx.dir.path() / "log";
    REQUIRE(cli("bench --config " + cfg.string(), log) == 0);
    std::string csv = slurp(fx.out / "latency.csv");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);  // header + 3 presets
    json latency = json::parse(slurp(fx.out / "latency.json"));
    REQUIRE(latency.size() == 3);
    for (std::size_t i = 1; i < latency.size(); ++i) {
        CHECK(latency[i - 1].at("normalized_s_per_1M").get<double>() <=
              latency[i].at("normalized_s_per_1M").get<double>());
    }
    std::string summary = slurp(log);
    CHECK(summary.find("normalized seconds per 1M symbols") != std::string::npos);
}

TEST_CASE("cli eval-bl produces report files") {
    CliFixture fx;
    fx.dir.write("repo/bug.py", "def parse_header():\n    raise ValueError\n");
    fs::path ds = fx.dir.write(
        "bl.jsonl", "{\"repo_dir\": \"" + fx.repo.string() +
                        "\", \"issue_text\": \"ValueError in parse_header\", "
                        "\"ground_truth_files\": [\"bug.py\"]}\n");
    fs::path cfg = fx.dir.write("bl.toml",
                                "task = \"bl\"\n"
                                "out_dir = \"" + fx.out.string() + "\"\n"
                                "[retrieval]\n"
                                "chunker = \"whole_file\"\n"
                                "splitter = \"word\"\n"
                                "scorer = \"bm25\"\n"
                                "[data]\n"
                                "bl_dataset = \"" + ds.string() + "\"\n");
    fs::path log = fx.dir.path() / "log";
    REQUIRE(cli("eval-bl --config " + cfg.string(), log) == 0);
    json report = json::parse(slurp(fx.out / "eval_bl_report.json"));
    CHECK(report.at("metric") == "ndcg");
    CHECK(report.at("mean").at("0").get<double>() == 1.0);
    std::string csv = slurp(fx.out / "eval_bl_report.csv");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);
}

TEST_CASE("cli search emits one csv row per cell") {
    CliFixture fx;
    fs::path ds = fx.dir.write(
        "cc.jsonl", "{\"repo_dir\": \"" + fx.repo.string() +
                        "\", \"completion_file\": \"a.py\", \"target_line_index\": 1, "
                        "\"language\": \"python\", \"relevant_files\": [\"c/d.py\"]}\n");
    fs::path cfg = fx.dir.write("search.toml",
                                "task = \"cc\"\n"
                                "out_dir = \"" + fx.out.string() + "\"\n"
                                "[retrieval]\n"
                                "chunker = \"whole_file\"\n"
                                "splitter = \"word\"\n"
                                "scorer = \"bm25\"\n"
                                "[data]\n"
                                "cc_dataset = \"" + ds.string() + "\"\n"
                                "[search]\n"
                                "scorers = [\"bm25\", \"iou\"]\n"
                                "splitters = [\"line\", \"word\"]\n"
                                "windows = [8]\n"
                                "budgets = [64]\n"
                                "selection_budget = 64\n"
                                "chunker_stage = false\n"
                                "reranker_stage = false\n");
    fs::path log = fx.dir.path() / "log";
    REQUIRE(cli("search --config " + cfg.string(), log) == 0);
    std::string csv = slurp(fx.out / "search.csv");
    // header + 4 stage-1 cells + 1 stage-2 cell
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 6);
}
