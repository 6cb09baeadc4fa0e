#include <optional>
#include <string>

#include <CLI11.hpp>

#include "coderag/commands.hpp"

using namespace coderag;

int main(int argc, char** argv) {
    CLI::App app{"coderag - repository-local code retrieval engine and benchmark harness"};
    app.require_subcommand(1);

    std::string config_path;
    std::string index_path;
    std::optional<std::string> repo_dir;
    std::optional<std::string> out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
    std::optional<std::string> query_text;
    std::optional<std::string> query_file;
    std::optional<std::int64_t> budget;
    std::size_t top_k = 1000000;
    std::optional<std::string> query_config;

    auto add_common = [&](CLI::App* cmd, bool needs_config = true) {
        if (needs_config)
            cmd->add_option("--config", config_path, "run config (TOML)")->required();
        cmd->add_option("--out", out_dir, "output directory (overrides config)");
        cmd->add_option("--seed", seed, "seed (overrides config)");
        cmd->add_option("--workers", workers, "worker threads (overrides config)");
    };

    CLI::App* index = app.add_subcommand("index", "build and persist a sparse index artifact");
    add_common(index);
    index->add_option("--repo", repo_dir, "repository directory (overrides data.repo_dir)");

    CLI::App* query = app.add_subcommand("query", "score a query against an index artifact");
    query->add_option("--index", index_path, "index artifact path")->required();
    query->add_option("--query", query_text, "query text");
    query->add_option("--query-file", query_file, "file containing the query text");
    query->add_option("--top-k", top_k, "rank cutoff before packing");
    query->add_option("--budget", budget, "token budget (default: artifact config)");
    query->add_option("--config", query_config, "verify artifact against this config");

    CLI::App* eval_cc = app.add_subcommand("eval-cc", "evaluate code completion retrieval");
    add_common(eval_cc);
    CLI::App* eval_bl = app.add_subcommand("eval-bl", "evaluate bug localization ranking");
    add_common(eval_bl);
    CLI::App* bench = app.add_subcommand("bench", "measure normalized retrieval latency");
    add_common(bench);
    CLI::App* search = app.add_subcommand("search", "staged configuration search");
    add_common(search);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : cli::kExitUsage;
    }

    cli::CommonFlags flags{out_dir, seed, workers};
    if (index->parsed()) return cli::cmd_index(config_path, repo_dir, flags);
    if (query->parsed())
        return cli::cmd_query(index_path, query_text, query_file, top_k, budget, query_config);
    if (eval_cc->parsed()) return cli::cmd_eval_cc(config_path, flags);
    if (eval_bl->parsed()) return cli::cmd_eval_bl(config_path, flags);
    if (bench->parsed()) return cli::cmd_bench(config_path, flags);
    if (search->parsed()) return cli::cmd_search(config_path, flags);
    return cli::kExitUsage;
}
