#include "coderag/commands.hpp"

#include <filesystem>
#include <iostream>
#include <thread>

#include "coderag/bench.hpp"
#include "coderag/evaluation.hpp"
#include "coderag/scoring.hpp"
#include "coderag/util.hpp"

namespace coderag::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kIndexFormatVersion = 1;

RunConfig apply_flags(RunConfig cfg, const CommonFlags& flags) {
    if (flags.out_dir) cfg.out_dir = *flags.out_dir;
    if (flags.seed) cfg.seed = *flags.seed;
    if (flags.workers) cfg.workers = *flags.workers;
    return cfg;
}

int effective_workers(const RunConfig& cfg) {
    if (cfg.workers > 0) return cfg.workers;
    unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

json index_artifact_json(const RetrievalConfig& config, const RepoSnapshot& repo,
                         const std::vector<Chunk>& chunks, const InvertedIndex& index) {
    json chunks_j = json::array();
    for (const auto& c : chunks) {
        chunks_j.push_back({{"id", c.id},
                            {"file", c.file_path},
                            {"start_line", c.start_line},
                            {"end_line", c.end_line},
                            {"text", c.text}});
    }
    json docs = json::array();
    {
        std::vector<std::uint32_t> ids;
        ids.reserve(index.doc_len.size());
        for (const auto& [id, len] : index.doc_len) ids.push_back(id);
        std::sort(ids.begin(), ids.end());
        for (auto id : ids)
            docs.push_back({id, index.doc_len.at(id), index.doc_distinct.at(id)});
    }
    json postings = json::object();
    for (const auto& [token, plist] : index.postings) {
        json entries = json::array();
        for (const auto& p : plist) entries.push_back({p.chunk_id, p.term_frequency});
        postings[token] = std::move(entries);
    }
    json config_j = config.to_json();
    return {{"manifest",
             {{"format", kIndexFormatVersion},
              {"config_hash", util::to_hex(config.config_hash())},
              {"repo_hash", util::to_hex(repo.content_hash())},
              {"root_label", repo.root_label()}}},
            {"config", config_j},
            {"chunks", chunks_j},
            {"index",
             {{"doc_count", index.doc_count},
              {"avg_doc_len", index.avg_doc_len},
              {"docs", docs},
              {"postings", postings}}}};
}

struct LoadedIndex {
    json manifest;
    RetrievalConfig config;
    std::vector<Chunk> chunks;
    InvertedIndex index;
};

RetrievalConfig retrieval_config_from_json(const json& j) {
    RetrievalConfig c;
    c.chunker.kind = chunker_from_string(j.at("chunker").at("kind").get<std::string>());
    c.chunker.window_lines = j.at("chunker").at("window_lines").get<std::size_t>();
    c.chunker.target_chars = j.at("chunker").at("target_chars").get<std::size_t>();
    c.splitter = splitter_from_string(j.at("splitter").get<std::string>());
    c.scorer = scorer_from_string(j.at("scorer").get<std::string>());
    c.bm25.k1 = j.at("k1").get<double>();
    c.bm25.b = j.at("b").get<double>();
    c.query_window_lines = j.at("query_window_lines").get<std::size_t>();
    c.budget_tokens = j.at("budget_tokens").get<std::int64_t>();
    c.strict_stop = j.at("strict_stop").get<bool>();
    c.bl_prepend_file_path = j.at("bl_prepend_file_path").get<bool>();
    if (j.contains("bpe_merges_path"))
        c.bpe_merges_path = j.at("bpe_merges_path").get<std::string>();
    return c;
}

LoadedIndex load_index_artifact(const std::string& path) {
    LoadedIndex out;
    json j = json::parse(util::read_file(path));
    out.manifest = j.at("manifest");
    if (out.manifest.at("format").get<int>() != kIndexFormatVersion)
        throw std::runtime_error("unsupported index format version");
    out.config = retrieval_config_from_json(j.at("config"));
    for (const auto& c : j.at("chunks")) {
        Chunk chunk;
        chunk.id = c.at("id").get<std::uint32_t>();
        chunk.file_path = c.at("file").get<std::string>();
        chunk.start_line = c.at("start_line").get<std::size_t>();
        chunk.end_line = c.at("end_line").get<std::size_t>();
        chunk.text = c.at("text").get<std::string>();
        out.chunks.push_back(std::move(chunk));
    }
    const json& idx = j.at("index");
    out.index.doc_count = idx.at("doc_count").get<std::size_t>();
    out.index.avg_doc_len = idx.at("avg_doc_len").get<double>();
    for (const auto& d : idx.at("docs")) {
        std::uint32_t id = d[0].get<std::uint32_t>();
        out.index.doc_len[id] = d[1].get<std::uint32_t>();
        out.index.doc_distinct[id] = d[2].get<std::uint32_t>();
    }
    for (const auto& [token, entries] : idx.at("postings").items()) {
        auto& plist = out.index.postings[token];
        for (const auto& e : entries)
            plist.push_back({e[0].get<std::uint32_t>(), e[1].get<std::uint32_t>()});
    }
    return out;
}

void write_text(const fs::path& path, std::string_view content) {
    util::atomic_write_file(path, content);
    std::cerr << "wrote " << path.string() << "\n";
}

int run_guarded(const std::function<int()>& body) {
    try {
        return body();
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInternal;
    }
}

}  // namespace

int cmd_index(const std::string& config_path, const std::optional<std::string>& repo_dir,
              const CommonFlags& flags) {
    return run_guarded([&] {
        RunConfig cfg = apply_flags(RunConfig::from_toml_file(config_path), flags);
        std::string repo_path = repo_dir.value_or(cfg.repo_dir);
        if (repo_path.empty())
            throw ConfigError("no repository: pass --repo or set data.repo_dir");
        if (!scorer_uses_splitter(cfg.retrieval.scorer) ||
            cfg.retrieval.scorer == ScorerKind::hybrid)
            throw ConfigError("index artifacts are built for sparse scorers (bm25, iou)");

        RepoSnapshot repo = load_repo(repo_path, cfg.include_globs);
        auto merges = load_config_merges(cfg.retrieval);
        std::vector<Chunk> chunks = chunk_repo(repo, cfg.retrieval.chunker, Language::other);
        InvertedIndex index = build_index(chunks, cfg.retrieval.splitter, merges.get());

        fs::path out = fs::path(cfg.out_dir) / "index.json";
        write_text(out, index_artifact_json(cfg.retrieval, repo, chunks, index).dump(2));
        std::cout << "indexed " << repo.files().size() << " files, " << chunks.size()
                  << " chunks, " << repo.total_symbols() << " symbols\n";
        return kExitOk;
    });
}

int cmd_query(const std::string& index_path, const std::optional<std::string>& query_text,
              const std::optional<std::string>& query_file, std::size_t top_k,
              std::optional<std::int64_t> budget,
              const std::optional<std::string>& config_path) {
    if (!fs::exists(index_path)) {
        std::cerr << "error: index artifact not found: " << index_path << "\n";
        return kExitMissingArtifact;
    }
    if (query_text.has_value() == query_file.has_value()) {
        std::cerr << "error: pass exactly one of --query or --query-file\n";
        return kExitUsage;
    }
    return run_guarded([&]() -> int {
        LoadedIndex loaded = load_index_artifact(index_path);
        if (config_path) {
            RunConfig cfg = RunConfig::from_toml_file(*config_path);
            std::string expected = util::to_hex(cfg.retrieval.config_hash());
            std::string stored = loaded.manifest.at("config_hash").get<std::string>();
            if (expected != stored) {
                std::cerr << "error: config hash mismatch: artifact built with " << stored
                          << ", config resolves to " << expected
                          << "; rebuild the index or fix the config\n";
                return kExitMissingArtifact;
            }
        }
        std::string query = query_text ? *query_text : util::read_file(*query_file);
        auto merges = load_config_merges(loaded.config);
        TokenBag bag = split_text(query, loaded.config.splitter, merges.get());
        RankedList ranked = loaded.config.scorer == ScorerKind::iou
                                ? score_iou(loaded.index, bag)
                                : score_bm25(loaded.index, bag, loaded.config.bm25);
        if (ranked.items.size() > top_k) ranked.items.resize(top_k);
        std::int64_t effective_budget = budget.value_or(loaded.config.budget_tokens);
        PackedPrompt packed =
            pack_prompt(ranked, loaded.chunks, effective_budget,
                        make_budget_token_counter(loaded.config, merges),
                        loaded.config.strict_stop);
        std::cout << packed.to_json().dump(2) << "\n";
        return kExitOk;
    });
}

int cmd_eval_cc(const std::string& config_path, const CommonFlags& flags) {
    return run_guarded([&] {
        RunConfig cfg = apply_flags(RunConfig::from_toml_file(config_path), flags);
        if (cfg.cc_dataset.empty()) throw ConfigError("data.cc_dataset not set");
        auto dataset = load_cc_dataset(cfg.cc_dataset, cfg.include_globs);

        CcEvalOptions options;
        options.budgets = cfg.budgets;
        options.workers = effective_workers(cfg);
        options.provider = cfg.completion;
        EvalReport report = evaluate_cc(dataset, cfg.retrieval, options);

        json j = report.to_json();
        j["seed"] = cfg.seed;
        write_text(fs::path(cfg.out_dir) / "eval_cc_report.json", j.dump(2));
        write_text(fs::path(cfg.out_dir) / "eval_cc_report.csv", report.to_csv());
        std::cout << "task=cc metric=" << report.metric << " n=" << dataset.size()
                  << " errors=" << report.error_count << "\n";
        for (const auto& [b, mean] : report.mean_by_budget)
            std::cout << "  budget " << b << ": mean " << mean << "\n";
        if (report.mean_by_budget.empty()) std::cout << "  metric n/a (packing stats only)\n";
        return report.error_count == dataset.size() ? kExitInternal : kExitOk;
    });
}

int cmd_eval_bl(const std::string& config_path, const CommonFlags& flags) {
    return run_guarded([&] {
        RunConfig cfg = apply_flags(RunConfig::from_toml_file(config_path), flags);
        if (cfg.bl_dataset.empty()) throw ConfigError("data.bl_dataset not set");
        auto dataset = load_bl_dataset(cfg.bl_dataset, cfg.include_globs);

        EvalReport report = evaluate_bl(dataset, cfg.retrieval, effective_workers(cfg));
        json j = report.to_json();
        j["seed"] = cfg.seed;
        write_text(fs::path(cfg.out_dir) / "eval_bl_report.json", j.dump(2));
        write_text(fs::path(cfg.out_dir) / "eval_bl_report.csv", report.to_csv());
        std::cout << "task=bl metric=ndcg n=" << dataset.size()
                  << " errors=" << report.error_count;
        if (auto it = report.mean_by_budget.find(0); it != report.mean_by_budget.end())
            std::cout << " mean=" << it->second;
        std::cout << "\n";
        return report.error_count == dataset.size() ? kExitInternal : kExitOk;
    });
}

namespace {

RetrievalConfig preset_config(const RetrievalConfig& base, const std::string& preset) {
    RetrievalConfig cfg = base;
    std::string scorer = preset;
    std::string splitter;
    if (auto plus = preset.find('+'); plus != std::string::npos) {
        scorer = preset.substr(0, plus);
        splitter = preset.substr(plus + 1);
    }
    cfg.scorer = scorer_from_string(scorer);
    if (!splitter.empty()) cfg.splitter = splitter_from_string(splitter);
    return cfg;
}

}  // namespace

int cmd_bench(const std::string& config_path, const CommonFlags& flags) {
    return run_guarded([&] {
        RunConfig cfg = apply_flags(RunConfig::from_toml_file(config_path), flags);
        if (cfg.bench_presets.empty()) throw ConfigError("bench.presets must be non-empty");

        // Wall-clock comparisons are only meaningful single-threaded.
        RepoSnapshot repo =
            cfg.bench_synthetic_symbols > 0
                ? generate_synthetic_repo(cfg.seed, cfg.bench_synthetic_symbols)
                : (cfg.repo_dir.empty()
                       ? throw ConfigError("set bench.synthetic_symbols or data.repo_dir")
                       : load_repo(cfg.repo_dir, cfg.include_globs));
        auto queries = sample_bench_queries(repo, cfg.bench_query_count,
                                            cfg.retrieval.query_window_lines, cfg.seed + 1);

        std::vector<LatencyRecord> records;
        for (const auto& preset : cfg.bench_presets) {
            RetrievalConfig rc = preset_config(cfg.retrieval, preset);
            records.push_back(measure_latency(rc, repo, queries, cfg.bench_repetitions));
        }

        // Reports list configurations fastest first.
        if (records.size() >= 2) records = compare_latency(std::move(records)).records;
        std::string csv = latency_csv(records);
        json j = json::array();
        for (const auto& r : records) j.push_back(r.to_json());
        write_text(fs::path(cfg.out_dir) / "latency.csv", csv);
        write_text(fs::path(cfg.out_dir) / "latency.json", j.dump(2));

        std::cout << "normalized seconds per 1M symbols (" << repo.total_symbols()
                  << " symbols, " << cfg.bench_repetitions << " reps):\n";
        for (const auto& r : records)
            std::cout << "  " << r.label << ": " << r.normalized << " (index " << r.index_s
                      << "s, query " << r.query_s << "s)\n";
        return kExitOk;
    });
}

int cmd_search(const std::string& config_path, const CommonFlags& flags) {
    return run_guarded([&] {
        RunConfig cfg = apply_flags(RunConfig::from_toml_file(config_path), flags);

        SearchOutcome outcome;
        if (cfg.task == "cc") {
            if (cfg.cc_dataset.empty()) throw ConfigError("data.cc_dataset not set");
            auto dataset = load_cc_dataset(cfg.cc_dataset, cfg.include_globs);
            CcEvalOptions options;
            options.budgets = cfg.search.budgets;
            options.workers = effective_workers(cfg);
            options.provider = cfg.completion;
            StagePlan plan = make_cc_stage_plan(cfg.search);
            outcome = staged_search(plan, cfg.retrieval,
                                    make_cc_cell_evaluator(dataset, options));
        } else {
            if (cfg.bl_dataset.empty()) throw ConfigError("data.bl_dataset not set");
            auto dataset = load_bl_dataset(cfg.bl_dataset, cfg.include_globs);
            StagePlan plan = make_bl_stage_plan(cfg.search);
            outcome = staged_search(plan, cfg.retrieval,
                                    make_bl_cell_evaluator(dataset, effective_workers(cfg)));
        }

        write_text(fs::path(cfg.out_dir) / "search.json", outcome.to_json().dump(2));
        write_text(fs::path(cfg.out_dir) / "search.csv", outcome.to_csv());
        for (const auto& stage : outcome.stages)
            std::cout << "stage " << stage.name << ": winner " << stage.winner_label << "\n";
        std::cout << "final config: " << outcome.final_config.label() << "\n";
        return kExitOk;
    });
}

}  // namespace coderag::cli
