#include "coderag/bench.hpp"

#include <algorithm>
#include <chrono>
#include <random>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "coderag/scoring.hpp"
#include "coderag/util.hpp"

namespace coderag {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

json LatencyRecord::to_json() const {
    return {{"label", label},
            {"scorer", scorer},
            {"splitter", splitter},
            {"chunker", chunker},
            {"repo_label", repo_label},
            {"repo_symbols", repo_symbols},
            {"index_s", index_s},
            {"query_s", query_s},
            {"normalized_s_per_1M", normalized},
            {"query_only_s_per_1M", query_only_normalized},
            {"repetitions", repetitions},
            {"samples", samples}};
}

double normalize_latency(double total_s, std::uint64_t symbols) {
    if (symbols == 0) throw std::invalid_argument("cannot normalize over an empty repo");
    return total_s / (static_cast<double>(symbols) / 1e6);
}

namespace {

double median(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    std::size_t n = values.size();
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

LatencyRecord measure_latency(const RetrievalConfig& config, const RepoSnapshot& repo,
                              const std::vector<BenchQuery>& queries, int repetitions) {
    if (repetitions < 1) throw std::invalid_argument("repetitions must be >= 1");
    if (queries.empty()) throw std::invalid_argument("no bench queries given");

    LatencyRecord record;
    record.label = config.label();
    record.scorer = to_string(config.scorer);
    record.splitter =
        scorer_uses_splitter(config.scorer) ? to_string(config.splitter) : "none";
    record.chunker = to_string(config.chunker.kind);
    record.repo_label = repo.root_label();
    record.repo_symbols = repo.total_symbols();
    record.repetitions = repetitions;

    auto merges = load_config_merges(config);

    std::vector<double> index_samples;
    std::vector<double> query_samples;
    volatile double sink = 0.0;  // keep scoring work observable

    for (int rep = 0; rep < repetitions; ++rep) {
        double index_s = 0.0;
        double query_s = 0.0;
        switch (config.scorer) {
            case ScorerKind::bm25:
            case ScorerKind::iou: {
                auto t0 = Clock::now();
                std::vector<Chunk> chunks =
                    chunk_repo(repo, config.chunker, Language::other);
                InvertedIndex index = build_index(chunks, config.splitter, merges.get());
                index_s = seconds_since(t0);

                auto t1 = Clock::now();
                for (const auto& q : queries) {
                    TokenBag bag = split_text(q.text, config.splitter, merges.get());
                    RankedList ranked = config.scorer == ScorerKind::bm25
                                            ? score_bm25(index, bag, config.bm25)
                                            : score_iou(index, bag);
                    if (!ranked.items.empty()) sink = sink + ranked.items[0].score;
                }
                query_s = seconds_since(t1);
                break;
            }
            case ScorerKind::path_distance: {
                // Operates on directory metadata only; no content phase.
                auto t1 = Clock::now();
                for (const auto& q : queries) {
                    RankedList ranked = score_path_distance(repo, q.query_file);
                    if (!ranked.items.empty()) sink = sink + ranked.items[0].score;
                }
                query_s = seconds_since(t1);
                break;
            }
            case ScorerKind::structure: {
                auto t0 = Clock::now();
                ImportGraph graph = build_import_graph(repo, Language::other);
                index_s = seconds_since(t0);
                auto t1 = Clock::now();
                for (const auto& q : queries) {
                    RankedList ranked = score_structure(graph, repo, q.query_file);
                    sink = sink + static_cast<double>(ranked.items.size());
                }
                query_s = seconds_since(t1);
                break;
            }
            case ScorerKind::hybrid: {
                auto t0 = Clock::now();
                std::vector<Chunk> chunks =
                    chunk_repo(repo, config.chunker, Language::other);
                InvertedIndex index = build_index(chunks, config.splitter, merges.get());
                ImportGraph graph = build_import_graph(repo, Language::other);
                std::unordered_map<std::string, std::vector<std::uint32_t>> chunks_by_file;
                for (const auto& c : chunks) chunks_by_file[c.file_path].push_back(c.id);
                index_s = seconds_since(t0);
                auto t1 = Clock::now();
                for (const auto& q : queries) {
                    RankedList files = score_structure(graph, repo, q.query_file);
                    RankedList structural;
                    structural.kind = ItemKind::chunk;
                    for (const auto& item : files.items) {
                        auto it = chunks_by_file.find(repo.files()[item.id].path);
                        if (it == chunks_by_file.end()) continue;
                        for (std::uint32_t id : it->second)
                            structural.items.push_back({id, 0.0});
                    }
                    double rank = static_cast<double>(structural.items.size());
                    for (auto& item : structural.items) item.score = rank--;
                    TokenBag bag = split_text(q.text, config.splitter, merges.get());
                    RankedList backfill = score_bm25(index, bag, config.bm25);
                    RankedList combined = hybrid_compose(structural, backfill);
                    sink = sink + static_cast<double>(combined.items.size());
                }
                query_s = seconds_since(t1);
                break;
            }
            case ScorerKind::dense: {
                if (!config.embedding)
                    throw std::invalid_argument("dense bench needs an embedding provider");
                EmbeddingClient client(*config.embedding);
                // Document encoding counts as query-time work; the cache is
                // bypassed so every repetition pays the full encoding cost.
                auto t1 = Clock::now();
                std::vector<Chunk> chunks =
                    chunk_repo(repo, config.chunker, Language::other);
                std::vector<std::string> texts;
                texts.reserve(chunks.size());
                for (const auto& c : chunks) texts.push_back(c.text);
                auto doc_vecs = client.embed_texts(texts, /*bypass_cache=*/true);
                std::vector<std::pair<std::uint32_t, EmbeddingVector>> docs;
                for (std::size_t i = 0; i < chunks.size(); ++i)
                    docs.emplace_back(chunks[i].id, std::move(doc_vecs[i]));
                for (const auto& q : queries) {
                    auto query_vec = client.embed_texts({q.text}, /*bypass_cache=*/true);
                    RankedList ranked = score_dense(query_vec[0], docs);
                    if (!ranked.items.empty()) sink = sink + ranked.items[0].score;
                }
                query_s = seconds_since(t1);
                break;
            }
        }
        index_samples.push_back(index_s);
        query_samples.push_back(query_s);
        record.samples.push_back(index_s + query_s);
    }
    (void)sink;

    record.index_s = median(index_samples);
    record.query_s = median(query_samples);
    record.normalized = normalize_latency(record.index_s + record.query_s, record.repo_symbols);
    record.query_only_normalized = normalize_latency(record.query_s, record.repo_symbols);
    return record;
}

LatencyComparison compare_latency(std::vector<LatencyRecord> records) {
    if (records.size() < 2)
        throw std::invalid_argument("latency comparison needs at least two records");
    for (const auto& r : records) {
        if (r.repo_label != records[0].repo_label || r.repo_symbols != records[0].repo_symbols)
            throw std::invalid_argument("latency records measured on different repos");
    }
    LatencyComparison cmp;
    cmp.records = std::move(records);
    std::sort(cmp.records.begin(), cmp.records.end(),
              [](const LatencyRecord& a, const LatencyRecord& b) {
                  if (a.normalized != b.normalized) return a.normalized < b.normalized;
                  return a.label < b.label;
              });
    cmp.ratios.assign(cmp.records.size(), std::vector<double>(cmp.records.size(), 1.0));
    for (std::size_t i = 0; i < cmp.records.size(); ++i) {
        for (std::size_t j = 0; j < cmp.records.size(); ++j) {
            cmp.ratios[i][j] = cmp.records[j].normalized == 0.0
                                   ? 0.0
                                   : cmp.records[i].normalized / cmp.records[j].normalized;
        }
    }
    return cmp;
}

std::string latency_csv(const std::vector<LatencyRecord>& records) {
    std::ostringstream out;
    out << "config,scorer,splitter,chunker,repo_symbols,index_s,query_s,normalized_s_per_1M,"
           "repetitions\n";
    for (const auto& r : records) {
        out << r.label << ',' << r.scorer << ',' << r.splitter << ',' << r.chunker << ','
            << r.repo_symbols << ',' << r.index_s << ',' << r.query_s << ',' << r.normalized
            << ',' << r.repetitions << "\n";
    }
    return out.str();
}

namespace {

const std::vector<std::string>& identifier_pool() {
    static const std::vector<std::string> pool = [] {
        static const char* roots[] = {"get",  "set",  "load",  "store", "parse", "emit",
                                      "read", "write", "index", "count", "merge", "split",
                                      "scan", "flush", "build", "run",   "map",   "hash"};
        static const char* nouns[] = {"token",  "chunk",  "file",   "line",   "node",
                                      "buffer", "record", "table",  "entry",  "cache",
                                      "config", "result", "stream", "cursor", "batch"};
        static const char* suffixes[] = {"", "s", "_impl", "_ex", "_v2", "_ptr"};
        std::vector<std::string> out;
        for (const char* r : roots)
            for (const char* n : nouns)
                for (const char* s : suffixes) out.push_back(std::string(r) + "_" + n + s);
        return out;
    }();
    return pool;
}

}  // namespace

RepoSnapshot generate_synthetic_repo(std::uint64_t seed, std::uint64_t target_symbols) {
    std::mt19937_64 rng(seed);
    const auto& pool = identifier_pool();
    std::uniform_int_distribution<std::size_t> ident(0, pool.size() - 1);
    std::uniform_int_distribution<int> tokens_per_line(2, 9);
    std::uniform_int_distribution<int> lines_per_file(120, 320);
    std::uniform_int_distribution<int> indent_dist(0, 3);
    std::uniform_int_distribution<int> dir_dist(0, 11);
    std::uniform_int_distribution<int> sub_dist(0, 3);

    std::vector<SourceFile> files;
    std::uint64_t symbols = 0;
    std::size_t file_no = 0;
    while (symbols < target_symbols) {
        std::string path = "pkg" + std::to_string(dir_dist(rng));
        if (int sub = sub_dist(rng); sub > 0) path += "/mod" + std::to_string(sub);
        path += "/file_" + std::to_string(file_no++) + ".py";

        std::string text;
        int lines = lines_per_file(rng);
        for (int l = 0; l < lines; ++l) {
            int indent = indent_dist(rng);
            for (int k = 0; k < indent; ++k) text += "    ";
            int tn = tokens_per_line(rng);
            for (int k = 0; k < tn; ++k) {
                if (k > 0) text += k % 3 == 1 ? " = " : " ";
                text += pool[ident(rng)];
            }
            text += "\n";
        }
        symbols += util::count_scalars(text);
        files.push_back({std::move(path), std::move(text), 0});
    }
    return RepoSnapshot::from_files("synthetic-" + std::to_string(seed), std::move(files));
}

std::vector<BenchQuery> sample_bench_queries(const RepoSnapshot& repo, std::size_t count,
                                             std::size_t window_lines, std::uint64_t seed) {
    if (repo.files().empty()) throw std::invalid_argument("cannot sample queries: empty repo");
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> file_dist(0, repo.files().size() - 1);
    std::vector<BenchQuery> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const SourceFile& f = repo.files()[file_dist(rng)];
        auto lines = util::split_lines(f.text);
        BenchQuery q;
        q.query_file = f.path;
        if (!lines.empty()) {
            std::uniform_int_distribution<std::size_t> start_dist(0, lines.size() - 1);
            std::size_t start = start_dist(rng);
            std::size_t end = std::min(start + window_lines, lines.size());
            std::vector<std::string_view> window(
                lines.begin() + static_cast<std::ptrdiff_t>(start),
                lines.begin() + static_cast<std::ptrdiff_t>(end));
            q.text = util::join_lines(window);
        }
        out.push_back(std::move(q));
    }
    return out;
}

}  // namespace coderag
