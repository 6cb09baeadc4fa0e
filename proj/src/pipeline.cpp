#include "coderag/pipeline.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "coderag/util.hpp"

namespace coderag {

using nlohmann::json;

ScorerKind scorer_from_string(std::string_view name) {
    if (name == "bm25") return ScorerKind::bm25;
    if (name == "iou") return ScorerKind::iou;
    if (name == "dense") return ScorerKind::dense;
    if (name == "path_distance") return ScorerKind::path_distance;
    if (name == "structure") return ScorerKind::structure;
    if (name == "hybrid") return ScorerKind::hybrid;
    throw std::invalid_argument("unknown scorer: " + std::string(name));
}

std::string to_string(ScorerKind kind) {
    switch (kind) {
        case ScorerKind::bm25: return "bm25";
        case ScorerKind::iou: return "iou";
        case ScorerKind::dense: return "dense";
        case ScorerKind::path_distance: return "path_distance";
        case ScorerKind::structure: return "structure";
        case ScorerKind::hybrid: return "hybrid";
    }
    return "bm25";
}

bool scorer_uses_splitter(ScorerKind kind) {
    switch (kind) {
        case ScorerKind::bm25:
        case ScorerKind::iou:
        case ScorerKind::hybrid: return true;
        case ScorerKind::dense:
        case ScorerKind::path_distance:
        case ScorerKind::structure: return false;
    }
    return false;
}

json RetrievalConfig::to_json() const {
    json j;
    j["chunker"] = {{"kind", coderag::to_string(chunker.kind)},
                    {"window_lines", chunker.window_lines},
                    {"target_chars", chunker.target_chars}};
    j["splitter"] = coderag::to_string(scorer_uses_splitter(scorer) ? splitter
                                                                    : SplitterKind::none);
    j["scorer"] = coderag::to_string(scorer);
    j["k1"] = bm25.k1;
    j["b"] = bm25.b;
    j["query_window_lines"] = query_window_lines;
    j["budget_tokens"] = budget_tokens;
    j["strict_stop"] = strict_stop;
    j["bl_prepend_file_path"] = bl_prepend_file_path;
    if (!bpe_merges_path.empty()) j["bpe_merges_path"] = bpe_merges_path;
    if (embedding) j["embedding_model"] = embedding->model;
    return j;
}

std::string RetrievalConfig::label() const {
    std::string s = coderag::to_string(scorer);
    if (scorer_uses_splitter(scorer)) s += "-" + coderag::to_string(splitter);
    switch (chunker.kind) {
        case ChunkerKind::whole_file: s += "-whole"; break;
        case ChunkerKind::fixed_lines:
            s += chunker.window_lines == 0 ? "-whole"
                                           : "-fixed" + std::to_string(chunker.window_lines);
            break;
        case ChunkerKind::recursive:
            s += "-recursive" + std::to_string(chunker.target_chars);
            break;
    }
    return s;
}

std::uint64_t RetrievalConfig::config_hash() const {
    return util::fnv1a64(to_json().dump());
}

json PackedPrompt::to_json() const {
    json items_j = json::array();
    for (const auto& item : items) {
        items_j.push_back({{"file", item.chunk.file_path},
                           {"start_line", item.chunk.start_line},
                           {"end_line", item.chunk.end_line},
                           {"tokens", item.token_count}});
    }
    return {{"budget", budget},
            {"total_tokens", total_tokens},
            {"items", items_j},
            {"skipped", skipped_count}};
}

std::string PackedPrompt::context_text() const {
    std::string out;
    for (const auto& item : items) {
        if (!out.empty()) out += "\n";
        out += item.chunk.text;
    }
    return out;
}

std::shared_ptr<const MergeTable> load_config_merges(const RetrievalConfig& config) {
    if (config.bpe_merges_path.empty()) return nullptr;
    return std::make_shared<MergeTable>(load_merge_table(config.bpe_merges_path));
}

TokenCounter make_budget_token_counter(const RetrievalConfig& config,
                                       std::shared_ptr<const MergeTable> merges) {
    if (!config.bpe_merges_path.empty() && merges) {
        return [merges](std::string_view text) { return count_bpe_tokens(text, *merges); };
    }
    return [](std::string_view text) { return count_whitespace_tokens(text); };
}

std::string build_cc_query(const CompletionInstance& instance, std::size_t query_window_lines) {
    const SourceFile* file = instance.repo->find_file(instance.completion_file);
    if (!file) throw std::invalid_argument("completion file missing: " + instance.completion_file);
    if (instance.target_line_index >= file->line_count)
        throw std::invalid_argument("target line out of range in " + instance.completion_file);
    const std::size_t t = instance.target_line_index;
    if (t == 0) return "";
    auto lines = util::split_lines(file->text);
    std::size_t first = t > query_window_lines ? t - query_window_lines : 0;
    std::vector<std::string_view> window(lines.begin() + static_cast<std::ptrdiff_t>(first),
                                         lines.begin() + static_cast<std::ptrdiff_t>(t));
    return util::join_lines(window);
}

std::string build_bl_query(const BugLocalizationInstance& instance) {
    return instance.issue_text;
}

std::vector<Chunk> exclude_self_context(std::vector<Chunk> chunks,
                                        const CompletionInstance& instance) {
    const std::size_t t = instance.target_line_index;
    std::erase_if(chunks, [&](const Chunk& c) {
        return c.file_path == instance.completion_file && c.end_line >= t;
    });
    return chunks;
}

PackedPrompt pack_prompt(const RankedList& ranked, const std::vector<Chunk>& chunks,
                         std::int64_t budget, const TokenCounter& token_counter,
                         bool strict_stop) {
    if (budget < 0) throw std::invalid_argument("budget must be >= 0");
    std::unordered_map<std::uint32_t, const Chunk*> by_id;
    by_id.reserve(chunks.size());
    for (const auto& c : chunks) by_id.emplace(c.id, &c);

    PackedPrompt out;
    out.budget = budget;
    std::int64_t remaining = budget;
    for (std::size_t i = 0; i < ranked.items.size(); ++i) {
        auto it = by_id.find(ranked.items[i].id);
        if (it == by_id.end())
            throw std::invalid_argument("ranked id not among candidate chunks: " +
                                        std::to_string(ranked.items[i].id));
        std::int64_t tokens = token_counter(it->second->text);
        if (tokens > remaining) {
            if (strict_stop) {
                out.skipped_count += ranked.items.size() - i;
                break;
            }
            ++out.skipped_count;
            continue;
        }
        out.items.push_back({*it->second, tokens});
        out.total_tokens += tokens;
        remaining -= tokens;
    }
    return out;
}

RankedList hybrid_compose(const RankedList& structural, const RankedList& backfill) {
    if (structural.kind != backfill.kind)
        throw std::invalid_argument("hybrid_compose requires matching item kinds");
    RankedList out;
    out.kind = structural.kind;
    std::unordered_set<std::uint32_t> seen;
    for (const auto& item : structural.items) {
        if (seen.insert(item.id).second) out.items.push_back(item);
    }
    for (const auto& item : backfill.items) {
        if (seen.insert(item.id).second) out.items.push_back(item);
    }
    // Synthetic strictly decreasing scores keep the RankedList invariants.
    double score = static_cast<double>(out.items.size());
    for (auto& item : out.items) item.score = score--;
    return out;
}

namespace {

// Expands a file-level ranking to the chunk level: chunks follow their
// file's rank, in span order within a file.
RankedList file_ranking_to_chunks(const RankedList& files, const RepoSnapshot& repo,
                                  const std::vector<Chunk>& chunks) {
    std::unordered_map<std::string, std::vector<std::uint32_t>> chunks_by_file;
    for (const auto& c : chunks) chunks_by_file[c.file_path].push_back(c.id);

    RankedList out;
    out.kind = ItemKind::chunk;
    for (const auto& item : files.items) {
        const auto& path = repo.files()[item.id].path;
        auto it = chunks_by_file.find(path);
        if (it == chunks_by_file.end()) continue;
        for (std::uint32_t id : it->second) out.items.push_back({id, 0.0});
    }
    double score = static_cast<double>(out.items.size());
    for (auto& item : out.items) item.score = score--;
    return out;
}

RankedList dense_rank_chunks(const RetrievalConfig& config, const std::string& query,
                             const std::vector<Chunk>& chunks) {
    if (!config.embedding)
        throw std::invalid_argument("dense scorer requires an embedding provider config");
    EmbeddingClient client(*config.embedding);
    std::vector<std::string> texts;
    texts.reserve(chunks.size() + 1);
    texts.push_back(query);
    for (const auto& c : chunks) texts.push_back(c.text);
    auto vectors = client.embed_texts(texts);
    std::vector<std::pair<std::uint32_t, EmbeddingVector>> docs;
    docs.reserve(chunks.size());
    for (std::size_t i = 0; i < chunks.size(); ++i)
        docs.emplace_back(chunks[i].id, std::move(vectors[i + 1]));
    return score_dense(vectors[0], docs, ItemKind::chunk);
}

}  // namespace

RankedCandidates rank_cc(const RetrievalConfig& config, const CompletionInstance& instance) {
    RankedCandidates out;
    out.chunks = exclude_self_context(
        chunk_repo(*instance.repo, config.chunker, instance.language), instance);
    const std::string query = build_cc_query(instance, config.query_window_lines);

    switch (config.scorer) {
        case ScorerKind::bm25:
        case ScorerKind::iou: {
            auto merges = load_config_merges(config);
            InvertedIndex index = build_index(out.chunks, config.splitter, merges.get());
            TokenBag query_bag = split_text(query, config.splitter, merges.get());
            out.ranking = config.scorer == ScorerKind::bm25
                              ? score_bm25(index, query_bag, config.bm25)
                              : score_iou(index, query_bag);
            break;
        }
        case ScorerKind::dense: {
            out.ranking = dense_rank_chunks(config, query, out.chunks);
            break;
        }
        case ScorerKind::path_distance: {
            RankedList files = score_path_distance(*instance.repo, instance.completion_file);
            out.ranking = file_ranking_to_chunks(files, *instance.repo, out.chunks);
            break;
        }
        case ScorerKind::structure: {
            ImportGraph graph = build_import_graph(*instance.repo, instance.language);
            RankedList files = score_structure(graph, *instance.repo, instance.completion_file);
            out.ranking = file_ranking_to_chunks(files, *instance.repo, out.chunks);
            break;
        }
        case ScorerKind::hybrid: {
            ImportGraph graph = build_import_graph(*instance.repo, instance.language);
            RankedList files = score_structure(graph, *instance.repo, instance.completion_file);
            RankedList structural = file_ranking_to_chunks(files, *instance.repo, out.chunks);
            auto merges = load_config_merges(config);
            InvertedIndex index = build_index(out.chunks, config.splitter, merges.get());
            TokenBag query_bag = split_text(query, config.splitter, merges.get());
            RankedList backfill = score_bm25(index, query_bag, config.bm25);
            out.ranking = hybrid_compose(structural, backfill);
            break;
        }
    }
    return out;
}

PackedPrompt run_cc_retrieval(const RetrievalConfig& config, const CompletionInstance& instance) {
    RankedCandidates ranked = rank_cc(config, instance);
    auto merges = load_config_merges(config);
    return pack_prompt(ranked.ranking, ranked.chunks, config.budget_tokens,
                       make_budget_token_counter(config, merges), config.strict_stop);
}

RankedList run_bl_retrieval(const RetrievalConfig& config,
                            const BugLocalizationInstance& instance) {
    if (config.chunker.kind != ChunkerKind::whole_file &&
        !(config.chunker.kind == ChunkerKind::fixed_lines && config.chunker.window_lines == 0))
        throw std::invalid_argument("bug localization ranks whole files; use the whole_file chunker");

    const std::string query = build_bl_query(instance);
    RankedList out;
    out.kind = ItemKind::file;
    if (util::trim(query).empty()) return out;

    const auto& files = instance.repo->files();
    // One chunk per file in file order makes chunk ids equal file indices.
    std::vector<Chunk> chunks;
    chunks.reserve(files.size());
    for (std::size_t i = 0; i < files.size(); ++i) {
        Chunk c = chunk_whole_file(files[i])[0];
        c.id = static_cast<std::uint32_t>(i);
        if (config.bl_prepend_file_path) c.text = files[i].path + "\n" + c.text;
        chunks.push_back(std::move(c));
    }

    switch (config.scorer) {
        case ScorerKind::bm25:
        case ScorerKind::iou: {
            auto merges = load_config_merges(config);
            InvertedIndex index = build_index(chunks, config.splitter, merges.get());
            TokenBag query_bag = split_text(query, config.splitter, merges.get());
            out.items = (config.scorer == ScorerKind::bm25
                             ? score_bm25(index, query_bag, config.bm25)
                             : score_iou(index, query_bag))
                            .items;
            break;
        }
        case ScorerKind::dense: {
            RankedList chunk_ranking = dense_rank_chunks(config, query, chunks);
            out.items = chunk_ranking.items;
            break;
        }
        default:
            throw std::invalid_argument(
                "scorer " + coderag::to_string(config.scorer) +
                " needs a query file and does not apply to bug localization");
    }
    return out;
}

}  // namespace coderag
