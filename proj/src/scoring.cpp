#include "coderag/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

#include "coderag/util.hpp"

namespace coderag {

void sort_ranked(std::vector<ScoredItem>& items) {
    std::sort(items.begin(), items.end(), [](const ScoredItem& a, const ScoredItem& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.id < b.id;
    });
}

InvertedIndex build_index(const std::vector<Chunk>& chunks, SplitterKind splitter,
                          const MergeTable* merges) {
    InvertedIndex index;
    index.doc_count = chunks.size();
    std::uint64_t total_len = 0;
    for (const auto& chunk : chunks) {
        TokenBag bag = split_text(chunk.text, splitter, merges);
        index.doc_len[chunk.id] = static_cast<std::uint32_t>(bag.total);
        index.doc_distinct[chunk.id] = static_cast<std::uint32_t>(bag.distinct());
        total_len += bag.total;
        for (const auto& [token, tf] : bag.counts) {
            index.postings[token].push_back({chunk.id, tf});
        }
    }
    for (auto& [token, postings] : index.postings) {
        std::sort(postings.begin(), postings.end(),
                  [](const Posting& a, const Posting& b) { return a.chunk_id < b.chunk_id; });
    }
    index.avg_doc_len = index.doc_count == 0
                            ? 0.0
                            : static_cast<double>(total_len) / static_cast<double>(index.doc_count);
    return index;
}

RankedList score_bm25(const InvertedIndex& index, const TokenBag& query,
                      const Bm25Params& params) {
    std::unordered_map<std::uint32_t, double> acc;
    const double n = static_cast<double>(index.doc_count);
    for (const auto& [term, qtf] : query.counts) {
        auto it = index.postings.find(term);
        if (it == index.postings.end()) continue;
        const auto& postings = it->second;
        const double df = static_cast<double>(postings.size());
        const double idf = std::log((n - df + 0.5) / (df + 0.5) + 1.0);
        const double weight = params.use_query_tf ? static_cast<double>(qtf) : 1.0;
        for (const auto& p : postings) {
            const double tf = static_cast<double>(p.term_frequency);
            const double dl = static_cast<double>(index.doc_len.at(p.chunk_id));
            const double norm =
                index.avg_doc_len > 0.0
                    ? params.k1 * (1.0 - params.b + params.b * dl / index.avg_doc_len)
                    : params.k1;
            acc[p.chunk_id] += weight * idf * tf * (params.k1 + 1.0) / (tf + norm);
        }
    }
    RankedList out;
    out.kind = ItemKind::chunk;
    out.items.reserve(acc.size());
    for (const auto& [id, score] : acc) out.items.push_back({id, score});
    sort_ranked(out.items);
    return out;
}

RankedList score_iou(const InvertedIndex& index, const TokenBag& query) {
    std::unordered_map<std::uint32_t, std::uint32_t> overlap;
    for (const auto& [term, qtf] : query.counts) {
        auto it = index.postings.find(term);
        if (it == index.postings.end()) continue;
        for (const auto& p : it->second) ++overlap[p.chunk_id];
    }
    RankedList out;
    out.kind = ItemKind::chunk;
    out.items.reserve(overlap.size());
    const double q_distinct = static_cast<double>(query.distinct());
    for (const auto& [id, inter] : overlap) {
        const double d_distinct = static_cast<double>(index.doc_distinct.at(id));
        const double uni = q_distinct + d_distinct - static_cast<double>(inter);
        out.items.push_back({id, static_cast<double>(inter) / uni});
    }
    sort_ranked(out.items);
    return out;
}

namespace {

std::vector<std::string_view> path_segments(std::string_view path) {
    std::vector<std::string_view> segs;
    std::size_t start = 0;
    while (start < path.size()) {
        std::size_t slash = path.find('/', start);
        if (slash == std::string_view::npos) {
            segs.push_back(path.substr(start));
            break;
        }
        segs.push_back(path.substr(start, slash - start));
        start = slash + 1;
    }
    return segs;
}

std::vector<std::string_view> directory_segments(std::string_view file_path) {
    auto segs = path_segments(file_path);
    if (!segs.empty()) segs.pop_back();  // drop the file name
    return segs;
}

}  // namespace

std::size_t path_tree_distance(std::string_view file_a, std::string_view file_b) {
    auto a = directory_segments(file_a);
    auto b = directory_segments(file_b);
    std::size_t common = 0;
    while (common < a.size() && common < b.size() && a[common] == b[common]) ++common;
    return (a.size() - common) + (b.size() - common);
}

RankedList score_path_distance(const RepoSnapshot& repo, std::string_view query_file) {
    if (!repo.find_file(query_file))
        throw std::invalid_argument("query file not in repo: " + std::string(query_file));
    RankedList out;
    out.kind = ItemKind::file;
    const auto& files = repo.files();
    out.items.reserve(files.size() > 0 ? files.size() - 1 : 0);
    for (std::size_t i = 0; i < files.size(); ++i) {
        if (files[i].path == query_file) continue;
        double distance = static_cast<double>(path_tree_distance(query_file, files[i].path));
        out.items.push_back({static_cast<std::uint32_t>(i), -distance});
    }
    // Files are stored sorted by path, so the id tie-break matches the
    // lexicographic path tie-break.
    sort_ranked(out.items);
    return out;
}

namespace {

// Candidate repo paths an import statement may refer to.
void append_python_candidates(std::string_view module_dotted, std::vector<std::string>& out) {
    std::string base;
    for (char c : module_dotted) base.push_back(c == '.' ? '/' : c);
    out.push_back(base + ".py");
    out.push_back(base + "/__init__.py");
}

std::string_view strip_comment(std::string_view line) {
    std::size_t hash = line.find("//");
    if (hash != std::string_view::npos) line = line.substr(0, hash);
    return line;
}

// Splits "a, b as c, d" on commas and drops aliases.
std::vector<std::string> split_import_list(std::string_view list) {
    std::vector<std::string> items;
    std::size_t start = 0;
    while (start <= list.size()) {
        std::size_t comma = list.find(',', start);
        std::string_view item = comma == std::string_view::npos
                                    ? list.substr(start)
                                    : list.substr(start, comma - start);
        item = util::trim(item);
        std::size_t as_pos = item.find(" as ");
        if (as_pos != std::string_view::npos) item = util::trim(item.substr(0, as_pos));
        if (!item.empty()) items.emplace_back(item);
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return items;
}

std::string_view strip_hash_comment(std::string_view line) {
    std::size_t hash = line.find('#');
    if (hash != std::string_view::npos) line = line.substr(0, hash);
    return line;
}

void python_import_candidates(std::string_view line, std::string_view importer_dir,
                              std::vector<std::string>& out) {
    std::string_view t = util::trim(strip_hash_comment(line));
    if (t.starts_with("import ")) {
        for (const auto& module : split_import_list(t.substr(7)))
            append_python_candidates(module, out);
        return;
    }
    if (!t.starts_with("from ")) return;
    std::string_view rest = util::trim(t.substr(5));
    std::size_t import_pos = rest.find(" import ");
    if (import_pos == std::string_view::npos) return;
    std::string_view module = util::trim(rest.substr(0, import_pos));
    std::string_view names = util::trim(rest.substr(import_pos + 8));

    std::vector<std::string> parts;
    if (!module.empty() && module.front() == '.') {
        // Relative import: resolve against the importing file's directory.
        std::size_t dots = 0;
        while (dots < module.size() && module[dots] == '.') ++dots;
        auto dir_segs = path_segments(importer_dir);
        std::size_t up = dots - 1;
        while (up > 0 && !dir_segs.empty()) {
            dir_segs.pop_back();
            --up;
        }
        for (auto seg : dir_segs) parts.emplace_back(seg);
        module = module.substr(dots);
    }
    {
        std::size_t start = 0;
        while (start < module.size()) {
            std::size_t dot = module.find('.', start);
            std::string_view seg = dot == std::string_view::npos
                                       ? module.substr(start)
                                       : module.substr(start, dot - start);
            if (!seg.empty()) parts.emplace_back(seg);
            if (dot == std::string_view::npos) break;
            start = dot + 1;
        }
    }
    auto join = [](const std::vector<std::string>& segs) {
        std::string s;
        for (std::size_t i = 0; i < segs.size(); ++i) {
            if (i > 0) s += '/';
            s += segs[i];
        }
        return s;
    };
    std::string module_path = join(parts);
    if (!module_path.empty()) {
        out.push_back(module_path + ".py");
        out.push_back(module_path + "/__init__.py");
    }
    // "from pkg import mod" may name modules, not symbols.
    for (const auto& name : split_import_list(names)) {
        if (name == "*") continue;
        std::string base = module_path.empty() ? name : module_path + "/" + name;
        out.push_back(base + ".py");
        out.push_back(base + "/__init__.py");
    }
}

void jvm_import_candidates(std::string_view line, std::vector<std::string>& out) {
    std::string_view t = util::trim(strip_comment(line));
    if (!t.starts_with("import ")) return;
    std::string_view target = util::trim(t.substr(7));
    if (target.starts_with("static ")) target = util::trim(target.substr(7));
    if (!target.empty() && target.back() == ';')
        target = util::trim(target.substr(0, target.size() - 1));
    std::size_t as_pos = target.find(" as ");
    if (as_pos != std::string_view::npos) target = util::trim(target.substr(0, as_pos));
    if (target.empty()) return;
    bool wildcard = target.ends_with(".*");
    if (wildcard) target = target.substr(0, target.size() - 2);
    std::string base;
    for (char c : target) base.push_back(c == '.' ? '/' : c);
    if (wildcard) {
        out.push_back(base + "/*");  // expanded against the file table by caller
        return;
    }
    out.push_back(base + ".java");
    out.push_back(base + ".kt");
    // Importing a member of a type: try the enclosing path too.
    std::size_t slash = base.rfind('/');
    if (slash != std::string::npos) {
        out.push_back(base.substr(0, slash) + ".java");
        out.push_back(base.substr(0, slash) + ".kt");
    }
}

}  // namespace

ImportGraph build_import_graph(const RepoSnapshot& repo, Language language) {
    ImportGraph graph;
    const auto& files = repo.files();
    graph.edges_from.resize(files.size());
    for (std::size_t fi = 0; fi < files.size(); ++fi) {
        const auto& file = files[fi];
        std::string importer_dir;
        if (auto slash = file.path.rfind('/'); slash != std::string::npos)
            importer_dir = file.path.substr(0, slash);
        std::set<std::uint32_t> targets;
        for (auto line : util::split_lines(file.text)) {
            std::vector<std::string> candidates;
            if (language == Language::python) {
                python_import_candidates(line, importer_dir, candidates);
            } else {
                jvm_import_candidates(line, candidates);
            }
            for (const auto& cand : candidates) {
                if (cand.ends_with("/*")) {
                    std::string dir = cand.substr(0, cand.size() - 2) + "/";
                    for (std::size_t gi = 0; gi < files.size(); ++gi) {
                        const std::string& p = files[gi].path;
                        if (gi != fi && p.starts_with(dir) &&
                            p.find('/', dir.size()) == std::string::npos)
                            targets.insert(static_cast<std::uint32_t>(gi));
                    }
                    continue;
                }
                std::size_t gi = repo.file_index(cand);
                if (gi < files.size() && gi != fi)
                    targets.insert(static_cast<std::uint32_t>(gi));
            }
        }
        graph.edges_from[fi].assign(targets.begin(), targets.end());
    }
    return graph;
}

RankedList score_structure(const ImportGraph& graph, const RepoSnapshot& repo,
                           std::string_view query_file) {
    std::size_t qi = repo.file_index(query_file);
    if (qi >= repo.files().size())
        throw std::invalid_argument("query file not in graph: " + std::string(query_file));
    RankedList out;
    out.kind = ItemKind::file;
    const auto& targets = graph.edges_from[qi];  // sorted file indices = path order
    double score = static_cast<double>(targets.size());
    for (std::uint32_t t : targets) out.items.push_back({t, score--});
    return out;
}

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.values.size() != b.values.size())
        throw std::invalid_argument("embedding dimension mismatch: " +
                                    std::to_string(a.values.size()) + " vs " +
                                    std::to_string(b.values.size()));
    double dot = 0.0;
    double norm_a = 0.0;
    double norm_b = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        dot += a.values[i] * b.values[i];
        norm_a += a.values[i] * a.values[i];
        norm_b += b.values[i] * b.values[i];
    }
    if (norm_a == 0.0 || norm_b == 0.0) return 0.0;
    return dot / (std::sqrt(norm_a) * std::sqrt(norm_b));
}

RankedList score_dense(const EmbeddingVector& query,
                       const std::vector<std::pair<std::uint32_t, EmbeddingVector>>& docs,
                       ItemKind kind) {
    RankedList out;
    out.kind = kind;
    out.items.reserve(docs.size());
    for (const auto& [id, vec] : docs) out.items.push_back({id, cosine_similarity(query, vec)});
    sort_ranked(out.items);
    return out;
}

}  // namespace coderag
