#include "coderag/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <stdexcept>

#include "coderag/util.hpp"

namespace coderag {

namespace fs = std::filesystem;
using nlohmann::json;

Language language_from_string(std::string_view name) {
    if (name == "python") return Language::python;
    if (name == "kotlin") return Language::kotlin;
    if (name == "java") return Language::java;
    return Language::other;
}

std::string to_string(Language lang) {
    switch (lang) {
        case Language::python: return "python";
        case Language::kotlin: return "kotlin";
        case Language::java: return "java";
        case Language::other: return "other";
    }
    return "other";
}

namespace {

void validate_relative_path(const std::string& path) {
    if (path.empty()) throw std::invalid_argument("empty file path in snapshot");
    if (path.front() == '/') throw std::invalid_argument("absolute path in snapshot: " + path);
    if (path.find('\\') != std::string::npos)
        throw std::invalid_argument("path must use '/' separators: " + path);
    std::size_t start = 0;
    while (start <= path.size()) {
        std::size_t slash = path.find('/', start);
        std::string_view seg = slash == std::string::npos
                                   ? std::string_view(path).substr(start)
                                   : std::string_view(path).substr(start, slash - start);
        if (seg == "." || seg == "..")
            throw std::invalid_argument("path contains dot segments: " + path);
        if (seg.empty() && slash != std::string::npos)
            throw std::invalid_argument("path contains empty segment: " + path);
        if (slash == std::string::npos) break;
        start = slash + 1;
    }
}

}  // namespace

RepoSnapshot RepoSnapshot::from_files(std::string root_label, std::vector<SourceFile> files) {
    RepoSnapshot snap;
    snap.root_label_ = std::move(root_label);
    std::sort(files.begin(), files.end(),
              [](const SourceFile& a, const SourceFile& b) { return a.path < b.path; });
    snap.files_ = std::move(files);
    for (std::size_t i = 0; i < snap.files_.size(); ++i) {
        auto& f = snap.files_[i];
        validate_relative_path(f.path);
        if (i > 0 && snap.files_[i - 1].path == f.path)
            throw std::invalid_argument("duplicate file path in snapshot: " + f.path);
        f.line_count = util::split_lines(f.text).size();
        snap.total_symbols_ += util::count_scalars(f.text);
        snap.index_by_path_.emplace(f.path, i);
    }
    return snap;
}

const SourceFile* RepoSnapshot::find_file(std::string_view path) const {
    auto it = index_by_path_.find(std::string(path));
    return it == index_by_path_.end() ? nullptr : &files_[it->second];
}

std::size_t RepoSnapshot::file_index(std::string_view path) const {
    auto it = index_by_path_.find(std::string(path));
    return it == index_by_path_.end() ? files_.size() : it->second;
}

std::uint64_t RepoSnapshot::content_hash() const {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (const auto& f : files_) {
        h ^= util::fnv1a64(f.path);
        h *= 0x100000001b3ull;
        h ^= util::fnv1a64(f.text);
        h *= 0x100000001b3ull;
    }
    return h;
}

json RepoSnapshot::to_json() const {
    json files = json::array();
    for (const auto& f : files_) files.push_back({{"path", f.path}, {"text", f.text}});
    return {{"root_label", root_label_}, {"files", files}};
}

RepoSnapshot RepoSnapshot::from_json(const json& j) {
    std::vector<SourceFile> files;
    for (const auto& f : j.at("files")) {
        files.push_back({f.at("path").get<std::string>(), f.at("text").get<std::string>(), 0});
    }
    return from_files(j.at("root_label").get<std::string>(), std::move(files));
}

const std::vector<std::string>& default_include_globs() {
    static const std::vector<std::string> globs = {"*.py", "*.kt", "*.kts", "*.java"};
    return globs;
}

namespace {

bool any_glob_matches(const std::vector<std::string>& globs, const std::string& rel_path) {
    for (const auto& g : globs) {
        if (util::glob_match(g, rel_path)) return true;
    }
    return false;
}

bool in_dotted_directory(const std::string& rel_path) {
    std::size_t start = 0;
    while (true) {
        std::size_t slash = rel_path.find('/', start);
        if (slash == std::string::npos) return false;  // file name itself may be dotted
        if (rel_path[start] == '.') return true;
        start = slash + 1;
    }
}

}  // namespace

RepoSnapshot load_repo(const fs::path& root_dir, const std::vector<std::string>& include_globs,
                       std::vector<std::string>* warnings) {
    std::error_code ec;
    if (!fs::is_directory(root_dir, ec) || ec)
        throw std::runtime_error("repository directory not readable: " + root_dir.string());

    const auto& globs = include_globs.empty() ? default_include_globs() : include_globs;
    std::vector<SourceFile> files;
    for (auto it = fs::recursive_directory_iterator(root_dir, ec);
         it != fs::recursive_directory_iterator(); it.increment(ec)) {
        if (ec) throw std::runtime_error("error walking " + root_dir.string() + ": " + ec.message());
        if (!it->is_regular_file()) continue;
        std::string rel = fs::relative(it->path(), root_dir).generic_string();
        if (in_dotted_directory(rel) || rel.starts_with(".")) continue;
        if (!any_glob_matches(globs, rel)) continue;
        std::string raw = util::read_file(it->path());
        std::string text = util::sanitize_utf8(raw);
        if (text != raw && warnings) {
            warnings->push_back("invalid UTF-8 replaced in " + rel);
        }
        files.push_back({std::move(rel), std::move(text), 0});
    }
    return RepoSnapshot::from_files(root_dir.filename().generic_string(), std::move(files));
}

namespace {

// Datasets reference repositories by directory; each one is loaded once.
class RepoCache {
public:
    explicit RepoCache(const std::vector<std::string>& globs) : globs_(globs) {}

    std::shared_ptr<const RepoSnapshot> get(const std::string& repo_dir) {
        auto it = cache_.find(repo_dir);
        if (it != cache_.end()) return it->second;
        auto snap = std::make_shared<RepoSnapshot>(load_repo(repo_dir, globs_));
        cache_.emplace(repo_dir, snap);
        return snap;
    }

private:
    std::vector<std::string> globs_;
    std::unordered_map<std::string, std::shared_ptr<const RepoSnapshot>> cache_;
};

json parse_jsonl_line(const std::string& line, const fs::path& path, std::size_t line_no) {
    try {
        return json::parse(line);
    } catch (const std::exception& e) {
        throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                                 ": malformed JSON line: " + e.what());
    }
}

}  // namespace

std::vector<CompletionInstance> load_cc_dataset(const fs::path& path,
                                                const std::vector<std::string>& include_globs) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open dataset: " + path.string());
    RepoCache repos(include_globs);
    std::vector<CompletionInstance> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (util::trim(line).empty()) continue;
        json j = parse_jsonl_line(line, path, line_no);
        CompletionInstance inst;
        try {
            inst.repo = repos.get(j.at("repo_dir").get<std::string>());
            inst.completion_file = j.at("completion_file").get<std::string>();
            inst.target_line_index = j.at("target_line_index").get<std::size_t>();
            inst.language = language_from_string(j.at("language").get<std::string>());
            if (j.contains("relevant_files"))
                inst.relevant_files = j.at("relevant_files").get<std::vector<std::string>>();
        } catch (const json::exception& e) {
            throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                                     ": bad record: " + e.what());
        }
        const SourceFile* f = inst.repo->find_file(inst.completion_file);
        if (!f)
            throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                                     ": completion_file not in repo: " + inst.completion_file);
        if (inst.target_line_index >= f->line_count)
            throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                                     ": target_line_index " +
                                     std::to_string(inst.target_line_index) +
                                     " out of range for " + inst.completion_file + " (" +
                                     std::to_string(f->line_count) + " lines)");
        out.push_back(std::move(inst));
    }
    return out;
}

std::vector<BugLocalizationInstance> load_bl_dataset(
    const fs::path& path, const std::vector<std::string>& include_globs) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open dataset: " + path.string());
    RepoCache repos(include_globs);
    std::vector<BugLocalizationInstance> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (util::trim(line).empty()) continue;
        json j = parse_jsonl_line(line, path, line_no);
        BugLocalizationInstance inst;
        try {
            inst.repo = repos.get(j.at("repo_dir").get<std::string>());
            inst.issue_text = j.at("issue_text").get<std::string>();
            inst.ground_truth_files = j.at("ground_truth_files").get<std::vector<std::string>>();
        } catch (const json::exception& e) {
            throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                                     ": bad record: " + e.what());
        }
        if (inst.ground_truth_files.empty())
            throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                                     ": ground_truth_files must be non-empty");
        for (const auto& g : inst.ground_truth_files) {
            if (!inst.repo->find_file(g))
                throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                                         ": ground truth file not in repo: " + g);
        }
        out.push_back(std::move(inst));
    }
    return out;
}

std::uint64_t repo_symbol_count(const RepoSnapshot& repo) {
    return repo.total_symbols();
}

}  // namespace coderag
