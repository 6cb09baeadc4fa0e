#include "coderag/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

#include "coderag/util.hpp"

namespace coderag {

namespace toml {

namespace {

[[noreturn]] void fail(const std::string& origin, std::size_t line_no, const std::string& what) {
    throw ConfigError(origin + ":" + std::to_string(line_no) + ": " + what);
}

std::string parse_basic_string(std::string_view s, std::size_t& i, const std::string& origin,
                               std::size_t line_no) {
    // s[i] == '"'
    ++i;
    std::string out;
    while (i < s.size() && s[i] != '"') {
        char c = s[i];
        if (c == '\\') {
            ++i;
            if (i >= s.size()) fail(origin, line_no, "dangling escape in string");
            switch (s[i]) {
                case 'n': out += '\n'; break;
                case 't': out += '\t'; break;
                case 'r': out += '\r'; break;
                case '"': out += '"'; break;
                case '\\': out += '\\'; break;
                default: fail(origin, line_no, std::string("unsupported escape \\") + s[i]);
            }
        } else {
            out += c;
        }
        ++i;
    }
    if (i >= s.size()) fail(origin, line_no, "unterminated string");
    ++i;  // closing quote
    return out;
}

void skip_ws(std::string_view s, std::size_t& i) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
}

Value parse_scalar(std::string_view s, std::size_t& i, const std::string& origin,
                   std::size_t line_no);

Value parse_array(std::string_view s, std::size_t& i, const std::string& origin,
                  std::size_t line_no) {
    // s[i] == '['
    ++i;
    Array arr;
    skip_ws(s, i);
    while (i < s.size() && s[i] != ']') {
        arr.push_back(parse_scalar(s, i, origin, line_no));
        skip_ws(s, i);
        if (i < s.size() && s[i] == ',') {
            ++i;
            skip_ws(s, i);
        }
    }
    if (i >= s.size()) fail(origin, line_no, "unterminated array");
    ++i;  // ']'
    return Value{std::move(arr)};
}

Value parse_scalar(std::string_view s, std::size_t& i, const std::string& origin,
                   std::size_t line_no) {
    skip_ws(s, i);
    if (i >= s.size()) fail(origin, line_no, "missing value");
    if (s[i] == '"') return Value{parse_basic_string(s, i, origin, line_no)};
    if (s[i] == '[') return parse_array(s, i, origin, line_no);

    std::size_t start = i;
    while (i < s.size() && s[i] != ',' && s[i] != ']' && s[i] != '#' && s[i] != ' ' &&
           s[i] != '\t')
        ++i;
    std::string_view tok = s.substr(start, i - start);
    if (tok == "true") return Value{true};
    if (tok == "false") return Value{false};
    std::string body(tok);
    body.erase(std::remove(body.begin(), body.end(), '_'), body.end());
    if (tok.find('.') != std::string_view::npos || tok.find('e') != std::string_view::npos ||
        tok.find('E') != std::string_view::npos) {
        try {
            std::size_t used = 0;
            double d = std::stod(body, &used);
            if (used == body.size()) return Value{d};
        } catch (...) {
        }
        fail(origin, line_no, "cannot parse value: " + std::string(tok));
    }
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(body.data(), body.data() + body.size(), v);
    if (ec == std::errc() && ptr == body.data() + body.size()) return Value{v};
    fail(origin, line_no, "cannot parse value: " + std::string(tok));
}

bool valid_key_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
}

}  // namespace

Table Table::parse(std::string_view text, const std::string& origin) {
    Table table;
    std::string section;
    std::size_t line_no = 0;
    for (auto raw_line : util::split_lines(text)) {
        ++line_no;
        std::string_view line = util::trim(raw_line);
        if (line.empty() || line.front() == '#') continue;
        if (line.front() == '[') {
            if (line.back() != ']') fail(origin, line_no, "unterminated section header");
            std::string_view name = util::trim(line.substr(1, line.size() - 2));
            if (name.empty()) fail(origin, line_no, "empty section name");
            for (char c : name)
                if (!valid_key_char(c)) fail(origin, line_no, "bad section name");
            section = std::string(name);
            continue;
        }
        std::size_t eq = line.find('=');
        if (eq == std::string_view::npos) fail(origin, line_no, "expected key = value");
        std::string_view key = util::trim(line.substr(0, eq));
        if (key.empty()) fail(origin, line_no, "empty key");
        for (char c : key)
            if (!valid_key_char(c)) fail(origin, line_no, "bad key: " + std::string(key));
        std::string_view rest = line.substr(eq + 1);
        std::size_t i = 0;
        Value value = parse_scalar(rest, i, origin, line_no);
        skip_ws(rest, i);
        if (i < rest.size() && rest[i] != '#')
            fail(origin, line_no, "trailing characters after value");
        std::string full_key = section.empty() ? std::string(key)
                                               : section + "." + std::string(key);
        if (!table.values_.emplace(full_key, std::move(value)).second)
            fail(origin, line_no, "duplicate key: " + full_key);
    }
    return table;
}

Table Table::parse_file(const std::filesystem::path& path) {
    std::string text;
    try {
        text = util::read_file(path);
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    return parse(text, path.string());
}

std::string Table::get_string(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    if (!it->second.is_string()) throw ConfigError("config field " + key + " must be a string");
    return std::get<std::string>(it->second.data);
}

std::int64_t Table::get_int(const std::string& key, std::int64_t fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    if (!it->second.is_int()) throw ConfigError("config field " + key + " must be an integer");
    return std::get<std::int64_t>(it->second.data);
}

double Table::get_double(const std::string& key, double fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    if (it->second.is_int())
        return static_cast<double>(std::get<std::int64_t>(it->second.data));
    if (!it->second.is_float()) throw ConfigError("config field " + key + " must be a number");
    return std::get<double>(it->second.data);
}

bool Table::get_bool(const std::string& key, bool fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    if (!it->second.is_bool()) throw ConfigError("config field " + key + " must be a boolean");
    return std::get<bool>(it->second.data);
}

std::vector<std::string> Table::get_string_array(const std::string& key,
                                                 std::vector<std::string> fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    if (!it->second.is_array())
        throw ConfigError("config field " + key + " must be an array of strings");
    std::vector<std::string> out;
    for (const auto& v : std::get<Array>(it->second.data)) {
        if (!v.is_string())
            throw ConfigError("config field " + key + " must contain only strings");
        out.push_back(std::get<std::string>(v.data));
    }
    return out;
}

std::vector<std::int64_t> Table::get_int_array(const std::string& key,
                                               std::vector<std::int64_t> fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    if (!it->second.is_array())
        throw ConfigError("config field " + key + " must be an array of integers");
    std::vector<std::int64_t> out;
    for (const auto& v : std::get<Array>(it->second.data)) {
        if (!v.is_int())
            throw ConfigError("config field " + key + " must contain only integers");
        out.push_back(std::get<std::int64_t>(v.data));
    }
    return out;
}

}  // namespace toml

namespace {

template <typename Fn>
auto wrap_config_error(const std::string& field, Fn&& fn) {
    try {
        return fn();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError("config field " + field + ": " + e.what());
    }
}

}  // namespace

RunConfig RunConfig::from_toml(const toml::Table& t) {
    RunConfig cfg;
    cfg.task = t.get_string("task", cfg.task);
    if (cfg.task != "cc" && cfg.task != "bl")
        throw ConfigError("config field task must be \"cc\" or \"bl\"");
    cfg.seed = static_cast<std::uint64_t>(t.get_int("seed", 0));
    cfg.workers = static_cast<int>(t.get_int("workers", 0));
    cfg.out_dir = t.get_string("out_dir", cfg.out_dir);

    RetrievalConfig& r = cfg.retrieval;
    r.chunker.kind = wrap_config_error("retrieval.chunker", [&] {
        return chunker_from_string(t.get_string("retrieval.chunker", "whole_file"));
    });
    r.chunker.window_lines =
        static_cast<std::size_t>(t.get_int("retrieval.window_lines", 0));
    r.chunker.target_chars =
        static_cast<std::size_t>(t.get_int("retrieval.target_chars", 0));
    r.splitter = wrap_config_error("retrieval.splitter", [&] {
        return splitter_from_string(t.get_string("retrieval.splitter", "word"));
    });
    r.scorer = wrap_config_error("retrieval.scorer", [&] {
        return scorer_from_string(t.get_string("retrieval.scorer", "bm25"));
    });
    r.bm25.k1 = t.get_double("retrieval.k1", r.bm25.k1);
    r.bm25.b = t.get_double("retrieval.b", r.bm25.b);
    r.bm25.use_query_tf = t.get_bool("retrieval.use_query_tf", false);
    if (r.bm25.k1 <= 0) throw ConfigError("config field retrieval.k1 must be positive");
    if (r.bm25.b < 0 || r.bm25.b > 1)
        throw ConfigError("config field retrieval.b must lie in [0, 1]");
    r.query_window_lines =
        static_cast<std::size_t>(t.get_int("retrieval.query_window_lines", 32));
    if (r.query_window_lines == 0)
        throw ConfigError("config field retrieval.query_window_lines must be positive");
    r.budget_tokens = t.get_int("retrieval.budget_tokens", 4096);
    if (r.budget_tokens < 0)
        throw ConfigError("config field retrieval.budget_tokens must be non-negative");
    r.bpe_merges_path = t.get_string("retrieval.bpe_merges_path", "");
    r.strict_stop = t.get_bool("retrieval.strict_stop", false);
    r.bl_prepend_file_path = t.get_bool("retrieval.bl_prepend_file_path", true);
    if (r.splitter == SplitterKind::bpe && r.bpe_merges_path.empty())
        throw ConfigError("config field retrieval.bpe_merges_path required for the bpe splitter");

    cfg.repo_dir = t.get_string("data.repo_dir", "");
    cfg.cc_dataset = t.get_string("data.cc_dataset", "");
    cfg.bl_dataset = t.get_string("data.bl_dataset", "");
    cfg.include_globs = t.get_string_array("data.include_globs", {});

    cfg.budgets = t.get_int_array("eval.budgets", cfg.budgets);
    if (cfg.budgets.empty()) throw ConfigError("config field eval.budgets must be non-empty");
    for (auto b : cfg.budgets)
        if (b < 0) throw ConfigError("config field eval.budgets entries must be non-negative");

    if (t.contains("embedding.base_url")) {
        EmbeddingProviderConfig e;
        e.base_url = t.get_string("embedding.base_url", "");
        e.model = t.get_string("embedding.model", "");
        e.token_limit = static_cast<int>(t.get_int("embedding.token_limit", e.token_limit));
        e.max_tokens_per_request =
            t.get_int("embedding.max_tokens_per_request", e.max_tokens_per_request);
        e.cache_dir = t.get_string("embedding.cache_dir", "");
        e.use_cache = t.get_bool("embedding.use_cache", true);
        e.retry_attempts = static_cast<int>(t.get_int("embedding.retry_attempts", 3));
        e.retry_base_ms = static_cast<int>(t.get_int("embedding.retry_base_ms", 250));
        r.embedding = std::move(e);
    }

    if (t.contains("completion.base_url")) {
        CompletionProviderConfig c;
        c.base_url = t.get_string("completion.base_url", "");
        c.model = t.get_string("completion.model", "");
        c.max_tokens = static_cast<int>(t.get_int("completion.max_tokens", c.max_tokens));
        c.retry_attempts = static_cast<int>(t.get_int("completion.retry_attempts", 3));
        c.retry_base_ms = static_cast<int>(t.get_int("completion.retry_base_ms", 250));
        cfg.completion = std::move(c);
    }

    cfg.bench_repetitions = static_cast<int>(t.get_int("bench.repetitions", 5));
    if (cfg.bench_repetitions < 1)
        throw ConfigError("config field bench.repetitions must be >= 1");
    cfg.bench_synthetic_symbols =
        static_cast<std::uint64_t>(t.get_int("bench.synthetic_symbols", 0));
    cfg.bench_presets = t.get_string_array("bench.presets", cfg.bench_presets);
    cfg.bench_query_count = static_cast<std::size_t>(t.get_int("bench.queries", 20));

    cfg.search.scorers = t.get_string_array("search.scorers", cfg.search.scorers);
    cfg.search.splitters = t.get_string_array("search.splitters", cfg.search.splitters);
    auto windows = t.get_int_array("search.windows", {});
    if (!windows.empty()) {
        cfg.search.windows.clear();
        for (auto w : windows) {
            if (w < 0) throw ConfigError("config field search.windows entries must be >= 0");
            cfg.search.windows.push_back(static_cast<std::size_t>(w));
        }
    }
    cfg.search.budgets = t.get_int_array("search.budgets", cfg.budgets);
    cfg.search.selection_budget =
        t.get_int("search.selection_budget", cfg.search.budgets.front());
    cfg.search.chunker_stage = t.get_bool("search.chunker_stage", true);
    cfg.search.reranker_stage = t.get_bool("search.reranker_stage", true);

    return cfg;
}

RunConfig RunConfig::from_toml_file(const std::filesystem::path& path) {
    return from_toml(toml::Table::parse_file(path));
}

}  // namespace coderag
