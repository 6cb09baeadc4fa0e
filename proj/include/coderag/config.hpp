#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "coderag/completion_client.hpp"
#include "coderag/evaluation.hpp"
#include "coderag/pipeline.hpp"

namespace coderag {

/// Invalid configuration input; the CLI maps this to the usage exit code.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace toml {

struct Value;
using Array = std::vector<Value>;

struct Value {
    std::variant<std::string, std::int64_t, double, bool, Array> data;

    bool is_string() const { return std::holds_alternative<std::string>(data); }
    bool is_int() const { return std::holds_alternative<std::int64_t>(data); }
    bool is_float() const { return std::holds_alternative<double>(data); }
    bool is_bool() const { return std::holds_alternative<bool>(data); }
    bool is_array() const { return std::holds_alternative<Array>(data); }
};

/// Flat key-value view of a TOML document: "section.key" -> Value.
/// Supported subset: [section] headers (dotted), basic strings, integers,
/// floats, booleans, single-line arrays of scalars, and '#' comments.
class Table {
public:
    static Table parse_file(const std::filesystem::path& path);
    static Table parse(std::string_view text, const std::string& origin = "<string>");

    bool contains(const std::string& key) const { return values_.count(key) > 0; }

    std::string get_string(const std::string& key, const std::string& fallback) const;
    std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
    double get_double(const std::string& key, double fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<std::string> get_string_array(const std::string& key,
                                              std::vector<std::string> fallback) const;
    std::vector<std::int64_t> get_int_array(const std::string& key,
                                            std::vector<std::int64_t> fallback) const;

    const std::map<std::string, Value>& values() const { return values_; }

private:
    std::map<std::string, Value> values_;
};

}  // namespace toml

/// Everything one CLI run needs: task, retrieval configuration, datasets,
/// providers and output knobs.
struct RunConfig {
    std::string task = "cc";
    RetrievalConfig retrieval;

    std::string repo_dir;
    std::string cc_dataset;
    std::string bl_dataset;
    std::vector<std::string> include_globs;

    std::string out_dir = "out";
    std::uint64_t seed = 0;
    int workers = 0;  // 0 = logical processor count

    std::vector<std::int64_t> budgets = {128, 4096, 8192, 16384};
    std::optional<CompletionProviderConfig> completion;

    int bench_repetitions = 5;
    std::uint64_t bench_synthetic_symbols = 0;  // 0 = load bench repo from repo_dir
    std::vector<std::string> bench_presets = {"path_distance", "iou+line", "bm25+word",
                                              "bm25+bpe"};
    std::size_t bench_query_count = 20;

    SearchOptions search;

    static RunConfig from_toml_file(const std::filesystem::path& path);
    static RunConfig from_toml(const toml::Table& table);
};

}  // namespace coderag
