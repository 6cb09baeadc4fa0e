#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "coderag/corpus.hpp"
#include "coderag/pipeline.hpp"

namespace coderag {

struct BenchQuery {
    std::string text;        // query text for content-based scorers
    std::string query_file;  // query file for structure/path scorers
};

/// Wall-clock phase timings for one configuration, normalized to seconds
/// per one million repository symbols.
struct LatencyRecord {
    std::string label;
    std::string scorer;
    std::string splitter;
    std::string chunker;
    std::string repo_label;
    std::uint64_t repo_symbols = 0;
    double index_s = 0.0;  // index/graph build (median over repetitions)
    double query_s = 0.0;  // all queries (median over repetitions)
    double normalized = 0.0;             // (index_s + query_s) / (symbols / 1e6)
    double query_only_normalized = 0.0;  // query_s / (symbols / 1e6)
    int repetitions = 0;
    std::vector<double> samples;  // per-repetition totals

    nlohmann::json to_json() const;
};

double normalize_latency(double total_s, std::uint64_t symbols);

// Times index build and query phases separately over `repetitions` runs and
// reports medians. Runs strictly single-threaded. Dense configurations
// bypass the embedding cache so document encoding is paid every repetition.
LatencyRecord measure_latency(const RetrievalConfig& config, const RepoSnapshot& repo,
                              const std::vector<BenchQuery>& queries, int repetitions);

struct LatencyComparison {
    std::vector<LatencyRecord> records;        // ascending by normalized time
    std::vector<std::vector<double>> ratios;   // ratios[i][j] = records[i] / records[j]
};

// Requires at least two records over the same repository.
LatencyComparison compare_latency(std::vector<LatencyRecord> records);

std::string latency_csv(const std::vector<LatencyRecord>& records);

// Seeded identifier soup with a realistic line-length distribution; grows
// files until the snapshot holds at least target_symbols scalars.
RepoSnapshot generate_synthetic_repo(std::uint64_t seed, std::uint64_t target_symbols);

// Window texts sampled from repo files, paired with their file paths.
std::vector<BenchQuery> sample_bench_queries(const RepoSnapshot& repo, std::size_t count,
                                             std::size_t window_lines, std::uint64_t seed);

}  // namespace coderag
