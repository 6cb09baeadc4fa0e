#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "coderag/completion_client.hpp"
#include "coderag/corpus.hpp"
#include "coderag/pipeline.hpp"

namespace coderag {

// 1 iff the two lines are equal after stripping outer whitespace.
int exact_match(std::string_view predicted, std::string_view target);

// Binary-gain NDCG over the full ranking. Relevant items missing from the
// ranking contribute nothing to DCG. Throws on an empty relevant set.
double ndcg(const RankedList& ranked, const std::vector<std::uint32_t>& relevant_ids);

struct InstanceOutcome {
    std::size_t index = 0;
    bool errored = false;
    std::string error;
    // Metric value per budget; absent when the metric is undefined for the
    // instance (e.g. no relevance labels).
    std::map<std::int64_t, double> value_by_budget;
    std::map<std::int64_t, std::int64_t> packed_tokens_by_budget;
    std::map<std::int64_t, std::int64_t> packed_items_by_budget;
};

/// Aggregated evaluation results for one retrieval configuration.
struct EvalReport {
    std::string task;    // "cc" | "bl"
    std::string metric;  // "em" | "context_hit" | "ndcg" | "none"
    nlohmann::json config_desc;
    std::vector<std::int64_t> budgets;  // {0} for bl (no packing budget)
    std::vector<InstanceOutcome> instances;
    std::map<std::int64_t, double> mean_by_budget;
    std::map<std::int64_t, std::size_t> n_by_budget;
    std::map<std::int64_t, double> mean_packed_tokens_by_budget;
    std::size_t error_count = 0;
    double wall_s = 0.0;

    // Timing lives under a single "timing" key so it can be dropped when
    // comparing runs for reproducibility.
    nlohmann::json to_json(bool include_timing = true) const;
    std::string to_csv() const;
};

struct CcEvalOptions {
    std::vector<std::int64_t> budgets = {128, 4096, 8192, 16384};
    int workers = 1;
    std::optional<CompletionProviderConfig> provider;
};

EvalReport evaluate_cc(const std::vector<CompletionInstance>& dataset,
                       const RetrievalConfig& config, const CcEvalOptions& options);

EvalReport evaluate_bl(const std::vector<BugLocalizationInstance>& dataset,
                       const RetrievalConfig& config, int workers = 1);

// ---------------------------------------------------------------------------
// Staged configuration search
// ---------------------------------------------------------------------------

struct StageCell {
    std::string label;
    std::function<void(RetrievalConfig&)> apply;
};

struct Stage {
    std::string name;
    std::vector<StageCell> cells;
};

/// Ordered grid stages; each stage inherits every axis fixed by earlier
/// winners, evaluates its cells, and fixes the argmax.
struct StagePlan {
    std::vector<Stage> stages;
    std::vector<std::int64_t> budgets = {128, 4096, 8192, 16384};
    std::int64_t selection_budget = 128;
};

struct CellOutcome {
    std::string label;
    bool errored = false;
    std::string error;
    double mean = 0.0;  // at the selection budget
    std::map<std::int64_t, double> mean_by_budget;
    double tie_break_latency = -1.0;  // filled only when a tie was broken
};

struct StageOutcome {
    std::string name;
    std::vector<CellOutcome> cells;
    std::string winner_label;
};

struct SearchOutcome {
    std::vector<StageOutcome> stages;
    RetrievalConfig final_config;

    nlohmann::json to_json() const;
    std::string to_csv() const;
};

/// Evaluates one cell: mean metric per budget, plus an optional latency
/// probe used only to break exact ties (cheaper config wins).
struct CellEvaluator {
    std::function<std::map<std::int64_t, double>(const RetrievalConfig&)> means;
    std::function<double(const RetrievalConfig&)> latency;
};

SearchOutcome staged_search(const StagePlan& plan, RetrievalConfig base,
                            const CellEvaluator& evaluator);

CellEvaluator make_cc_cell_evaluator(const std::vector<CompletionInstance>& dataset,
                                     const CcEvalOptions& options);

CellEvaluator make_bl_cell_evaluator(const std::vector<BugLocalizationInstance>& dataset,
                                     int workers);

struct SearchOptions {
    std::vector<std::string> scorers = {"bm25", "iou"};
    std::vector<std::string> splitters = {"line", "word"};
    std::vector<std::size_t> windows = {8, 16, 32, 64, 128, 0};  // 0 = whole file
    bool chunker_stage = true;     // fixed-line winner vs matched recursive
    bool reranker_stage = true;    // hybrid structure+backfill and path distance
    std::vector<std::int64_t> budgets = {128, 4096, 8192, 16384};
    std::int64_t selection_budget = 128;
};

// The four-stage plan: scorer x splitter on whole files, window sweep,
// chunker type, then structure-aware rerankers.
StagePlan make_cc_stage_plan(const SearchOptions& options);

// Scorer x splitter only; bug localization has no packing budget.
StagePlan make_bl_stage_plan(const SearchOptions& options);

}  // namespace coderag
