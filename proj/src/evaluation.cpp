#include "coderag/evaluation.hpp"

#include <chrono>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

#include "coderag/util.hpp"

namespace coderag {

using nlohmann::json;

int exact_match(std::string_view predicted, std::string_view target) {
    return util::trim(predicted) == util::trim(target) ? 1 : 0;
}

double ndcg(const RankedList& ranked, const std::vector<std::uint32_t>& relevant_ids) {
    if (relevant_ids.empty())
        throw std::invalid_argument("ndcg requires a non-empty relevant set");
    std::set<std::uint32_t> relevant(relevant_ids.begin(), relevant_ids.end());
    double dcg = 0.0;
    for (std::size_t i = 0; i < ranked.items.size(); ++i) {
        if (relevant.count(ranked.items[i].id)) {
            dcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);  // 1-based rank i+1
        }
    }
    double idcg = 0.0;
    for (std::size_t i = 1; i <= relevant.size(); ++i)
        idcg += 1.0 / std::log2(static_cast<double>(i) + 1.0);
    return dcg / idcg;
}

json EvalReport::to_json(bool include_timing) const {
    json inst = json::array();
    for (const auto& r : instances) {
        json ji;
        ji["index"] = r.index;
        if (r.errored) {
            ji["error"] = r.error;
        } else {
            json values;
            json tokens;
            json items;
            for (const auto& [b, v] : r.value_by_budget) values[std::to_string(b)] = v;
            for (const auto& [b, v] : r.packed_tokens_by_budget) tokens[std::to_string(b)] = v;
            for (const auto& [b, v] : r.packed_items_by_budget) items[std::to_string(b)] = v;
            if (!values.empty()) ji["value"] = values;
            if (!tokens.empty()) ji["packed_tokens"] = tokens;
            if (!items.empty()) ji["packed_items"] = items;
        }
        inst.push_back(std::move(ji));
    }
    json means;
    json ns;
    json packed;
    for (const auto& [b, v] : mean_by_budget) means[std::to_string(b)] = v;
    for (const auto& [b, v] : n_by_budget) ns[std::to_string(b)] = v;
    for (const auto& [b, v] : mean_packed_tokens_by_budget) packed[std::to_string(b)] = v;
    json j{{"task", task},
           {"metric", metric},
           {"config", config_desc},
           {"budgets", budgets},
           {"mean", means},
           {"n", ns},
           {"mean_packed_tokens", packed},
           {"errors", error_count},
           {"instances", inst}};
    if (include_timing) j["timing"] = {{"wall_s", wall_s}};
    return j;
}

namespace {

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += "\"";
    return out;
}

}  // namespace

std::string EvalReport::to_csv() const {
    std::ostringstream out;
    out << "task,config,chunker,window_lines,splitter,scorer,budget,metric,mean,n,errors\n";
    std::string chunker = config_desc.contains("chunker")
                              ? config_desc["chunker"].value("kind", std::string())
                              : std::string();
    std::string window = config_desc.contains("chunker") && config_desc["chunker"].contains("window_lines")
                             ? config_desc["chunker"]["window_lines"].dump()
                             : std::string();
    std::string splitter = config_desc.value("splitter", std::string());
    std::string scorer = config_desc.value("scorer", std::string());
    std::string label = config_desc.value("label", std::string());
    for (std::int64_t b : budgets) {
        out << task << ',' << csv_escape(label) << ',' << chunker << ',' << window << ','
            << splitter << ',' << scorer << ',' << b << ',' << metric << ',';
        auto it = mean_by_budget.find(b);
        if (it != mean_by_budget.end()) out << it->second;
        out << ',';
        auto nit = n_by_budget.find(b);
        out << (nit != n_by_budget.end() ? nit->second : 0) << ',' << error_count << "\n";
    }
    return out.str();
}

namespace {

json config_descriptor(const RetrievalConfig& config) {
    json j = config.to_json();
    j["label"] = config.label();
    return j;
}

void finalize_means(EvalReport& report) {
    for (std::int64_t b : report.budgets) {
        double sum = 0.0;
        std::size_t n = 0;
        double token_sum = 0.0;
        std::size_t token_n = 0;
        for (const auto& r : report.instances) {
            if (r.errored) continue;
            if (auto it = r.value_by_budget.find(b); it != r.value_by_budget.end()) {
                sum += it->second;
                ++n;
            }
            if (auto it = r.packed_tokens_by_budget.find(b);
                it != r.packed_tokens_by_budget.end()) {
                token_sum += static_cast<double>(it->second);
                ++token_n;
            }
        }
        if (n > 0) report.mean_by_budget[b] = sum / static_cast<double>(n);
        report.n_by_budget[b] = n;
        if (token_n > 0)
            report.mean_packed_tokens_by_budget[b] = token_sum / static_cast<double>(token_n);
    }
    for (const auto& r : report.instances)
        if (r.errored) ++report.error_count;
}

std::string preceding_lines_text(const CompletionInstance& instance) {
    const SourceFile* file = instance.repo->find_file(instance.completion_file);
    auto lines = util::split_lines(file->text);
    std::vector<std::string_view> before(lines.begin(),
                                         lines.begin() +
                                             static_cast<std::ptrdiff_t>(instance.target_line_index));
    return util::join_lines(before);
}

std::string target_line_text(const CompletionInstance& instance) {
    const SourceFile* file = instance.repo->find_file(instance.completion_file);
    auto lines = util::split_lines(file->text);
    return std::string(lines[instance.target_line_index]);
}

}  // namespace

EvalReport evaluate_cc(const std::vector<CompletionInstance>& dataset,
                       const RetrievalConfig& config, const CcEvalOptions& options) {
    if (dataset.empty()) throw std::invalid_argument("cc dataset is empty");
    if (options.budgets.empty()) throw std::invalid_argument("no budgets given");

    const auto t0 = std::chrono::steady_clock::now();
    EvalReport report;
    report.task = "cc";
    report.config_desc = config_descriptor(config);
    report.budgets = options.budgets;

    bool any_labels = false;
    for (const auto& inst : dataset) any_labels |= !inst.relevant_files.empty();
    report.metric = options.provider ? "em" : (any_labels ? "context_hit" : "none");

    report.instances.resize(dataset.size());
    auto merges = load_config_merges(config);
    TokenCounter counter = make_budget_token_counter(config, merges);

    util::parallel_for(dataset.size(), options.workers, [&](std::size_t i) {
        const CompletionInstance& instance = dataset[i];
        InstanceOutcome& rec = report.instances[i];
        rec.index = i;
        try {
            RankedCandidates ranked = rank_cc(config, instance);
            std::set<std::string> relevant(instance.relevant_files.begin(),
                                           instance.relevant_files.end());
            for (std::int64_t budget : options.budgets) {
                PackedPrompt packed = pack_prompt(ranked.ranking, ranked.chunks, budget, counter,
                                                  config.strict_stop);
                rec.packed_tokens_by_budget[budget] = packed.total_tokens;
                rec.packed_items_by_budget[budget] =
                    static_cast<std::int64_t>(packed.items.size());
                if (options.provider) {
                    std::string prompt = packed.context_text();
                    if (!prompt.empty()) prompt += "\n";
                    prompt += preceding_lines_text(instance);
                    prompt += "\n";
                    std::string predicted =
                        request_one_line_completion(*options.provider, prompt);
                    rec.value_by_budget[budget] =
                        exact_match(predicted, target_line_text(instance));
                } else if (!relevant.empty()) {
                    int hit = 0;
                    for (const auto& item : packed.items) {
                        if (relevant.count(item.chunk.file_path)) {
                            hit = 1;
                            break;
                        }
                    }
                    rec.value_by_budget[budget] = hit;
                }
            }
        } catch (const std::exception& e) {
            rec.errored = true;
            rec.error = e.what();
            rec.value_by_budget.clear();
            rec.packed_tokens_by_budget.clear();
            rec.packed_items_by_budget.clear();
        }
    });

    finalize_means(report);
    report.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

EvalReport evaluate_bl(const std::vector<BugLocalizationInstance>& dataset,
                       const RetrievalConfig& config, int workers) {
    if (dataset.empty()) throw std::invalid_argument("bl dataset is empty");

    const auto t0 = std::chrono::steady_clock::now();
    EvalReport report;
    report.task = "bl";
    report.metric = "ndcg";
    report.config_desc = config_descriptor(config);
    report.budgets = {0};  // ranking task, no packing budget
    report.instances.resize(dataset.size());

    util::parallel_for(dataset.size(), workers, [&](std::size_t i) {
        const BugLocalizationInstance& instance = dataset[i];
        InstanceOutcome& rec = report.instances[i];
        rec.index = i;
        try {
            RankedList ranking = run_bl_retrieval(config, instance);
            std::vector<std::uint32_t> relevant;
            for (const auto& path : instance.ground_truth_files) {
                std::size_t idx = instance.repo->file_index(path);
                if (idx >= instance.repo->files().size())
                    throw std::runtime_error("ground truth file missing from repo: " + path);
                relevant.push_back(static_cast<std::uint32_t>(idx));
            }
            rec.value_by_budget[0] = ndcg(ranking, relevant);
        } catch (const std::exception& e) {
            rec.errored = true;
            rec.error = e.what();
        }
    });

    finalize_means(report);
    report.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

// ---------------------------------------------------------------------------
// Staged search
// ---------------------------------------------------------------------------

json SearchOutcome::to_json() const {
    json stages_j = json::array();
    for (const auto& stage : stages) {
        json cells = json::array();
        for (const auto& cell : stage.cells) {
            json cj{{"label", cell.label}};
            if (cell.errored) {
                cj["error"] = cell.error;
            } else {
                cj["mean"] = cell.mean;
                json by_budget;
                for (const auto& [b, v] : cell.mean_by_budget) by_budget[std::to_string(b)] = v;
                cj["mean_by_budget"] = by_budget;
                if (cell.tie_break_latency >= 0.0)
                    cj["tie_break_latency"] = cell.tie_break_latency;
            }
            cells.push_back(std::move(cj));
        }
        stages_j.push_back(
            {{"name", stage.name}, {"cells", cells}, {"winner", stage.winner_label}});
    }
    return {{"stages", stages_j},
            {"final_config", final_config.to_json()},
            {"final_label", final_config.label()}};
}

std::string SearchOutcome::to_csv() const {
    std::ostringstream out;
    out << "stage,cell,mean,winner\n";
    for (const auto& stage : stages) {
        for (const auto& cell : stage.cells) {
            out << csv_escape(stage.name) << ',' << csv_escape(cell.label) << ',';
            if (cell.errored) out << "error";
            else out << cell.mean;
            out << ',' << (cell.label == stage.winner_label ? "yes" : "no") << "\n";
        }
    }
    return out.str();
}

SearchOutcome staged_search(const StagePlan& plan, RetrievalConfig base,
                            const CellEvaluator& evaluator) {
    if (!evaluator.means) throw std::invalid_argument("cell evaluator not set");
    SearchOutcome outcome;
    RetrievalConfig current = base;

    for (const auto& stage : plan.stages) {
        if (stage.cells.empty())
            throw std::invalid_argument("stage has no cells: " + stage.name);
        StageOutcome stage_out;
        stage_out.name = stage.name;

        std::vector<RetrievalConfig> cell_configs;
        for (const auto& cell : stage.cells) {
            RetrievalConfig candidate = current;
            candidate.budget_tokens = plan.selection_budget;
            cell.apply(candidate);
            cell_configs.push_back(candidate);

            CellOutcome result;
            result.label = cell.label;
            try {
                result.mean_by_budget = evaluator.means(candidate);
                auto it = result.mean_by_budget.find(plan.selection_budget);
                if (it == result.mean_by_budget.end()) {
                    if (result.mean_by_budget.empty())
                        throw std::runtime_error("no metric computed for cell");
                    it = result.mean_by_budget.begin();
                }
                result.mean = it->second;
            } catch (const std::exception& e) {
                result.errored = true;
                result.error = e.what();
            }
            stage_out.cells.push_back(std::move(result));
        }

        // argmax over non-errored cells; exact ties go to the cheaper
        // config by a latency probe when available, else to grid order.
        std::size_t best = stage_out.cells.size();
        for (std::size_t i = 0; i < stage_out.cells.size(); ++i) {
            auto& cell = stage_out.cells[i];
            if (cell.errored) continue;
            if (best == stage_out.cells.size()) {
                best = i;
                continue;
            }
            auto& incumbent = stage_out.cells[best];
            if (cell.mean > incumbent.mean) {
                best = i;
            } else if (cell.mean == incumbent.mean && evaluator.latency) {
                if (incumbent.tie_break_latency < 0.0)
                    incumbent.tie_break_latency = evaluator.latency(cell_configs[best]);
                cell.tie_break_latency = evaluator.latency(cell_configs[i]);
                if (cell.tie_break_latency < incumbent.tie_break_latency) best = i;
            }
        }
        if (best == stage_out.cells.size())
            throw std::runtime_error("staged search aborted: every cell of stage '" + stage.name +
                                     "' failed");

        stage_out.winner_label = stage_out.cells[best].label;
        current = cell_configs[best];
        current.budget_tokens = base.budget_tokens;
        outcome.stages.push_back(std::move(stage_out));
    }

    outcome.final_config = current;
    return outcome;
}

CellEvaluator make_cc_cell_evaluator(const std::vector<CompletionInstance>& dataset,
                                     const CcEvalOptions& options) {
    CellEvaluator evaluator;
    evaluator.means = [dataset, options](const RetrievalConfig& config) {
        EvalReport report = evaluate_cc(dataset, config, options);
        if (report.metric == "none")
            throw std::runtime_error(
                "staged search needs a measurable metric; provide relevance labels or a "
                "completion provider");
        return report.mean_by_budget;
    };
    evaluator.latency = [dataset, options](const RetrievalConfig& config) {
        // Cheap probe: wall time of one evaluation pass at the selection budget.
        CcEvalOptions probe = options;
        probe.workers = 1;
        auto t0 = std::chrono::steady_clock::now();
        evaluate_cc(dataset, config, probe);
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };
    return evaluator;
}

CellEvaluator make_bl_cell_evaluator(const std::vector<BugLocalizationInstance>& dataset,
                                     int workers) {
    CellEvaluator evaluator;
    evaluator.means = [dataset, workers](const RetrievalConfig& config) {
        return evaluate_bl(dataset, config, workers).mean_by_budget;
    };
    evaluator.latency = [dataset, workers](const RetrievalConfig& config) {
        auto t0 = std::chrono::steady_clock::now();
        evaluate_bl(dataset, config, workers);
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };
    return evaluator;
}

StagePlan make_cc_stage_plan(const SearchOptions& options) {
    StagePlan plan;
    plan.budgets = options.budgets;
    plan.selection_budget = options.selection_budget;

    Stage stage1;
    stage1.name = "scorer-splitter";
    for (const auto& scorer_name : options.scorers) {
        ScorerKind scorer = scorer_from_string(scorer_name);
        if (!scorer_uses_splitter(scorer)) {
            stage1.cells.push_back({scorer_name, [scorer](RetrievalConfig& c) {
                                        c.scorer = scorer;
                                        c.chunker = {ChunkerKind::whole_file, 0, 0};
                                    }});
            continue;
        }
        for (const auto& splitter_name : options.splitters) {
            SplitterKind splitter = splitter_from_string(splitter_name);
            stage1.cells.push_back(
                {scorer_name + "+" + splitter_name, [scorer, splitter](RetrievalConfig& c) {
                     c.scorer = scorer;
                     c.splitter = splitter;
                     c.chunker = {ChunkerKind::whole_file, 0, 0};
                 }});
        }
    }
    plan.stages.push_back(std::move(stage1));

    Stage stage2;
    stage2.name = "window";
    for (std::size_t window : options.windows) {
        std::string label = window == 0 ? "whole_file" : "fixed" + std::to_string(window);
        stage2.cells.push_back({label, [window](RetrievalConfig& c) {
                                    c.chunker.kind = window == 0 ? ChunkerKind::whole_file
                                                                 : ChunkerKind::fixed_lines;
                                    c.chunker.window_lines = window;
                                    c.chunker.target_chars = 0;
                                }});
    }
    plan.stages.push_back(std::move(stage2));

    if (options.chunker_stage) {
        Stage stage3;
        stage3.name = "chunker";
        stage3.cells.push_back({"fixed", [](RetrievalConfig&) {}});
        stage3.cells.push_back({"recursive-matched", [](RetrievalConfig& c) {
                                    c.chunker.kind = ChunkerKind::recursive;
                                    c.chunker.target_chars = 0;  // matched to window_lines
                                }});
        plan.stages.push_back(std::move(stage3));
    }

    if (options.reranker_stage) {
        Stage stage4;
        stage4.name = "reranker";
        stage4.cells.push_back({"content", [](RetrievalConfig&) {}});
        stage4.cells.push_back({"hybrid-structure", [](RetrievalConfig& c) {
                                    c.scorer = ScorerKind::hybrid;
                                }});
        stage4.cells.push_back({"path_distance", [](RetrievalConfig& c) {
                                    c.scorer = ScorerKind::path_distance;
                                }});
        plan.stages.push_back(std::move(stage4));
    }
    return plan;
}

StagePlan make_bl_stage_plan(const SearchOptions& options) {
    StagePlan plan;
    plan.budgets = {0};
    plan.selection_budget = 0;

    Stage stage1;
    stage1.name = "scorer-splitter";
    for (const auto& scorer_name : options.scorers) {
        ScorerKind scorer = scorer_from_string(scorer_name);
        if (!scorer_uses_splitter(scorer)) {
            stage1.cells.push_back({scorer_name, [scorer](RetrievalConfig& c) {
                                        c.scorer = scorer;
                                        c.chunker = {ChunkerKind::whole_file, 0, 0};
                                    }});
            continue;
        }
        for (const auto& splitter_name : options.splitters) {
            SplitterKind splitter = splitter_from_string(splitter_name);
            stage1.cells.push_back(
                {scorer_name + "+" + splitter_name, [scorer, splitter](RetrievalConfig& c) {
                     c.scorer = scorer;
                     c.splitter = splitter;
                     c.chunker = {ChunkerKind::whole_file, 0, 0};
                 }});
        }
    }
    plan.stages.push_back(std::move(stage1));
    return plan;
}

}  // namespace coderag
