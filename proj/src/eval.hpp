#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "discovery.hpp"
#include "simulator.hpp"

namespace trca {

/// 2TP / (2TP + FP + FN). Two empty sets score 1 (nothing to find,
/// nothing found); a non-empty guess against an empty truth scores 0.
double f1_score(const std::set<std::string>& truth, const std::set<std::string>& inferred);

enum class EvalGenerator { tdscm, linear, noise_shift };
enum class ThresholdPolicy { true_thresholds, quantile, sweep, offset_sweep };
enum class GraphSource { learned, oracle };

std::string generator_name(EvalGenerator g);
std::string graph_source_name(GraphSource s);

struct ExperimentConfig {
    EvalGenerator generator = EvalGenerator::tdscm;
    Scenario scenario = Scenario::online_assumption5_ok;
    int n_trials = 50;
    std::size_t offline_length = 20000;
    std::vector<std::size_t> online_lengths = {10, 50, 200};

    ThresholdPolicy policy = ThresholdPolicy::true_thresholds;
    double quantile_p = 0.9;
    std::vector<double> sweep_proportions;  // quantile sweep grid
    std::vector<double> offset_grid;        // additive offsets from the true thresholds

    GraphSource graph_source = GraphSource::learned;
    bool agent = false;  // trace-backed fixer; requires the tdscm generator

    int vertices = 6;
    int degree_min = 4;
    int degree_max = 5;
    int root_vertices = 1;
    double beta = 0.1;
    double shift = 5.0;  // noise-shift generator

    DiscoveryConfig discovery;
    std::uint64_t seed = 1;
    int max_generation_retries = 25;

    /// Collects every schema violation and reports them in one config
    /// error.
    void validate(bool sweep_mode) const;
};

struct ResultRow {
    std::string generator;
    std::string scenario;
    std::string graph;
    std::string thresholds;  // e.g. "true", "quantile(0.9)", "offset(+0.05)"
    std::size_t online_length = 0;
    int trial = 0;
    double f1 = 0.0;
    bool clamped = false;  // an offset pushed some threshold outside [0,1]
    bool error = false;    // generation failed after the retry budget
    double offline_seconds = 0.0;
    double online_seconds = 0.0;
};

struct AggregateRow {
    std::string generator;
    std::string scenario;
    std::string graph;
    std::string thresholds;
    std::size_t online_length = 0;
    std::size_t n = 0;       // scored trials
    std::size_t errors = 0;  // trials excluded after generation failures
    double mean_f1 = 0.0;
    double var_f1 = 0.0;  // population variance
};

struct ResultTable {
    std::vector<ResultRow> rows;
    std::vector<AggregateRow> aggregates;
};

std::vector<AggregateRow> aggregate_rows(const std::vector<ResultRow>& rows);

/// One full grid run: per trial, generate the system once, fit thresholds
/// and (when configured) the graph on the offline window, then score every
/// online length. Trials run in parallel with per-trial derived seeds and
/// are merged in trial order.
ResultTable run_experiment(const ExperimentConfig& cfg, int jobs = 0);

/// Same machinery over a threshold grid (quantile proportions or additive
/// offsets); tdscm runs also emit the true-threshold reference point.
ResultTable threshold_sweep(const ExperimentConfig& cfg, int jobs = 0);

/// rows.csv, aggregates.csv, timings.csv and one SVG chart (mean with a
/// variance band against online length) per configuration family.
/// timings.csv is the only output that varies between identical runs.
void emit_results(const ResultTable& table, const std::string& out_dir);

/// Human-readable aggregate table.
std::string summarize_results(const ResultTable& table);

/// INI-style config: `[section]` headers and `key = value` lines; `#`
/// starts a comment. Overrides take `section.key=value` form.
ExperimentConfig parse_experiment_config(const std::string& text, const std::vector<std::string>& overrides);
ExperimentConfig load_experiment_config(const std::string& path, const std::vector<std::string>& overrides);

/// The planned grid (config points, lengths, trial count) without running.
std::string describe_grid(const ExperimentConfig& cfg, bool sweep_mode);

}  // namespace trca
