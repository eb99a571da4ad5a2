#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "errors.hpp"
#include "eval.hpp"
#include "parallel.hpp"
#include "rca.hpp"
#include "rng.hpp"

using namespace trca;

namespace {

ExperimentConfig tiny_config() {
    ExperimentConfig cfg;
    cfg.generator = EvalGenerator::tdscm;
    cfg.scenario = Scenario::online_assumption5_ok;
    cfg.n_trials = 2;
    cfg.offline_length = 600;
    cfg.online_lengths = {10, 20};
    cfg.policy = ThresholdPolicy::true_thresholds;
    cfg.graph_source = GraphSource::oracle;
    cfg.seed = 5;
    return cfg;
}

std::vector<std::vector<std::string>> read_csv_rows(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        rows.push_back(fields);
    }
    return rows;
}

}  // namespace

TEST_CASE("f1_score matches the formula") {
    CHECK(f1_score({"Z", "X"}, {"Z", "X"}) == doctest::Approx(1.0));
    CHECK(f1_score({"Z", "X"}, {"Z"}) == doctest::Approx(2.0 / 3.0));
    CHECK(f1_score({"Z", "X"}, {"Y", "W"}) == doctest::Approx(0.0));
    CHECK(f1_score({}, {}) == doctest::Approx(1.0));
    CHECK(f1_score({}, {"X"}) == doctest::Approx(0.0));

    SUBCASE("swapping a false positive for a false negative leaves F1 unchanged") {
        // TP = 1 in both cases; (FP, FN) = (1, 0) vs (0, 1).
        const double with_fp = f1_score({"a"}, {"a", "b"});
        const double with_fn = f1_score({"a", "b"}, {"a"});
        CHECK(with_fp == doctest::Approx(with_fn));
        Rng rng(3);
        for (int trial = 0; trial < 20; ++trial) {
            const std::size_t tp = rng.below(5);
            const std::size_t fp = rng.below(5);
            const std::size_t fn = rng.below(5);
            std::set<std::string> truth, guess;
            for (std::size_t i = 0; i < tp; ++i) {
                truth.insert("t" + std::to_string(i));
                guess.insert("t" + std::to_string(i));
            }
            for (std::size_t i = 0; i < fp; ++i) guess.insert("fp" + std::to_string(i));
            for (std::size_t i = 0; i < fn; ++i) truth.insert("fn" + std::to_string(i));
            std::set<std::string> swapped_truth, swapped_guess;
            for (std::size_t i = 0; i < tp; ++i) {
                swapped_truth.insert("t" + std::to_string(i));
                swapped_guess.insert("t" + std::to_string(i));
            }
            for (std::size_t i = 0; i < fn; ++i) swapped_guess.insert("fp" + std::to_string(i));
            for (std::size_t i = 0; i < fp; ++i) swapped_truth.insert("fn" + std::to_string(i));
            CHECK(f1_score(truth, guess) == doctest::Approx(f1_score(swapped_truth, swapped_guess)));
        }
    }
}

TEST_CASE("run_experiment is deterministic for a fixed seed") {
    const ExperimentConfig cfg = tiny_config();
    const ResultTable a = run_experiment(cfg, 2);
    const ResultTable b = run_experiment(cfg, 1);
    REQUIRE(a.rows.size() == b.rows.size());
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        CHECK(a.rows[i].f1 == b.rows[i].f1);
        CHECK(a.rows[i].thresholds == b.rows[i].thresholds);
        CHECK(a.rows[i].online_length == b.rows[i].online_length);
        CHECK(a.rows[i].trial == b.rows[i].trial);
    }
    REQUIRE(a.aggregates.size() == b.aggregates.size());
    for (std::size_t i = 0; i < a.aggregates.size(); ++i) {
        CHECK(a.aggregates[i].mean_f1 == b.aggregates[i].mean_f1);
        CHECK(a.aggregates[i].var_f1 == b.aggregates[i].var_f1);
    }
}

TEST_CASE("oracle detection does not depend on the window length when anomalies are stable") {
    int compared = 0;
    for (std::uint64_t seed = 0; seed < 15; ++seed) {
        TrialOptions options;
        options.offline_length = 300;
        options.online_length = 200;
        options.scenario = Scenario::online_assumption5_ok;
        const TdscmTrial trial = make_tdscm_trial(options, mix_seed(808080, seed));
        const SummaryGraph oracle = collapse_to_summary(trial.params.graph);
        const std::set<std::string> truth = root_cause_vertices(trial.online.trace);

        BinaryPanel short_window = trial.online.bits;
        for (auto& series : short_window.bits) series.resize(10);
        const Detection short_detection = detect_anomalies(short_window);
        const Detection long_detection = detect_anomalies(trial.online.bits);
        if (short_detection.anomalies != long_detection.anomalies) continue;  // paired check applies only then
        ++compared;
        const double f1_short =
            f1_score(truth, detect_root_causes(oracle, short_detection.anomalies, short_detection.tau).root_causes);
        const double f1_long = f1_score(truth, detect_root_causes(oracle, long_detection.anomalies, long_detection.tau).root_causes);
        CHECK(f1_short == doctest::Approx(f1_long));
    }
    CHECK(compared > 0);
}

TEST_CASE("the oracle graph never trails the learned graph in expectation") {
    double oracle_total = 0.0;
    double learned_total = 0.0;
    const int trials = 50;
    std::vector<std::pair<double, double>> scores(trials);
    parallel_for(trials, 0, [&](std::size_t i) {
        TrialOptions options;
        options.offline_length = 20000;
        options.online_length = 50;
        options.scenario = Scenario::online_assumption5_ok;
        const TdscmTrial trial = make_tdscm_trial(options, mix_seed(606060, i));
        const std::set<std::string> truth = root_cause_vertices(trial.online.trace);
        const Detection detection = detect_anomalies(trial.online.bits);
        const SummaryGraph oracle = collapse_to_summary(trial.params.graph);
        DiscoveryConfig cfg;
        const SummaryGraph learned = discover_summary(trial.offline.bits, cfg, 1);
        scores[i] = {f1_score(truth, detect_root_causes(oracle, detection.anomalies, detection.tau).root_causes),
                     f1_score(truth, detect_root_causes(learned, detection.anomalies, detection.tau).root_causes)};
    });
    for (const auto& [oracle_f1, learned_f1] : scores) {
        oracle_total += oracle_f1;
        learned_total += learned_f1;
    }
    CHECK(oracle_total >= learned_total);
    CHECK(oracle_total / trials == doctest::Approx(1.0));  // exact under the clean scenario
}

TEST_CASE("emit_results writes consistent CSVs and charts") {
    const auto dir = std::filesystem::temp_directory_path() / "eval_emit_test";
    std::filesystem::remove_all(dir);

    SUBCASE("empty table: header-only CSVs, no SVG") {
        emit_results(ResultTable{}, dir.string());
        CHECK(read_csv_rows((dir / "rows.csv").string()).size() == 1);
        CHECK(read_csv_rows((dir / "aggregates.csv").string()).size() == 1);
        std::size_t svg_count = 0;
        for (const auto& entry : std::filesystem::directory_iterator(dir)) {
            if (entry.path().extension() == ".svg") ++svg_count;
        }
        CHECK(svg_count == 0);
    }
    SUBCASE("two-point table: one polyline with two points") {
        ResultTable table;
        for (std::size_t length : {10, 200}) {
            ResultRow row;
            row.generator = "tdscm";
            row.scenario = "online_assumption5_ok";
            row.graph = "oracle";
            row.thresholds = "true";
            row.online_length = length;
            row.trial = 0;
            row.f1 = length == 10 ? 0.5 : 1.0;
            table.rows.push_back(row);
        }
        table.aggregates = aggregate_rows(table.rows);
        emit_results(table, dir.string());
        std::size_t svg_count = 0;
        std::string svg_text;
        for (const auto& entry : std::filesystem::directory_iterator(dir)) {
            if (entry.path().extension() == ".svg") {
                ++svg_count;
                std::ifstream in(entry.path());
                std::stringstream buf;
                buf << in.rdbuf();
                svg_text = buf.str();
            }
        }
        CHECK(svg_count == 1);
        CHECK(svg_text.find("<polyline") != std::string::npos);
        CHECK(svg_text.find("<script") == std::string::npos);
    }
    SUBCASE("aggregates recompute from rows.csv") {
        const ExperimentConfig cfg = tiny_config();
        const ResultTable table = run_experiment(cfg, 2);
        emit_results(table, dir.string());
        const auto rows = read_csv_rows((dir / "rows.csv").string());
        const auto aggs = read_csv_rows((dir / "aggregates.csv").string());
        REQUIRE(rows.size() > 1);
        REQUIRE(aggs.size() > 1);
        // rows.csv: generator,scenario,graph,thresholds,online_length,trial,f1,clamped,error
        for (std::size_t a = 1; a < aggs.size(); ++a) {
            const auto& agg = aggs[a];
            double sum = 0.0;
            std::size_t n = 0;
            for (std::size_t r = 1; r < rows.size(); ++r) {
                if (rows[r][0] == agg[0] && rows[r][1] == agg[1] && rows[r][2] == agg[2] && rows[r][3] == agg[3] &&
                    rows[r][4] == agg[4] && rows[r][8] == "0") {
                    sum += std::stod(rows[r][6]);
                    ++n;
                }
            }
            REQUIRE(n == std::stoul(agg[5]));
            const double mean = sum / static_cast<double>(n);
            CHECK(std::fabs(mean - std::stod(agg[7])) < 1e-12);
            double ss = 0.0;
            for (std::size_t r = 1; r < rows.size(); ++r) {
                if (rows[r][0] == agg[0] && rows[r][1] == agg[1] && rows[r][2] == agg[2] && rows[r][3] == agg[3] &&
                    rows[r][4] == agg[4] && rows[r][8] == "0") {
                    const double d = std::stod(rows[r][6]) - mean;
                    ss += d * d;
                }
            }
            CHECK(std::fabs(ss / static_cast<double>(n) - std::stod(agg[8])) < 1e-12);
        }
    }
}

TEST_CASE("offset zero reproduces the true-threshold reference") {
    ExperimentConfig cfg = tiny_config();
    cfg.policy = ThresholdPolicy::offset_sweep;
    cfg.offset_grid = {0.0};
    const ResultTable table = threshold_sweep(cfg, 2);
    std::map<std::pair<std::size_t, int>, double> offset_f1, true_f1;
    for (const auto& row : table.rows) {
        if (row.thresholds == "true") {
            true_f1[{row.online_length, row.trial}] = row.f1;
        } else {
            offset_f1[{row.online_length, row.trial}] = row.f1;
        }
    }
    REQUIRE(!offset_f1.empty());
    REQUIRE(offset_f1.size() == true_f1.size());
    for (const auto& [key, value] : offset_f1) {
        CHECK(value == doctest::Approx(true_f1.at(key)));
    }
}

TEST_CASE("continuous generators run through the experiment pipeline") {
    ExperimentConfig cfg;
    cfg.generator = EvalGenerator::noise_shift;
    cfg.scenario = Scenario::online_assumption5_ok;
    cfg.n_trials = 2;
    cfg.offline_length = 600;
    cfg.online_lengths = {20};
    cfg.policy = ThresholdPolicy::quantile;
    cfg.quantile_p = 0.9;
    cfg.graph_source = GraphSource::learned;
    cfg.shift = 5.0;
    cfg.seed = 77;
    const ResultTable table = run_experiment(cfg, 2);
    REQUIRE(table.rows.size() == 2);
    for (const auto& row : table.rows) {
        CHECK_FALSE(row.error);
        CHECK(row.f1 >= 0.0);
        CHECK(row.f1 <= 1.0);
        CHECK(row.thresholds == "quantile(0.9)");
    }

    cfg.generator = EvalGenerator::linear;
    const ResultTable linear_table = run_experiment(cfg, 2);
    REQUIRE(linear_table.rows.size() == 2);
    for (const auto& row : linear_table.rows) CHECK_FALSE(row.error);
}

TEST_CASE("offsets that leave [0,1] are clamped and flagged") {
    ExperimentConfig cfg = tiny_config();
    cfg.n_trials = 1;
    cfg.online_lengths = {10};
    cfg.policy = ThresholdPolicy::offset_sweep;
    cfg.offset_grid = {0.5, -0.02};  // +0.5 pushes every threshold past 1
    const ResultTable table = threshold_sweep(cfg, 1);
    bool plus_clamped = false;
    bool minus_clamped = false;
    for (const auto& row : table.rows) {
        if (row.thresholds == "offset(+0.5)") plus_clamped = row.clamped;
        if (row.thresholds == "offset(-0.02)") minus_clamped = row.clamped;
    }
    CHECK(plus_clamped);
    CHECK_FALSE(minus_clamped);
}

TEST_CASE("config files parse with overrides and report all violations at once") {
    const std::string text =
        "# demo config\n"
        "[experiment]\n"
        "generator = tdscm\n"
        "scenario = online_assumption5_ok\n"
        "trials = 3\n"
        "offline_length = 700\n"
        "online_lengths = 10 20 50\n"
        "thresholds = true\n"
        "graph = oracle\n"
        "seed = 42\n"
        "[graph]\n"
        "vertices = 6\n"
        "degree_min = 4\n"
        "degree_max = 5\n"
        "roots = 1\n"
        "[discovery]\n"
        "alpha = 0.01\n";

    SUBCASE("values land in the config") {
        const ExperimentConfig cfg = parse_experiment_config(text, {});
        CHECK(cfg.n_trials == 3);
        CHECK(cfg.offline_length == 700);
        CHECK(cfg.online_lengths == std::vector<std::size_t>{10, 20, 50});
        CHECK(cfg.graph_source == GraphSource::oracle);
        CHECK(cfg.seed == 42);
        cfg.validate(false);
    }
    SUBCASE("overrides win over file values") {
        const ExperimentConfig cfg = parse_experiment_config(text, {"experiment.trials=9", "graph.vertices=4"});
        CHECK(cfg.n_trials == 9);
        CHECK(cfg.vertices == 4);
    }
    SUBCASE("schema violations are listed together") {
        try {
            parse_experiment_config(text + "[experiment]\ntrials = nope\nmystery = 1\n[typo]\nkey = 2\n", {});
            FAIL("expected a config error");
        } catch (const Error& e) {
            const std::string message = e.what();
            CHECK(message.find("trials must be an integer") != std::string::npos);
            CHECK(message.find("experiment.mystery") != std::string::npos);
            CHECK(message.find("typo.key") != std::string::npos);
        }
    }
    SUBCASE("validation failures are listed together") {
        ExperimentConfig cfg = parse_experiment_config(text, {});
        cfg.n_trials = 0;
        cfg.quantile_p = 2.0;
        try {
            cfg.validate(false);
            FAIL("expected a config error");
        } catch (const Error& e) {
            const std::string message = e.what();
            CHECK(message.find("trials must be >= 1") != std::string::npos);
            CHECK(message.find("quantile must be in (0,1)") != std::string::npos);
        }
    }
}

TEST_CASE("sweep grids expand range syntax") {
    const ExperimentConfig cfg = parse_experiment_config(
        "[experiment]\nthresholds = sweep\nsweep_grid = 0.8:0.9:0.05\ngenerator = linear\n", {});
    REQUIRE(cfg.sweep_proportions.size() == 3);
    CHECK(cfg.sweep_proportions[0] == doctest::Approx(0.8));
    CHECK(cfg.sweep_proportions[1] == doctest::Approx(0.85));
    CHECK(cfg.sweep_proportions[2] == doctest::Approx(0.9));
}

TEST_CASE("describe_grid lists the planned points without running") {
    ExperimentConfig cfg = tiny_config();
    const std::string plan = describe_grid(cfg, false);
    CHECK(plan.find("T_on=10") != std::string::npos);
    CHECK(plan.find("T_on=20") != std::string::npos);
    CHECK(plan.find("trials=2") != std::string::npos);
}

TEST_CASE("config validation rejects inconsistent combinations") {
    ExperimentConfig cfg = tiny_config();
    cfg.generator = EvalGenerator::linear;
    cfg.policy = ThresholdPolicy::true_thresholds;
    CHECK_THROWS_WITH_AS(cfg.validate(false), doctest::Contains("true thresholds exist only"), Error);

    ExperimentConfig agent_cfg = tiny_config();
    agent_cfg.agent = true;
    agent_cfg.generator = EvalGenerator::noise_shift;
    agent_cfg.policy = ThresholdPolicy::quantile;
    CHECK_THROWS_WITH_AS(agent_cfg.validate(false), doctest::Contains("agent mode"), Error);
}
