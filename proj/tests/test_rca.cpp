#include <doctest.h>

#include <algorithm>

#include "errors.hpp"
#include "rca.hpp"
#include "rng.hpp"
#include "simulator.hpp"

using namespace trca;

namespace {

BinaryPanel bits_panel(std::vector<std::string> names, std::vector<std::vector<std::uint8_t>> bits) {
    BinaryPanel panel;
    panel.names = std::move(names);
    panel.bits = std::move(bits);
    return panel;
}

SummaryGraph diamond() {
    return SummaryGraph({"W", "X", "Y", "Z"}, {{"Z", "Y"},
                                               {"Y", "X"},
                                               {"X", "W"},
                                               {"W", "X"},
                                               {"W", "W"},
                                               {"X", "X"},
                                               {"Y", "Y"},
                                               {"Z", "Z"}});
}

// Structural soundness of a detection: every reported vertex either has
// no anomalous parent besides itself, or is the earliest member of a
// larger component whose parents all lie inside it.
void check_soundness(const SummaryGraph& g, const std::set<std::string>& anomalies, const AppearanceTimeMap& tau,
                     const std::set<std::string>& reported) {
    const SummaryGraph sub = anomalous_subgraph(g, anomalies);
    for (const auto& r : reported) {
        REQUIRE(anomalies.count(r));
        std::set<std::string> parents = sub.parents(r);
        parents.erase(r);
        if (parents.empty()) continue;  // no anomalous parent besides itself
        bool justified = false;
        for (const auto& scc : scc_decompose(sub)) {
            if (std::find(scc.members.begin(), scc.members.end(), r) == scc.members.end()) continue;
            if (scc.members.size() < 2) break;
            const std::set<std::string> member_set(scc.members.begin(), scc.members.end());
            bool internal = true;
            for (const auto& m : scc.members) {
                for (const auto& p : sub.parents(m)) {
                    if (!member_set.count(p)) internal = false;
                }
            }
            if (!internal) break;
            std::size_t best = tau.at(scc.members.front());
            for (const auto& m : scc.members) best = std::min(best, tau.at(m));
            justified = tau.at(r) == best;
            break;
        }
        CHECK(justified);
    }
}

// Ground-truth trace for a fixed graph with hand-placed interventions;
// bits are derived from the draws so the window is consistent by
// construction.
struct ManualScenario {
    TraceDoc trace;
    BinaryPanel online;
};

ManualScenario manual_scenario(const WindowGraph& graph, std::size_t length,
                               const std::vector<RootCauseEvent>& events) {
    TraceDoc doc;
    doc.params.graph = graph;
    doc.params.epsilon.assign(graph.vertices.size(), 1.0);
    doc.params.beta = 0.1;
    std::vector<double> thresholds(graph.vertices.size(), 0.8);
    doc.params.thresholds = fixed_thresholds(graph.vertices, thresholds);
    doc.scenario = Scenario::online_assumption5_violated;
    doc.online.u_draws.assign(graph.vertices.size(), std::vector<std::uint8_t>(length, 1));
    doc.online.i_draws.assign(graph.vertices.size(), std::vector<std::uint8_t>(length, 0));
    for (const auto& ev : events) {
        const std::size_t v = static_cast<std::size_t>(
            std::lower_bound(graph.vertices.begin(), graph.vertices.end(), ev.vertex) - graph.vertices.begin());
        doc.online.i_draws[v][ev.time] = 1;
    }
    doc.online.root_causes = events;
    std::sort(doc.online.root_causes.begin(), doc.online.root_causes.end());
    ManualScenario scenario;
    scenario.online = regenerate_bits(doc.params, doc.online, {});
    scenario.trace = std::move(doc);
    return scenario;
}

WindowGraph chain_with_self_loops() {
    return make_window_graph(
        {"X", "Y", "Z"},
        {{"Z", 1, "Y"}, {"Y", 1, "X"}, {"X", 1, "X"}, {"Y", 1, "Y"}, {"Z", 1, "Z"}}, 1);
}

}  // namespace

TEST_CASE("detect_anomalies finds first crossings") {
    SUBCASE("all-zero panel has no anomalies") {
        const BinaryPanel panel = bits_panel({"X", "Y"}, {{0, 0, 0}, {0, 0, 0}});
        const Detection detection = detect_anomalies(panel);
        CHECK(detection.anomalies.empty());
        CHECK(detection.tau.empty());
    }
    SUBCASE("appearance times are the argmin over anomalous steps") {
        const BinaryPanel panel = bits_panel({"X", "Y"}, {{0, 0, 1, 1}, {0, 1, 1, 0}});
        const Detection detection = detect_anomalies(panel);
        CHECK(detection.anomalies == std::set<std::string>{"X", "Y"});
        CHECK(detection.tau.at("X") == 2);
        CHECK(detection.tau.at("Y") == 1);
    }
    SUBCASE("the diamond appearance ordering is preserved") {
        const BinaryPanel panel = bits_panel({"W", "X", "Y", "Z"},
                                             {{0, 0, 0, 1}, {0, 0, 1, 1}, {0, 1, 1, 1}, {1, 1, 1, 1}});
        const Detection detection = detect_anomalies(panel);
        CHECK(detection.tau.at("Z") < detection.tau.at("Y"));
        CHECK(detection.tau.at("Y") < detection.tau.at("X"));
        CHECK(detection.tau.at("X") < detection.tau.at("W"));
    }
}

TEST_CASE("trca on the diamond example") {
    SUBCASE("with the muted middle vertex both sources are found") {
        const Fixture fixture = diamond_fixture();
        const Detection detection = detect_anomalies(fixture.online);
        CHECK(detection.anomalies == std::set<std::string>{"W", "X", "Z"});
        const TrcaResult result = detect_root_causes(fixture.graph.summary, detection.anomalies, detection.tau);
        CHECK(result.root_causes == fixture.expected_root_causes);  // {"X", "Z"}
        CHECK(result.unresolved_components.empty());
        check_soundness(fixture.graph.summary, detection.anomalies, detection.tau, result.root_causes);
    }
    SUBCASE("with every vertex anomalous the cycle is fed from outside and skipped") {
        const std::set<std::string> anomalies{"W", "X", "Y", "Z"};
        AppearanceTimeMap tau{{"Z", 0}, {"Y", 1}, {"X", 2}, {"W", 3}};
        const TrcaResult result = detect_root_causes(diamond(), anomalies, tau);
        CHECK(result.root_causes == std::set<std::string>{"Z"});
        REQUIRE(result.unresolved_components.size() == 2);  // {Y} and {W, X} both have outside parents
        CHECK(result.unresolved_components[1] == std::vector<std::string>{"W", "X"});
    }
    SUBCASE("empty anomaly set yields an empty detection") {
        const TrcaResult result = detect_root_causes(diamond(), {}, {});
        CHECK(result.root_causes.empty());
        CHECK(result.unresolved_components.empty());
    }
    SUBCASE("missing appearance time is an input error") {
        CHECK_THROWS_WITH_AS(detect_root_causes(diamond(), {"Z"}, {}), doctest::Contains("appearance time missing"), Error);
    }
}

TEST_CASE("trca tie-breaking inside a cycle") {
    const SummaryGraph cycle({"P", "Q"}, {{"P", "Q"}, {"Q", "P"}});
    const std::set<std::string> anomalies{"P", "Q"};
    const AppearanceTimeMap tau{{"P", 3}, {"Q", 3}};
    SUBCASE("lexicographic tie-break is deterministic") {
        CHECK(detect_root_causes(cycle, anomalies, tau).root_causes == std::set<std::string>{"P"});
        CHECK(detect_root_causes(cycle, anomalies, tau).root_causes == std::set<std::string>{"P"});
    }
    SUBCASE("seeded random tie-break picks one member reproducibly") {
        const TrcaResult a = detect_root_causes(cycle, anomalies, tau, TieBreak::seeded_random, 9);
        const TrcaResult b = detect_root_causes(cycle, anomalies, tau, TieBreak::seeded_random, 9);
        CHECK(a.root_causes == b.root_causes);
        CHECK(a.root_causes.size() == 1);
        const std::string& pick = *a.root_causes.begin();
        CHECK((pick == "P" || pick == "Q"));
    }
    SUBCASE("the earliest member wins regardless of tie-break mode") {
        const AppearanceTimeMap distinct{{"P", 5}, {"Q", 2}};
        CHECK(detect_root_causes(cycle, anomalies, distinct).root_causes == std::set<std::string>{"Q"});
        CHECK(detect_root_causes(cycle, anomalies, distinct, TieBreak::seeded_random, 123).root_causes ==
              std::set<std::string>{"Q"});
    }
}

TEST_CASE("oracle-graph detection returns exactly the true roots on clean scenarios") {
    for (std::uint64_t seed = 0; seed < 60; ++seed) {
        TrialOptions options;
        options.offline_length = 300;
        options.online_length = 60;
        options.scenario = Scenario::online_assumption5_ok;
        const TdscmTrial trial = make_tdscm_trial(options, mix_seed(31000, seed));
        const SummaryGraph oracle = collapse_to_summary(trial.params.graph);
        const Detection detection = detect_anomalies(trial.online.bits);
        const TrcaResult result = detect_root_causes(oracle, detection.anomalies, detection.tau);
        CHECK(result.root_causes == root_cause_vertices(trial.online.trace));
        check_soundness(oracle, detection.anomalies, detection.tau, result.root_causes);
    }
}

TEST_CASE("agent walks a violated chain in two iterations") {
    const ManualScenario scenario =
        manual_scenario(chain_with_self_loops(), 12, {{"X", 0}, {"Z", 0}});
    const SummaryGraph summary = collapse_to_summary(scenario.trace.params.graph);

    // Sanity: this is the forbidden pattern (both roots on one active path).
    const Detection detection = detect_anomalies(scenario.online);
    CHECK_FALSE(check_assumption5(summary, {"X", "Z"}, detection.anomalies).satisfied);
    CHECK(max_on_directed_path(summary, {"X", "Z"}) == 2);

    const Fixer fixer = make_reference_fixer(scenario.trace);
    const AnomalyReport report = trca_agent(summary, scenario.online, fixer, 2);
    REQUIRE(report.iterations.size() == 2);
    CHECK(report.iterations[0].detected == std::set<std::string>{"Z"});
    CHECK(report.iterations[1].detected == std::set<std::string>{"X"});
    CHECK(report.iterations[1].fixed == std::set<std::string>{"X", "Z"});
    CHECK(report.root_causes == std::set<std::string>{"X", "Z"});
    CHECK_FALSE(report.incomplete);
}

TEST_CASE("agent terminates in one iteration on clean scenarios") {
    const WindowGraph fork = make_window_graph(
        {"A", "B", "R"}, {{"R", 1, "A"}, {"R", 1, "B"}, {"A", 1, "A"}, {"B", 1, "B"}, {"R", 1, "R"}}, 1);
    const ManualScenario scenario = manual_scenario(fork, 10, {{"A", 0}, {"B", 1}});
    const SummaryGraph summary = collapse_to_summary(fork);
    const Fixer fixer = make_reference_fixer(scenario.trace);
    const AnomalyReport report = trca_agent(summary, scenario.online, fixer, 5);
    REQUIRE(report.iterations.size() == 1);
    CHECK(report.iterations[0].detected == std::set<std::string>{"A", "B"});
    CHECK(report.root_causes == detect_root_causes(summary, detect_anomalies(scenario.online).anomalies,
                                     detect_anomalies(scenario.online).tau)
                                    .root_causes);
    CHECK_FALSE(report.incomplete);
}

TEST_CASE("a fixer that does nothing leaves the run incomplete") {
    const ManualScenario scenario = manual_scenario(chain_with_self_loops(), 12, {{"X", 0}, {"Z", 0}});
    const SummaryGraph summary = collapse_to_summary(scenario.trace.params.graph);
    const Fixer no_op = [](const BinaryPanel& panel, const std::set<std::string>&) { return panel; };
    const AnomalyReport report = trca_agent(summary, scenario.online, no_op, 3);
    CHECK(report.incomplete);
    REQUIRE(report.iterations.size() == 3);
    CHECK(report.iterations[0].detected == report.iterations[1].detected);
    CHECK(report.iterations[1].detected == report.iterations[2].detected);
}

TEST_CASE("agent on a clean window reports one empty iteration") {
    const BinaryPanel quiet = bits_panel({"X", "Y", "Z"}, {{0, 0}, {0, 0}, {0, 0}});
    const SummaryGraph summary = collapse_to_summary(chain_with_self_loops());
    const Fixer no_op = [](const BinaryPanel& panel, const std::set<std::string>&) { return panel; };
    const AnomalyReport report = trca_agent(summary, quiet, no_op, 3);
    CHECK_FALSE(report.incomplete);
    REQUIRE(report.iterations.size() == 1);
    CHECK(report.iterations[0].detected.empty());
    CHECK(report.root_causes.empty());
}

TEST_CASE("the reference fixer removes exactly the attributable anomalies") {
    const ManualScenario scenario = manual_scenario(chain_with_self_loops(), 12, {{"X", 0}, {"Z", 0}});
    const TraceDoc& trace = scenario.trace;

    SUBCASE("fixing the upstream root clears its downstream propagation only") {
        const BinaryPanel fixed = regenerate_bits(trace.params, trace.online, {"Z"});
        const std::size_t zi = fixed.index_of("Z");
        const std::size_t yi = fixed.index_of("Y");
        const std::size_t xi = fixed.index_of("X");
        CHECK(std::count(fixed.bits[zi].begin(), fixed.bits[zi].end(), 1) == 0);
        CHECK(std::count(fixed.bits[yi].begin(), fixed.bits[yi].end(), 1) == 0);
        CHECK(std::count(fixed.bits[xi].begin(), fixed.bits[xi].end(), 1) > 0);  // X's own intervention persists
    }
    SUBCASE("fixing a non-root anomalous vertex changes nothing") {
        const BinaryPanel fixed = regenerate_bits(trace.params, trace.online, {"Y"});
        CHECK(fixed.bits == scenario.online.bits);
    }
    SUBCASE("fixing every root clears the panel") {
        const BinaryPanel fixed = regenerate_bits(trace.params, trace.online, {"X", "Z"});
        for (const auto& series : fixed.bits) {
            CHECK(std::count(series.begin(), series.end(), 1) == 0);
        }
    }
    SUBCASE("remediation never introduces new 1-bits") {
        Rng rng(17);
        for (int trial = 0; trial < 10; ++trial) {
            std::set<std::string> roots;
            for (const auto& v : trace.params.graph.vertices) {
                if (rng.bernoulli(0.5)) roots.insert(v);
            }
            const BinaryPanel fixed = regenerate_bits(trace.params, trace.online, roots);
            for (std::size_t v = 0; v < fixed.series_count(); ++v) {
                for (std::size_t t = 0; t < fixed.length(); ++t) {
                    CHECK(fixed.bits[v][t] <= scenario.online.bits[v][t]);
                }
            }
        }
    }
}

TEST_CASE("a fixer that invents anomalies violates the contract") {
    const ManualScenario scenario = manual_scenario(chain_with_self_loops(), 12, {{"Z", 0}});
    const SummaryGraph summary = collapse_to_summary(scenario.trace.params.graph);
    // X needs two propagation steps, so (X, 0) is guaranteed clear.
    const Fixer bad = [](const BinaryPanel& panel, const std::set<std::string>&) {
        BinaryPanel broken = panel;
        broken.bits[broken.index_of("X")][0] = 1;
        return broken;
    };
    CHECK_THROWS_WITH_AS(trca_agent(summary, scenario.online, bad, 3),
                         doctest::Contains("fixer contract violated"), Error);
}

TEST_CASE("reports serialize to JSON and back") {
    const Fixture fixture = diamond_fixture();
    AnomalyReport report = analyze(fixture.graph.summary, fixture.online);
    report.iterations.push_back({{"Z"}, {"Z"}});
    const AnomalyReport loaded = report_from_json(report_to_json(report));
    CHECK(loaded.anomalies == report.anomalies);
    CHECK(loaded.tau == report.tau);
    CHECK(loaded.root_causes == report.root_causes);
    CHECK(loaded.incomplete == report.incomplete);
    REQUIRE(loaded.iterations.size() == 1);
    CHECK(loaded.iterations[0].detected == std::set<std::string>{"Z"});
}
