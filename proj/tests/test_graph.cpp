#include <doctest.h>

#include <algorithm>
#include <map>

#include "errors.hpp"
#include "graph.hpp"
#include "rng.hpp"

using namespace trca;

namespace {

// Mutual-reachability oracle via Floyd-Warshall transitive closure.
std::vector<std::set<std::string>> scc_oracle(const SummaryGraph& g) {
    const auto& vs = g.vertices();
    const std::size_t n = vs.size();
    std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
    for (const auto& [s, t] : g.edges()) reach[g.index_of(s)][g.index_of(t)] = true;
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                if (reach[i][k] && reach[k][j]) reach[i][j] = true;
            }
        }
    }
    std::vector<bool> assigned(n, false);
    std::vector<std::set<std::string>> partition;
    for (std::size_t i = 0; i < n; ++i) {
        if (assigned[i]) continue;
        std::set<std::string> comp{vs[i]};
        assigned[i] = true;
        for (std::size_t j = i + 1; j < n; ++j) {
            if (!assigned[j] && reach[i][j] && reach[j][i]) {
                comp.insert(vs[j]);
                assigned[j] = true;
            }
        }
        partition.push_back(std::move(comp));
    }
    return partition;
}

bool same_partition(const std::vector<Scc>& sccs, std::vector<std::set<std::string>> oracle) {
    std::vector<std::set<std::string>> got;
    for (const auto& scc : sccs) got.emplace_back(scc.members.begin(), scc.members.end());
    auto cmp = [](const std::set<std::string>& a, const std::set<std::string>& b) { return *a.begin() < *b.begin(); };
    std::sort(got.begin(), got.end(), cmp);
    std::sort(oracle.begin(), oracle.end(), cmp);
    return got == oracle;
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

SummaryGraph random_digraph(std::size_t n, double p, Rng& rng, bool self_loops = true) {
    std::vector<std::string> names;
    for (std::size_t i = 0; i < n; ++i) names.push_back(std::string(1, static_cast<char>('a' + i)));
    std::vector<std::pair<std::string, std::string>> edges;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j && !self_loops) continue;
            if (rng.bernoulli(p)) edges.emplace_back(names[i], names[j]);
        }
    }
    return SummaryGraph(names, edges);
}

}  // namespace

TEST_CASE("collapse_to_summary merges lags and keeps self-loops") {
    SUBCASE("two lags collapse to one edge") {
        const WindowGraph wg = make_window_graph({"X", "Y"}, {{"X", 1, "Y"}, {"X", 2, "Y"}}, 2);
        const SummaryGraph g = collapse_to_summary(wg);
        CHECK(g.edges() == std::vector<std::pair<std::string, std::string>>{{"X", "Y"}});
    }
    SUBCASE("self-cause becomes a self-loop") {
        const WindowGraph wg = make_window_graph({"X"}, {{"X", 1, "X"}}, 1);
        const SummaryGraph g = collapse_to_summary(wg);
        CHECK(g.has_edge("X", "X"));
    }
    SUBCASE("diamond window graph collapses to the diamond summary") {
        const WindowGraph wg = make_window_graph({"W", "X", "Y", "Z"},
                                                 {{"Z", 1, "Y"},
                                                  {"Y", 1, "X"},
                                                  {"X", 1, "W"},
                                                  {"W", 1, "X"},
                                                  {"W", 1, "W"},
                                                  {"X", 1, "X"},
                                                  {"Y", 1, "Y"},
                                                  {"Z", 1, "Z"}},
                                                 1);
        CHECK(collapse_to_summary(wg) == diamond());
    }
}

TEST_CASE("window graph validation") {
    CHECK_THROWS_WITH_AS(make_window_graph({"X", "Y"}, {{"X", 0, "Y"}}, 1), doctest::Contains("lag"), Error);
    CHECK_THROWS_WITH_AS(make_window_graph({"X"}, {{"X", 1, "Q"}}, 1), doctest::Contains("undeclared"), Error);
    CHECK_THROWS_WITH_AS(make_window_graph({"X", "Y"}, {{"X", 1, "Y"}, {"X", 1, "Y"}}, 1),
                         doctest::Contains("duplicate edge"), Error);
}

TEST_CASE("scc_decompose orders components topologically") {
    SUBCASE("diamond has three components in causal order") {
        const std::vector<Scc> sccs = scc_decompose(diamond());
        REQUIRE(sccs.size() == 3);
        CHECK(sccs[0].members == std::vector<std::string>{"Z"});
        CHECK(sccs[1].members == std::vector<std::string>{"Y"});
        CHECK(sccs[2].members == std::vector<std::string>{"W", "X"});
        CHECK(sccs[0].index == 0);
        CHECK(sccs[2].index == 2);
    }
    SUBCASE("edgeless graph gives singletons") {
        const SummaryGraph g({"a", "b", "c"}, {});
        const std::vector<Scc> sccs = scc_decompose(g);
        CHECK(sccs.size() == 3);
        for (const auto& scc : sccs) CHECK(scc.members.size() == 1);
    }
    SUBCASE("random digraphs match the mutual-reachability oracle") {
        Rng rng(101);
        for (int trial = 0; trial < 200; ++trial) {
            const SummaryGraph g = random_digraph(3 + rng.below(6), 0.15 + 0.5 * rng.uniform01(), rng);
            CHECK(same_partition(scc_decompose(g), scc_oracle(g)));
        }
    }
    SUBCASE("condensation order: every SCC precedes its descendants") {
        Rng rng(103);
        for (int trial = 0; trial < 100; ++trial) {
            const SummaryGraph g = random_digraph(7, 0.25, rng);
            const std::vector<Scc> sccs = scc_decompose(g);
            std::map<std::string, std::size_t> position;
            for (const auto& scc : sccs) {
                for (const auto& m : scc.members) position[m] = scc.index;
            }
            for (const auto& [s, t] : g.edges()) {
                CHECK(position[s] <= position[t]);  // edges never point backwards in the order
            }
        }
    }
}

TEST_CASE("anomalous_subgraph induces on the anomaly set") {
    const SummaryGraph g = diamond();
    SUBCASE("all vertices gives the full graph") {
        CHECK(anomalous_subgraph(g, {"W", "X", "Y", "Z"}) == g);
    }
    SUBCASE("empty set gives the empty graph") {
        const SummaryGraph sub = anomalous_subgraph(g, {});
        CHECK(sub.vertices().empty());
        CHECK(sub.edges().empty());
    }
    SUBCASE("unknown vertex is an input error") {
        CHECK_THROWS_WITH_AS(anomalous_subgraph(g, {"Q"}), doctest::Contains("not in the graph"), Error);
    }
    SUBCASE("edge set is exactly the restricted edges") {
        Rng rng(107);
        for (int trial = 0; trial < 50; ++trial) {
            const SummaryGraph random = random_digraph(6, 0.3, rng);
            std::set<std::string> keep;
            for (const auto& v : random.vertices()) {
                if (rng.bernoulli(0.5)) keep.insert(v);
            }
            const SummaryGraph sub = anomalous_subgraph(random, keep);
            for (const auto& [s, t] : random.edges()) {
                const bool expected = keep.count(s) && keep.count(t);
                CHECK(sub.has_vertex(s) == static_cast<bool>(keep.count(s)));
                if (expected) CHECK(sub.has_edge(s, t));
            }
            for (const auto& [s, t] : sub.edges()) CHECK((keep.count(s) && keep.count(t)));
        }
    }
}

TEST_CASE("ancestors and descendants use strict reachability") {
    SUBCASE("chain") {
        const SummaryGraph chain({"X", "Y", "Z"}, {{"Z", "Y"}, {"Y", "X"}});
        CHECK(chain.ancestors("X") == std::set<std::string>{"Y", "Z"});
        CHECK(chain.descendants("Z") == std::set<std::string>{"X", "Y"});
        CHECK(chain.ancestors("Z").empty());
    }
    SUBCASE("self-loop puts a vertex among its own ancestors") {
        const SummaryGraph g({"X"}, {{"X", "X"}});
        CHECK(g.ancestors("X") == std::set<std::string>{"X"});
    }
    SUBCASE("vertex without a cycle is not its own ancestor") {
        const SummaryGraph g({"X", "Y"}, {{"X", "Y"}});
        CHECK(g.ancestors("Y") == std::set<std::string>{"X"});
        CHECK(g.descendants("Y").empty());
    }
    SUBCASE("random digraphs match the transitive-closure oracle") {
        Rng rng(109);
        for (int trial = 0; trial < 100; ++trial) {
            const SummaryGraph g = random_digraph(3 + rng.below(6), 0.3, rng);
            const auto& vs = g.vertices();
            const std::size_t n = vs.size();
            std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
            for (const auto& [s, t] : g.edges()) reach[g.index_of(s)][g.index_of(t)] = true;
            for (std::size_t k = 0; k < n; ++k) {
                for (std::size_t i = 0; i < n; ++i) {
                    for (std::size_t j = 0; j < n; ++j) {
                        if (reach[i][k] && reach[k][j]) reach[i][j] = true;
                    }
                }
            }
            for (std::size_t i = 0; i < n; ++i) {
                std::set<std::string> expected_desc;
                std::set<std::string> expected_anc;
                for (std::size_t j = 0; j < n; ++j) {
                    if (reach[i][j]) expected_desc.insert(vs[j]);
                    if (reach[j][i]) expected_anc.insert(vs[j]);
                }
                CHECK(g.descendants(vs[i]) == expected_desc);
                CHECK(g.ancestors(vs[i]) == expected_anc);
            }
        }
    }
}

TEST_CASE("check_assumption5 detects fully anomalous corridors") {
    const SummaryGraph chain({"X", "Y", "Z"}, {{"Z", "Y"}, {"Y", "X"}});
    SUBCASE("chain with both ends as roots and the middle anomalous") {
        const auto result = check_assumption5(chain, {"Z", "X"}, {"X", "Y", "Z"});
        CHECK_FALSE(result.satisfied);
        REQUIRE(result.violations.size() == 1);
        CHECK(result.violations[0] == std::pair<std::string, std::string>{"Z", "X"});
    }
    SUBCASE("a clean corridor keeps the assumption") {
        const auto result = check_assumption5(chain, {"Z", "X"}, {"X", "Z"});
        CHECK(result.satisfied);
    }
    SUBCASE("single root cause always satisfies the assumption") {
        CHECK(check_assumption5(chain, {"Y"}, {"X", "Y"}).satisfied);
        CHECK(check_assumption5(diamond(), {"Z"}, {"W", "X", "Y", "Z"}).satisfied);
    }
    SUBCASE("roots on disjoint paths satisfy the assumption") {
        const SummaryGraph fork({"A", "B", "C", "R"}, {{"R", "A"}, {"R", "B"}, {"A", "C"}, {"B", "C"}});
        const auto result = check_assumption5(fork, {"A", "B"}, {"A", "B", "C"});
        CHECK(result.satisfied);
    }
    SUBCASE("roots outside the anomaly set are an input error") {
        CHECK_THROWS_WITH_AS(check_assumption5(chain, {"Z"}, {"X"}), doctest::Contains("root cause"), Error);
    }
}

TEST_CASE("max_on_directed_path counts chained members") {
    const SummaryGraph chain({"A", "B", "C", "D"}, {{"A", "B"}, {"B", "C"}, {"C", "D"}});
    CHECK(max_on_directed_path(chain, {"A", "C"}) == 2);
    CHECK(max_on_directed_path(chain, {"A", "B", "D"}) == 3);
    CHECK(max_on_directed_path(chain, {}) == 0);
    const SummaryGraph fork({"A", "B", "R"}, {{"R", "A"}, {"R", "B"}});
    CHECK(max_on_directed_path(fork, {"A", "B"}) == 1);
}

TEST_CASE("graph serialization round-trips exactly") {
    SUBCASE("summary JSON") {
        const GraphDoc doc = GraphDoc::from_summary(diamond());
        const GraphDoc loaded = graph_from_json(graph_to_json(doc));
        CHECK_FALSE(loaded.window.has_value());
        CHECK(loaded.summary == doc.summary);
        CHECK(graph_to_json(loaded) == graph_to_json(doc));
    }
    SUBCASE("window JSON") {
        const GraphDoc doc = GraphDoc::from_window(
            make_window_graph({"A", "B", "C"}, {{"A", 1, "B"}, {"A", 2, "B"}, {"C", 3, "C"}}, 3));
        const GraphDoc loaded = graph_from_json(graph_to_json(doc));
        REQUIRE(loaded.window.has_value());
        CHECK(loaded.window->edges == doc.window->edges);
        CHECK(loaded.window->gamma_max == 3);
        CHECK(graph_to_json(loaded) == graph_to_json(doc));
    }
    SUBCASE("edge list with isolated vertices") {
        const GraphDoc doc = GraphDoc::from_summary(SummaryGraph({"A", "B", "Lonely"}, {{"A", "B"}}));
        const GraphDoc loaded = graph_from_edgelist(graph_to_edgelist(doc));
        CHECK(loaded.summary == doc.summary);
        CHECK(graph_to_edgelist(loaded) == graph_to_edgelist(doc));
    }
    SUBCASE("window edge list keeps lags") {
        const GraphDoc doc = GraphDoc::from_window(
            make_window_graph({"A", "B"}, {{"A", 1, "B"}, {"A", 2, "B"}}, 4));
        const GraphDoc loaded = graph_from_edgelist(graph_to_edgelist(doc));
        REQUIRE(loaded.window.has_value());
        CHECK(loaded.window->edges == doc.window->edges);
        CHECK(loaded.window->gamma_max == 4);
        CHECK(graph_to_edgelist(loaded) == graph_to_edgelist(doc));
    }
    SUBCASE("random graphs round-trip through both forms") {
        Rng rng(113);
        for (int trial = 0; trial < 30; ++trial) {
            const SummaryGraph g = random_digraph(2 + rng.below(7), 0.3, rng);
            const GraphDoc doc = GraphDoc::from_summary(g);
            CHECK(graph_from_json(graph_to_json(doc)).summary == g);
            CHECK(graph_from_edgelist(graph_to_edgelist(doc)).summary == g);
        }
    }
}

TEST_CASE("collapse of an expansion is the identity on summary graphs") {
    Rng rng(127);
    for (int trial = 0; trial < 30; ++trial) {
        const SummaryGraph g = random_digraph(5, 0.35, rng);
        CHECK(collapse_to_summary(expand_at_lag(g, 1)) == g);
    }
}
