#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace trca {

/// Lag-annotated edge of the window graph; lag >= 1 always (no
/// instantaneous causal relations), so the lag-unrolled graph is acyclic.
struct LaggedEdge {
    std::string source;
    int lag = 1;
    std::string target;

    friend bool operator<(const LaggedEdge& a, const LaggedEdge& b) {
        return std::tie(a.source, a.target, a.lag) < std::tie(b.source, b.target, b.lag);
    }
    friend bool operator==(const LaggedEdge& a, const LaggedEdge& b) {
        return a.source == b.source && a.lag == b.lag && a.target == b.target;
    }
};

struct WindowGraph {
    std::vector<std::string> vertices;  // sorted
    std::vector<LaggedEdge> edges;      // sorted, duplicate-free
    int gamma_max = 1;
};

/// Validates and canonicalizes (sorts vertices and edges, checks lags in
/// [1, gamma_max] and declared endpoints).
WindowGraph make_window_graph(std::vector<std::string> vertices, std::vector<LaggedEdge> edges, int gamma_max);

/// Directed graph over series names; cycles and self-loops permitted.
class SummaryGraph {
public:
    SummaryGraph() = default;
    SummaryGraph(std::vector<std::string> vertices, std::vector<std::pair<std::string, std::string>> edges);

    const std::vector<std::string>& vertices() const { return vertices_; }
    const std::vector<std::pair<std::string, std::string>>& edges() const { return edges_; }

    bool has_vertex(const std::string& name) const;
    bool has_edge(const std::string& source, const std::string& target) const;
    std::size_t index_of(const std::string& name) const;  // throws data error when absent

    std::set<std::string> parents(const std::string& v) const;
    std::set<std::string> children(const std::string& v) const;

    /// Strict reachability; v itself is included only when v lies on a
    /// cycle through itself (self-loop or longer).
    std::set<std::string> ancestors(const std::string& v) const;
    std::set<std::string> descendants(const std::string& v) const;

    friend bool operator==(const SummaryGraph& a, const SummaryGraph& b) {
        return a.vertices_ == b.vertices_ && a.edges_ == b.edges_;
    }

private:
    std::vector<std::string> vertices_;
    std::vector<std::pair<std::string, std::string>> edges_;
    std::vector<std::vector<std::size_t>> out_;
    std::vector<std::vector<std::size_t>> in_;

    std::set<std::string> reach(const std::string& v, bool forward) const;
};

struct Scc {
    std::vector<std::string> members;  // sorted
    std::size_t index = 0;             // topological position in the condensation
};

/// Existential collapse: edge (X, Y) iff some lag carries X -> Y.
SummaryGraph collapse_to_summary(const WindowGraph& wg);

/// Places every summary edge at a single fixed lag.
WindowGraph expand_at_lag(const SummaryGraph& g, int lag);

/// Tarjan decomposition, emitted so that every SCC precedes its
/// condensation descendants. Deterministic: vertices are visited in
/// sorted order and members are sorted.
std::vector<Scc> scc_decompose(const SummaryGraph& g);

/// Vertex-induced subgraph on the anomalous set.
SummaryGraph anomalous_subgraph(const SummaryGraph& g, const std::set<std::string>& anomalies);

struct Assumption5Result {
    bool satisfied = true;
    /// (upstream root, downstream root) pairs with a fully anomalous
    /// corridor between them.
    std::vector<std::pair<std::string, std::string>> violations;
};

/// A pair of distinct root causes (Z, X) with Z an ancestor of X violates
/// the assumption iff every vertex of Desc(Z) n An(X) \ {X, Z} is
/// anomalous.
Assumption5Result check_assumption5(const SummaryGraph& g, const std::set<std::string>& roots,
                                    const std::set<std::string>& anomalies);

/// Longest chain of distinct members of `chosen` that fits on one
/// directed path of g (brute force; intended for small sets).
std::size_t max_on_directed_path(const SummaryGraph& g, const std::set<std::string>& chosen);

// --- serialization ------------------------------------------------------

/// A graph document is either a summary graph or a window graph (the
/// latter always carries its collapse). Round-trips exactly through both
/// the JSON and the edge-list form.
struct GraphDoc {
    std::optional<WindowGraph> window;
    SummaryGraph summary;

    static GraphDoc from_summary(SummaryGraph g);
    static GraphDoc from_window(WindowGraph wg);
};

std::string graph_to_json(const GraphDoc& doc);
GraphDoc graph_from_json(const std::string& text);

/// Plain-text edge list: one `source -> target [lag=g]` line per edge
/// (the lag suffix only for window graphs), bare-name lines for isolated
/// vertices.
std::string graph_to_edgelist(const GraphDoc& doc);
GraphDoc graph_from_edgelist(const std::string& text);

void save_graph_json(const GraphDoc& doc, const std::string& path);
GraphDoc load_graph_json(const std::string& path);
void save_graph_edgelist(const GraphDoc& doc, const std::string& path);

}  // namespace trca
