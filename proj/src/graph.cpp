#include "graph.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <sstream>

#include <json.hpp>

#include "errors.hpp"

namespace trca {

namespace {

void require_unique_sorted(std::vector<std::string>& names) {
    std::sort(names.begin(), names.end());
    auto dup = std::adjacent_find(names.begin(), names.end());
    if (dup != names.end()) throw_data("duplicate vertex name \"" + *dup + "\"");
    if (names.empty()) throw_data("graph must have at least one vertex");
}

}  // namespace

WindowGraph make_window_graph(std::vector<std::string> vertices, std::vector<LaggedEdge> edges, int gamma_max) {
    if (gamma_max < 1) throw_data("gamma_max must be >= 1");
    require_unique_sorted(vertices);
    for (const auto& e : edges) {
        if (e.lag < 1 || e.lag > gamma_max) {
            throw_data("edge " + e.source + " -> " + e.target + " has lag " + std::to_string(e.lag) +
                       " outside [1, " + std::to_string(gamma_max) + "]");
        }
        if (!std::binary_search(vertices.begin(), vertices.end(), e.source) ||
            !std::binary_search(vertices.begin(), vertices.end(), e.target)) {
            throw_data("edge " + e.source + " -> " + e.target + " references an undeclared vertex");
        }
    }
    std::sort(edges.begin(), edges.end());
    auto dup = std::adjacent_find(edges.begin(), edges.end());
    if (dup != edges.end()) {
        throw_data("duplicate edge " + dup->source + " -> " + dup->target + " [lag=" + std::to_string(dup->lag) + "]");
    }
    WindowGraph wg;
    wg.vertices = std::move(vertices);
    wg.edges = std::move(edges);
    wg.gamma_max = gamma_max;
    return wg;
}

SummaryGraph::SummaryGraph(std::vector<std::string> vertices, std::vector<std::pair<std::string, std::string>> edges) {
    require_unique_sorted(vertices);
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    vertices_ = std::move(vertices);
    edges_ = std::move(edges);
    out_.assign(vertices_.size(), {});
    in_.assign(vertices_.size(), {});
    for (const auto& [s, t] : edges_) {
        const std::size_t si = index_of(s);
        const std::size_t ti = index_of(t);
        out_[si].push_back(ti);
        in_[ti].push_back(si);
    }
}

bool SummaryGraph::has_vertex(const std::string& name) const {
    return std::binary_search(vertices_.begin(), vertices_.end(), name);
}

bool SummaryGraph::has_edge(const std::string& source, const std::string& target) const {
    return std::binary_search(edges_.begin(), edges_.end(), std::make_pair(source, target));
}

std::size_t SummaryGraph::index_of(const std::string& name) const {
    auto it = std::lower_bound(vertices_.begin(), vertices_.end(), name);
    if (it == vertices_.end() || *it != name) throw_data("unknown vertex \"" + name + "\"");
    return static_cast<std::size_t>(it - vertices_.begin());
}

std::set<std::string> SummaryGraph::parents(const std::string& v) const {
    std::set<std::string> result;
    for (std::size_t p : in_[index_of(v)]) result.insert(vertices_[p]);
    return result;
}

std::set<std::string> SummaryGraph::children(const std::string& v) const {
    std::set<std::string> result;
    for (std::size_t c : out_[index_of(v)]) result.insert(vertices_[c]);
    return result;
}

std::set<std::string> SummaryGraph::reach(const std::string& v, bool forward) const {
    const auto& adj = forward ? out_ : in_;
    const std::size_t start = index_of(v);
    std::vector<bool> seen(vertices_.size(), false);
    std::vector<std::size_t> stack;
    // Seed with the neighbors, not the vertex: v joins the result only if
    // some cycle leads back to it.
    for (std::size_t n : adj[start]) {
        if (!seen[n]) {
            seen[n] = true;
            stack.push_back(n);
        }
    }
    std::set<std::string> result;
    while (!stack.empty()) {
        const std::size_t u = stack.back();
        stack.pop_back();
        result.insert(vertices_[u]);
        for (std::size_t n : adj[u]) {
            if (!seen[n]) {
                seen[n] = true;
                stack.push_back(n);
            }
        }
    }
    return result;
}

std::set<std::string> SummaryGraph::ancestors(const std::string& v) const { return reach(v, false); }
std::set<std::string> SummaryGraph::descendants(const std::string& v) const { return reach(v, true); }

SummaryGraph collapse_to_summary(const WindowGraph& wg) {
    std::vector<std::pair<std::string, std::string>> edges;
    edges.reserve(wg.edges.size());
    for (const auto& e : wg.edges) edges.emplace_back(e.source, e.target);
    return SummaryGraph(wg.vertices, std::move(edges));
}

WindowGraph expand_at_lag(const SummaryGraph& g, int lag) {
    std::vector<LaggedEdge> edges;
    edges.reserve(g.edges().size());
    for (const auto& [s, t] : g.edges()) edges.push_back({s, lag, t});
    return make_window_graph(g.vertices(), std::move(edges), lag);
}

std::vector<Scc> scc_decompose(const SummaryGraph& g) {
    const std::size_t n = g.vertices().size();
    std::vector<std::vector<std::size_t>> out(n);
    for (const auto& [s, t] : g.edges()) out[g.index_of(s)].push_back(g.index_of(t));

    // Iterative Tarjan; components pop in reverse topological order.
    std::vector<int> order(n, -1);
    std::vector<int> low(n, 0);
    std::vector<bool> on_stack(n, false);
    std::vector<std::size_t> stack;
    std::vector<std::vector<std::size_t>> components;
    int counter = 0;

    struct Frame {
        std::size_t v;
        std::size_t edge = 0;
    };
    for (std::size_t root = 0; root < n; ++root) {
        if (order[root] != -1) continue;
        std::vector<Frame> frames{{root}};
        order[root] = low[root] = counter++;
        stack.push_back(root);
        on_stack[root] = true;
        while (!frames.empty()) {
            Frame& f = frames.back();
            if (f.edge < out[f.v].size()) {
                const std::size_t w = out[f.v][f.edge++];
                if (order[w] == -1) {
                    order[w] = low[w] = counter++;
                    stack.push_back(w);
                    on_stack[w] = true;
                    frames.push_back({w});
                } else if (on_stack[w]) {
                    low[f.v] = std::min(low[f.v], order[w]);
                }
            } else {
                if (low[f.v] == order[f.v]) {
                    std::vector<std::size_t> comp;
                    for (;;) {
                        const std::size_t w = stack.back();
                        stack.pop_back();
                        on_stack[w] = false;
                        comp.push_back(w);
                        if (w == f.v) break;
                    }
                    components.push_back(std::move(comp));
                }
                const std::size_t v = f.v;
                frames.pop_back();
                if (!frames.empty()) low[frames.back().v] = std::min(low[frames.back().v], low[v]);
            }
        }
    }

    std::reverse(components.begin(), components.end());
    std::vector<Scc> result;
    result.reserve(components.size());
    for (std::size_t i = 0; i < components.size(); ++i) {
        Scc scc;
        scc.index = i;
        for (std::size_t v : components[i]) scc.members.push_back(g.vertices()[v]);
        std::sort(scc.members.begin(), scc.members.end());
        result.push_back(std::move(scc));
    }
    return result;
}

SummaryGraph anomalous_subgraph(const SummaryGraph& g, const std::set<std::string>& anomalies) {
    for (const auto& a : anomalies) {
        if (!g.has_vertex(a)) throw_data("anomalous vertex \"" + a + "\" is not in the graph");
    }
    std::vector<std::string> vertices(anomalies.begin(), anomalies.end());
    std::vector<std::pair<std::string, std::string>> edges;
    for (const auto& [s, t] : g.edges()) {
        if (anomalies.count(s) && anomalies.count(t)) edges.emplace_back(s, t);
    }
    if (vertices.empty()) return SummaryGraph();  // empty graph: no vertices, no edges
    return SummaryGraph(std::move(vertices), std::move(edges));
}

Assumption5Result check_assumption5(const SummaryGraph& g, const std::set<std::string>& roots,
                                    const std::set<std::string>& anomalies) {
    for (const auto& a : anomalies) {
        if (!g.has_vertex(a)) throw_data("anomalous vertex \"" + a + "\" is not in the graph");
    }
    for (const auto& r : roots) {
        if (!anomalies.count(r)) {
            throw_data("root cause \"" + r + "\" is not in the anomalous set (all root causes are anomalies)");
        }
    }
    Assumption5Result result;
    for (const auto& x : roots) {
        const std::set<std::string> an_x = g.ancestors(x);
        for (const auto& z : roots) {
            if (z == x || !an_x.count(z)) continue;
            const std::set<std::string> desc_z = g.descendants(z);
            bool corridor_anomalous = true;
            for (const auto& y : desc_z) {
                if (y == x || y == z) continue;
                if (!an_x.count(y)) continue;
                if (!anomalies.count(y)) {
                    corridor_anomalous = false;
                    break;
                }
            }
            if (corridor_anomalous) {
                result.satisfied = false;
                result.violations.emplace_back(z, x);
            }
        }
    }
    std::sort(result.violations.begin(), result.violations.end());
    return result;
}

std::size_t max_on_directed_path(const SummaryGraph& g, const std::set<std::string>& chosen) {
    std::vector<std::string> items(chosen.begin(), chosen.end());
    const std::size_t k = items.size();
    if (k == 0) return 0;
    if (k > 10) throw_data("max_on_directed_path supports at most 10 chosen vertices");

    std::vector<std::vector<bool>> reaches(k, std::vector<bool>(k, false));
    for (std::size_t i = 0; i < k; ++i) {
        const auto desc = g.descendants(items[i]);
        for (std::size_t j = 0; j < k; ++j) reaches[i][j] = i != j && desc.count(items[j]) > 0;
    }
    // Longest chain v1 -> v2 -> ... with each step a reachability hop.
    std::size_t best = 1;
    std::function<void(std::size_t, std::uint32_t, std::size_t)> extend = [&](std::size_t last, std::uint32_t used,
                                                                              std::size_t len) {
        best = std::max(best, len);
        for (std::size_t j = 0; j < k; ++j) {
            if (!(used & (1u << j)) && reaches[last][j]) extend(j, used | (1u << j), len + 1);
        }
    };
    for (std::size_t i = 0; i < k; ++i) extend(i, 1u << i, 1);
    return best;
}

// --- serialization ------------------------------------------------------

GraphDoc GraphDoc::from_summary(SummaryGraph g) {
    GraphDoc doc;
    doc.summary = std::move(g);
    return doc;
}

GraphDoc GraphDoc::from_window(WindowGraph wg) {
    GraphDoc doc;
    doc.summary = collapse_to_summary(wg);
    doc.window = std::move(wg);
    return doc;
}

std::string graph_to_json(const GraphDoc& doc) {
    nlohmann::json j;
    if (doc.window) {
        j["kind"] = "window";
        j["gamma_max"] = doc.window->gamma_max;
        j["vertices"] = doc.window->vertices;
        nlohmann::json edges = nlohmann::json::array();
        for (const auto& e : doc.window->edges) {
            edges.push_back({{"source", e.source}, {"lag", e.lag}, {"target", e.target}});
        }
        j["edges"] = edges;
    } else {
        j["kind"] = "summary";
        j["vertices"] = doc.summary.vertices();
        nlohmann::json edges = nlohmann::json::array();
        for (const auto& [s, t] : doc.summary.edges()) edges.push_back({s, t});
        j["edges"] = edges;
    }
    return j.dump(2) + "\n";
}

GraphDoc graph_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw_data(std::string("invalid graph JSON: ") + e.what());
    }
    try {
        const std::string kind = j.value("kind", j.contains("gamma_max") ? "window" : "summary");
        std::vector<std::string> vertices = j.at("vertices").get<std::vector<std::string>>();
        if (kind == "window") {
            std::vector<LaggedEdge> edges;
            for (const auto& e : j.at("edges")) {
                edges.push_back({e.at("source").get<std::string>(), e.at("lag").get<int>(),
                                 e.at("target").get<std::string>()});
            }
            return GraphDoc::from_window(make_window_graph(std::move(vertices), std::move(edges), j.at("gamma_max").get<int>()));
        }
        std::vector<std::pair<std::string, std::string>> edges;
        for (const auto& e : j.at("edges")) {
            edges.emplace_back(e.at(0).get<std::string>(), e.at(1).get<std::string>());
        }
        return GraphDoc::from_summary(SummaryGraph(std::move(vertices), std::move(edges)));
    } catch (const nlohmann::json::exception& e) {
        throw_data(std::string("invalid graph JSON: ") + e.what());
    }
}

std::string graph_to_edgelist(const GraphDoc& doc) {
    std::ostringstream out;
    std::set<std::string> touched;
    if (doc.window) {
        out << "# window gamma_max=" << doc.window->gamma_max << "\n";
        for (const auto& e : doc.window->edges) {
            touched.insert(e.source);
            touched.insert(e.target);
        }
        for (const auto& v : doc.window->vertices) {
            if (!touched.count(v)) out << v << "\n";
        }
        for (const auto& e : doc.window->edges) {
            out << e.source << " -> " << e.target << " [lag=" << e.lag << "]\n";
        }
    } else {
        for (const auto& [s, t] : doc.summary.edges()) {
            touched.insert(s);
            touched.insert(t);
        }
        for (const auto& v : doc.summary.vertices()) {
            if (!touched.count(v)) out << v << "\n";
        }
        for (const auto& [s, t] : doc.summary.edges()) out << s << " -> " << t << "\n";
    }
    return out.str();
}

GraphDoc graph_from_edgelist(const std::string& text) {
    std::set<std::string> vertices;
    std::vector<LaggedEdge> lagged;
    std::vector<std::pair<std::string, std::string>> plain;
    bool any_lag = false;
    int max_lag = 1;

    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string s = line;
        if (s.rfind("# window gamma_max=", 0) == 0) {
            any_lag = true;
            max_lag = std::max(max_lag, std::stoi(s.substr(19)));
            continue;
        }
        const auto hash = s.find('#');
        if (hash != std::string::npos) s = s.substr(0, hash);
        std::istringstream ls(s);
        std::string source, arrow, target, attr;
        if (!(ls >> source)) continue;  // blank
        if (!(ls >> arrow)) {
            vertices.insert(source);
            continue;
        }
        if (arrow != "->" || !(ls >> target)) {
            throw_data("edge list line " + std::to_string(line_no) + ": expected `source -> target [lag=g]`");
        }
        vertices.insert(source);
        vertices.insert(target);
        if (ls >> attr) {
            if (attr.rfind("[lag=", 0) != 0 || attr.back() != ']') {
                throw_data("edge list line " + std::to_string(line_no) + ": bad attribute \"" + attr + "\"");
            }
            const int lag = std::stoi(attr.substr(5, attr.size() - 6));
            lagged.push_back({source, lag, target});
            any_lag = true;
            max_lag = std::max(max_lag, lag);
        } else {
            plain.emplace_back(source, target);
        }
    }
    std::vector<std::string> vs(vertices.begin(), vertices.end());
    if (any_lag) {
        if (!plain.empty()) throw_data("edge list mixes lagged and unlagged edges");
        return GraphDoc::from_window(make_window_graph(std::move(vs), std::move(lagged), max_lag));
    }
    return GraphDoc::from_summary(SummaryGraph(std::move(vs), std::move(plain)));
}

void save_graph_json(const GraphDoc& doc, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw_io("cannot open \"" + path + "\" for writing");
    out << graph_to_json(doc);
    if (!out) throw_io("write to \"" + path + "\" failed");
}

GraphDoc load_graph_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw_io("cannot open \"" + path + "\" for reading");
    std::stringstream buf;
    buf << in.rdbuf();
    return graph_from_json(buf.str());
}

void save_graph_edgelist(const GraphDoc& doc, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw_io("cannot open \"" + path + "\" for writing");
    out << graph_to_edgelist(doc);
    if (!out) throw_io("write to \"" + path + "\" failed");
}

}  // namespace trca
