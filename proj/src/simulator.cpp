#include "simulator.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "errors.hpp"
#include "rng.hpp"

namespace trca {

namespace {

std::vector<std::string> metric_names(int n) {
    std::vector<std::string> names;
    names.reserve(static_cast<std::size_t>(n));
    const int width = n > 10 ? 2 : 1;
    for (int i = 0; i < n; ++i) {
        std::string idx = std::to_string(i);
        while (static_cast<int>(idx.size()) < width) idx = "0" + idx;
        names.push_back("V" + idx);
    }
    return names;
}

// Ordered (upstream, downstream) pairs that admit the requested scenario:
// comparable pairs for a violation, mutually unreachable pairs otherwise.
std::pair<std::string, std::string> choose_intervention_pair(const SummaryGraph& summary, Scenario scenario, Rng& rng) {
    std::vector<std::pair<std::string, std::string>> candidates;
    const auto& vs = summary.vertices();
    std::vector<std::set<std::string>> desc(vs.size());
    for (std::size_t i = 0; i < vs.size(); ++i) desc[i] = summary.descendants(vs[i]);
    for (std::size_t i = 0; i < vs.size(); ++i) {
        for (std::size_t j = 0; j < vs.size(); ++j) {
            if (i == j) continue;
            const bool i_reaches_j = desc[i].count(vs[j]) > 0;
            const bool j_reaches_i = desc[j].count(vs[i]) > 0;
            if (scenario == Scenario::online_assumption5_violated) {
                if (i_reaches_j) candidates.emplace_back(vs[i], vs[j]);
            } else {
                if (i < j && !i_reaches_j && !j_reaches_i) candidates.emplace_back(vs[i], vs[j]);
            }
        }
    }
    if (candidates.empty()) {
        throw_data("graph admits no intervention pair for scenario " + scenario_name(scenario) +
                   "; retry with a different seed");
    }
    return candidates[static_cast<std::size_t>(rng.below(candidates.size()))];
}

struct ParentRef {
    std::size_t index;
    int lag;
};

std::vector<std::vector<ParentRef>> parent_lists(const WindowGraph& graph) {
    std::vector<std::vector<ParentRef>> parents(graph.vertices.size());
    auto index_of = [&](const std::string& name) {
        return static_cast<std::size_t>(
            std::lower_bound(graph.vertices.begin(), graph.vertices.end(), name) - graph.vertices.begin());
    };
    for (const auto& e : graph.edges) parents[index_of(e.target)].push_back({index_of(e.source), e.lag});
    return parents;
}

TdscmWindow run_tdscm_window(const TdscmParams& params, std::size_t length, bool offline_mode,
                             const std::vector<RootCauseEvent>& placed, Rng& rng) {
    const auto& names = params.graph.vertices;
    const std::size_t d = names.size();
    const auto parents = parent_lists(params.graph);

    std::vector<std::vector<std::uint8_t>> bits(d, std::vector<std::uint8_t>(length, 0));
    GroundTruthTrace trace;
    trace.u_draws.assign(d, std::vector<std::uint8_t>(length, 1));
    trace.i_draws.assign(d, std::vector<std::uint8_t>(length, 0));

    // The stop hazard models the ending of self-sustained anomaly
    // episodes; vertices without a self-cause cannot sustain themselves,
    // and quenching them would fabricate a self-dependence.
    std::vector<bool> self_sustained(d, false);
    for (std::size_t v = 0; v < d; ++v) {
        for (const auto& p : parents[v]) {
            if (p.index == v) self_sustained[v] = true;
        }
    }

    std::vector<int> run(d, 0);  // consecutive anomalous steps ending at t-1
    for (std::size_t t = 0; t < length; ++t) {
        for (std::size_t v = 0; v < d; ++v) {
            int anomalous_parents = 0;
            for (const auto& p : parents[v]) {
                if (t >= static_cast<std::size_t>(p.lag) && bits[p.index][t - static_cast<std::size_t>(p.lag)]) {
                    ++anomalous_parents;
                }
            }
            std::uint8_t u = 1;
            std::uint8_t i = 0;
            if (offline_mode && run[v] >= params.max_consecutive_anomaly) {
                u = 0;  // hard cap backstop; no draws consumed
            } else {
                if (anomalous_parents > 0) {
                    double p_propagate = params.epsilon[v] < 1.0
                                             ? 1.0 - std::pow(1.0 - params.epsilon[v], anomalous_parents)
                                             : 1.0;
                    if (run[v] >= 1 && self_sustained[v]) p_propagate *= 1.0 - params.stop_hazard;
                    if (p_propagate < 1.0) u = rng.bernoulli(p_propagate) ? 1 : 0;
                }
                if (offline_mode) {
                    i = rng.bernoulli(params.beta) ? 1 : 0;
                } else {
                    for (const auto& ev : placed) {
                        if (ev.time == t && ev.vertex == names[v]) {
                            i = 1;
                            break;
                        }
                    }
                }
            }
            const std::uint8_t bit = static_cast<std::uint8_t>(((anomalous_parents > 0 ? 1 : 0) & u) | i);
            trace.u_draws[v][t] = u;
            trace.i_draws[v][t] = i;
            bits[v][t] = bit;
            run[v] = bit ? run[v] + 1 : 0;
        }
    }

    // Real values consistent with the bits: below the threshold for 0,
    // at-or-above (and strictly below 1) for 1.
    std::vector<std::vector<double>> values(d, std::vector<double>(length, 0.0));
    for (std::size_t v = 0; v < d; ++v) {
        const double r = params.thresholds.entries[v].value;
        for (std::size_t t = 0; t < length; ++t) {
            values[v][t] = bits[v][t] ? r + (1.0 - r) * rng.uniform01() : r * rng.uniform01();
        }
    }

    TdscmWindow window;
    window.panel = make_panel(names, std::move(values));
    window.bits.names = names;
    window.bits.bits = std::move(bits);
    window.bits.thresholds = params.thresholds;
    window.trace = std::move(trace);
    return window;
}

std::string bits_to_string(const std::vector<std::uint8_t>& bits) {
    std::string s(bits.size(), '0');
    for (std::size_t i = 0; i < bits.size(); ++i) {
        if (bits[i]) s[i] = '1';
    }
    return s;
}

std::vector<std::uint8_t> bits_from_string(const std::string& s) {
    std::vector<std::uint8_t> bits(s.size(), 0);
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '1') {
            bits[i] = 1;
        } else if (s[i] != '0') {
            throw_data("invalid bit character in trace");
        }
    }
    return bits;
}

nlohmann::json trace_window_to_json(const GroundTruthTrace& trace) {
    nlohmann::json j;
    j["length"] = trace.u_draws.empty() ? 0 : trace.u_draws.front().size();
    nlohmann::json u = nlohmann::json::array();
    nlohmann::json i = nlohmann::json::array();
    for (const auto& row : trace.u_draws) u.push_back(bits_to_string(row));
    for (const auto& row : trace.i_draws) i.push_back(bits_to_string(row));
    j["u"] = u;
    j["i"] = i;
    nlohmann::json roots = nlohmann::json::array();
    for (const auto& ev : trace.root_causes) roots.push_back({{"vertex", ev.vertex}, {"time", ev.time}});
    j["root_causes"] = roots;
    return j;
}

GroundTruthTrace trace_window_from_json(const nlohmann::json& j) {
    GroundTruthTrace trace;
    for (const auto& row : j.at("u")) trace.u_draws.push_back(bits_from_string(row.get<std::string>()));
    for (const auto& row : j.at("i")) trace.i_draws.push_back(bits_from_string(row.get<std::string>()));
    for (const auto& ev : j.at("root_causes")) {
        trace.root_causes.push_back({ev.at("vertex").get<std::string>(), ev.at("time").get<std::size_t>()});
    }
    return trace;
}

}  // namespace

std::string scenario_name(Scenario s) {
    switch (s) {
        case Scenario::offline:
            return "offline";
        case Scenario::online_assumption5_ok:
            return "online_assumption5_ok";
        case Scenario::online_assumption5_violated:
            return "online_assumption5_violated";
    }
    throw_internal("unknown scenario");
}

Scenario parse_scenario(const std::string& name) {
    if (name == "offline") return Scenario::offline;
    if (name == "online_assumption5_ok" || name == "ok") return Scenario::online_assumption5_ok;
    if (name == "online_assumption5_violated" || name == "violated") return Scenario::online_assumption5_violated;
    throw_config("unknown scenario \"" + name +
                 "\" (expected offline, online_assumption5_ok or online_assumption5_violated)");
}

void TdscmParams::validate() const {
    const std::size_t d = graph.vertices.size();
    if (epsilon.size() != d) throw_config("epsilon must have one entry per vertex");
    for (double e : epsilon) {
        if (!(e > 0.0 && e <= 1.0)) throw_config("epsilon entries must lie in (0,1]");
    }
    if (!(beta > 0.0 && beta < 1.0)) throw_config("beta must lie in (0,1)");
    if (thresholds.names != graph.vertices) throw_config("thresholds must cover exactly the graph vertices");
    for (const auto& e : thresholds.entries) {
        if (!(e.value >= 0.0 && e.value <= 1.0)) throw_config("thresholds must lie in [0,1]");
    }
    if (max_consecutive_anomaly < 1) throw_config("max_consecutive_anomaly must be >= 1");
    if (!(stop_hazard >= 0.0 && stop_hazard < 1.0)) throw_config("stop_hazard must lie in [0,1)");
}

TdscmParams random_tdscm_params(const WindowGraph& graph, std::uint64_t seed) {
    Rng rng(seed);
    TdscmParams params;
    params.graph = graph;
    const std::size_t d = graph.vertices.size();
    std::vector<double> thresholds(d);
    for (std::size_t v = 0; v < d; ++v) thresholds[v] = rng.uniform(0.7, 0.9);
    params.thresholds = fixed_thresholds(graph.vertices, thresholds);
    params.epsilon.assign(d, 1.0);
    for (std::size_t v = 0; v < d; ++v) {
        if (rng.bernoulli(0.3)) params.epsilon[v] = 0.7;
    }
    return params;
}

std::set<std::string> root_cause_vertices(const GroundTruthTrace& trace) {
    std::set<std::string> roots;
    for (const auto& ev : trace.root_causes) roots.insert(ev.vertex);
    return roots;
}

WindowGraph random_tscg(int n, int degree_min, int degree_max, int n_root_vertices, std::uint64_t seed) {
    if (n < 2) throw_config("random_tscg requires at least 2 vertices");
    if (degree_min > degree_max || degree_max < 1) throw_config("invalid degree bounds");
    if (degree_min > n - 1) throw_config("degree_min exceeds the possible maximum degree n-1");
    if (n_root_vertices < 1 || n_root_vertices > n) throw_config("n_root_vertices must lie in [1, n]");

    const std::vector<std::string> names = metric_names(n);
    // Only the maximum degree is constrained, so aim the mean well below
    // it; the retry loop filters for the exact predicates.
    const double target = 0.25 * static_cast<double>(degree_min + degree_max) / static_cast<double>(n - 1);
    const double edge_prob = std::clamp(target, 0.1, 0.8);

    constexpr int kAttempts = 20000;
    for (int attempt = 0; attempt < kAttempts; ++attempt) {
        Rng rng(mix_seed(seed, static_cast<std::uint64_t>(attempt)));
        std::vector<std::size_t> order(static_cast<std::size_t>(n));
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        rng.shuffle(order);

        std::vector<int> degree(static_cast<std::size_t>(n), 0);
        std::vector<int> in_degree(static_cast<std::size_t>(n), 0);
        std::vector<LaggedEdge> edges;
        for (std::size_t i = 0; i < order.size(); ++i) {
            for (std::size_t j = i + 1; j < order.size(); ++j) {
                if (rng.bernoulli(edge_prob)) {
                    edges.push_back({names[order[i]], 1, names[order[j]]});
                    ++degree[order[i]];
                    ++degree[order[j]];
                    ++in_degree[order[j]];
                }
            }
        }
        // Degree predicates count cross edges only; the universal
        // self-loops below are structural.
        int roots = 0;
        int max_degree = 0;
        for (std::size_t v = 0; v < order.size(); ++v) {
            if (in_degree[v] == 0) ++roots;
            max_degree = std::max(max_degree, degree[v]);
        }
        if (roots != n_root_vertices || max_degree < degree_min || max_degree > degree_max) continue;
        for (const auto& name : names) edges.push_back({name, 1, name});
        return make_window_graph(names, std::move(edges), 1);
    }
    throw_data("random_tscg could not satisfy the structural constraints after " + std::to_string(kAttempts) +
               " attempts; relax the constraints or change the seed");
}

std::uint8_t tdscm_equation(const std::vector<std::uint8_t>& parent_bits, std::uint8_t u, std::uint8_t i) {
    std::uint8_t any = 0;
    for (std::uint8_t b : parent_bits) any |= b;
    return static_cast<std::uint8_t>((any & u) | i);
}

TdscmWindow generate_tdscm(const TdscmParams& params, std::size_t length, Scenario scenario, std::uint64_t seed) {
    params.validate();
    if (length < static_cast<std::size_t>(params.graph.gamma_max) + 1) {
        throw_data("window length must be at least gamma_max + 1");
    }

    if (scenario == Scenario::offline) {
        Rng rng(mix_seed(seed, 0));
        TdscmWindow window = run_tdscm_window(params, length, true, {}, rng);
        window.trace.seed = seed;
        validate_window(params, window, scenario);
        return window;
    }

    const SummaryGraph summary = collapse_to_summary(params.graph);
    constexpr int kAttempts = 50;
    for (int attempt = 0; attempt < kAttempts; ++attempt) {
        Rng rng(mix_seed(seed, 1000 + static_cast<std::uint64_t>(attempt)));
        const auto [upstream, downstream] = choose_intervention_pair(summary, scenario, rng);
        std::vector<RootCauseEvent> placed{{upstream, 0}, {downstream, 0}};
        std::sort(placed.begin(), placed.end());
        TdscmWindow window = run_tdscm_window(params, length, false, placed, rng);
        window.trace.root_causes = placed;
        window.trace.seed = seed;

        std::set<std::string> anomalies;
        for (std::size_t v = 0; v < window.bits.series_count(); ++v) {
            for (std::uint8_t b : window.bits.bits[v]) {
                if (b) {
                    anomalies.insert(window.bits.names[v]);
                    break;
                }
            }
        }
        const auto a5 = check_assumption5(summary, {upstream, downstream}, anomalies);
        const bool want_satisfied = scenario == Scenario::online_assumption5_ok;
        if (a5.satisfied != want_satisfied) continue;
        validate_window(params, window, scenario);
        return window;
    }
    throw_data("could not realize scenario " + scenario_name(scenario) + " after " + std::to_string(kAttempts) +
               " placements; retry with a different seed");
}

BinaryPanel regenerate_bits(const TdscmParams& params, const GroundTruthTrace& trace,
                            const std::set<std::string>& suppressed) {
    params.validate();
    const auto& names = params.graph.vertices;
    for (const auto& s : suppressed) {
        if (!std::binary_search(names.begin(), names.end(), s)) {
            throw_data("vertex \"" + s + "\" is not part of the recorded trace");
        }
    }
    const std::size_t d = names.size();
    if (trace.u_draws.size() != d || trace.i_draws.size() != d) throw_data("trace dimensions do not match the graph");
    const std::size_t length = trace.u_draws.empty() ? 0 : trace.u_draws.front().size();
    const auto parents = parent_lists(params.graph);

    BinaryPanel out;
    out.names = names;
    out.thresholds = params.thresholds;
    out.bits.assign(d, std::vector<std::uint8_t>(length, 0));
    for (std::size_t t = 0; t < length; ++t) {
        for (std::size_t v = 0; v < d; ++v) {
            std::uint8_t any = 0;
            for (const auto& p : parents[v]) {
                if (t >= static_cast<std::size_t>(p.lag) && out.bits[p.index][t - static_cast<std::size_t>(p.lag)]) {
                    any = 1;
                    break;
                }
            }
            const std::uint8_t i = suppressed.count(names[v]) ? 0 : trace.i_draws[v][t];
            out.bits[v][t] = static_cast<std::uint8_t>((any & trace.u_draws[v][t]) | i);
        }
    }
    return out;
}

void validate_window(const TdscmParams& params, const TdscmWindow& window, Scenario scenario) {
    const auto& names = params.graph.vertices;
    const std::size_t d = names.size();
    const std::size_t length = window.bits.length();
    const auto parents = parent_lists(params.graph);

    for (std::size_t v = 0; v < d; ++v) {
        int run = 0;
        for (std::size_t t = 0; t < length; ++t) {
            std::uint8_t any = 0;
            for (const auto& p : parents[v]) {
                if (t >= static_cast<std::size_t>(p.lag) && window.bits.bits[p.index][t - static_cast<std::size_t>(p.lag)]) {
                    any = 1;
                    break;
                }
            }
            const std::uint8_t expected =
                static_cast<std::uint8_t>((any & window.trace.u_draws[v][t]) | window.trace.i_draws[v][t]);
            if (window.bits.bits[v][t] != expected) {
                throw_internal("generated bit diverges from the structural equation at (" + names[v] + ", " +
                               std::to_string(t) + ")");
            }
            if (window.trace.i_draws[v][t] && !window.bits.bits[v][t]) {
                throw_internal("intervention without anomaly at (" + names[v] + ", " + std::to_string(t) + ")");
            }
            run = window.bits.bits[v][t] ? run + 1 : 0;
            if (scenario == Scenario::offline && run > params.max_consecutive_anomaly) {
                throw_internal("anomaly cap exceeded for " + names[v]);
            }
        }
    }
    if (scenario != Scenario::offline) {
        for (std::size_t v = 0; v < d; ++v) {
            for (std::size_t t = 0; t < length; ++t) {
                const bool placed =
                    std::find(window.trace.root_causes.begin(), window.trace.root_causes.end(),
                              RootCauseEvent{names[v], t}) != window.trace.root_causes.end();
                if (static_cast<bool>(window.trace.i_draws[v][t]) != placed) {
                    throw_internal("online interventions diverge from the logged root causes");
                }
            }
        }
    }
}

TraceDoc TdscmTrial::trace_doc() const {
    TraceDoc doc;
    doc.params = params;
    doc.scenario = scenario;
    doc.seed = seed;
    doc.offline = offline.trace;
    doc.online = online.trace;
    return doc;
}

TdscmTrial make_tdscm_trial(const TrialOptions& options, std::uint64_t seed) {
    // Some graphs cannot host the requested scenario (a fully ordered DAG
    // has no disjoint-path pair); those bundles are regenerated from
    // derived seeds, deterministically.
    constexpr int kBundleAttempts = 50;
    for (int attempt = 0;; ++attempt) {
        const std::uint64_t bundle_seed = mix_seed(seed, 0xB0ULL + static_cast<std::uint64_t>(attempt));
        TdscmTrial trial;
        trial.seed = seed;
        trial.scenario = options.scenario;
        const WindowGraph graph = random_tscg(options.vertices, options.degree_min, options.degree_max,
                                              options.root_vertices, mix_seed(bundle_seed, 1));
        trial.params = random_tdscm_params(graph, mix_seed(bundle_seed, 2));
        trial.params.beta = options.beta;
        try {
            trial.offline = generate_tdscm(trial.params, options.offline_length, Scenario::offline,
                                           mix_seed(bundle_seed, 3));
            if (options.scenario != Scenario::offline) {
                trial.online =
                    generate_tdscm(trial.params, options.online_length, options.scenario, mix_seed(bundle_seed, 4));
            }
        } catch (const Error&) {
            if (attempt + 1 >= kBundleAttempts) throw;
            continue;
        }
        return trial;
    }
}

std::string trace_to_json(const TraceDoc& doc) {
    nlohmann::json j;
    j["kind"] = "tdscm_trial";
    j["seed"] = doc.seed;
    j["scenario"] = scenario_name(doc.scenario);
    nlohmann::json params;
    params["beta"] = doc.params.beta;
    params["epsilon"] = doc.params.epsilon;
    params["max_consecutive_anomaly"] = doc.params.max_consecutive_anomaly;
    params["stop_hazard"] = doc.params.stop_hazard;
    nlohmann::json thresholds;
    for (std::size_t v = 0; v < doc.params.thresholds.names.size(); ++v) {
        thresholds[doc.params.thresholds.names[v]] = doc.params.thresholds.entries[v].value;
    }
    params["thresholds"] = thresholds;
    j["params"] = params;
    j["graph"] = nlohmann::json::parse(graph_to_json(GraphDoc::from_window(doc.params.graph)));
    j["offline"] = trace_window_to_json(doc.offline);
    j["online"] = trace_window_to_json(doc.online);
    return j.dump(2) + "\n";
}

TraceDoc trace_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw_data(std::string("invalid trace JSON: ") + e.what());
    }
    try {
        TraceDoc doc;
        doc.seed = j.at("seed").get<std::uint64_t>();
        doc.scenario = parse_scenario(j.at("scenario").get<std::string>());
        const GraphDoc graph = graph_from_json(j.at("graph").dump());
        if (!graph.window) throw_data("trace graph must be a window graph");
        doc.params.graph = *graph.window;
        const auto& params = j.at("params");
        doc.params.beta = params.at("beta").get<double>();
        doc.params.epsilon = params.at("epsilon").get<std::vector<double>>();
        doc.params.max_consecutive_anomaly = params.at("max_consecutive_anomaly").get<int>();
        doc.params.stop_hazard = params.at("stop_hazard").get<double>();
        std::vector<double> values;
        for (const auto& name : doc.params.graph.vertices) {
            values.push_back(params.at("thresholds").at(name).get<double>());
        }
        doc.params.thresholds = fixed_thresholds(doc.params.graph.vertices, values);
        doc.offline = trace_window_from_json(j.at("offline"));
        doc.online = trace_window_from_json(j.at("online"));
        doc.params.validate();
        return doc;
    } catch (const nlohmann::json::exception& e) {
        throw_data(std::string("invalid trace JSON: ") + e.what());
    }
}

void save_trace_json(const TraceDoc& doc, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw_io("cannot open \"" + path + "\" for writing");
    out << trace_to_json(doc);
    if (!out) throw_io("write to \"" + path + "\" failed");
}

TraceDoc load_trace_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw_io("cannot open \"" + path + "\" for reading");
    std::stringstream buf;
    buf << in.rdbuf();
    return trace_from_json(buf.str());
}

void export_tdscm_trial(const TdscmTrial& trial, const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw_io("cannot create directory \"" + dir + "\": " + ec.message());
    const auto path = [&](const std::string& name) { return (std::filesystem::path(dir) / name).string(); };

    const bool has_online = trial.scenario != Scenario::offline;
    const TdscmWindow& analysis = has_online ? trial.online : trial.offline;
    save_panel_csv(analysis.panel, path("panel.csv"));
    save_bits_csv(analysis.bits, path("bits.csv"));
    if (has_online) {
        save_panel_csv(trial.offline.panel, path("offline_panel.csv"));
        save_bits_csv(trial.offline.bits, path("offline_bits.csv"));
    }
    save_trace_json(trial.trace_doc(), path("trace.json"));
    save_graph_json(GraphDoc::from_window(trial.params.graph), path("graph.json"));
    save_thresholds_json(trial.params.thresholds, path("thresholds.json"));
}

LinearTrial generate_linear_dscm(const WindowGraph& graph, std::size_t offline_length, std::size_t online_length,
                                 Scenario scenario, std::uint64_t seed, const LinearOptions& options) {
    if (offline_length < 2) throw_data("offline window must have at least 2 samples");
    const auto& names = graph.vertices;
    const std::size_t d = names.size();
    const auto parents = parent_lists(graph);
    const SummaryGraph summary = collapse_to_summary(graph);

    LinearTrial trial;
    trial.seed = seed;

    Rng rng(mix_seed(seed, 11));
    std::vector<std::vector<double>> coeff(d);  // aligned with parents[v]
    for (std::size_t v = 0; v < d; ++v) {
        coeff[v].resize(parents[v].size());
        for (std::size_t p = 0; p < parents[v].size(); ++p) {
            coeff[v][p] = rng.uniform(0.1, 1.0);
            trial.coefficients[names[parents[v][p].index] + "->" + names[v]] = coeff[v][p];
        }
    }

    auto step = [&](std::vector<std::vector<double>>& values, std::size_t t, std::size_t history,
                    const std::vector<std::vector<double>>& prev, const std::vector<std::vector<double>>& use_coeff,
                    const std::set<std::string>& shifted, Rng& noise_rng) {
        for (std::size_t v = 0; v < d; ++v) {
            double acc = 0.0;
            for (std::size_t p = 0; p < parents[v].size(); ++p) {
                const std::size_t lag = static_cast<std::size_t>(parents[v][p].lag);
                double parent_value = 0.0;
                if (t >= lag) {
                    parent_value = values[parents[v][p].index][t - lag];
                } else if (history >= lag - t) {
                    parent_value = prev[parents[v][p].index][history - (lag - t)];
                }
                acc += use_coeff[v][p] * parent_value;
            }
            acc += options.noise_scale * noise_rng.normal();
            if (shifted.count(names[v])) acc += options.shift;
            values[v][t] = acc;
        }
    };

    std::vector<std::vector<double>> off_values(d, std::vector<double>(offline_length, 0.0));
    for (std::size_t t = 0; t < offline_length; ++t) step(off_values, t, 0, {}, coeff, {}, rng);
    trial.offline = make_panel(names, off_values);

    if (scenario == Scenario::offline) return trial;
    if (online_length < 1) throw_data("online window must have at least 1 sample");

    Rng online_rng(mix_seed(seed, 12));
    const auto [upstream, downstream] = choose_intervention_pair(summary, scenario, online_rng);
    trial.root_causes = {upstream, downstream};
    trial.anomalous = trial.root_causes;
    for (const auto& r : trial.root_causes) {
        for (const auto& v : summary.descendants(r)) trial.anomalous.insert(v);
    }

    std::vector<std::vector<double>> online_coeff = coeff;
    std::set<std::string> shifted;
    if (options.noise_shift) {
        shifted = trial.root_causes;
    } else {
        for (const auto& target : trial.root_causes) {
            const std::size_t v = static_cast<std::size_t>(
                std::lower_bound(names.begin(), names.end(), target) - names.begin());
            for (std::size_t p = 0; p < parents[v].size(); ++p) {
                online_coeff[v][p] = online_rng.uniform(0.1, 1.0);
                trial.intervened_coefficients[names[parents[v][p].index] + "->" + names[v]] = online_coeff[v][p];
            }
        }
    }

    std::vector<std::vector<double>> on_values(d, std::vector<double>(online_length, 0.0));
    for (std::size_t t = 0; t < online_length; ++t) {
        step(on_values, t, offline_length, off_values, online_coeff, shifted, online_rng);
    }
    trial.online = make_panel(names, on_values);
    return trial;
}

LinearTrial generate_noise_shift_dscm(const WindowGraph& graph, std::size_t offline_length, std::size_t online_length,
                                      Scenario scenario, double shift, std::uint64_t seed) {
    LinearOptions options;
    options.noise_shift = true;
    options.shift = shift;
    return generate_linear_dscm(graph, offline_length, online_length, scenario, seed, options);
}

void export_linear_trial(const WindowGraph& graph, const LinearTrial& trial, const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw_io("cannot create directory \"" + dir + "\": " + ec.message());
    const auto path = [&](const std::string& name) { return (std::filesystem::path(dir) / name).string(); };

    const bool has_online = trial.online.series_count() > 0;
    save_panel_csv(has_online ? trial.online : trial.offline, path("panel.csv"));
    if (has_online) save_panel_csv(trial.offline, path("offline_panel.csv"));
    save_graph_json(GraphDoc::from_window(graph), path("graph.json"));

    nlohmann::json j;
    j["kind"] = "linear_trial";
    j["seed"] = trial.seed;
    j["root_causes"] = std::vector<std::string>(trial.root_causes.begin(), trial.root_causes.end());
    j["anomalous"] = std::vector<std::string>(trial.anomalous.begin(), trial.anomalous.end());
    j["coefficients"] = trial.coefficients;
    j["intervened_coefficients"] = trial.intervened_coefficients;
    std::ofstream out(path("trace.json"));
    if (!out) throw_io("cannot open trace.json for writing");
    out << j.dump(2) << "\n";
}

std::vector<Fixture> counter_example_fixtures() {
    std::vector<Fixture> fixtures;

    {
        Fixture f;
        f.name = "fork_unequal_lags";
        f.graph = GraphDoc::from_window(make_window_graph(
            {"X", "Y", "Z"}, {{"X", 1, "Y"}, {"X", 2, "Z"}}, 2));
        f.online.names = {"X", "Y", "Z"};
        f.online.bits = {
            {1, 0, 1, 0, 0, 0},
            {0, 1, 0, 1, 0, 0},
            {0, 0, 1, 0, 1, 0},
        };
        f.online.thresholds = fixed_thresholds(f.online.names, {0.5, 0.5, 0.5});
        f.expected_root_causes = {"X"};
        fixtures.push_back(std::move(f));
    }
    {
        Fixture f;
        f.name = "double_collider";
        f.graph = GraphDoc::from_window(make_window_graph(
            {"W", "X", "Y", "Z"}, {{"W", 1, "X"}, {"Z", 1, "X"}, {"W", 2, "Y"}, {"Z", 2, "Y"}}, 2));
        f.online.names = {"W", "X", "Y", "Z"};
        f.online.bits = {
            {1, 0, 0, 0, 0, 0},
            {0, 1, 1, 0, 0, 0},
            {0, 0, 1, 1, 0, 0},
            {0, 1, 0, 0, 0, 0},
        };
        f.online.thresholds = fixed_thresholds(f.online.names, {0.5, 0.5, 0.5, 0.5});
        f.expected_root_causes = {"W", "Z"};
        fixtures.push_back(std::move(f));
    }
    return fixtures;
}

Fixture diamond_fixture() {
    Fixture f;
    f.name = "diamond_with_cycle";
    f.graph = GraphDoc::from_window(make_window_graph(
        {"W", "X", "Y", "Z"},
        {{"Z", 1, "Y"}, {"Y", 1, "X"}, {"X", 1, "W"}, {"W", 1, "X"},
         {"W", 1, "W"}, {"X", 1, "X"}, {"Y", 1, "Y"}, {"Z", 1, "Z"}},
        1));
    f.online.names = {"W", "X", "Y", "Z"};
    // Y's propagation is muted in this window, so the cycle {X, W} has no
    // anomalous parent outside itself and its earliest member is a root.
    f.online.bits = {
        {0, 0, 1, 1},
        {0, 1, 1, 1},
        {0, 0, 0, 0},
        {1, 1, 1, 1},
    };
    f.online.thresholds = fixed_thresholds(f.online.names, {0.5, 0.5, 0.5, 0.5});
    f.expected_root_causes = {"X", "Z"};
    return f;
}

}  // namespace trca
