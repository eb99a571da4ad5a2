#include "trca.h"

#include <cstring>
#include <string>

#include "errors.hpp"
#include "eval.hpp"
#include "graph.hpp"
#include "rca.hpp"
#include "rng.hpp"
#include "simulator.hpp"
#include "timeseries.hpp"

namespace {

thread_local std::string g_last_error;

trca_status status_of(const trca::Error& e) {
    switch (e.kind()) {
        case trca::ErrorKind::config:
            return TRCA_ERR_CONFIG;
        case trca::ErrorKind::data:
            return TRCA_ERR_DATA;
        case trca::ErrorKind::io:
            return TRCA_ERR_IO;
        case trca::ErrorKind::internal:
            return TRCA_ERR_INTERNAL;
    }
    return TRCA_ERR_INTERNAL;
}

template <typename Fn>
trca_status guarded(Fn&& fn) {
    try {
        fn();
        return TRCA_OK;
    } catch (const trca::Error& e) {
        g_last_error = e.what();
        return status_of(e);
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return TRCA_ERR_INTERNAL;
    } catch (...) {
        g_last_error = "unknown error";
        return TRCA_ERR_INTERNAL;
    }
}

trca_status fail_null_arg(const char* what) {
    g_last_error = std::string(what) + " must not be NULL";
    return TRCA_ERR_CONFIG;
}

char* copy_string(const std::string& s) {
    char* out = new char[s.size() + 1];
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

}  // namespace

struct trca_panel {
    trca::TimeSeriesPanel value;
};
struct trca_thresholds {
    trca::ThresholdSpec value;
};
struct trca_binary_panel {
    trca::BinaryPanel value;
};
struct trca_graph {
    trca::GraphDoc value;
};
struct trca_report {
    trca::AnomalyReport value;
    std::vector<std::string> root_cause_list;
};
struct trca_trace {
    trca::TraceDoc value;
};
struct trca_agent {
    trca::AgentSession session;
};

extern "C" {

const char* trca_last_error(void) { return g_last_error.c_str(); }

const char* trca_version(void) { return "1.0.0"; }

void trca_string_free(char* s) { delete[] s; }

/* --- panels --------------------------------------------------------------- */

trca_status trca_panel_load_csv(const char* path, trca_panel** out) {
    if (!path) return fail_null_arg("path");
    if (!out) return fail_null_arg("out");
    return guarded([&] { *out = new trca_panel{trca::load_panel_csv(path)}; });
}

trca_status trca_panel_save_csv(const trca_panel* panel, const char* path) {
    if (!panel) return fail_null_arg("panel");
    if (!path) return fail_null_arg("path");
    return guarded([&] { trca::save_panel_csv(panel->value, path); });
}

trca_status trca_panel_normalize(const trca_panel* panel, trca_panel** out) {
    if (!panel) return fail_null_arg("panel");
    if (!out) return fail_null_arg("out");
    return guarded([&] { *out = new trca_panel{trca::normalize(panel->value)}; });
}

size_t trca_panel_series_count(const trca_panel* panel) { return panel ? panel->value.series_count() : 0; }

size_t trca_panel_length(const trca_panel* panel) { return panel ? panel->value.length() : 0; }

const char* trca_panel_series_name(const trca_panel* panel, size_t index) {
    if (!panel || index >= panel->value.series_count()) return nullptr;
    return panel->value.names[index].c_str();
}

void trca_panel_free(trca_panel* panel) { delete panel; }

/* --- thresholds ------------------------------------------------------------ */

trca_status trca_thresholds_select(const trca_panel* panel, double proportion, trca_thresholds** out) {
    if (!panel) return fail_null_arg("panel");
    if (!out) return fail_null_arg("out");
    return guarded([&] { *out = new trca_thresholds{trca::select_thresholds(panel->value, proportion)}; });
}

trca_status trca_thresholds_load_json(const char* path, trca_thresholds** out) {
    if (!path) return fail_null_arg("path");
    if (!out) return fail_null_arg("out");
    return guarded([&] { *out = new trca_thresholds{trca::load_thresholds_json(path)}; });
}

trca_status trca_thresholds_save_json(const trca_thresholds* thresholds, const char* path) {
    if (!thresholds) return fail_null_arg("thresholds");
    if (!path) return fail_null_arg("path");
    return guarded([&] { trca::save_thresholds_json(thresholds->value, path); });
}

trca_status trca_thresholds_get(const trca_thresholds* thresholds, const char* series, double* out) {
    if (!thresholds) return fail_null_arg("thresholds");
    if (!series) return fail_null_arg("series");
    if (!out) return fail_null_arg("out");
    return guarded([&] { *out = thresholds->value.value_for(series); });
}

void trca_thresholds_free(trca_thresholds* thresholds) { delete thresholds; }

/* --- binary panels ------------------------------------------------------------ */

trca_status trca_binarize(const trca_panel* panel, const trca_thresholds* thresholds, trca_binary_panel** out) {
    if (!panel) return fail_null_arg("panel");
    if (!thresholds) return fail_null_arg("thresholds");
    if (!out) return fail_null_arg("out");
    return guarded([&] { *out = new trca_binary_panel{trca::binarize(panel->value, thresholds->value)}; });
}

trca_status trca_binary_panel_load_csv(const char* path, const trca_thresholds* thresholds_or_null,
                                       trca_binary_panel** out) {
    if (!path) return fail_null_arg("path");
    if (!out) return fail_null_arg("out");
    return guarded([&] {
        trca::BinaryPanel panel = trca::load_bits_csv(path);
        if (thresholds_or_null) {
            for (const auto& name : panel.names) {
                trca::ThresholdEntry entry;
                entry.value = thresholds_or_null->value.value_for(name);
                panel.thresholds.names.push_back(name);
                panel.thresholds.entries.push_back(entry);
            }
        }
        *out = new trca_binary_panel{std::move(panel)};
    });
}

trca_status trca_binary_panel_save_csv(const trca_binary_panel* panel, const char* path) {
    if (!panel) return fail_null_arg("panel");
    if (!path) return fail_null_arg("path");
    return guarded([&] { trca::save_bits_csv(panel->value, path); });
}

void trca_binary_panel_free(trca_binary_panel* panel) { delete panel; }

/* --- graphs --------------------------------------------------------------------- */

trca_status trca_graph_load_json(const char* path, trca_graph** out) {
    if (!path) return fail_null_arg("path");
    if (!out) return fail_null_arg("out");
    return guarded([&] { *out = new trca_graph{trca::load_graph_json(path)}; });
}

trca_status trca_graph_save_json(const trca_graph* graph, const char* path) {
    if (!graph) return fail_null_arg("graph");
    if (!path) return fail_null_arg("path");
    return guarded([&] { trca::save_graph_json(graph->value, path); });
}

trca_status trca_graph_save_edgelist(const trca_graph* graph, const char* path) {
    if (!graph) return fail_null_arg("graph");
    if (!path) return fail_null_arg("path");
    return guarded([&] { trca::save_graph_edgelist(graph->value, path); });
}

size_t trca_graph_vertex_count(const trca_graph* graph) {
    return graph ? graph->value.summary.vertices().size() : 0;
}

void trca_graph_free(trca_graph* graph) { delete graph; }

void trca_discovery_options_init(trca_discovery_options* options) {
    if (!options) return;
    options->gamma_max = 1;
    options->alpha = 0.01;
    options->max_condition_set_size = 3;
    options->include_self_causes = 1;
    options->jobs = 0;
    options->audit_path = nullptr;
}

trca_status trca_discover(const trca_binary_panel* offline, const trca_discovery_options* options, trca_graph** out) {
    if (!offline) return fail_null_arg("offline");
    if (!options) return fail_null_arg("options");
    if (!out) return fail_null_arg("out");
    return guarded([&] {
        trca::DiscoveryConfig cfg;
        cfg.gamma_max = options->gamma_max;
        cfg.alpha = options->alpha;
        cfg.max_condition_set_size = options->max_condition_set_size;
        cfg.include_self_causes = options->include_self_causes != 0;
        std::vector<trca::CiAuditEntry> audit;
        std::vector<trca::CiAuditEntry>* audit_ptr = options->audit_path ? &audit : nullptr;
        trca::WindowGraph wg = trca::discover_window_graph(offline->value, cfg, options->jobs, audit_ptr);
        if (options->audit_path) trca::write_audit_log(audit, options->audit_path);
        *out = new trca_graph{trca::GraphDoc::from_window(std::move(wg))};
    });
}

/* --- detection ------------------------------------------------------------------- */

namespace {

trca_report* wrap_report(trca::AnomalyReport report) {
    auto* out = new trca_report{std::move(report), {}};
    out->root_cause_list.assign(out->value.root_causes.begin(), out->value.root_causes.end());
    return out;
}

}  // namespace

trca_status trca_detect(const trca_graph* graph, const trca_binary_panel* online, trca_report** out) {
    if (!graph) return fail_null_arg("graph");
    if (!online) return fail_null_arg("online");
    if (!out) return fail_null_arg("out");
    return guarded([&] {
        // Vertex sets must match exactly; report the full diff at once.
        std::string extra_series;
        std::string missing_series;
        for (const auto& name : online->value.names) {
            if (!graph->value.summary.has_vertex(name)) extra_series += " " + name;
        }
        for (const auto& v : graph->value.summary.vertices()) {
            bool found = false;
            for (const auto& name : online->value.names) {
                if (name == v) {
                    found = true;
                    break;
                }
            }
            if (!found) missing_series += " " + v;
        }
        if (!extra_series.empty() || !missing_series.empty()) {
            std::string message = "online panel does not match the graph:";
            if (!missing_series.empty()) message += " missing series:" + missing_series + ";";
            if (!extra_series.empty()) message += " series not in the graph:" + extra_series + ";";
            trca::throw_data(message);
        }
        *out = wrap_report(trca::analyze(graph->value.summary, online->value));
    });
}

trca_status trca_report_to_json(const trca_report* report, char** json) {
    if (!report) return fail_null_arg("report");
    if (!json) return fail_null_arg("json");
    return guarded([&] { *json = copy_string(trca::report_to_json(report->value)); });
}

int trca_report_incomplete(const trca_report* report) { return report && report->value.incomplete ? 1 : 0; }

size_t trca_report_root_cause_count(const trca_report* report) {
    return report ? report->root_cause_list.size() : 0;
}

const char* trca_report_root_cause(const trca_report* report, size_t index) {
    if (!report || index >= report->root_cause_list.size()) return nullptr;
    return report->root_cause_list[index].c_str();
}

void trca_report_free(trca_report* report) { delete report; }

/* --- agent loop --------------------------------------------------------------------- */

trca_status trca_trace_load_json(const char* path, trca_trace** out) {
    if (!path) return fail_null_arg("path");
    if (!out) return fail_null_arg("out");
    return guarded([&] { *out = new trca_trace{trca::load_trace_json(path)}; });
}

void trca_trace_free(trca_trace* trace) { delete trace; }

trca_status trca_detect_agent_trace(const trca_graph* graph, const trca_binary_panel* online,
                                    const trca_trace* trace, int max_iterations, trca_report** out) {
    if (!graph) return fail_null_arg("graph");
    if (!online) return fail_null_arg("online");
    if (!trace) return fail_null_arg("trace");
    if (!out) return fail_null_arg("out");
    return guarded([&] {
        const trca::Fixer fixer = trca::make_reference_fixer(trace->value);
        *out = wrap_report(trca::trca_agent(graph->value.summary, online->value, fixer, max_iterations));
    });
}

trca_status trca_agent_begin(const trca_graph* graph, const trca_binary_panel* online, int max_iterations,
                             trca_agent** out) {
    if (!graph) return fail_null_arg("graph");
    if (!online) return fail_null_arg("online");
    if (!out) return fail_null_arg("out");
    return guarded([&] {
        *out = new trca_agent{trca::AgentSession(graph->value.summary, online->value, max_iterations)};
    });
}

trca_status trca_agent_step(trca_agent* agent, char** detected_json) {
    if (!agent) return fail_null_arg("agent");
    if (!detected_json) return fail_null_arg("detected_json");
    return guarded([&] {
        const std::set<std::string> detected = agent->session.step();
        std::string json = "[";
        bool first = true;
        for (const auto& d : detected) {
            if (!first) json += ",";
            json += "\"" + d + "\"";
            first = false;
        }
        json += "]";
        *detected_json = copy_string(json);
    });
}

int trca_agent_done(const trca_agent* agent) { return agent && agent->session.finished() ? 1 : 0; }

trca_status trca_agent_provide_panel(trca_agent* agent, const trca_binary_panel* updated) {
    if (!agent) return fail_null_arg("agent");
    if (!updated) return fail_null_arg("updated");
    return guarded([&] { agent->session.provide_panel(updated->value); });
}

trca_status trca_agent_finish(trca_agent* agent, trca_report** out) {
    if (!agent) return fail_null_arg("agent");
    if (!out) return fail_null_arg("out");
    return guarded([&] { *out = wrap_report(agent->session.finish()); });
}

void trca_agent_free(trca_agent* agent) { delete agent; }

/* --- simulation ---------------------------------------------------------------------- */

void trca_sim_options_init(trca_sim_options* options) {
    if (!options) return;
    options->generator = "tdscm";
    options->scenario = "online_assumption5_ok";
    options->vertices = 6;
    options->degree_min = 4;
    options->degree_max = 5;
    options->root_vertices = 1;
    options->offline_length = 20000;
    options->online_length = 200;
    options->beta = 0.1;
    options->shift = 5.0;
    options->seed = 1;
}

trca_status trca_simulate_to_dir(const trca_sim_options* options, const char* out_dir) {
    if (!options) return fail_null_arg("options");
    if (!options->generator) return fail_null_arg("options->generator");
    if (!options->scenario) return fail_null_arg("options->scenario");
    if (!out_dir) return fail_null_arg("out_dir");
    return guarded([&] {
        const std::string generator = options->generator;
        const trca::Scenario scenario = trca::parse_scenario(options->scenario);
        if (options->offline_length < 2 || options->online_length < 1) {
            trca::throw_config("window lengths must be positive");
        }
        if (generator == "tdscm") {
            trca::TrialOptions trial_options;
            trial_options.vertices = options->vertices;
            trial_options.degree_min = options->degree_min;
            trial_options.degree_max = options->degree_max;
            trial_options.root_vertices = options->root_vertices;
            trial_options.offline_length = static_cast<std::size_t>(options->offline_length);
            trial_options.online_length = static_cast<std::size_t>(options->online_length);
            trial_options.beta = options->beta;
            trial_options.scenario = scenario;
            const trca::TdscmTrial trial = trca::make_tdscm_trial(trial_options, options->seed);
            trca::export_tdscm_trial(trial, out_dir);
        } else if (generator == "linear" || generator == "noise_shift") {
            const trca::WindowGraph graph =
                trca::random_tscg(options->vertices, options->degree_min, options->degree_max, options->root_vertices,
                                  trca::mix_seed(options->seed, 21));
            trca::LinearTrial trial;
            if (generator == "linear") {
                trial = trca::generate_linear_dscm(graph, static_cast<std::size_t>(options->offline_length),
                                                   static_cast<std::size_t>(options->online_length), scenario,
                                                   trca::mix_seed(options->seed, 22));
            } else {
                trial = trca::generate_noise_shift_dscm(graph, static_cast<std::size_t>(options->offline_length),
                                                        static_cast<std::size_t>(options->online_length), scenario,
                                                        options->shift, trca::mix_seed(options->seed, 22));
            }
            trca::export_linear_trial(graph, trial, out_dir);
        } else {
            trca::throw_config("unknown generator \"" + generator + "\" (expected tdscm, linear or noise_shift)");
        }
    });
}

/* --- experiments ------------------------------------------------------------------------ */

trca_status trca_evaluate_file(const char* config_path, const char* const* overrides, size_t n_overrides,
                               const char* out_dir, int sweep_mode, int dry_run, int jobs, char** summary) {
    if (!config_path) return fail_null_arg("config_path");
    if (n_overrides > 0 && !overrides) return fail_null_arg("overrides");
    if (!summary) return fail_null_arg("summary");
    if (!dry_run && !out_dir) return fail_null_arg("out_dir");
    return guarded([&] {
        std::vector<std::string> override_list;
        for (size_t i = 0; i < n_overrides; ++i) {
            if (!overrides[i]) trca::throw_config("override entries must not be NULL");
            override_list.emplace_back(overrides[i]);
        }
        const trca::ExperimentConfig cfg = trca::load_experiment_config(config_path, override_list);
        if (dry_run) {
            *summary = copy_string(trca::describe_grid(cfg, sweep_mode != 0));
            return;
        }
        const trca::ResultTable table =
            sweep_mode ? trca::threshold_sweep(cfg, jobs) : trca::run_experiment(cfg, jobs);
        trca::emit_results(table, out_dir);
        *summary = copy_string(trca::summarize_results(table));
    });
}

}  // extern "C"
