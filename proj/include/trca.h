/*
 * Threshold-based root cause analysis for monitored time series.
 *
 * C interface over the core library: opaque handles, integer status
 * codes, and a per-thread error message. Every *_free function accepts
 * NULL. Functions returning a handle through an out-parameter leave it
 * untouched on failure. Strings returned through char** are heap
 * allocated and must be released with trca_string_free.
 */

#ifndef TRCA_H
#define TRCA_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum trca_status {
    TRCA_OK = 0,
    TRCA_ERR_CONFIG = 2,     /* invalid options, flags or parameters */
    TRCA_ERR_DATA = 3,       /* malformed or inconsistent input data */
    TRCA_ERR_INCOMPLETE = 4, /* agent run stopped with anomalies left */
    TRCA_ERR_INTERNAL = 5,   /* invariant violation inside the library */
    TRCA_ERR_IO = 6          /* file system failure */
} trca_status;

/* Message describing the most recent failure on this thread. */
const char* trca_last_error(void);

const char* trca_version(void);

void trca_string_free(char* s);

/* --- real-valued panels -------------------------------------------------- */

typedef struct trca_panel trca_panel;

/* Wide CSV: optional leading "t"/"timestamp" column, one metric per
 * remaining column. */
trca_status trca_panel_load_csv(const char* path, trca_panel** out);
trca_status trca_panel_save_csv(const trca_panel* panel, const char* path);
/* Per-series min-max scaling onto [0, 1); constant series become zeros. */
trca_status trca_panel_normalize(const trca_panel* panel, trca_panel** out);
size_t trca_panel_series_count(const trca_panel* panel);
size_t trca_panel_length(const trca_panel* panel);
const char* trca_panel_series_name(const trca_panel* panel, size_t index);
void trca_panel_free(trca_panel* panel);

/* --- thresholds ----------------------------------------------------------- */

typedef struct trca_thresholds trca_thresholds;

/* Empirical quantile per series: the (floor(proportion * T) + 1)-th
 * smallest value, clamped to the largest observation. */
trca_status trca_thresholds_select(const trca_panel* panel, double proportion, trca_thresholds** out);
trca_status trca_thresholds_load_json(const char* path, trca_thresholds** out);
trca_status trca_thresholds_save_json(const trca_thresholds* thresholds, const char* path);
trca_status trca_thresholds_get(const trca_thresholds* thresholds, const char* series, double* out);
void trca_thresholds_free(trca_thresholds* thresholds);

/* --- binary panels ---------------------------------------------------------- */

typedef struct trca_binary_panel trca_binary_panel;

/* bit = 1 iff value >= threshold for the series. */
trca_status trca_binarize(const trca_panel* panel, const trca_thresholds* thresholds, trca_binary_panel** out);
/* Loads a 0/1 wide CSV; when thresholds are given they are attached to
 * the panel (they must cover every series), otherwise the panel carries
 * none. */
trca_status trca_binary_panel_load_csv(const char* path, const trca_thresholds* thresholds_or_null,
                                       trca_binary_panel** out);
trca_status trca_binary_panel_save_csv(const trca_binary_panel* panel, const char* path);
void trca_binary_panel_free(trca_binary_panel* panel);

/* --- causal graphs ----------------------------------------------------------- */

typedef struct trca_graph trca_graph;

trca_status trca_graph_load_json(const char* path, trca_graph** out);
trca_status trca_graph_save_json(const trca_graph* graph, const char* path);
trca_status trca_graph_save_edgelist(const trca_graph* graph, const char* path);
size_t trca_graph_vertex_count(const trca_graph* graph);
void trca_graph_free(trca_graph* graph);

typedef struct trca_discovery_options {
    int gamma_max;               /* maximum causal lag, >= 1 */
    double alpha;                /* significance level in (0,1) */
    int max_condition_set_size;  /* -1 for unbounded */
    int include_self_causes;     /* nonzero to consider lagged self-edges */
    int jobs;                    /* 0 = all cores, 1 = sequential */
    const char* audit_path;      /* optional CI-test log, NULL to skip */
} trca_discovery_options;

void trca_discovery_options_init(trca_discovery_options* options);

/* Learns the lag-annotated graph from offline binarized data and returns
 * it together with its summary collapse. */
trca_status trca_discover(const trca_binary_panel* offline, const trca_discovery_options* options, trca_graph** out);

/* --- detection ---------------------------------------------------------------- */

typedef struct trca_report trca_report;

/* Anomaly extraction plus root-cause detection on the online window. */
trca_status trca_detect(const trca_graph* graph, const trca_binary_panel* online, trca_report** out);

trca_status trca_report_to_json(const trca_report* report, char** json);
int trca_report_incomplete(const trca_report* report);
size_t trca_report_root_cause_count(const trca_report* report);
const char* trca_report_root_cause(const trca_report* report, size_t index);
void trca_report_free(trca_report* report);

/* --- agent loop ------------------------------------------------------------------- */

typedef struct trca_trace trca_trace;

/* Ground-truth trace written by the simulator (trace.json). */
trca_status trca_trace_load_json(const char* path, trca_trace** out);
void trca_trace_free(trca_trace* trace);

/* Full detect-fix loop with the trace-backed fixer. Returns TRCA_OK even
 * when the run is incomplete; check trca_report_incomplete. */
trca_status trca_detect_agent_trace(const trca_graph* graph, const trca_binary_panel* online,
                                    const trca_trace* trace, int max_iterations, trca_report** out);

/* Step-wise agent session for externally supplied fixes: step() returns
 * the newly confirmed root causes as a JSON array; the caller then hands
 * back a remediated panel (same shape, no new 1-bits) until the session
 * reports done. */
typedef struct trca_agent trca_agent;

trca_status trca_agent_begin(const trca_graph* graph, const trca_binary_panel* online, int max_iterations,
                             trca_agent** out);
trca_status trca_agent_step(trca_agent* agent, char** detected_json);
int trca_agent_done(const trca_agent* agent);
trca_status trca_agent_provide_panel(trca_agent* agent, const trca_binary_panel* updated);
trca_status trca_agent_finish(trca_agent* agent, trca_report** out);
void trca_agent_free(trca_agent* agent);

/* --- simulation -------------------------------------------------------------------- */

typedef struct trca_sim_options {
    const char* generator; /* "tdscm", "linear" or "noise_shift" */
    const char* scenario;  /* "offline", "online_assumption5_ok", "online_assumption5_violated" */
    int vertices;
    int degree_min;
    int degree_max;
    int root_vertices;
    long long offline_length;
    long long online_length;
    double beta;
    double shift; /* noise_shift generator only */
    uint64_t seed;
} trca_sim_options;

void trca_sim_options_init(trca_sim_options* options);

/* Generates one trial and writes panel.csv, bits.csv, trace.json,
 * graph.json, thresholds.json (plus offline_* files for online
 * scenarios) into the directory. */
trca_status trca_simulate_to_dir(const trca_sim_options* options, const char* out_dir);

/* --- experiments --------------------------------------------------------------------- */

/* Runs an experiment (sweep_mode 0) or a threshold sweep (sweep_mode 1)
 * from an INI-style config file; overrides take "section.key=value"
 * form. Writes rows.csv, aggregates.csv, timings.csv and SVG charts into
 * out_dir and returns the human-readable aggregate table. With dry_run
 * nonzero, returns the planned grid without executing or writing. */
trca_status trca_evaluate_file(const char* config_path, const char* const* overrides, size_t n_overrides,
                               const char* out_dir, int sweep_mode, int dry_run, int jobs, char** summary);

#ifdef __cplusplus
}
#endif

#endif /* TRCA_H */
