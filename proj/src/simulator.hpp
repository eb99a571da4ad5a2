#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "graph.hpp"
#include "timeseries.hpp"

namespace trca {

enum class Scenario { offline, online_assumption5_ok, online_assumption5_violated };

std::string scenario_name(Scenario s);
Scenario parse_scenario(const std::string& name);

/// Parameters of the threshold-based generative process. A vertex's bit
/// is ((OR of lagged parent bits) AND u) OR i with u ~ B(eps_t) and
/// i ~ B(beta). epsilon[v] is the probability that a single anomalous
/// parent propagates; with k anomalous parents the effective per-step
/// probability is 1 - (1 - epsilon[v])^k, so epsilon[v] = 1 makes
/// propagation deterministic.
struct TdscmParams {
    WindowGraph graph;
    std::vector<double> epsilon;  // per vertex, graph vertex order, in (0,1]
    double beta = 0.1;            // offline per-step intervention probability
    ThresholdSpec thresholds;     // ground-truth thresholds
    int max_consecutive_anomaly = 5;
    /// Extra per-step probability that an ongoing anomaly's propagation
    /// gate closes (the series' u is drawn 0 while it is already
    /// anomalous). Must be constant in the anomaly's age: episode
    /// endings then carry no information about run history, and the hard
    /// cap below stays a rare backstop instead of a detectable signal.
    double stop_hazard = 0.6;

    void validate() const;
};

/// Benchmark parameterization: thresholds ~ U([0.7, 0.9]); each vertex is
/// propagation-lossy (epsilon = 0.7) with probability 0.3, deterministic
/// otherwise.
TdscmParams random_tdscm_params(const WindowGraph& graph, std::uint64_t seed);

struct RootCauseEvent {
    std::string vertex;
    std::size_t time = 0;

    friend bool operator<(const RootCauseEvent& a, const RootCauseEvent& b) {
        return std::tie(a.vertex, a.time) < std::tie(b.vertex, b.time);
    }
    friend bool operator==(const RootCauseEvent& a, const RootCauseEvent& b) {
        return a.vertex == b.vertex && a.time == b.time;
    }
};

/// Logged exogenous draws of one generated window; every 1-bit in the
/// generated panel is either a logged intervention or has an anomalous
/// parent at the correct lag with u = 1.
struct GroundTruthTrace {
    std::vector<std::vector<std::uint8_t>> u_draws;  // [series][t]
    std::vector<std::vector<std::uint8_t>> i_draws;
    std::vector<RootCauseEvent> root_causes;  // online scenarios: the placed interventions
    std::uint64_t seed = 0;
};

struct TdscmWindow {
    TimeSeriesPanel panel;
    BinaryPanel bits;
    GroundTruthTrace trace;
};

std::set<std::string> root_cause_vertices(const GroundTruthTrace& trace);

/// Random summary-level DAG: exactly `n_root_vertices` parentless
/// vertices, maximum total cross degree within [degree_min, degree_max],
/// every cross edge at lag 1, a self-loop on every vertex. Structural
/// predicates are asserted, not repaired; seeds that cannot satisfy them
/// raise a generation error.
WindowGraph random_tscg(int n, int degree_min, int degree_max, int n_root_vertices, std::uint64_t seed);

/// One bit of the structural equation (exposed for oracle checks).
std::uint8_t tdscm_equation(const std::vector<std::uint8_t>& parent_bits, std::uint8_t u, std::uint8_t i);

/// Generates one window of the process. Offline windows draw i ~ B(beta)
/// capped at max_consecutive_anomaly consecutive anomalous steps; online
/// windows place exactly two interventions according to the scenario
/// ("different active paths" satisfies the no-upstream-root assumption,
/// "same active path" violates it) and verify the induced instance with
/// check_assumption5 before returning. Real values are reconstructed
/// uniformly below / at-or-above the ground-truth threshold.
TdscmWindow generate_tdscm(const TdscmParams& params, std::size_t length, Scenario scenario, std::uint64_t seed);

/// Replays a logged window with the interventions of `suppressed`
/// removed; never introduces new 1-bits.
BinaryPanel regenerate_bits(const TdscmParams& params, const GroundTruthTrace& trace,
                            const std::set<std::string>& suppressed);

/// Throws an internal error if the window is inconsistent with the
/// structural equation, the interventions, or the offline anomaly cap.
void validate_window(const TdscmParams& params, const TdscmWindow& window, Scenario scenario);

// --- trial bundles --------------------------------------------------------

struct TraceDoc {
    TdscmParams params;
    Scenario scenario = Scenario::offline;
    std::uint64_t seed = 0;
    GroundTruthTrace offline;
    GroundTruthTrace online;  // empty for offline-only trials
};

struct TdscmTrial {
    TdscmParams params;
    Scenario scenario = Scenario::offline;
    std::uint64_t seed = 0;
    TdscmWindow offline;
    TdscmWindow online;  // empty panels for offline-only trials

    TraceDoc trace_doc() const;
};

struct TrialOptions {
    int vertices = 6;
    int degree_min = 4;
    int degree_max = 5;
    int root_vertices = 1;
    std::size_t offline_length = 20000;
    std::size_t online_length = 200;
    double beta = 0.1;
    Scenario scenario = Scenario::online_assumption5_ok;
};

/// Random graph + random parameters + offline window + (for online
/// scenarios) online window, all derived from one seed.
TdscmTrial make_tdscm_trial(const TrialOptions& options, std::uint64_t seed);

std::string trace_to_json(const TraceDoc& doc);
TraceDoc trace_from_json(const std::string& text);
void save_trace_json(const TraceDoc& doc, const std::string& path);
TraceDoc load_trace_json(const std::string& path);

/// Writes panel.csv / bits.csv (online window when present, else the
/// offline window), offline_panel.csv / offline_bits.csv, trace.json,
/// graph.json and thresholds.json into `dir`.
void export_tdscm_trial(const TdscmTrial& trial, const std::string& dir);

// --- continuous generators -------------------------------------------------

struct LinearOptions {
    double noise_scale = 0.1;
    double shift = 0.0;       // used by the noise-shift intervention mode
    bool noise_shift = false; // false: interventions resample incoming coefficients
};

struct LinearTrial {
    TimeSeriesPanel offline;
    TimeSeriesPanel online;
    std::set<std::string> root_causes;
    std::set<std::string> anomalous;  // roots plus their descendants
    std::map<std::string, double> coefficients;             // "source->target"
    std::map<std::string, double> intervened_coefficients;  // only for the resampling mode
    std::uint64_t seed = 0;
};

/// Linear autoregressive process on the same graphs: value = sum of
/// coefficient * lagged parent + noise_scale * N(0,1). Interventions
/// either resample all incoming coefficients of the two chosen vertices
/// or add a constant to their noise, for the whole online window.
LinearTrial generate_linear_dscm(const WindowGraph& graph, std::size_t offline_length, std::size_t online_length,
                                 Scenario scenario, std::uint64_t seed, const LinearOptions& options = {});

LinearTrial generate_noise_shift_dscm(const WindowGraph& graph, std::size_t offline_length, std::size_t online_length,
                                      Scenario scenario, double shift, std::uint64_t seed);

void export_linear_trial(const WindowGraph& graph, const LinearTrial& trial, const std::string& dir);

// --- regression fixtures ----------------------------------------------------

/// Hand-built observational scenario with its oracle graph and the
/// expected detection result.
struct Fixture {
    std::string name;
    GraphDoc graph;
    BinaryPanel online;
    std::set<std::string> expected_root_causes;
};

/// Two counter-example systems where appearance order or pairwise
/// dependence alone misidentify root causes: a fork driven entirely by
/// one source at unequal lags, and a pair of colliders driven by two
/// independent sources.
std::vector<Fixture> counter_example_fixtures();

/// The four-vertex diamond with a two-vertex cycle: detection yields the
/// isolated upstream source and the cycle member with the earliest
/// anomaly.
Fixture diamond_fixture();

}  // namespace trca
