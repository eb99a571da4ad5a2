#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "graph.hpp"
#include "simulator.hpp"
#include "timeseries.hpp"

namespace trca {

/// First anomalous step per anomalous vertex.
using AppearanceTimeMap = std::map<std::string, std::size_t>;

struct Detection {
    std::set<std::string> anomalies;
    AppearanceTimeMap tau;
};

/// A vertex is anomalous iff its series carries a 1 anywhere in the
/// window; its appearance time is the first such step.
Detection detect_anomalies(const BinaryPanel& online);

enum class TieBreak { lexicographic, seeded_random };

struct TrcaResult {
    std::set<std::string> root_causes;
    /// Components of the anomalous subgraph that were skipped because
    /// they have anomalous parents outside themselves; their root causes
    /// (if any) are not identifiable from this window alone.
    std::vector<std::vector<std::string>> unresolved_components;
};

/// Root-cause detection on the anomalous subgraph: decompose into
/// strongly connected components; a component whose parents all lie
/// inside itself yields its single vertex directly, or, when larger, the
/// member with the earliest anomaly (ties broken lexicographically by
/// default, or by a seeded random pick).
TrcaResult detect_root_causes(const SummaryGraph& g, const std::set<std::string>& anomalies,
                              const AppearanceTimeMap& tau, TieBreak tie_break = TieBreak::lexicographic,
                              std::uint64_t seed = 0);

struct AgentIteration {
    std::set<std::string> detected;  // newly confirmed this iteration
    std::set<std::string> fixed;     // cumulative set handed to the fixer
};

struct AnomalyReport {
    std::set<std::string> anomalies;  // of the first analyzed window
    AppearanceTimeMap tau;
    std::set<std::string> root_causes;
    std::vector<AgentIteration> iterations;  // empty for single-shot runs
    std::vector<std::vector<std::string>> unresolved_components;
    bool incomplete = false;
};

/// Single-shot analysis: detect anomalies, run root-cause detection,
/// assemble the report.
AnomalyReport analyze(const SummaryGraph& g, const BinaryPanel& online,
                      TieBreak tie_break = TieBreak::lexicographic, std::uint64_t seed = 0);

/// Remediation callback: given the current online window and the
/// cumulative set of confirmed root causes, returns the window with those
/// causes' effects removed. Must preserve the panel shape and never
/// introduce new 1-bits.
using Fixer = std::function<BinaryPanel(const BinaryPanel&, const std::set<std::string>&)>;

/// Detect-fix loop driven one step at a time; used both by the automatic
/// agent and by the batch-style manual loop in the CLI. The loop is
/// inherently sequential: every step depends on the previous fix.
class AgentSession {
public:
    AgentSession(SummaryGraph g, BinaryPanel online, int max_iterations,
                 TieBreak tie_break = TieBreak::lexicographic, std::uint64_t seed = 0);

    /// Runs detection on the current window and records the iteration.
    /// Returns the newly confirmed root causes; empty when the window is
    /// already clean (the session is then finished).
    std::set<std::string> step();

    /// Hands the remediated window back. Throws a data error if the
    /// update changes the shape or flips any bit from 0 to 1.
    void provide_panel(BinaryPanel updated);

    bool finished() const { return finished_; }
    const BinaryPanel& current() const { return current_; }
    const std::set<std::string>& confirmed() const { return confirmed_; }

    AnomalyReport finish() const;

private:
    SummaryGraph graph_;
    BinaryPanel current_;
    int max_iterations_;
    TieBreak tie_break_;
    std::uint64_t seed_;

    std::set<std::string> confirmed_;
    std::vector<AgentIteration> iterations_;
    std::vector<std::vector<std::string>> last_unresolved_;
    Detection first_;
    bool first_recorded_ = false;
    int steps_ = 0;
    bool awaiting_panel_ = false;
    bool finished_ = false;
    bool complete_ = false;
};

/// Iterates detection and remediation until the window is clean or the
/// iteration budget is spent; the union of per-iteration detections is
/// the reported root-cause set. A run that still has anomalies after
/// max_iterations is flagged incomplete, not an error.
AnomalyReport trca_agent(const SummaryGraph& g, const BinaryPanel& online, const Fixer& fixer, int max_iterations,
                         TieBreak tie_break = TieBreak::lexicographic, std::uint64_t seed = 0);

/// Fixer backed by a recorded generation trace: replays the online window
/// with the confirmed roots' interventions removed, so exactly the
/// anomalies attributable to them disappear.
Fixer make_reference_fixer(const TraceDoc& trace);

std::string report_to_json(const AnomalyReport& report);
AnomalyReport report_from_json(const std::string& text);
void save_report_json(const AnomalyReport& report, const std::string& path);

}  // namespace trca
