#pragma once

#include <string>
#include <vector>

#include "citest.hpp"
#include "graph.hpp"
#include "timeseries.hpp"

namespace trca {

struct DiscoveryConfig {
    int gamma_max = 1;
    double alpha = 0.01;
    int max_condition_set_size = 3;  // -1 = unbounded
    bool include_self_causes = true;

    void validate() const;  // throws config errors
};

/// One line of the optional discovery audit log: every CI test run, in
/// deterministic (target-major) order.
struct CiAuditEntry {
    std::string target;
    std::string candidate;
    int lag = 1;
    std::vector<LaggedVar> conditioning;
    double statistic = 0.0;
    std::uint32_t dof = 0;
    double p_value = 1.0;
    bool independent = false;
};

/// Constraint-based search over lagged candidates, one target series at a
/// time. Starts from the complete candidate set {(X, gamma)}; candidates
/// found independent of the target given some subset of the other
/// currently-retained candidates are removed, with removals batched per
/// conditioning-set size so the result does not depend on iteration
/// order. Retained candidates become edges oriented forward in time.
/// Targets are independent work units and run in parallel when jobs != 1;
/// the output is deterministic either way.
WindowGraph discover_window_graph(const BinaryPanel& panel, const DiscoveryConfig& cfg, int jobs = 0,
                                  std::vector<CiAuditEntry>* audit = nullptr);

SummaryGraph discover_summary(const BinaryPanel& panel, const DiscoveryConfig& cfg, int jobs = 0,
                              std::vector<CiAuditEntry>* audit = nullptr);

void write_audit_log(const std::vector<CiAuditEntry>& entries, const std::string& path);

}  // namespace trca
