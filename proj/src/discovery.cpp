#include "discovery.hpp"

#include <algorithm>
#include <fstream>

#include "errors.hpp"
#include "parallel.hpp"

namespace trca {

namespace {

struct Candidate {
    std::string series;
    int lag;

    friend bool operator<(const Candidate& a, const Candidate& b) {
        return std::tie(a.series, a.lag) < std::tie(b.series, b.lag);
    }
};

// Lexicographic k-combinations of 0..n-1.
bool next_combination(std::vector<std::size_t>& idx, std::size_t n) {
    const std::size_t k = idx.size();
    for (std::size_t i = k; i-- > 0;) {
        if (idx[i] < n - (k - i)) {
            ++idx[i];
            for (std::size_t j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
            return true;
        }
    }
    return false;
}

struct TargetResult {
    std::vector<Candidate> parents;
    std::vector<CiAuditEntry> audit;
};

TargetResult search_target(const BinaryPanel& panel, const std::string& target, const DiscoveryConfig& cfg,
                           std::size_t max_cond, bool want_audit) {
    std::vector<Candidate> retained;
    for (const auto& name : panel.names) {
        if (name == target && !cfg.include_self_causes) continue;
        for (int lag = 1; lag <= cfg.gamma_max; ++lag) retained.push_back({name, lag});
    }
    std::sort(retained.begin(), retained.end());

    TargetResult result;
    for (std::size_t level = 0; level <= max_cond; ++level) {
        if (retained.size() <= level) break;  // not enough other candidates to condition on
        std::vector<bool> remove(retained.size(), false);
        for (std::size_t c = 0; c < retained.size(); ++c) {
            // PC-stable: conditioning sets come from the level-start
            // snapshot, and removals apply only after the level finishes.
            std::vector<std::size_t> others;
            for (std::size_t o = 0; o < retained.size(); ++o) {
                if (o != c) others.push_back(o);
            }
            if (others.size() < level) continue;
            std::vector<std::size_t> combo(level);
            for (std::size_t i = 0; i < level; ++i) combo[i] = i;
            bool more = true;
            while (more) {
                std::vector<LaggedVar> conditioning;
                conditioning.reserve(level);
                for (std::size_t i : combo) conditioning.push_back({retained[others[i]].series, retained[others[i]].lag});
                const ContingencyTable table =
                    align_lagged(panel, retained[c].series, retained[c].lag, target, 0, conditioning);
                const CiResult ci = gsquare(table, cfg.alpha);
                if (want_audit) {
                    CiAuditEntry entry;
                    entry.target = target;
                    entry.candidate = retained[c].series;
                    entry.lag = retained[c].lag;
                    entry.conditioning = conditioning;
                    entry.statistic = ci.statistic;
                    entry.dof = ci.dof;
                    entry.p_value = ci.p_value;
                    entry.independent = ci.independent;
                    result.audit.push_back(std::move(entry));
                }
                if (ci.independent) {
                    remove[c] = true;
                    break;
                }
                more = level > 0 && next_combination(combo, others.size());
            }
        }
        std::vector<Candidate> next;
        for (std::size_t c = 0; c < retained.size(); ++c) {
            if (!remove[c]) next.push_back(retained[c]);
        }
        retained = std::move(next);
    }
    result.parents = std::move(retained);
    return result;
}

}  // namespace

void DiscoveryConfig::validate() const {
    if (gamma_max < 1) throw_config("gamma_max must be >= 1");
    if (!(alpha > 0.0 && alpha < 1.0)) throw_config("alpha must be in (0,1)");
    if (max_condition_set_size < -1) throw_config("max_condition_set_size must be >= 0 (or -1 for unbounded)");
}

WindowGraph discover_window_graph(const BinaryPanel& panel, const DiscoveryConfig& cfg, int jobs,
                                  std::vector<CiAuditEntry>* audit) {
    cfg.validate();
    const std::size_t d = panel.series_count();
    if (d == 0) throw_data("empty panel");
    const std::size_t candidates_per_target = d * static_cast<std::size_t>(cfg.gamma_max) -
                                              (cfg.include_self_causes ? 0 : static_cast<std::size_t>(cfg.gamma_max));
    const std::size_t configured_cond = cfg.max_condition_set_size < 0
                                            ? (candidates_per_target > 0 ? candidates_per_target - 1 : 0)
                                            : static_cast<std::size_t>(cfg.max_condition_set_size);
    if (panel.length() <= static_cast<std::size_t>(cfg.gamma_max) + configured_cond + 1) {
        throw_data("insufficient samples: need T > gamma_max + max_condition_set_size + 1, got T = " +
                   std::to_string(panel.length()));
    }
    std::size_t max_cond = configured_cond;
    if (candidates_per_target > 0) max_cond = std::min(max_cond, candidates_per_target - 1);

    std::vector<TargetResult> per_target(d);
    parallel_for(d, jobs, [&](std::size_t i) {
        per_target[i] = search_target(panel, panel.names[i], cfg, max_cond, audit != nullptr);
    });

    std::vector<std::string> vertices = panel.names;
    std::vector<LaggedEdge> edges;
    for (std::size_t i = 0; i < d; ++i) {
        for (const auto& parent : per_target[i].parents) {
            edges.push_back({parent.series, parent.lag, panel.names[i]});
        }
        if (audit) {
            audit->insert(audit->end(), per_target[i].audit.begin(), per_target[i].audit.end());
        }
    }
    return make_window_graph(std::move(vertices), std::move(edges), cfg.gamma_max);
}

SummaryGraph discover_summary(const BinaryPanel& panel, const DiscoveryConfig& cfg, int jobs,
                              std::vector<CiAuditEntry>* audit) {
    return collapse_to_summary(discover_window_graph(panel, cfg, jobs, audit));
}

void write_audit_log(const std::vector<CiAuditEntry>& entries, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw_io("cannot open \"" + path + "\" for writing");
    out << "# target candidate lag conditioning statistic dof p_value decision\n";
    for (const auto& e : entries) {
        out << e.target << " " << e.candidate << " " << e.lag << " {";
        for (std::size_t i = 0; i < e.conditioning.size(); ++i) {
            if (i) out << ",";
            out << e.conditioning[i].series << "@" << e.conditioning[i].lag;
        }
        out << "} " << format_double(e.statistic) << " " << e.dof << " " << format_double(e.p_value) << " "
            << (e.independent ? "remove" : "keep") << "\n";
    }
    if (!out) throw_io("write to \"" + path + "\" failed");
}

}  // namespace trca
