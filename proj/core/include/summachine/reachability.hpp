#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "summachine/configuration.hpp"
#include "summachine/relations.hpp"

namespace summachine {

/// Target state per constrained machine; omitted machines are unconstrained.
struct ReachQuery {
    std::map<MachineIndex, StateId> targets;
};

/// Node per machine; an invalid NodeId marks an unconstrained machine.
struct Configuration {
    std::vector<NodeId> components;

    friend bool operator==(const Configuration&, const Configuration&) = default;
};

enum class CertifyMode { pairwise, chain };

struct ReachOptions {
    CertifyMode mode = CertifyMode::pairwise;
    /// Candidates kept per machine before certification (0 = no cap).
    std::size_t candidate_cap = 64;
    /// Let chain mode decide the verdict on its own (experiments only).
    bool chain_authoritative = false;
    /// Run the per-machine local searches on worker threads.
    bool parallel_search = true;
};

struct CertifyStats {
    /// Distinct co_fast pair evaluations in the pairwise search.
    std::size_t pairwise_checks = 0;
    /// Distinct co_fast evaluations of consecutive pairs in chain mode.
    std::size_t chain_checks = 0;
    /// Checks spent verifying a chain witness on every pair.
    std::size_t chain_verify_checks = 0;
    std::size_t k_max = 0;
    std::size_t k_total = 0;
    CoCost cost;
    bool cap_truncated = false;
    bool cap_fallback = false;
    /// Chain and pairwise verdicts differed, or the chain witness failed a pair.
    bool chain_disagreement = false;
};

struct Verdict {
    bool reachable = false;
    std::optional<Configuration> witness;
    CertifyMode mode = CertifyMode::pairwise;
    /// Nodes matching the target per machine (cut-offs included).
    std::vector<std::size_t> local_matches;
    /// Candidates handed to certification per machine.
    std::vector<std::size_t> candidates;
    std::optional<bool> chain_reachable;
    CertifyStats stats;
};

/// All nodes of machine i with base `target`, depth-first order.
std::vector<NodeId> local_search(const SumMachine& sum, MachineIndex i, StateId target);

/// One candidate per row, pairwise concurrent (pairwise mode) or concurrent on
/// consecutive rows (chain mode). Rows belong to distinct machines. The first
/// satisfying assignment in row order is returned.
std::optional<std::vector<NodeId>> certify_concurrent(const SumMachine& sum,
                                                      const std::vector<std::vector<NodeId>>& rows,
                                                      CertifyMode mode, CertifyStats& stats);

/// Reachability of a set of acceptable states per machine (nullopt = any).
Verdict reachable_states(const SumMachine& sum,
                         const std::vector<std::optional<std::set<StateId>>>& accept,
                         const ReachOptions& options = {});

Verdict global_reachable(const SumMachine& sum, const ReachQuery& q,
                         const ReachOptions& options = {});

/// Named lookup: machine name -> state name. Throws QueryError on unknown names.
ReachQuery make_query(const SystemSpec& spec, const std::map<std::string, std::string>& targets);

struct TraceStep {
    std::vector<StateId> state;
    /// Firing that produced this state; absent for the first step.
    std::optional<Firing> via;
};

/// Interleaving from the initial configuration up to c, lowest machine first.
/// Throws IncompatibleStates if c is not pairwise concurrent.
std::vector<TraceStep> materialize_configuration(const SumMachine& sum, const Configuration& c);

struct Deadlock {
    Configuration configuration;
    std::vector<StateId> state;
};

/// Reachable global states with nothing enabled and some machine not in a
/// terminal state, one configuration each, found by a concurrency search over
/// non-cut-off nodes.
std::vector<Deadlock> list_deadlocks(const SumMachine& sum);

/// Env vectors of all dead leaves.
std::vector<Deadlock> dead_leaf_environments(const SumMachine& sum);

} // namespace summachine
