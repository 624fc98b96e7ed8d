#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "summachine/ids.hpp"
#include "summachine/system_spec.hpp"

namespace summachine {

enum class NodeKind { initial, async_output, sync_output };

/// One unfolded state: an instance of a CFSM state inside machine `machine`'s tree.
struct Node {
    MachineIndex machine = 0;
    StateId base;
    std::uint32_t instance = 0;
    /// Environment vector: env[machine] is this node, env[k] the latest
    /// synchronisation point of machine k that must be entered first.
    std::vector<NodeId> env;
    NodeId parent;
    TransitionId via;
    NodeKind kind = NodeKind::initial;
    NodeId sync_partner;
    bool cutoff = false;
    /// Earlier node whose env projects to the same state vector (set iff cutoff).
    NodeId cutoff_match;
    bool dead = false;
    std::uint32_t depth = 0;
    std::vector<NodeId> children;

    [[nodiscard]] bool is_leaf() const { return children.empty(); }
};

/// The tree of one machine.
struct Unfolding {
    MachineIndex machine = 0;
    NodeId root;
    /// All nodes of this tree, root first, parents before children.
    std::vector<NodeId> nodes;
};

struct MachineStats {
    std::size_t nodes = 0;
    std::size_t cutoffs = 0;
    std::size_t dead = 0;
    std::size_t terminal = 0;
    std::size_t depth = 0;
};

struct SumMachineStats {
    std::vector<MachineStats> machines;
    std::size_t total_nodes = 0;
    std::size_t total_cutoffs = 0;
    std::size_t total_dead = 0;
    std::size_t max_depth = 0;
    /// max over machines of nodes / N_f
    double coupling_factor = 0.0;
};

/// n unfolded trees plus the cross-tree synchronisation relation. Immutable
/// after unfold() returns; the members are public so test harnesses can build
/// mutated copies (call rebuild_indices() afterwards).
class SumMachine {
public:
    SystemSpec spec;
    std::vector<Node> nodes;
    std::vector<Unfolding> unfoldings;
    SumMachineStats stats;

    [[nodiscard]] std::size_t machine_count() const { return unfoldings.size(); }
    [[nodiscard]] const Node& node(NodeId id) const { return nodes.at(id.index()); }
    [[nodiscard]] NodeId root(MachineIndex i) const { return unfoldings.at(i).root; }

    /// a is a (reflexive) R_i* ancestor of b. O(1) via preorder intervals.
    [[nodiscard]] bool is_tree_ancestor(NodeId a, NodeId b) const;
    [[nodiscard]] bool tree_comparable(NodeId a, NodeId b) const {
        return is_tree_ancestor(a, b) || is_tree_ancestor(b, a);
    }

    /// fvec(env(s)): the CFSM state vector of the node's environment.
    [[nodiscard]] std::vector<StateId> fvec(NodeId s) const;
    /// Back-edge target of a cut-off leaf inside its own tree.
    [[nodiscard]] NodeId lasso_target(NodeId cutoff_node) const;
    /// Human-readable name: "<state>.<instance>".
    [[nodiscard]] std::string node_name(NodeId id) const;
    [[nodiscard]] const std::string& machine_name(MachineIndex i) const {
        return spec.machines.at(i).name;
    }

    /// Recomputes preorder intervals and stats from `nodes`/`unfoldings`.
    void rebuild_indices();

private:
    std::vector<std::uint32_t> tin_;
    std::vector<std::uint32_t> tout_;
};

/// fvec over an arbitrary vector of nodes (instance numbers dropped).
std::vector<StateId> fvec_of(const SumMachine& sum, std::span<const NodeId> env);

struct UnfoldLimits {
    std::size_t max_nodes = 100000; // per machine
    std::size_t max_depth = 500;
};

enum class UnfoldMode { sequential, parallel };

/// Which earlier node a repeated global state is matched against.
/// ancestor: a strict tree ancestor. lightest: any node with a strictly
/// smaller local configuration, in any tree.
enum class CutoffPolicy { lightest, ancestor };

struct UnfoldOptions {
    UnfoldLimits limits;
    UnfoldMode mode = UnfoldMode::sequential;
    CutoffPolicy cutoff = CutoffPolicy::lightest;
    /// Worker cap for parallel mode; 0 means one per machine, further capped by
    /// the SUMMACHINE_THREADS environment variable.
    std::size_t threads = 0;
};

/// A pending rendezvous: node `pending_node` of machine `from_machine` waits to
/// fire sync transition `pending_transition` with machine `to_machine`.
struct WaitlistEntry {
    MachineIndex from_machine = 0;
    MachineIndex to_machine = 0;
    NodeId pending_node;
    TransitionId pending_transition;
};

/// Incremental sum-machine construction. unfold() drives it; tests use the
/// step operations directly.
class SumMachineBuilder {
public:
    explicit SumMachineBuilder(SystemSpec spec, UnfoldLimits limits = {},
                               CutoffPolicy policy = CutoffPolicy::lightest);

    [[nodiscard]] const SystemSpec& spec() const { return spec_; }
    [[nodiscard]] std::size_t machine_count() const { return spec_.size(); }
    [[nodiscard]] NodeId root(MachineIndex i) const { return roots_.at(i); }
    [[nodiscard]] const Node& node(NodeId id) const { return nodes_.at(id.index()); }
    [[nodiscard]] std::size_t node_count() const { return nodes_.size(); }

    /// Async successor; inherits env, replaces its own component.
    NodeId gen_next_async(NodeId s, TransitionId t);
    /// Rendezvous successors of s_i and s_j; env components of third machines
    /// are merged with desc(). Throws IncompatibleStates if the two inputs
    /// cannot co-exist.
    std::pair<NodeId, NodeId> gen_next_sync(NodeId s_i, NodeId s_j, TransitionId t_i,
                                            TransitionId t_j);

    /// Whichever of a, b is the R_k* descendant of the other.
    [[nodiscard]] NodeId desc(NodeId a, NodeId b) const;
    /// a is an ancestor-or-self of b, by walking parent links from b.
    [[nodiscard]] bool tree_reaches(NodeId a, NodeId b) const;
    /// The two nodes may rendezvous: each one's env anchors the other's own
    /// component, and every third component is R_k*-comparable.
    [[nodiscard]] bool is_sync_compatible(NodeId s_i, NodeId s_j) const;
    /// Some node built so far has the same fvec(env) and a strictly smaller
    /// local configuration (see weight()); under the ancestor policy that
    /// node must be a strict tree ancestor.
    [[nodiscard]] bool is_cutoff(NodeId s) const;
    /// Re-evaluates the cut-off flag of s (and its rendezvous partner) against
    /// the nodes built so far. Drivers call it once every lighter node exists.
    void settle_cutoff(NodeId s);
    /// Size of the local configuration: sum of tree depths over env.
    [[nodiscard]] std::uint32_t weight(NodeId s) const { return weight_.at(s.index()); }
    [[nodiscard]] std::vector<StateId> fvec(NodeId s) const;

    /// Canonicalises numbering, marks dead leaves and computes stats.
    SumMachine finish() &&;

private:
    SystemSpec spec_;
    UnfoldLimits limits_;
    CutoffPolicy policy_;
    std::vector<Node> nodes_;
    std::vector<NodeId> roots_;
    std::vector<std::size_t> machine_sizes_;
    std::vector<std::vector<std::uint32_t>> next_instance_;
    std::vector<std::uint32_t> weight_;
    // lightest node per global state
    std::map<std::vector<StateId>, std::pair<std::uint32_t, NodeId>> lightest_;

    NodeId new_node(MachineIndex i, StateId base, NodeId parent, TransitionId via, NodeKind kind);
    [[nodiscard]] NodeId find_cutoff_match(NodeId s) const;
    void register_node(NodeId s);
    void check_transition(NodeId s, TransitionId t, bool want_sync) const;
};

/// Builds the sum machine of a valid system. Sequential and parallel modes
/// produce identical (canonically numbered) results. Throws LimitExceeded.
SumMachine unfold(const SystemSpec& spec, const UnfoldOptions& options = {});

/// Worker count actually used for `requested` and n machines.
std::size_t effective_threads(std::size_t requested, std::size_t machines);

} // namespace summachine
