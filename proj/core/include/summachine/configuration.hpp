#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "summachine/unfolding.hpp"

namespace summachine {

/// One node per machine. A cut of pairwise concurrent nodes is a configuration
/// frontier; its fvec is a reachable global state.
using Cut = std::vector<NodeId>;

enum class FiringKind { async, sync };

/// One step between cuts: an async child in machine i, or a rendezvous pair
/// (child_i in i, child_j in j) with i < j.
struct Firing {
    FiringKind kind = FiringKind::async;
    MachineIndex i = 0;
    MachineIndex j = 0;
    NodeId child_i;
    NodeId child_j;

    friend bool operator==(const Firing&, const Firing&) = default;
};

/// The dynamic configurations of a sum machine: cuts, the firings enabled at
/// them, and folding of cuts that run into a cut-off back onto a cut-off-free
/// cut with the same global state.
class ConfigurationSpace {
public:
    explicit ConfigurationSpace(const SumMachine& sum) : sum_{&sum} {}

    [[nodiscard]] const SumMachine& sum() const { return *sum_; }
    [[nodiscard]] Cut initial() const;
    [[nodiscard]] std::vector<StateId> fvec(const Cut& c) const;
    [[nodiscard]] bool cutoff_free(const Cut& c) const;

    /// Children of cut nodes whose inputs all lie on the cut.
    [[nodiscard]] std::vector<Firing> enabled(const Cut& c) const;
    [[nodiscard]] Cut apply(const Cut& c, const Firing& f) const;
    /// A cut-off-free cut with the same fvec. A cut-off node is replaced by its
    /// matching earlier node and the remaining firings are replayed by transition.
    [[nodiscard]] Cut normalize(Cut c) const;
    /// apply() followed by normalize().
    [[nodiscard]] Cut step(const Cut& c, const Firing& f) const;

    /// Firings leading from `from` to `to` (every to[k] a tree descendant of
    /// from[k]); lowest machine index first. Throws IncompatibleStates if `to`
    /// is not reachable from `from`.
    [[nodiscard]] std::vector<Firing> path_between(const Cut& from, const Cut& to) const;

    /// Action name and machines of a firing, e.g. "ping(F1,F2)".
    [[nodiscard]] std::string describe(const Firing& f) const;
    [[nodiscard]] const std::string& action(const Firing& f) const;

private:
    const SumMachine* sum_;
};

/// Every cut-off-free cut reachable from the initial one, with the folded
/// firing relation. cuts[0] is the initial cut.
struct ConfigurationGraph {
    std::vector<Cut> cuts;
    std::vector<std::vector<std::uint32_t>> successors;
    std::vector<std::vector<Firing>> firings;
    bool truncated = false;
};

ConfigurationGraph explore_configurations(const SumMachine& sum, std::size_t bound = 1000000);

/// Smallest cut above all the given nodes: componentwise the deepest env entry.
/// Throws IncompatibleStates when two env entries are in local conflict.
Cut closure_cut(const SumMachine& sum, std::span<const NodeId> nodes);

} // namespace summachine
