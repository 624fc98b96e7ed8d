#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "summachine/configuration.hpp"
#include "summachine/ctl.hpp"
#include "summachine/reachability.hpp"

namespace summachine {

/// Product transition. Async: t_j is invalid and j == i. Sync: i < j.
struct ProductEdge {
    std::uint32_t from = 0;
    std::uint32_t to = 0;
    FiringKind kind = FiringKind::async;
    MachineIndex i = 0;
    MachineIndex j = 0;
    TransitionId t_i;
    TransitionId t_j;
};

/// Explicit interleaving product, reference only. State 0 is the initial vector.
class ProductMachine {
public:
    SystemSpec spec;
    std::vector<ProductEdge> edges;
    /// Edge indices leaving each state.
    std::vector<std::vector<std::uint32_t>> out;
    bool truncated = false;

    [[nodiscard]] std::size_t state_count() const { return out.size(); }
    [[nodiscard]] std::span<const StateId> state(std::uint32_t s) const {
        return {flat_.data() + std::size_t{s} * width_, width_};
    }
    [[nodiscard]] std::vector<StateId> state_vector(std::uint32_t s) const {
        auto v = state(s);
        return {v.begin(), v.end()};
    }
    [[nodiscard]] std::optional<std::uint32_t> find(std::span<const StateId> v) const;
    [[nodiscard]] const std::string& action(const ProductEdge& e) const {
        return spec.machines[e.i].transition(e.t_i).action.name;
    }
    /// Successor state lists, for the CTL engine.
    [[nodiscard]] std::vector<std::vector<std::uint32_t>> successor_table() const;

private:
    friend ProductMachine build_product(const SystemSpec&, std::size_t);
    std::size_t width_ = 0;
    std::vector<StateId> flat_;
    std::vector<std::uint64_t> radix_;
    std::unordered_map<std::uint64_t, std::uint32_t> index_;

    [[nodiscard]] std::uint64_t key(std::span<const StateId> v) const;
    std::uint32_t intern(std::span<const StateId> v, bool& fresh);
};

/// Breadth-first product construction, stopping once `bound` states exist.
ProductMachine build_product(const SystemSpec& spec, std::size_t bound = 1000000);

struct ProductAnswer {
    bool reachable = false;
    /// False when the product was truncated and the answer is only a lower bound.
    bool authoritative = true;
};

ProductAnswer product_reachable(const ProductMachine& pm, const ReachQuery& q);

/// Satisfaction at every product state. Atoms must name a machine unless the
/// system has one machine. Throws LimitExceeded on a truncated product.
std::vector<char> eval_ctl_all(const ProductMachine& pm, const Formula& f);
bool eval_ctl(const ProductMachine& pm, const Formula& f);

/// States with no outgoing edge and some component not terminal.
std::vector<std::vector<StateId>> product_deadlocks(const ProductMachine& pm);

/// Longest shortest path from the initial state.
std::size_t product_diameter(const ProductMachine& pm);

struct BisimulationReport {
    std::vector<std::string> violations;
    std::size_t configurations = 0;
    std::size_t product_states = 0;
    /// Distinct global states among the configurations.
    std::size_t classes = 0;
    std::size_t pairs_checked = 0;

    [[nodiscard]] bool ok() const { return violations.empty(); }
};

/// Relates every cut-off-free configuration to the product state with the same
/// fvec and checks labels, forward and backward step matching, coverage of the
/// product, and that each component's env lies below the configuration.
BisimulationReport check_bisimulation(const ProductMachine& pm, const SumMachine& sum,
                                      std::size_t bound = 1000000);

struct LassoReport {
    std::vector<std::string> violations;
    /// (product state, configuration) pairs visited.
    std::size_t pairs = 0;
    /// Steps that ran into a cut-off and were folded back.
    std::size_t folds = 0;
    std::size_t depth = 0;

    [[nodiscard]] bool ok() const { return violations.empty(); }
};

/// Follows every product path of length <= max_length (default: the product
/// diameter, but at least 1) in lockstep with configuration steps.
LassoReport check_lasso_paths(const ProductMachine& pm, const SumMachine& sum,
                              std::optional<std::size_t> max_length = std::nullopt);

} // namespace summachine
