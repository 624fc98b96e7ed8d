#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "summachine/configuration.hpp"
#include "summachine/ctl.hpp"
#include "summachine/reachability.hpp"

namespace summachine {

/// Tree of one machine as a Kripke structure: parent->child edges, with every
/// cut-off leaf folded onto a same-fvec node of the tree (it gets that node's
/// children), or onto its lasso target when the tree has none. Local state k
/// is unfoldings[machine].nodes[k].
class LocalModel {
public:
    LocalModel(const SumMachine& sum, MachineIndex machine);

    [[nodiscard]] MachineIndex machine() const { return machine_; }
    [[nodiscard]] std::size_t local_index(NodeId id) const;
    [[nodiscard]] NodeId node_at(std::size_t k) const { return nodes_.at(k); }
    [[nodiscard]] const std::vector<std::vector<std::uint32_t>>& successors() const {
        return succ_;
    }

    /// Satisfaction per local state. Throws QueryError for undeclared
    /// propositions or atoms bound to another machine.
    [[nodiscard]] std::vector<char> evaluate(const Formula& f) const;

private:
    const SumMachine* sum_;
    MachineIndex machine_;
    std::vector<NodeId> nodes_;
    std::vector<std::vector<std::uint32_t>> succ_;
};

bool eval_local(const SumMachine& sum, NodeId s, const Formula& f);

enum class GlobalKind { atom_conj, ax_conj, af_conj };

/// One proposition per constrained machine.
struct GlobalForm {
    GlobalKind kind = GlobalKind::atom_conj;
    std::map<MachineIndex, std::string> propositions;
};

/// `conj-atoms F1:"B" F2:"Y"`, `conj-AX ...`, `conj-AF ...`.
GlobalForm parse_global_form(const SystemSpec& spec, std::string_view text);
std::string to_string(const SystemSpec& spec, const GlobalForm& g);

/// The equivalent product-level CTL formula: EF, AX or AF of the conjunction.
FormulaPtr product_formula(const SystemSpec& spec, const GlobalForm& g);

struct GlobalResult {
    bool holds = false;
    /// AtomConj: a certified configuration. AXConj: the first successor of
    /// the initial configuration. AFConj: the first goal configuration found.
    std::optional<Configuration> witness;
    /// The per-machine local conjunction as the equivalence is written,
    /// reported next to the exact verdict.
    bool local_conjunction = false;
    std::size_t configurations = 0;
    std::optional<Verdict> certification;
};

GlobalResult eval_global(const SumMachine& sum, const GlobalForm& g);

} // namespace summachine
