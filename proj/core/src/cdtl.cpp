#include "summachine/cdtl.hpp"

#include <algorithm>
#include <map>
#include <sstream>

#include "summachine/error.hpp"

namespace summachine {

LocalModel::LocalModel(const SumMachine& sum, MachineIndex machine)
    : sum_{&sum}, machine_{machine} {
    if (machine >= sum.machine_count())
        throw QueryError("machine index out of range");
    nodes_ = sum.unfoldings[machine].nodes;
    succ_.resize(nodes_.size());
    // A cut-off leaf takes over the successors of a node in this tree with the
    // same global state (same future). Without one, the lasso target is used.
    std::map<std::vector<StateId>, NodeId> same_state;
    for (NodeId id : nodes_)
        if (!sum.node(id).cutoff)
            same_state.try_emplace(sum.fvec(id), id);
    for (std::size_t k = 0; k < nodes_.size(); ++k) {
        const Node& n = sum.node(nodes_[k]);
        NodeId from = nodes_[k];
        if (n.cutoff) {
            auto it = same_state.find(sum.fvec(from));
            from = it != same_state.end() ? it->second : sum.lasso_target(from);
        }
        for (NodeId c : sum.node(from).children)
            succ_[k].push_back(static_cast<std::uint32_t>(local_index(c)));
    }
}

std::size_t LocalModel::local_index(NodeId id) const {
    // nodes_ is sorted: node ids of one machine are contiguous and ascending
    auto it = std::lower_bound(nodes_.begin(), nodes_.end(), id);
    if (it == nodes_.end() || *it != id)
        throw QueryError("node does not belong to machine " + sum_->machine_name(machine_));
    return static_cast<std::size_t>(it - nodes_.begin());
}

std::vector<char> LocalModel::evaluate(const Formula& f) const {
    const CfsmSpec& m = sum_->spec.machines[machine_];
    KripkeView view;
    view.states = nodes_.size();
    view.successors = &succ_;
    view.atom = [&](std::uint32_t k, const Formula& a) {
        return m.has_label(sum_->node(nodes_[k]).base, a.proposition);
    };
    // Resolve atoms up front so errors do not depend on the tree's shape.
    std::vector<const Formula*> stack{&f};
    while (!stack.empty()) {
        const Formula* g = stack.back();
        stack.pop_back();
        if (g->op == CtlOp::atom) {
            if (g->machine && *g->machine != m.name)
                throw QueryError("atom " + to_string(*g) + " is bound to another machine than " +
                                 m.name);
            if (!m.declares(g->proposition))
                throw QueryError("proposition '" + g->proposition + "' is not declared by " +
                                 m.name);
        }
        if (g->lhs)
            stack.push_back(g->lhs.get());
        if (g->rhs)
            stack.push_back(g->rhs.get());
    }
    return summachine::evaluate(view, f);
}

bool eval_local(const SumMachine& sum, NodeId s, const Formula& f) {
    LocalModel model{sum, sum.node(s).machine};
    return model.evaluate(f).at(model.local_index(s)) != 0;
}

GlobalForm parse_global_form(const SystemSpec& spec, std::string_view text) {
    std::istringstream in{std::string{text}};
    std::string head;
    in >> head;
    GlobalForm g;
    if (head == "conj-atoms")
        g.kind = GlobalKind::atom_conj;
    else if (head == "conj-AX")
        g.kind = GlobalKind::ax_conj;
    else if (head == "conj-AF")
        g.kind = GlobalKind::af_conj;
    else
        throw ParseError("expected conj-atoms, conj-AX or conj-AF", 1, 1);
    std::string item;
    while (in >> item) {
        const auto colon = item.find(':');
        if (colon == std::string::npos || colon == 0 || colon + 1 == item.size())
            throw ParseError("expected MACHINE:\"proposition\", got '" + item + "'", 1, 1);
        const std::string machine = item.substr(0, colon);
        std::string prop = item.substr(colon + 1);
        if (prop.size() >= 2 && prop.front() == '"' && prop.back() == '"')
            prop = prop.substr(1, prop.size() - 2);
        auto i = spec.find_machine(machine);
        if (!i)
            throw QueryError("unknown machine '" + machine + "'");
        if (!spec.machines[*i].declares(prop))
            throw QueryError("proposition '" + prop + "' is not declared by " + machine);
        if (!g.propositions.emplace(*i, prop).second)
            throw QueryError("machine " + machine + " constrained twice");
    }
    return g;
}

std::string to_string(const SystemSpec& spec, const GlobalForm& g) {
    std::string s = g.kind == GlobalKind::atom_conj ? "conj-atoms"
                    : g.kind == GlobalKind::ax_conj ? "conj-AX"
                                                    : "conj-AF";
    for (const auto& [i, p] : g.propositions)
        s += " " + spec.machines.at(i).name + ":\"" + p + "\"";
    return s;
}

FormulaPtr product_formula(const SystemSpec& spec, const GlobalForm& g) {
    FormulaPtr goal;
    for (const auto& [i, p] : g.propositions) {
        auto a = ctl::atom(p, spec.machines.at(i).name);
        goal = goal ? ctl::binary(CtlOp::and_, goal, a) : a;
    }
    if (!goal)
        goal = ctl::top();
    switch (g.kind) {
    case GlobalKind::atom_conj: return ctl::unary(CtlOp::EF, goal);
    case GlobalKind::ax_conj: return ctl::unary(CtlOp::AX, goal);
    case GlobalKind::af_conj: return ctl::unary(CtlOp::AF, goal);
    }
    return goal;
}

namespace {

std::vector<std::optional<std::set<StateId>>> accept_sets(const SumMachine& sum,
                                                          const GlobalForm& g) {
    std::vector<std::optional<std::set<StateId>>> accept(sum.machine_count());
    for (const auto& [i, p] : g.propositions) {
        const CfsmSpec& m = sum.spec.machines.at(i);
        std::set<StateId> states;
        for (std::size_t s = 0; s < m.state_count(); ++s)
            if (m.has_label(StateId{s}, p))
                states.insert(StateId{s});
        accept[i] = std::move(states);
    }
    return accept;
}

// Pairwise-concurrent choice of one node per constrained machine from `rows`.
bool assignable(const SumMachine& sum, const std::vector<std::vector<NodeId>>& rows) {
    CertifyStats stats;
    return certify_concurrent(sum, rows, CertifyMode::pairwise, stats).has_value();
}

bool literal_conjunction(const SumMachine& sum, const GlobalForm& g) {
    std::vector<std::vector<NodeId>> rows;
    for (const auto& [i, p] : g.propositions) {
        const CfsmSpec& m = sum.spec.machines[i];
        const NodeId root = sum.root(i);
        std::vector<NodeId> row;
        if (g.kind == GlobalKind::ax_conj) {
            for (NodeId c : sum.node(root).children) {
                if (!m.has_label(sum.node(c).base, p))
                    return false;
                row.push_back(c);
            }
        } else {
            LocalModel model{sum, i};
            if (!model.evaluate(*ctl::unary(CtlOp::AF, ctl::atom(p)))[0])
                return false;
            for (NodeId id : sum.unfoldings[i].nodes)
                if (id != root && !sum.node(id).cutoff && m.has_label(sum.node(id).base, p))
                    row.push_back(id);
        }
        rows.push_back(std::move(row));
    }
    return assignable(sum, rows);
}

} // namespace

GlobalResult eval_global(const SumMachine& sum, const GlobalForm& g) {
    for (const auto& [i, p] : g.propositions) {
        if (i >= sum.machine_count())
            throw QueryError("machine index out of range in global form");
        if (!sum.spec.machines[i].declares(p))
            throw QueryError("proposition '" + p + "' is not declared by " + sum.machine_name(i));
    }

    GlobalResult r;
    if (g.kind == GlobalKind::atom_conj) {
        Verdict v = reachable_states(sum, accept_sets(sum, g));
        r.holds = v.reachable;
        r.witness = v.witness;
        r.local_conjunction = v.reachable;
        r.certification = std::move(v);
        return r;
    }

    const ConfigurationGraph graph = explore_configurations(sum);
    if (graph.truncated)
        throw LimitExceeded("configuration exploration exceeded its bound");
    r.configurations = graph.cuts.size();

    KripkeView view;
    view.states = graph.cuts.size();
    view.successors = &graph.successors;
    view.atom = [&](std::uint32_t s, const Formula& a) {
        const MachineIndex i = *sum.spec.find_machine(*a.machine);
        return sum.spec.machines[i].has_label(sum.node(graph.cuts[s][i]).base, a.proposition);
    };
    const FormulaPtr f = product_formula(sum.spec, g);
    r.holds = evaluate(view, *f)[0] != 0;

    if (g.kind == GlobalKind::ax_conj) {
        if (!graph.successors[0].empty())
            r.witness = Configuration{graph.cuts[graph.successors[0].front()]};
    } else {
        const auto goal = evaluate(view, *f->lhs);
        for (std::size_t s = 0; s < goal.size(); ++s)
            if (goal[s]) {
                r.witness = Configuration{graph.cuts[s]};
                break;
            }
    }
    r.local_conjunction = literal_conjunction(sum, g);
    return r;
}

} // namespace summachine
