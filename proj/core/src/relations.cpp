#include "summachine/relations.hpp"

#include <algorithm>
#include <ostream>

#include "summachine/error.hpp"

namespace summachine {

std::string_view to_string(RelationKind k) {
    switch (k) {
    case RelationKind::seq_forward: return "seq_forward";
    case RelationKind::seq_backward: return "seq_backward";
    case RelationKind::conf: return "conf";
    case RelationKind::co: return "co";
    case RelationKind::identity: return "identity";
    }
    return "?";
}

namespace {

// Parent-link walk from b up to a's depth; counts steps.
bool walk_reaches(const SumMachine& sum, NodeId a, NodeId b, std::size_t& steps) {
    const Node& na = sum.node(a);
    if (na.machine != sum.node(b).machine)
        return false;
    while (sum.node(b).depth > na.depth) {
        b = sum.node(b).parent;
        ++steps;
    }
    return a == b;
}

bool anchors(const SumMachine& sum, NodeId s_i, NodeId s_j, CoCost* cost) {
    const Node& a = sum.node(s_i);
    const Node& b = sum.node(s_j);
    if (a.machine == b.machine)
        throw PreconditionError("concurrency is only defined across machines");
    std::size_t steps = 0;
    const bool ok = walk_reaches(sum, b.env[a.machine], s_i, steps) &&
                    walk_reaches(sum, a.env[b.machine], s_j, steps);
    if (cost) {
        ++cost->calls;
        cost->anchor_steps += steps;
        cost->max_call_steps = std::max(cost->max_call_steps, steps);
    }
    return ok;
}

} // namespace

bool co_anchor(const SumMachine& sum, NodeId s_i, NodeId s_j, CoCost* cost) {
    return anchors(sum, s_i, s_j, cost);
}

bool co_fast(const SumMachine& sum, NodeId s_i, NodeId s_j, CoCost* cost) {
    if (!anchors(sum, s_i, s_j, cost))
        return false;
    const Node& a = sum.node(s_i);
    const Node& b = sum.node(s_j);
    for (std::size_t k = 0; k < a.env.size(); ++k) {
        if (k == a.machine || k == b.machine)
            continue;
        if (cost)
            ++cost->interval_checks;
        if (!sum.tree_comparable(a.env[k], b.env[k]))
            return false;
    }
    return true;
}

Relations::Relations(const SumMachine& sum) : sum_{&sum} {
    const std::size_t count = sum.nodes.size();

    // Rendezvous outputs are simultaneous, and so are the initial nodes:
    // contract each such group into one class.
    constexpr std::uint32_t unset = UINT32_MAX;
    klass_.assign(count, unset);
    std::uint32_t classes = 0;
    for (const auto& u : sum.unfoldings)
        klass_[u.root.index()] = 0;
    if (!sum.unfoldings.empty())
        classes = 1;
    for (std::size_t id = 0; id < count; ++id) {
        if (klass_[id] != unset)
            continue;
        const Node& n = sum.nodes[id];
        klass_[id] = classes;
        if (n.sync_partner)
            klass_[n.sync_partner.index()] = classes;
        ++classes;
    }
    words_ = (classes + 63) / 64;
    below_.assign(classes * words_, 0);

    // Kahn order over the contracted parent->child DAG.
    std::vector<std::vector<std::uint32_t>> preds(classes);
    std::vector<std::vector<std::uint32_t>> succs(classes);
    for (std::size_t id = 0; id < count; ++id) {
        const Node& n = sum.nodes[id];
        if (!n.parent)
            continue;
        const std::uint32_t p = klass_[n.parent.index()];
        const std::uint32_t c = klass_[id];
        preds[c].push_back(p);
        succs[p].push_back(c);
    }
    std::vector<std::size_t> indeg(classes);
    std::vector<std::uint32_t> ready;
    for (std::uint32_t c = 0; c < classes; ++c) {
        indeg[c] = preds[c].size();
        if (indeg[c] == 0)
            ready.push_back(c);
    }
    std::size_t done = 0;
    while (!ready.empty()) {
        const std::uint32_t c = ready.back();
        ready.pop_back();
        ++done;
        std::uint64_t* row = &below_[c * words_];
        row[c / 64] |= std::uint64_t{1} << (c % 64);
        for (std::uint32_t p : preds[c]) {
            const std::uint64_t* prow = &below_[p * words_];
            for (std::size_t w = 0; w < words_; ++w)
                row[w] |= prow[w];
        }
        for (std::uint32_t s : succs[c])
            if (--indeg[s] == 0)
                ready.push_back(s);
    }
    if (done != classes)
        throw Error("causality relation has a cycle");

    // Per node and machine, the maximal elements of its causal past. The past
    // is closed under tree ancestors, so a pruned DFS from the root finds it.
    frontier_.assign(count, std::vector<std::vector<NodeId>>(sum.machine_count()));
    for (std::size_t x = 0; x < count; ++x) {
        for (std::size_t k = 0; k < sum.machine_count(); ++k) {
            auto& out = frontier_[x][k];
            const NodeId root = sum.root(k);
            if (!leq(root, NodeId{x}))
                continue;
            std::vector<NodeId> stack{root};
            while (!stack.empty()) {
                const NodeId y = stack.back();
                stack.pop_back();
                bool extended = false;
                for (NodeId c : sum.node(y).children) {
                    if (leq(c, NodeId{x})) {
                        stack.push_back(c);
                        extended = true;
                    }
                }
                if (!extended)
                    out.push_back(y);
            }
            std::sort(out.begin(), out.end());
        }
    }
}

bool Relations::leq(NodeId s, NodeId t) const {
    return class_leq(klass_.at(s.index()), klass_.at(t.index()));
}

bool Relations::leq_by_env(NodeId s, NodeId t) const {
    const Node& ns = sum_->node(s);
    return sum_->is_tree_ancestor(s, sum_->node(t).env.at(ns.machine));
}

bool Relations::seq_rel(NodeId s, NodeId t) const {
    for (NodeId c : sum_->node(s).children)
        if (leq(c, t))
            return true;
    return false;
}

bool Relations::conf_rel(NodeId s, NodeId t) const {
    if (s == t)
        return false;
    const Node& a = sum_->node(s);
    const Node& b = sum_->node(t);
    if (a.machine == b.machine)
        return !sum_->tree_comparable(s, t);
    // s'_k ≤ s and s''_k ≤ t in conflict iff two of the past maxima are.
    for (std::size_t k = 0; k < sum_->machine_count(); ++k)
        for (NodeId x : past_frontier(s, k))
            for (NodeId y : past_frontier(t, k))
                if (!sum_->tree_comparable(x, y))
                    return true;
    return false;
}

bool Relations::co_definitional(NodeId s, NodeId t) const {
    if (sum_->node(s).machine == sum_->node(t).machine)
        throw PreconditionError("concurrency is only defined across machines");
    return !seq_rel(s, t) && !seq_rel(t, s) && !conf_rel(s, t);
}

std::span<const NodeId> Relations::past_frontier(NodeId x, MachineIndex k) const {
    return frontier_.at(x.index()).at(k);
}

PairClassification Relations::classify_detail(NodeId s, NodeId t) const {
    PairClassification out;
    if (s == t)
        return out;
    out.seq_forward = seq_rel(s, t);
    out.seq_backward = seq_rel(t, s);
    out.conf = conf_rel(s, t);
    out.co = sum_->node(s).machine != sum_->node(t).machine && co_definitional(s, t);
    const int held = int{out.seq_forward} + int{out.seq_backward} + int{out.conf} + int{out.co};
    out.overlap = held > 1;
    if (out.seq_forward)
        out.kind = RelationKind::seq_forward;
    else if (out.seq_backward)
        out.kind = RelationKind::seq_backward;
    else if (out.conf)
        out.kind = RelationKind::conf;
    else if (out.co)
        out.kind = RelationKind::co;
    else
        out.kind = RelationKind::identity; // uncovered; callers test held == 0
    return out;
}

void Relations::write_tsv(std::ostream& os) const {
    const SumMachine& sum = *sum_;
    auto name = [&](NodeId id) {
        return sum.machine_name(sum.node(id).machine) + ":" + sum.node_name(id);
    };
    for (std::size_t a = 0; a < sum.nodes.size(); ++a)
        for (std::size_t b = 0; b < sum.nodes.size(); ++b) {
            if (a == b)
                continue;
            os << name(NodeId{a}) << '\t' << name(NodeId{b}) << '\t'
               << to_string(classify_pair(NodeId{a}, NodeId{b})) << '\n';
        }
}

} // namespace summachine
