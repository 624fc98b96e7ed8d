#include "summachine/configuration.hpp"

#include <unordered_map>

#include "summachine/error.hpp"

namespace summachine {

Cut ConfigurationSpace::initial() const {
    Cut c;
    for (const auto& u : sum_->unfoldings)
        c.push_back(u.root);
    return c;
}

std::vector<StateId> ConfigurationSpace::fvec(const Cut& c) const {
    return fvec_of(*sum_, c);
}

bool ConfigurationSpace::cutoff_free(const Cut& c) const {
    for (NodeId id : c)
        if (sum_->node(id).cutoff)
            return false;
    return true;
}

std::vector<Firing> ConfigurationSpace::enabled(const Cut& c) const {
    std::vector<Firing> out;
    for (std::size_t i = 0; i < c.size(); ++i) {
        for (NodeId child : sum_->node(c[i]).children) {
            const Node& n = sum_->node(child);
            if (!n.sync_partner) {
                out.push_back({FiringKind::async, i, i, child, NodeId{}});
                continue;
            }
            const Node& p = sum_->node(n.sync_partner);
            if (p.machine > i && p.parent == c[p.machine])
                out.push_back({FiringKind::sync, i, p.machine, child, n.sync_partner});
        }
    }
    return out;
}

Cut ConfigurationSpace::apply(const Cut& c, const Firing& f) const {
    Cut out = c;
    out[f.i] = f.child_i;
    if (f.kind == FiringKind::sync)
        out[f.j] = f.child_j;
    return out;
}

namespace {

bool same_transitions(const SumMachine& sum, const Firing& a, const Firing& b) {
    if (a.kind != b.kind || a.i != b.i || a.j != b.j)
        return false;
    if (sum.node(a.child_i).via != sum.node(b.child_i).via)
        return false;
    return a.kind == FiringKind::async || sum.node(a.child_j).via == sum.node(b.child_j).via;
}

} // namespace

Cut ConfigurationSpace::normalize(Cut c) const {
    for (std::size_t i = 0; i < c.size(); ++i) {
        const Node& n = sum_->node(c[i]);
        if (!n.cutoff)
            continue;
        // c = env(n) extended by some firings; redo those firings from the
        // matching node's env, which has the same global state and a strictly
        // smaller past.
        const Cut from = sum_->node(c[i]).env;
        const std::vector<Firing> rest = path_between(from, c);
        Cut cur = sum_->node(n.cutoff_match).env;
        for (const Firing& f : rest) {
            bool fired = false;
            for (const Firing& g : enabled(cur)) {
                if (same_transitions(*sum_, f, g)) {
                    cur = step(cur, g);
                    fired = true;
                    break;
                }
            }
            if (!fired)
                throw Error("incomplete prefix: cannot replay " + describe(f) + " after cut-off " +
                            sum_->node_name(c[i]));
        }
        return cur;
    }
    return c;
}

Cut ConfigurationSpace::step(const Cut& c, const Firing& f) const {
    return normalize(apply(c, f));
}

std::vector<Firing> ConfigurationSpace::path_between(const Cut& from, const Cut& to) const {
    const std::size_t n = from.size();
    for (std::size_t k = 0; k < n; ++k)
        if (!sum_->is_tree_ancestor(from[k], to[k]))
            throw IncompatibleStates("target cut is not above the source cut in machine " +
                                     sum_->machine_name(k));

    // Next node on the tree path from cur[k] down to to[k].
    auto next_on_path = [&](NodeId cur, NodeId target) {
        for (NodeId c : sum_->node(cur).children)
            if (sum_->is_tree_ancestor(c, target))
                return c;
        return NodeId{};
    };

    std::vector<Firing> out;
    Cut cur = from;
    for (;;) {
        bool fired = false;
        bool pending = false;
        for (std::size_t i = 0; i < n && !fired; ++i) {
            if (cur[i] == to[i])
                continue;
            pending = true;
            const NodeId x = next_on_path(cur[i], to[i]);
            const Node& nx = sum_->node(x);
            if (!nx.sync_partner) {
                out.push_back({FiringKind::async, i, i, x, NodeId{}});
                cur[i] = x;
                fired = true;
                continue;
            }
            const Node& p = sum_->node(nx.sync_partner);
            if (p.parent != cur[p.machine])
                continue;
            if (!sum_->is_tree_ancestor(nx.sync_partner, to[p.machine]))
                throw IncompatibleStates("rendezvous partner of " + sum_->node_name(x) +
                                         " is in conflict with the target");
            Firing f = i < p.machine
                           ? Firing{FiringKind::sync, i, p.machine, x, nx.sync_partner}
                           : Firing{FiringKind::sync, p.machine, i, nx.sync_partner, x};
            out.push_back(f);
            cur = apply(cur, f);
            fired = true;
        }
        if (!pending)
            return out;
        if (!fired)
            throw IncompatibleStates("target cut is not reachable: rendezvous never enabled");
    }
}

const std::string& ConfigurationSpace::action(const Firing& f) const {
    const Node& n = sum_->node(f.child_i);
    return sum_->spec.machines[n.machine].transition(n.via).action.name;
}

std::string ConfigurationSpace::describe(const Firing& f) const {
    std::string s = action(f) + "(" + sum_->machine_name(f.i);
    if (f.kind == FiringKind::sync)
        s += "," + sum_->machine_name(f.j);
    return s + ")";
}

namespace {

struct CutHash {
    std::size_t operator()(const Cut& c) const {
        std::size_t h = 1469598103934665603ULL;
        for (NodeId id : c)
            h = (h ^ id.value()) * 1099511628211ULL;
        return h;
    }
};

} // namespace

ConfigurationGraph explore_configurations(const SumMachine& sum, std::size_t bound) {
    ConfigurationSpace space{sum};
    ConfigurationGraph g;
    std::unordered_map<Cut, std::uint32_t, CutHash> index;
    auto intern = [&](const Cut& c) {
        auto [it, fresh] = index.emplace(c, static_cast<std::uint32_t>(g.cuts.size()));
        if (fresh) {
            g.cuts.push_back(c);
            g.successors.emplace_back();
            g.firings.emplace_back();
        }
        return it->second;
    };
    intern(space.initial());
    for (std::size_t at = 0; at < g.cuts.size(); ++at) {
        if (g.cuts.size() > bound) {
            g.truncated = true;
            break;
        }
        const Cut cur = g.cuts[at];
        for (const Firing& f : space.enabled(cur)) {
            const std::uint32_t to = intern(space.step(cur, f));
            g.successors[at].push_back(to);
            g.firings[at].push_back(f);
        }
    }
    return g;
}

Cut closure_cut(const SumMachine& sum, std::span<const NodeId> nodes) {
    Cut out;
    for (const auto& u : sum.unfoldings)
        out.push_back(u.root);
    for (NodeId id : nodes) {
        const auto& env = sum.node(id).env;
        for (std::size_t k = 0; k < out.size(); ++k) {
            if (sum.is_tree_ancestor(out[k], env[k]))
                out[k] = env[k];
            else if (!sum.is_tree_ancestor(env[k], out[k]))
                throw IncompatibleStates("nodes are in conflict on machine " + sum.machine_name(k));
        }
    }
    return out;
}

} // namespace summachine
