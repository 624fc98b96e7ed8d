#include "summachine/product.hpp"

#include <algorithm>
#include <deque>
#include <limits>
#include <map>
#include <set>

#include "summachine/error.hpp"

namespace summachine {

std::uint64_t ProductMachine::key(std::span<const StateId> v) const {
    std::uint64_t k = 0;
    for (std::size_t i = 0; i < width_; ++i)
        k += radix_[i] * v[i].value();
    return k;
}

std::optional<std::uint32_t> ProductMachine::find(std::span<const StateId> v) const {
    if (v.size() != width_)
        return std::nullopt;
    for (std::size_t i = 0; i < width_; ++i)
        if (v[i].index() >= spec.machines[i].state_count())
            return std::nullopt;
    auto it = index_.find(key(v));
    if (it == index_.end())
        return std::nullopt;
    return it->second;
}

std::uint32_t ProductMachine::intern(std::span<const StateId> v, bool& fresh) {
    auto [it, inserted] = index_.emplace(key(v), static_cast<std::uint32_t>(out.size()));
    fresh = inserted;
    if (inserted) {
        flat_.insert(flat_.end(), v.begin(), v.end());
        out.emplace_back();
    }
    return it->second;
}

std::vector<std::vector<std::uint32_t>> ProductMachine::successor_table() const {
    std::vector<std::vector<std::uint32_t>> succ(state_count());
    for (std::size_t s = 0; s < succ.size(); ++s)
        for (std::uint32_t e : out[s])
            succ[s].push_back(edges[e].to);
    return succ;
}

ProductMachine build_product(const SystemSpec& spec, std::size_t bound) {
    if (auto violations = validate_system(spec); !violations.empty())
        throw PreconditionError("invalid system: " + describe(spec, violations.front()));
    ProductMachine pm;
    pm.spec = spec;
    for (auto& m : pm.spec.machines)
        m.index_transitions();
    const std::size_t n = spec.size();
    pm.width_ = n;
    std::uint64_t r = 1;
    for (std::size_t i = 0; i < n; ++i) {
        pm.radix_.push_back(r);
        const std::uint64_t size = pm.spec.machines[i].state_count();
        if (r > std::numeric_limits<std::uint64_t>::max() / 2 / size)
            throw PreconditionError("product state space too large to index");
        r *= size;
    }

    const SystemSpec& s = pm.spec;
    bool fresh = false;
    const auto init = s.initial_vector();
    pm.intern(init, fresh);
    std::vector<StateId> cur(n);
    std::vector<StateId> next(n);
    for (std::uint32_t at = 0; at < pm.state_count(); ++at) {
        auto v = pm.state(at);
        cur.assign(v.begin(), v.end());
        auto add = [&](ProductEdge e) {
            bool fresh_state = false;
            if (pm.state_count() >= bound && !pm.find(next)) {
                pm.truncated = true;
                return;
            }
            e.from = at;
            e.to = pm.intern(next, fresh_state);
            pm.out[at].push_back(static_cast<std::uint32_t>(pm.edges.size()));
            pm.edges.push_back(e);
        };
        for (std::size_t i = 0; i < n; ++i) {
            const CfsmSpec& mi = s.machines[i];
            for (TransitionId t : mi.outgoing(cur[i])) {
                const auto& tr = mi.transition(t);
                if (!tr.action.is_sync()) {
                    next = cur;
                    next[i] = tr.destination;
                    add({0, 0, FiringKind::async, i, i, t, TransitionId{}});
                    continue;
                }
                const MachineIndex j = *tr.action.partner;
                if (j < i)
                    continue; // the pair is generated from the lower index
                const CfsmSpec& mj = s.machines[j];
                for (TransitionId u : mj.outgoing(cur[j])) {
                    const auto& tu = mj.transition(u);
                    if (!tu.action.is_sync() || tu.action.partner != i || tu.action.name != tr.action.name)
                        continue;
                    next = cur;
                    next[i] = tr.destination;
                    next[j] = tu.destination;
                    add({0, 0, FiringKind::sync, i, j, t, u});
                }
            }
        }
    }
    return pm;
}

ProductAnswer product_reachable(const ProductMachine& pm, const ReachQuery& q) {
    ProductAnswer a;
    a.authoritative = !pm.truncated;
    for (std::uint32_t s = 0; s < pm.state_count(); ++s) {
        auto v = pm.state(s);
        bool match = true;
        for (const auto& [i, st] : q.targets)
            match = match && i < v.size() && v[i] == st;
        if (match) {
            a.reachable = true;
            return a;
        }
    }
    return a;
}

std::vector<char> eval_ctl_all(const ProductMachine& pm, const Formula& f) {
    if (pm.truncated)
        throw LimitExceeded("CTL evaluation needs a complete product");
    std::vector<const Formula*> stack{&f};
    std::map<const Formula*, MachineIndex> bound;
    while (!stack.empty()) {
        const Formula* g = stack.back();
        stack.pop_back();
        if (g->op == CtlOp::atom) {
            std::optional<MachineIndex> i;
            if (g->machine)
                i = pm.spec.find_machine(*g->machine);
            else if (pm.spec.size() == 1)
                i = 0;
            else
                throw QueryError("atom " + to_string(*g) + " must name a machine");
            if (!i)
                throw QueryError("unknown machine '" + *g->machine + "'");
            if (!pm.spec.machines[*i].declares(g->proposition))
                throw QueryError("proposition '" + g->proposition + "' is not declared by " +
                                 pm.spec.machines[*i].name);
            bound[g] = *i;
        }
        if (g->lhs)
            stack.push_back(g->lhs.get());
        if (g->rhs)
            stack.push_back(g->rhs.get());
    }
    const auto succ = pm.successor_table();
    KripkeView view;
    view.states = pm.state_count();
    view.successors = &succ;
    view.atom = [&](std::uint32_t s, const Formula& a) {
        const MachineIndex i = bound.at(&a);
        return pm.spec.machines[i].has_label(pm.state(s)[i], a.proposition);
    };
    return evaluate(view, f);
}

bool eval_ctl(const ProductMachine& pm, const Formula& f) {
    return eval_ctl_all(pm, f).at(0) != 0;
}

std::vector<std::vector<StateId>> product_deadlocks(const ProductMachine& pm) {
    std::vector<std::vector<StateId>> out;
    for (std::uint32_t s = 0; s < pm.state_count(); ++s) {
        if (!pm.out[s].empty())
            continue;
        auto v = pm.state(s);
        bool stuck = false;
        for (std::size_t i = 0; i < v.size(); ++i)
            stuck = stuck || !pm.spec.machines[i].is_terminal(v[i]);
        if (stuck)
            out.push_back(pm.state_vector(s));
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::size_t product_diameter(const ProductMachine& pm) {
    std::vector<std::size_t> dist(pm.state_count(), std::numeric_limits<std::size_t>::max());
    std::deque<std::uint32_t> q{0};
    dist[0] = 0;
    std::size_t far = 0;
    while (!q.empty()) {
        const std::uint32_t s = q.front();
        q.pop_front();
        far = std::max(far, dist[s]);
        for (std::uint32_t e : pm.out[s]) {
            const std::uint32_t t = pm.edges[e].to;
            if (dist[t] == std::numeric_limits<std::size_t>::max()) {
                dist[t] = dist[s] + 1;
                q.push_back(t);
            }
        }
    }
    return far;
}

namespace {

struct StepLabel {
    FiringKind kind;
    MachineIndex i;
    MachineIndex j;
    TransitionId t_i;
    TransitionId t_j;

    friend bool operator==(const StepLabel&, const StepLabel&) = default;
};

StepLabel label_of(const ProductEdge& e) {
    return {e.kind, e.i, e.j, e.t_i, e.kind == FiringKind::sync ? e.t_j : TransitionId{}};
}

StepLabel label_of(const SumMachine& sum, const Firing& f) {
    return {f.kind, f.i, f.j, sum.node(f.child_i).via,
            f.kind == FiringKind::sync ? sum.node(f.child_j).via : TransitionId{}};
}

std::string show(const SystemSpec& spec, std::span<const StateId> v) {
    std::string s = "(";
    for (std::size_t i = 0; i < v.size(); ++i)
        s += (i ? "," : "") + spec.machines[i].state_name(v[i]);
    return s + ")";
}

} // namespace

BisimulationReport check_bisimulation(const ProductMachine& pm, const SumMachine& sum,
                                      std::size_t bound) {
    BisimulationReport r;
    r.product_states = pm.state_count();
    if (pm.truncated) {
        r.violations.push_back("product is truncated");
        return r;
    }
    if (sum.machine_count() != pm.spec.size()) {
        r.violations.push_back("machine counts differ");
        return r;
    }
    ConfigurationGraph g;
    try {
        g = explore_configurations(sum, bound);
    } catch (const Error& e) {
        r.violations.push_back(std::string{"configuration exploration failed: "} + e.what());
        return r;
    }
    if (g.truncated)
        r.violations.push_back("configuration exploration truncated");
    r.configurations = g.cuts.size();

    ConfigurationSpace space{sum};
    std::set<std::vector<StateId>> classes;
    std::vector<char> covered(pm.state_count(), 0);
    for (std::size_t s = 0; s < g.cuts.size(); ++s) {
        const Cut& cut = g.cuts[s];
        const auto fv = space.fvec(cut);
        classes.insert(fv);
        const auto p = pm.find(fv);
        if (!p) {
            r.violations.push_back("configuration " + show(pm.spec, fv) + " is not a product state");
            continue;
        }
        covered[*p] = 1;
        ++r.pairs_checked;

        for (std::size_t i = 0; i < cut.size(); ++i)
            if (pm.spec.machines[i].labels(fv[i]) != pm.spec.machines[i].labels(pm.state(*p)[i]))
                r.violations.push_back("labels differ at " + show(pm.spec, fv));

        // Backward: every configuration step is a product step.
        for (std::size_t k = 0; k < g.firings[s].size(); ++k) {
            const StepLabel l = label_of(sum, g.firings[s][k]);
            const auto target = space.fvec(g.cuts[g.successors[s][k]]);
            bool found = false;
            for (std::uint32_t e : pm.out[*p]) {
                const ProductEdge& pe = pm.edges[e];
                if (label_of(pe) == l && pm.state_vector(pe.to) == target) {
                    found = true;
                    break;
                }
            }
            if (!found)
                r.violations.push_back("step " + space.describe(g.firings[s][k]) + " from " +
                                       show(pm.spec, fv) + " has no product counterpart");
        }
        // Forward: every product step is matched.
        for (std::uint32_t e : pm.out[*p]) {
            const ProductEdge& pe = pm.edges[e];
            const StepLabel l = label_of(pe);
            const auto target = pm.state_vector(pe.to);
            bool found = false;
            for (std::size_t k = 0; k < g.firings[s].size() && !found; ++k)
                found = label_of(sum, g.firings[s][k]) == l &&
                        space.fvec(g.cuts[g.successors[s][k]]) == target;
            if (!found)
                r.violations.push_back("product step " + pm.action(pe) + " from " +
                                       show(pm.spec, fv) + " to " + show(pm.spec, target) +
                                       " is not matched");
        }
        // Each component's env is a representative below the configuration.
        for (std::size_t i = 0; i < cut.size(); ++i) {
            const auto& env = sum.node(cut[i]).env;
            for (std::size_t k = 0; k < cut.size(); ++k)
                if (!sum.is_tree_ancestor(env[k], cut[k]))
                    r.violations.push_back("env of " + sum.node_name(cut[i]) +
                                           " is not below configuration " + show(pm.spec, fv));
        }
    }
    for (std::uint32_t p = 0; p < pm.state_count(); ++p)
        if (!covered[p])
            r.violations.push_back("product state " + show(pm.spec, pm.state(p)) +
                                   " has no configuration");
    r.classes = classes.size();
    return r;
}

LassoReport check_lasso_paths(const ProductMachine& pm, const SumMachine& sum,
                              std::optional<std::size_t> max_length) {
    LassoReport r;
    if (pm.truncated) {
        r.violations.push_back("product is truncated");
        return r;
    }
    const std::size_t limit = max_length.value_or(std::max<std::size_t>(1, product_diameter(pm)));
    r.depth = limit;
    ConfigurationSpace space{sum};

    std::map<std::pair<std::uint32_t, Cut>, std::size_t> seen;
    std::deque<std::pair<std::uint32_t, Cut>> queue;
    const Cut start = space.initial();
    if (!pm.find(space.fvec(start)) || *pm.find(space.fvec(start)) != 0)
        r.violations.push_back("initial configuration does not match the initial product state");
    seen[{0, start}] = 0;
    queue.emplace_back(0, start);
    while (!queue.empty()) {
        auto [p, cut] = queue.front();
        queue.pop_front();
        ++r.pairs;
        const std::size_t d = seen[{p, cut}];
        if (d >= limit)
            continue;
        const auto firings = space.enabled(cut);
        for (std::uint32_t e : pm.out[p]) {
            const ProductEdge& pe = pm.edges[e];
            bool found = false;
            for (const Firing& f : firings) {
                if (!(label_of(sum, f) == label_of(pe)))
                    continue;
                const Cut raw = space.apply(cut, f);
                Cut next;
                try {
                    next = space.normalize(raw);
                } catch (const Error& ex) {
                    r.violations.push_back(ex.what());
                    continue;
                }
                if (space.fvec(next) != pm.state_vector(pe.to))
                    continue;
                found = true;
                if (next != raw)
                    ++r.folds;
                if (seen.emplace(std::pair{pe.to, next}, d + 1).second)
                    queue.emplace_back(pe.to, next);
            }
            if (!found)
                r.violations.push_back("product step " + pm.action(pe) + " from " +
                                       show(pm.spec, pm.state(p)) + " at depth " +
                                       std::to_string(d) + " has no configuration step");
        }
    }
    return r;
}

} // namespace summachine
