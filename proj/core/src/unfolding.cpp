#include "summachine/unfolding.hpp"

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>
#include <tuple>

#include "summachine/error.hpp"

namespace summachine {

// ---------------------------------------------------------------------------
// SumMachine

bool SumMachine::is_tree_ancestor(NodeId a, NodeId b) const {
    const Node& na = node(a);
    const Node& nb = node(b);
    if (na.machine != nb.machine)
        return false;
    return tin_[a.index()] <= tin_[b.index()] && tout_[b.index()] <= tout_[a.index()];
}

std::vector<StateId> SumMachine::fvec(NodeId s) const {
    return fvec_of(*this, node(s).env);
}

NodeId SumMachine::lasso_target(NodeId cutoff_node) const {
    const Node& c = node(cutoff_node);
    if (!c.cutoff || !c.cutoff_match)
        return NodeId{};
    return node(c.cutoff_match).env.at(c.machine);
}

std::string SumMachine::node_name(NodeId id) const {
    const Node& n = node(id);
    return spec.machines.at(n.machine).state_name(n.base) + "." + std::to_string(n.instance);
}

void SumMachine::rebuild_indices() {
    tin_.assign(nodes.size(), 0);
    tout_.assign(nodes.size(), 0);
    std::uint32_t clock = 0;
    for (const auto& u : unfoldings) {
        if (!u.root)
            continue;
        std::vector<std::pair<NodeId, std::size_t>> stack{{u.root, 0}};
        tin_[u.root.index()] = clock++;
        while (!stack.empty()) {
            auto& [id, next] = stack.back();
            const auto& kids = nodes[id.index()].children;
            if (next < kids.size()) {
                NodeId child = kids[next++];
                tin_[child.index()] = clock++;
                stack.emplace_back(child, 0);
            } else {
                tout_[id.index()] = clock++;
                stack.pop_back();
            }
        }
    }

    stats = {};
    stats.machines.resize(unfoldings.size());
    for (const auto& u : unfoldings) {
        auto& ms = stats.machines[u.machine];
        for (NodeId id : u.nodes) {
            const Node& n = nodes[id.index()];
            ++ms.nodes;
            ms.cutoffs += n.cutoff ? 1 : 0;
            ms.dead += n.dead ? 1 : 0;
            if (n.is_leaf() && !n.cutoff && spec.machines[n.machine].is_terminal(n.base))
                ++ms.terminal;
            ms.depth = std::max<std::size_t>(ms.depth, n.depth);
        }
        stats.total_nodes += ms.nodes;
        stats.total_cutoffs += ms.cutoffs;
        stats.total_dead += ms.dead;
        stats.max_depth = std::max(stats.max_depth, ms.depth);
        const double nf = static_cast<double>(std::max<std::size_t>(1, spec.max_states()));
        stats.coupling_factor = std::max(stats.coupling_factor, static_cast<double>(ms.nodes) / nf);
    }
}

std::vector<StateId> fvec_of(const SumMachine& sum, std::span<const NodeId> env) {
    std::vector<StateId> out;
    out.reserve(env.size());
    for (NodeId id : env)
        out.push_back(sum.node(id).base);
    return out;
}

// ---------------------------------------------------------------------------
// SumMachineBuilder

SumMachineBuilder::SumMachineBuilder(SystemSpec spec, UnfoldLimits limits, CutoffPolicy policy)
    : spec_{std::move(spec)}, limits_{limits}, policy_{policy} {
    const std::size_t n = spec_.size();
    machine_sizes_.assign(n, 0);
    next_instance_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        spec_.machines[i].index_transitions();
        next_instance_[i].assign(spec_.machines[i].state_count(), 0);
    }
    for (std::size_t i = 0; i < n; ++i)
        roots_.push_back(new_node(i, spec_.machines[i].initial, NodeId{}, TransitionId{},
                                  NodeKind::initial));
    for (std::size_t i = 0; i < n; ++i) {
        nodes_[roots_[i].index()].env = roots_;
        register_node(roots_[i]);
    }
}

NodeId SumMachineBuilder::new_node(MachineIndex i, StateId base, NodeId parent, TransitionId via,
                                   NodeKind kind) {
    const std::uint32_t depth = parent ? nodes_[parent.index()].depth + 1 : 0;
    if (machine_sizes_[i] + 1 > limits_.max_nodes)
        throw LimitExceeded("machine " + spec_.machines[i].name + " exceeded max_nodes=" +
                            std::to_string(limits_.max_nodes));
    if (depth > limits_.max_depth)
        throw LimitExceeded("machine " + spec_.machines[i].name + " exceeded max_depth=" +
                            std::to_string(limits_.max_depth));
    ++machine_sizes_[i];

    Node n;
    n.machine = i;
    n.base = base;
    n.instance = next_instance_[i][base.index()]++;
    n.parent = parent;
    n.via = via;
    n.kind = kind;
    n.depth = depth;
    NodeId id{nodes_.size()};
    nodes_.push_back(std::move(n));
    weight_.push_back(0);
    if (parent)
        nodes_[parent.index()].children.push_back(id);
    return id;
}

void SumMachineBuilder::check_transition(NodeId s, TransitionId t, bool want_sync) const {
    const Node& n = node(s);
    const CfsmSpec& m = spec_.machines[n.machine];
    if (t.index() >= m.transitions.size())
        throw PreconditionError("transition #" + std::to_string(t.index()) +
                                " does not exist in machine " + m.name);
    const CfsmTransition& tr = m.transition(t);
    if (tr.source != n.base)
        throw PreconditionError("transition source mismatch: " + m.state_name(tr.source) +
                                " is not " + m.state_name(n.base));
    if (tr.action.is_sync() != want_sync)
        throw PreconditionError(std::string{"transition '"} + tr.action.name + "' is " +
                                (tr.action.is_sync() ? "synchronous" : "asynchronous"));
    if (n.cutoff)
        throw PreconditionError("cut-off node has no successors");
}

NodeId SumMachineBuilder::gen_next_async(NodeId s, TransitionId t) {
    check_transition(s, t, false);
    const MachineIndex i = node(s).machine;
    const StateId dst = spec_.machines[i].transition(t).destination;
    std::vector<NodeId> env = node(s).env;
    NodeId child = new_node(i, dst, s, t, NodeKind::async_output);
    env[i] = child;
    nodes_[child.index()].env = std::move(env);
    register_node(child);
    settle_cutoff(child);
    return child;
}

std::pair<NodeId, NodeId> SumMachineBuilder::gen_next_sync(NodeId s_i, NodeId s_j,
                                                           TransitionId t_i, TransitionId t_j) {
    check_transition(s_i, t_i, true);
    check_transition(s_j, t_j, true);
    const MachineIndex i = node(s_i).machine;
    const MachineIndex j = node(s_j).machine;
    const CfsmTransition& tri = spec_.machines[i].transition(t_i);
    const CfsmTransition& trj = spec_.machines[j].transition(t_j);
    if (i == j || tri.action.partner != j || trj.action.partner != i)
        throw PreconditionError("sync transitions do not name each other's machines");
    if (tri.action.name != trj.action.name)
        throw PreconditionError("sync action names differ: " + tri.action.name + " vs " +
                                trj.action.name);
    if (!is_sync_compatible(s_i, s_j))
        throw IncompatibleStates("states " + std::to_string(s_i.value()) + " and " +
                                 std::to_string(s_j.value()) + " cannot rendezvous");

    const std::size_t n = spec_.size();
    std::vector<NodeId> env(n);
    for (std::size_t k = 0; k < n; ++k)
        if (k != i && k != j)
            env[k] = desc(node(s_i).env[k], node(s_j).env[k]);

    const StateId dst_i = tri.destination;
    const StateId dst_j = trj.destination;
    NodeId c_i = new_node(i, dst_i, s_i, t_i, NodeKind::sync_output);
    NodeId c_j = new_node(j, dst_j, s_j, t_j, NodeKind::sync_output);
    env[i] = c_i;
    env[j] = c_j;
    nodes_[c_i.index()].env = env;
    nodes_[c_j.index()].env = std::move(env);
    nodes_[c_i.index()].sync_partner = c_j;
    nodes_[c_j.index()].sync_partner = c_i;
    register_node(c_i);
    register_node(c_j);
    // both outputs share env, so they are cut off together
    settle_cutoff(c_i);
    return {c_i, c_j};
}

bool SumMachineBuilder::tree_reaches(NodeId a, NodeId b) const {
    const Node& na = node(a);
    if (na.machine != node(b).machine)
        return false;
    while (node(b).depth > na.depth)
        b = node(b).parent;
    return a == b;
}

NodeId SumMachineBuilder::desc(NodeId a, NodeId b) const {
    if (tree_reaches(a, b))
        return b;
    if (tree_reaches(b, a))
        return a;
    throw IncompatibleStates("nodes " + std::to_string(a.value()) + " and " +
                             std::to_string(b.value()) + " are in local conflict");
}

bool SumMachineBuilder::is_sync_compatible(NodeId s_i, NodeId s_j) const {
    const Node& a = node(s_i);
    const Node& b = node(s_j);
    if (a.machine == b.machine)
        return false;
    if (!tree_reaches(b.env[a.machine], s_i) || !tree_reaches(a.env[b.machine], s_j))
        return false;
    for (std::size_t k = 0; k < a.env.size(); ++k) {
        if (k == a.machine || k == b.machine)
            continue;
        if (!tree_reaches(a.env[k], b.env[k]) && !tree_reaches(b.env[k], a.env[k]))
            return false;
    }
    return true;
}

std::vector<StateId> SumMachineBuilder::fvec(NodeId s) const {
    std::vector<StateId> out;
    for (NodeId e : node(s).env)
        out.push_back(node(e).base);
    return out;
}

void SumMachineBuilder::register_node(NodeId s) {
    std::uint32_t w = 0;
    for (NodeId e : node(s).env)
        w += node(e).depth;
    weight_[s.index()] = w;
    auto [it, fresh] = lightest_.try_emplace(fvec(s), w, s);
    if (!fresh && w < it->second.first)
        it->second = {w, s};
}

NodeId SumMachineBuilder::find_cutoff_match(NodeId s) const {
    if (policy_ == CutoffPolicy::ancestor) {
        const auto target = fvec(s);
        for (NodeId p = node(s).parent; p; p = node(p).parent)
            if (fvec(p) == target)
                return p;
        return NodeId{};
    }
    auto it = lightest_.find(fvec(s));
    if (it == lightest_.end() || it->second.first >= weight(s))
        return NodeId{};
    return it->second.second;
}

void SumMachineBuilder::settle_cutoff(NodeId s) {
    const NodeId match = find_cutoff_match(s);
    for (NodeId x : {s, node(s).sync_partner}) {
        if (!x)
            continue;
        // the pair is cut off together; under the ancestor policy the partner
        // still prefers an ancestor in its own tree
        NodeId own = match;
        if (match && x != s && policy_ == CutoffPolicy::ancestor)
            if (const NodeId a = find_cutoff_match(x))
                own = a;
        nodes_[x.index()].cutoff = match.valid();
        nodes_[x.index()].cutoff_match = own;
    }
}

bool SumMachineBuilder::is_cutoff(NodeId s) const {
    return find_cutoff_match(s).valid();
}

namespace {

// The match is the lightest node with the same global state, lowest id among
// equals, so it does not depend on construction order.
void assign_lightest_matches(SumMachine& sum) {
    std::map<std::vector<StateId>, std::pair<std::uint32_t, NodeId>> lightest;
    auto weight_of = [&](const Node& x) {
        std::uint32_t w = 0;
        for (NodeId e : x.env)
            w += sum.node(e).depth;
        return w;
    };
    for (std::size_t id = 0; id < sum.nodes.size(); ++id) {
        const Node& x = sum.nodes[id];
        const std::pair candidate{weight_of(x), NodeId{id}};
        auto [it, fresh] = lightest.try_emplace(fvec_of(sum, x.env), candidate);
        if (!fresh)
            it->second = std::min(it->second, candidate);
    }
    for (auto& x : sum.nodes)
        if (x.cutoff)
            x.cutoff_match = lightest.at(fvec_of(sum, x.env)).second;
}

} // namespace

SumMachine SumMachineBuilder::finish() && {
    const std::size_t count = nodes_.size();

    // Causal height: roots 0, a child one above its inputs' height.
    std::vector<std::uint32_t> height(count, 0);
    for (std::size_t id = 0; id < count; ++id) {
        const Node& n = nodes_[id];
        if (!n.parent)
            continue;
        std::uint32_t h = height[n.parent.index()];
        if (n.sync_partner)
            h = std::max(h, height[nodes_[n.sync_partner.index()].parent.index()]);
        height[id] = h + 1;
    }

    // Canonical rank, level by level. A node is identified by its parent, the
    // transition taken and (for rendezvous) the partner's parent and transition,
    // all of which sit on lower levels.
    std::vector<std::vector<std::size_t>> levels;
    for (std::size_t id = 0; id < count; ++id) {
        if (height[id] >= levels.size())
            levels.resize(height[id] + 1);
        levels[height[id]].push_back(id);
    }
    constexpr std::int64_t none = -1;
    std::vector<std::int64_t> rank(count, none);
    std::int64_t next_rank = 0;
    for (auto& level : levels) {
        using Key = std::tuple<std::size_t, std::int64_t, std::int64_t, std::int64_t, std::int64_t>;
        auto key = [&](std::size_t id) {
            const Node& n = nodes_[id];
            std::int64_t parent = n.parent ? rank[n.parent.index()] : none;
            std::int64_t via = n.via ? static_cast<std::int64_t>(n.via.index()) : none;
            std::int64_t pparent = none;
            std::int64_t pvia = none;
            if (n.sync_partner) {
                const Node& p = nodes_[n.sync_partner.index()];
                pparent = rank[p.parent.index()];
                pvia = static_cast<std::int64_t>(p.via.index());
            }
            return Key{n.machine, parent, via, pparent, pvia};
        };
        std::vector<std::pair<Key, std::size_t>> keyed;
        keyed.reserve(level.size());
        for (std::size_t id : level)
            keyed.emplace_back(key(id), id);
        std::sort(keyed.begin(), keyed.end());
        for (const auto& [k, id] : keyed)
            rank[id] = next_rank++;
    }

    std::vector<std::size_t> order(count);
    for (std::size_t id = 0; id < count; ++id)
        order[id] = id;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return std::pair{nodes_[a].machine, rank[a]} < std::pair{nodes_[b].machine, rank[b]};
    });
    std::vector<NodeId> remap(count);
    for (std::size_t pos = 0; pos < count; ++pos)
        remap[order[pos]] = NodeId{pos};
    auto re = [&](NodeId id) { return id ? remap[id.index()] : id; };

    SumMachine sum;
    sum.spec = std::move(spec_);
    sum.nodes.resize(count);
    for (std::size_t old = 0; old < count; ++old) {
        Node n = std::move(nodes_[old]);
        for (auto& e : n.env)
            e = re(e);
        n.parent = re(n.parent);
        n.sync_partner = re(n.sync_partner);
        n.cutoff_match = re(n.cutoff_match);
        for (auto& c : n.children)
            c = re(c);
        std::sort(n.children.begin(), n.children.end());
        sum.nodes[remap[old].index()] = std::move(n);
    }

    if (policy_ == CutoffPolicy::lightest)
        assign_lightest_matches(sum);

    const std::size_t n = sum.spec.size();
    sum.unfoldings.resize(n);
    std::vector<std::vector<std::uint32_t>> instance(n);
    for (std::size_t i = 0; i < n; ++i) {
        sum.unfoldings[i].machine = i;
        instance[i].assign(sum.spec.machines[i].state_count(), 0);
    }
    for (std::size_t id = 0; id < count; ++id) {
        Node& node = sum.nodes[id];
        node.instance = instance[node.machine][node.base.index()]++;
        if (!node.parent)
            sum.unfoldings[node.machine].root = NodeId{id};
        sum.unfoldings[node.machine].nodes.push_back(NodeId{id});
        node.dead = node.is_leaf() && !node.cutoff &&
                    !sum.spec.machines[node.machine].is_terminal(node.base);
    }
    sum.rebuild_indices();
    return sum;
}

// ---------------------------------------------------------------------------
// Drivers

namespace {

class Waitlist {
public:
    explicit Waitlist(std::size_t n) : lists_(n, std::vector<std::vector<WaitlistEntry>>(n)) {}

    void post(const WaitlistEntry& e) { lists_[e.from_machine][e.to_machine].push_back(e); }
    [[nodiscard]] const std::vector<WaitlistEntry>& entries(MachineIndex from,
                                                            MachineIndex to) const {
        return lists_[from][to];
    }

private:
    std::vector<std::vector<std::vector<WaitlistEntry>>> lists_;
};

// Fires every transition of `s`. Async ones immediately; sync ones are posted
// to the waitlist (entries stay there for the rest of the construction) and
// matched against every compatible entry the partner has posted so far.
std::vector<NodeId> expand(SumMachineBuilder& b, Waitlist& w, NodeId s) {
    std::vector<NodeId> fresh;
    const MachineIndex i = b.node(s).machine;
    const CfsmSpec& m = b.spec().machines[i];
    for (TransitionId t : m.outgoing(b.node(s).base)) {
        const CfsmTransition& tr = m.transition(t);
        if (!tr.action.is_sync()) {
            fresh.push_back(b.gen_next_async(s, t));
            continue;
        }
        const MachineIndex j = *tr.action.partner;
        w.post({i, j, s, t});
        const auto& partners = w.entries(j, i);
        for (std::size_t e = 0; e < partners.size(); ++e) {
            const WaitlistEntry entry = partners[e];
            const auto& ptr = b.spec().machines[j].transition(entry.pending_transition);
            if (ptr.action.name != tr.action.name || !b.is_sync_compatible(s, entry.pending_node))
                continue;
            auto [c_i, c_j] = b.gen_next_sync(s, entry.pending_node, t, entry.pending_transition);
            fresh.push_back(c_i);
            fresh.push_back(c_j);
        }
    }
    return fresh;
}

// Nodes are expanded in order of weight. A node's cut-off flag is settled
// only once every lighter node exists, which makes the result independent of
// the order inside a level. Children are always heavier than their inputs.
class Levels {
public:
    explicit Levels(const SumMachineBuilder& b) : b_{&b} {}
    void add(NodeId s) { pending_[b_->weight(s)].push_back(s); }
    [[nodiscard]] bool empty() const { return pending_.empty(); }
    std::vector<NodeId> pop() {
        auto it = pending_.begin();
        std::vector<NodeId> out = std::move(it->second);
        pending_.erase(it);
        return out;
    }

private:
    const SumMachineBuilder* b_;
    std::map<std::uint32_t, std::vector<NodeId>> pending_;
};

// Settles a level and returns its non-cut-off nodes grouped by machine.
std::vector<std::vector<NodeId>> settle(SumMachineBuilder& b, const std::vector<NodeId>& level) {
    std::vector<std::vector<NodeId>> out(b.machine_count());
    for (NodeId s : level) {
        b.settle_cutoff(s);
        if (!b.node(s).cutoff)
            out[b.node(s).machine].push_back(s);
    }
    return out;
}

void run_sequential(SumMachineBuilder& b) {
    const std::size_t n = b.machine_count();
    Waitlist w{n};
    Levels levels{b};
    for (std::size_t i = 0; i < n; ++i)
        levels.add(b.root(i));
    while (!levels.empty()) {
        auto by_machine = settle(b, levels.pop());
        // round-robin over machines, one node each
        for (std::size_t round = 0;; ++round) {
            bool any = false;
            for (std::size_t i = 0; i < n; ++i) {
                if (round >= by_machine[i].size())
                    continue;
                any = true;
                for (NodeId c : expand(b, w, by_machine[i][round]))
                    levels.add(c);
            }
            if (!any)
                break;
        }
    }
}

// Workers own machines (i mod workers) and expand their share of each level;
// builder updates are serialised by one mutex and levels end at a barrier.
void run_parallel(SumMachineBuilder& b, std::size_t workers) {
    const std::size_t n = b.machine_count();
    Waitlist w{n};
    Levels levels{b};
    for (std::size_t i = 0; i < n; ++i)
        levels.add(b.root(i));

    std::mutex mu;
    std::exception_ptr failure;
    while (!levels.empty() && !failure) {
        const auto by_machine = settle(b, levels.pop());
        auto work = [&](std::size_t me) {
            for (std::size_t i = me; i < n; i += workers) {
                for (NodeId s : by_machine[i]) {
                    std::lock_guard lk{mu};
                    if (failure)
                        return;
                    try {
                        for (NodeId c : expand(b, w, s))
                            levels.add(c);
                    } catch (...) {
                        failure = std::current_exception();
                        return;
                    }
                }
            }
        };
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t k = 0; k < workers; ++k)
            pool.emplace_back(work, k);
    }
    if (failure)
        std::rethrow_exception(failure);
}

} // namespace

std::size_t effective_threads(std::size_t requested, std::size_t machines) {
    std::size_t t = requested == 0 ? machines : std::min(requested, machines);
    if (const char* env = std::getenv("SUMMACHINE_THREADS")) {
        const long cap = std::strtol(env, nullptr, 10);
        if (cap > 0)
            t = std::min<std::size_t>(t, static_cast<std::size_t>(cap));
    }
    return std::max<std::size_t>(1, t);
}

SumMachine unfold(const SystemSpec& spec, const UnfoldOptions& options) {
    if (auto violations = validate_system(spec); !violations.empty()) {
        std::ostringstream os;
        os << "invalid system:";
        for (const auto& v : violations)
            os << "\n  " << describe(spec, v);
        throw PreconditionError(os.str());
    }
    if (options.limits.max_nodes == 0 || options.limits.max_depth == 0)
        throw PreconditionError("unfolding limits must be positive");

    SumMachineBuilder builder{spec, options.limits, options.cutoff};
    if (options.mode == UnfoldMode::parallel)
        run_parallel(builder, effective_threads(options.threads, spec.size()));
    else
        run_sequential(builder);
    return std::move(builder).finish();
}

} // namespace summachine
