#include "summachine/reachability.hpp"

#include <algorithm>
#include <functional>
#include <thread>
#include <unordered_map>

#include "summachine/error.hpp"

namespace summachine {

std::vector<NodeId> local_search(const SumMachine& sum, MachineIndex i, StateId target) {
    if (i >= sum.machine_count())
        throw QueryError("machine index out of range");
    if (target.index() >= sum.spec.machines[i].state_count())
        throw QueryError("unknown state id " + std::to_string(target.value()) + " in machine " +
                         sum.machine_name(i));
    std::vector<NodeId> out;
    std::vector<NodeId> stack{sum.root(i)};
    while (!stack.empty()) {
        const NodeId id = stack.back();
        stack.pop_back();
        const Node& n = sum.node(id);
        if (n.base == target)
            out.push_back(id);
        for (auto it = n.children.rbegin(); it != n.children.rend(); ++it)
            stack.push_back(*it);
    }
    return out;
}

namespace {

class PairMemo {
public:
    PairMemo(const SumMachine& sum, CoCost& cost) : sum_{sum}, cost_{cost} {}

    bool co(NodeId a, NodeId b) {
        if (b < a)
            std::swap(a, b);
        const std::uint64_t key = (std::uint64_t{a.value()} << 32) | b.value();
        auto it = memo_.find(key);
        if (it != memo_.end())
            return it->second;
        const bool r = co_fast(sum_, a, b, &cost_);
        memo_.emplace(key, r);
        return r;
    }
    [[nodiscard]] std::size_t distinct() const { return memo_.size(); }

private:
    const SumMachine& sum_;
    CoCost& cost_;
    std::unordered_map<std::uint64_t, bool> memo_;
};

// Depth-first clause search: one candidate per row, checked against every
// earlier row, or only the previous one in chain mode.
std::optional<std::vector<NodeId>> search(const std::vector<std::vector<NodeId>>& rows,
                                          PairMemo& memo, bool chain_only) {
    std::vector<NodeId> choice(rows.size());
    std::function<bool(std::size_t)> rec = [&](std::size_t level) {
        if (level == rows.size())
            return true;
        for (NodeId cand : rows[level]) {
            bool ok = true;
            const std::size_t first = chain_only && level > 0 ? level - 1 : 0;
            for (std::size_t p = first; p < level && ok; ++p)
                ok = memo.co(choice[p], cand);
            if (!ok)
                continue;
            choice[level] = cand;
            if (rec(level + 1))
                return true;
        }
        return false;
    };
    if (rec(0))
        return choice;
    return std::nullopt;
}

} // namespace

std::optional<std::vector<NodeId>> certify_concurrent(const SumMachine& sum,
                                                      const std::vector<std::vector<NodeId>>& rows,
                                                      CertifyMode mode, CertifyStats& stats) {
    for (const auto& r : rows) {
        stats.k_max = std::max(stats.k_max, r.size());
        stats.k_total += r.size();
        if (r.empty())
            return std::nullopt;
    }
    if (mode == CertifyMode::pairwise) {
        PairMemo memo{sum, stats.cost};
        auto found = search(rows, memo, false);
        stats.pairwise_checks += memo.distinct();
        return found;
    }
    PairMemo memo{sum, stats.cost};
    auto found = search(rows, memo, true);
    stats.chain_checks += memo.distinct();
    return found;
}

namespace {

std::vector<std::vector<NodeId>> search_all(const SumMachine& sum,
                                            const std::vector<MachineIndex>& machines,
                                            const std::vector<std::set<StateId>>& accept,
                                            bool parallel) {
    std::vector<std::vector<NodeId>> out(machines.size());
    auto work = [&](std::size_t r) {
        if (accept[r].size() == 1) {
            out[r] = local_search(sum, machines[r], *accept[r].begin());
            return;
        }
        std::vector<NodeId> stack{sum.root(machines[r])};
        while (!stack.empty()) {
            const NodeId id = stack.back();
            stack.pop_back();
            if (accept[r].count(sum.node(id).base))
                out[r].push_back(id);
            const auto& kids = sum.node(id).children;
            for (auto it = kids.rbegin(); it != kids.rend(); ++it)
                stack.push_back(*it);
        }
    };
    if (parallel && machines.size() > 1 && sum.nodes.size() >= 20000) {
        std::vector<std::thread> pool;
        for (std::size_t r = 0; r < machines.size(); ++r)
            pool.emplace_back(work, r);
        for (auto& t : pool)
            t.join();
    } else {
        for (std::size_t r = 0; r < machines.size(); ++r)
            work(r);
    }
    return out;
}

} // namespace

Verdict reachable_states(const SumMachine& sum,
                         const std::vector<std::optional<std::set<StateId>>>& accept,
                         const ReachOptions& options) {
    if (accept.size() != sum.machine_count())
        throw QueryError("query has " + std::to_string(accept.size()) + " entries for " +
                         std::to_string(sum.machine_count()) + " machines");
    std::vector<MachineIndex> machines;
    std::vector<std::set<StateId>> sets;
    for (std::size_t i = 0; i < accept.size(); ++i) {
        if (!accept[i])
            continue;
        for (StateId s : *accept[i])
            if (s.index() >= sum.spec.machines[i].state_count())
                throw QueryError("unknown state id in machine " + sum.machine_name(i));
        machines.push_back(i);
        sets.push_back(*accept[i]);
    }

    Verdict v;
    v.mode = options.mode;
    const auto matches = search_all(sum, machines, sets, options.parallel_search);

    // A cut-off-free configuration reaches every reachable state, so cut-off
    // matches are never needed as candidates.
    auto build_rows = [&](std::size_t cap) {
        std::vector<std::vector<NodeId>> rows(machines.size());
        bool truncated = false;
        for (std::size_t r = 0; r < machines.size(); ++r) {
            for (NodeId id : matches[r]) {
                if (sum.node(id).cutoff)
                    continue;
                if (cap != 0 && rows[r].size() == cap) {
                    truncated = true;
                    break;
                }
                rows[r].push_back(id);
            }
        }
        return std::pair{rows, truncated};
    };

    auto [rows, truncated] = build_rows(options.candidate_cap);
    v.stats.cap_truncated = truncated;
    for (std::size_t r = 0; r < machines.size(); ++r) {
        v.local_matches.push_back(matches[r].size());
        v.candidates.push_back(rows[r].size());
    }

    auto decide = [&](const std::vector<std::vector<NodeId>>& rs) {
        auto pairwise = certify_concurrent(sum, rs, CertifyMode::pairwise, v.stats);
        if (options.mode == CertifyMode::chain) {
            CertifyStats chain_stats;
            auto chain = certify_concurrent(sum, rs, CertifyMode::chain, chain_stats);
            v.stats.chain_checks += chain_stats.chain_checks;
            v.stats.cost.calls += chain_stats.cost.calls;
            v.stats.cost.anchor_steps += chain_stats.cost.anchor_steps;
            v.stats.cost.max_call_steps =
                std::max(v.stats.cost.max_call_steps, chain_stats.cost.max_call_steps);
            v.stats.cost.interval_checks += chain_stats.cost.interval_checks;
            bool chain_ok = chain.has_value();
            if (chain) {
                for (std::size_t a = 0; a < chain->size(); ++a)
                    for (std::size_t b = a + 1; b < chain->size(); ++b) {
                        ++v.stats.chain_verify_checks;
                        chain_ok = chain_ok && co_fast(sum, (*chain)[a], (*chain)[b]);
                    }
            }
            v.chain_reachable = chain.has_value();
            if (chain.has_value() != pairwise.has_value() || (chain && !chain_ok))
                v.stats.chain_disagreement = true;
            if (options.chain_authoritative)
                return chain;
        }
        return pairwise;
    };

    auto found = decide(rows);
    if (!found && truncated) {
        v.stats.cap_fallback = true;
        auto full = build_rows(0).first;
        v.candidates.clear();
        for (const auto& r : full)
            v.candidates.push_back(r.size());
        found = decide(full);
    }

    if (found) {
        v.reachable = true;
        Configuration c;
        c.components.assign(sum.machine_count(), NodeId{});
        for (std::size_t r = 0; r < machines.size(); ++r)
            c.components[machines[r]] = (*found)[r];
        v.witness = std::move(c);
    }
    return v;
}

Verdict global_reachable(const SumMachine& sum, const ReachQuery& q, const ReachOptions& options) {
    std::vector<std::optional<std::set<StateId>>> accept(sum.machine_count());
    for (const auto& [i, s] : q.targets) {
        if (i >= sum.machine_count())
            throw QueryError("machine index " + std::to_string(i) + " out of range");
        accept[i] = std::set<StateId>{s};
    }
    return reachable_states(sum, accept, options);
}

ReachQuery make_query(const SystemSpec& spec, const std::map<std::string, std::string>& targets) {
    ReachQuery q;
    for (const auto& [machine, state] : targets) {
        auto i = spec.find_machine(machine);
        if (!i)
            throw QueryError("unknown machine '" + machine + "'");
        auto s = spec.machines[*i].find_state(state);
        if (!s)
            throw QueryError("unknown state '" + state + "' in machine " + machine);
        q.targets[*i] = *s;
    }
    return q;
}

std::vector<TraceStep> materialize_configuration(const SumMachine& sum, const Configuration& c) {
    std::vector<NodeId> present;
    for (NodeId id : c.components)
        if (id)
            present.push_back(id);
    for (std::size_t a = 0; a < present.size(); ++a)
        for (std::size_t b = a + 1; b < present.size(); ++b)
            if (sum.node(present[a]).machine == sum.node(present[b]).machine ||
                !co_fast(sum, present[a], present[b]))
                throw IncompatibleStates("configuration is not pairwise concurrent: " +
                                         sum.node_name(present[a]) + ", " +
                                         sum.node_name(present[b]));
    ConfigurationSpace space{sum};
    const Cut start = space.initial();
    const Cut target = closure_cut(sum, present);
    std::vector<TraceStep> trace{{space.fvec(start), std::nullopt}};
    Cut cur = start;
    for (const Firing& f : space.path_between(start, target)) {
        cur = space.apply(cur, f);
        trace.push_back({space.fvec(cur), f});
    }
    return trace;
}

namespace {

// Some rendezvous between these two local states is possible.
bool sync_enabled(const SystemSpec& spec, MachineIndex i, StateId a, MachineIndex j, StateId b) {
    const CfsmSpec& mi = spec.machines[i];
    const CfsmSpec& mj = spec.machines[j];
    for (TransitionId t : mi.outgoing(a)) {
        const auto& ti = mi.transition(t).action;
        if (!ti.is_sync() || ti.partner != j)
            continue;
        for (TransitionId u : mj.outgoing(b)) {
            const auto& tj = mj.transition(u).action;
            if (tj.is_sync() && tj.partner == i && tj.name == ti.name)
                return true;
        }
    }
    return false;
}

} // namespace

std::vector<Deadlock> list_deadlocks(const SumMachine& sum) {
    const std::size_t n = sum.machine_count();
    const SystemSpec& spec = sum.spec;
    std::vector<std::vector<NodeId>> rows(n);
    for (std::size_t i = 0; i < n; ++i)
        for (NodeId id : sum.unfoldings[i].nodes) {
            const Node& nd = sum.node(id);
            if (!nd.cutoff && !spec.machines[i].has_async_from(nd.base))
                rows[i].push_back(id);
        }

    std::vector<Deadlock> out;
    std::set<std::vector<StateId>> seen;
    std::vector<NodeId> choice(n);
    std::function<void(std::size_t)> rec = [&](std::size_t level) {
        if (level == n) {
            std::vector<StateId> state;
            bool stuck_somewhere = false;
            for (std::size_t i = 0; i < n; ++i) {
                state.push_back(sum.node(choice[i]).base);
                stuck_somewhere = stuck_somewhere || !spec.machines[i].is_terminal(state.back());
            }
            if (stuck_somewhere && seen.insert(state).second)
                out.push_back({Configuration{choice}, std::move(state)});
            return;
        }
        for (NodeId cand : rows[level]) {
            const StateId base = sum.node(cand).base;
            bool ok = true;
            for (std::size_t p = 0; p < level && ok; ++p) {
                const NodeId other = choice[p];
                ok = !sync_enabled(spec, p, sum.node(other).base, level, base) &&
                     co_fast(sum, other, cand);
            }
            if (!ok)
                continue;
            choice[level] = cand;
            rec(level + 1);
        }
    };
    rec(0);
    std::sort(out.begin(), out.end(),
              [](const Deadlock& a, const Deadlock& b) { return a.state < b.state; });
    return out;
}

std::vector<Deadlock> dead_leaf_environments(const SumMachine& sum) {
    std::vector<Deadlock> out;
    for (std::size_t id = 0; id < sum.nodes.size(); ++id) {
        const Node& n = sum.nodes[id];
        if (n.dead)
            out.push_back({Configuration{n.env}, sum.fvec(NodeId{id})});
    }
    return out;
}

} // namespace summachine
