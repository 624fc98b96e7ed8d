#include <doctest.h>

#include <algorithm>

#include "summachine/error.hpp"
#include "summachine/generator.hpp"
#include "summachine/product.hpp"
#include "summachine/relations.hpp"
#include "summachine/serialize.hpp"
#include "support.hpp"

using namespace summachine;
using test::node;

namespace {

using Names = std::vector<std::string>;

Names sorted(Names v) {
    std::sort(v.begin(), v.end());
    return v;
}

std::vector<std::string> fvec_names(const SumMachine& sum, NodeId id) {
    std::vector<std::string> out;
    const auto v = sum.fvec(id);
    for (std::size_t i = 0; i < v.size(); ++i)
        out.push_back(sum.spec.machines[i].state_name(v[i]));
    return out;
}

TransitionId transition(const SystemSpec& spec, MachineIndex i, std::string_view action) {
    const auto& ts = spec.machines[i].transitions;
    for (std::size_t t = 0; t < ts.size(); ++t)
        if (ts[t].action.name == action)
            return TransitionId{t};
    throw std::runtime_error("no transition " + std::string{action});
}

} // namespace

TEST_CASE("pingpong unfolds to A0 B0 A1 and X0 Y0 X1") {
    const SumMachine sum = unfold(test::load_fixture("pingpong"));
    CHECK(sorted(test::node_names(sum, "F1")) == Names{"A.0", "A.1", "B.0"});
    CHECK(sorted(test::node_names(sum, "F2")) == Names{"X.0", "X.1", "Y.0"});
    const NodeId a1 = node(sum, "F1", "A.1");
    const NodeId x1 = node(sum, "F2", "X.1");
    CHECK(sum.node(a1).cutoff);
    CHECK(sum.node(x1).cutoff);
    CHECK(fvec_names(sum, a1) == Names{"A", "X"});
    CHECK(sum.fvec(a1) == sum.fvec(node(sum, "F1", "A.0")));
    CHECK(sum.stats.total_cutoffs == 2);
    CHECK(sum.stats.total_dead == 0);
    // the cut-off folds back onto the initial configuration
    CHECK(sum.lasso_target(a1) == node(sum, "F1", "A.0"));
}

TEST_CASE("mismatch: both roots are dead leaves") {
    const SumMachine sum = unfold(test::load_fixture("mismatch"));
    CHECK(test::node_names(sum, "F1") == Names{"A.0"});
    CHECK(test::node_names(sum, "F2") == Names{"X.0"});
    CHECK(sum.node(node(sum, "F1", "A.0")).dead);
    CHECK(sum.node(node(sum, "F2", "X.0")).dead);
    CHECK(sum.stats.total_dead == 2);
}

TEST_CASE("chain3: d needs its non-local sync predecessors u and z") {
    const SumMachine sum = unfold(test::load_fixture("chain3"));
    const NodeId d0 = node(sum, "F1", "d.0");
    const auto& env = sum.node(d0).env;
    CHECK(sum.node_name(env[1]) == "u.0");
    CHECK(sum.node_name(env[2]) == "z.0");
    CHECK(sum.node(env[1]).kind == NodeKind::sync_output);
    CHECK(sum.node(env[2]).kind == NodeKind::sync_output);
    const Relations rel{sum};
    CHECK(rel.leq(env[1], d0));
    CHECK(rel.leq(env[2], d0));
}

TEST_CASE("gen_next_async inherits env") {
    SumMachineBuilder b{test::load_fixture("async")};
    const NodeId a0 = b.root(0);
    const NodeId b0 = b.gen_next_async(a0, transition(b.spec(), 0, "tau"));
    CHECK(b.node(b0).env == std::vector<NodeId>{b0, b.root(1)});
    CHECK(b.node(b0).kind == NodeKind::async_output);
    CHECK(b.node(b0).parent == a0);
    CHECK_FALSE(b.node(b0).cutoff);
}

TEST_CASE("self-loop: A1 repeats A0 and is cut off") {
    SumMachineBuilder b{test::load_fixture("selfloop")};
    const NodeId a1 = b.gen_next_async(b.root(0), TransitionId{0});
    CHECK(b.node(a1).env == std::vector<NodeId>{a1});
    CHECK(b.is_cutoff(a1));
    CHECK(b.node(a1).cutoff);
    CHECK_FALSE(b.is_cutoff(b.root(0)));
    CHECK_THROWS_AS(b.gen_next_async(a1, TransitionId{0}), PreconditionError);
}

TEST_CASE("gen_next_async rejects sync transitions and wrong sources") {
    SumMachineBuilder b{test::load_fixture("pingpong")};
    CHECK_THROWS_AS(b.gen_next_async(b.root(0), transition(b.spec(), 0, "ping")),
                    PreconditionError);
    CHECK_THROWS_AS(b.gen_next_async(b.root(0), transition(b.spec(), 0, "pong")),
                    PreconditionError);
}

TEST_CASE("gen_next_sync on pingpong") {
    SumMachineBuilder b{test::load_fixture("pingpong")};
    const NodeId a0 = b.root(0);
    const NodeId x0 = b.root(1);
    CHECK(b.is_sync_compatible(a0, x0));
    const auto [b0, y0] =
        b.gen_next_sync(a0, x0, transition(b.spec(), 0, "ping"), transition(b.spec(), 1, "ping"));
    CHECK(b.node(b0).env == std::vector<NodeId>{b0, y0});
    CHECK(b.node(y0).env == std::vector<NodeId>{b0, y0});
    CHECK(b.node(b0).sync_partner == y0);
    CHECK(b.node(y0).sync_partner == b0);
    CHECK(b.node(b0).kind == NodeKind::sync_output);
    // action names must agree
    CHECK_THROWS_AS(
        b.gen_next_sync(b0, y0, transition(b.spec(), 0, "pong"), transition(b.spec(), 1, "ping")),
        PreconditionError);
}

TEST_CASE("gen_next_sync merges third components with desc") {
    // F3 moves x -> z on its own; F1 sees z through an earlier rendezvous, F2 still sees x.
    SumMachineBuilder b{parse_system(R"(
        system m
        machine F1 { init a states a b c
                     trans a -> b : n with F3
                     trans b -> c : m with F2 }
        machine F2 { init p states p q
                     trans p -> q : m with F1 }
        machine F3 { init x states x z
                     trans x -> z : n with F1 }
    )")};
    const auto [b0, z0] = b.gen_next_sync(b.root(0), b.root(2), TransitionId{0}, TransitionId{0});
    CHECK(b.node(b.root(1)).env[2] == b.root(2));
    CHECK(b.node(b0).env[2] == z0);
    const auto [c0, q0] = b.gen_next_sync(b0, b.root(1), TransitionId{1}, TransitionId{0});
    CHECK(b.node(c0).env[2] == z0);
    CHECK(b.node(q0).env[2] == z0);
}

TEST_CASE("desc") {
    SumMachineBuilder b{test::load_fixture("conflict")};
    const NodeId a0 = b.root(0);
    const auto [b0, y0] = b.gen_next_sync(a0, b.root(1), TransitionId{0}, TransitionId{0});
    const auto [c0, z0] = b.gen_next_sync(a0, b.root(1), TransitionId{1}, TransitionId{1});
    CHECK(b.desc(a0, a0) == a0);
    CHECK(b.desc(a0, b0) == b0);
    CHECK(b.desc(b0, a0) == b0);
    CHECK_THROWS_AS((void)b.desc(b0, c0), IncompatibleStates);
    // B0 sees Y0, Z0 sees C0: the pair sits on conflicting branches
    CHECK_FALSE(b.is_sync_compatible(b0, z0));
    CHECK(b.is_sync_compatible(b0, y0));
}

TEST_CASE("initial nodes are always compatible") {
    for (const auto& name : test::fixture_names()) {
        SumMachineBuilder b{test::load_fixture(name)};
        for (std::size_t i = 0; i < b.machine_count(); ++i)
            for (std::size_t j = 0; j < b.machine_count(); ++j)
                if (i != j)
                    CHECK(b.is_sync_compatible(b.root(i), b.root(j)));
    }
}

TEST_CASE("fvec drops instance numbers") {
    const SumMachine sum = unfold(test::load_fixture("pingpong"));
    const std::vector<NodeId> roots{node(sum, "F1", "A.0"), node(sum, "F2", "X.0")};
    const std::vector<NodeId> again{node(sum, "F1", "A.1"), node(sum, "F2", "X.1")};
    CHECK(fvec_of(sum, roots) == fvec_of(sum, again));
    CHECK(fvec_of(sum, roots) == sum.spec.initial_vector());
}

TEST_CASE("cut-off on a repeated global state in a three-machine loop") {
    // F1 takes a round trip a -> b -> a while F2 and F3 move in step with it.
    const SystemSpec spec = parse_system(R"(
        system loop3
        machine F1 { init a states a b
                     trans a -> b : go with F2
                     trans b -> a : back with F3 }
        machine F2 { init p states p q
                     trans p -> q : go with F1
                     trans q -> p : r }
        machine F3 { init x states x y
                     trans x -> y : s
                     trans y -> x : back with F1 }
    )");
    for (CutoffPolicy policy : {CutoffPolicy::lightest, CutoffPolicy::ancestor}) {
        UnfoldOptions o;
        o.cutoff = policy;
        const SumMachine sum = unfold(spec, o);
        // F2 stays in q after the first round, so a.1 is new and b.1 repeats b.0
        const NodeId a1 = node(sum, "F1", "a.1");
        CHECK_FALSE(sum.node(a1).cutoff);
        CHECK(fvec_names(sum, a1) == Names{"a", "q", "x"});
        const NodeId b1 = node(sum, "F1", "b.1");
        CHECK(sum.node(b1).cutoff);
        CHECK(fvec_names(sum, b1) == Names{"b", "q", "x"});
        CHECK(sum.node(b1).cutoff_match == node(sum, "F1", "b.0"));
        CHECK(sum.node(node(sum, "F3", "y.1")).dead);
    }
}

TEST_CASE("structural invariants on fixtures and random systems") {
    std::vector<SystemSpec> specs;
    for (const auto& name : test::fixture_names())
        specs.push_back(test::load_fixture(name));
    for (std::uint64_t seed = 0; seed < 60; ++seed) {
        GenParams p;
        p.seed = seed;
        p.machines = 2 + seed % 3;
        p.states = 4;
        p.coupling = std::min<std::size_t>(p.machines - 1, 2);
        p.width = 2;
        specs.push_back(generate_system(p));
    }
    for (const SystemSpec& spec : specs) {
        CAPTURE(spec.name);
        const SumMachine sum = unfold(spec);
        const Relations rel{sum};
        for (std::size_t id = 0; id < sum.nodes.size(); ++id) {
            const Node& n = sum.nodes[id];
            const NodeId self{id};
            CHECK(n.env[n.machine] == self);
            for (std::size_t k = 0; k < n.env.size(); ++k)
                if (k != n.machine)
                    CHECK(sum.node(n.env[k]).kind != NodeKind::async_output);
            if (n.cutoff) {
                CHECK(n.is_leaf());
                CHECK(sum.fvec(n.cutoff_match) == sum.fvec(self));
            }
            if (n.dead) {
                CHECK(n.is_leaf());
                CHECK_FALSE(n.cutoff);
                CHECK_FALSE(spec.machines[n.machine].is_terminal(n.base));
            }
            if (n.is_leaf() && !n.cutoff && !n.dead)
                CHECK(spec.machines[n.machine].is_terminal(n.base));
            CHECK((n.kind == NodeKind::sync_output) == n.sync_partner.valid());
            // env[k] is the deepest node of machine k in the causal past
            for (std::size_t k = 0; k < n.env.size(); ++k) {
                CHECK(rel.leq(n.env[k], self));
                for (NodeId c : sum.node(n.env[k]).children)
                    CHECK_FALSE(rel.leq(c, self));
            }
            // (base, instance) is unique within the machine
            for (NodeId other : sum.unfoldings[n.machine].nodes)
                if (other != self)
                    CHECK(sum.node_name(other) != sum.node_name(self));
        }
        // async children one-to-one with async transitions
        for (const Node& n : sum.nodes) {
            if (n.cutoff)
                continue;
            std::size_t async_out = 0;
            for (TransitionId t : spec.machines[n.machine].outgoing(n.base))
                async_out += !spec.machines[n.machine].transition(t).action.is_sync();
            std::size_t async_kids = 0;
            for (NodeId c : n.children)
                async_kids += sum.node(c).kind == NodeKind::async_output;
            CHECK(async_kids == async_out);
        }
    }
}

TEST_CASE("sequential and parallel unfolding agree byte for byte") {
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        GenParams p;
        p.seed = seed;
        p.machines = 2 + seed % 3;
        p.states = 5;
        p.coupling = p.machines - 1;
        p.width = 3;
        const SystemSpec spec = generate_system(p);
        UnfoldOptions par;
        par.mode = UnfoldMode::parallel;
        CAPTURE(seed);
        CHECK(sum_machine_to_json(unfold(spec)) == sum_machine_to_json(unfold(spec, par)));
    }
}

TEST_CASE("limits") {
    UnfoldOptions o;
    o.limits.max_nodes = 2;
    CHECK_THROWS_AS(unfold(test::load_fixture("chain3"), o), LimitExceeded);
    o.limits = {};
    o.limits.max_depth = 1;
    CHECK_THROWS_AS(unfold(test::load_fixture("chain3"), o), LimitExceeded);
    o.limits.max_depth = 0;
    CHECK_THROWS_AS(unfold(test::load_fixture("chain3"), o), PreconditionError);
    o.mode = UnfoldMode::parallel;
    o.limits = {};
    o.limits.max_nodes = 2;
    CHECK_THROWS_AS(unfold(test::load_fixture("chain3"), o), LimitExceeded);
}

TEST_CASE("invalid systems are refused") {
    const SystemSpec spec = parse_system(R"(
        system s
        machine F1 { init A states A B trans A -> B : ping with F2 }
        machine F2 { init X states X }
    )");
    CHECK_THROWS_AS(unfold(spec), PreconditionError);
}

TEST_CASE("independent family: n * m nodes") {
    for (std::size_t n = 1; n <= 6; ++n) {
        const SumMachine sum = unfold(independent_chain_family(n, 4));
        CHECK(sum.stats.total_nodes == n * 4);
        CHECK(sum.stats.total_cutoffs == 0);
    }
}

TEST_CASE("effective_threads") {
    CHECK(effective_threads(0, 3) >= 1);
    CHECK(effective_threads(0, 3) <= 3);
    CHECK(effective_threads(8, 2) <= 2);
    CHECK(effective_threads(1, 5) == 1);
}
