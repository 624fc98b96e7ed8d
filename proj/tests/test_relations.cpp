#include <doctest.h>

#include <sstream>

#include "summachine/error.hpp"
#include "summachine/generator.hpp"
#include "summachine/product.hpp"
#include "summachine/relations.hpp"
#include "support.hpp"

using namespace summachine;
using test::node;

TEST_CASE("leq on pingpong") {
    const SumMachine sum = unfold(test::load_fixture("pingpong"));
    const Relations rel{sum};
    const NodeId a0 = node(sum, "F1", "A.0");
    const NodeId b0 = node(sum, "F1", "B.0");
    const NodeId y0 = node(sum, "F2", "Y.0");
    CHECK(rel.leq(a0, a0));
    CHECK(rel.leq(a0, y0));
    CHECK_FALSE(rel.leq(y0, a0));
    // rendezvous partners are simultaneous
    CHECK(rel.leq(b0, y0));
    CHECK(rel.leq(y0, b0));
}

TEST_CASE("seq on pingpong") {
    const SumMachine sum = unfold(test::load_fixture("pingpong"));
    const Relations rel{sum};
    const NodeId a0 = node(sum, "F1", "A.0");
    const NodeId b0 = node(sum, "F1", "B.0");
    const NodeId a1 = node(sum, "F1", "A.1");
    const NodeId y0 = node(sum, "F2", "Y.0");
    CHECK(rel.seq_rel(a0, b0));
    CHECK(rel.seq_rel(a0, y0));
    CHECK_FALSE(rel.seq_rel(a1, a0));
    CHECK_FALSE(rel.seq_rel(a1, y0));
    // literal reading: not reflexive
    CHECK_FALSE(rel.seq_rel(b0, b0));
}

TEST_CASE("conflict fixture") {
    const SumMachine sum = unfold(test::load_fixture("conflict"));
    const Relations rel{sum};
    const NodeId b0 = node(sum, "F1", "B.0");
    const NodeId c0 = node(sum, "F1", "C.0");
    const NodeId y0 = node(sum, "F2", "Y.0");
    const NodeId z0 = node(sum, "F2", "Z.0");
    CHECK(rel.conf_rel(b0, c0));
    CHECK(rel.conf_rel(b0, z0));
    CHECK(rel.conf_rel(z0, b0));
    CHECK_FALSE(rel.conf_rel(b0, b0));
    CHECK_FALSE(rel.co_definitional(b0, z0));
    CHECK_FALSE(rel.co_fast(b0, z0));
    CHECK(rel.co_fast(b0, y0));
    CHECK(rel.classify_pair(b0, c0) == RelationKind::conf);
    CHECK(rel.past_frontier(b0, 1).size() == 1);
    CHECK(rel.past_frontier(b0, 1)[0] == y0);
}

TEST_CASE("async fixture") {
    const SumMachine sum = unfold(test::load_fixture("async"));
    const Relations rel{sum};
    const NodeId b0 = node(sum, "F1", "B.0");
    const NodeId y0 = node(sum, "F2", "Y.0");
    CHECK(rel.co_definitional(b0, y0));
    CHECK(rel.co_fast(b0, y0));
    CHECK(rel.classify_pair(b0, y0) == RelationKind::co);
    CHECK(rel.classify_pair(node(sum, "F1", "A.0"), b0) == RelationKind::seq_forward);
    CHECK(rel.classify_pair(b0, node(sum, "F1", "A.0")) == RelationKind::seq_backward);
    CHECK(rel.classify_pair(b0, b0) == RelationKind::identity);
}

TEST_CASE("rendezvous partners are concurrent") {
    const SumMachine sum = unfold(test::load_fixture("pingpong"));
    const Relations rel{sum};
    const NodeId b0 = node(sum, "F1", "B.0");
    const NodeId y0 = node(sum, "F2", "Y.0");
    CHECK(rel.co_definitional(b0, y0));
    CHECK(rel.co_fast(b0, y0));
    // co and causality overlap on rendezvous pairs
    CHECK(rel.leq(b0, y0));
}

TEST_CASE("co_fast on initial nodes") {
    for (const auto& name : test::fixture_names()) {
        const SumMachine sum = unfold(test::load_fixture(name));
        for (std::size_t i = 0; i < sum.machine_count(); ++i)
            for (std::size_t j = 0; j < sum.machine_count(); ++j)
                if (i != j)
                    CHECK(co_fast(sum, sum.root(i), sum.root(j)));
    }
}

TEST_CASE("same-machine concurrency is a precondition error") {
    const SumMachine sum = unfold(test::load_fixture("async"));
    const Relations rel{sum};
    const NodeId a0 = node(sum, "F1", "A.0");
    const NodeId b0 = node(sum, "F1", "B.0");
    CHECK_THROWS_AS((void)rel.co_definitional(a0, b0), PreconditionError);
    CHECK_THROWS_AS((void)co_fast(sum, a0, b0), PreconditionError);
}

TEST_CASE("anchors alone miss conflicts routed through a third machine") {
    const SystemSpec spec = parse_system(R"(
        system third
        machine F1 { init A states A B trans A -> B : a with F3 }
        machine F2 { init X states X Y trans X -> Y : b with F3 }
        machine F3 { init x states x y z
                     trans x -> y : a with F1
                     trans x -> z : b with F2 }
    )");
    const SumMachine sum = unfold(spec);
    const Relations rel{sum};
    const NodeId b0 = node(sum, "F1", "B.0");
    const NodeId y0 = node(sum, "F2", "Y.0");
    CHECK(co_anchor(sum, b0, y0));
    CHECK_FALSE(co_fast(sum, b0, y0));
    CHECK_FALSE(rel.co_definitional(b0, y0));
    ReachQuery q;
    q.targets = {{0, StateId{1}}, {1, StateId{1}}};
    CHECK_FALSE(product_reachable(build_product(spec), q).reachable);
}

TEST_CASE("cost counters") {
    const SumMachine sum = unfold(test::load_fixture("chain3"));
    CoCost cost;
    const NodeId d0 = node(sum, "F1", "d.0");
    const NodeId u0 = node(sum, "F2", "u.0");
    CHECK(co_fast(sum, d0, u0, &cost));
    CHECK(cost.calls == 1);
    CHECK(cost.interval_checks == 1);
    CHECK(cost.max_call_steps <= 2 * sum.stats.max_depth);
}

TEST_CASE("relation properties on fixtures and random systems") {
    std::vector<SystemSpec> specs;
    for (const auto& name : test::fixture_names())
        specs.push_back(test::load_fixture(name));
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        GenParams p;
        p.seed = seed;
        p.machines = 2 + seed % 3;
        p.states = 4;
        p.coupling = p.machines - 1;
        p.width = 2;
        specs.push_back(generate_system(p));
    }
    for (const SystemSpec& spec : specs) {
        CAPTURE(spec.name);
        const SumMachine sum = unfold(spec);
        const Relations rel{sum};
        const std::size_t count = sum.nodes.size();
        std::size_t failures = 0;
        for (std::size_t a = 0; a < count; ++a) {
            const NodeId s{a};
            failures += !rel.leq(s, s);
            failures += rel.conf_rel(s, s);
            for (std::size_t b = 0; b < count; ++b) {
                const NodeId t{b};
                failures += rel.leq(s, t) != rel.leq_by_env(s, t);
                failures += rel.conf_rel(s, t) != rel.conf_rel(t, s);
                if (rel.seq_rel(s, t))
                    failures += !rel.leq(s, t);
                if (a == b)
                    continue;
                failures += !rel.classify_detail(s, t).covered();
                if (sum.node(s).machine != sum.node(t).machine) {
                    failures += rel.co_definitional(s, t) != rel.co_definitional(t, s);
                    failures += rel.co_fast(s, t) != rel.co_definitional(s, t);
                }
                // transitivity through one intermediate
                if (rel.leq(s, t))
                    for (NodeId u : sum.node(t).children)
                        failures += !rel.leq(s, u);
            }
        }
        CHECK(failures == 0);
    }
}

TEST_CASE("tsv dump") {
    const SumMachine sum = unfold(test::load_fixture("async"));
    std::ostringstream os;
    Relations{sum}.write_tsv(os);
    const std::string out = os.str();
    CHECK(out.find("F1:B.0\tF2:Y.0\tco\n") != std::string::npos);
    CHECK(out.find("F1:A.0\tF1:B.0\tseq_forward\n") != std::string::npos);
    // 4 nodes, 12 ordered pairs
    CHECK(std::count(out.begin(), out.end(), '\n') == 12);
}
