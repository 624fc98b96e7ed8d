#include <doctest.h>

#include <algorithm>

#include "summachine/error.hpp"
#include "summachine/generator.hpp"
#include "summachine/product.hpp"
#include "support.hpp"

using namespace summachine;

namespace {

// Removes the first sync edge from the product's out lists.
bool drop_sync_edge(ProductMachine& pm) {
    for (auto& out : pm.out)
        for (auto it = out.begin(); it != out.end(); ++it)
            if (pm.edges[*it].kind == FiringKind::sync) {
                out.erase(it);
                return true;
            }
    return false;
}

bool holds(const ProductMachine& pm, std::string_view f) {
    return eval_ctl(pm, *parse_formula(f));
}

} // namespace

TEST_CASE("product sizes of small fixtures") {
    const ProductMachine pp = build_product(test::load_fixture("pingpong"));
    CHECK(pp.state_count() == 2);
    CHECK(pp.edges.size() == 2);
    CHECK_FALSE(pp.truncated);
    const ProductMachine as = build_product(test::load_fixture("async"));
    CHECK(as.state_count() == 4);
    CHECK(as.edges.size() == 4);
    const ProductMachine mm = build_product(test::load_fixture("mismatch"));
    CHECK(mm.state_count() == 1);
    CHECK(mm.edges.empty());
    CHECK(pp.state_vector(0) == pp.spec.initial_vector());
}

TEST_CASE("product reachability and CTL") {
    const SystemSpec spec = test::load_fixture("conflict");
    const ProductMachine pm = build_product(spec);
    CHECK(product_reachable(pm, make_query(spec, {{"F1", "B"}, {"F2", "Y"}})).reachable);
    CHECK_FALSE(product_reachable(pm, make_query(spec, {{"F1", "B"}, {"F2", "Z"}})).reachable);
    CHECK_FALSE(holds(pm, R"(EF (F1:"B" & F2:"Z"))"));
    CHECK(holds(pm, R"(EF F1:"B")"));
    CHECK(holds(pm, R"(AG (F1:"A" | F1:"B" | F1:"C"))"));
    CHECK(holds(pm, R"(AX !F1:"A")"));
    CHECK_THROWS_AS(holds(pm, R"(EF "B")"), QueryError);

    const ProductMachine pp = build_product(test::load_fixture("pingpong"));
    CHECK(holds(pp, R"(AG AF F1:"A")"));
    CHECK(holds(pp, R"(EG true)"));
}

TEST_CASE("deadlocks and diameter") {
    CHECK(product_deadlocks(build_product(test::load_fixture("conflict"))).empty());
    const auto dl = product_deadlocks(build_product(test::load_fixture("mismatch")));
    REQUIRE(dl.size() == 1);
    CHECK(dl[0] == test::load_fixture("mismatch").initial_vector());
    CHECK(product_diameter(build_product(test::load_fixture("async"))) == 2);
    CHECK(product_diameter(build_product(test::load_fixture("pingpong"))) == 1);
}

TEST_CASE("truncation") {
    const SystemSpec spec = independent_chain_family(3, 4);
    const ProductMachine pm = build_product(spec, 10);
    CHECK(pm.truncated);
    CHECK(pm.state_count() == 10);
    CHECK_THROWS_AS(eval_ctl(pm, *parse_formula(R"(EF F1:"c3")")), LimitExceeded);
    CHECK_FALSE(product_reachable(pm, make_query(spec, {{"F1", "c3"}, {"F2", "c3"}, {"F3", "c3"}}))
                    .authoritative);
    CHECK_FALSE(check_bisimulation(pm, unfold(spec)).ok());
}

TEST_CASE("bisimulation on fixtures") {
    for (const auto& name : test::fixture_names()) {
        CAPTURE(name);
        const SystemSpec spec = test::load_fixture(name);
        const SumMachine sum = unfold(spec);
        const ProductMachine pm = build_product(spec);
        const BisimulationReport r = check_bisimulation(pm, sum);
        CHECK(r.ok());
        CHECK(r.classes == pm.state_count());
        const LassoReport l = check_lasso_paths(pm, sum);
        CHECK(l.ok());
    }
    const SumMachine pp = unfold(test::load_fixture("pingpong"));
    CHECK(check_bisimulation(build_product(pp.spec), pp).classes == 2);
    const SumMachine as = unfold(test::load_fixture("async"));
    const BisimulationReport r = check_bisimulation(build_product(as.spec), as);
    CHECK(r.configurations == 4);
    CHECK(r.product_states == 4);
}

TEST_CASE("bisimulation fails once a sync edge is removed") {
    for (const char* name : {"pingpong", "chain3", "ring3", "conflict"}) {
        CAPTURE(name);
        const SystemSpec spec = test::load_fixture(name);
        ProductMachine pm = build_product(spec);
        REQUIRE(drop_sync_edge(pm));
        CHECK_FALSE(check_bisimulation(pm, unfold(spec)).ok());
    }
}

TEST_CASE("lasso paths fold through cut-offs") {
    const SystemSpec spec = test::load_fixture("pingpong");
    const ProductMachine pm = build_product(spec);
    const LassoReport r = check_lasso_paths(pm, unfold(spec), 6);
    CHECK(r.ok());
    CHECK(r.depth == 6);
    CHECK(r.folds > 0);
}

TEST_CASE("bisimulation and lasso paths on random systems") {
    for (std::uint64_t seed = 1; seed <= 40; ++seed) {
        CAPTURE(seed);
        const SystemSpec spec = generate_system({seed, 3, 4, 2, 2});
        const SumMachine sum = unfold(spec);
        const ProductMachine pm = build_product(spec);
        CHECK(check_bisimulation(pm, sum).ok());
        CHECK(check_lasso_paths(pm, sum).ok());
    }
}
