#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"
#include "summachine/error.hpp"

using namespace summachine;
using namespace summachine::cli;

namespace {

void add_common(CLI::App* sub, RunConfig& cfg, bool needs_input = true) {
    if (needs_input)
        sub->add_option("input", cfg.input, "system (.sys) or saved sum machine (JSON); - for stdin")
            ->required();
    sub->add_option("--format", cfg.format, "output format")
        ->transform(CLI::CheckedTransformer(
            std::map<std::string, Format>{{"json", Format::json}, {"human", Format::human}}));
    sub->add_option("--seed", cfg.seed, "seed recorded in the output (and used for sampling)");
}

void add_unfold_options(CLI::App* sub, RunConfig& cfg) {
    sub->add_option("--max-nodes", cfg.unfold.limits.max_nodes, "node limit per machine");
    sub->add_option("--max-depth", cfg.unfold.limits.max_depth, "tree depth limit");
    sub->add_option("--threads", cfg.unfold.threads, "parallel workers (0 = one per machine)");
    sub->add_option("--cutoff", cfg.unfold.cutoff, "cut-off matching")
        ->transform(CLI::CheckedTransformer(std::map<std::string, CutoffPolicy>{
            {"lightest", CutoffPolicy::lightest}, {"ancestor", CutoffPolicy::ancestor}}));
}

void add_reach_options(CLI::App* sub, RunConfig& cfg) {
    sub->add_option("--cert-mode", cfg.reach.mode, "certification of candidate tuples")
        ->transform(CLI::CheckedTransformer(std::map<std::string, CertifyMode>{
            {"pairwise", CertifyMode::pairwise}, {"chain", CertifyMode::chain}}));
    sub->add_option("--cap", cfg.reach.candidate_cap, "candidates per machine (0 = no cap)");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sum-machine unfolding and distributed model checking of communicating FSMs"};
    app.require_subcommand(1);

    RunConfig cfg;
    UnfoldArgs unfold_args;
    ReachArgs reach_args;
    CheckArgs check_args;
    EvalArgs eval_args;
    DeadlockArgs dead_args;
    GenArgs gen_args;

    auto* unfold = app.add_subcommand("unfold", "build the sum machine");
    add_common(unfold, cfg);
    add_unfold_options(unfold, cfg);
    std::string mode = "sequential";
    unfold->add_option("--mode", mode, "sequential, parallel or both (compares the outputs)")
        ->check(CLI::IsMember({"sequential", "parallel", "both"}));
    unfold->add_option("--out,-o", unfold_args.out, "sum machine JSON (default stdout)");
    unfold->add_option("--dot", unfold_args.dot_prefix, "write PREFIX_<machine>.dot per unfolding");
    unfold->add_option("--tsv", unfold_args.tsv, "write the pair relation table");

    auto* reach = app.add_subcommand("reach", "decide reachability of a partial global state");
    add_common(reach, cfg);
    add_unfold_options(reach, cfg);
    add_reach_options(reach, cfg);
    reach->add_option("--query,-q", reach_args.query, R"(JSON {"targets":{"F1":"B"}} or a file)");
    reach->add_option("--target,-t", reach_args.targets, "MACHINE=STATE, repeatable");
    reach->add_flag("--trace", reach_args.trace, "emit an interleaving up to the witness");

    auto* check = app.add_subcommand("check", "cross-check against the product oracle");
    add_common(check, cfg);
    add_unfold_options(check, cfg);
    add_reach_options(check, cfg);
    check->add_option("--bound", cfg.product_bound, "product state bound");
    check->add_option("--sample", check_args.sample, "random queries instead of all (uses --seed)");

    auto* eval = app.add_subcommand("eval", "evaluate a local formula or a global form");
    add_common(eval, cfg);
    add_unfold_options(eval, cfg);
    eval->add_option("formula", eval_args.formula, "CTL formula, or conj-atoms/conj-AX/conj-AF form")
        ->required();
    eval->add_option("--machine,-m", eval_args.machine, "machine for local formulas");
    eval->add_option("--node", eval_args.node, "node id or name (default: root)");
    eval->add_flag("--oracle", eval_args.oracle, "compare a global form with product CTL");
    eval->add_option("--bound", cfg.product_bound, "product state bound");

    auto* dead = app.add_subcommand("deadlocks", "list reachable deadlocks");
    add_common(dead, cfg);
    add_unfold_options(dead, cfg);
    dead->add_flag("--oracle", dead_args.oracle, "compare with product deadlocks");
    dead->add_option("--bound", cfg.product_bound, "product state bound");

    auto* gen = app.add_subcommand("gen", "generate a random system");
    add_common(gen, cfg, false);
    gen->add_option("--machines,-n", gen_args.params.machines, "machine count");
    gen->add_option("--states,-m", gen_args.params.states, "most states per machine");
    gen->add_option("--coupling,-d", gen_args.params.coupling, "most sync partners per machine");
    gen->add_option("--width,-w", gen_args.params.width, "most transitions per state");
    gen->add_option("--out,-o", gen_args.out, "output file (default stdout)");

    CLI11_PARSE(app, argc, argv);
    if (mode == "parallel")
        cfg.unfold.mode = UnfoldMode::parallel;
    cfg.both_modes = mode == "both";

    try {
        if (*unfold)
            return cmd_unfold(cfg, unfold_args);
        if (*reach)
            return cmd_reach(cfg, reach_args);
        if (*check)
            return cmd_check(cfg, check_args);
        if (*eval)
            return cmd_eval(cfg, eval_args);
        if (*dead)
            return cmd_deadlocks(cfg, dead_args);
        if (!cfg.seed)
            throw PreconditionError("gen needs --seed");
        gen_args.params.seed = *cfg.seed;
        return cmd_gen(cfg, gen_args);
    } catch (const LimitExceeded& e) {
        std::cerr << "limit exceeded: " << e.what() << '\n';
        return exit_limit;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_error;
    }
}
