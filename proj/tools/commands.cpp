#include "commands.hpp"

#include <chrono>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "summachine/cdtl.hpp"
#include "summachine/error.hpp"
#include "summachine/product.hpp"
#include "summachine/relations.hpp"
#include "summachine/serialize.hpp"

namespace summachine::cli {

using json = nlohmann::ordered_json;

namespace {

constexpr int exit_mismatch = 4;

std::string read_input(const std::string& path) {
    if (path == "-") {
        std::ostringstream ss;
        ss << std::cin.rdbuf();
        return ss.str();
    }
    std::ifstream in{path, std::ios::binary};
    if (!in)
        throw Error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_output(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out{path, std::ios::binary};
    if (!out)
        throw Error("cannot write " + path);
    out << text;
}

bool looks_like_json(const std::string& text) {
    const auto pos = text.find_first_not_of(" \t\r\n");
    return pos != std::string::npos && text[pos] == '{';
}

// Input is either the system DSL or a saved sum machine.
struct Loaded {
    SystemSpec spec;
    std::optional<SumMachine> sum;
};

Loaded load(const RunConfig& cfg) {
    const std::string text = read_input(cfg.input);
    Loaded out;
    if (looks_like_json(text)) {
        out.sum = sum_machine_from_json(text);
        out.spec = out.sum->spec;
    } else {
        out.spec = parse_system(text);
    }
    return out;
}

SumMachine built(const RunConfig& cfg, Loaded& in) {
    if (in.sum)
        return std::move(*in.sum);
    return unfold(in.spec, cfg.unfold);
}

json header(const RunConfig& cfg, std::string_view kind, const SystemSpec& spec) {
    json j;
    j["schema"] = json_schema;
    j["kind"] = kind;
    j["seed"] = cfg.seed ? json(*cfg.seed) : json(nullptr);
    j["system"] = spec.name;
    return j;
}

json state_json(const SystemSpec& spec, std::span<const StateId> v) {
    json j = json::object();
    for (std::size_t i = 0; i < v.size(); ++i)
        j[spec.machines[i].name] = spec.machines[i].state_name(v[i]);
    return j;
}

json configuration_json(const SumMachine& sum, const Configuration& c) {
    json j = json::object();
    for (std::size_t i = 0; i < c.components.size(); ++i) {
        const NodeId id = c.components[i];
        if (id)
            j[sum.machine_name(i)] = {{"node", id.value()}, {"name", sum.node_name(id)}};
    }
    return j;
}

json cost_json(const CertifyStats& s) {
    return {{"pairwise_checks", s.pairwise_checks},
            {"chain_checks", s.chain_checks},
            {"chain_verify_checks", s.chain_verify_checks},
            {"k_max", s.k_max},
            {"k_total", s.k_total},
            {"co_calls", s.cost.calls},
            {"anchor_steps", s.cost.anchor_steps},
            {"max_call_steps", s.cost.max_call_steps},
            {"interval_checks", s.cost.interval_checks},
            {"cap_truncated", s.cap_truncated},
            {"cap_fallback", s.cap_fallback},
            {"chain_disagreement", s.chain_disagreement}};
}

std::string_view mode_name(CertifyMode m) {
    return m == CertifyMode::chain ? "chain" : "pairwise";
}

void print(const RunConfig& cfg, const json& j, const std::string& human) {
    if (cfg.format == Format::json)
        std::cout << j.dump(2) << '\n';
    else
        std::cout << human;
}

double millis_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

NodeId parse_node(const SumMachine& sum, MachineIndex i, const std::string& text) {
    if (text.empty())
        return sum.root(i);
    const auto& nodes = sum.unfoldings.at(i).nodes;
    if (text.find_first_not_of("0123456789") == std::string::npos) {
        const NodeId id{static_cast<std::uint32_t>(std::stoul(text))};
        if (std::find(nodes.begin(), nodes.end(), id) == nodes.end())
            throw QueryError("node " + text + " is not in machine " + sum.machine_name(i));
        return id;
    }
    for (NodeId id : nodes)
        if (sum.node_name(id) == text)
            return id;
    throw QueryError("no node named " + text + " in machine " + sum.machine_name(i));
}

ReachQuery read_query(const SystemSpec& spec, const ReachArgs& args) {
    std::map<std::string, std::string> named;
    if (!args.query.empty()) {
        const std::string text = looks_like_json(args.query) ? args.query : read_input(args.query);
        try {
            const json q = json::parse(text);
            for (const auto& [m, s] : q.at("targets").items())
                named[m] = s.get<std::string>();
        } catch (const json::exception& e) {
            throw QueryError(std::string{"malformed query: "} + e.what());
        }
    }
    for (const std::string& t : args.targets) {
        const auto eq = t.find('=');
        if (eq == std::string::npos || eq == 0 || eq + 1 == t.size())
            throw QueryError("target '" + t + "' is not MACHINE=STATE");
        named[t.substr(0, eq)] = t.substr(eq + 1);
    }
    if (named.empty())
        throw QueryError("no targets given");
    return make_query(spec, named);
}

} // namespace

int cmd_unfold(const RunConfig& cfg, const UnfoldArgs& args) {
    Loaded in = load(cfg);
    UnfoldOptions opts = cfg.unfold;

    auto t0 = std::chrono::steady_clock::now();
    SumMachine sum = unfold(in.spec, opts);
    std::ostringstream timing;
    timing << "wall " << (opts.mode == UnfoldMode::parallel ? "parallel" : "sequential") << ' '
           << millis_since(t0) << " ms\n";
    const std::string text = sum_machine_to_json(sum, cfg.seed);
    bool identical = true;
    if (cfg.both_modes) {
        opts.mode = opts.mode == UnfoldMode::parallel ? UnfoldMode::sequential : UnfoldMode::parallel;
        t0 = std::chrono::steady_clock::now();
        SumMachine other = unfold(in.spec, opts);
        timing << "wall " << (opts.mode == UnfoldMode::parallel ? "parallel" : "sequential") << ' '
               << millis_since(t0) << " ms\n";
        identical = sum_machine_to_json(other, cfg.seed) == text;
        timing << "modes " << (identical ? "identical" : "DIFFER") << '\n';
    }

    if (cfg.format == Format::json || !args.out.empty())
        write_output(args.out, text);
    if (!args.dot_prefix.empty())
        for (std::size_t i = 0; i < sum.machine_count(); ++i)
            write_output(args.dot_prefix + "_" + sum.machine_name(i) + ".dot",
                         unfolding_to_dot(sum, i));
    if (!args.tsv.empty()) {
        std::ostringstream os;
        Relations{sum}.write_tsv(os);
        write_output(args.tsv, os.str());
    }

    std::ostream& log = cfg.format == Format::json ? std::cerr : std::cout;
    for (std::size_t i = 0; i < sum.stats.machines.size(); ++i) {
        const auto& ms = sum.stats.machines[i];
        log << sum.machine_name(i) << ": nodes " << ms.nodes << ", cut-offs " << ms.cutoffs
            << ", dead " << ms.dead << ", depth " << ms.depth << '\n';
    }
    log << "total: nodes " << sum.stats.total_nodes << ", cut-offs " << sum.stats.total_cutoffs
        << ", dead " << sum.stats.total_dead << ", d " << sum.stats.coupling_factor << '\n'
        << timing.str();
    if (cfg.seed)
        log << "seed " << *cfg.seed << '\n';
    if (sum.stats.total_dead > 0)
        log << "warning: " << sum.stats.total_dead
            << " dead leaves, possible communication deadlock\n";
    return identical ? exit_ok : exit_mismatch;
}

int cmd_reach(const RunConfig& cfg, const ReachArgs& args) {
    Loaded in = load(cfg);
    const ReachQuery q = read_query(in.spec, args);
    SumMachine sum = built(cfg, in);
    const Verdict v = global_reachable(sum, q, cfg.reach);

    json j = header(cfg, "verdict", sum.spec);
    json query = json::object();
    for (const auto& [i, s] : q.targets)
        query[sum.machine_name(i)] = sum.spec.machines[i].state_name(s);
    j["query"] = query;
    j["reachable"] = v.reachable;
    j["mode"] = mode_name(v.mode);
    j["witness"] = v.witness ? configuration_json(sum, *v.witness) : json(nullptr);
    json matches = json::object();
    json cands = json::object();
    for (const auto& [i, s] : q.targets) {
        matches[sum.machine_name(i)] = v.local_matches.at(i);
        cands[sum.machine_name(i)] = v.candidates.at(i);
    }
    j["local_matches"] = matches;
    j["candidates"] = cands;
    j["chain_reachable"] = v.chain_reachable ? json(*v.chain_reachable) : json(nullptr);
    j["stats"] = cost_json(v.stats);

    std::ostringstream human;
    human << (v.reachable ? "reachable" : "unreachable") << '\n';
    if (v.witness)
        for (std::size_t i = 0; i < v.witness->components.size(); ++i)
            if (v.witness->components[i])
                human << "  " << sum.machine_name(i) << " at " << sum.node_name(v.witness->components[i])
                      << '\n';
    if (args.trace && v.witness) {
        ConfigurationSpace space{sum};
        json trace = json::array();
        for (const TraceStep& step : materialize_configuration(sum, *v.witness)) {
            json js{{"state", state_json(sum.spec, step.state)},
                    {"via", step.via ? json(space.describe(*step.via)) : json(nullptr)}};
            human << "  " << (step.via ? space.describe(*step.via) : std::string{"init"}) << " ->";
            for (std::size_t i = 0; i < step.state.size(); ++i)
                human << ' ' << sum.spec.machines[i].state_name(step.state[i]);
            human << '\n';
            trace.push_back(std::move(js));
        }
        j["trace"] = trace;
    }
    print(cfg, j, human.str());
    return v.reachable ? exit_ok : exit_unreachable;
}

int cmd_check(const RunConfig& cfg, const CheckArgs& args) {
    Loaded in = load(cfg);
    SumMachine sum = built(cfg, in);
    const SystemSpec& spec = sum.spec;
    const ProductMachine pm = build_product(spec, cfg.product_bound);

    // Full state vectors, in mixed-radix order or sampled.
    std::vector<std::vector<StateId>> queries;
    std::size_t total = 1;
    for (const auto& m : spec.machines)
        total *= m.state_count();
    auto vector_at = [&](std::size_t code) {
        std::vector<StateId> v(spec.size());
        for (std::size_t i = spec.size(); i-- > 0;) {
            v[i] = StateId{code % spec.machines[i].state_count()};
            code /= spec.machines[i].state_count();
        }
        return v;
    };
    if (args.sample == 0 || args.sample >= total) {
        for (std::size_t code = 0; code < total; ++code)
            queries.push_back(vector_at(code));
    } else {
        std::mt19937_64 rng{cfg.seed.value_or(0)};
        for (std::size_t k = 0; k < args.sample; ++k)
            queries.push_back(vector_at(rng() % total));
    }

    ReachOptions chain = cfg.reach;
    chain.mode = CertifyMode::chain;
    std::size_t compared = 0;
    std::size_t skipped = 0;
    json mismatches = json::array();
    json disagreements = json::array();
    for (const auto& v : queries) {
        ReachQuery q;
        for (std::size_t i = 0; i < v.size(); ++i)
            q.targets[i] = v[i];
        const Verdict sv = global_reachable(sum, q, cfg.reach);
        const ProductAnswer pa = product_reachable(pm, q);
        if (!pa.authoritative && !pa.reachable) {
            ++skipped;
            continue;
        }
        ++compared;
        if (sv.reachable != pa.reachable)
            mismatches.push_back({{"state", state_json(spec, v)},
                                  {"sum", sv.reachable},
                                  {"product", pa.reachable}});
        const Verdict cv = global_reachable(sum, q, chain);
        if (cv.stats.chain_disagreement)
            disagreements.push_back({{"state", state_json(spec, v)},
                                     {"pairwise", cv.reachable},
                                     {"chain", cv.chain_reachable.value_or(false)}});
    }

    json j = header(cfg, "check_report", spec);
    j["queries"] = queries.size();
    j["compared"] = compared;
    j["skipped_truncated"] = skipped;
    j["mismatches"] = mismatches;
    j["chain_disagreements"] = disagreements;
    json per = json::array();
    for (std::size_t i = 0; i < sum.stats.machines.size(); ++i)
        per.push_back({{"machine", sum.machine_name(i)}, {"nodes", sum.stats.machines[i].nodes}});
    j["sizes"] = {{"product_states", pm.state_count()},
                  {"product_edges", pm.edges.size()},
                  {"product_truncated", pm.truncated},
                  {"sum_nodes", sum.stats.total_nodes},
                  {"machines", per},
                  {"n", spec.size()},
                  {"N_f", spec.max_states()},
                  {"d", sum.stats.coupling_factor}};

    std::ostringstream human;
    human << "queries " << queries.size() << ", compared " << compared << ", mismatches "
          << mismatches.size() << '\n';
    for (const auto& m : mismatches)
        human << "  mismatch " << m["state"].dump() << " sum=" << m["sum"] << " product=" << m["product"]
              << '\n';
    human << "sizes: product " << pm.state_count() << " states" << (pm.truncated ? " (truncated)" : "")
          << " vs sum " << sum.stats.total_nodes << " nodes, d " << sum.stats.coupling_factor << '\n';
    human << "chain disagreements " << disagreements.size() << '\n';
    for (const auto& d : disagreements)
        human << "  " << d["state"].dump() << " pairwise=" << d["pairwise"] << " chain=" << d["chain"]
              << '\n';

    if (!pm.truncated) {
        const BisimulationReport br = check_bisimulation(pm, sum);
        j["bisimulation"] = {{"ok", br.ok()},
                             {"violations", br.violations},
                             {"configurations", br.configurations},
                             {"product_states", br.product_states},
                             {"classes", br.classes}};
        human << "bisimulation " << (br.ok() ? "verified" : "FAILED") << ", " << br.classes
              << " classes\n";
        for (const auto& v : br.violations)
            human << "  " << v << '\n';
    } else {
        j["bisimulation"] = nullptr;
        human << "oracle bound " << cfg.product_bound << " exceeded; partial report\n";
    }
    j["partial"] = pm.truncated;
    print(cfg, j, human.str());
    if (pm.truncated)
        return exit_limit;
    return mismatches.empty() ? exit_ok : exit_mismatch;
}

int cmd_eval(const RunConfig& cfg, const EvalArgs& args) {
    Loaded in = load(cfg);
    SumMachine sum = built(cfg, in);
    const SystemSpec& spec = sum.spec;
    json j = header(cfg, "evaluation", spec);
    std::ostringstream human;
    bool agree = true;

    if (args.formula.rfind("conj-", 0) == 0) {
        const GlobalForm g = parse_global_form(spec, args.formula);
        const GlobalResult r = eval_global(sum, g);
        j["formula"] = to_string(spec, g);
        j["scope"] = "global";
        j["holds"] = r.holds;
        j["local_conjunction"] = r.local_conjunction;
        j["configurations"] = r.configurations;
        j["witness"] = r.witness ? configuration_json(sum, *r.witness) : json(nullptr);
        human << (r.holds ? "true" : "false") << '\n';
        if (r.local_conjunction != r.holds)
            human << "note: the per-machine local conjunction gives "
                  << (r.local_conjunction ? "true" : "false") << '\n';
        if (args.oracle) {
            const ProductMachine pm = build_product(spec, cfg.product_bound);
            const bool o = eval_ctl(pm, *product_formula(spec, g));
            agree = o == r.holds;
            j["oracle"] = o;
            human << "oracle " << (o ? "true" : "false") << (agree ? "" : " (DISAGREES)") << '\n';
        }
    } else {
        if (args.oracle)
            throw QueryError("the oracle cross-check applies to conj-atoms, conj-AX and conj-AF forms");
        MachineIndex i = 0;
        if (!args.machine.empty()) {
            auto m = spec.find_machine(args.machine);
            if (!m)
                throw QueryError("unknown machine " + args.machine);
            i = *m;
        } else if (spec.size() != 1) {
            throw QueryError("local formulas need --machine");
        }
        const NodeId s = parse_node(sum, i, args.node);
        const FormulaPtr f = parse_formula(args.formula);
        const bool holds = eval_local(sum, s, *f);
        j["formula"] = to_string(*f);
        j["scope"] = "local";
        j["machine"] = sum.machine_name(i);
        j["node"] = {{"node", s.value()}, {"name", sum.node_name(s)}};
        j["holds"] = holds;
        human << (holds ? "true" : "false") << '\n';
    }
    print(cfg, j, human.str());
    return agree ? exit_ok : exit_mismatch;
}

int cmd_deadlocks(const RunConfig& cfg, const DeadlockArgs& args) {
    Loaded in = load(cfg);
    SumMachine sum = built(cfg, in);
    const SystemSpec& spec = sum.spec;
    json j = header(cfg, "deadlocks", spec);
    std::ostringstream human;

    const auto found = list_deadlocks(sum);
    json list = json::array();
    for (const Deadlock& d : found) {
        list.push_back({{"state", state_json(spec, d.state)},
                        {"configuration", configuration_json(sum, d.configuration)}});
        human << "deadlock";
        for (std::size_t i = 0; i < d.state.size(); ++i)
            human << ' ' << spec.machines[i].state_name(d.state[i]);
        human << '\n';
    }
    j["deadlocks"] = list;
    json leaves = json::array();
    for (std::size_t id = 0; id < sum.nodes.size(); ++id)
        if (sum.nodes[id].dead)
            leaves.push_back({{"node", id},
                              {"machine", sum.machine_name(sum.nodes[id].machine)},
                              {"name", sum.node_name(NodeId{id})},
                              {"env_state", state_json(spec, sum.fvec(NodeId{id}))}});
    j["dead_leaves"] = leaves;
    human << found.size() << " deadlocks, " << leaves.size() << " dead leaves\n";

    bool agree = true;
    if (args.oracle) {
        const ProductMachine pm = build_product(spec, cfg.product_bound);
        if (pm.truncated)
            throw LimitExceeded("product oracle exceeded its bound of " +
                                std::to_string(cfg.product_bound) + " states");
        auto expected = product_deadlocks(pm);
        std::vector<std::vector<StateId>> got;
        for (const Deadlock& d : found)
            got.push_back(d.state);
        std::sort(expected.begin(), expected.end());
        std::sort(got.begin(), got.end());
        agree = expected == got;
        json ex = json::array();
        for (const auto& v : expected)
            ex.push_back(state_json(spec, v));
        j["oracle"] = {{"deadlocks", ex}, {"agree", agree}};
        human << "oracle " << expected.size() << " deadlocks, " << (agree ? "agree" : "DISAGREE")
              << '\n';
    }
    print(cfg, j, human.str());
    return agree ? exit_ok : exit_mismatch;
}

int cmd_gen(const RunConfig& cfg, const GenArgs& args) {
    const SystemSpec spec = generate_system(args.params);
    const GenParams& p = args.params;
    std::ostringstream os;
    os << "# seed " << p.seed << " machines " << p.machines << " states " << p.states
       << " coupling " << p.coupling << " width " << p.width << '\n'
       << pretty_print(spec);
    write_output(args.out, os.str());
    std::ostream& log = args.out.empty() && cfg.format == Format::json ? std::cerr : std::cout;
    log << "seed " << p.seed << " fnv1a " << std::hex << fnv1a(pretty_print(spec)) << std::dec
        << '\n';
    return exit_ok;
}

} // namespace summachine::cli
