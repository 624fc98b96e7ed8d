#include "summachine/serialize.hpp"

#include <sstream>

#include <json.hpp>

#include "summachine/error.hpp"

namespace summachine {

using nlohmann::json;

namespace {

std::string_view kind_name(NodeKind k) {
    switch (k) {
    case NodeKind::initial: return "initial";
    case NodeKind::async_output: return "async";
    case NodeKind::sync_output: return "sync";
    }
    return "?";
}

NodeKind kind_from(const std::string& s) {
    if (s == "initial")
        return NodeKind::initial;
    if (s == "async")
        return NodeKind::async_output;
    if (s == "sync")
        return NodeKind::sync_output;
    throw ParseError("unknown node kind '" + s + "'", 1, 1);
}

json id_or_null(NodeId id) {
    return id ? json(id.value()) : json(nullptr);
}

NodeId id_from(const json& j) {
    return j.is_null() ? NodeId{} : NodeId{j.get<std::uint32_t>()};
}

} // namespace

std::string sum_machine_to_json(const SumMachine& sum, std::optional<std::uint64_t> seed) {
    json doc;
    doc["schema"] = json_schema;
    doc["kind"] = "sum_machine";
    doc["seed"] = seed ? json(*seed) : json(nullptr);
    doc["system"] = sum.spec.name;
    doc["spec"] = pretty_print(sum.spec);

    json machines = json::array();
    for (const auto& u : sum.unfoldings) {
        json ids = json::array();
        for (NodeId id : u.nodes)
            ids.push_back(id.value());
        machines.push_back({{"name", sum.machine_name(u.machine)},
                            {"root", u.root.value()},
                            {"nodes", ids}});
    }
    doc["machines"] = machines;

    json nodes = json::array();
    json edges = json::array();
    json sync = json::array();
    for (std::size_t id = 0; id < sum.nodes.size(); ++id) {
        const Node& n = sum.nodes[id];
        const CfsmSpec& m = sum.spec.machines[n.machine];
        json env = json::array();
        for (NodeId e : n.env)
            env.push_back(e.value());
        json fv = json::array();
        for (NodeId e : n.env)
            fv.push_back(sum.spec.machines[sum.node(e).machine].state_name(sum.node(e).base));
        json kids = json::array();
        for (NodeId c : n.children)
            kids.push_back(c.value());
        nodes.push_back({{"id", id},
                         {"machine", n.machine},
                         {"state", m.state_name(n.base)},
                         {"instance", n.instance},
                         {"name", sum.node_name(NodeId{id})},
                         {"env", env},
                         {"fvec", fv},
                         {"parent", id_or_null(n.parent)},
                         {"via", n.via ? json(n.via.value()) : json(nullptr)},
                         {"kind", kind_name(n.kind)},
                         {"sync_partner", id_or_null(n.sync_partner)},
                         {"cutoff", n.cutoff},
                         {"cutoff_match", id_or_null(n.cutoff_match)},
                         {"dead", n.dead},
                         {"depth", n.depth},
                         {"children", kids}});
        if (n.parent)
            edges.push_back({{"from", n.parent.value()},
                             {"to", id},
                             {"action", m.transition(n.via).action.name}});
        if (n.sync_partner && n.sync_partner.index() > id)
            sync.push_back({id, n.sync_partner.value()});
    }
    doc["nodes"] = nodes;
    doc["edges"] = edges;
    doc["sync_edges"] = sync;

    json per = json::array();
    for (std::size_t i = 0; i < sum.stats.machines.size(); ++i) {
        const auto& ms = sum.stats.machines[i];
        per.push_back({{"machine", sum.machine_name(i)},
                       {"nodes", ms.nodes},
                       {"cutoffs", ms.cutoffs},
                       {"dead", ms.dead},
                       {"terminal", ms.terminal},
                       {"depth", ms.depth}});
    }
    doc["stats"] = {{"machines", per},
                    {"total_nodes", sum.stats.total_nodes},
                    {"total_cutoffs", sum.stats.total_cutoffs},
                    {"total_dead", sum.stats.total_dead},
                    {"max_depth", sum.stats.max_depth},
                    {"coupling_factor", sum.stats.coupling_factor},
                    {"max_states", sum.spec.max_states()}};
    return doc.dump(2) + "\n";
}

SumMachine sum_machine_from_json(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(e.what(), 1, e.byte);
    }
    try {
        if (doc.at("schema").get<std::string>() != json_schema)
            throw ParseError("unsupported schema '" + doc.at("schema").get<std::string>() + "'", 1, 1);
        if (doc.at("kind").get<std::string>() != "sum_machine")
            throw ParseError("document is not a sum machine", 1, 1);
        SumMachine sum;
        sum.spec = parse_system(doc.at("spec").get<std::string>());
        const auto& nodes = doc.at("nodes");
        sum.nodes.resize(nodes.size());
        for (const auto& jn : nodes) {
            const auto id = jn.at("id").get<std::size_t>();
            if (id >= sum.nodes.size())
                throw ParseError("node id out of range", 1, 1);
            Node& n = sum.nodes[id];
            n.machine = jn.at("machine").get<std::size_t>();
            if (n.machine >= sum.spec.size())
                throw ParseError("node machine out of range", 1, 1);
            const CfsmSpec& m = sum.spec.machines[n.machine];
            auto st = m.find_state(jn.at("state").get<std::string>());
            if (!st)
                throw ParseError("unknown state in node " + std::to_string(id), 1, 1);
            n.base = *st;
            n.instance = jn.at("instance").get<std::uint32_t>();
            for (const auto& e : jn.at("env"))
                n.env.push_back(NodeId{e.get<std::uint32_t>()});
            n.parent = id_from(jn.at("parent"));
            n.via = jn.at("via").is_null() ? TransitionId{}
                                           : TransitionId{jn.at("via").get<std::uint32_t>()};
            n.kind = kind_from(jn.at("kind").get<std::string>());
            n.sync_partner = id_from(jn.at("sync_partner"));
            n.cutoff = jn.at("cutoff").get<bool>();
            n.cutoff_match = id_from(jn.at("cutoff_match"));
            n.dead = jn.at("dead").get<bool>();
            n.depth = jn.at("depth").get<std::uint32_t>();
            for (const auto& c : jn.at("children"))
                n.children.push_back(NodeId{c.get<std::uint32_t>()});
        }
        for (const auto& jm : doc.at("machines")) {
            Unfolding u;
            auto i = sum.spec.find_machine(jm.at("name").get<std::string>());
            if (!i)
                throw ParseError("unknown machine in sum machine", 1, 1);
            u.machine = *i;
            u.root = NodeId{jm.at("root").get<std::uint32_t>()};
            for (const auto& id : jm.at("nodes"))
                u.nodes.push_back(NodeId{id.get<std::uint32_t>()});
            sum.unfoldings.push_back(std::move(u));
        }
        if (sum.unfoldings.size() != sum.spec.size())
            throw ParseError("machine count does not match the spec", 1, 1);
        for (std::size_t i = 0; i < sum.unfoldings.size(); ++i)
            if (sum.unfoldings[i].machine != i)
                throw ParseError("machines out of order", 1, 1);
        sum.rebuild_indices();
        return sum;
    } catch (const json::exception& e) {
        throw ParseError(std::string{"malformed sum machine: "} + e.what(), 1, 1);
    }
}

namespace {

std::string quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\')
            out += '\\';
        out += c;
    }
    return out + "\"";
}

} // namespace

std::string unfolding_to_dot(const SumMachine& sum, MachineIndex i) {
    std::ostringstream os;
    const auto& u = sum.unfoldings.at(i);
    const CfsmSpec& m = sum.spec.machines[i];
    os << "digraph " << quote(m.name) << " {\n";
    os << "  node [shape=circle];\n";
    for (NodeId id : u.nodes) {
        const Node& n = sum.node(id);
        os << "  n" << id.value() << " [label=" << quote(sum.node_name(id));
        if (n.cutoff)
            os << ", shape=doublecircle";
        if (n.dead)
            os << ", style=filled, fillcolor=gray";
        os << "];\n";
    }
    for (NodeId id : u.nodes) {
        const Node& n = sum.node(id);
        if (n.parent)
            os << "  n" << n.parent.value() << " -> n" << id.value()
               << " [label=" << quote(m.transition(n.via).action.name) << "];\n";
        if (n.sync_partner) {
            const std::string ghost = "s" + std::to_string(id.value());
            os << "  " << ghost << " [shape=plaintext, label="
               << quote(sum.machine_name(sum.node(n.sync_partner).machine) + ":" +
                        sum.node_name(n.sync_partner))
               << "];\n";
            os << "  n" << id.value() << " -> " << ghost << " [style=dashed, arrowhead=none];\n";
        }
        if (n.cutoff)
            os << "  n" << id.value() << " -> n" << sum.lasso_target(id).value()
               << " [style=dotted, constraint=false];\n";
    }
    os << "}\n";
    return os.str();
}

std::string product_to_dot(const ProductMachine& pm) {
    std::ostringstream os;
    os << "digraph product {\n  node [shape=box];\n";
    for (std::uint32_t s = 0; s < pm.state_count(); ++s) {
        std::string label;
        auto v = pm.state(s);
        for (std::size_t i = 0; i < v.size(); ++i)
            label += (i ? "," : "") + pm.spec.machines[i].state_name(v[i]);
        os << "  p" << s << " [label=" << quote(label) << (s == 0 ? ", penwidth=2" : "") << "];\n";
    }
    for (const ProductEdge& e : pm.edges)
        os << "  p" << e.from << " -> p" << e.to << " [label=" << quote(pm.action(e)) << "];\n";
    os << "}\n";
    return os.str();
}

std::string product_stats_json(const ProductMachine& pm) {
    json doc{{"schema", json_schema},
             {"kind", "product_stats"},
             {"states", pm.state_count()},
             {"edges", pm.edges.size()},
             {"truncated", pm.truncated}};
    return doc.dump(2) + "\n";
}

} // namespace summachine
