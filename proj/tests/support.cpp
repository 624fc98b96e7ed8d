#include "support.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace summachine::test {

std::string fixture_path(std::string_view name) {
    return std::string{SUMMACHINE_FIXTURE_DIR} + "/" + std::string{name} + ".sys";
}

SystemSpec load_fixture(std::string_view name) {
    std::ifstream in{fixture_path(name)};
    if (!in)
        throw std::runtime_error("missing fixture " + std::string{name});
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_system(ss.str());
}

std::vector<std::string> fixture_names() {
    std::vector<std::string> out;
    for (const auto& e : std::filesystem::directory_iterator{SUMMACHINE_FIXTURE_DIR})
        if (e.path().extension() == ".sys")
            out.push_back(e.path().stem().string());
    std::sort(out.begin(), out.end());
    return out;
}

NodeId node(const SumMachine& sum, std::string_view machine, std::string_view name) {
    const auto i = sum.spec.find_machine(machine);
    if (!i)
        throw std::runtime_error("no machine " + std::string{machine});
    for (NodeId id : sum.unfoldings[*i].nodes)
        if (sum.node_name(id) == name)
            return id;
    throw std::runtime_error("no node " + std::string{name} + " in " + std::string{machine});
}

StateId state(const SystemSpec& spec, std::string_view machine, std::string_view name) {
    const auto i = spec.find_machine(machine);
    if (!i)
        throw std::runtime_error("no machine " + std::string{machine});
    const auto s = spec.machines[*i].find_state(name);
    if (!s)
        throw std::runtime_error("no state " + std::string{name});
    return *s;
}

std::vector<std::string> node_names(const SumMachine& sum, std::string_view machine) {
    std::vector<std::string> out;
    for (NodeId id : sum.unfoldings.at(*sum.spec.find_machine(machine)).nodes)
        out.push_back(sum.node_name(id));
    return out;
}

} // namespace summachine::test
