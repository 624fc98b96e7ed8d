#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "summachine/system_spec.hpp"
#include "summachine/unfolding.hpp"

namespace summachine::test {

std::string fixture_path(std::string_view name);
SystemSpec load_fixture(std::string_view name);
std::vector<std::string> fixture_names();

/// Node of machine `machine` named like "B.0" (state.instance).
NodeId node(const SumMachine& sum, std::string_view machine, std::string_view name);

/// Base state of machine `machine` by name.
StateId state(const SystemSpec& spec, std::string_view machine, std::string_view name);

/// Node names of one unfolding, in id order.
std::vector<std::string> node_names(const SumMachine& sum, std::string_view machine);

} // namespace summachine::test
