#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "summachine/generator.hpp"
#include "summachine/reachability.hpp"
#include "summachine/unfolding.hpp"

namespace summachine::cli {

enum class Format { json, human };

// Exit codes shared by all commands.
inline constexpr int exit_ok = 0;
inline constexpr int exit_error = 1;
inline constexpr int exit_limit = 2;
inline constexpr int exit_unreachable = 3;

struct RunConfig {
    std::string input;
    Format format = Format::json;
    std::optional<std::uint64_t> seed;
    UnfoldOptions unfold;
    bool both_modes = false;
    ReachOptions reach;
    std::size_t product_bound = 1000000;
};

struct UnfoldArgs {
    std::string out;
    std::string dot_prefix;
    std::string tsv;
};

struct ReachArgs {
    std::string query;
    std::vector<std::string> targets; // "F1=B"
    bool trace = false;
};

struct CheckArgs {
    std::size_t sample = 0; // 0: every full state vector
};

struct EvalArgs {
    std::string formula;
    std::string machine;
    std::string node;
    bool oracle = false;
};

struct DeadlockArgs {
    bool oracle = false;
};

struct GenArgs {
    GenParams params;
    std::string out;
};

int cmd_unfold(const RunConfig& cfg, const UnfoldArgs& args);
int cmd_reach(const RunConfig& cfg, const ReachArgs& args);
int cmd_check(const RunConfig& cfg, const CheckArgs& args);
int cmd_eval(const RunConfig& cfg, const EvalArgs& args);
int cmd_deadlocks(const RunConfig& cfg, const DeadlockArgs& args);
int cmd_gen(const RunConfig& cfg, const GenArgs& args);

} // namespace summachine::cli
