#pragma once

#include <cstdint>
#include <string_view>

#include "summachine/system_spec.hpp"

namespace summachine {

struct GenParams {
    std::uint64_t seed = 0;
    std::size_t machines = 2;
    /// Upper bound on states per machine; each machine gets 2..states (1 if states == 1).
    std::size_t states = 4;
    /// Most distinct sync partners any machine may have.
    std::size_t coupling = 1;
    /// Most outgoing transitions per state.
    std::size_t width = 2;
};

/// Deterministic random system (mt19937_64, modulo draws so results do not
/// depend on the standard library's distributions). Always passes
/// validate_system. Throws PreconditionError on infeasible parameters.
SystemSpec generate_system(const GenParams& p);

/// A family member with no rendezvous: n machines, each a line of m async states.
SystemSpec independent_chain_family(std::size_t n, std::size_t m);

/// n machines passing one token around a ring; machine 1 starts holding it.
SystemSpec token_ring_family(std::size_t n);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes);

} // namespace summachine
