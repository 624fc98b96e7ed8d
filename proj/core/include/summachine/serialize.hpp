#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "summachine/product.hpp"
#include "summachine/unfolding.hpp"

namespace summachine {

inline constexpr std::string_view json_schema = "summachine/v1";

/// Full sum machine as "summachine/v1" JSON, including the source spec so the
/// file can be reloaded on its own. Key order and layout are fixed.
std::string sum_machine_to_json(const SumMachine& sum, std::optional<std::uint64_t> seed = {});

/// Inverse of sum_machine_to_json. Throws ParseError on malformed input.
SumMachine sum_machine_from_json(std::string_view text);

/// One digraph per unfolding: solid tree edges labelled by action, dashed
/// edges to ghost nodes naming rendezvous partners, dotted lasso edges.
std::string unfolding_to_dot(const SumMachine& sum, MachineIndex i);

std::string product_to_dot(const ProductMachine& pm);

/// Size summary of a product as JSON.
std::string product_stats_json(const ProductMachine& pm);

} // namespace summachine
