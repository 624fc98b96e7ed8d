#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <limits>
#include <ostream>

namespace summachine {

// Index-like handle that cannot be mixed up with handles of another kind.
template <typename Tag>
class Id {
public:
    using value_type = std::uint32_t;
    static constexpr value_type invalid_value = std::numeric_limits<value_type>::max();

    constexpr Id() = default;
    constexpr explicit Id(value_type v) : value_{v} {}
    constexpr explicit Id(std::size_t v) : value_{static_cast<value_type>(v)} {}
    constexpr explicit Id(int v) : value_{static_cast<value_type>(v)} {}

    [[nodiscard]] constexpr value_type value() const { return value_; }
    [[nodiscard]] constexpr std::size_t index() const { return value_; }
    [[nodiscard]] constexpr bool valid() const { return value_ != invalid_value; }
    constexpr explicit operator bool() const { return valid(); }

    friend constexpr auto operator<=>(Id, Id) = default;
    friend std::ostream& operator<<(std::ostream& os, Id id) {
        if (!id.valid())
            return os << "<none>";
        return os << id.value_;
    }

private:
    value_type value_ = invalid_value;
};

struct StateTag;
struct TransitionTag;
struct NodeTag;

/// A state of one CFSM (index into CfsmSpec::states).
using StateId = Id<StateTag>;
/// A transition of one CFSM (index into CfsmSpec::transitions).
using TransitionId = Id<TransitionTag>;
/// A node of the sum machine (index into SumMachine::nodes).
using NodeId = Id<NodeTag>;

/// Machines are addressed by their 0-based declaration position.
using MachineIndex = std::size_t;

} // namespace summachine

template <typename Tag>
struct std::hash<summachine::Id<Tag>> {
    std::size_t operator()(summachine::Id<Tag> id) const noexcept {
        return std::hash<std::uint32_t>{}(id.value());
    }
};
