#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "summachine/unfolding.hpp"

namespace summachine {

enum class RelationKind { seq_forward, seq_backward, conf, co, identity };

std::string_view to_string(RelationKind k);

/// Work counters for the env-based concurrency tests.
struct CoCost {
    std::size_t calls = 0;
    /// Parent-link steps taken by the two anchor walks.
    std::size_t anchor_steps = 0;
    /// Largest anchor_steps of a single call.
    std::size_t max_call_steps = 0;
    /// O(1) preorder-interval comparisons on third coordinates.
    std::size_t interval_checks = 0;
};

/// Property 1 as printed: env_i(s_j) reaches s_i and env_j(s_i) reaches s_j.
/// Exact for two machines; with three or more it misses conflicts that enter
/// through a third machine (see the relations tests).
bool co_anchor(const SumMachine& sum, NodeId s_i, NodeId s_j, CoCost* cost = nullptr);

/// The anchor test plus R_k*-comparability of env_k on every other coordinate.
/// Agrees with co_definitional on every cross-machine pair.
bool co_fast(const SumMachine& sum, NodeId s_i, NodeId s_j, CoCost* cost = nullptr);

struct PairClassification {
    RelationKind kind = RelationKind::identity;
    bool seq_forward = false;
    bool seq_backward = false;
    bool conf = false;
    bool co = false;
    /// More than one relation held; kind is the first by priority.
    bool overlap = false;

    [[nodiscard]] bool covered() const { return seq_forward || seq_backward || conf || co; }
};

/// Causality and the seq/conf/co algebra over one sum machine. The ≤ index is
/// built once in the constructor; all queries are const and thread-safe.
class Relations {
public:
    explicit Relations(const SumMachine& sum);

    [[nodiscard]] const SumMachine& sum() const { return *sum_; }

    /// t reachable from s over local edges and both directions of sync edges.
    [[nodiscard]] bool leq(NodeId s, NodeId t) const;
    /// Same relation answered from environment vectors; used as a cross-check.
    [[nodiscard]] bool leq_by_env(NodeId s, NodeId t) const;

    [[nodiscard]] bool seq_rel(NodeId s, NodeId t) const;
    [[nodiscard]] bool conf_rel(NodeId s, NodeId t) const;
    /// Throws PreconditionError for same-machine pairs.
    [[nodiscard]] bool co_definitional(NodeId s, NodeId t) const;
    [[nodiscard]] bool co_fast(NodeId s, NodeId t, CoCost* cost = nullptr) const {
        return summachine::co_fast(*sum_, s, t, cost);
    }

    /// Maximal elements of { y in tree k : leq(y, x) }.
    [[nodiscard]] std::span<const NodeId> past_frontier(NodeId x, MachineIndex k) const;

    [[nodiscard]] PairClassification classify_detail(NodeId s, NodeId t) const;
    [[nodiscard]] RelationKind classify_pair(NodeId s, NodeId t) const {
        return classify_detail(s, t).kind;
    }

    /// One line per ordered pair of distinct nodes: "s<TAB>t<TAB>kind".
    void write_tsv(std::ostream& os) const;

private:
    const SumMachine* sum_;
    std::vector<std::uint32_t> klass_;      // node -> simultaneity class
    std::size_t words_ = 0;
    std::vector<std::uint64_t> below_;      // class -> bitset of classes ≤ it
    std::vector<std::vector<std::vector<NodeId>>> frontier_; // node -> machine -> maxima

    [[nodiscard]] bool class_leq(std::uint32_t a, std::uint32_t b) const {
        return (below_[b * words_ + a / 64] >> (a % 64)) & 1U;
    }
};

} // namespace summachine
