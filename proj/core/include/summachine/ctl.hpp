#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace summachine {

enum class CtlOp {
    atom, top, bottom, not_, and_, or_, implies,
    EX, AX, EF, AF, EG, AG, EU, AU
};

struct Formula;
using FormulaPtr = std::shared_ptr<const Formula>;

/// Branching-time formula. Atoms may name a machine ("F1":"B"); local
/// evaluation accepts unbound atoms or atoms bound to the evaluated machine.
struct Formula {
    CtlOp op = CtlOp::top;
    std::string proposition;
    std::optional<std::string> machine;
    FormulaPtr lhs;
    FormulaPtr rhs;
};

namespace ctl {
FormulaPtr atom(std::string proposition, std::optional<std::string> machine = std::nullopt);
FormulaPtr top();
FormulaPtr bottom();
FormulaPtr unary(CtlOp op, FormulaPtr f);
FormulaPtr binary(CtlOp op, FormulaPtr a, FormulaPtr b);
} // namespace ctl

/// Grammar, loosest binding first:
///
///     impl   := or ("->" impl)?
///     or     := and ("|" and)*
///     and    := unary ("&" unary)*
///     unary  := "!" unary | ("EX"|"AX"|"EF"|"AF"|"EG"|"AG") unary
///             | ("E"|"A") "[" impl "U" impl "]" | "(" impl ")"
///             | "true" | "false" | atom
///     atom   := (IDENT ":")? (STRING | IDENT)
///
/// Throws ParseError.
FormulaPtr parse_formula(std::string_view text);

std::string to_string(const Formula& f);

/// Finite Kripke structure for the fixpoint engine. States without successors
/// end their maximal paths: EX is false there, AX vacuously true.
struct KripkeView {
    std::size_t states = 0;
    const std::vector<std::vector<std::uint32_t>>* successors = nullptr;
    std::function<bool(std::uint32_t, const Formula&)> atom;
};

/// Satisfaction set of f; entry s is 1 iff s satisfies f. Every temporal
/// operator is computed by its own least or greatest fixpoint.
std::vector<char> evaluate(const KripkeView& k, const Formula& f);

} // namespace summachine
