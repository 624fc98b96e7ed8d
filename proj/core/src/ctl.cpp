#include "summachine/ctl.hpp"

#include <cctype>
#include <deque>

#include "summachine/error.hpp"

namespace summachine {

namespace ctl {

FormulaPtr atom(std::string proposition, std::optional<std::string> machine) {
    auto f = std::make_shared<Formula>();
    f->op = CtlOp::atom;
    f->proposition = std::move(proposition);
    f->machine = std::move(machine);
    return f;
}

FormulaPtr top() {
    auto f = std::make_shared<Formula>();
    f->op = CtlOp::top;
    return f;
}

FormulaPtr bottom() {
    auto f = std::make_shared<Formula>();
    f->op = CtlOp::bottom;
    return f;
}

FormulaPtr unary(CtlOp op, FormulaPtr a) {
    auto f = std::make_shared<Formula>();
    f->op = op;
    f->lhs = std::move(a);
    return f;
}

FormulaPtr binary(CtlOp op, FormulaPtr a, FormulaPtr b) {
    auto f = std::make_shared<Formula>();
    f->op = op;
    f->lhs = std::move(a);
    f->rhs = std::move(b);
    return f;
}

} // namespace ctl

namespace {

struct Token {
    enum Kind { ident, string, symbol, end } kind = end;
    std::string text;
    std::size_t column = 1;
};

std::vector<Token> tokenize(std::string_view src) {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < src.size()) {
        const char c = src[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        const std::size_t col = i + 1;
        if (std::isalnum(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t j = i;
            while (j < src.size() && (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_'))
                ++j;
            out.push_back({Token::ident, std::string{src.substr(i, j - i)}, col});
            i = j;
        } else if (c == '"') {
            std::size_t j = i + 1;
            while (j < src.size() && src[j] != '"')
                ++j;
            if (j == src.size())
                throw ParseError("unterminated string", 1, col);
            out.push_back({Token::string, std::string{src.substr(i + 1, j - i - 1)}, col});
            i = j + 1;
        } else if (c == '-' && i + 1 < src.size() && src[i + 1] == '>') {
            out.push_back({Token::symbol, "->", col});
            i += 2;
        } else if (std::string_view{"!&|()[]:"}.find(c) != std::string_view::npos) {
            out.push_back({Token::symbol, std::string(1, c), col});
            ++i;
        } else {
            throw ParseError(std::string{"unexpected character '"} + c + "'", 1, col);
        }
    }
    out.push_back({Token::end, "", src.size() + 1});
    return out;
}

class Parser {
public:
    explicit Parser(std::vector<Token> toks) : toks_{std::move(toks)} {}

    FormulaPtr parse() {
        auto f = implication();
        if (peek().kind != Token::end)
            fail("unexpected '" + peek().text + "'");
        return f;
    }

private:
    std::vector<Token> toks_;
    std::size_t pos_ = 0;

    const Token& peek(std::size_t ahead = 0) const {
        return toks_[std::min(pos_ + ahead, toks_.size() - 1)];
    }
    Token take() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }
    bool is_symbol(const char* s, std::size_t ahead = 0) const {
        return peek(ahead).kind == Token::symbol && peek(ahead).text == s;
    }
    [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, 1, peek().column); }
    void expect(const char* s) {
        if (!is_symbol(s))
            fail(std::string{"expected '"} + s + "'");
        take();
    }

    FormulaPtr implication() {
        auto lhs = disjunction();
        if (is_symbol("->")) {
            take();
            return ctl::binary(CtlOp::implies, lhs, implication());
        }
        return lhs;
    }

    FormulaPtr disjunction() {
        auto f = conjunction();
        while (is_symbol("|")) {
            take();
            f = ctl::binary(CtlOp::or_, f, conjunction());
        }
        return f;
    }

    FormulaPtr conjunction() {
        auto f = unary();
        while (is_symbol("&")) {
            take();
            f = ctl::binary(CtlOp::and_, f, unary());
        }
        return f;
    }

    FormulaPtr unary() {
        if (is_symbol("!")) {
            take();
            return ctl::unary(CtlOp::not_, unary());
        }
        if (is_symbol("(")) {
            take();
            auto f = implication();
            expect(")");
            return f;
        }
        const Token& t = peek();
        if (t.kind == Token::ident) {
            static const std::pair<const char*, CtlOp> temporal[] = {
                {"EX", CtlOp::EX}, {"AX", CtlOp::AX}, {"EF", CtlOp::EF},
                {"AF", CtlOp::AF}, {"EG", CtlOp::EG}, {"AG", CtlOp::AG}};
            for (const auto& [name, op] : temporal) {
                if (t.text == name && !is_symbol(":", 1)) {
                    take();
                    return ctl::unary(op, unary());
                }
            }
            if ((t.text == "E" || t.text == "A") && is_symbol("[", 1)) {
                const CtlOp op = t.text == "E" ? CtlOp::EU : CtlOp::AU;
                take();
                take();
                auto lhs = implication();
                if (peek().kind != Token::ident || peek().text != "U")
                    fail("expected 'U'");
                take();
                auto rhs = implication();
                expect("]");
                return ctl::binary(op, lhs, rhs);
            }
            if (t.text == "true" && !is_symbol(":", 1)) {
                take();
                return ctl::top();
            }
            if (t.text == "false" && !is_symbol(":", 1)) {
                take();
                return ctl::bottom();
            }
        }
        return atom();
    }

    FormulaPtr atom() {
        Token t = take();
        if (t.kind == Token::string)
            return ctl::atom(t.text);
        if (t.kind != Token::ident) {
            --pos_;
            fail(t.kind == Token::end ? "unexpected end of formula" : "unexpected '" + t.text + "'");
        }
        if (is_symbol(":")) {
            take();
            Token p = take();
            if (p.kind != Token::string && p.kind != Token::ident) {
                --pos_;
                fail("expected proposition after ':'");
            }
            return ctl::atom(p.text, t.text);
        }
        return ctl::atom(t.text);
    }
};

} // namespace

FormulaPtr parse_formula(std::string_view text) {
    return Parser{tokenize(text)}.parse();
}

std::string to_string(const Formula& f) {
    auto sub = [](const FormulaPtr& p) { return "(" + to_string(*p) + ")"; };
    switch (f.op) {
    case CtlOp::atom:
        return (f.machine ? *f.machine + ":" : "") + "\"" + f.proposition + "\"";
    case CtlOp::top: return "true";
    case CtlOp::bottom: return "false";
    case CtlOp::not_: return "!" + sub(f.lhs);
    case CtlOp::and_: return sub(f.lhs) + " & " + sub(f.rhs);
    case CtlOp::or_: return sub(f.lhs) + " | " + sub(f.rhs);
    case CtlOp::implies: return sub(f.lhs) + " -> " + sub(f.rhs);
    case CtlOp::EX: return "EX " + sub(f.lhs);
    case CtlOp::AX: return "AX " + sub(f.lhs);
    case CtlOp::EF: return "EF " + sub(f.lhs);
    case CtlOp::AF: return "AF " + sub(f.lhs);
    case CtlOp::EG: return "EG " + sub(f.lhs);
    case CtlOp::AG: return "AG " + sub(f.lhs);
    case CtlOp::EU: return "E [" + to_string(*f.lhs) + " U " + to_string(*f.rhs) + "]";
    case CtlOp::AU: return "A [" + to_string(*f.lhs) + " U " + to_string(*f.rhs) + "]";
    }
    return "?";
}

namespace {

struct Engine {
    const KripkeView& k;
    std::vector<std::vector<std::uint32_t>> preds;

    explicit Engine(const KripkeView& view) : k{view}, preds(view.states) {
        for (std::uint32_t s = 0; s < k.states; ++s)
            for (std::uint32_t t : (*k.successors)[s])
                preds[t].push_back(s);
    }

    const std::vector<std::uint32_t>& succ(std::uint32_t s) const { return (*k.successors)[s]; }

    // Chaotic iteration from bottom (lfp) or top (gfp); `f` is monotone in Z so
    // each state flips at most once and only its predecessors need revisiting.
    template <class F>
    std::vector<char> fixpoint(bool greatest, F f) const {
        std::vector<char> z(k.states, greatest ? 1 : 0);
        std::deque<std::uint32_t> work;
        std::vector<char> queued(k.states, 1);
        for (std::uint32_t s = 0; s < k.states; ++s)
            work.push_back(s);
        while (!work.empty()) {
            const std::uint32_t s = work.front();
            work.pop_front();
            queued[s] = 0;
            const char v = f(s, z) ? 1 : 0;
            if (v == z[s])
                continue;
            z[s] = v;
            for (std::uint32_t p : preds[s])
                if (!queued[p]) {
                    queued[p] = 1;
                    work.push_back(p);
                }
        }
        return z;
    }

    bool any_succ(std::uint32_t s, const std::vector<char>& z) const {
        for (std::uint32_t t : succ(s))
            if (z[t])
                return true;
        return false;
    }
    bool all_succ(std::uint32_t s, const std::vector<char>& z) const {
        for (std::uint32_t t : succ(s))
            if (!z[t])
                return false;
        return true;
    }

    std::vector<char> eval(const Formula& f) const {
        const std::size_t n = k.states;
        switch (f.op) {
        case CtlOp::atom: {
            std::vector<char> out(n);
            for (std::uint32_t s = 0; s < n; ++s)
                out[s] = k.atom(s, f) ? 1 : 0;
            return out;
        }
        case CtlOp::top: return std::vector<char>(n, 1);
        case CtlOp::bottom: return std::vector<char>(n, 0);
        case CtlOp::not_: {
            auto a = eval(*f.lhs);
            for (auto& v : a)
                v = !v;
            return a;
        }
        case CtlOp::and_:
        case CtlOp::or_:
        case CtlOp::implies: {
            auto a = eval(*f.lhs);
            auto b = eval(*f.rhs);
            for (std::size_t s = 0; s < n; ++s) {
                if (f.op == CtlOp::and_)
                    a[s] = a[s] && b[s];
                else if (f.op == CtlOp::or_)
                    a[s] = a[s] || b[s];
                else
                    a[s] = !a[s] || b[s];
            }
            return a;
        }
        case CtlOp::EX: {
            auto a = eval(*f.lhs);
            std::vector<char> out(n);
            for (std::uint32_t s = 0; s < n; ++s)
                out[s] = any_succ(s, a);
            return out;
        }
        case CtlOp::AX: {
            auto a = eval(*f.lhs);
            std::vector<char> out(n);
            for (std::uint32_t s = 0; s < n; ++s)
                out[s] = all_succ(s, a);
            return out;
        }
        case CtlOp::EF: {
            auto a = eval(*f.lhs);
            return fixpoint(false, [&](std::uint32_t s, const auto& z) {
                return a[s] || any_succ(s, z);
            });
        }
        case CtlOp::AF: {
            auto a = eval(*f.lhs);
            return fixpoint(false, [&](std::uint32_t s, const auto& z) {
                return a[s] || (!succ(s).empty() && all_succ(s, z));
            });
        }
        case CtlOp::EG: {
            auto a = eval(*f.lhs);
            return fixpoint(true, [&](std::uint32_t s, const auto& z) {
                return a[s] && (succ(s).empty() || any_succ(s, z));
            });
        }
        case CtlOp::AG: {
            auto a = eval(*f.lhs);
            return fixpoint(true, [&](std::uint32_t s, const auto& z) {
                return a[s] && all_succ(s, z);
            });
        }
        case CtlOp::EU: {
            auto a = eval(*f.lhs);
            auto b = eval(*f.rhs);
            return fixpoint(false, [&](std::uint32_t s, const auto& z) {
                return b[s] || (a[s] && any_succ(s, z));
            });
        }
        case CtlOp::AU: {
            auto a = eval(*f.lhs);
            auto b = eval(*f.rhs);
            return fixpoint(false, [&](std::uint32_t s, const auto& z) {
                return b[s] || (a[s] && !succ(s).empty() && all_succ(s, z));
            });
        }
        }
        throw Error("unknown formula operator");
    }
};

} // namespace

std::vector<char> evaluate(const KripkeView& k, const Formula& f) {
    if (!k.successors || k.successors->size() != k.states)
        throw PreconditionError("Kripke view has no successor table");
    return Engine{k}.eval(f);
}

} // namespace summachine
