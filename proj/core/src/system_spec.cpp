#include "summachine/system_spec.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <sstream>
#include <tuple>

#include "summachine/error.hpp"

namespace summachine {

std::optional<StateId> CfsmSpec::find_state(std::string_view state_name) const {
    auto it = std::find(states.begin(), states.end(), state_name);
    if (it == states.end())
        return std::nullopt;
    return StateId{static_cast<std::size_t>(it - states.begin())};
}

std::set<std::string> CfsmSpec::labels(StateId s) const {
    std::set<std::string> out;
    out.insert(states.at(s.index()));
    if (s.index() < extra_labels.size())
        out.insert(extra_labels[s.index()].begin(), extra_labels[s.index()].end());
    return out;
}

bool CfsmSpec::has_label(StateId s, std::string_view proposition) const {
    if (states.at(s.index()) == proposition)
        return true;
    if (s.index() >= extra_labels.size())
        return false;
    const auto& extra = extra_labels[s.index()];
    return extra.find(std::string{proposition}) != extra.end();
}

bool CfsmSpec::declares(std::string_view proposition) const {
    for (std::size_t s = 0; s < states.size(); ++s)
        if (has_label(StateId{s}, proposition))
            return true;
    return false;
}

std::span<const TransitionId> CfsmSpec::outgoing(StateId s) const {
    if (s.index() >= outgoing_.size())
        return {};
    return outgoing_[s.index()];
}

bool CfsmSpec::has_async_from(StateId s) const {
    for (TransitionId t : outgoing(s))
        if (!transition(t).action.is_sync())
            return true;
    return false;
}

void CfsmSpec::index_transitions() {
    outgoing_.assign(states.size(), {});
    for (std::size_t t = 0; t < transitions.size(); ++t) {
        const auto& tr = transitions[t];
        if (tr.source.index() < states.size())
            outgoing_[tr.source.index()].push_back(TransitionId{t});
    }
    extra_labels.resize(states.size());
}

std::optional<MachineIndex> SystemSpec::find_machine(std::string_view machine_name) const {
    for (std::size_t i = 0; i < machines.size(); ++i)
        if (machines[i].name == machine_name)
            return i;
    return std::nullopt;
}

std::size_t SystemSpec::max_states() const {
    std::size_t n = 0;
    for (const auto& m : machines)
        n = std::max(n, m.state_count());
    return n;
}

std::vector<StateId> SystemSpec::initial_vector() const {
    std::vector<StateId> v;
    v.reserve(machines.size());
    for (const auto& m : machines)
        v.push_back(m.initial);
    return v;
}

namespace {

enum class Tok { ident, arrow, colon, lbrace, rbrace, end };

struct Token {
    Tok kind;
    std::string text;
    std::size_t line;
    std::size_t column;
};

bool is_ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_';
}

std::vector<Token> tokenize(std::string_view text) {
    std::vector<Token> out;
    std::size_t line = 1;
    std::size_t col = 1;
    std::size_t i = 0;
    auto advance = [&](std::size_t k) {
        for (std::size_t j = 0; j < k; ++j) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
            ++i;
        }
    };
    while (i < text.size()) {
        char c = text[i];
        if (std::isspace(static_cast<unsigned char>(c)) != 0) {
            advance(1);
        } else if (c == '#') {
            while (i < text.size() && text[i] != '\n')
                advance(1);
        } else if (c == '-' && i + 1 < text.size() && text[i + 1] == '>') {
            out.push_back({Tok::arrow, "->", line, col});
            advance(2);
        } else if (c == ':') {
            out.push_back({Tok::colon, ":", line, col});
            advance(1);
        } else if (c == '{') {
            out.push_back({Tok::lbrace, "{", line, col});
            advance(1);
        } else if (c == '}') {
            out.push_back({Tok::rbrace, "}", line, col});
            advance(1);
        } else if (is_ident_char(c)) {
            std::size_t start = i;
            std::size_t l = line;
            std::size_t cl = col;
            while (i < text.size() && is_ident_char(text[i]))
                advance(1);
            out.push_back({Tok::ident, std::string{text.substr(start, i - start)}, l, cl});
        } else {
            throw ParseError(std::string{"unexpected character '"} + c + "'", line, col);
        }
    }
    out.push_back({Tok::end, "", line, col});
    return out;
}

const std::set<std::string, std::less<>> keywords = {"system", "machine", "init", "states",
                                                     "trans",  "with",    "label"};

struct PendingSync {
    MachineIndex machine;
    std::size_t transition;
    Token partner;
};

class Parser {
public:
    explicit Parser(std::vector<Token> tokens) : toks_{std::move(tokens)} {}

    SystemSpec run() {
        SystemSpec spec;
        expect_keyword("system");
        spec.name = expect_ident("system name").text;
        if (!at_keyword("machine"))
            fail("expected at least one 'machine'");
        while (at_keyword("machine"))
            spec.machines.push_back(parse_machine(spec.machines.size()));
        if (peek().kind != Tok::end)
            fail("expected 'machine' or end of input");
        resolve_partners(spec);
        for (auto& m : spec.machines)
            m.index_transitions();
        return spec;
    }

private:
    std::vector<Token> toks_;
    std::size_t pos_ = 0;
    std::vector<PendingSync> pending_;
    std::map<std::string, Token, std::less<>> machine_decl_;

    const Token& peek() const { return toks_[pos_]; }
    const Token& take() { return toks_[pos_++]; }

    [[noreturn]] void fail(const std::string& msg) const {
        throw ParseError(msg, peek().line, peek().column);
    }
    [[noreturn]] static void fail_at(const Token& t, const std::string& msg) {
        throw ParseError(msg, t.line, t.column);
    }

    bool at_keyword(std::string_view kw) const {
        return peek().kind == Tok::ident && peek().text == kw;
    }
    void expect_keyword(std::string_view kw) {
        if (!at_keyword(kw))
            fail("expected '" + std::string{kw} + "'");
        take();
    }
    const Token& expect_ident(std::string_view what) {
        if (peek().kind != Tok::ident || keywords.count(peek().text) != 0)
            fail("expected " + std::string{what});
        return take();
    }
    void expect(Tok kind, std::string_view what) {
        if (peek().kind != kind)
            fail("expected " + std::string{what});
        take();
    }

    CfsmSpec parse_machine(MachineIndex index) {
        expect_keyword("machine");
        const Token& name = expect_ident("machine name");
        if (machine_decl_.count(name.text) != 0)
            fail_at(name, "duplicate machine '" + name.text + "'");
        machine_decl_.emplace(name.text, name);

        CfsmSpec m;
        m.name = name.text;
        m.index = index;
        expect(Tok::lbrace, "'{'");
        expect_keyword("init");
        const Token init = expect_ident("initial state");
        expect_keyword("states");
        do {
            const Token& s = expect_ident("state name");
            if (m.find_state(s.text))
                fail_at(s, "duplicate state '" + s.text + "' in machine '" + m.name + "'");
            m.states.push_back(s.text);
        } while (peek().kind == Tok::ident && keywords.count(peek().text) == 0);
        m.extra_labels.resize(m.states.size());

        auto state_ref = [&](const Token& t) {
            auto s = m.find_state(t.text);
            if (!s)
                fail_at(t, "unknown state '" + t.text + "' in machine '" + m.name + "'");
            return *s;
        };
        m.initial = state_ref(init);

        while (at_keyword("trans")) {
            take();
            const Token src = expect_ident("source state");
            expect(Tok::arrow, "'->'");
            const Token dst = expect_ident("destination state");
            expect(Tok::colon, "':'");
            const Token act = expect_ident("action name");
            CfsmTransition tr{state_ref(src), ActionLabel{act.text, ActionKind::async, {}},
                              state_ref(dst)};
            if (at_keyword("with")) {
                take();
                const Token partner = expect_ident("partner machine");
                tr.action.kind = ActionKind::sync;
                pending_.push_back({index, m.transitions.size(), partner});
            }
            m.transitions.push_back(std::move(tr));
        }
        while (at_keyword("label")) {
            take();
            const Token st = expect_ident("state name");
            StateId s = state_ref(st);
            expect(Tok::colon, "':'");
            do {
                m.extra_labels[s.index()].insert(expect_ident("proposition").text);
            } while (peek().kind == Tok::ident && keywords.count(peek().text) == 0);
        }
        expect(Tok::rbrace, "'}' or 'trans'/'label'");
        return m;
    }

    void resolve_partners(SystemSpec& spec) {
        for (const auto& p : pending_) {
            auto j = spec.find_machine(p.partner.text);
            if (!j)
                fail_at(p.partner, "unknown machine '" + p.partner.text + "'");
            spec.machines[p.machine].transitions[p.transition].action.partner = *j;
        }
    }
};

} // namespace

SystemSpec parse_system(std::string_view text) {
    return Parser{tokenize(text)}.run();
}

std::string pretty_print(const SystemSpec& spec) {
    std::ostringstream os;
    os << "system " << spec.name << "\n";
    for (const auto& m : spec.machines) {
        os << "\nmachine " << m.name << " {\n";
        os << "  init " << m.state_name(m.initial) << "\n";
        os << "  states";
        for (const auto& s : m.states)
            os << ' ' << s;
        os << "\n";
        for (const auto& t : m.transitions) {
            os << "  trans " << m.state_name(t.source) << " -> " << m.state_name(t.destination)
               << " : " << t.action.name;
            if (t.action.is_sync())
                os << " with " << spec.machines.at(*t.action.partner).name;
            os << "\n";
        }
        for (std::size_t s = 0; s < m.extra_labels.size(); ++s) {
            if (m.extra_labels[s].empty())
                continue;
            os << "  label " << m.states[s] << " :";
            for (const auto& p : m.extra_labels[s])
                os << ' ' << p;
            os << "\n";
        }
        os << "}\n";
    }
    return os.str();
}

std::vector<Violation> validate_system(const SystemSpec& spec) {
    std::vector<Violation> out;
    const std::size_t n = spec.size();
    if (n == 0)
        out.push_back({"empty system", 0, std::nullopt, "a system needs at least one machine"});

    for (std::size_t i = 0; i < n; ++i) {
        const auto& m = spec.machines[i];
        if (m.index != i)
            out.push_back({"machine index out of order", i, std::nullopt,
                           "declared index " + std::to_string(m.index)});
        if (m.initial.index() >= m.state_count())
            out.push_back({"initial state undeclared", i, std::nullopt, ""});

        std::set<std::tuple<std::size_t, std::size_t, std::string>> seen;
        for (std::size_t t = 0; t < m.transitions.size(); ++t) {
            const auto& tr = m.transitions[t];
            TransitionId tid{t};
            if (tr.source.index() >= m.state_count() || tr.destination.index() >= m.state_count())
                out.push_back({"transition endpoint undeclared", i, tid, ""});
            if (tr.action.name.empty())
                out.push_back({"empty action name", i, tid, ""});
            if (!seen.emplace(tr.source.index(), tr.destination.index(), tr.action.name).second)
                out.push_back({"duplicate transition", i, tid, tr.action.name});
            if (!tr.action.is_sync()) {
                if (tr.action.partner)
                    out.push_back({"async action with partner", i, tid, tr.action.name});
                continue;
            }
            if (!tr.action.partner || *tr.action.partner >= n || *tr.action.partner == i) {
                out.push_back({"sync partner out of range", i, tid, tr.action.name});
                continue;
            }
            const auto j = *tr.action.partner;
            const auto& pm = spec.machines[j];
            bool matched = std::any_of(pm.transitions.begin(), pm.transitions.end(),
                                       [&](const CfsmTransition& o) {
                                           return o.action.is_sync() && o.action.partner == i &&
                                                  o.action.name == tr.action.name;
                                       });
            if (!matched)
                out.push_back({"unmatched sync action", i, tid,
                               tr.action.name + " has no reciprocal in " + pm.name});
        }
    }
    return out;
}

std::string describe(const SystemSpec& spec, const Violation& v) {
    std::ostringstream os;
    os << v.rule;
    if (v.machine < spec.size()) {
        const auto& m = spec.machines[v.machine];
        os << " in machine " << m.name;
        if (v.transition && v.transition->index() < m.transitions.size()) {
            const auto& t = m.transitions[v.transition->index()];
            os << " at transition #" << v.transition->index() << " ("
               << (t.source.index() < m.state_count() ? m.state_name(t.source) : "?") << " -> "
               << (t.destination.index() < m.state_count() ? m.state_name(t.destination) : "?")
               << " : " << t.action.name << ")";
        }
    }
    if (!v.detail.empty())
        os << ": " << v.detail;
    return os.str();
}

} // namespace summachine
