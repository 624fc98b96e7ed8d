#include "summachine/generator.hpp"

#include <algorithm>
#include <optional>
#include <random>

#include "summachine/error.hpp"

namespace summachine {

namespace {

class Draw {
public:
    explicit Draw(std::uint64_t seed) : rng_{seed} {}
    std::size_t below(std::size_t bound) { return static_cast<std::size_t>(rng_() % bound); }

private:
    std::mt19937_64 rng_;
};

bool has_transition(const CfsmSpec& m, const CfsmTransition& t) {
    return std::find(m.transitions.begin(), m.transitions.end(), t) != m.transitions.end();
}

} // namespace

SystemSpec generate_system(const GenParams& p) {
    if (p.machines == 0 || p.states == 0 || p.width == 0)
        throw PreconditionError("machines, states and width must be positive");
    if (p.coupling > p.machines - 1)
        throw PreconditionError("coupling " + std::to_string(p.coupling) + " exceeds the " +
                                std::to_string(p.machines - 1) + " possible partners");
    Draw d{p.seed};
    SystemSpec spec;
    spec.name = "gen_" + std::to_string(p.seed);
    for (std::size_t i = 0; i < p.machines; ++i) {
        CfsmSpec m;
        m.name = "F" + std::to_string(i + 1);
        m.index = i;
        const std::size_t k = p.states == 1 ? 1 : 2 + d.below(p.states - 1);
        for (std::size_t s = 0; s < k; ++s)
            m.states.push_back("s" + std::to_string(s));
        m.initial = StateId{0};
        spec.machines.push_back(std::move(m));
    }

    std::vector<std::vector<std::size_t>> used(p.machines);
    for (std::size_t i = 0; i < p.machines; ++i)
        used[i].assign(spec.machines[i].state_count(), 0);
    // Some state of machine i with room for another transition.
    auto pick_source = [&](std::size_t i) -> std::optional<std::size_t> {
        const std::size_t k = used[i].size();
        const std::size_t start = d.below(k);
        for (std::size_t o = 0; o < k; ++o) {
            const std::size_t s = (start + o) % k;
            if (used[i][s] < p.width)
                return s;
        }
        return std::nullopt;
    };
    auto add = [&](std::size_t i, std::size_t src, ActionLabel a, std::size_t dst) {
        CfsmTransition t{StateId{src}, std::move(a), StateId{dst}};
        if (has_transition(spec.machines[i], t))
            return false;
        spec.machines[i].transitions.push_back(std::move(t));
        ++used[i][src];
        return true;
    };

    // Partner graph with degree <= coupling.
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < p.machines; ++i)
        for (std::size_t j = i + 1; j < p.machines; ++j)
            pairs.emplace_back(i, j);
    for (std::size_t k = pairs.size(); k > 1; --k)
        std::swap(pairs[k - 1], pairs[d.below(k)]);
    std::vector<std::size_t> degree(p.machines, 0);
    for (auto [i, j] : pairs) {
        if (degree[i] >= p.coupling || degree[j] >= p.coupling || d.below(3) == 0)
            continue;
        ++degree[i];
        ++degree[j];
        const std::size_t channels = 1 + d.below(2);
        for (std::size_t c = 0; c < channels; ++c) {
            const std::string name = "m" + std::to_string(i + 1) + "_" + std::to_string(j + 1) +
                                     "_" + std::to_string(c);
            auto si = pick_source(i);
            auto sj = pick_source(j);
            if (!si || !sj)
                continue;
            const std::size_t di = d.below(used[i].size());
            const std::size_t dj = d.below(used[j].size());
            add(i, *si, {name, ActionKind::sync, j}, di);
            add(j, *sj, {name, ActionKind::sync, i}, dj);
            // a second copy on one side creates a choice between partners
            if (d.below(3) == 0) {
                const bool left = d.below(2) == 0;
                const std::size_t owner = left ? i : j;
                const std::size_t other = left ? j : i;
                if (auto s2 = pick_source(owner))
                    add(owner, *s2, {name, ActionKind::sync, other}, d.below(used[owner].size()));
            }
        }
    }

    for (std::size_t i = 0; i < p.machines; ++i) {
        for (std::size_t s = 0; s < used[i].size(); ++s) {
            if (d.below(3) == 0)
                continue;
            const std::size_t count = 1 + d.below(p.width);
            for (std::size_t c = 0; c < count && used[i][s] < p.width; ++c)
                add(i, s, {"t" + std::to_string(d.below(2)), ActionKind::async, std::nullopt},
                    d.below(used[i].size()));
        }
    }
    // the initial state always has a move, so no machine is trivially stuck
    for (std::size_t i = 0; i < p.machines; ++i)
        if (used[i][0] == 0)
            add(i, 0, {"t0", ActionKind::async, std::nullopt}, d.below(used[i].size()));
    for (auto& m : spec.machines) {
        m.extra_labels.assign(m.state_count(), {});
        m.index_transitions();
    }
    return spec;
}

SystemSpec independent_chain_family(std::size_t n, std::size_t m) {
    if (n == 0 || m == 0)
        throw PreconditionError("family parameters must be positive");
    SystemSpec spec;
    spec.name = "chains_" + std::to_string(n) + "x" + std::to_string(m);
    for (std::size_t i = 0; i < n; ++i) {
        CfsmSpec f;
        f.name = "F" + std::to_string(i + 1);
        f.index = i;
        for (std::size_t s = 0; s < m; ++s)
            f.states.push_back("c" + std::to_string(s));
        for (std::size_t s = 0; s + 1 < m; ++s)
            f.transitions.push_back({StateId{s}, {"step", ActionKind::async, std::nullopt},
                                     StateId{s + 1}});
        f.extra_labels.assign(m, {});
        f.index_transitions();
        spec.machines.push_back(std::move(f));
    }
    return spec;
}

SystemSpec token_ring_family(std::size_t n) {
    if (n < 2)
        throw PreconditionError("a token ring needs at least two machines");
    SystemSpec spec;
    spec.name = "ring_" + std::to_string(n);
    for (std::size_t i = 0; i < n; ++i) {
        CfsmSpec f;
        f.name = "F" + std::to_string(i + 1);
        f.index = i;
        f.states = {"I", "H", "W", "P"};
        f.initial = i == 0 ? StateId{1} : StateId{0};
        const std::size_t prev = (i + n - 1) % n;
        const std::size_t next = (i + 1) % n;
        f.transitions = {
            {StateId{0}, {"tok_" + std::to_string(prev + 1), ActionKind::sync, prev}, StateId{1}},
            {StateId{1}, {"w", ActionKind::async, std::nullopt}, StateId{2}},
            {StateId{2}, {"x", ActionKind::async, std::nullopt}, StateId{3}},
            {StateId{3}, {"tok_" + std::to_string(i + 1), ActionKind::sync, next}, StateId{0}},
        };
        f.extra_labels.assign(4, {});
        f.index_transitions();
        spec.machines.push_back(std::move(f));
    }
    return spec;
}

std::uint64_t fnv1a(std::string_view bytes) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

} // namespace summachine
