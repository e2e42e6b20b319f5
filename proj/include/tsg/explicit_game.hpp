#pragma once

// Explicit turn-based stochastic game: enumerated states with an owner
// partition, a sparse transition function keyed by action, labels and
// reward structures. Immutable once built; shared freely.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace tsg {

struct ModelError : std::runtime_error {
    explicit ModelError(const std::string& msg) : std::runtime_error(msg) {}
};

inline constexpr double kDistTolerance = 1e-9;

// Successor list of one (state, action) choice; probabilities sum to 1.
using Distribution = std::vector<std::pair<int, double>>;

struct Coalition {
    std::vector<int> members;  // player indices, sorted

    bool contains(int p) const {
        return std::binary_search(members.begin(), members.end(), p);
    }
    static Coalition of(std::vector<int> ps) {
        std::sort(ps.begin(), ps.end());
        ps.erase(std::unique(ps.begin(), ps.end()), ps.end());
        return Coalition{std::move(ps)};
    }
    Coalition complement(int num_players) const {
        Coalition c;
        for (int p = 0; p < num_players; ++p)
            if (!contains(p)) c.members.push_back(p);
        return c;
    }
};

struct RewardStructure {
    std::vector<double> state_reward;                 // indexed by state
    std::map<std::pair<int, int>, double> action_reward;  // (state, action rank)

    double state_rew(int s) const {
        return s < static_cast<int>(state_reward.size()) ? state_reward[s] : 0.0;
    }
    double action_rew(int s, int a) const {
        auto it = action_reward.find({s, a});
        return it == action_reward.end() ? 0.0 : it->second;
    }
};

struct ExplicitTsg {
    std::vector<std::string> players;
    std::vector<std::string> var_names;        // model variables; {"s"} for index games
    std::vector<std::vector<int>> states;      // one valuation per state
    std::vector<int> owner;                    // state -> player index
    int init = 0;
    std::vector<std::string> actions;          // rank order (lexicographic by name)
    std::vector<std::map<int, Distribution>> delta;  // state -> action rank -> successors
    std::map<std::string, std::set<int>> labels;
    std::map<std::string, RewardStructure> rewards;

    std::size_t num_states() const { return states.size(); }

    int action_rank(const std::string& name) const {
        auto it = std::lower_bound(actions.begin(), actions.end(), name);
        if (it == actions.end() || *it != name) throw ModelError("unknown action: " + name);
        return static_cast<int>(it - actions.begin());
    }

    std::size_t num_transitions() const {
        std::size_t n = 0;
        for (const auto& row : delta)
            for (const auto& [a, dist] : row) n += dist.size();
        return n;
    }

    bool has_label(const std::string& name, int s) const {
        auto it = labels.find(name);
        return it != labels.end() && it->second.count(s);
    }

    std::string state_string(int s) const {
        std::ostringstream os;
        for (std::size_t i = 0; i < var_names.size(); ++i) {
            if (i) os << ",";
            os << var_names[i] << "=" << states[s][i];
        }
        return os.str();
    }

    std::vector<std::string> validate() const {
        std::vector<std::string> diags;
        if (players.empty()) diags.push_back("no players declared");
        if (states.empty()) diags.push_back("no states");
        if (owner.size() != states.size()) diags.push_back("owner map is not total");
        for (std::size_t s = 0; s < owner.size(); ++s)
            if (owner[s] < 0 || owner[s] >= static_cast<int>(players.size()))
                diags.push_back("state " + std::to_string(s) + ": owner out of range");
        if (init < 0 || init >= static_cast<int>(states.size())) diags.push_back("initial state out of range");
        if (delta.size() != states.size()) diags.push_back("transition function is not total over states");
        for (std::size_t s = 0; s < delta.size(); ++s) {
            if (delta[s].empty())
                diags.push_back("state " + std::to_string(s) + ": deadlock (no enabled action)");
            for (const auto& [a, dist] : delta[s]) {
                if (a < 0 || a >= static_cast<int>(actions.size())) {
                    diags.push_back("state " + std::to_string(s) + ": action rank out of range");
                    continue;
                }
                double sum = 0.0;
                for (const auto& [t, p] : dist) {
                    sum += p;
                    if (p <= 0.0 || p > 1.0 + kDistTolerance)
                        diags.push_back("state " + std::to_string(s) + ", action " + actions[a] +
                                        ": probability " + std::to_string(p) + " out of range");
                    if (t < 0 || t >= static_cast<int>(states.size()))
                        diags.push_back("state " + std::to_string(s) + ", action " + actions[a] +
                                        ": successor out of range");
                }
                if (std::fabs(sum - 1.0) > kDistTolerance)
                    diags.push_back("state " + std::to_string(s) + ", action " + actions[a] +
                                    ": distribution sums to " + std::to_string(sum));
            }
        }
        for (const auto& [name, rs] : rewards) {
            for (double v : rs.state_reward)
                if (v < 0.0 || std::isinf(v) || std::isnan(v))
                    diags.push_back("reward " + name + ": state reward out of range");
            for (const auto& [key, v] : rs.action_reward)
                if (v < 0.0 || std::isinf(v) || std::isnan(v))
                    diags.push_back("reward " + name + ": action reward out of range");
        }
        for (const auto& [name, set] : labels)
            for (int s : set)
                if (s < 0 || s >= static_cast<int>(states.size()))
                    diags.push_back("label " + name + ": state out of range");
        return diags;
    }

    std::vector<bool> bfs_reachable() const {
        std::vector<bool> seen(states.size(), false);
        std::vector<int> queue{init};
        seen[init] = true;
        while (!queue.empty()) {
            int s = queue.back();
            queue.pop_back();
            for (const auto& [a, dist] : delta[s])
                for (const auto& [t, p] : dist)
                    if (!seen[t]) {
                        seen[t] = true;
                        queue.push_back(t);
                    }
        }
        return seen;
    }

    // Reindexes states into the lexicographic order of their valuations and
    // drops unreachable ones; this is the canonical presentation both build
    // paths agree on.
    void canonicalize() {
        auto reach = bfs_reachable();
        std::vector<int> order;
        for (std::size_t s = 0; s < states.size(); ++s)
            if (reach[s]) order.push_back(static_cast<int>(s));
        std::sort(order.begin(), order.end(),
                  [&](int a, int b) { return states[a] < states[b]; });
        std::vector<int> remap(states.size(), -1);
        for (std::size_t i = 0; i < order.size(); ++i) remap[order[i]] = static_cast<int>(i);

        ExplicitTsg out;
        out.players = players;
        out.var_names = var_names;
        out.actions = actions;
        out.init = remap[init];
        out.states.resize(order.size());
        out.owner.resize(order.size());
        out.delta.resize(order.size());
        for (std::size_t i = 0; i < order.size(); ++i) {
            int s = order[i];
            out.states[i] = states[s];
            out.owner[i] = owner[s];
            for (const auto& [a, dist] : delta[s]) {
                Distribution d;
                for (const auto& [t, p] : dist) d.emplace_back(remap[t], p);
                std::sort(d.begin(), d.end());
                out.delta[i][a] = std::move(d);
            }
        }
        for (const auto& [name, set] : labels) {
            std::set<int>& dst = out.labels[name];
            for (int s : set)
                if (remap[s] >= 0) dst.insert(remap[s]);
        }
        for (const auto& [name, rs] : rewards) {
            RewardStructure nrs;
            nrs.state_reward.assign(order.size(), 0.0);
            for (std::size_t i = 0; i < order.size(); ++i)
                nrs.state_reward[i] = rs.state_rew(order[i]);
            for (const auto& [key, v] : rs.action_reward)
                if (remap[key.first] >= 0) nrs.action_reward[{remap[key.first], key.second}] = v;
            out.rewards[name] = std::move(nrs);
        }
        *this = std::move(out);
    }
};

// ---- line-oriented text format ------------------------------------------
//
//   tsg <nstates> <nplayers>
//   state <idx> <player> [labels...]
//   tr <src> <action> <dst>:<prob> [<dst>:<prob> ...]
//   srew <name> <state> <val>
//   arew <name> <state> <action> <val>

inline ExplicitTsg parse_explicit_tsg(std::istream& in) {
    ExplicitTsg g;
    std::string line;
    int lineno = 0;
    bool header_seen = false;
    int nstates = 0, nplayers = 0;
    // action names are collected first and ranked lexicographically
    struct RawTr {
        int src;
        std::string action;
        Distribution dist;
    };
    std::vector<RawTr> raw_trs;
    struct RawArew {
        std::string name;
        int state;
        std::string action;
        double val;
    };
    std::vector<RawArew> raw_arews;
    std::set<std::string> action_names;

    auto fail = [&](const std::string& msg) {
        throw ModelError("line " + std::to_string(lineno) + ": " + msg);
    };

    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find("//");
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::string kw;
        if (!(ls >> kw)) continue;
        if (kw == "tsg") {
            if (header_seen) fail("duplicate header");
            if (!(ls >> nstates >> nplayers) || nstates <= 0 || nplayers <= 0)
                fail("malformed header, expected: tsg <nstates> <nplayers>");
            header_seen = true;
            g.var_names = {"s"};
            g.states.resize(nstates);
            for (int s = 0; s < nstates; ++s) g.states[s] = {s};
            g.owner.assign(nstates, -1);
            g.delta.resize(nstates);
            for (int p = 0; p < nplayers; ++p) g.players.push_back("p" + std::to_string(p + 1));
            continue;
        }
        if (!header_seen) fail("expected header line: tsg <nstates> <nplayers>");
        if (kw == "state") {
            int idx, player;
            if (!(ls >> idx >> player)) fail("malformed state line");
            if (idx < 0 || idx >= nstates) fail("state index out of range");
            if (player < 0 || player >= nplayers) fail("player index out of range");
            g.owner[idx] = player;
            std::string lab;
            while (ls >> lab) g.labels[lab].insert(idx);
        } else if (kw == "tr") {
            RawTr tr;
            if (!(ls >> tr.src >> tr.action)) fail("malformed tr line");
            if (tr.src < 0 || tr.src >= nstates) fail("source state out of range");
            std::string entry;
            while (ls >> entry) {
                auto colon = entry.find(':');
                if (colon == std::string::npos) fail("expected <dst>:<prob>");
                int dst = std::stoi(entry.substr(0, colon));
                double prob = std::stod(entry.substr(colon + 1));
                if (dst < 0 || dst >= nstates) fail("destination state out of range");
                tr.dist.emplace_back(dst, prob);
            }
            if (tr.dist.empty()) fail("empty distribution");
            double sum = 0.0;
            for (auto& [t, p] : tr.dist) sum += p;
            if (std::fabs(sum - 1.0) > kDistTolerance) fail("distribution sums to " + std::to_string(sum));
            action_names.insert(tr.action);
            raw_trs.push_back(std::move(tr));
        } else if (kw == "srew") {
            std::string name;
            int s;
            double v;
            if (!(ls >> name >> s >> v)) fail("malformed srew line");
            if (s < 0 || s >= nstates) fail("state out of range");
            auto& rs = g.rewards[name];
            if (rs.state_reward.empty()) rs.state_reward.assign(nstates, 0.0);
            rs.state_reward[s] = v;
        } else if (kw == "arew") {
            RawArew r;
            if (!(ls >> r.name >> r.state >> r.action >> r.val)) fail("malformed arew line");
            if (r.state < 0 || r.state >= nstates) fail("state out of range");
            raw_arews.push_back(std::move(r));
        } else {
            fail("unknown directive: " + kw);
        }
    }
    if (!header_seen) throw ModelError("empty model file");
    g.actions.assign(action_names.begin(), action_names.end());
    for (auto& tr : raw_trs) {
        int a = g.action_rank(tr.action);
        if (g.delta[tr.src].count(a))
            throw ModelError("duplicate transition for state " + std::to_string(tr.src) + ", action " + tr.action);
        std::sort(tr.dist.begin(), tr.dist.end());
        g.delta[tr.src][a] = std::move(tr.dist);
    }
    for (auto& r : raw_arews) {
        auto& rs = g.rewards[r.name];
        if (rs.state_reward.empty()) rs.state_reward.assign(nstates, 0.0);
        rs.action_reward[{r.state, g.action_rank(r.action)}] = r.val;
    }
    for (auto& [name, rs] : g.rewards)
        if (rs.state_reward.empty()) rs.state_reward.assign(nstates, 0.0);
    for (int s = 0; s < nstates; ++s)
        if (g.owner[s] < 0) throw ModelError("state " + std::to_string(s) + " has no owner (missing state line)");
    return g;
}

inline ExplicitTsg load_explicit_tsg(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ModelError("cannot open " + path);
    return parse_explicit_tsg(in);
}

inline void write_explicit_tsg(const ExplicitTsg& g, std::ostream& out) {
    out << "tsg " << g.states.size() << " " << g.players.size() << "\n";
    for (std::size_t s = 0; s < g.states.size(); ++s) {
        out << "state " << s << " " << g.owner[s];
        for (const auto& [name, set] : g.labels)
            if (set.count(static_cast<int>(s))) out << " " << name;
        out << "\n";
    }
    out.precision(17);
    for (std::size_t s = 0; s < g.states.size(); ++s)
        for (const auto& [a, dist] : g.delta[s]) {
            out << "tr " << s << " " << g.actions[a];
            for (const auto& [t, p] : dist) out << " " << t << ":" << p;
            out << "\n";
        }
    for (const auto& [name, rs] : g.rewards) {
        for (std::size_t s = 0; s < rs.state_reward.size(); ++s)
            if (rs.state_reward[s] != 0.0) out << "srew " << name << " " << s << " " << rs.state_reward[s] << "\n";
        for (const auto& [key, v] : rs.action_reward)
            if (v != 0.0)
                out << "arew " << name << " " << key.first << " " << g.actions[key.second] << " " << v << "\n";
    }
}

// The running example used throughout the tests: three states, two players,
// actions a/b, with s2 labelled "goal"/"two" and s1 labelled "one".
inline ExplicitTsg fig1_game() {
    ExplicitTsg g;
    g.players = {"p1", "p2"};
    g.var_names = {"s"};
    g.states = {{0}, {1}, {2}};
    g.owner = {0, 1, 0};
    g.init = 0;
    g.actions = {"a", "b"};
    g.delta.resize(3);
    g.delta[0][0] = {{0, 1.0}};
    g.delta[0][1] = {{1, 0.9}, {2, 0.1}};
    g.delta[1][0] = {{1, 0.1}, {2, 0.9}};
    g.delta[2][0] = {{2, 1.0}};
    g.labels["goal"] = {2};
    g.labels["two"] = {2};
    g.labels["one"] = {1};
    RewardStructure r;
    r.state_reward = {1.0, 1.0, 0.0};
    g.rewards["r"] = r;
    return g;
}

}  // namespace tsg
