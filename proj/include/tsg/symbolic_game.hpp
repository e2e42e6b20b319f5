#pragma once

// MTBDD encoding of a turn-based stochastic game: a single transition
// diagram delta''(i,s,a,s') over player, action, row and column state
// variables, with players one-hot, actions binary by rank and row/column
// state bits interleaved. Labels and rewards are carried as separate
// diagrams over the row variables.

#include <cmath>
#include <cstdint>
#include <memory>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "tsg/explicit_game.hpp"
#include "tsg/mtbdd.hpp"

namespace tsg {

struct StateVarInfo {
    std::string name;
    int low = 0;
    int high = 1;
    int bits = 1;  // MSB first in the row-variable order
};

inline int bits_for_range(std::int64_t count) {
    int b = 1;
    while ((std::int64_t{1} << b) < count) ++b;
    return b;
}

class SymbolicTsg {
public:
    std::shared_ptr<dd::Manager> mgr;
    std::vector<std::string> players;
    std::vector<std::string> actions;       // rank order
    std::vector<StateVarInfo> state_vars;   // MSB-first blocks in row order

    std::vector<dd::VarId> wvars;  // players, one-hot
    std::vector<dd::VarId> zvars;  // action rank bits
    std::vector<dd::VarId> xvars;  // row state bits
    std::vector<dd::VarId> yvars;  // column state bits (interleaved with x)
    std::vector<dd::VarId> zpvars; // strategy copy of the action bits, last

    dd::Mtbdd trans;   // over (w,z,x,y)
    dd::Bdd init;      // over x
    dd::Bdd reach;     // over x
    std::vector<int> init_state;  // the initial valuation, for evaluation
    std::map<std::string, dd::Bdd> labels;                        // over x
    struct RewardDds {
        dd::Mtbdd state_rew;   // over x
        dd::Mtbdd action_rew;  // over (w,z,x), zero outside enabled rows
    };
    std::map<std::string, RewardDds> rewards;
    std::vector<dd::Bdd> player_cubes;  // over w

    // derived, built by finalize()
    dd::Bdd trans_pos;  // trans > 0
    dd::Bdd enabled;    // rows (w,z,x) with some successor
    std::vector<dd::Bdd> owned;  // per player, over x, within reach

    // Fixed global order: w, z, interleaved x/y, then z'.
    static std::vector<std::string> layout_names(int m, int l, int k) {
        std::vector<std::string> names;
        for (int i = 0; i < m; ++i) names.push_back("w" + std::to_string(i + 1));
        for (int i = 0; i < l; ++i) names.push_back("z" + std::to_string(i + 1));
        for (int i = 0; i < k; ++i) {
            names.push_back("x" + std::to_string(i + 1));
            names.push_back("y" + std::to_string(i + 1));
        }
        for (int i = 0; i < l; ++i) names.push_back("z" + std::to_string(i + 1) + "'");
        return names;
    }

    void init_layout(int m, int l, int k, dd::ManagerConfig cfg = {}) {
        mgr = std::make_shared<dd::Manager>(layout_names(m, l, k), cfg);
        dd::VarId v = 0;
        for (int i = 0; i < m; ++i) wvars.push_back(v++);
        for (int i = 0; i < l; ++i) zvars.push_back(v++);
        for (int i = 0; i < k; ++i) {
            xvars.push_back(v++);
            yvars.push_back(v++);
        }
        for (int i = 0; i < l; ++i) zpvars.push_back(v++);
    }

    std::size_t num_players() const { return players.size(); }

    // ---- encodings ------------------------------------------------------

    dd::Valuation player_valuation(int player) const {
        dd::Valuation v;
        for (std::size_t i = 0; i < wvars.size(); ++i) v.set(wvars[i], static_cast<int>(i) == player);
        return v;
    }

    dd::Valuation action_valuation(int rank) const {
        dd::Valuation v;
        int l = static_cast<int>(zvars.size());
        for (int i = 0; i < l; ++i) v.set(zvars[i], (rank >> (l - 1 - i)) & 1);
        return v;
    }

    // Writes the bit codes of a full state valuation into `out` on the
    // given variable block (x or y), MSB first per model variable.
    void state_bits(const std::vector<int>& valuation, const std::vector<dd::VarId>& block,
                    dd::Valuation& out) const {
        std::size_t pos = 0;
        for (std::size_t i = 0; i < state_vars.size(); ++i) {
            const auto& sv = state_vars[i];
            int code = valuation[i] - sv.low;
            if (code < 0 || code >= (1 << sv.bits))
                throw ModelError("state value " + std::to_string(valuation[i]) + " out of range for " + sv.name);
            for (int b = 0; b < sv.bits; ++b) out.set(block[pos + b], (code >> (sv.bits - 1 - b)) & 1);
            pos += sv.bits;
        }
    }

    dd::Bdd player_cube(int player) const { return player_cubes.at(player); }

    dd::Bdd action_cube(int rank) { return mgr->cube(action_valuation(rank), zvars); }

    dd::Bdd state_cube(const std::vector<int>& valuation, const std::vector<dd::VarId>& block) {
        dd::Valuation v;
        state_bits(valuation, block, v);
        return mgr->cube(v, block);
    }

    std::vector<int> decode_state(const dd::Valuation& valn) const {
        std::vector<int> vals(state_vars.size());
        std::size_t pos = 0;
        for (std::size_t i = 0; i < state_vars.size(); ++i) {
            const auto& sv = state_vars[i];
            int code = 0;
            for (int b = 0; b < sv.bits; ++b) code = (code << 1) | (valn.value(xvars[pos + b]) ? 1 : 0);
            vals[i] = sv.low + code;
            pos += sv.bits;
        }
        return vals;
    }

    // ---- derived sets -----------------------------------------------------

    // Computes the reachable set and restricts the game to it: rows of
    // unreachable source states are dropped from trans so both engines see
    // the same system.
    void finalize() {
        dd::Bdd pos_full = mgr->as_bdd(mgr->apply(dd::BinOp::Greater, trans, mgr->const_(0.0)));
        reach = reachable(pos_full);
        trans = mgr->apply(dd::BinOp::Times, trans, reach);
        trans_pos = mgr->and_(pos_full, reach);
        enabled = mgr->as_bdd(mgr->abstract_(dd::AbstractOp::Or, yvars, trans_pos));
        owned.clear();
        for (std::size_t p = 0; p < players.size(); ++p) {
            dd::Bdd rows = mgr->and_(enabled, player_cubes[p]);
            std::vector<dd::VarId> wz(wvars);
            wz.insert(wz.end(), zvars.begin(), zvars.end());
            dd::Bdd states = mgr->as_bdd(mgr->abstract_(dd::AbstractOp::Or, wz, rows));
            owned.push_back(mgr->and_(states, reach));
        }
    }

    // Least fixpoint of R := init \/ post(R); forward closure over trans>0.
    dd::Bdd reachable(const dd::Bdd& pos) const {
        std::vector<dd::VarId> wzx(wvars);
        wzx.insert(wzx.end(), zvars.begin(), zvars.end());
        wzx.insert(wzx.end(), xvars.begin(), xvars.end());
        dd::Bdd r = init;
        for (;;) {
            dd::Bdd step = mgr->and_(pos, r);
            dd::Bdd img_y = mgr->as_bdd(mgr->abstract_(dd::AbstractOp::Or, wzx, step));
            dd::Bdd img = mgr->as_bdd(mgr->replace_vars(img_y, yvars, xvars));
            dd::Bdd next = mgr->or_(r, img);
            if (next == r) return r;
            r = next;
        }
    }

    // Rows (w,z,x) that have some successor inside X (X over x-vars).
    dd::Bdd rows_with_successor_in(const dd::Bdd& x_set) const {
        dd::Bdd shifted = mgr->as_bdd(mgr->replace_vars(x_set, xvars, yvars));
        dd::Bdd hit = mgr->and_(trans_pos, shifted);
        return mgr->as_bdd(mgr->abstract_(dd::AbstractOp::Or, yvars, hit));
    }

    // Rows whose whole support lies inside Y.
    dd::Bdd rows_with_support_in(const dd::Bdd& y_set) const {
        dd::Bdd outside = mgr->as_bdd(mgr->replace_vars(mgr->and_(reach_or_true(), mgr->not_(y_set)), xvars, yvars));
        dd::Bdd bad = mgr->as_bdd(mgr->abstract_(dd::AbstractOp::Or, yvars, mgr->and_(trans_pos, outside)));
        return mgr->and_(enabled, mgr->not_(bad));
    }

    dd::Bdd reach_or_true() const { return reach.valid() ? reach : mgr->true_(); }

    std::vector<dd::VarId> wz_vars() const {
        std::vector<dd::VarId> wz(wvars);
        wz.insert(wz.end(), zvars.begin(), zvars.end());
        return wz;
    }

    double count_states(const dd::Bdd& set) const { return mgr->sat_count(set, xvars); }
};

// (p1, p2): disjunctions of player cubes for C and its complement.
inline std::pair<dd::Bdd, dd::Bdd> player_partition_bdds(const SymbolicTsg& sym, const Coalition& c) {
    dd::Bdd p1 = sym.mgr->false_();
    dd::Bdd p2 = sym.mgr->false_();
    for (std::size_t p = 0; p < sym.players.size(); ++p) {
        if (c.contains(static_cast<int>(p)))
            p1 = sym.mgr->or_(p1, sym.player_cubes[p]);
        else
            p2 = sym.mgr->or_(p2, sym.player_cubes[p]);
    }
    return {p1, p2};
}

// ---- explicit -> symbolic --------------------------------------------------

inline SymbolicTsg encode(const ExplicitTsg& game, dd::ManagerConfig cfg = {}) {
    auto diags = game.validate();
    if (!diags.empty()) throw ModelError("encode: invalid game: " + diags.front());

    SymbolicTsg sym;
    sym.players = game.players;
    sym.actions = game.actions;
    int m = static_cast<int>(game.players.size());
    int l = bits_for_range(static_cast<std::int64_t>(game.actions.size()));
    int k = 0;
    for (std::size_t i = 0; i < game.var_names.size(); ++i) {
        int low = game.states[0][i], high = game.states[0][i];
        for (const auto& st : game.states) {
            low = std::min(low, st[i]);
            high = std::max(high, st[i]);
        }
        StateVarInfo sv{game.var_names[i], low, high, bits_for_range(high - low + 1)};
        k += sv.bits;
        sym.state_vars.push_back(sv);
    }
    if (k > 28 || l > 28) throw ModelError("encode: variable capacity exceeded");
    sym.init_layout(m, l, k, cfg);
    auto& mg = *sym.mgr;

    for (int p = 0; p < m; ++p) sym.player_cubes.push_back(mg.cube(sym.player_valuation(p), sym.wvars));

    dd::Mtbdd trans = mg.const_(0.0);
    for (std::size_t s = 0; s < game.num_states(); ++s) {
        dd::Bdd row = mg.and_(sym.player_cubes[game.owner[s]], sym.state_cube(game.states[s], sym.xvars));
        for (const auto& [a, dist] : game.delta[s]) {
            dd::Bdd row_a = mg.and_(row, sym.action_cube(a));
            for (const auto& [t, p] : dist) {
                dd::Mtbdd entry = mg.apply(dd::BinOp::Times,
                                           mg.and_(row_a, sym.state_cube(game.states[t], sym.yvars)),
                                           mg.const_(p));
                trans = mg.apply(dd::BinOp::Plus, trans, entry);
            }
        }
    }
    sym.trans = trans;
    sym.init = sym.state_cube(game.states[game.init], sym.xvars);
    sym.init_state = game.states[game.init];

    for (const auto& [name, set] : game.labels) {
        dd::Bdd b = mg.false_();
        for (int s : set) b = mg.or_(b, sym.state_cube(game.states[s], sym.xvars));
        sym.labels[name] = b;
    }
    for (const auto& [name, rs] : game.rewards) {
        dd::Mtbdd srew = mg.const_(0.0);
        for (std::size_t s = 0; s < game.num_states(); ++s)
            if (rs.state_rew(static_cast<int>(s)) != 0.0)
                srew = mg.apply(dd::BinOp::Plus, srew,
                                mg.apply(dd::BinOp::Times, sym.state_cube(game.states[s], sym.xvars),
                                         mg.const_(rs.state_rew(static_cast<int>(s)))));
        dd::Mtbdd arew = mg.const_(0.0);
        for (const auto& [key, v] : rs.action_reward) {
            if (v == 0.0) continue;
            auto [s, a] = key;
            if (!game.delta[s].count(a)) continue;  // reward on a disabled action is inert
            dd::Bdd row = mg.and_(mg.and_(sym.player_cubes[game.owner[s]], sym.action_cube(a)),
                                  sym.state_cube(game.states[s], sym.xvars));
            arew = mg.apply(dd::BinOp::Plus, arew, mg.apply(dd::BinOp::Times, row, mg.const_(v)));
        }
        sym.rewards[name] = SymbolicTsg::RewardDds{srew, arew};
    }
    sym.finalize();
    return sym;
}

// ---- symbolic -> explicit --------------------------------------------------

// Rebuilds the explicit game over reachable states, in the lexicographic
// order of their row-variable codes (the canonical state order).
inline ExplicitTsg decode(const SymbolicTsg& sym) {
    auto& mg = *sym.mgr;
    ExplicitTsg g;
    g.players = sym.players;
    g.actions = sym.actions;
    for (const auto& sv : sym.state_vars) g.var_names.push_back(sv.name);

    // enumerate reachable row valuations, expanding variables skipped by the BDD
    std::vector<std::vector<int>> state_list;
    {
        auto paths = mg.enumerate_paths(sym.reach);
        std::vector<dd::Valuation> full;
        for (auto& [pv, val] : paths) {
            std::vector<dd::Valuation> todo{pv};
            for (dd::VarId v : sym.xvars) {
                std::vector<dd::Valuation> next;
                for (auto& q : todo) {
                    if (q.is_set(v)) {
                        next.push_back(q);
                    } else {
                        dd::Valuation q0 = q, q1 = q;
                        q0.set(v, false);
                        q1.set(v, true);
                        next.push_back(q0);
                        next.push_back(q1);
                    }
                }
                todo = std::move(next);
            }
            for (auto& q : todo) full.push_back(q);
        }
        for (auto& q : full) state_list.push_back(sym.decode_state(q));
        std::sort(state_list.begin(), state_list.end());
        state_list.erase(std::unique(state_list.begin(), state_list.end()), state_list.end());
    }
    g.states = state_list;
    std::map<std::vector<int>, int> index_of;
    for (std::size_t i = 0; i < state_list.size(); ++i) index_of[state_list[i]] = static_cast<int>(i);
    g.owner.assign(state_list.size(), -1);
    g.delta.resize(state_list.size());

    // transition rows from the diagram paths
    {
        auto paths = mg.enumerate_paths(sym.trans);
        std::vector<dd::VarId> all_vars(sym.wvars);
        all_vars.insert(all_vars.end(), sym.zvars.begin(), sym.zvars.end());
        for (std::size_t i = 0; i < sym.xvars.size(); ++i) {
            all_vars.push_back(sym.xvars[i]);
            all_vars.push_back(sym.yvars[i]);
        }
        for (auto& [pv, prob] : paths) {
            std::vector<dd::Valuation> todo{pv};
            for (dd::VarId v : all_vars) {
                std::vector<dd::Valuation> next;
                for (auto& q : todo) {
                    if (q.is_set(v)) {
                        next.push_back(q);
                    } else {
                        dd::Valuation q0 = q, q1 = q;
                        q0.set(v, false);
                        q1.set(v, true);
                        next.push_back(q0);
                        next.push_back(q1);
                    }
                }
                todo = std::move(next);
            }
            for (auto& q : todo) {
                int player = -1;
                for (std::size_t w = 0; w < sym.wvars.size(); ++w)
                    if (q.value(sym.wvars[w])) {
                        if (player >= 0) throw ModelError("decode: non-one-hot player code in trans");
                        player = static_cast<int>(w);
                    }
                if (player < 0) throw ModelError("decode: non-one-hot player code in trans");
                int rank = 0;
                for (dd::VarId z : sym.zvars) rank = (rank << 1) | (q.value(z) ? 1 : 0);
                if (rank >= static_cast<int>(sym.actions.size()))
                    throw ModelError("decode: action code out of range");
                auto src_vals = sym.decode_state(q);
                auto src_it = index_of.find(src_vals);
                if (src_it == index_of.end()) continue;  // row of an unreachable state
                int src = src_it->second;
                // destination from the y block
                dd::Valuation yv;
                for (std::size_t i = 0; i < sym.xvars.size(); ++i) yv.set(sym.xvars[i], q.value(sym.yvars[i]));
                auto dst_vals = sym.decode_state(yv);
                auto dst_it = index_of.find(dst_vals);
                if (dst_it == index_of.end())
                    throw ModelError("decode: transition into an unreachable state code");
                if (g.owner[src] >= 0 && g.owner[src] != player)
                    throw ModelError("decode: state " + g.state_string(src) + " has mixed ownership");
                g.owner[src] = player;
                g.delta[src][rank].emplace_back(dst_it->second, prob);
            }
        }
        for (auto& row : g.delta)
            for (auto& [a, dist] : row) std::sort(dist.begin(), dist.end());
    }

    // initial state
    {
        auto paths = mg.enumerate_paths(sym.init);
        if (paths.size() != 1) throw ModelError("decode: initial set is not a single state");
        dd::Valuation iv = paths.front().first;
        for (dd::VarId v : sym.xvars)
            if (!iv.is_set(v)) throw ModelError("decode: initial cube underdetermined");
        g.init = index_of.at(sym.decode_state(iv));
    }

    for (const auto& [name, bdd] : sym.labels) {
        dd::Bdd within = mg.and_(bdd, sym.reach);
        std::set<int>& set = g.labels[name];
        auto paths = mg.enumerate_paths(within);
        for (auto& [pv, val] : paths) {
            std::vector<dd::Valuation> todo{pv};
            for (dd::VarId v : sym.xvars) {
                std::vector<dd::Valuation> next;
                for (auto& q : todo) {
                    if (q.is_set(v)) next.push_back(q);
                    else {
                        dd::Valuation q0 = q, q1 = q;
                        q0.set(v, false);
                        q1.set(v, true);
                        next.push_back(q0);
                        next.push_back(q1);
                    }
                }
                todo = std::move(next);
            }
            for (auto& q : todo) {
                auto it = index_of.find(sym.decode_state(q));
                if (it != index_of.end()) set.insert(it->second);
            }
        }
    }

    for (const auto& [name, rd] : sym.rewards) {
        RewardStructure rs;
        rs.state_reward.assign(g.states.size(), 0.0);
        for (std::size_t s = 0; s < g.states.size(); ++s) {
            dd::Valuation v;
            sym.state_bits(g.states[s], sym.xvars, v);
            rs.state_reward[s] = mg.evaluate(rd.state_rew, v);
        }
        for (std::size_t s = 0; s < g.states.size(); ++s)
            for (const auto& [a, dist] : g.delta[s]) {
                dd::Valuation v = sym.player_valuation(g.owner[s]);
                dd::Valuation av = sym.action_valuation(a);
                for (dd::VarId z : sym.zvars) v.set(z, av.value(z));
                sym.state_bits(g.states[s], sym.xvars, v);
                double val = mg.evaluate(rd.action_rew, v);
                if (val != 0.0) rs.action_reward[{static_cast<int>(s), a}] = val;
            }
        g.rewards[name] = std::move(rs);
    }
    return g;
}

inline bool games_equal(const ExplicitTsg& a, const ExplicitTsg& b) {
    return a.players == b.players && a.states == b.states && a.owner == b.owner && a.init == b.init &&
           a.actions == b.actions && a.delta == b.delta && a.labels == b.labels &&
           [&] {
               if (a.rewards.size() != b.rewards.size()) return false;
               for (const auto& [name, ra] : a.rewards) {
                   auto it = b.rewards.find(name);
                   if (it == b.rewards.end()) return false;
                   if (ra.state_reward != it->second.state_reward) return false;
                   if (ra.action_reward != it->second.action_reward) return false;
               }
               return true;
           }();
}

}  // namespace tsg
