#pragma once

// Symbolic model checking on the MTBDD game encoding: recursive Sat-set
// computation, graph-based Prob0/Prob1 precomputation, value iteration
// with strategy synthesis, reward operators and the 2-coalition
// equilibrium extension. The sweeps mirror the sparse engine exactly:
// same precomputation, same initial vectors, same stopping rule.

#include <map>
#include <optional>
#include <sstream>
#include <vector>

#include "tsg/mtbdd.hpp"
#include "tsg/properties.hpp"
#include "tsg/solver.hpp"
#include "tsg/symbolic_game.hpp"

namespace tsg {

struct StrategyBdd {
    dd::Bdd rows;  // over (x, z'): state codes to optimal action codes
    Coalition coalition;
};

struct CheckResult {
    dd::Bdd sat;           // over x, threshold and propositional formulas
    dd::Mtbdd values;      // over x; the objective sum for equilibria
    std::optional<StrategyBdd> strategy;  // for the query coalition's states
    dd::Bdd profile_rows;  // over (w,z,x): epsilon-optimal rows of all states
    dd::Mtbdd nash_values1, nash_values2;
    double initial_value = 0.0;
    CheckStats stats;
};

class SymbolicChecker {
public:
    explicit SymbolicChecker(const SymbolicTsg& sym) : sym_(sym), mgr_(*sym.mgr) {}

    GameContext context() const {
        GameContext ctx;
        ctx.players = sym_.players;
        for (const auto& [name, b] : sym_.labels) ctx.labels.push_back(name);
        for (const auto& [name, r] : sym_.rewards) ctx.rewards.push_back(name);
        return ctx;
    }

    CheckResult check(const FormulaPtr& f, const SolverConfig& cfg) {
        CheckResult res = check_rec(*f, cfg);
        if (!res.values.valid()) res.values = indicator(res.sat);
        dd::Valuation iv;
        sym_.state_bits(sym_.init_state, sym_.xvars, iv);
        res.initial_value = mgr_.evaluate(res.values, iv);
        return res;
    }

    dd::Bdd sat_set(const StateFormula& f, const SolverConfig& cfg) { return check_rec(f, cfg).sat; }

    // ---- precomputation -----------------------------------------------

    // Complement of the states from which the maximising side can make
    // P(stay U target) positive.
    dd::Bdd prob0(const Coalition& max_side, dd::Bdd target, dd::Bdd stay) const {
        auto [p_max, p_min] = player_partition_bdds(sym_, max_side);
        target = mgr_.and_(target, sym_.reach);
        stay = mgr_.and_(stay, sym_.reach);
        dd::Bdd owned_min = owned_by_side(max_side.complement(num_players()));
        dd::Bdd x = target;
        for (;;) {
            dd::Bdd succ_rows = sym_.rows_with_successor_in(x);
            dd::Bdd some_max = exists_wz(mgr_.and_(succ_rows, p_max));
            dd::Bdd no_succ = mgr_.and_(sym_.enabled, mgr_.not_(succ_rows));
            dd::Bdd min_ok = mgr_.and_(owned_min, mgr_.not_(exists_wz(mgr_.and_(no_succ, p_min))));
            dd::Bdd next = mgr_.or_(target, mgr_.and_(stay, mgr_.or_(some_max, min_ok)));
            if (next == x) break;
            x = next;
        }
        return mgr_.and_(sym_.reach, mgr_.not_(x));
    }

    // Greatest fixpoint with attractor-style inner least fixpoint; the
    // result is exactly the set where the maximising side forces the
    // target with probability one. Optionally collects witness rows for
    // its states (the actions justifying each attractor stage).
    dd::Bdd prob1(const Coalition& max_side, dd::Bdd target, dd::Bdd stay,
                  dd::Bdd* witness_rows = nullptr) const {
        target = mgr_.and_(target, sym_.reach);
        stay = mgr_.and_(stay, sym_.reach);
        dd::Bdd y = sym_.reach;
        for (;;) {
            dd::Bdd x = prob1_inner(max_side, target, stay, y, nullptr);
            if (x == y) break;
            y = x;
        }
        if (witness_rows) prob1_inner(max_side, target, stay, y, witness_rows);
        return y;
    }

    // ---- value iteration -------------------------------------------------

    struct IterOutcome {
        dd::Mtbdd values;
        dd::Bdd profile_rows;  // over (w,z,x)
        CheckStats stats;
    };

    IterOutcome value_iter_reach(const Coalition& max_side, dd::Bdd target, dd::Bdd stay,
                                 const SolverConfig& cfg) const {
        IterOutcome out;
        double t0 = detail::now_seconds();
        dd::Bdd s0 = prob0(max_side, target, stay);
        dd::Bdd witness = mgr_.false_();
        dd::Bdd s1 = prob1(max_side, target, stay, &witness);
        out.stats.qual_seconds = detail::now_seconds() - t0;
        out.stats.prob0_states = static_cast<std::size_t>(sym_.count_states(s0));
        out.stats.prob1_states = static_cast<std::size_t>(sym_.count_states(s1));

        dd::Bdd maybe = mgr_.and_(sym_.reach, mgr_.and_(mgr_.not_(s0), mgr_.not_(s1)));
        dd::Mtbdd trans_maybe = mgr_.apply(dd::BinOp::Times, sym_.trans, maybe);

        double t1 = detail::now_seconds();
        SideContext side = make_side(max_side);
        dd::Mtbdd sol = indicator(s1);
        int iters = 0;
        double norm = 0.0;
        while (maybe != mgr_.false_()) {  // empty maybe region: qualitative answer
            if (iters >= cfg.max_iters) throw NonConvergenceError(norm, iters);
            dd::Mtbdd backup = mgr_.mv_mult(trans_maybe, sol, sym_.xvars, sym_.yvars);
            dd::Mtbdd combined = combine(backup, side);
            dd::Mtbdd pinned = mgr_.if_then_else(s1, mgr_.const_(1.0), combined);
            dd::Mtbdd next = mgr_.apply(dd::BinOp::Max, pinned, sol);  // monotone sweeps
            norm = mgr_.sup_norm(next, sol, cfg.relative);
            sol = next;
            ++iters;
            if (norm < cfg.epsilon) break;
        }
        out.stats.iterations = iters;
        out.stats.final_norm = norm;
        out.stats.quant_seconds = detail::now_seconds() - t1;

        // strategy rows: one-step backups approximately equal to the value;
        // the maximiser's rows are additionally staged towards the exactly
        // valued region, since a value-preserving loop also passes the
        // approximate-equality test without ever making progress
        dd::Mtbdd backup = mgr_.mv_mult(trans_maybe, sol, sym_.xvars, sym_.yvars);
        dd::Bdd opt = mgr_.apply_approx_eq(backup, sol, cfg.epsilon, cfg.relative);
        dd::Bdd rows = mgr_.and_(mgr_.and_(opt, sym_.enabled), maybe);
        dd::Bdd max_rows = staged_rows(mgr_.and_(rows, side.p_max), maybe, side);
        dd::Bdd min_rows = mgr_.and_(rows, side.p_min);
        // plus the prob1 witness actions on the value-one region
        out.profile_rows = mgr_.or_(mgr_.or_(max_rows, min_rows), witness);
        out.values = mgr_.apply(dd::BinOp::Times, sol, sym_.reach);
        out.stats.value_nodes = mgr_.node_count(out.values);
        out.stats.strategy_size = mgr_.node_count(out.profile_rows);
        return out;
    }

    dd::Mtbdd bounded_until(const Coalition& max_side, dd::Bdd stay, dd::Bdd target, int k) const {
        target = mgr_.and_(target, sym_.reach);
        stay = mgr_.and_(stay, sym_.reach);
        dd::Bdd active = mgr_.and_(stay, mgr_.not_(target));
        dd::Mtbdd trans_active = mgr_.apply(dd::BinOp::Times, sym_.trans, active);
        SideContext side = make_side(max_side);
        dd::Mtbdd sol = indicator(target);
        for (int step = 0; step < k; ++step) {
            dd::Mtbdd backup = mgr_.mv_mult(trans_active, sol, sym_.xvars, sym_.yvars);
            dd::Mtbdd combined = combine(backup, side);
            sol = mgr_.if_then_else(target, mgr_.const_(1.0),
                                    mgr_.if_then_else(active, combined, mgr_.const_(0.0)));
        }
        return sol;
    }

    dd::Mtbdd next_value(const Coalition& max_side, dd::Bdd target) const {
        SideContext side = make_side(max_side);
        dd::Mtbdd ind = indicator(mgr_.and_(target, sym_.reach));
        dd::Mtbdd backup = mgr_.mv_mult(sym_.trans, ind, sym_.xvars, sym_.yvars);
        return mgr_.apply(dd::BinOp::Times, combine(backup, side), sym_.reach);
    }

    dd::Mtbdd instant_reward(const Coalition& max_side, const SymbolicTsg::RewardDds& rew, int k) const {
        SideContext side = make_side(max_side);
        dd::Mtbdd sol = mgr_.apply(dd::BinOp::Times, rew.state_rew, sym_.reach);
        for (int step = 0; step < k; ++step) {
            dd::Mtbdd backup = mgr_.mv_mult(sym_.trans, sol, sym_.xvars, sym_.yvars);
            sol = mgr_.apply(dd::BinOp::Times, combine(backup, side), sym_.reach);
        }
        return sol;
    }

    dd::Mtbdd cumulative_reward(const Coalition& max_side, const SymbolicTsg::RewardDds& rew,
                                int k) const {
        SideContext side = make_side(max_side);
        dd::Mtbdd srew = mgr_.apply(dd::BinOp::Times, rew.state_rew, sym_.reach);
        dd::Mtbdd sol = mgr_.const_(0.0);
        for (int step = 0; step < k; ++step) {
            dd::Mtbdd backup = mgr_.mv_mult(sym_.trans, sol, sym_.xvars, sym_.yvars);
            dd::Mtbdd rows = mgr_.apply(dd::BinOp::Plus, backup, rew.action_rew);
            dd::Mtbdd combined = combine(rows, side);
            sol = mgr_.apply(dd::BinOp::Times, mgr_.apply(dd::BinOp::Plus, srew, combined), sym_.reach);
        }
        return sol;
    }

    IterOutcome reach_reward(const Coalition& max_side, const SymbolicTsg::RewardDds& rew,
                             dd::Bdd target, const SolverConfig& cfg) const {
        IterOutcome out;
        target = mgr_.and_(target, sym_.reach);
        double t0 = detail::now_seconds();
        // finite exactly where the reward-minimising side forces the target
        // almost surely; elsewhere the value diverges
        Coalition min_side = max_side.complement(num_players());
        dd::Bdd fin = prob1(min_side, target, sym_.reach);
        out.stats.qual_seconds = detail::now_seconds() - t0;
        dd::Bdd inf_set = mgr_.and_(sym_.reach, mgr_.not_(fin));
        out.stats.inf_states = static_cast<std::size_t>(sym_.count_states(inf_set));

        dd::Bdd active = mgr_.and_(sym_.reach, mgr_.and_(mgr_.not_(inf_set), mgr_.not_(target)));
        dd::Mtbdd trans_active = mgr_.apply(dd::BinOp::Times, sym_.trans, active);
        dd::Mtbdd arew_active = mgr_.apply(dd::BinOp::Times, rew.action_rew, active);
        dd::Mtbdd srew_active = mgr_.apply(dd::BinOp::Times, rew.state_rew, active);
        const double infinity = std::numeric_limits<double>::infinity();

        double t1 = detail::now_seconds();
        SideContext side = make_side(max_side);
        dd::Mtbdd sol = mgr_.if_then_else(inf_set, mgr_.const_(infinity), mgr_.const_(0.0));
        int iters = 0;
        double norm = 0.0;
        while (active != mgr_.false_()) {
            if (iters >= cfg.max_iters) throw NonConvergenceError(norm, iters);
            dd::Mtbdd backup = mgr_.mv_mult(trans_active, sol, sym_.xvars, sym_.yvars);
            dd::Mtbdd rows = mgr_.apply(dd::BinOp::Plus, backup, arew_active);
            dd::Mtbdd combined = combine(rows, side);
            dd::Mtbdd core = mgr_.apply(dd::BinOp::Times, active,
                                        mgr_.apply(dd::BinOp::Plus, srew_active, combined));
            dd::Mtbdd pinned = mgr_.if_then_else(inf_set, mgr_.const_(infinity), core);
            dd::Mtbdd next = mgr_.apply(dd::BinOp::Max, pinned, sol);
            norm = mgr_.sup_norm(next, sol, cfg.relative);
            sol = next;
            ++iters;
            if (norm < cfg.epsilon) break;
        }
        out.stats.iterations = iters;
        out.stats.final_norm = norm;
        out.stats.quant_seconds = detail::now_seconds() - t1;

        dd::Mtbdd backup = mgr_.mv_mult(trans_active, sol, sym_.xvars, sym_.yvars);
        dd::Mtbdd row_vals =
            mgr_.apply(dd::BinOp::Plus, srew_active, mgr_.apply(dd::BinOp::Plus, arew_active, backup));
        dd::Bdd opt = mgr_.apply_approx_eq(row_vals, sol, cfg.epsilon, cfg.relative);
        dd::Bdd rows = mgr_.and_(mgr_.and_(opt, sym_.enabled), active);
        out.profile_rows = mgr_.or_(staged_rows(mgr_.and_(rows, side.p_max), active, side),
                                    mgr_.and_(rows, side.p_min));
        out.values = mgr_.apply(dd::BinOp::Times, sol, sym_.reach);
        out.stats.value_nodes = mgr_.node_count(out.values);
        out.stats.strategy_size = mgr_.node_count(out.profile_rows);
        return out;
    }

    // ---- 2-coalition equilibrium ------------------------------------------

    struct NashObjectiveDds {
        bool is_reward = false;
        dd::Bdd goal;
        dd::Bdd inf;  // probability: outside the until's stay; reward: goal unreachable
        dd::Mtbdd srew, arew;
    };

    struct NashOutcome {
        dd::Mtbdd v1, v2;
        dd::Bdd profile_rows;  // over (w,z,x): one chosen action per state
        CheckStats stats;
    };

    NashObjectiveDds resolve_objective(const Objective& o, const SolverConfig& cfg) {
        NashObjectiveDds r;
        r.is_reward = o.is_reward;
        if (o.is_reward) {
            if (o.rho.kind != RewardFormula::Kind::Reach)
                throw ModelError("equilibrium objectives support F targets only");
            r.goal = mgr_.and_(sat_set(*o.rho.target, cfg), sym_.reach);
            const auto& rew = sym_.rewards.at(o.reward_name);
            r.srew = rew.state_rew;
            r.arew = rew.action_rew;
            r.inf = graph_cannot_reach(r.goal);
        } else {
            if (o.path.kind != PathFormula::Kind::Until || o.path.complemented)
                throw ModelError("equilibrium objectives support F and U targets only");
            dd::Bdd stay = sat_set(*o.path.lhs, cfg);
            r.goal = mgr_.and_(sat_set(*o.path.rhs, cfg), sym_.reach);
            r.inf = mgr_.false_();
            if (o.path.lhs->kind != StateFormula::Kind::True)
                r.inf = mgr_.and_(sym_.reach, mgr_.not_(mgr_.or_(stay, r.goal)));
        }
        return r;
    }

    NashOutcome nash2(const Coalition& c1, const NashObjectiveDds& o1, const NashObjectiveDds& o2,
                      bool welfare, const SolverConfig& cfg) const {
        NashOutcome out;
        const double infinity = std::numeric_limits<double>::infinity();
        dd::Bdd owned1 = owned_by_side(c1);

        auto initial = [&](const NashObjectiveDds& o) {
            if (o.is_reward)
                return mgr_.apply(dd::BinOp::Times, mgr_.if_then_else(o.inf, mgr_.const_(infinity), mgr_.const_(0.0)), sym_.reach);
            return indicator(mgr_.and_(o.goal, mgr_.not_(o.inf)));
        };
        dd::Mtbdd v1 = initial(o1), v2 = initial(o2);

        // per-row backups of one objective against its current vector
        auto backup_rows = [&](const NashObjectiveDds& o, const dd::Mtbdd& v) {
            dd::Mtbdd base = mgr_.mv_mult(sym_.trans, v, sym_.xvars, sym_.yvars);
            if (o.is_reward) {
                dd::Mtbdd rows = mgr_.apply(dd::BinOp::Plus, base,
                                            mgr_.apply(dd::BinOp::Plus, o.srew, o.arew));
                rows = mgr_.if_then_else(o.goal, mgr_.const_(0.0), rows);
                return mgr_.if_then_else(o.inf, mgr_.const_(infinity), rows);
            }
            dd::Mtbdd rows = mgr_.if_then_else(mgr_.and_(o.goal, mgr_.not_(o.inf)), mgr_.const_(1.0), base);
            return mgr_.if_then_else(o.inf, mgr_.const_(0.0), rows);
        };

        // One coupled sweep: the owner picks among its own-optimal rows the
        // one optimising the sum. With an incumbent profile, a state keeps
        // its current row unless another is strictly better; otherwise ties
        // go to the least action code. Retaining incumbents is what stops
        // stale value-preserving loops (a self-loop inherits the state's
        // own converged value and ties with real progress).
        auto select_sweep = [&](dd::Mtbdd& x1, dd::Mtbdd& x2, const dd::Bdd* incumbent,
                                dd::Bdd* chosen_out) {
            dd::Mtbdd b1 = backup_rows(o1, x1);
            dd::Mtbdd b2 = backup_rows(o2, x2);
            dd::Mtbdd own = mgr_.if_then_else(owned1, b1, b2);
            dd::Mtbdd v_own = opt_over_rows(own, welfare);
            dd::Bdd own_opt =
                mgr_.and_(sym_.enabled, mgr_.apply_approx_eq(own, v_own, cfg.epsilon, cfg.relative));
            dd::Mtbdd sum = mgr_.apply(dd::BinOp::Plus, b1, b2);
            dd::Mtbdd v_sum = opt_over_rows_filtered(sum, own_opt, welfare);
            dd::Bdd exact_best =
                mgr_.and_(own_opt, mgr_.as_bdd(mgr_.apply(dd::BinOp::Equal, sum, v_sum)));
            dd::Bdd chosen = lexicographic_least(exact_best);
            if (incumbent) {
                dd::Bdd near_best =
                    mgr_.and_(own_opt, mgr_.apply_approx_eq(sum, v_sum, cfg.epsilon, cfg.relative));
                dd::Bdd keep_rows = mgr_.and_(*incumbent, near_best);
                dd::Bdd keep_states = exists_wz(keep_rows);
                chosen = mgr_.as_bdd(mgr_.if_then_else(keep_states, keep_rows, chosen));
            }
            if (chosen_out) *chosen_out = chosen;
            dd::Mtbdd n1 = extract_chosen(b1, chosen);
            dd::Mtbdd n2 = extract_chosen(b2, chosen);
            double norm = std::max(mgr_.sup_norm(n1, x1, cfg.relative), mgr_.sup_norm(n2, x2, cfg.relative));
            x1 = n1;
            x2 = n2;
            return norm;
        };

        // True values of a frozen profile, from scratch on its induced
        // chain, so stale optimistic values cannot survive.
        auto evaluate_profile = [&](const dd::Bdd& profile, dd::Mtbdd& y1, dd::Mtbdd& y2, int& iters) {
            y1 = initial(o1);
            y2 = initial(o2);
            double norm = infinity;
            for (;;) {
                if (iters >= cfg.max_iters) throw NonConvergenceError(norm, iters);
                dd::Mtbdd n1 = extract_chosen(backup_rows(o1, y1), profile);
                dd::Mtbdd n2 = extract_chosen(backup_rows(o2, y2), profile);
                norm = std::max(mgr_.sup_norm(n1, y1, cfg.relative),
                                mgr_.sup_norm(n2, y2, cfg.relative));
                y1 = n1;
                y2 = n2;
                ++iters;
                if (norm < cfg.epsilon) break;
            }
            return norm;
        };

        // Coupled value iteration initialises the profile; policy-style
        // rounds then evaluate it exactly and only switch rows on strict
        // improvement, until the profile is stable.
        int iters = 0;
        double norm = infinity;
        while (norm >= 10 * cfg.epsilon) {
            if (iters >= cfg.max_iters) throw NonConvergenceError(norm, iters);
            norm = select_sweep(v1, v2, nullptr, nullptr);
            ++iters;
        }
        dd::Bdd profile;
        select_sweep(v1, v2, nullptr, &profile);
        ++iters;
        double last_norm = infinity;
        for (int round = 0;; ++round) {
            if (round > 60) throw NonConvergenceError(last_norm, iters);
            dd::Mtbdd y1, y2;
            last_norm = evaluate_profile(profile, y1, y2, iters);
            dd::Mtbdd t1 = y1, t2 = y2;
            dd::Bdd improved;
            select_sweep(t1, t2, &profile, &improved);
            ++iters;
            v1 = y1;
            v2 = y2;
            if (improved == profile) break;
            profile = improved;
        }
        out.v1 = mgr_.apply(dd::BinOp::Times, v1, sym_.reach);
        out.v2 = mgr_.apply(dd::BinOp::Times, v2, sym_.reach);
        out.profile_rows = profile;
        out.stats.iterations = iters;
        out.stats.final_norm = last_norm;
        out.stats.strategy_size = mgr_.node_count(profile);
        return out;
    }

    // ---- helpers ------------------------------------------------------------

    dd::Bdd threshold_sat(const dd::Mtbdd& values, Cmp cmp, double bound) const {
        dd::Mtbdd c = mgr_.const_(bound);
        dd::Mtbdd raw;
        switch (cmp) {
            case Cmp::Ge: raw = mgr_.apply(dd::BinOp::GreaterEq, values, c); break;
            case Cmp::Gt: raw = mgr_.apply(dd::BinOp::Greater, values, c); break;
            case Cmp::Le: raw = mgr_.apply(dd::BinOp::GreaterEq, c, values); break;
            case Cmp::Lt: raw = mgr_.apply(dd::BinOp::Greater, c, values); break;
        }
        return mgr_.and_(mgr_.as_bdd(raw), sym_.reach);
    }

    dd::Bdd owned_by_side(const Coalition& side) const {
        dd::Bdd b = mgr_.false_();
        for (int p : side.members) b = mgr_.or_(b, sym_.owned.at(p));
        return b;
    }

    dd::Mtbdd indicator(const dd::Bdd& b) const { return b; }

    // states from which the goal is unreachable in the game graph
    dd::Bdd graph_cannot_reach(const dd::Bdd& goal) const {
        dd::Bdd can = mgr_.and_(goal, sym_.reach);
        for (;;) {
            dd::Bdd rows = sym_.rows_with_successor_in(can);
            dd::Bdd next = mgr_.or_(can, exists_wz(rows));
            if (next == can) break;
            can = next;
        }
        return mgr_.and_(sym_.reach, mgr_.not_(can));
    }

    // Decodes strategy/profile rows into (state valuation -> action ranks).
    std::map<std::vector<int>, std::vector<int>> decode_rows(const dd::Bdd& rows_wzx) const {
        std::map<std::vector<int>, std::vector<int>> out;
        std::vector<dd::VarId> zx(sym_.zvars);
        zx.insert(zx.end(), sym_.xvars.begin(), sym_.xvars.end());
        for (auto& [pv, val] : mgr_.enumerate_paths(mgr_.as_bdd(
                 mgr_.abstract_(dd::AbstractOp::Or, sym_.wvars, rows_wzx)))) {
            std::vector<dd::Valuation> todo{pv};
            for (dd::VarId v : zx) {
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
                int rank = 0;
                for (dd::VarId z : sym_.zvars) rank = (rank << 1) | (q.value(z) ? 1 : 0);
                if (rank >= static_cast<int>(sym_.actions.size())) continue;
                auto st = sym_.decode_state(q);
                auto& acts = out[st];
                if (std::find(acts.begin(), acts.end(), rank) == acts.end()) acts.push_back(rank);
            }
        }
        for (auto& [st, acts] : out) std::sort(acts.begin(), acts.end());
        return out;
    }

private:
    int num_players() const { return static_cast<int>(sym_.players.size()); }

    std::vector<dd::VarId> wz() const { return sym_.wz_vars(); }

    dd::Bdd exists_wz(const dd::Bdd& rows) const {
        return mgr_.as_bdd(mgr_.abstract_(dd::AbstractOp::Or, wz(), rows));
    }

    struct SideContext {
        dd::Bdd p_max, p_min;      // over w
        dd::Bdd owned_min;         // over x
        dd::Bdd enabled_min_rows;  // over (w,z,x)
    };

    SideContext make_side(const Coalition& max_side) const {
        SideContext s;
        auto [pm, pn] = player_partition_bdds(sym_, max_side);
        s.p_max = pm;
        s.p_min = pn;
        s.owned_min = owned_by_side(max_side.complement(num_players()));
        s.enabled_min_rows = mgr_.and_(sym_.enabled, s.p_min);
        return s;
    }

    // Per-state optimum from per-row backups: max-abstraction over the
    // maximising side's rows (zero elsewhere keeps the sum form intact),
    // min-abstraction over the minimising side's enabled rows with
    // disabled ones masked to +infinity, summed per Algorithm 1.
    dd::Mtbdd combine(const dd::Mtbdd& rows, const SideContext& side) const {
        dd::Mtbdd max_rows = mgr_.apply(dd::BinOp::Times, rows, side.p_max);
        dd::Mtbdd v_max = mgr_.abstract_(dd::AbstractOp::Max, sym_.zvars,
                                         mgr_.abstract_(dd::AbstractOp::Plus, sym_.wvars, max_rows));
        dd::Mtbdd masked = mgr_.if_then_else(side.enabled_min_rows, rows,
                                             mgr_.const_(std::numeric_limits<double>::infinity()));
        dd::Mtbdd v_min = mgr_.abstract_(dd::AbstractOp::Min, wz(), masked);
        dd::Mtbdd v_min0 = mgr_.if_then_else(side.owned_min, v_min, mgr_.const_(0.0));
        return mgr_.apply(dd::BinOp::Plus, v_max, v_min0);
    }

    // optimum over enabled rows per state (equilibrium sweeps)
    dd::Mtbdd opt_over_rows(const dd::Mtbdd& rows, bool maximize) const {
        if (maximize) {
            dd::Mtbdd masked = mgr_.if_then_else(sym_.enabled, rows, mgr_.const_(0.0));
            return mgr_.abstract_(dd::AbstractOp::Max, wz(), masked);
        }
        dd::Mtbdd masked = mgr_.if_then_else(sym_.enabled, rows,
                                             mgr_.const_(std::numeric_limits<double>::infinity()));
        return mgr_.abstract_(dd::AbstractOp::Min, wz(), masked);
    }

    dd::Mtbdd opt_over_rows_filtered(const dd::Mtbdd& rows, const dd::Bdd& filter, bool maximize) const {
        if (maximize) {
            dd::Mtbdd masked = mgr_.if_then_else(filter, rows, mgr_.const_(0.0));
            return mgr_.abstract_(dd::AbstractOp::Max, wz(), masked);
        }
        dd::Mtbdd masked = mgr_.if_then_else(filter, rows,
                                             mgr_.const_(std::numeric_limits<double>::infinity()));
        return mgr_.abstract_(dd::AbstractOp::Min, wz(), masked);
    }

    // Stage-filters the maximiser's epsilon-optimal rows over the region
    // where values were obtained numerically: a kept row must have a
    // successor in a strictly earlier stage, with stages grown from the
    // exactly valued complement (through the opponent's states via any
    // enabled row). This certifies that any play over the kept rows keeps
    // making progress, so fixing them preserves the value.
    dd::Bdd staged_rows(const dd::Bdd& opt_max_rows, const dd::Bdd& region, const SideContext& side) const {
        dd::Bdd d = mgr_.and_(sym_.reach, mgr_.not_(region));
        dd::Bdd kept = mgr_.false_();
        for (;;) {
            dd::Bdd hit = sym_.rows_with_successor_in(d);
            dd::Bdd prog_max = mgr_.and_(opt_max_rows, hit);
            dd::Bdd fresh_max = mgr_.and_(exists_wz(prog_max), mgr_.not_(d));
            dd::Bdd min_hit = mgr_.and_(mgr_.and_(sym_.enabled, side.p_min), hit);
            dd::Bdd fresh_min = mgr_.and_(mgr_.and_(exists_wz(min_hit), region), mgr_.not_(d));
            kept = mgr_.or_(kept, mgr_.and_(prog_max, fresh_max));
            dd::Bdd next = mgr_.or_(d, mgr_.or_(fresh_max, fresh_min));
            if (next == d) break;
            d = next;
        }
        // states the staging could not certify keep their unfiltered rows
        dd::Bdd covered = exists_wz(kept);
        dd::Bdd uncovered_rows = mgr_.and_(opt_max_rows, mgr_.not_(covered));
        return mgr_.or_(kept, uncovered_rows);
    }

    // Per state, keeps exactly the row with the least action code.
    dd::Bdd lexicographic_least(dd::Bdd rows) const {
        for (dd::VarId z : sym_.zvars) {
            dd::Bdd with0 = mgr_.and_(rows, mgr_.nvar(z));
            dd::Bdd has0 = exists_wz(with0);
            rows = mgr_.as_bdd(mgr_.if_then_else(has0, with0, mgr_.and_(rows, mgr_.var(z))));
        }
        return rows;
    }

    // value of the chosen row, per state
    dd::Mtbdd extract_chosen(const dd::Mtbdd& rows, const dd::Bdd& chosen) const {
        return mgr_.abstract_(dd::AbstractOp::Plus, wz(), mgr_.apply(dd::BinOp::Times, rows, chosen));
    }

    dd::Bdd prob1_inner(const Coalition& max_side, const dd::Bdd& target, const dd::Bdd& stay,
                        const dd::Bdd& y, dd::Bdd* witness) const {
        auto [p_max, p_min] = player_partition_bdds(sym_, max_side);
        dd::Bdd owned_min = owned_by_side(max_side.complement(num_players()));
        dd::Bdd x = target;
        for (;;) {
            dd::Bdd supp_in_y = sym_.rows_with_support_in(y);
            dd::Bdd meets_x = sym_.rows_with_successor_in(x);
            dd::Bdd good = mgr_.and_(supp_in_y, meets_x);
            dd::Bdd good_max_rows = mgr_.and_(good, p_max);
            dd::Bdd some_max = exists_wz(good_max_rows);
            dd::Bdd bad = mgr_.and_(sym_.enabled, mgr_.not_(good));
            dd::Bdd min_ok = mgr_.and_(owned_min, mgr_.not_(exists_wz(mgr_.and_(bad, p_min))));
            dd::Bdd next = mgr_.or_(target, mgr_.and_(stay, mgr_.or_(some_max, min_ok)));
            if (witness) {
                dd::Bdd fresh = mgr_.and_(next, mgr_.not_(x));
                *witness = mgr_.or_(*witness, mgr_.and_(good_max_rows, fresh));
            }
            if (next == x) break;
            x = next;
        }
        return x;
    }

    CheckResult check_rec(const StateFormula& f, const SolverConfig& cfg) {
        CheckResult res;
        switch (f.kind) {
            case StateFormula::Kind::True:
                res.sat = sym_.reach;
                break;
            case StateFormula::Kind::Atom: {
                auto it = sym_.labels.find(f.atom);
                if (it == sym_.labels.end()) throw ModelError("unknown label: " + f.atom);
                res.sat = mgr_.and_(it->second, sym_.reach);
                break;
            }
            case StateFormula::Kind::Not:
                res.sat = mgr_.and_(sym_.reach, mgr_.not_(sat_set(*f.lhs, cfg)));
                break;
            case StateFormula::Kind::And:
                res.sat = mgr_.and_(sat_set(*f.lhs, cfg), sat_set(*f.rhs, cfg));
                break;
            case StateFormula::Kind::ZeroSumP:
                res = zero_sum_p(f, cfg);
                break;
            case StateFormula::Kind::ZeroSumR:
                res = zero_sum_r(f, cfg);
                break;
            case StateFormula::Kind::Nash: {
                NashObjectiveDds o1 = resolve_objective(f.objectives.at(0), cfg);
                NashObjectiveDds o2 = resolve_objective(f.objectives.at(1), cfg);
                NashOutcome nash = nash2(Coalition::of(f.coalition), o1, o2, f.nash_welfare, cfg);
                res.values = mgr_.apply(dd::BinOp::Plus, nash.v1, nash.v2);
                res.nash_values1 = nash.v1;
                res.nash_values2 = nash.v2;
                res.profile_rows = nash.profile_rows;
                res.strategy = StrategyBdd{rows_to_strategy(nash.profile_rows), Coalition::of(f.coalition)};
                res.stats = nash.stats;
                if (!f.bound.numeric) res.sat = threshold_sat(res.values, f.bound.cmp, f.bound.threshold);
                break;
            }
        }
        if (!res.values.valid() && res.sat.valid()) res.values = indicator(res.sat);
        return res;
    }

    dd::Bdd rows_to_strategy(const dd::Bdd& rows_wzx) const {
        dd::Bdd xz = mgr_.as_bdd(mgr_.abstract_(dd::AbstractOp::Or, sym_.wvars, rows_wzx));
        return mgr_.as_bdd(mgr_.replace_vars(xz, sym_.zvars, sym_.zpvars));
    }

    // Qualitative-only shortcut: threshold comparisons against 0 or 1 are
    // answered by the precomputation sets alone, without value iteration.
    std::optional<dd::Bdd> qualitative_sat(const Coalition& max_side, const dd::Bdd& target,
                                           const dd::Bdd& stay, Cmp cmp, double bound) const {
        bool zero = bound == 0.0, one = bound == 1.0;
        if (!zero && !one) return std::nullopt;
        if (zero && cmp == Cmp::Ge) return sym_.reach;            // always
        if (zero && cmp == Cmp::Lt) return mgr_.false_();         // never
        if (one && cmp == Cmp::Le) return sym_.reach;
        if (one && cmp == Cmp::Gt) return mgr_.false_();
        if (zero && cmp == Cmp::Gt) return mgr_.and_(sym_.reach, mgr_.not_(prob0(max_side, target, stay)));
        if (zero && cmp == Cmp::Le) return prob0(max_side, target, stay);
        if (one && cmp == Cmp::Ge) return prob1(max_side, target, stay);
        if (one && cmp == Cmp::Lt) return mgr_.and_(sym_.reach, mgr_.not_(prob1(max_side, target, stay)));
        return std::nullopt;
    }

    CheckResult zero_sum_p(const StateFormula& f, const SolverConfig& cfg) {
        Coalition c = Coalition::of(f.coalition);
        Coalition max_side = f.bound.maximize ? c : c.complement(num_players());
        CheckResult res;
        switch (f.path.kind) {
            case PathFormula::Kind::Next:
                res.values = next_value(max_side, sat_set(*f.path.rhs, cfg));
                break;
            case PathFormula::Kind::BoundedUntil:
                res.values = bounded_until(max_side, sat_set(*f.path.lhs, cfg),
                                           sat_set(*f.path.rhs, cfg), f.path.bound);
                break;
            case PathFormula::Kind::Until: {
                dd::Bdd target = sat_set(*f.path.rhs, cfg);
                dd::Bdd stay = mgr_.or_(sat_set(*f.path.lhs, cfg), target);
                if (!f.bound.numeric) {
                    // the stored bound already refers to the stored path
                    // formula, so this satisfaction set is final
                    auto qual = qualitative_sat(max_side, target, stay, f.bound.cmp, f.bound.threshold);
                    if (qual) {
                        res.sat = *qual;
                        res.values = indicator(res.sat);
                        return res;
                    }
                }
                IterOutcome iter = value_iter_reach(max_side, target, stay, cfg);
                res.values = iter.values;
                res.profile_rows =
                    cfg.tie_lexicographic ? lexicographic_least(iter.profile_rows) : iter.profile_rows;
                res.strategy = StrategyBdd{
                    rows_to_strategy(mgr_.and_(res.profile_rows, owned_by_side(c))), c};
                res.stats = iter.stats;
                break;
            }
        }
        // the stored bound refers to the computed (pre-complement) values
        if (!f.bound.numeric) res.sat = threshold_sat(res.values, f.bound.cmp, f.bound.threshold);
        if (f.path.complemented)
            res.values = mgr_.apply(dd::BinOp::Times,
                                    mgr_.apply(dd::BinOp::Minus, mgr_.const_(1.0), res.values),
                                    sym_.reach);
        return res;
    }

    CheckResult zero_sum_r(const StateFormula& f, const SolverConfig& cfg) {
        Coalition c = Coalition::of(f.coalition);
        Coalition max_side = f.bound.maximize ? c : c.complement(num_players());
        const auto& rew = sym_.rewards.at(f.reward_name);
        CheckResult res;
        switch (f.rho.kind) {
            case RewardFormula::Kind::Instant:
                res.values = instant_reward(max_side, rew, f.rho.bound);
                break;
            case RewardFormula::Kind::CumulBounded:
                res.values = cumulative_reward(max_side, rew, f.rho.bound);
                break;
            case RewardFormula::Kind::Reach: {
                IterOutcome iter = reach_reward(max_side, rew, sat_set(*f.rho.target, cfg), cfg);
                res.values = iter.values;
                res.profile_rows =
                    cfg.tie_lexicographic ? lexicographic_least(iter.profile_rows) : iter.profile_rows;
                res.strategy = StrategyBdd{
                    rows_to_strategy(mgr_.and_(res.profile_rows, owned_by_side(c))), c};
                res.stats = iter.stats;
                break;
            }
        }
        if (!f.bound.numeric) res.sat = threshold_sat(res.values, f.bound.cmp, f.bound.threshold);
        return res;
    }

    const SymbolicTsg& sym_;
    dd::Manager& mgr_;
};

// ---- strategy export ---------------------------------------------------------

// One line per state valuation with the admissible action names.
inline void export_strategy_text(const SymbolicTsg& sym, const SymbolicChecker& checker,
                                 const dd::Bdd& profile_rows, std::ostream& out) {
    auto rows = checker.decode_rows(profile_rows);
    for (auto& [state, acts] : rows) {
        std::ostringstream line;
        for (std::size_t i = 0; i < sym.state_vars.size(); ++i) {
            if (i) line << ",";
            line << sym.state_vars[i].name << "=" << state[i];
        }
        line << " ->";
        for (int a : acts) line << " " << sym.actions[a];
        out << line.str() << "\n";
    }
}

}  // namespace tsg
