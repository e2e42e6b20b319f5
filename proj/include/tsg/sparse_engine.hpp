#pragma once

// Explicit-state reference engine. Runs the same sweeps as the symbolic
// checker on sparse rows (same precomputation, same initialisation, same
// stopping rule), and provides brute-force oracles for small games:
// profile enumeration with exact linear solves for unbounded objectives,
// and direct expectimax recursion for step-bounded ones.

#include <chrono>
#include <cmath>
#include <map>
#include <optional>
#include <vector>

#include "tsg/explicit_game.hpp"
#include "tsg/properties.hpp"
#include "tsg/solver.hpp"

namespace tsg {

using BitSet = std::vector<char>;

struct ExplicitResult {
    std::vector<double> values;   // per state; the objective sum for equilibria
    BitSet sat;                   // threshold / propositional formulas
    std::map<int, std::vector<int>> strategy;  // optimal action ranks per state
    std::vector<double> nash_values1, nash_values2;
    double initial_value = 0.0;
    CheckStats stats;
};

class SparseEngine {
public:
    explicit SparseEngine(const ExplicitTsg& game) : g_(game) {
        auto r = g_.bfs_reachable();
        reach_.assign(r.begin(), r.end());
        n_ = static_cast<int>(g_.num_states());
    }

    const ExplicitTsg& game() const { return g_; }
    const BitSet& reachable() const { return reach_; }

    GameContext context() const {
        GameContext ctx;
        ctx.players = g_.players;
        for (const auto& [name, set] : g_.labels) ctx.labels.push_back(name);
        for (const auto& [name, rs] : g_.rewards) ctx.rewards.push_back(name);
        return ctx;
    }

    // ---- recursive model checking ---------------------------------------

    ExplicitResult check(const FormulaPtr& f, const SolverConfig& cfg) const {
        ExplicitResult res = check_rec(*f, cfg);
        res.initial_value = res.values.empty() ? 0.0 : res.values[g_.init];
        return res;
    }

    BitSet sat_set(const StateFormula& f, const SolverConfig& cfg) const {
        return check_rec(f, cfg).sat;
    }

    // ---- precomputation ---------------------------------------------------

    // States where the maximising coalition cannot make the (stay U target)
    // probability positive: complement of the attractor lfp.
    BitSet prob0(const Coalition& max_side, const BitSet& target, const BitSet& stay) const {
        BitSet x(n_, 0);
        for (int s = 0; s < n_; ++s) x[s] = target[s] && reach_[s];
        bool changed = true;
        while (changed) {
            changed = false;
            for (int s = 0; s < n_; ++s) {
                if (x[s] || !reach_[s] || !stay[s]) continue;
                bool is_max = max_side.contains(g_.owner[s]);
                bool add = is_max ? some_action_hits(s, x) : all_actions_hit(s, x);
                if (add) {
                    x[s] = 1;
                    changed = true;
                }
            }
        }
        BitSet out(n_, 0);
        for (int s = 0; s < n_; ++s) out[s] = reach_[s] && !x[s];
        return out;
    }

    // States where the maximising coalition can force reaching the target
    // with probability one; optionally records witness actions for its
    // states (the stage-wise attractor choices).
    BitSet prob1(const Coalition& max_side, const BitSet& target, const BitSet& stay,
                 std::map<int, std::vector<int>>* witness = nullptr) const {
        BitSet y(reach_);
        for (;;) {
            BitSet x = prob1_inner(max_side, target, stay, y, nullptr);
            if (x == y) break;
            y = x;
        }
        if (witness) prob1_inner(max_side, target, stay, y, witness);
        return y;
    }

    // ---- value iteration (mirrors Algorithm 1's sweep) --------------------

    struct IterOutcome {
        std::vector<double> values;
        std::map<int, std::vector<int>> opt_rows;  // epsilon-optimal actions, maybe region
        CheckStats stats;
    };

    IterOutcome reach_probability(const Coalition& max_side, const BitSet& target, const BitSet& stay,
                                  const SolverConfig& cfg) const {
        IterOutcome out;
        double t0 = detail::now_seconds();
        BitSet s0 = prob0(max_side, target, stay);
        std::map<int, std::vector<int>> witness;
        BitSet s1 = prob1(max_side, target, stay, &witness);
        out.stats.qual_seconds = detail::now_seconds() - t0;
        out.stats.prob0_states = popcount(s0);
        out.stats.prob1_states = popcount(s1);

        BitSet maybe(n_, 0);
        for (int s = 0; s < n_; ++s) maybe[s] = reach_[s] && !s0[s] && !s1[s];

        double t1 = detail::now_seconds();
        std::vector<double> sol(n_, 0.0);
        for (int s = 0; s < n_; ++s) sol[s] = s1[s] ? 1.0 : 0.0;
        int iters = 0;
        double norm = 0.0;
        while (popcount(maybe) > 0) {  // empty maybe region: qualitative answer
            if (iters >= cfg.max_iters) throw NonConvergenceError(norm, iters);
            std::vector<double> next = sol;
            for (int s = 0; s < n_; ++s) {
                if (!maybe[s]) continue;
                next[s] = backup(s, sol, max_side.contains(g_.owner[s]), nullptr, 0.0);
            }
            for (int s = 0; s < n_; ++s)
                if (s1[s]) next[s] = 1.0;
            for (int s = 0; s < n_; ++s) next[s] = std::max(next[s], sol[s]);  // monotone sweeps
            norm = sup_norm(next, sol, cfg.relative);
            sol = std::move(next);
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
        for (int s = 0; s < n_; ++s) {
            if (!maybe[s]) continue;
            std::vector<int> acts;
            for (const auto& [a, dist] : g_.delta[s]) {
                double v = 0.0;
                for (auto& [t, p] : dist) v += p * sol[t];
                if (value_distance(v, sol[s], cfg.relative) < cfg.epsilon) acts.push_back(a);
            }
            out.opt_rows[s] = std::move(acts);
        }
        stage_filter(out.opt_rows, maybe, max_side);
        // prob1 witness rows complete the strategy on the value-1 region
        for (auto& [s, acts] : witness)
            if (!out.opt_rows.count(s)) out.opt_rows[s] = acts;
        out.values = std::move(sol);
        mask_unreachable(out.values);
        out.stats.strategy_size = out.opt_rows.size();
        return out;
    }

    std::vector<double> bounded_until(const Coalition& max_side, const BitSet& stay, const BitSet& target,
                                      int k) const {
        std::vector<double> sol(n_, 0.0);
        for (int s = 0; s < n_; ++s) sol[s] = (target[s] && reach_[s]) ? 1.0 : 0.0;
        for (int step = 0; step < k; ++step) {
            std::vector<double> next = sol;
            for (int s = 0; s < n_; ++s) {
                if (!reach_[s] || target[s] || !stay[s]) continue;
                next[s] = backup(s, sol, max_side.contains(g_.owner[s]), nullptr, 0.0);
            }
            sol = std::move(next);
        }
        mask_unreachable(sol);
        return sol;
    }

    std::vector<double> next_value(const Coalition& max_side, const BitSet& target) const {
        std::vector<double> ind(n_, 0.0);
        for (int s = 0; s < n_; ++s) ind[s] = (target[s] && reach_[s]) ? 1.0 : 0.0;
        std::vector<double> sol(n_, 0.0);
        for (int s = 0; s < n_; ++s) {
            if (!reach_[s]) continue;
            sol[s] = backup(s, ind, max_side.contains(g_.owner[s]), nullptr, 0.0);
        }
        return sol;
    }

    std::vector<double> instant_reward(const Coalition& max_side, const RewardStructure& rew, int k) const {
        std::vector<double> sol(n_, 0.0);
        for (int s = 0; s < n_; ++s) sol[s] = reach_[s] ? rew.state_rew(s) : 0.0;
        for (int step = 0; step < k; ++step) {
            std::vector<double> next(n_, 0.0);
            for (int s = 0; s < n_; ++s) {
                if (!reach_[s]) continue;
                next[s] = backup(s, sol, max_side.contains(g_.owner[s]), nullptr, 0.0);
            }
            sol = std::move(next);
        }
        return sol;
    }

    std::vector<double> cumulative_reward(const Coalition& max_side, const RewardStructure& rew,
                                          int k) const {
        std::vector<double> sol(n_, 0.0);
        for (int step = 0; step < k; ++step) {
            std::vector<double> next(n_, 0.0);
            for (int s = 0; s < n_; ++s) {
                if (!reach_[s]) continue;
                next[s] = rew.state_rew(s) + backup(s, sol, max_side.contains(g_.owner[s]), &rew, 1.0);
            }
            sol = std::move(next);
        }
        return sol;
    }

    IterOutcome reach_reward(const Coalition& max_side, const RewardStructure& rew, const BitSet& target,
                             const SolverConfig& cfg) const {
        IterOutcome out;
        double t0 = detail::now_seconds();
        // finite exactly where the reward-minimising side forces reaching
        // the target almost surely
        Coalition min_side = max_side.complement(static_cast<int>(g_.players.size()));
        BitSet fin = prob1(min_side, target, reach_);
        out.stats.qual_seconds = detail::now_seconds() - t0;
        BitSet inf(n_, 0);
        for (int s = 0; s < n_; ++s) inf[s] = reach_[s] && !fin[s];
        out.stats.inf_states = popcount(inf);

        const double infinity = std::numeric_limits<double>::infinity();
        BitSet active(n_, 0);
        for (int s = 0; s < n_; ++s) active[s] = reach_[s] && !inf[s] && !target[s];

        double t1 = detail::now_seconds();
        std::vector<double> sol(n_, 0.0);
        for (int s = 0; s < n_; ++s)
            if (inf[s]) sol[s] = infinity;
        int iters = 0;
        double norm = 0.0;
        while (popcount(active) > 0) {
            if (iters >= cfg.max_iters) throw NonConvergenceError(norm, iters);
            std::vector<double> next = sol;
            for (int s = 0; s < n_; ++s) {
                if (!active[s]) continue;
                next[s] = rew.state_rew(s) + backup(s, sol, max_side.contains(g_.owner[s]), &rew, 1.0);
            }
            for (int s = 0; s < n_; ++s) {
                if (target[s] && reach_[s]) next[s] = 0.0;
                if (inf[s]) next[s] = infinity;
            }
            for (int s = 0; s < n_; ++s) next[s] = std::max(next[s], sol[s]);
            norm = sup_norm(next, sol, cfg.relative);
            sol = std::move(next);
            ++iters;
            if (norm < cfg.epsilon) break;
        }
        out.stats.iterations = iters;
        out.stats.final_norm = norm;
        out.stats.quant_seconds = detail::now_seconds() - t1;

        for (int s = 0; s < n_; ++s) {
            if (!active[s]) continue;
            std::vector<int> acts;
            for (const auto& [a, dist] : g_.delta[s]) {
                double v = rew.state_rew(s) + rew.action_rew(s, a);
                for (auto& [t, p] : dist)
                    if (p > 0.0 && sol[t] != 0.0) v += p * sol[t];
                if (value_distance(v, sol[s], cfg.relative) < cfg.epsilon) acts.push_back(a);
            }
            out.opt_rows[s] = std::move(acts);
        }
        stage_filter(out.opt_rows, active, max_side);
        out.values = std::move(sol);
        mask_unreachable(out.values);
        out.stats.strategy_size = out.opt_rows.size();
        return out;
    }

    // ---- 2-coalition equilibrium ------------------------------------------

    struct NashOutcome {
        std::vector<double> v1, v2;
        std::map<int, int> profile;  // chosen action rank per state
        CheckStats stats;
    };

    NashOutcome nash2(const Coalition& c1, const std::vector<Objective>& objectives, bool welfare,
                      const SolverConfig& cfg) const {
        NashObjective o1 = resolve_objective(objectives.at(0), cfg);
        NashObjective o2 = resolve_objective(objectives.at(1), cfg);
        return nash2_resolved(c1, o1, o2, welfare, cfg);
    }

    struct NashObjective {
        bool is_reward = false;
        BitSet goal;
        const RewardStructure* rew = nullptr;
        BitSet inf;  // reward objectives: goal unreachable in the game graph
    };

    NashObjective resolve_objective(const Objective& o, const SolverConfig& cfg) const {
        NashObjective r;
        r.is_reward = o.is_reward;
        if (o.is_reward) {
            if (o.rho.kind != RewardFormula::Kind::Reach)
                throw ModelError("equilibrium objectives support F targets only");
            r.goal = sat_set(*o.rho.target, cfg);
            r.rew = &g_.rewards.at(o.reward_name);
            r.inf = graph_cannot_reach(r.goal);
        } else {
            if (o.path.kind != PathFormula::Kind::Until || o.path.complemented)
                throw ModelError("equilibrium objectives support F and U targets only");
            BitSet stay = sat_set(*o.path.lhs, cfg);
            r.goal = sat_set(*o.path.rhs, cfg);
            // the until constraint folds into an unreachable-goal mask
            r.inf.assign(n_, 0);
            if (o.path.lhs->kind != StateFormula::Kind::True)
                for (int s = 0; s < n_; ++s)
                    if (!stay[s] && !r.goal[s]) r.inf[s] = 1;  // value pinned 0 outside stay
        }
        return r;
    }

    NashOutcome nash2_resolved(const Coalition& c1, const NashObjective& o1, const NashObjective& o2,
                               bool welfare, const SolverConfig& cfg) const {
        NashOutcome out;
        const double infinity = std::numeric_limits<double>::infinity();
        auto initial = [&](const NashObjective& o) {
            std::vector<double> v(n_, 0.0);
            for (int s = 0; s < n_; ++s) {
                if (!reach_[s]) continue;
                if (o.is_reward && o.inf[s]) v[s] = infinity;
                else if (!o.is_reward) v[s] = (o.goal[s] && !o.inf[s]) ? 1.0 : 0.0;
            }
            return v;
        };
        std::vector<double> v1 = initial(o1), v2 = initial(o2);

        auto backup_obj = [&](const NashObjective& o, const std::vector<double>& v, int s,
                              const Distribution& dist, int a) {
            if (o.is_reward) {
                if (o.goal[s]) return 0.0;
                if (o.inf[s]) return infinity;
                double r = o.rew->state_rew(s) + o.rew->action_rew(s, a);
                for (auto& [t, p] : dist)
                    if (v[t] != 0.0) r += p * v[t];
                return r;
            }
            if (o.goal[s] && !o.inf[s]) return 1.0;
            if (o.inf[s]) return 0.0;  // outside the until's stay region
            double r = 0.0;
            for (auto& [t, p] : dist) r += p * v[t];
            return r;
        };

        // One coupled sweep: the owner picks among its own-optimal actions
        // the one optimising the sum. When `incumbent` is given, a state
        // keeps its current action unless another is strictly better;
        // otherwise ties go to the least action rank. Retaining incumbents
        // is what stops stale value-preserving loops (a self-loop inherits
        // the state's own converged value and ties with real progress).
        auto select_sweep = [&](std::vector<double>& x1, std::vector<double>& x2,
                                const std::map<int, int>* incumbent, std::map<int, int>* chosen) {
            std::vector<double> n1 = x1, n2 = x2;
            for (int s = 0; s < n_; ++s) {
                if (!reach_[s]) continue;
                bool side1 = c1.contains(g_.owner[s]);
                double own_opt = welfare ? -infinity : infinity;
                std::vector<std::pair<int, std::pair<double, double>>> backups;
                for (const auto& [a, dist] : g_.delta[s]) {
                    double b1 = backup_obj(o1, x1, s, dist, a);
                    double b2 = backup_obj(o2, x2, s, dist, a);
                    backups.emplace_back(a, std::make_pair(b1, b2));
                    double own = side1 ? b1 : b2;
                    own_opt = welfare ? std::max(own_opt, own) : std::min(own_opt, own);
                }
                double sum_opt = welfare ? -infinity : infinity;
                for (auto& [a, bs] : backups) {
                    double own = side1 ? bs.first : bs.second;
                    if (value_distance(own, own_opt, cfg.relative) >= cfg.epsilon) continue;
                    double sum = bs.first + bs.second;
                    sum_opt = welfare ? std::max(sum_opt, sum) : std::min(sum_opt, sum);
                }
                int best_a = -1;
                double r1 = 0.0, r2 = 0.0;
                if (incumbent) {
                    auto it = incumbent->find(s);
                    if (it != incumbent->end()) {
                        for (auto& [a, bs] : backups) {
                            if (a != it->second) continue;
                            double own = side1 ? bs.first : bs.second;
                            double sum = bs.first + bs.second;
                            if (value_distance(own, own_opt, cfg.relative) < cfg.epsilon &&
                                value_distance(sum, sum_opt, cfg.relative) < cfg.epsilon) {
                                best_a = a;
                                r1 = bs.first;
                                r2 = bs.second;
                            }
                        }
                    }
                }
                if (best_a < 0) {
                    for (auto& [a, bs] : backups) {
                        double own = side1 ? bs.first : bs.second;
                        if (value_distance(own, own_opt, cfg.relative) >= cfg.epsilon) continue;
                        if (bs.first + bs.second != sum_opt) continue;
                        best_a = a;
                        r1 = bs.first;
                        r2 = bs.second;
                        break;  // least rank
                    }
                }
                if (chosen) (*chosen)[s] = best_a;
                n1[s] = r1;
                n2[s] = r2;
            }
            double norm = std::max(sup_norm(n1, x1, cfg.relative), sup_norm(n2, x2, cfg.relative));
            x1 = std::move(n1);
            x2 = std::move(n2);
            return norm;
        };

        // True values of a frozen profile, from scratch on its induced
        // chain, so stale optimistic values cannot survive.
        auto evaluate_profile = [&](const std::map<int, int>& profile, std::vector<double>& y1,
                                    std::vector<double>& y2, int& iters) {
            y1 = initial(o1);
            y2 = initial(o2);
            double norm = infinity;
            for (;;) {
                if (iters >= cfg.max_iters) throw NonConvergenceError(norm, iters);
                std::vector<double> n1 = y1, n2 = y2;
                for (auto& [s, a] : profile) {
                    const Distribution& dist = g_.delta[s].at(a);
                    n1[s] = backup_obj(o1, y1, s, dist, a);
                    n2[s] = backup_obj(o2, y2, s, dist, a);
                }
                norm = std::max(sup_norm(n1, y1, cfg.relative), sup_norm(n2, y2, cfg.relative));
                y1 = std::move(n1);
                y2 = std::move(n2);
                ++iters;
                if (norm < cfg.epsilon) break;
            }
            return norm;
        };

        // Coupled value iteration initialises the profile; policy-style
        // rounds then evaluate it exactly and only switch actions on strict
        // improvement, until the profile is stable.
        int iters = 0;
        double norm = infinity;
        while (norm >= 10 * cfg.epsilon) {
            if (iters >= cfg.max_iters) throw NonConvergenceError(norm, iters);
            norm = select_sweep(v1, v2, nullptr, nullptr);
            ++iters;
        }
        std::map<int, int> profile;
        select_sweep(v1, v2, nullptr, &profile);
        ++iters;
        double last_norm = infinity;
        for (int round = 0;; ++round) {
            if (round > 60) throw NonConvergenceError(last_norm, iters);
            std::vector<double> y1, y2;
            last_norm = evaluate_profile(profile, y1, y2, iters);
            std::map<int, int> improved;
            v1 = y1;
            v2 = y2;
            select_sweep(v1, v2, &profile, &improved);
            ++iters;
            v1 = std::move(y1);
            v2 = std::move(y2);
            if (improved == profile) break;
            profile = std::move(improved);
        }
        out.v1 = std::move(v1);
        out.v2 = std::move(v2);
        mask_unreachable(out.v1);
        mask_unreachable(out.v2);
        out.profile = std::move(profile);
        out.stats.iterations = iters;
        out.stats.final_norm = last_norm;
        out.stats.strategy_size = out.profile.size();
        return out;
    }

    // ---- helpers -----------------------------------------------------------

    BitSet label_set(const std::string& name) const {
        BitSet b(n_, 0);
        auto it = g_.labels.find(name);
        if (it == g_.labels.end()) throw ModelError("unknown label: " + name);
        for (int s : it->second) b[s] = 1;
        return b;
    }

    // states from which the target is unreachable in the underlying graph
    BitSet graph_cannot_reach(const BitSet& target) const {
        BitSet can(n_, 0);
        for (int s = 0; s < n_; ++s) can[s] = target[s];
        bool changed = true;
        while (changed) {
            changed = false;
            for (int s = 0; s < n_; ++s) {
                if (can[s]) continue;
                if (some_action_hits(s, can)) {
                    can[s] = 1;
                    changed = true;
                }
            }
        }
        BitSet out(n_, 0);
        for (int s = 0; s < n_; ++s) out[s] = reach_[s] && !can[s];
        return out;
    }

    static double sup_norm(const std::vector<double>& a, const std::vector<double>& b, bool relative) {
        double worst = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, value_distance(a[i], b[i], relative));
        return worst;
    }

private:
    ExplicitResult check_rec(const StateFormula& f, const SolverConfig& cfg) const {
        ExplicitResult res;
        switch (f.kind) {
            case StateFormula::Kind::True: {
                res.sat = reach_;
                break;
            }
            case StateFormula::Kind::Atom: {
                res.sat = label_set(f.atom);
                for (int s = 0; s < n_; ++s) res.sat[s] = res.sat[s] && reach_[s];
                break;
            }
            case StateFormula::Kind::Not: {
                BitSet inner = sat_set(*f.lhs, cfg);
                res.sat.assign(n_, 0);
                for (int s = 0; s < n_; ++s) res.sat[s] = reach_[s] && !inner[s];
                break;
            }
            case StateFormula::Kind::And: {
                BitSet a = sat_set(*f.lhs, cfg), b = sat_set(*f.rhs, cfg);
                res.sat.assign(n_, 0);
                for (int s = 0; s < n_; ++s) res.sat[s] = a[s] && b[s];
                break;
            }
            case StateFormula::Kind::ZeroSumP: {
                res = zero_sum_p(f, cfg);
                break;
            }
            case StateFormula::Kind::ZeroSumR: {
                res = zero_sum_r(f, cfg);
                break;
            }
            case StateFormula::Kind::Nash: {
                NashOutcome nash = nash2(Coalition::of(f.coalition), f.objectives, f.nash_welfare, cfg);
                res.values.assign(n_, 0.0);
                for (int s = 0; s < n_; ++s) res.values[s] = nash.v1[s] + nash.v2[s];
                res.nash_values1 = std::move(nash.v1);
                res.nash_values2 = std::move(nash.v2);
                for (auto& [s, a] : nash.profile) res.strategy[s] = {a};
                res.stats = nash.stats;
                if (!f.bound.numeric) threshold_sat(res, f.bound);
                break;
            }
        }
        if (res.values.empty()) {
            res.values.assign(n_, 0.0);
            if (!res.sat.empty())
                for (int s = 0; s < n_; ++s) res.values[s] = res.sat[s] ? 1.0 : 0.0;
        }
        return res;
    }

    // Qualitative-only shortcut: threshold comparisons against 0 or 1 are
    // answered by the precomputation sets alone, without value iteration.
    std::optional<BitSet> qualitative_sat(const Coalition& max_side, const BitSet& target,
                                          const BitSet& stay, Cmp cmp, double bound) const {
        bool zero = bound == 0.0, one = bound == 1.0;
        if (!zero && !one) return std::nullopt;
        auto always = [&] { return reach_; };
        auto never = [&] { return BitSet(n_, 0); };
        auto invert = [&](BitSet b) {
            for (int s = 0; s < n_; ++s) b[s] = reach_[s] && !b[s];
            return b;
        };
        if (zero && cmp == Cmp::Ge) return always();
        if (zero && cmp == Cmp::Lt) return never();
        if (one && cmp == Cmp::Le) return always();
        if (one && cmp == Cmp::Gt) return never();
        if (zero && cmp == Cmp::Gt) return invert(prob0(max_side, target, stay));
        if (zero && cmp == Cmp::Le) return prob0(max_side, target, stay);
        if (one && cmp == Cmp::Ge) return prob1(max_side, target, stay);
        if (one && cmp == Cmp::Lt) return invert(prob1(max_side, target, stay));
        return std::nullopt;
    }

    ExplicitResult zero_sum_p(const StateFormula& f, const SolverConfig& cfg) const {
        Coalition c = Coalition::of(f.coalition);
        Coalition max_side = f.bound.maximize ? c : c.complement(static_cast<int>(g_.players.size()));
        ExplicitResult res;
        switch (f.path.kind) {
            case PathFormula::Kind::Next: {
                BitSet target = sat_set(*f.path.rhs, cfg);
                res.values = next_value(max_side, target);
                break;
            }
            case PathFormula::Kind::BoundedUntil: {
                BitSet stay = sat_set(*f.path.lhs, cfg);
                BitSet target = sat_set(*f.path.rhs, cfg);
                res.values = bounded_until(max_side, stay, target, f.path.bound);
                break;
            }
            case PathFormula::Kind::Until: {
                BitSet stayf = sat_set(*f.path.lhs, cfg);
                BitSet target = sat_set(*f.path.rhs, cfg);
                BitSet stay(n_, 0);
                for (int s = 0; s < n_; ++s) stay[s] = stayf[s] || target[s];
                if (!f.bound.numeric) {
                    // the stored bound already refers to the stored path
                    // formula, so this satisfaction set is final
                    auto qual = qualitative_sat(max_side, target, stay, f.bound.cmp, f.bound.threshold);
                    if (qual) {
                        res.sat = *qual;
                        res.values.assign(n_, 0.0);
                        for (int s = 0; s < n_; ++s) res.values[s] = res.sat[s] ? 1.0 : 0.0;
                        return res;
                    }
                }
                auto iter = reach_probability(max_side, target, stay, cfg);
                res.values = std::move(iter.values);
                for (auto& [s, acts] : iter.opt_rows) res.strategy[s] = acts;
                if (cfg.tie_lexicographic)
                    for (auto& [s, acts] : res.strategy)
                        if (!acts.empty()) acts.resize(1);
                res.stats = iter.stats;
                break;
            }
        }
        // the stored bound refers to the computed (pre-complement) values
        if (!f.bound.numeric) threshold_sat(res, f.bound);
        if (f.path.complemented) {
            for (int s = 0; s < n_; ++s)
                if (reach_[s]) res.values[s] = 1.0 - res.values[s];
        }
        return res;
    }

    ExplicitResult zero_sum_r(const StateFormula& f, const SolverConfig& cfg) const {
        Coalition c = Coalition::of(f.coalition);
        Coalition max_side = f.bound.maximize ? c : c.complement(static_cast<int>(g_.players.size()));
        const RewardStructure& rew = g_.rewards.at(f.reward_name);
        ExplicitResult res;
        switch (f.rho.kind) {
            case RewardFormula::Kind::Instant:
                res.values = instant_reward(max_side, rew, f.rho.bound);
                break;
            case RewardFormula::Kind::CumulBounded:
                res.values = cumulative_reward(max_side, rew, f.rho.bound);
                break;
            case RewardFormula::Kind::Reach: {
                BitSet target = sat_set(*f.rho.target, cfg);
                auto iter = reach_reward(max_side, rew, target, cfg);
                res.values = std::move(iter.values);
                for (auto& [s, acts] : iter.opt_rows) res.strategy[s] = acts;
                if (cfg.tie_lexicographic)
                    for (auto& [s, acts] : res.strategy)
                        if (!acts.empty()) acts.resize(1);
                res.stats = iter.stats;
                break;
            }
        }
        if (!f.bound.numeric) threshold_sat(res, f.bound);
        return res;
    }

    void threshold_sat(ExplicitResult& res, const Bound& b) const {
        res.sat.assign(n_, 0);
        for (int s = 0; s < n_; ++s)
            res.sat[s] = reach_[s] && cmp_eval(b.cmp, res.values[s], b.threshold);
    }

    // one-step optimal backup over the enabled actions
    double backup(int s, const std::vector<double>& sol, bool maximize, const RewardStructure* rew,
                  double rew_scale) const {
        double best = maximize ? -std::numeric_limits<double>::infinity()
                               : std::numeric_limits<double>::infinity();
        for (const auto& [a, dist] : g_.delta[s]) {
            double v = rew ? rew_scale * rew->action_rew(s, a) : 0.0;
            for (auto& [t, p] : dist)
                if (sol[t] != 0.0) v += p * sol[t];  // 0 * inf stays inert
            best = maximize ? std::max(best, v) : std::min(best, v);
        }
        return best;
    }

    bool some_action_hits(int s, const BitSet& x) const {
        for (const auto& [a, dist] : g_.delta[s])
            for (auto& [t, p] : dist)
                if (p > 0.0 && x[t]) return true;
        return false;
    }

    bool all_actions_hit(int s, const BitSet& x) const {
        if (g_.delta[s].empty()) return false;
        for (const auto& [a, dist] : g_.delta[s]) {
            bool hit = false;
            for (auto& [t, p] : dist)
                if (p > 0.0 && x[t]) {
                    hit = true;
                    break;
                }
            if (!hit) return false;
        }
        return true;
    }

    bool action_support_in(int s, int a, const BitSet& y) const {
        for (auto& [t, p] : g_.delta[s].at(a))
            if (p > 0.0 && !y[t]) return false;
        return true;
    }

    // Stage-filters the maximiser's epsilon-optimal rows over the region
    // where values were obtained numerically: a kept row must have a
    // successor in a strictly earlier stage, with stages grown from the
    // exactly valued complement (through the opponent's states via any
    // enabled row). This certifies that any play over the kept rows keeps
    // making progress, so fixing them preserves the value.
    void stage_filter(std::map<int, std::vector<int>>& opt_rows, const BitSet& region,
                      const Coalition& max_side) const {
        BitSet d(n_, 0);
        for (int s = 0; s < n_; ++s) d[s] = reach_[s] && !region[s];
        std::map<int, std::vector<int>> kept;
        bool changed = true;
        while (changed) {
            changed = false;
            for (int s = 0; s < n_; ++s) {
                if (d[s] || !reach_[s] || !region[s]) continue;
                bool is_max = max_side.contains(g_.owner[s]);
                if (is_max) {
                    auto it = opt_rows.find(s);
                    if (it == opt_rows.end()) continue;
                    std::vector<int> prog;
                    for (int a : it->second) {
                        for (auto& [t, p] : g_.delta[s].at(a))
                            if (p > 0.0 && d[t]) {
                                prog.push_back(a);
                                break;
                            }
                    }
                    if (!prog.empty()) {
                        kept[s] = std::move(prog);
                        d[s] = 1;
                        changed = true;
                    }
                } else {
                    if (some_action_hits(s, d)) {
                        d[s] = 1;
                        changed = true;
                    }
                }
            }
        }
        for (auto& [s, acts] : kept) opt_rows[s] = std::move(acts);
    }

    BitSet prob1_inner(const Coalition& max_side, const BitSet& target, const BitSet& stay, const BitSet& y,
                       std::map<int, std::vector<int>>* witness) const {
        BitSet x(n_, 0);
        for (int s = 0; s < n_; ++s) x[s] = target[s] && reach_[s];
        bool changed = true;
        while (changed) {
            changed = false;
            for (int s = 0; s < n_; ++s) {
                if (x[s] || !reach_[s] || !stay[s]) continue;
                bool is_max = max_side.contains(g_.owner[s]);
                std::vector<int> good;
                bool all_good = !g_.delta[s].empty();
                for (const auto& [a, dist] : g_.delta[s]) {
                    bool in_y = action_support_in(s, a, y);
                    bool meets_x = false;
                    for (auto& [t, p] : dist)
                        if (p > 0.0 && x[t]) {
                            meets_x = true;
                            break;
                        }
                    if (in_y && meets_x)
                        good.push_back(a);
                    else
                        all_good = false;
                }
                bool add = is_max ? !good.empty() : all_good;
                if (add) {
                    x[s] = 1;
                    changed = true;
                    if (witness && is_max) (*witness)[s] = good;
                }
            }
        }
        return x;
    }

    static std::size_t popcount(const BitSet& b) {
        std::size_t n = 0;
        for (char c : b) n += (c != 0);
        return n;
    }

    void mask_unreachable(std::vector<double>& v) const {
        for (int s = 0; s < n_; ++s)
            if (!reach_[s]) v[s] = 0.0;
    }

    const ExplicitTsg& g_;
    BitSet reach_;
    int n_ = 0;
};

// ---- brute-force oracles ----------------------------------------------------
//
// Exhaustive enumeration of memoryless deterministic profiles with exact
// induced-chain solves; independent of the value-iteration path above.

namespace oracle {

inline std::vector<double> solve_linear(std::vector<std::vector<double>> a, std::vector<double> b) {
    const int n = static_cast<int>(b.size());
    for (int col = 0; col < n; ++col) {
        int pivot = col;
        for (int r = col + 1; r < n; ++r)
            if (std::fabs(a[r][col]) > std::fabs(a[pivot][col])) pivot = r;
        std::swap(a[col], a[pivot]);
        std::swap(b[col], b[pivot]);
        if (std::fabs(a[col][col]) < 1e-14) throw ModelError("singular induced-chain system");
        for (int r = col + 1; r < n; ++r) {
            double f = a[r][col] / a[col][col];
            if (f == 0.0) continue;
            for (int c = col; c < n; ++c) a[r][c] -= f * a[col][c];
            b[r] -= f * b[col];
        }
    }
    std::vector<double> x(n, 0.0);
    for (int r = n - 1; r >= 0; --r) {
        double acc = b[r];
        for (int c = r + 1; c < n; ++c) acc -= a[r][c] * x[c];
        x[r] = acc / a[r][r];
    }
    return x;
}

// Exact reachability probabilities of (stay U target) in the Markov chain
// induced by a deterministic profile.
inline std::vector<double> chain_reach_prob(const ExplicitTsg& g, const std::vector<int>& profile,
                                            const BitSet& target, const BitSet& stay) {
    const int n = static_cast<int>(g.num_states());
    // backward closure through stay states
    BitSet can(n, 0);
    for (int s = 0; s < n; ++s) can[s] = target[s];
    bool changed = true;
    while (changed) {
        changed = false;
        for (int s = 0; s < n; ++s) {
            if (can[s] || !stay[s] || target[s]) continue;
            for (auto& [t, p] : g.delta[s].at(profile[s]))
                if (p > 0.0 && can[t]) {
                    can[s] = 1;
                    changed = true;
                    break;
                }
        }
    }
    std::vector<int> sys;  // states with 0 < value < solved jointly
    std::vector<int> pos(n, -1);
    for (int s = 0; s < n; ++s)
        if (can[s] && !target[s]) {
            pos[s] = static_cast<int>(sys.size());
            sys.push_back(s);
        }
    std::vector<double> values(n, 0.0);
    for (int s = 0; s < n; ++s) values[s] = target[s] ? 1.0 : 0.0;
    if (sys.empty()) return values;
    const int m = static_cast<int>(sys.size());
    std::vector<std::vector<double>> a(m, std::vector<double>(m, 0.0));
    std::vector<double> b(m, 0.0);
    for (int i = 0; i < m; ++i) {
        int s = sys[i];
        a[i][i] = 1.0;
        for (auto& [t, p] : g.delta[s].at(profile[s])) {
            if (target[t])
                b[i] += p;
            else if (pos[t] >= 0)
                a[i][pos[t]] -= p;
        }
    }
    auto x = solve_linear(std::move(a), std::move(b));
    for (int i = 0; i < m; ++i) values[sys[i]] = x[i];
    return values;
}

// Exact expected reward until the target in the induced chain; infinity on
// states that can reach a region from which the target is unreachable.
inline std::vector<double> chain_reach_reward(const ExplicitTsg& g, const std::vector<int>& profile,
                                              const BitSet& target, const RewardStructure& rew) {
    const int n = static_cast<int>(g.num_states());
    BitSet can(n, 0);
    for (int s = 0; s < n; ++s) can[s] = target[s];
    bool changed = true;
    while (changed) {
        changed = false;
        for (int s = 0; s < n; ++s) {
            if (can[s]) continue;
            for (auto& [t, p] : g.delta[s].at(profile[s]))
                if (p > 0.0 && can[t]) {
                    can[s] = 1;
                    changed = true;
                    break;
                }
        }
    }
    // states that can reach a trap get infinite expected reward
    BitSet hits_trap(n, 0);
    for (int s = 0; s < n; ++s) hits_trap[s] = !can[s];
    changed = true;
    while (changed) {
        changed = false;
        for (int s = 0; s < n; ++s) {
            if (hits_trap[s] || target[s]) continue;
            for (auto& [t, p] : g.delta[s].at(profile[s]))
                if (p > 0.0 && hits_trap[t]) {
                    hits_trap[s] = 1;
                    changed = true;
                    break;
                }
        }
    }
    std::vector<double> values(n, 0.0);
    std::vector<int> sys, pos(n, -1);
    for (int s = 0; s < n; ++s) {
        if (target[s]) {
            values[s] = 0.0;
        } else if (hits_trap[s]) {
            values[s] = std::numeric_limits<double>::infinity();
        } else {
            pos[s] = static_cast<int>(sys.size());
            sys.push_back(s);
        }
    }
    if (sys.empty()) return values;
    const int m = static_cast<int>(sys.size());
    std::vector<std::vector<double>> a(m, std::vector<double>(m, 0.0));
    std::vector<double> b(m, 0.0);
    for (int i = 0; i < m; ++i) {
        int s = sys[i];
        a[i][i] = 1.0;
        b[i] = rew.state_rew(s) + rew.action_rew(s, profile[s]);
        for (auto& [t, p] : g.delta[s].at(profile[s]))
            if (pos[t] >= 0) a[i][pos[t]] -= p;
    }
    auto x = solve_linear(std::move(a), std::move(b));
    for (int i = 0; i < m; ++i) values[sys[i]] = x[i];
    return values;
}

// All deterministic memoryless assignments for the given states.
inline std::vector<std::vector<int>> enumerate_profiles(const ExplicitTsg& g, const std::vector<int>& states) {
    std::vector<std::vector<int>> result;
    std::vector<std::vector<int>> choices;
    std::size_t total = 1;
    for (int s : states) {
        std::vector<int> acts;
        for (const auto& [a, d] : g.delta[s]) acts.push_back(a);
        total *= acts.size();
        choices.push_back(std::move(acts));
    }
    if (total > 2000000) throw ModelError("profile enumeration cap exceeded");
    std::vector<std::size_t> idx(states.size(), 0);
    for (;;) {
        std::vector<int> profile;
        for (std::size_t i = 0; i < states.size(); ++i) profile.push_back(choices[i][idx[i]]);
        result.push_back(profile);
        std::size_t i = 0;
        while (i < states.size() && ++idx[i] == choices[i].size()) idx[i++] = 0;
        if (i == states.size()) break;
    }
    return result;
}

struct UnboundedSpec {
    bool is_reward = false;
    BitSet target;
    BitSet stay;  // probability objectives
    const RewardStructure* rew = nullptr;
};

// max-min over deterministic memoryless profiles, exact chain solves
inline std::vector<double> brute_force_unbounded(const ExplicitTsg& g, const Coalition& max_side,
                                                 const UnboundedSpec& spec) {
    const int n = static_cast<int>(g.num_states());
    std::vector<int> max_states, min_states;
    for (int s = 0; s < n; ++s)
        (max_side.contains(g.owner[s]) ? max_states : min_states).push_back(s);
    auto max_profiles = enumerate_profiles(g, max_states);
    auto min_profiles = enumerate_profiles(g, min_states);

    std::vector<double> best(n, -std::numeric_limits<double>::infinity());
    for (const auto& mp : max_profiles) {
        std::vector<double> worst(n, std::numeric_limits<double>::infinity());
        for (const auto& np : min_profiles) {
            std::vector<int> profile(n, -1);
            for (std::size_t i = 0; i < max_states.size(); ++i) profile[max_states[i]] = mp[i];
            for (std::size_t i = 0; i < min_states.size(); ++i) profile[min_states[i]] = np[i];
            std::vector<double> v = spec.is_reward
                                        ? chain_reach_reward(g, profile, spec.target, *spec.rew)
                                        : chain_reach_prob(g, profile, spec.target, spec.stay);
            for (int s = 0; s < n; ++s) worst[s] = std::min(worst[s], v[s]);
        }
        for (int s = 0; s < n; ++s) best[s] = std::max(best[s], worst[s]);
    }
    return best;
}

struct BoundedSpec {
    enum class Kind { BoundedUntil, Next, Cumulative, Instant } kind;
    BitSet target, stay;
    int k = 0;
    const RewardStructure* rew = nullptr;
};

// direct expectimax recursion on the step-bounded semantics
inline double bf_bounded_rec(const ExplicitTsg& g, const Coalition& max_side, const BoundedSpec& spec,
                             int s, int steps, std::map<std::pair<int, int>, double>& memo) {
    using Kind = BoundedSpec::Kind;
    if (spec.kind == Kind::BoundedUntil) {
        if (spec.target[s]) return 1.0;
        if (!spec.stay[s] || steps == 0) return 0.0;
    } else if (spec.kind == Kind::Instant) {
        if (steps == 0) return spec.rew->state_rew(s);
    } else if (spec.kind == Kind::Cumulative) {
        if (steps == 0) return 0.0;
    } else if (spec.kind == Kind::Next) {
        if (steps == 0) return spec.target[s] ? 1.0 : 0.0;
    }
    auto key = std::make_pair(s, steps);
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    bool maximize = max_side.contains(g.owner[s]);
    double best = maximize ? -std::numeric_limits<double>::infinity()
                           : std::numeric_limits<double>::infinity();
    for (const auto& [a, dist] : g.delta[s]) {
        double v = spec.kind == Kind::Cumulative ? spec.rew->action_rew(s, a) : 0.0;
        for (auto& [t, p] : dist) v += p * bf_bounded_rec(g, max_side, spec, t, steps - 1, memo);
        if (spec.kind == Kind::Cumulative) v += spec.rew->state_rew(s);
        best = maximize ? std::max(best, v) : std::min(best, v);
    }
    memo[key] = best;
    return best;
}

inline std::vector<double> brute_force_bounded(const ExplicitTsg& g, const Coalition& max_side,
                                               const BoundedSpec& spec) {
    std::map<std::pair<int, int>, double> memo;
    std::vector<double> out(g.num_states(), 0.0);
    for (int s = 0; s < static_cast<int>(g.num_states()); ++s)
        out[s] = bf_bounded_rec(g, max_side, spec, s, spec.k, memo);
    return out;
}

// Worst improvement each coalition can realise by a unilateral memoryless
// deterministic deviation against the given profile, checked at every
// state. Under welfare equilibria coalitions maximise their objectives;
// under cost equilibria they minimise.
inline std::pair<double, double> check_best_response(const ExplicitTsg& g, const Coalition& c1,
                                                     const std::vector<int>& profile,
                                                     const SparseEngine::NashObjective& o1,
                                                     const SparseEngine::NashObjective& o2,
                                                     bool welfare = true) {
    const int n = static_cast<int>(g.num_states());
    auto objective_values = [&](const std::vector<int>& prof,
                                const SparseEngine::NashObjective& o) -> std::vector<double> {
        if (o.is_reward) return chain_reach_reward(g, prof, o.goal, *o.rew);
        BitSet stay(n, 1);
        for (int s = 0; s < n; ++s)
            if (o.inf[s]) stay[s] = 0;
        return chain_reach_prob(g, prof, o.goal, stay);
    };
    std::vector<double> base1 = objective_values(profile, o1);
    std::vector<double> base2 = objective_values(profile, o2);

    double gain1 = 0.0, gain2 = 0.0;
    for (int side = 0; side < 2; ++side) {
        std::vector<int> own_states;
        for (int s = 0; s < n; ++s)
            if (c1.contains(g.owner[s]) == (side == 0)) own_states.push_back(s);
        const auto& base = side == 0 ? base1 : base2;
        const auto& obj = side == 0 ? o1 : o2;
        double& gain = side == 0 ? gain1 : gain2;
        for (const auto& dev : enumerate_profiles(g, own_states)) {
            std::vector<int> prof = profile;
            for (std::size_t i = 0; i < own_states.size(); ++i) prof[own_states[i]] = dev[i];
            std::vector<double> v = objective_values(prof, obj);
            for (int s = 0; s < n; ++s) {
                double better = welfare ? v[s] - base[s] : base[s] - v[s];
                if (std::isinf(base[s]) && std::isinf(v[s])) better = 0.0;
                gain = std::max(gain, better);
            }
        }
    }
    return {gain1, gain2};
}

}  // namespace oracle
}  // namespace tsg
