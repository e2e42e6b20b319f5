#pragma once

// Model construction: the enumerative build explores reachable variable
// valuations directly; the symbolic build composes per-command MTBDDs
// (guard x sum of prob x update-relation), synchronises labelled commands
// across modules by product, tags rows with the owning player's cube and
// restricts to the reachable set. Both produce the same game up to the
// canonical state order.

#include <map>
#include <set>
#include <string>
#include <vector>

#include "tsg/explicit_game.hpp"
#include "tsg/model_ast.hpp"
#include "tsg/symbolic_game.hpp"

namespace tsg {

// ---- constant and expression evaluation -------------------------------------

struct Value {
    enum class Type { Int, Double, Bool };
    Type type = Type::Int;
    long long i = 0;
    double d = 0.0;
    bool b = false;

    static Value of_int(long long v) { return Value{Type::Int, v, 0.0, false}; }
    static Value of_double(double v) { return Value{Type::Double, 0, v, false}; }
    static Value of_bool(bool v) { return Value{Type::Bool, 0, 0.0, v}; }

    bool is_numeric() const { return type != Type::Bool; }
    double num() const { return type == Type::Int ? static_cast<double>(i) : d; }
};

using ConstEnv = std::map<std::string, Value>;

[[noreturn]] inline void expr_fail(const Expr& e, const std::string& msg) {
    throw ModelError("model:" + std::to_string(e.line) + ":" + std::to_string(e.col) + ": " + msg);
}

// `vars` supplies current variable values for the enumerative build; null
// when evaluating constant expressions.
inline Value eval_expr(const Expr& e, const ConstEnv& consts,
                       const std::map<std::string, Value>* vars = nullptr) {
    auto numeric = [&](const Value& v) {
        if (!v.is_numeric()) expr_fail(e, "expected a numeric operand");
        return v;
    };
    switch (e.kind) {
        case Expr::Kind::IntLit: return Value::of_int(e.int_val);
        case Expr::Kind::DoubleLit: return Value::of_double(e.dbl_val);
        case Expr::Kind::BoolLit: return Value::of_bool(e.bool_val);
        case Expr::Kind::Ident: {
            if (vars) {
                auto it = vars->find(e.name);
                if (it != vars->end()) return it->second;
            }
            auto it = consts.find(e.name);
            if (it == consts.end()) expr_fail(e, "unknown identifier: " + e.name);
            return it->second;
        }
        case Expr::Kind::Not: {
            Value v = eval_expr(*e.lhs, consts, vars);
            if (v.type != Value::Type::Bool) expr_fail(e, "'!' expects a Boolean");
            return Value::of_bool(!v.b);
        }
        case Expr::Kind::Neg: {
            Value v = numeric(eval_expr(*e.lhs, consts, vars));
            if (v.type == Value::Type::Int) return Value::of_int(-v.i);
            return Value::of_double(-v.d);
        }
        case Expr::Kind::Min:
        case Expr::Kind::Max: {
            Value a = numeric(eval_expr(*e.lhs, consts, vars));
            Value b = numeric(eval_expr(*e.rhs, consts, vars));
            bool both_int = a.type == Value::Type::Int && b.type == Value::Type::Int;
            bool take_a = e.kind == Expr::Kind::Min ? a.num() <= b.num() : a.num() >= b.num();
            Value r = take_a ? a : b;
            if (!both_int && r.type == Value::Type::Int) r = Value::of_double(r.num());
            return r;
        }
        case Expr::Kind::Binary: {
            Value a = eval_expr(*e.lhs, consts, vars);
            Value b = eval_expr(*e.rhs, consts, vars);
            const std::string& op = e.op;
            if (op == "&" || op == "|") {
                if (a.type != Value::Type::Bool || b.type != Value::Type::Bool)
                    expr_fail(e, "'" + op + "' expects Boolean operands");
                return Value::of_bool(op == "&" ? (a.b && b.b) : (a.b || b.b));
            }
            if (op == "=" || op == "!=") {
                bool eq;
                if (a.type == Value::Type::Bool || b.type == Value::Type::Bool) {
                    if (a.type != Value::Type::Bool || b.type != Value::Type::Bool)
                        expr_fail(e, "cannot compare Boolean with number");
                    eq = a.b == b.b;
                } else {
                    eq = a.num() == b.num();
                }
                return Value::of_bool(op == "=" ? eq : !eq);
            }
            if (op == "<" || op == "<=" || op == ">" || op == ">=") {
                if (!a.is_numeric() || !b.is_numeric()) expr_fail(e, "'" + op + "' expects numbers");
                double x = a.num(), y = b.num();
                bool r = op == "<" ? x < y : op == "<=" ? x <= y : op == ">" ? x > y : x >= y;
                return Value::of_bool(r);
            }
            if (!a.is_numeric() || !b.is_numeric()) expr_fail(e, "'" + op + "' expects numbers");
            if (op == "/") return Value::of_double(b.num() == 0.0 ? 0.0 : a.num() / b.num());
            bool both_int = a.type == Value::Type::Int && b.type == Value::Type::Int;
            if (both_int) {
                long long r = op == "+" ? a.i + b.i : op == "-" ? a.i - b.i : a.i * b.i;
                return Value::of_int(r);
            }
            double r = op == "+" ? a.num() + b.num() : op == "-" ? a.num() - b.num() : a.num() * b.num();
            return Value::of_double(r);
        }
    }
    expr_fail(e, "unexpected expression");
}

// ---- resolution --------------------------------------------------------------

using Overrides = std::map<std::string, std::string>;

struct ResolvedModel {
    ModelAst ast;
    ConstEnv consts;

    struct Var {
        std::string name;
        bool is_bool = false;
        int low = 0, high = 1, init = 0;
        int module = 0;
    };
    std::vector<Var> vars;
    std::map<std::string, int> var_index;

    std::vector<std::string> players;

    struct ActionDef {
        std::string name;
        int owner = 0;
        bool labelled = false;
        // participating modules with their command indices
        std::vector<std::pair<int, std::vector<int>>> parts;
    };
    std::vector<ActionDef> actions;  // rank order (lexicographic by name)

    int action_rank(const std::string& name) const {
        for (std::size_t i = 0; i < actions.size(); ++i)
            if (actions[i].name == name) return static_cast<int>(i);
        throw ModelError("unknown action: " + name);
    }
};

inline std::string tau_name(const std::string& module, int line) {
    return "_tau_" + module + "_" + std::to_string(line);
}

inline ResolvedModel resolve_model(const ModelAst& ast, const Overrides& overrides) {
    ResolvedModel r;
    r.ast = ast;

    // constants, in declaration order, with command-line overrides
    for (const auto& c : ast.constants) {
        Value v;
        auto ov = overrides.find(c.name);
        if (ov != overrides.end()) {
            try {
                switch (c.type) {
                    case ConstDecl::Type::Int: v = Value::of_int(std::stoll(ov->second)); break;
                    case ConstDecl::Type::Double: v = Value::of_double(std::stod(ov->second)); break;
                    case ConstDecl::Type::Bool: v = Value::of_bool(ov->second == "true"); break;
                }
            } catch (...) {
                throw ModelError("bad override for constant " + c.name + ": " + ov->second);
            }
        } else if (c.value) {
            v = eval_expr(*c.value, r.consts);
            if (c.type == ConstDecl::Type::Int && v.type == Value::Type::Double)
                throw ModelError("constant " + c.name + ": expected an integer value");
            if (c.type == ConstDecl::Type::Double && v.type == Value::Type::Int)
                v = Value::of_double(v.num());
            if ((c.type == ConstDecl::Type::Bool) != (v.type == Value::Type::Bool))
                throw ModelError("constant " + c.name + ": type mismatch");
        } else {
            throw ModelError("constant " + c.name + " has no value; provide -c " + c.name + "=...");
        }
        r.consts[c.name] = v;
    }
    for (const auto& [name, val] : overrides)
        if (!r.consts.count(name)) throw ModelError("override for undeclared constant " + name);

    // variables
    for (std::size_t mi = 0; mi < ast.modules.size(); ++mi) {
        for (const auto& v : ast.modules[mi].vars) {
            ResolvedModel::Var var;
            var.name = v.name;
            var.module = static_cast<int>(mi);
            if (v.is_bool) {
                var.is_bool = true;
                var.low = 0;
                var.high = 1;
                Value init = eval_expr(*v.init, r.consts);
                if (init.type != Value::Type::Bool)
                    throw ModelError("variable " + v.name + ": init must be Boolean");
                var.init = init.b ? 1 : 0;
            } else {
                Value lo = eval_expr(*v.low, r.consts);
                Value hi = eval_expr(*v.high, r.consts);
                Value init = eval_expr(*v.init, r.consts);
                if (lo.type != Value::Type::Int || hi.type != Value::Type::Int ||
                    init.type != Value::Type::Int)
                    throw ModelError("variable " + v.name + ": bounds and init must be integers");
                var.low = static_cast<int>(lo.i);
                var.high = static_cast<int>(hi.i);
                var.init = static_cast<int>(init.i);
                if (var.low > var.high) throw ModelError("variable " + v.name + ": empty range");
                if (var.init < var.low || var.init > var.high)
                    throw ModelError("variable " + v.name + ": init outside its range");
            }
            r.var_index[var.name] = static_cast<int>(r.vars.size());
            r.vars.push_back(var);
        }
    }

    // ownership claims
    std::map<std::string, int> module_owner, action_claim;
    std::map<std::string, int> module_index;
    for (std::size_t mi = 0; mi < ast.modules.size(); ++mi)
        module_index[ast.modules[mi].name] = static_cast<int>(mi);
    for (std::size_t pi = 0; pi < ast.players.size(); ++pi) {
        r.players.push_back(ast.players[pi].name);
        for (const auto& m : ast.players[pi].modules) {
            if (!module_index.count(m))
                throw ModelError("player " + ast.players[pi].name + " claims unknown module " + m);
            module_owner[m] = static_cast<int>(pi);
        }
        for (const auto& a : ast.players[pi].actions) action_claim[a] = static_cast<int>(pi);
    }
    if (r.players.empty()) throw ModelError("no players declared");

    // update targets must be module-local, assigned at most once per update
    for (const auto& m : ast.modules)
        for (const auto& c : m.commands)
            for (const auto& br : c.branches) {
                std::set<std::string> seen;
                for (const auto& [var, ex] : br.update.assigns) {
                    auto it = r.var_index.find(var);
                    if (it == r.var_index.end())
                        throw ModelError("module " + m.name + ": update of unknown variable " + var);
                    if (r.vars[it->second].module != module_index[m.name])
                        throw ModelError("module " + m.name + ": update of foreign variable " + var);
                    if (!seen.insert(var).second)
                        throw ModelError("module " + m.name + ": variable " + var +
                                         " assigned twice in one update");
                }
            }

    // actions: labelled ones synchronise over their declaring modules,
    // unlabelled commands act alone under synthesised names
    std::map<std::string, ResolvedModel::ActionDef> defs;
    for (std::size_t mi = 0; mi < ast.modules.size(); ++mi) {
        const auto& m = ast.modules[mi];
        for (std::size_t ci = 0; ci < m.commands.size(); ++ci) {
            const auto& c = m.commands[ci];
            if (c.action.empty()) {
                std::string name = tau_name(m.name, c.line);
                if (defs.count(name))
                    throw ModelError("module " + m.name + ": two unlabelled commands on line " +
                                     std::to_string(c.line));
                ResolvedModel::ActionDef def;
                def.name = name;
                def.labelled = false;
                auto owner = module_owner.find(m.name);
                if (owner == module_owner.end())
                    throw ModelError("module " + m.name +
                                     " has unlabelled commands but is not claimed by any player");
                def.owner = owner->second;
                def.parts.push_back({static_cast<int>(mi), {static_cast<int>(ci)}});
                defs[name] = std::move(def);
            } else {
                auto& def = defs[c.action];
                def.name = c.action;
                def.labelled = true;
                if (def.parts.empty() || def.parts.back().first != static_cast<int>(mi))
                    def.parts.push_back({static_cast<int>(mi), {}});
                def.parts.back().second.push_back(static_cast<int>(ci));
            }
        }
    }
    for (auto& [name, def] : defs) {
        if (!def.labelled) continue;
        auto claim = action_claim.find(name);
        if (claim != action_claim.end()) {
            def.owner = claim->second;
            continue;
        }
        // fall back to the unique owner of the participating modules
        std::set<int> owners;
        for (auto& [mi, cmds] : def.parts) {
            auto it = module_owner.find(ast.modules[mi].name);
            if (it != module_owner.end()) owners.insert(it->second);
        }
        if (owners.size() != 1)
            throw ModelError("action " + name +
                             " is not claimed by a player and has no unique module owner");
        def.owner = *owners.begin();
    }
    for (auto& [name, def] : defs) r.actions.push_back(def);
    std::sort(r.actions.begin(), r.actions.end(),
              [](const auto& a, const auto& b) { return a.name < b.name; });
    return r;
}

// ---- enumerative construction --------------------------------------------------

inline constexpr std::size_t kExplicitStateCap = 2000000;

inline ExplicitTsg build_explicit(const ModelAst& ast, const Overrides& overrides = {}) {
    ResolvedModel rm = resolve_model(ast, overrides);
    const auto& consts = rm.consts;

    auto var_env = [&](const std::vector<int>& valuation) {
        std::map<std::string, Value> env;
        for (std::size_t i = 0; i < rm.vars.size(); ++i) {
            const auto& v = rm.vars[i];
            env[v.name] = v.is_bool ? Value::of_bool(valuation[i] != 0)
                                    : Value::of_int(valuation[i]);
        }
        return env;
    };

    ExplicitTsg g;
    g.players = rm.players;
    for (const auto& v : rm.vars) g.var_names.push_back(v.name);
    for (const auto& a : rm.actions) g.actions.push_back(a.name);

    std::vector<int> init_val;
    for (const auto& v : rm.vars) init_val.push_back(v.init);

    std::map<std::vector<int>, int> index_of;
    std::vector<std::vector<int>> todo{init_val};
    index_of[init_val] = 0;
    g.states.push_back(init_val);
    g.owner.push_back(-1);
    g.delta.emplace_back();
    g.init = 0;

    auto state_name = [&](const std::vector<int>& val) {
        std::ostringstream os;
        for (std::size_t i = 0; i < rm.vars.size(); ++i) {
            if (i) os << ",";
            os << rm.vars[i].name << "=" << val[i];
        }
        return os.str();
    };

    while (!todo.empty()) {
        std::vector<int> val = todo.back();
        todo.pop_back();
        int s = index_of.at(val);
        auto env = var_env(val);

        for (std::size_t rank = 0; rank < rm.actions.size(); ++rank) {
            const auto& def = rm.actions[rank];
            // one enabled command per participating module, or the action blocks
            std::vector<const Command*> chosen;
            bool blocked = false;
            for (auto& [mi, cmds] : def.parts) {
                const Command* pick = nullptr;
                for (int ci : cmds) {
                    const Command& c = rm.ast.modules[mi].commands[ci];
                    Value gv = eval_expr(*c.guard, consts, &env);
                    if (gv.type != Value::Type::Bool)
                        throw ModelError("module " + rm.ast.modules[mi].name + " line " +
                                         std::to_string(c.line) + ": guard is not Boolean");
                    if (!gv.b) continue;
                    if (pick)
                        throw ModelError("action " + def.name + ": two commands enabled in state " +
                                         state_name(val));
                    pick = &c;
                }
                if (!pick) {
                    blocked = true;
                    break;
                }
                chosen.push_back(pick);
            }
            if (blocked) continue;

            // joint distribution: product over the chosen commands' branches
            struct Joint {
                double prob;
                std::vector<int> target;
            };
            std::vector<Joint> joints{{1.0, val}};
            for (const Command* c : chosen) {
                std::vector<Joint> next;
                for (const auto& br : c->branches) {
                    double p = 1.0;
                    if (br.prob) {
                        Value pv = eval_expr(*br.prob, consts, &env);
                        if (!pv.is_numeric())
                            throw ModelError("line " + std::to_string(c->line) +
                                             ": probability is not numeric");
                        p = pv.num();
                    }
                    if (p < -kDistTolerance || p > 1.0 + kDistTolerance)
                        throw ModelError("line " + std::to_string(c->line) + ": probability " +
                                         std::to_string(p) + " outside [0,1] in state " + state_name(val));
                    if (p <= 0.0) continue;
                    for (const auto& j : joints) {
                        Joint nj = j;
                        nj.prob *= p;
                        for (const auto& [vn, ex] : br.update.assigns) {
                            int vi = rm.var_index.at(vn);
                            Value nv = eval_expr(*ex, consts, &env);
                            int code;
                            if (rm.vars[vi].is_bool) {
                                if (nv.type != Value::Type::Bool)
                                    throw ModelError("line " + std::to_string(c->line) + ": " + vn +
                                                     "' expects a Boolean");
                                code = nv.b ? 1 : 0;
                            } else {
                                if (nv.type != Value::Type::Int)
                                    throw ModelError("line " + std::to_string(c->line) + ": " + vn +
                                                     "' expects an integer");
                                code = static_cast<int>(nv.i);
                            }
                            if (code < rm.vars[vi].low || code > rm.vars[vi].high)
                                throw ModelError("line " + std::to_string(c->line) + ": update sets " + vn +
                                                 "=" + std::to_string(code) + " outside its range in state " +
                                                 state_name(val));
                            nj.target[vi] = code;
                        }
                        next.push_back(std::move(nj));
                    }
                }
                joints = std::move(next);
            }

            std::map<std::vector<int>, double> dist;
            double sum = 0.0;
            for (const auto& j : joints) {
                dist[j.target] += j.prob;
                sum += j.prob;
            }
            if (std::fabs(sum - 1.0) > kDistTolerance)
                throw ModelError("action " + def.name + ": probabilities sum to " + std::to_string(sum) +
                                 " in state " + state_name(val));

            // ownership of the state
            if (g.owner[s] >= 0 && g.owner[s] != def.owner)
                throw ModelError("multiple players controlling actions in state " + state_name(val) +
                                 " (" + rm.players[g.owner[s]] + " and " + rm.players[def.owner] + ")");
            g.owner[s] = def.owner;

            Distribution d;
            for (auto& [tv, p] : dist) {
                auto it = index_of.find(tv);
                int t;
                if (it == index_of.end()) {
                    t = static_cast<int>(g.states.size());
                    if (g.states.size() >= kExplicitStateCap)
                        throw ModelError("state space exceeds the enumeration cap");
                    index_of[tv] = t;
                    g.states.push_back(tv);
                    g.owner.push_back(-1);
                    g.delta.emplace_back();
                    todo.push_back(tv);
                } else {
                    t = it->second;
                }
                d.emplace_back(t, p);
            }
            g.delta[s][static_cast<int>(rank)] = std::move(d);
        }
        if (g.delta[s].empty()) throw ModelError("deadlock in state " + state_name(val));
    }

    for (const auto& l : rm.ast.labels) {
        std::set<int>& set = g.labels[l.name];
        for (std::size_t s = 0; s < g.states.size(); ++s) {
            auto env = var_env(g.states[s]);
            Value v = eval_expr(*l.expr, consts, &env);
            if (v.type != Value::Type::Bool) throw ModelError("label " + l.name + " is not Boolean");
            if (v.b) set.insert(static_cast<int>(s));
        }
    }

    for (const auto& rb : rm.ast.rewards) {
        RewardStructure rs;
        rs.state_reward.assign(g.states.size(), 0.0);
        for (std::size_t s = 0; s < g.states.size(); ++s) {
            auto env = var_env(g.states[s]);
            for (const auto& item : rb.items) {
                Value gv = eval_expr(*item.guard, consts, &env);
                if (gv.type != Value::Type::Bool)
                    throw ModelError("rewards " + rb.name + ": guard is not Boolean");
                if (!gv.b) continue;
                Value vv = eval_expr(*item.value, consts, &env);
                if (!vv.is_numeric() || vv.num() < 0.0)
                    throw ModelError("rewards " + rb.name + ": value must be a nonnegative number");
                if (item.is_action) {
                    for (const auto& [a, distr] : g.delta[s]) {
                        const auto& def = rm.actions[a];
                        bool matches = item.action.empty() ? !def.labelled : def.name == item.action;
                        if (matches) rs.action_reward[{static_cast<int>(s), a}] += vv.num();
                    }
                } else {
                    rs.state_reward[s] += vv.num();
                }
            }
        }
        g.rewards[rb.name] = std::move(rs);
    }

    g.canonicalize();
    auto diags = g.validate();
    if (!diags.empty()) throw ModelError("model builds an invalid game: " + diags.front());
    return g;
}

// ---- compositional symbolic construction ----------------------------------------

class SymbolicBuilder {
public:
    SymbolicBuilder(const ModelAst& ast, const Overrides& overrides, dd::ManagerConfig cfg = {})
        : rm_(resolve_model(ast, overrides)), cfg_(cfg) {}

    SymbolicTsg build() {
        SymbolicTsg sym;
        sym.players = rm_.players;
        for (const auto& a : rm_.actions) sym.actions.push_back(a.name);
        int k = 0;
        for (const auto& v : rm_.vars) {
            StateVarInfo sv{v.name, v.low, v.high, bits_for_range(v.high - v.low + 1)};
            k += sv.bits;
            sym.state_vars.push_back(sv);
        }
        int l = bits_for_range(static_cast<std::int64_t>(rm_.actions.size()));
        int m = static_cast<int>(rm_.players.size());
        if (k > 28 || l > 28) throw ModelError("variable capacity exceeded");
        sym.init_layout(m, l, k, cfg_);
        sym_ = &sym;
        mgr_ = sym.mgr.get();
        var_bit_base_.clear();
        int pos = 0;
        for (const auto& sv : sym.state_vars) {
            var_bit_base_.push_back(pos);
            pos += sv.bits;
        }
        for (int p = 0; p < m; ++p)
            sym.player_cubes.push_back(mgr_->cube(sym.player_valuation(p), sym.wvars));

        // per-action relations, assembled compositionally
        dd::Mtbdd trans = mgr_->const_(0.0);
        for (std::size_t rank = 0; rank < rm_.actions.size(); ++rank) {
            const auto& def = rm_.actions[rank];
            dd::Mtbdd joint = mgr_->const_(1.0);
            std::set<int> participating;
            for (auto& [mi, cmds] : def.parts) {
                participating.insert(mi);
                dd::Mtbdd part = mgr_->const_(0.0);
                for (int ci : cmds)
                    part = mgr_->apply(dd::BinOp::Plus, part,
                                       command_relation(mi, rm_.ast.modules[mi].commands[ci]));
                joint = mgr_->apply(dd::BinOp::Times, joint, part);
            }
            for (std::size_t mi = 0; mi < rm_.ast.modules.size(); ++mi)
                if (!participating.count(static_cast<int>(mi)))
                    joint = mgr_->apply(dd::BinOp::Times, joint, module_identity(static_cast<int>(mi)));
            dd::Bdd row_tag = mgr_->and_(sym.player_cubes[def.owner],
                                         sym.action_cube(static_cast<int>(rank)));
            trans = mgr_->apply(dd::BinOp::Plus, trans, mgr_->apply(dd::BinOp::Times, joint, row_tag));
        }
        sym.trans = trans;

        std::vector<int> init_val;
        for (const auto& v : rm_.vars) init_val.push_back(v.init);
        sym.init = sym.state_cube(init_val, sym.xvars);
        sym.init_state = init_val;
        sym.finalize();
        validate(sym);

        for (const auto& lbl : rm_.ast.labels) {
            auto sv = sym_expr(*lbl.expr);
            if (!sv.is_bool) throw ModelError("label " + lbl.name + " is not Boolean");
            sym.labels[lbl.name] = mgr_->as_bdd(sv.m);
        }
        for (const auto& rb : rm_.ast.rewards) {
            dd::Mtbdd srew = mgr_->const_(0.0);
            dd::Mtbdd arew = mgr_->const_(0.0);
            for (const auto& item : rb.items) {
                auto gv = sym_expr(*item.guard);
                if (!gv.is_bool) throw ModelError("rewards " + rb.name + ": guard is not Boolean");
                auto vv = sym_expr(*item.value);
                if (vv.is_bool) throw ModelError("rewards " + rb.name + ": value must be numeric");
                dd::Mtbdd masked = mgr_->apply(dd::BinOp::Times, gv.m, vv.m);
                if (!item.is_action) {
                    srew = mgr_->apply(dd::BinOp::Plus, srew, masked);
                    continue;
                }
                for (std::size_t rank = 0; rank < rm_.actions.size(); ++rank) {
                    const auto& def = rm_.actions[rank];
                    bool matches = item.action.empty() ? !def.labelled : def.name == item.action;
                    if (!matches) continue;
                    dd::Bdd row_tag = mgr_->and_(sym.player_cubes[def.owner],
                                                 sym.action_cube(static_cast<int>(rank)));
                    arew = mgr_->apply(dd::BinOp::Plus, arew,
                                       mgr_->apply(dd::BinOp::Times, masked, row_tag));
                }
            }
            if (mgr_->min_terminal(srew) < 0.0 || mgr_->min_terminal(arew) < 0.0)
                throw ModelError("rewards " + rb.name + ": negative reward value");
            arew = mgr_->apply(dd::BinOp::Times, arew, sym.enabled);
            srew = mgr_->apply(dd::BinOp::Times, srew, sym.reach);
            sym.rewards[rb.name] = SymbolicTsg::RewardDds{srew, arew};
        }
        return sym;
    }

private:
    struct SymValue {
        bool is_bool = false;
        bool is_int = false;
        dd::Mtbdd m;
    };

    // value diagram of a model variable over the given bit block
    dd::Mtbdd var_value(int vi, const std::vector<dd::VarId>& block) const {
        const auto& sv = sym_->state_vars[vi];
        dd::Mtbdd acc = mgr_->const_(static_cast<double>(sv.low));
        for (int b = 0; b < sv.bits; ++b) {
            double weight = static_cast<double>(1 << (sv.bits - 1 - b));
            dd::Mtbdd bit = mgr_->var(block[var_bit_base_[vi] + b]);
            acc = mgr_->apply(dd::BinOp::Plus, acc,
                              mgr_->apply(dd::BinOp::Times, bit, mgr_->const_(weight)));
        }
        return acc;
    }

    SymValue sym_expr(const Expr& e) const {
        switch (e.kind) {
            case Expr::Kind::IntLit:
                return {false, true, mgr_->const_(static_cast<double>(e.int_val))};
            case Expr::Kind::DoubleLit: return {false, false, mgr_->const_(e.dbl_val)};
            case Expr::Kind::BoolLit: return {true, false, mgr_->const_(e.bool_val ? 1.0 : 0.0)};
            case Expr::Kind::Ident: {
                auto vit = rm_.var_index.find(e.name);
                if (vit != rm_.var_index.end()) {
                    bool is_bool = rm_.vars[vit->second].is_bool;
                    return {is_bool, !is_bool, var_value(vit->second, sym_->xvars)};
                }
                auto cit = rm_.consts.find(e.name);
                if (cit == rm_.consts.end()) expr_fail(e, "unknown identifier: " + e.name);
                const Value& v = cit->second;
                if (v.type == Value::Type::Bool) return {true, false, mgr_->const_(v.b ? 1.0 : 0.0)};
                return {false, v.type == Value::Type::Int, mgr_->const_(v.num())};
            }
            case Expr::Kind::Not: {
                SymValue v = sym_expr(*e.lhs);
                if (!v.is_bool) expr_fail(e, "'!' expects a Boolean");
                return {true, false, mgr_->not_(mgr_->as_bdd(v.m))};
            }
            case Expr::Kind::Neg: {
                SymValue v = sym_expr(*e.lhs);
                if (v.is_bool) expr_fail(e, "'-' expects a number");
                return {false, v.is_int, mgr_->apply(dd::BinOp::Minus, mgr_->const_(0.0), v.m)};
            }
            case Expr::Kind::Min:
            case Expr::Kind::Max: {
                SymValue a = sym_expr(*e.lhs), b = sym_expr(*e.rhs);
                if (a.is_bool || b.is_bool) expr_fail(e, "min/max expect numbers");
                return {false, a.is_int && b.is_int,
                        mgr_->apply(e.kind == Expr::Kind::Min ? dd::BinOp::Min : dd::BinOp::Max, a.m, b.m)};
            }
            case Expr::Kind::Binary: {
                SymValue a = sym_expr(*e.lhs), b = sym_expr(*e.rhs);
                const std::string& op = e.op;
                if (op == "&" || op == "|") {
                    if (!a.is_bool || !b.is_bool) expr_fail(e, "'" + op + "' expects Booleans");
                    dd::Bdd ba = mgr_->as_bdd(a.m), bb = mgr_->as_bdd(b.m);
                    return {true, false, op == "&" ? mgr_->and_(ba, bb) : mgr_->or_(ba, bb)};
                }
                if (op == "=" || op == "!=") {
                    if (a.is_bool != b.is_bool) expr_fail(e, "cannot compare Boolean with number");
                    dd::Mtbdd eq = mgr_->apply(dd::BinOp::Equal, a.m, b.m);
                    if (op == "!=") eq = mgr_->apply(dd::BinOp::Minus, mgr_->const_(1.0), eq);
                    return {true, false, eq};
                }
                if (op == "<" || op == "<=" || op == ">" || op == ">=") {
                    if (a.is_bool || b.is_bool) expr_fail(e, "'" + op + "' expects numbers");
                    dd::Mtbdd r;
                    if (op == ">") r = mgr_->apply(dd::BinOp::Greater, a.m, b.m);
                    else if (op == ">=") r = mgr_->apply(dd::BinOp::GreaterEq, a.m, b.m);
                    else if (op == "<") r = mgr_->apply(dd::BinOp::Greater, b.m, a.m);
                    else r = mgr_->apply(dd::BinOp::GreaterEq, b.m, a.m);
                    return {true, false, r};
                }
                if (a.is_bool || b.is_bool) expr_fail(e, "'" + op + "' expects numbers");
                if (op == "/") return {false, false, mgr_->apply(dd::BinOp::Divide, a.m, b.m)};
                dd::BinOp bop = op == "+" ? dd::BinOp::Plus : op == "-" ? dd::BinOp::Minus : dd::BinOp::Times;
                return {false, a.is_int && b.is_int, mgr_->apply(bop, a.m, b.m)};
            }
        }
        expr_fail(e, "unexpected expression");
    }

    // relation "v' = v" over the variable's row/column bits
    dd::Mtbdd identity_relation(int vi) const {
        return mgr_->apply(dd::BinOp::Equal, var_value(vi, sym_->yvars), var_value(vi, sym_->xvars));
    }

    // relation "v' = E(x)", constrained to the variable's declared range
    dd::Mtbdd assign_relation(int vi, const Expr& e) const {
        SymValue val = sym_expr(e);
        const auto& v = rm_.vars[vi];
        if (v.is_bool && !val.is_bool)
            expr_fail(e, v.name + "' expects a Boolean");
        if (!v.is_bool && (val.is_bool || !val.is_int))
            expr_fail(e, v.name + "' expects an integer");
        dd::Mtbdd yval = var_value(vi, sym_->yvars);
        dd::Mtbdd eq = mgr_->apply(dd::BinOp::Equal, yval, val.m);
        dd::Mtbdd in_range =
            mgr_->apply(dd::BinOp::GreaterEq, mgr_->const_(static_cast<double>(v.high)), yval);
        return mgr_->apply(dd::BinOp::Times, eq, in_range);
    }

    dd::Mtbdd module_identity(int mi) const {
        dd::Mtbdd rel = mgr_->const_(1.0);
        for (std::size_t vi = 0; vi < rm_.vars.size(); ++vi)
            if (rm_.vars[vi].module == mi)
                rel = mgr_->apply(dd::BinOp::Times, rel, identity_relation(static_cast<int>(vi)));
        return rel;
    }

    dd::Mtbdd command_relation(int mi, const Command& c) const {
        auto gv = sym_expr(*c.guard);
        if (!gv.is_bool)
            throw ModelError("module " + rm_.ast.modules[mi].name + " line " + std::to_string(c.line) +
                             ": guard is not Boolean");
        dd::Mtbdd sum = mgr_->const_(0.0);
        for (const auto& br : c.branches) {
            dd::Mtbdd p = mgr_->const_(1.0);
            if (br.prob) {
                SymValue pv = sym_expr(*br.prob);
                if (pv.is_bool)
                    throw ModelError("line " + std::to_string(c.line) + ": probability is not numeric");
                p = pv.m;
            }
            dd::Mtbdd rel = mgr_->const_(1.0);
            std::set<int> assigned;
            for (const auto& [vn, ex] : br.update.assigns) {
                int vi = rm_.var_index.at(vn);
                assigned.insert(vi);
                rel = mgr_->apply(dd::BinOp::Times, rel, assign_relation(vi, *ex));
            }
            for (std::size_t vi = 0; vi < rm_.vars.size(); ++vi)
                if (rm_.vars[vi].module == mi && !assigned.count(static_cast<int>(vi)))
                    rel = mgr_->apply(dd::BinOp::Times, rel, identity_relation(static_cast<int>(vi)));
            sum = mgr_->apply(dd::BinOp::Plus, sum, mgr_->apply(dd::BinOp::Times, p, rel));
        }
        return mgr_->apply(dd::BinOp::Times, gv.m, sum);
    }

    void validate(SymbolicTsg& sym) const {
        if (mgr_->min_terminal(sym.trans) < -kDistTolerance)
            throw ModelError("negative transition probability (check probability expressions)");
        // deadlock: a reachable state with no enabled row
        dd::Bdd some = mgr_->as_bdd(mgr_->abstract_(dd::AbstractOp::Or, sym.wz_vars(), sym.enabled));
        dd::Bdd dead = mgr_->and_(sym.reach, mgr_->not_(some));
        if (dead != mgr_->false_()) throw ModelError("deadlock in state " + witness_name(sym, dead));
        // ownership: the single-MTBDD encoding makes control conflicts visible
        for (std::size_t p = 0; p < sym.players.size(); ++p)
            for (std::size_t q = p + 1; q < sym.players.size(); ++q) {
                dd::Bdd both = mgr_->and_(sym.owned[p], sym.owned[q]);
                if (both != mgr_->false_())
                    throw ModelError("multiple players controlling actions in state " +
                                     witness_name(sym, both) + " (" + sym.players[p] + " and " +
                                     sym.players[q] + ")");
            }
        // row sums over enabled reachable rows
        dd::Mtbdd sums = mgr_->abstract_(dd::AbstractOp::Plus, sym.yvars, sym.trans);
        dd::Mtbdd on_enabled = mgr_->apply(dd::BinOp::Times, sums, sym.enabled);
        if (mgr_->sup_norm(on_enabled, sym.enabled, false) > kDistTolerance)
            throw ModelError(
                "transition probabilities do not sum to 1 on some enabled row "
                "(overlapping guards or an out-of-range update)");
    }

    std::string witness_name(const SymbolicTsg& sym, const dd::Bdd& set) const {
        auto paths = mgr_->enumerate_paths(set);
        if (paths.empty()) return "?";
        dd::Valuation v = paths.front().first;
        for (dd::VarId x : sym.xvars)
            if (!v.is_set(x)) v.set(x, false);
        auto vals = sym.decode_state(v);
        std::ostringstream os;
        for (std::size_t i = 0; i < vals.size(); ++i) {
            if (i) os << ",";
            os << sym.state_vars[i].name << "=" << vals[i];
        }
        return os.str();
    }

    ResolvedModel rm_;
    dd::ManagerConfig cfg_;
    SymbolicTsg* sym_ = nullptr;
    dd::Manager* mgr_ = nullptr;
    std::vector<int> var_bit_base_;
};

inline SymbolicTsg build_symbolic(const ModelAst& ast, const Overrides& overrides = {},
                                  dd::ManagerConfig cfg = {}) {
    return SymbolicBuilder(ast, overrides, cfg).build();
}

inline ModelAst parse_model_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ModelError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_model(ss.str());
}

// Each argument may carry several comma-separated NAME=value pairs.
inline Overrides parse_overrides(const std::vector<std::string>& args) {
    Overrides o;
    for (const auto& arg : args) {
        std::istringstream ss(arg);
        std::string p;
        while (std::getline(ss, p, ',')) {
            if (p.empty()) continue;
            auto eq = p.find('=');
            if (eq == std::string::npos) throw ModelError("bad constant override (want NAME=value): " + p);
            o[p.substr(0, eq)] = p.substr(eq + 1);
        }
    }
    return o;
}

}  // namespace tsg
