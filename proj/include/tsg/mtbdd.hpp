#pragma once

// Reduced ordered BDD/MTBDD kernel with terminal values in double,
// modeled loosely after CUDD-style managers: a unique table for canonicity,
// an operation cache for memoisation, and mark-and-sweep collection from
// registered roots. One manager owns one variable order; handles must not
// cross managers.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace tsg::dd {

using VarId = std::uint32_t;

struct DdError : std::runtime_error {
    explicit DdError(const std::string& msg) : std::runtime_error(msg) {}
};

enum class BinOp : std::uint8_t {
    Plus,
    Minus,
    Times,
    Divide,
    Min,
    Max,
    Greater,    // a > b ? 1 : 0
    GreaterEq,  // a >= b ? 1 : 0
    Equal,      // a == b ? 1 : 0
    ApproxEq,   // difference below tolerance ? 1 : 0 (see sup_norm)
    AbsDiff,    // |a - b|, infinities of equal value give 0
    RelDiff,    // |a - b| / max(|b|, kRelFloor)
};

enum class AbstractOp : std::uint8_t { Plus, Min, Max, Or };

// Relative differences use a floored denominator so that value 0 does not
// divide by zero; 1e-12 is far below any tolerance used by the solvers.
inline constexpr double kRelFloor = 1e-12;

// Partial assignment of Boolean variables.
class Valuation {
public:
    Valuation() = default;
    explicit Valuation(std::size_t nvars) : bits_(nvars, -1) {}

    void set(VarId v, bool value) {
        if (v >= bits_.size()) bits_.resize(v + 1, -1);
        bits_[v] = value ? 1 : 0;
    }
    bool is_set(VarId v) const { return v < bits_.size() && bits_[v] >= 0; }
    bool value(VarId v) const {
        if (!is_set(v)) throw DdError("valuation: variable " + std::to_string(v) + " not assigned");
        return bits_[v] == 1;
    }
    std::size_t assigned_count() const {
        std::size_t n = 0;
        for (auto b : bits_) n += (b >= 0);
        return n;
    }

private:
    std::vector<std::int8_t> bits_;
};

class Manager;

// Handle to a diagram node; keeps the node alive via the manager's root set.
class Mtbdd {
public:
    Mtbdd() = default;
    Mtbdd(const Mtbdd& other);
    Mtbdd(Mtbdd&& other) noexcept;
    Mtbdd& operator=(const Mtbdd& other);
    Mtbdd& operator=(Mtbdd&& other) noexcept;
    ~Mtbdd();

    bool valid() const { return mgr_ != nullptr; }
    Manager* manager() const { return mgr_; }
    std::uint32_t index() const { return idx_; }

    bool operator==(const Mtbdd& other) const { return mgr_ == other.mgr_ && idx_ == other.idx_; }
    bool operator!=(const Mtbdd& other) const { return !(*this == other); }

private:
    friend class Manager;
    Mtbdd(Manager* mgr, std::uint32_t idx);

    Manager* mgr_ = nullptr;
    std::uint32_t idx_ = 0;
};

// An Mtbdd whose terminals are all 0 or 1. Construction goes through the
// manager, which validates the terminal set where required.
class Bdd : public Mtbdd {
public:
    Bdd() = default;

private:
    friend class Manager;
    explicit Bdd(Mtbdd m) : Mtbdd(std::move(m)) {}
};

struct ManagerConfig {
    std::size_t max_nodes = 1u << 26;       // hard capacity
    std::size_t gc_threshold = 1u << 20;    // collect when live nodes exceed this
    std::size_t cache_capacity = 1u << 22;  // op cache cleared when it grows past this
};

struct ManagerStats {
    std::uint64_t apply_calls = 0;
    std::uint64_t cache_hits = 0;
    std::uint64_t gc_runs = 0;
    std::size_t peak_nodes = 0;
};

class Manager {
public:
    explicit Manager(std::size_t num_vars, ManagerConfig cfg = {})
        : Manager(default_names(num_vars), cfg) {}

    explicit Manager(std::vector<std::string> var_names, ManagerConfig cfg = {})
        : cfg_(cfg), var_names_(std::move(var_names)) {
        nodes_.reserve(1024);
        zero_ = terminal(0.0);
        one_ = terminal(1.0);
    }

    Manager(const Manager&) = delete;
    Manager& operator=(const Manager&) = delete;

    std::size_t num_vars() const { return var_names_.size(); }
    const std::string& var_name(VarId v) const { return var_names_.at(v); }
    const ManagerStats& stats() const { return stats_; }

    // ---- constructors -------------------------------------------------

    Mtbdd const_(double c) {
        if (std::isnan(c)) throw DdError("const_: NaN terminal");
        return wrap(terminal(c));
    }

    Bdd true_() { return Bdd(wrap(one_)); }
    Bdd false_() { return Bdd(wrap(zero_)); }

    Bdd var(VarId v) {
        check_var(v);
        return Bdd(wrap(make_node(v, one_, zero_)));
    }

    Bdd nvar(VarId v) {
        check_var(v);
        return Bdd(wrap(make_node(v, zero_, one_)));
    }

    // BDD that is 1 exactly on the assignment `valn`, which must assign
    // precisely the variables in `vars`.
    Bdd cube(const Valuation& valn, const std::vector<VarId>& vars) {
        std::vector<VarId> sorted = sorted_unique(vars);
        if (valn.assigned_count() != sorted.size())
            throw DdError("cube: valuation must assign exactly the given variables");
        std::uint32_t r = one_;
        for (auto it = sorted.rbegin(); it != sorted.rend(); ++it) {
            check_var(*it);
            bool b = valn.value(*it);  // throws if unassigned
            r = b ? make_node(*it, r, zero_) : make_node(*it, zero_, r);
        }
        return Bdd(wrap(r));
    }

    // ---- core operations ----------------------------------------------

    Mtbdd apply(BinOp op, const Mtbdd& a, const Mtbdd& b) {
        check_same(a, b);
        maybe_gc();
        OpCtx ctx{op, 0.0, false};
        return wrap(apply_rec(ctx, a.index(), b.index()));
    }

    // Pointwise approximate equality producing a 0/1 diagram; the tolerance
    // follows the sup_norm convention, with the second operand as reference.
    Bdd apply_approx_eq(const Mtbdd& a, const Mtbdd& b, double eps, bool relative) {
        check_same(a, b);
        maybe_gc();
        OpCtx ctx{BinOp::ApproxEq, eps, relative};
        return Bdd(wrap(apply_rec(ctx, a.index(), b.index())));
    }

    Bdd and_(const Bdd& a, const Bdd& b) { return boolean(BinOp::Times, a, b); }
    Bdd or_(const Bdd& a, const Bdd& b) { return boolean(BinOp::Max, a, b); }

    Bdd not_(const Bdd& b) {
        require_boolean(b, "not_");
        maybe_gc();
        OpCtx ctx{BinOp::Minus, 0.0, false};
        return Bdd(wrap(apply_rec(ctx, one_, b.index())));
    }

    Mtbdd if_then_else(const Bdd& cond, const Mtbdd& then_m, const Mtbdd& else_m) {
        check_same(cond, then_m);
        check_same(cond, else_m);
        require_boolean(cond, "if_then_else");
        maybe_gc();
        return wrap(ite_rec(cond.index(), then_m.index(), else_m.index()));
    }

    Mtbdd abstract_(AbstractOp op, const std::vector<VarId>& vars, const Mtbdd& m) {
        check_mgr(m);
        maybe_gc();
        std::uint32_t cube = vars_cube(vars);
        return wrap(abstract_rec(op == AbstractOp::Or ? AbstractOp::Max : op, m.index(), cube));
    }

    // Matrix-vector product: abstract_(+, col_vars, m * rename(v, row->col)).
    // The result ranges over the non-column variables of m.
    Mtbdd mv_mult(const Mtbdd& m, const Mtbdd& v, const std::vector<VarId>& row_vars,
                  const std::vector<VarId>& col_vars) {
        check_same(m, v);
        if (row_vars.size() != col_vars.size()) throw DdError("mv_mult: row/column pairing mismatch");
        for (VarId c : col_vars)
            if (depends_on(v, c)) throw DdError("mv_mult: vector depends on column variable " + var_name(c));
        Mtbdd renamed = replace_vars(v, row_vars, col_vars);
        Mtbdd prod = apply(BinOp::Times, m, renamed);
        return abstract_(AbstractOp::Plus, col_vars, prod);
    }

    // Variable renaming. Renames that keep every node above its children
    // are realised by level-wise substitution; when targets move below
    // other variables in the order, the function is recomposed through a
    // matching relation instead.
    Mtbdd replace_vars(const Mtbdd& m, const std::vector<VarId>& from, const std::vector<VarId>& to) {
        check_mgr(m);
        if (from.size() != to.size()) throw DdError("replace_vars: from/to length mismatch");
        if (from.empty()) return m;
        std::unordered_map<VarId, VarId> map;
        for (std::size_t i = 0; i < from.size(); ++i) {
            check_var(from[i]);
            check_var(to[i]);
            if (!map.emplace(from[i], to[i]).second) throw DdError("replace_vars: duplicate source variable");
        }
        for (std::size_t i = 0; i + 1 < from.size(); ++i)
            if ((from[i] < from[i + 1]) != (to[i] < to[i + 1]))
                throw DdError("replace_vars: relative order of targets differs from sources");
        for (VarId t : to)
            if (depends_on(m, t) && !map.count(t)) throw DdError("replace_vars: target variable " + var_name(t) + " occurs in operand");
        maybe_gc();
        try {
            std::unordered_map<std::uint32_t, std::uint32_t> memo;
            return wrap(rename_rec(m.index(), map, memo));
        } catch (const DdError&) {
            // slow path: sum m over the source variables against from==to
            std::vector<VarId> sources;
            Mtbdd match = wrap(one_);
            for (std::size_t i = 0; i < from.size(); ++i) {
                if (!depends_on(m, from[i])) continue;
                sources.push_back(from[i]);
                OpCtx eq{BinOp::Equal, 0.0, false};
                Mtbdd pair = wrap(apply_rec(eq, var(from[i]).index(), var(to[i]).index()));
                OpCtx times{BinOp::Times, 0.0, false};
                match = wrap(apply_rec(times, match.index(), pair.index()));
            }
            OpCtx times{BinOp::Times, 0.0, false};
            Mtbdd prod = wrap(apply_rec(times, m.index(), match.index()));
            std::uint32_t cube = vars_cube(sources);
            return wrap(abstract_rec(AbstractOp::Plus, prod.index(), cube));
        }
    }

    // Maximum pointwise difference between two diagrams; with `relative`,
    // differences are scaled by the second operand (the reference vector).
    // Equal infinities compare as distance 0.
    double sup_norm(const Mtbdd& a, const Mtbdd& b, bool relative) {
        Mtbdd diff = apply(relative ? BinOp::RelDiff : BinOp::AbsDiff, a, b);
        return max_terminal(diff);
    }

    // ---- inspection ----------------------------------------------------

    double evaluate(const Mtbdd& m, const Valuation& valn) const {
        check_mgr(m);
        std::uint32_t n = m.index();
        while (!is_terminal(n)) {
            const Node& node = nodes_[n];
            n = valn.value(node.var) ? node.hi : node.lo;  // throws when under-specified
        }
        return nodes_[n].value;
    }

    std::size_t node_count(const Mtbdd& m) const {
        check_mgr(m);
        std::unordered_set<std::uint32_t> seen;
        count_rec(m.index(), seen);
        return seen.size();
    }

    std::size_t live_nodes() const { return nodes_.size() - free_.size(); }

    // All root-to-terminal paths with nonzero value, as partial valuations.
    std::vector<std::pair<Valuation, double>> enumerate_paths(const Mtbdd& m) const {
        check_mgr(m);
        std::vector<std::pair<Valuation, double>> out;
        Valuation path(num_vars());
        paths_rec(m.index(), path, out);
        return out;
    }

    double max_terminal(const Mtbdd& m) const {
        check_mgr(m);
        std::unordered_set<std::uint32_t> seen;
        double best = -std::numeric_limits<double>::infinity();
        minmax_rec(m.index(), seen, best, true);
        return best;
    }

    double min_terminal(const Mtbdd& m) const {
        check_mgr(m);
        std::unordered_set<std::uint32_t> seen;
        double best = std::numeric_limits<double>::infinity();
        minmax_rec(m.index(), seen, best, false);
        return best;
    }

    bool is_boolean(const Mtbdd& m) const {
        check_mgr(m);
        std::unordered_set<std::uint32_t> seen;
        return boolean_rec(m.index(), seen);
    }

    // Asserts a Bdd's invariant after external computation (e.g. apply on
    // comparison operators) and converts the handle.
    Bdd as_bdd(const Mtbdd& m) const {
        if (!is_boolean(m)) throw DdError("as_bdd: non-Boolean terminals");
        Bdd b;
        static_cast<Mtbdd&>(b) = m;
        return b;
    }

    std::vector<VarId> support(const Mtbdd& m) const {
        check_mgr(m);
        std::unordered_set<std::uint32_t> seen;
        std::unordered_set<VarId> vars;
        support_rec(m.index(), seen, vars);
        std::vector<VarId> out(vars.begin(), vars.end());
        std::sort(out.begin(), out.end());
        return out;
    }

    bool depends_on(const Mtbdd& m, VarId v) const {
        auto s = support(m);
        return std::binary_search(s.begin(), s.end(), v);
    }

    // Number of assignments to `vars` on which the BDD is 1.
    double sat_count(const Bdd& b, const std::vector<VarId>& vars) const {
        check_mgr(b);
        std::vector<VarId> sorted = sorted_unique(vars);
        for (VarId v : support(b))
            if (!std::binary_search(sorted.begin(), sorted.end(), v))
                throw DdError("sat_count: diagram depends on variable outside the given set");
        std::unordered_map<std::uint64_t, double> memo;
        return satcount_rec(b.index(), 0, sorted, memo);
    }

    // Structural checker: ordered (variables strictly increase along every
    // path) and reduced (no redundant node, unique table consistent).
    void check_structure(const Mtbdd& m) const {
        check_mgr(m);
        std::unordered_set<std::uint32_t> seen;
        structure_rec(m.index(), seen);
    }

    // DOT rendering following the usual drawing convention: solid = then,
    // dashed = else, the zero terminal and its incoming edges omitted.
    std::string to_dot(const Mtbdd& m, const std::string& name = "dd") const {
        check_mgr(m);
        std::ostringstream os;
        os << "digraph " << name << " {\n";
        std::unordered_set<std::uint32_t> seen;
        dot_rec(m.index(), seen, os);
        if (seen.empty()) os << "  // empty diagram (constant zero)\n";
        os << "}\n";
        return os.str();
    }

    // ---- memory management ----------------------------------------------

    void gc() {
        std::unordered_set<std::uint32_t> marked;
        for (const auto& [idx, cnt] : roots_)
            if (cnt > 0) mark_rec(idx, marked);
        mark_rec(zero_, marked);
        mark_rec(one_, marked);
        for (std::uint32_t i = 0; i < nodes_.size(); ++i) {
            if (marked.count(i) || nodes_[i].dead) continue;
            Node& n = nodes_[i];
            if (is_terminal(i)) {
                terminals_.erase(key_bits(n.value));
            } else {
                unique_.erase(NodeKey{n.var, n.hi, n.lo});
            }
            n.dead = true;
            free_.push_back(i);
        }
        cache_.clear();
        boolean_checked_.clear();
        ++stats_.gc_runs;
    }

private:
    friend class Mtbdd;

    static constexpr std::uint32_t kTermVar = std::numeric_limits<std::uint32_t>::max();

    struct Node {
        std::uint32_t var;  // kTermVar for terminals
        std::uint32_t hi = 0;
        std::uint32_t lo = 0;
        double value = 0.0;  // terminal value
        bool dead = false;
    };

    struct NodeKey {
        std::uint32_t var, hi, lo;
        bool operator==(const NodeKey& o) const { return var == o.var && hi == o.hi && lo == o.lo; }
    };
    struct NodeKeyHash {
        std::size_t operator()(const NodeKey& k) const {
            std::uint64_t h = k.var;
            h = h * 0x9e3779b97f4a7c15ull + k.hi;
            h = h * 0x9e3779b97f4a7c15ull + k.lo;
            return static_cast<std::size_t>(h ^ (h >> 32));
        }
    };

    struct CacheKey {
        std::uint8_t op;
        std::uint32_t a, b;
        std::uint64_t aux;
        bool operator==(const CacheKey& o) const { return op == o.op && a == o.a && b == o.b && aux == o.aux; }
    };
    struct CacheKeyHash {
        std::size_t operator()(const CacheKey& k) const {
            std::uint64_t h = k.op;
            h = h * 0x9e3779b97f4a7c15ull + k.a;
            h = h * 0x9e3779b97f4a7c15ull + k.b;
            h = h * 0x9e3779b97f4a7c15ull + k.aux;
            return static_cast<std::size_t>(h ^ (h >> 32));
        }
    };

    struct OpCtx {
        BinOp op;
        double eps;
        bool relative;
    };

    enum CacheTag : std::uint8_t {
        TagApply = 0,       // op folded into aux
        TagIte = 40,
        TagAbstract = 41,   // abstract op folded into aux
    };

    static std::vector<std::string> default_names(std::size_t n) {
        std::vector<std::string> names(n);
        for (std::size_t i = 0; i < n; ++i) names[i] = "v" + std::to_string(i);
        return names;
    }

    static std::vector<VarId> sorted_unique(std::vector<VarId> vars) {
        std::sort(vars.begin(), vars.end());
        vars.erase(std::unique(vars.begin(), vars.end()), vars.end());
        return vars;
    }

    static std::uint64_t key_bits(double v) { return std::bit_cast<std::uint64_t>(v); }

    void check_var(VarId v) const {
        if (v >= num_vars()) throw DdError("undeclared variable index " + std::to_string(v));
    }
    void check_mgr(const Mtbdd& m) const {
        if (m.manager() != this) throw DdError("handle belongs to a different manager");
    }
    void check_same(const Mtbdd& a, const Mtbdd& b) const {
        check_mgr(a);
        check_mgr(b);
    }

    void require_boolean(const Mtbdd& m, const char* where) {
        if (boolean_checked_.count(m.index())) return;
        if (!is_boolean(m)) throw DdError(std::string(where) + ": operand has non-Boolean terminals");
        boolean_checked_.insert(m.index());
    }

    Bdd boolean(BinOp op, const Bdd& a, const Bdd& b) {
        check_same(a, b);
        require_boolean(a, "boolean op");
        require_boolean(b, "boolean op");
        maybe_gc();
        OpCtx ctx{op, 0.0, false};
        return Bdd(wrap(apply_rec(ctx, a.index(), b.index())));
    }

    bool is_terminal(std::uint32_t idx) const { return nodes_[idx].var == kTermVar; }

    std::uint32_t var_of(std::uint32_t idx) const { return nodes_[idx].var; }

    std::uint32_t terminal(double v) {
        if (v == 0.0) v = 0.0;  // normalise -0.0
        auto it = terminals_.find(key_bits(v));
        if (it != terminals_.end()) return it->second;
        std::uint32_t idx = alloc_node();
        nodes_[idx] = Node{kTermVar, 0, 0, v, false};
        terminals_.emplace(key_bits(v), idx);
        return idx;
    }

    std::uint32_t make_node(std::uint32_t var, std::uint32_t hi, std::uint32_t lo) {
        if (hi == lo) return hi;
        if (!is_terminal(hi) && var_of(hi) <= var) throw DdError("make_node: order violation (then child)");
        if (!is_terminal(lo) && var_of(lo) <= var) throw DdError("make_node: order violation (else child)");
        NodeKey key{var, hi, lo};
        auto it = unique_.find(key);
        if (it != unique_.end()) return it->second;
        std::uint32_t idx = alloc_node();
        nodes_[idx] = Node{var, hi, lo, 0.0, false};
        unique_.emplace(key, idx);
        return idx;
    }

    std::uint32_t alloc_node() {
        if (!free_.empty()) {
            std::uint32_t idx = free_.back();
            free_.pop_back();
            return idx;
        }
        if (nodes_.size() >= cfg_.max_nodes) throw DdError("node store capacity exceeded");
        nodes_.emplace_back();
        stats_.peak_nodes = std::max(stats_.peak_nodes, nodes_.size());
        return static_cast<std::uint32_t>(nodes_.size() - 1);
    }

    // GC is only safe between operations: intermediate results inside a
    // recursion are not registered as roots.
    void maybe_gc() {
        if (live_nodes() >= cfg_.gc_threshold) {
            gc();
            while (live_nodes() >= cfg_.gc_threshold && cfg_.gc_threshold < cfg_.max_nodes)
                cfg_.gc_threshold *= 2;
        }
        if (cache_.size() > cfg_.cache_capacity) cache_.clear();
    }

    Mtbdd wrap(std::uint32_t idx) { return Mtbdd(this, idx); }

    void root_ref(std::uint32_t idx) { ++roots_[idx]; }
    void root_unref(std::uint32_t idx) {
        auto it = roots_.find(idx);
        if (it == roots_.end()) return;
        if (--it->second == 0) roots_.erase(it);
    }

    // ---- recursive implementations --------------------------------------

    static double eval_op(const OpCtx& ctx, double a, double b) {
        switch (ctx.op) {
            case BinOp::Plus: return a + b;
            case BinOp::Minus: return a - b;
            case BinOp::Times: return (a == 0.0 || b == 0.0) ? 0.0 : a * b;  // keeps absent entries inert
            case BinOp::Divide: return b == 0.0 ? 0.0 : a / b;
            case BinOp::Min: return std::min(a, b);
            case BinOp::Max: return std::max(a, b);
            case BinOp::Greater: return a > b ? 1.0 : 0.0;
            case BinOp::GreaterEq: return a >= b ? 1.0 : 0.0;
            case BinOp::Equal: return a == b ? 1.0 : 0.0;
            case BinOp::ApproxEq: return distance(a, b, ctx.relative) < ctx.eps ? 1.0 : 0.0;
            case BinOp::AbsDiff: return distance(a, b, false);
            case BinOp::RelDiff: return distance(a, b, true);
        }
        throw DdError("eval_op: unknown operator");
    }

    static double distance(double a, double b, bool relative) {
        if (a == b) return 0.0;  // covers equal infinities
        if (std::isinf(a) || std::isinf(b)) return std::numeric_limits<double>::infinity();
        double d = std::fabs(a - b);
        return relative ? d / std::max(std::fabs(b), kRelFloor) : d;
    }

    static bool commutative(BinOp op) {
        return op == BinOp::Plus || op == BinOp::Times || op == BinOp::Min || op == BinOp::Max ||
               op == BinOp::Equal;
    }

    std::uint64_t apply_aux(const OpCtx& ctx) const {
        std::uint64_t aux = static_cast<std::uint64_t>(ctx.op) + 1;
        if (ctx.op == BinOp::ApproxEq)
            aux ^= (key_bits(ctx.eps) << 8) ^ (ctx.relative ? 0x5555u : 0u);
        return aux;
    }

    std::uint32_t apply_rec(const OpCtx& ctx, std::uint32_t a, std::uint32_t b) {
        ++stats_.apply_calls;
        // terminal short cuts
        switch (ctx.op) {
            case BinOp::Plus:
                if (a == zero_) return b;
                if (b == zero_) return a;
                break;
            case BinOp::Minus:
                if (b == zero_) return a;
                break;
            case BinOp::Times:
                if (a == zero_ || b == zero_) return zero_;
                if (a == one_) return b;
                if (b == one_) return a;
                break;
            case BinOp::Min:
            case BinOp::Max:
                if (a == b) return a;
                break;
            case BinOp::Equal:
            case BinOp::ApproxEq:
                if (a == b) return one_;
                break;
            case BinOp::AbsDiff:
            case BinOp::RelDiff:
                if (a == b) return zero_;
                break;
            default: break;
        }
        if (is_terminal(a) && is_terminal(b))
            return terminal(eval_op(ctx, nodes_[a].value, nodes_[b].value));

        std::uint32_t ka = a, kb = b;
        if (commutative(ctx.op) && kb < ka) std::swap(ka, kb);
        CacheKey key{TagApply, ka, kb, apply_aux(ctx)};
        if (auto it = cache_.find(key); it != cache_.end()) {
            ++stats_.cache_hits;
            return it->second;
        }

        std::uint32_t va = var_of(a), vb = var_of(b);
        std::uint32_t v = std::min(va, vb);
        std::uint32_t a_hi = (va == v) ? nodes_[a].hi : a;
        std::uint32_t a_lo = (va == v) ? nodes_[a].lo : a;
        std::uint32_t b_hi = (vb == v) ? nodes_[b].hi : b;
        std::uint32_t b_lo = (vb == v) ? nodes_[b].lo : b;
        std::uint32_t hi = apply_rec(ctx, a_hi, b_hi);
        std::uint32_t lo = apply_rec(ctx, a_lo, b_lo);
        std::uint32_t r = make_node(v, hi, lo);
        cache_.emplace(key, r);
        return r;
    }

    std::uint32_t ite_rec(std::uint32_t f, std::uint32_t g, std::uint32_t h) {
        if (f == one_) return g;
        if (f == zero_) return h;
        if (g == h) return g;
        CacheKey key{TagIte, f, g, (static_cast<std::uint64_t>(h) << 8) | 0x17};
        if (auto it = cache_.find(key); it != cache_.end()) {
            ++stats_.cache_hits;
            return it->second;
        }
        std::uint32_t v = kTermVar;
        if (!is_terminal(f)) v = std::min(v, var_of(f));
        if (!is_terminal(g)) v = std::min(v, var_of(g));
        if (!is_terminal(h)) v = std::min(v, var_of(h));
        auto cof = [&](std::uint32_t n, bool hi) {
            return (!is_terminal(n) && var_of(n) == v) ? (hi ? nodes_[n].hi : nodes_[n].lo) : n;
        };
        std::uint32_t hi = ite_rec(cof(f, true), cof(g, true), cof(h, true));
        std::uint32_t lo = ite_rec(cof(f, false), cof(g, false), cof(h, false));
        std::uint32_t r = make_node(v, hi, lo);
        cache_.emplace(key, r);
        return r;
    }

    // `cube` is a conjunction of positive literals over the abstracted vars.
    std::uint32_t vars_cube(const std::vector<VarId>& vars) {
        std::vector<VarId> sorted = sorted_unique(vars);
        std::uint32_t r = one_;
        for (auto it = sorted.rbegin(); it != sorted.rend(); ++it) {
            check_var(*it);
            r = make_node(*it, r, zero_);
        }
        return r;
    }

    std::uint32_t abstract_rec(AbstractOp op, std::uint32_t m, std::uint32_t cube) {
        if (cube == one_) return m;
        CacheKey key{TagAbstract, m, cube, static_cast<std::uint64_t>(op)};
        if (auto it = cache_.find(key); it != cache_.end()) {
            ++stats_.cache_hits;
            return it->second;
        }
        OpCtx fold{op == AbstractOp::Plus ? BinOp::Plus : (op == AbstractOp::Min ? BinOp::Min : BinOp::Max),
                   0.0, false};
        std::uint32_t cv = var_of(cube);
        std::uint32_t r;
        if (is_terminal(m) || var_of(m) > cv) {
            // m independent of the abstracted variable: both branches equal
            std::uint32_t rest = abstract_rec(op, m, nodes_[cube].hi);
            r = apply_rec(fold, rest, rest);
        } else if (var_of(m) < cv) {
            std::uint32_t hi = abstract_rec(op, nodes_[m].hi, cube);
            std::uint32_t lo = abstract_rec(op, nodes_[m].lo, cube);
            r = make_node(var_of(m), hi, lo);
        } else {
            std::uint32_t hi = abstract_rec(op, nodes_[m].hi, nodes_[cube].hi);
            std::uint32_t lo = abstract_rec(op, nodes_[m].lo, nodes_[cube].hi);
            r = apply_rec(fold, hi, lo);
        }
        cache_.emplace(key, r);
        return r;
    }

    std::uint32_t rename_rec(std::uint32_t m, const std::unordered_map<VarId, VarId>& map,
                             std::unordered_map<std::uint32_t, std::uint32_t>& memo) {
        if (is_terminal(m)) return m;
        if (auto it = memo.find(m); it != memo.end()) return it->second;
        std::uint32_t hi = rename_rec(nodes_[m].hi, map, memo);
        std::uint32_t lo = rename_rec(nodes_[m].lo, map, memo);
        auto it = map.find(var_of(m));
        std::uint32_t v = (it != map.end()) ? it->second : var_of(m);
        if ((!is_terminal(hi) && var_of(hi) <= v) || (!is_terminal(lo) && var_of(lo) <= v))
            throw DdError("replace_vars: renaming violates the variable order");
        std::uint32_t r = make_node(v, hi, lo);
        memo.emplace(m, r);
        return r;
    }

    void count_rec(std::uint32_t n, std::unordered_set<std::uint32_t>& seen) const {
        if (!seen.insert(n).second) return;
        if (is_terminal(n)) return;
        count_rec(nodes_[n].hi, seen);
        count_rec(nodes_[n].lo, seen);
    }

    void minmax_rec(std::uint32_t n, std::unordered_set<std::uint32_t>& seen, double& best, bool want_max) const {
        if (!seen.insert(n).second) return;
        if (is_terminal(n)) {
            best = want_max ? std::max(best, nodes_[n].value) : std::min(best, nodes_[n].value);
            return;
        }
        minmax_rec(nodes_[n].hi, seen, best, want_max);
        minmax_rec(nodes_[n].lo, seen, best, want_max);
    }

    bool boolean_rec(std::uint32_t n, std::unordered_set<std::uint32_t>& seen) const {
        if (!seen.insert(n).second) return true;
        if (is_terminal(n)) return nodes_[n].value == 0.0 || nodes_[n].value == 1.0;
        return boolean_rec(nodes_[n].hi, seen) && boolean_rec(nodes_[n].lo, seen);
    }

    void support_rec(std::uint32_t n, std::unordered_set<std::uint32_t>& seen,
                     std::unordered_set<VarId>& vars) const {
        if (!seen.insert(n).second) return;
        if (is_terminal(n)) return;
        vars.insert(var_of(n));
        support_rec(nodes_[n].hi, seen, vars);
        support_rec(nodes_[n].lo, seen, vars);
    }

    double satcount_rec(std::uint32_t n, std::size_t level, const std::vector<VarId>& vars,
                        std::unordered_map<std::uint64_t, double>& memo) const {
        if (level == vars.size()) {
            if (!is_terminal(n)) throw DdError("sat_count: unexpected variable below the given set");
            return nodes_[n].value != 0.0 ? 1.0 : 0.0;
        }
        std::uint64_t key = (static_cast<std::uint64_t>(n) << 16) | level;
        if (auto it = memo.find(key); it != memo.end()) return it->second;
        double r;
        if (is_terminal(n) || var_of(n) > vars[level]) {
            r = 2.0 * satcount_rec(n, level + 1, vars, memo);
        } else if (var_of(n) == vars[level]) {
            r = satcount_rec(nodes_[n].hi, level + 1, vars, memo) +
                satcount_rec(nodes_[n].lo, level + 1, vars, memo);
        } else {
            throw DdError("sat_count: diagram variable precedes the given set");
        }
        memo.emplace(key, r);
        return r;
    }

    void paths_rec(std::uint32_t n, Valuation& path, std::vector<std::pair<Valuation, double>>& out) const {
        if (is_terminal(n)) {
            if (nodes_[n].value != 0.0) out.emplace_back(path, nodes_[n].value);
            return;
        }
        Valuation hi = path;
        hi.set(var_of(n), true);
        paths_rec(nodes_[n].hi, hi, out);
        Valuation lo = path;
        lo.set(var_of(n), false);
        paths_rec(nodes_[n].lo, lo, out);
    }

    void structure_rec(std::uint32_t n, std::unordered_set<std::uint32_t>& seen) const {
        if (!seen.insert(n).second) return;
        const Node& node = nodes_[n];
        if (node.dead) throw DdError("structure: dead node reachable");
        if (is_terminal(n)) {
            auto it = terminals_.find(key_bits(node.value));
            if (it == terminals_.end() || it->second != n) throw DdError("structure: duplicate terminal");
            return;
        }
        if (node.hi == node.lo) throw DdError("structure: redundant node");
        for (std::uint32_t c : {node.hi, node.lo})
            if (!is_terminal(c) && var_of(c) <= node.var) throw DdError("structure: order violation");
        auto it = unique_.find(NodeKey{node.var, node.hi, node.lo});
        if (it == unique_.end() || it->second != n) throw DdError("structure: node missing from unique table");
        structure_rec(node.hi, seen);
        structure_rec(node.lo, seen);
    }

    void dot_rec(std::uint32_t n, std::unordered_set<std::uint32_t>& seen, std::ostringstream& os) const {
        if (n == zero_ || !seen.insert(n).second) return;
        if (is_terminal(n)) {
            os << "  n" << n << " [shape=box,label=\"" << nodes_[n].value << "\"];\n";
            return;
        }
        os << "  n" << n << " [shape=oval,label=\"" << var_names_[var_of(n)] << "\"];\n";
        dot_rec(nodes_[n].hi, seen, os);
        dot_rec(nodes_[n].lo, seen, os);
        if (nodes_[n].hi != zero_) os << "  n" << n << " -> n" << nodes_[n].hi << " [style=solid];\n";
        if (nodes_[n].lo != zero_) os << "  n" << n << " -> n" << nodes_[n].lo << " [style=dashed];\n";
    }

    void mark_rec(std::uint32_t n, std::unordered_set<std::uint32_t>& marked) {
        if (!marked.insert(n).second) return;
        if (is_terminal(n)) return;
        mark_rec(nodes_[n].hi, marked);
        mark_rec(nodes_[n].lo, marked);
    }

    ManagerConfig cfg_;
    ManagerStats stats_;
    std::vector<std::string> var_names_;
    std::vector<Node> nodes_;
    std::vector<std::uint32_t> free_;
    std::unordered_map<NodeKey, std::uint32_t, NodeKeyHash> unique_;
    std::unordered_map<std::uint64_t, std::uint32_t> terminals_;
    std::unordered_map<CacheKey, std::uint32_t, CacheKeyHash> cache_;
    std::unordered_map<std::uint32_t, std::uint32_t> roots_;
    std::unordered_set<std::uint32_t> boolean_checked_;
    std::uint32_t zero_ = 0;
    std::uint32_t one_ = 0;
};

inline Mtbdd::Mtbdd(Manager* mgr, std::uint32_t idx) : mgr_(mgr), idx_(idx) {
    if (mgr_) mgr_->root_ref(idx_);
}
inline Mtbdd::Mtbdd(const Mtbdd& other) : mgr_(other.mgr_), idx_(other.idx_) {
    if (mgr_) mgr_->root_ref(idx_);
}
inline Mtbdd::Mtbdd(Mtbdd&& other) noexcept : mgr_(other.mgr_), idx_(other.idx_) {
    other.mgr_ = nullptr;
    other.idx_ = 0;
}
inline Mtbdd& Mtbdd::operator=(const Mtbdd& other) {
    if (this == &other) return *this;
    if (other.mgr_) other.mgr_->root_ref(other.idx_);
    if (mgr_) mgr_->root_unref(idx_);
    mgr_ = other.mgr_;
    idx_ = other.idx_;
    return *this;
}
inline Mtbdd& Mtbdd::operator=(Mtbdd&& other) noexcept {
    if (this == &other) return *this;
    if (mgr_) mgr_->root_unref(idx_);
    mgr_ = other.mgr_;
    idx_ = other.idx_;
    other.mgr_ = nullptr;
    other.idx_ = 0;
    return *this;
}
inline Mtbdd::~Mtbdd() {
    if (mgr_) mgr_->root_unref(idx_);
}

}  // namespace tsg::dd
