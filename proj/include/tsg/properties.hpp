#pragma once

// The property logic: zero-sum coalition operators over probability and
// expected reward objectives, plus the 2-coalition equilibrium operator.
// Concrete syntax follows the usual tool conventions, e.g.
//
//   <<p1,p2>> Pmax=? [ F "goal" ]
//   <<p1>> P>=0.9 [ "a" U<=5 "b" ]
//   <<p1>> R{"time"}min=? [ F "done" ]
//   <<p1:p2>> max=? ( P[ F "g1" ] + P[ F "g2" ] )

#include <cctype>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace tsg {

struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

// Player names, labels and reward names the parser resolves against.
struct GameContext {
    std::vector<std::string> players;
    std::vector<std::string> labels;
    std::vector<std::string> rewards;
};

enum class Cmp { Lt, Le, Ge, Gt };

inline const char* cmp_str(Cmp c) {
    switch (c) {
        case Cmp::Lt: return "<";
        case Cmp::Le: return "<=";
        case Cmp::Ge: return ">=";
        case Cmp::Gt: return ">";
    }
    return "?";
}

inline bool cmp_eval(Cmp c, double value, double bound) {
    switch (c) {
        case Cmp::Lt: return value < bound;
        case Cmp::Le: return value <= bound;
        case Cmp::Ge: return value >= bound;
        case Cmp::Gt: return value > bound;
    }
    return false;
}

// Numeric (opt=?) or threshold (opt optional, cmp+bound) query bound.
struct Bound {
    bool numeric = true;
    bool maximize = true;  // optimisation direction
    Cmp cmp = Cmp::Ge;
    double threshold = 0.0;

    static Bound numeric_opt(bool maximize) { return Bound{true, maximize, Cmp::Ge, 0.0}; }
    static Bound with_threshold(Cmp cmp, double q) {
        // >= / > bounds ask whether the coalition can push the value up,
        // <= / < whether it can push it down.
        bool maximize = (cmp == Cmp::Ge || cmp == Cmp::Gt);
        return Bound{false, maximize, cmp, q};
    }
};

struct StateFormula;
using FormulaPtr = std::shared_ptr<const StateFormula>;

struct PathFormula {
    enum class Kind { Next, Until, BoundedUntil };
    Kind kind = Kind::Until;
    FormulaPtr lhs;  // Until / BoundedUntil left operand (true for F)
    FormulaPtr rhs;  // Next operand lives here too
    int bound = 0;   // BoundedUntil step bound
    // G phi is stored as the complemented reachability F !phi: the checker
    // computes values for the stored path formula with the direction
    // flipped and returns 1 - value.
    bool complemented = false;
    bool sugar_f = false;  // printed as F when the lhs is `true`
};

struct RewardFormula {
    enum class Kind { Instant, CumulBounded, Reach };
    Kind kind = Kind::Reach;
    int bound = 0;
    FormulaPtr target;  // Reach
};

struct Objective {
    bool is_reward = false;
    PathFormula path;        // when !is_reward
    std::string reward_name; // when is_reward
    RewardFormula rho;
};

struct StateFormula {
    enum class Kind { True, Atom, Not, And, ZeroSumP, ZeroSumR, Nash };
    Kind kind = Kind::True;

    std::string atom;          // Atom
    FormulaPtr lhs, rhs;       // Not (lhs), And

    std::vector<int> coalition;     // ZeroSum*: player indices
    std::vector<int> coalition2;    // Nash: second coalition
    Bound bound;
    PathFormula path;          // ZeroSumP
    std::string reward_name;   // ZeroSumR
    RewardFormula rho;         // ZeroSumR
    std::vector<Objective> objectives;  // Nash
    bool nash_welfare = true;           // Nash: max (social welfare) vs min (social cost)
};

inline FormulaPtr make_true() {
    auto f = std::make_shared<StateFormula>();
    f->kind = StateFormula::Kind::True;
    return f;
}

inline FormulaPtr make_atom(std::string name) {
    auto f = std::make_shared<StateFormula>();
    f->kind = StateFormula::Kind::Atom;
    f->atom = std::move(name);
    return f;
}

inline FormulaPtr make_not(FormulaPtr g) {
    auto f = std::make_shared<StateFormula>();
    f->kind = StateFormula::Kind::Not;
    f->lhs = std::move(g);
    return f;
}

inline FormulaPtr make_and(FormulaPtr a, FormulaPtr b) {
    auto f = std::make_shared<StateFormula>();
    f->kind = StateFormula::Kind::And;
    f->lhs = std::move(a);
    f->rhs = std::move(b);
    return f;
}

// ---- printer ---------------------------------------------------------------

std::string to_string(const StateFormula& f);

inline std::string to_string(const PathFormula& p) {
    std::ostringstream os;
    if (p.complemented) {
        // stored as F !phi; print the original G form
        os << "G " << to_string(*p.rhs->lhs);
        return os.str();
    }
    switch (p.kind) {
        case PathFormula::Kind::Next:
            os << "X " << to_string(*p.rhs);
            break;
        case PathFormula::Kind::Until:
            if (p.sugar_f)
                os << "F " << to_string(*p.rhs);
            else
                os << to_string(*p.lhs) << " U " << to_string(*p.rhs);
            break;
        case PathFormula::Kind::BoundedUntil:
            if (p.sugar_f)
                os << "F<=" << p.bound << " " << to_string(*p.rhs);
            else
                os << to_string(*p.lhs) << " U<=" << p.bound << " " << to_string(*p.rhs);
            break;
    }
    return os.str();
}

inline std::string to_string(const RewardFormula& r) {
    std::ostringstream os;
    switch (r.kind) {
        case RewardFormula::Kind::Instant: os << "I=" << r.bound; break;
        case RewardFormula::Kind::CumulBounded: os << "C<=" << r.bound; break;
        case RewardFormula::Kind::Reach: os << "F " << to_string(*r.target); break;
    }
    return os.str();
}

inline std::string coalition_string(const std::vector<int>& coalition,
                                    const std::vector<std::string>& players) {
    std::ostringstream os;
    for (std::size_t i = 0; i < coalition.size(); ++i) os << (i ? "," : "") << players[coalition[i]];
    return os.str();
}

namespace detail {
// Printing needs player names; the parser stores them on the root.
inline thread_local const std::vector<std::string>* g_print_players = nullptr;
}

inline std::string bound_string(const Bound& b) {
    std::ostringstream os;
    if (b.numeric) {
        os << (b.maximize ? "max" : "min") << "=?";
    } else {
        os << cmp_str(b.cmp);
        os << b.threshold;
    }
    return os.str();
}

// Complemented path formulas (G phi) are stored with an inverted bound;
// printing restores the surface form.
inline Bound surface_bound(const Bound& stored) {
    Bound b = stored;
    if (b.numeric) {
        b.maximize = !b.maximize;
    } else {
        b.threshold = 1.0 - b.threshold;
        switch (b.cmp) {
            case Cmp::Ge: b.cmp = Cmp::Le; break;
            case Cmp::Gt: b.cmp = Cmp::Lt; break;
            case Cmp::Le: b.cmp = Cmp::Ge; break;
            case Cmp::Lt: b.cmp = Cmp::Gt; break;
        }
        b.maximize = (b.cmp == Cmp::Ge || b.cmp == Cmp::Gt);
    }
    return b;
}

inline std::string to_string(const StateFormula& f) {
    const auto* players = detail::g_print_players;
    std::ostringstream os;
    switch (f.kind) {
        case StateFormula::Kind::True: return "true";
        case StateFormula::Kind::Atom: return "\"" + f.atom + "\"";
        case StateFormula::Kind::Not: return "!" + to_string(*f.lhs);
        case StateFormula::Kind::And:
            return "(" + to_string(*f.lhs) + " & " + to_string(*f.rhs) + ")";
        case StateFormula::Kind::ZeroSumP:
            os << "<<" << (players ? coalition_string(f.coalition, *players) : "?") << ">> P"
               << bound_string(f.path.complemented ? surface_bound(f.bound) : f.bound) << " [ "
               << to_string(f.path) << " ]";
            return os.str();
        case StateFormula::Kind::ZeroSumR:
            os << "<<" << (players ? coalition_string(f.coalition, *players) : "?") << ">> R{\""
               << f.reward_name << "\"}" << bound_string(f.bound) << " [ " << to_string(f.rho) << " ]";
            return os.str();
        case StateFormula::Kind::Nash: {
            os << "<<" << (players ? coalition_string(f.coalition, *players) : "?") << ":"
               << (players ? coalition_string(f.coalition2, *players) : "?") << ">> "
               << (f.nash_welfare ? "max" : "min");
            if (f.bound.numeric)
                os << "=?";
            else
                os << cmp_str(f.bound.cmp) << f.bound.threshold;
            os << " ( ";
            for (std::size_t i = 0; i < f.objectives.size(); ++i) {
                if (i) os << " + ";
                const Objective& o = f.objectives[i];
                if (o.is_reward)
                    os << "R{\"" << o.reward_name << "\"}[ " << to_string(o.rho) << " ]";
                else
                    os << "P[ " << to_string(o.path) << " ]";
            }
            os << " )";
            return os.str();
        }
    }
    return "?";
}

inline std::string to_string(const StateFormula& f, const std::vector<std::string>& players) {
    detail::g_print_players = &players;
    std::string s = to_string(f);
    detail::g_print_players = nullptr;
    return s;
}

// ---- parser ----------------------------------------------------------------

class PropertyParser {
public:
    PropertyParser(std::string text, GameContext ctx) : text_(std::move(text)), ctx_(std::move(ctx)) {}

    FormulaPtr parse() {
        FormulaPtr f = state_formula();
        skip_ws();
        if (pos_ != text_.size()) fail("trailing input after property");
        return f;
    }

private:
    [[noreturn]] void fail(const std::string& msg) const {
        throw ParseError("property: " + msg + " (at offset " + std::to_string(pos_) + ")");
    }

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool eat(const std::string& tok) {
        skip_ws();
        if (text_.compare(pos_, tok.size(), tok) == 0) {
            pos_ += tok.size();
            return true;
        }
        return false;
    }

    void expect(const std::string& tok) {
        if (!eat(tok)) fail("expected '" + tok + "'");
    }

    bool peek(const std::string& tok) {
        skip_ws();
        return text_.compare(pos_, tok.size(), tok) == 0;
    }

    std::string ident() {
        skip_ws();
        std::size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
            ++pos_;
        if (start == pos_) fail("expected identifier");
        return text_.substr(start, pos_ - start);
    }

    std::string quoted() {
        skip_ws();
        if (pos_ >= text_.size() || text_[pos_] != '"') fail("expected quoted name");
        ++pos_;
        std::size_t start = pos_;
        while (pos_ < text_.size() && text_[pos_] != '"') ++pos_;
        if (pos_ >= text_.size()) fail("unterminated quoted name");
        std::string s = text_.substr(start, pos_ - start);
        ++pos_;
        return s;
    }

    double number() {
        skip_ws();
        std::size_t next = 0;
        double v;
        try {
            v = std::stod(text_.substr(pos_), &next);
        } catch (...) {
            fail("expected number");
        }
        pos_ += next;
        return v;
    }

    int integer() {
        double v = number();
        int i = static_cast<int>(v);
        if (v != i || i < 0) fail("expected a nonnegative integer");
        return i;
    }

    int player_index(const std::string& name) {
        for (std::size_t i = 0; i < ctx_.players.size(); ++i)
            if (ctx_.players[i] == name) return static_cast<int>(i);
        fail("unknown player: " + name);
    }

    std::vector<int> coalition_members() {
        std::vector<int> members;
        skip_ws();
        if (peek(":") || peek(">>")) return members;  // empty coalition
        for (;;) {
            members.push_back(player_index(ident()));
            if (!eat(",")) break;
        }
        std::sort(members.begin(), members.end());
        if (std::adjacent_find(members.begin(), members.end()) != members.end())
            fail("player listed twice in coalition");
        return members;
    }

    std::optional<Cmp> try_cmp() {
        if (eat("<=")) return Cmp::Le;
        if (eat(">=")) return Cmp::Ge;
        if (eat("<")) return Cmp::Lt;
        if (eat(">")) return Cmp::Gt;
        return std::nullopt;
    }

    // bound after P / R{..}: max=? | min=? | ⋈ q
    Bound bound(bool probability) {
        if (eat("max=?")) return Bound::numeric_opt(true);
        if (eat("min=?")) return Bound::numeric_opt(false);
        auto cmp = try_cmp();
        if (!cmp) fail("expected max=?, min=? or a threshold bound");
        double q = number();
        if (probability && (q < 0.0 || q > 1.0)) fail("probability threshold out of [0,1]");
        if (!probability && q < 0.0) fail("reward threshold must be nonnegative");
        return Bound::with_threshold(*cmp, q);
    }

    FormulaPtr state_formula() { return and_formula(); }

    FormulaPtr and_formula() {
        FormulaPtr f = unary_formula();
        while (eat("&")) f = make_and(f, unary_formula());
        return f;
    }

    FormulaPtr unary_formula() {
        skip_ws();
        if (eat("!")) return make_not(unary_formula());
        if (eat("(")) {
            FormulaPtr f = state_formula();
            expect(")");
            return f;
        }
        if (peek("<<")) return coalition_formula();
        if (peek("\"")) {
            std::string name = quoted();
            check_label(name);
            return make_atom(name);
        }
        if (eat("true")) return make_true();
        // bare label name
        std::string name = ident();
        check_label(name);
        return make_atom(name);
    }

    void check_label(const std::string& name) {
        for (const auto& l : ctx_.labels)
            if (l == name) return;
        fail("unknown label: " + name);
    }

    void check_reward(const std::string& name) {
        for (const auto& r : ctx_.rewards)
            if (r == name) return;
        fail("unknown reward structure: " + name);
    }

    FormulaPtr coalition_formula() {
        expect("<<");
        std::vector<int> c1 = coalition_members();
        bool nash = eat(":");
        std::vector<int> c2;
        if (nash) {
            c2 = coalition_members();
            if (eat(":")) fail("more than two equilibrium coalitions are not supported");
        }
        expect(">>");
        if (nash) return nash_formula(std::move(c1), std::move(c2));

        auto f = std::make_shared<StateFormula>();
        f->coalition = std::move(c1);
        skip_ws();
        if (eat("P")) {
            f->kind = StateFormula::Kind::ZeroSumP;
            f->bound = bound(true);
            expect("[");
            f->path = path_formula(f->bound);
            expect("]");
        } else if (eat("R")) {
            f->kind = StateFormula::Kind::ZeroSumR;
            expect("{");
            f->reward_name = quoted();
            check_reward(f->reward_name);
            expect("}");
            f->bound = bound(false);
            expect("[");
            f->rho = reward_formula();
            expect("]");
        } else {
            fail("expected P or R after coalition");
        }
        return f;
    }

    // Parses a path formula; `G phi` is rewritten to the complemented
    // F !phi with the query bound inverted.
    PathFormula path_formula(Bound& b) {
        PathFormula p;
        skip_ws();
        if (eat("X")) {
            p.kind = PathFormula::Kind::Next;
            p.rhs = unary_formula();
            return p;
        }
        if (eat("G")) {
            FormulaPtr phi = unary_formula();
            p.kind = PathFormula::Kind::Until;
            p.lhs = make_true();
            p.rhs = make_not(phi);
            p.sugar_f = true;
            p.complemented = true;
            invert_bound(b);
            return p;
        }
        if (eat("F")) {
            p.lhs = make_true();
            p.sugar_f = true;
            if (eat("<=")) {
                p.kind = PathFormula::Kind::BoundedUntil;
                p.bound = integer();
            } else {
                p.kind = PathFormula::Kind::Until;
            }
            p.rhs = unary_formula();
            return p;
        }
        FormulaPtr lhs = unary_formula();
        expect("U");
        p.lhs = lhs;
        if (eat("<=")) {
            p.kind = PathFormula::Kind::BoundedUntil;
            p.bound = integer();
        } else {
            p.kind = PathFormula::Kind::Until;
        }
        p.rhs = unary_formula();
        return p;
    }

    // P(G phi) = 1 - P(F !phi): numeric queries flip the direction, the
    // threshold form inverts the bound.
    static void invert_bound(Bound& b) {
        if (b.numeric) {
            b.maximize = !b.maximize;
        } else {
            b.threshold = 1.0 - b.threshold;
            switch (b.cmp) {
                case Cmp::Ge: b.cmp = Cmp::Le; break;
                case Cmp::Gt: b.cmp = Cmp::Lt; break;
                case Cmp::Le: b.cmp = Cmp::Ge; break;
                case Cmp::Lt: b.cmp = Cmp::Gt; break;
            }
            b.maximize = (b.cmp == Cmp::Ge || b.cmp == Cmp::Gt);
        }
    }

    RewardFormula reward_formula() {
        RewardFormula r;
        skip_ws();
        if (eat("I=")) {
            r.kind = RewardFormula::Kind::Instant;
            r.bound = integer();
        } else if (eat("C<=")) {
            r.kind = RewardFormula::Kind::CumulBounded;
            r.bound = integer();
        } else if (eat("F")) {
            r.kind = RewardFormula::Kind::Reach;
            r.target = unary_formula();
        } else {
            fail("expected I=k, C<=k or F phi");
        }
        return r;
    }

    FormulaPtr nash_formula(std::vector<int> c1, std::vector<int> c2) {
        auto f = std::make_shared<StateFormula>();
        f->kind = StateFormula::Kind::Nash;
        f->coalition = std::move(c1);
        f->coalition2 = std::move(c2);
        // coalitions partition the player set
        std::vector<int> all(f->coalition);
        all.insert(all.end(), f->coalition2.begin(), f->coalition2.end());
        std::sort(all.begin(), all.end());
        bool dup = std::adjacent_find(all.begin(), all.end()) != all.end();
        if (dup || all.size() != ctx_.players.size())
            fail("equilibrium coalitions must partition the player set");

        if (eat("max"))
            f->nash_welfare = true;
        else if (eat("min"))
            f->nash_welfare = false;
        else
            fail("expected max or min after equilibrium coalitions");
        if (eat("=?")) {
            f->bound = Bound::numeric_opt(f->nash_welfare);
        } else {
            auto cmp = try_cmp();
            if (!cmp) fail("expected =? or a threshold bound");
            double q = number();
            f->bound = Bound::with_threshold(*cmp, q);
            f->bound.maximize = f->nash_welfare;
        }
        expect("(");
        bool reward_kind = false;
        bool first = true;
        do {
            Objective o;
            skip_ws();
            if (eat("P")) {
                o.is_reward = false;
                expect("[");
                Bound dummy = Bound::numeric_opt(true);
                o.path = path_formula(dummy);
                if (o.path.complemented) fail("G objectives are not supported in equilibrium sums");
                expect("]");
            } else if (eat("R")) {
                o.is_reward = true;
                expect("{");
                o.reward_name = quoted();
                check_reward(o.reward_name);
                expect("}");
                expect("[");
                o.rho = reward_formula();
                expect("]");
            } else {
                fail("expected P or R objective");
            }
            if (first) {
                reward_kind = o.is_reward;
                first = false;
            } else if (o.is_reward != reward_kind) {
                fail("equilibrium objectives must all be probability sums or all reward sums");
            }
            f->objectives.push_back(std::move(o));
        } while (eat("+"));
        expect(")");
        if (f->objectives.size() != 2) fail("exactly one objective per coalition is required");
        return f;
    }

    std::string text_;
    GameContext ctx_;
    std::size_t pos_ = 0;
};

inline FormulaPtr parse_property(const std::string& text, const GameContext& ctx) {
    return PropertyParser(text, ctx).parse();
}

// Named properties, one per line; '//' starts a comment.
inline std::vector<std::pair<std::string, FormulaPtr>> parse_property_file(std::istream& in,
                                                                           const GameContext& ctx) {
    std::vector<std::pair<std::string, FormulaPtr>> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find("//");
        if (hash != std::string::npos) line.erase(hash);
        std::size_t i = line.find_first_not_of(" \t\r\n");
        if (i == std::string::npos) continue;
        std::string name = "prop" + std::to_string(out.size() + 1);
        if (line[i] == '"') {
            auto close = line.find('"', i + 1);
            auto colon = close == std::string::npos ? std::string::npos : line.find(':', close);
            if (close != std::string::npos && colon != std::string::npos) {
                name = line.substr(i + 1, close - i - 1);
                line = line.substr(colon + 1);
            }
        }
        try {
            out.emplace_back(name, parse_property(line, ctx));
        } catch (const ParseError& e) {
            throw ParseError("line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

// Determinacy dual of a numeric zero-sum formula: the complementary
// coalition optimises in the opposite direction and gets the same value.
inline FormulaPtr dualize(const FormulaPtr& f, int num_players) {
    if ((f->kind != StateFormula::Kind::ZeroSumP && f->kind != StateFormula::Kind::ZeroSumR) ||
        !f->bound.numeric)
        throw ParseError("dualize: only numeric zero-sum formulas have a determinacy dual");
    auto g = std::make_shared<StateFormula>(*f);
    std::vector<int> comp;
    for (int p = 0; p < num_players; ++p)
        if (!std::binary_search(f->coalition.begin(), f->coalition.end(), p)) comp.push_back(p);
    g->coalition = std::move(comp);
    g->bound.maximize = !f->bound.maximize;
    return g;
}

}  // namespace tsg
