#pragma once

// Guarded-command modelling language for turn-based stochastic games, a
// compact Reactive-Modules-style input:
//
//   tsg
//   const int N = 3;
//   player p1 m1, [go] endplayer
//   player p2 m2 endplayer
//   module m1
//     x : [0..3] init 0;
//     [go] x<3 -> 0.5:(x'=x+1) + 0.5:(x'=0);
//     []   x=3 -> (x'=x);
//   endmodule
//   label "goal" = x=3;
//   rewards "time"
//     true : 1;
//     [go] x>0 : 2;
//   endrewards
//
// Modules synchronise on shared action labels; unlabelled commands act
// alone and get synthesised action names. A player owns modules and/or
// action labels; a command belongs to its label's owner when the label is
// claimed, otherwise to its module's owner.

#include <cctype>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "tsg/properties.hpp"  // ParseError

namespace tsg {

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
    enum class Kind { IntLit, DoubleLit, BoolLit, Ident, Not, Neg, Binary, Min, Max };
    Kind kind = Kind::IntLit;
    long long int_val = 0;
    double dbl_val = 0.0;
    bool bool_val = false;
    std::string name;     // Ident
    std::string op;       // Binary: + - * / = != < <= > >= & |
    ExprPtr lhs, rhs;
    int line = 0, col = 0;
};

inline ExprPtr make_expr(Expr e) { return std::make_shared<Expr>(std::move(e)); }

struct Update {
    // assignments x'=e; empty means "no change"
    std::vector<std::pair<std::string, ExprPtr>> assigns;
};

struct Branch {
    ExprPtr prob;  // null: probability 1
    Update update;
};

struct Command {
    std::string action;  // empty for unlabelled commands
    ExprPtr guard;
    std::vector<Branch> branches;
    int line = 0;
};

struct VarDecl {
    std::string name;
    bool is_bool = false;
    ExprPtr low, high;  // bounded integers
    ExprPtr init;
    int line = 0;
};

struct ModuleAst {
    std::string name;
    std::vector<VarDecl> vars;
    std::vector<Command> commands;
};

struct ConstDecl {
    enum class Type { Int, Double, Bool };
    Type type = Type::Int;
    std::string name;
    ExprPtr value;  // null: must be overridden on the command line
    int line = 0;
};

struct PlayerDecl {
    std::string name;
    std::vector<std::string> modules;
    std::vector<std::string> actions;
};

struct LabelDecl {
    std::string name;
    ExprPtr expr;
};

struct RewardItem {
    bool is_action = false;
    std::string action;  // empty: applies to unlabelled commands
    ExprPtr guard;
    ExprPtr value;
};

struct RewardBlock {
    std::string name;
    std::vector<RewardItem> items;
};

struct ModelAst {
    std::vector<ConstDecl> constants;
    std::vector<PlayerDecl> players;
    std::vector<ModuleAst> modules;
    std::vector<LabelDecl> labels;
    std::vector<RewardBlock> rewards;
};

// ---- lexer -------------------------------------------------------------

namespace lang_detail {

struct Token {
    enum class Kind { Ident, Int, Double, String, Punct, End };
    Kind kind = Kind::End;
    std::string text;
    long long int_val = 0;
    double dbl_val = 0.0;
    int line = 1, col = 1;
};

class Lexer {
public:
    explicit Lexer(std::string text) : text_(std::move(text)) { advance(); }

    const Token& peek() const { return tok_; }

    Token next() {
        Token t = tok_;
        advance();
        return t;
    }

    [[noreturn]] void fail(const std::string& msg) const {
        throw ParseError("model:" + std::to_string(tok_.line) + ":" + std::to_string(tok_.col) + ": " +
                         msg);
    }

private:
    void advance() {
        skip_ws();
        tok_ = Token{};
        tok_.line = line_;
        tok_.col = col_;
        if (pos_ >= text_.size()) {
            tok_.kind = Token::Kind::End;
            return;
        }
        char c = text_[pos_];
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t start = pos_;
            while (pos_ < text_.size() &&
                   (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
                bump();
            tok_.kind = Token::Kind::Ident;
            tok_.text = text_.substr(start, pos_ - start);
            return;
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            std::size_t start = pos_;
            bool is_double = false;
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) bump();
            if (pos_ + 1 < text_.size() && text_[pos_] == '.' &&
                std::isdigit(static_cast<unsigned char>(text_[pos_ + 1]))) {
                is_double = true;
                bump();
                while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) bump();
            }
            if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
                std::size_t save = pos_;
                bump();
                if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) bump();
                if (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
                    is_double = true;
                    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) bump();
                } else {
                    pos_ = save;  // not an exponent
                }
            }
            std::string num = text_.substr(start, pos_ - start);
            if (is_double) {
                tok_.kind = Token::Kind::Double;
                tok_.dbl_val = std::stod(num);
            } else {
                tok_.kind = Token::Kind::Int;
                tok_.int_val = std::stoll(num);
            }
            tok_.text = num;
            return;
        }
        if (c == '"') {
            bump();
            std::size_t start = pos_;
            while (pos_ < text_.size() && text_[pos_] != '"') bump();
            if (pos_ >= text_.size()) fail("unterminated string");
            tok_.kind = Token::Kind::String;
            tok_.text = text_.substr(start, pos_ - start);
            bump();
            return;
        }
        // multi-character punctuation first
        static const char* puncts[] = {"->", "<=", ">=", "!=", "'", "..", nullptr};
        for (int i = 0; puncts[i]; ++i) {
            std::size_t len = std::string(puncts[i]).size();
            if (text_.compare(pos_, len, puncts[i]) == 0) {
                tok_.kind = Token::Kind::Punct;
                tok_.text = puncts[i];
                for (std::size_t j = 0; j < len; ++j) bump();
                return;
            }
        }
        tok_.kind = Token::Kind::Punct;
        tok_.text = std::string(1, c);
        bump();
    }

    void skip_ws() {
        for (;;) {
            while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) bump();
            if (pos_ + 1 < text_.size() && text_[pos_] == '/' && text_[pos_ + 1] == '/') {
                while (pos_ < text_.size() && text_[pos_] != '\n') bump();
                continue;
            }
            break;
        }
    }

    void bump() {
        if (text_[pos_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++pos_;
    }

    std::string text_;
    std::size_t pos_ = 0;
    int line_ = 1, col_ = 1;
    Token tok_;
};

}  // namespace lang_detail

// ---- parser ------------------------------------------------------------

class ModelParser {
    using Token = lang_detail::Token;

public:
    explicit ModelParser(std::string text) : lex_(std::move(text)) {}

    ModelAst parse() {
        expect_ident("tsg");
        ModelAst ast;
        for (;;) {
            const Token& t = lex_.peek();
            if (t.kind == Token::Kind::End) break;
            if (t.kind != Token::Kind::Ident) lex_.fail("expected a declaration");
            if (t.text == "const") {
                ast.constants.push_back(const_decl());
            } else if (t.text == "player") {
                ast.players.push_back(player_decl());
            } else if (t.text == "module") {
                ast.modules.push_back(module_decl());
            } else if (t.text == "label") {
                ast.labels.push_back(label_decl());
            } else if (t.text == "rewards") {
                ast.rewards.push_back(reward_block());
            } else {
                lex_.fail("unknown declaration: " + t.text);
            }
        }
        check_duplicates(ast);
        return ast;
    }

private:
    void check_duplicates(const ModelAst& ast) const {
        auto dup = [](auto names, const char* what) {
            std::sort(names.begin(), names.end());
            auto it = std::adjacent_find(names.begin(), names.end());
            if (it != names.end()) throw ParseError(std::string("model: duplicate ") + what + ": " + *it);
        };
        std::vector<std::string> cs, ms, ps, ls, vs;
        for (auto& c : ast.constants) cs.push_back(c.name);
        for (auto& m : ast.modules) ms.push_back(m.name);
        for (auto& p : ast.players) ps.push_back(p.name);
        for (auto& l : ast.labels) ls.push_back(l.name);
        for (auto& m : ast.modules)
            for (auto& v : m.vars) vs.push_back(v.name);
        for (auto& c : ast.constants) vs.push_back(c.name);
        dup(cs, "constant");
        dup(ms, "module");
        dup(ps, "player");
        dup(ls, "label");
        dup(vs, "variable/constant name");
        // player claim sets must be pairwise disjoint
        std::vector<std::string> claimed_modules, claimed_actions;
        for (auto& p : ast.players) {
            for (auto& m : p.modules) claimed_modules.push_back(m);
            for (auto& a : p.actions) claimed_actions.push_back(a);
        }
        dup(claimed_modules, "module claim");
        dup(claimed_actions, "action claim");
    }

    Token expect(Token::Kind kind, const std::string& what) {
        if (lex_.peek().kind != kind) lex_.fail("expected " + what);
        return lex_.next();
    }

    void expect_punct(const std::string& p) {
        if (lex_.peek().kind != Token::Kind::Punct || lex_.peek().text != p)
            lex_.fail("expected '" + p + "'");
        lex_.next();
    }

    void expect_ident(const std::string& kw) {
        if (lex_.peek().kind != Token::Kind::Ident || lex_.peek().text != kw)
            lex_.fail("expected '" + kw + "'");
        lex_.next();
    }

    bool eat_punct(const std::string& p) {
        if (lex_.peek().kind == Token::Kind::Punct && lex_.peek().text == p) {
            lex_.next();
            return true;
        }
        return false;
    }

    bool eat_ident(const std::string& kw) {
        if (lex_.peek().kind == Token::Kind::Ident && lex_.peek().text == kw) {
            lex_.next();
            return true;
        }
        return false;
    }

    ConstDecl const_decl() {
        expect_ident("const");
        ConstDecl c;
        c.line = lex_.peek().line;
        Token type = expect(Token::Kind::Ident, "a constant type");
        if (type.text == "int")
            c.type = ConstDecl::Type::Int;
        else if (type.text == "double")
            c.type = ConstDecl::Type::Double;
        else if (type.text == "bool")
            c.type = ConstDecl::Type::Bool;
        else
            lex_.fail("constant type must be int, double or bool");
        c.name = expect(Token::Kind::Ident, "a constant name").text;
        if (eat_punct("=")) c.value = expr();
        expect_punct(";");
        return c;
    }

    PlayerDecl player_decl() {
        expect_ident("player");
        PlayerDecl p;
        p.name = expect(Token::Kind::Ident, "a player name").text;
        for (;;) {
            if (eat_ident("endplayer")) break;
            if (eat_punct(",")) continue;
            if (eat_punct("[")) {
                p.actions.push_back(expect(Token::Kind::Ident, "an action label").text);
                expect_punct("]");
            } else {
                p.modules.push_back(expect(Token::Kind::Ident, "a module or action name").text);
            }
        }
        return p;
    }

    ModuleAst module_decl() {
        expect_ident("module");
        ModuleAst m;
        m.name = expect(Token::Kind::Ident, "a module name").text;
        bool saw_item = false;
        for (;;) {
            if (eat_ident("endmodule")) break;
            if (lex_.peek().kind == Token::Kind::End)
                lex_.fail("expected command or endmodule");
            if (lex_.peek().kind == Token::Kind::Punct && lex_.peek().text == "[") {
                m.commands.push_back(command());
            } else {
                m.vars.push_back(var_decl());
            }
            saw_item = true;
        }
        if (!saw_item) throw ParseError("model: expected command or endmodule in module " + m.name);
        return m;
    }

    VarDecl var_decl() {
        VarDecl v;
        v.line = lex_.peek().line;
        v.name = expect(Token::Kind::Ident, "a variable name").text;
        expect_punct(":");
        if (eat_ident("bool")) {
            v.is_bool = true;
        } else {
            expect_punct("[");
            v.low = expr();
            expect_punct("..");
            v.high = expr();
            expect_punct("]");
        }
        expect_ident("init");
        v.init = expr();
        expect_punct(";");
        return v;
    }

    Command command() {
        Command c;
        c.line = lex_.peek().line;
        expect_punct("[");
        if (lex_.peek().kind == Token::Kind::Ident) c.action = lex_.next().text;
        expect_punct("]");
        c.guard = expr();
        expect_punct("->");
        for (;;) {
            c.branches.push_back(branch());
            if (!eat_punct("+")) break;
        }
        expect_punct(";");
        return c;
    }

    Branch branch() {
        Branch b;
        // lookahead: `expr : update` vs a bare update `(x'=...)` or `true`
        if (!starts_update()) {
            b.prob = expr();
            expect_punct(":");
        }
        b.update = update();
        return b;
    }

    bool starts_update() {
        const Token& t = lex_.peek();
        if (t.kind == Token::Kind::Ident && t.text == "true") return true;
        if (t.kind != Token::Kind::Punct || t.text != "(") return false;
        // an update starts with (ident'
        lang_detail::Lexer probe = lex_;
        probe.next();  // (
        if (probe.peek().kind != Token::Kind::Ident) return false;
        probe.next();
        return probe.peek().kind == Token::Kind::Punct && probe.peek().text == "'";
    }

    Update update() {
        Update u;
        if (eat_ident("true")) return u;  // no-op update
        for (;;) {
            expect_punct("(");
            std::string var = expect(Token::Kind::Ident, "a variable name").text;
            expect_punct("'");
            expect_punct("=");
            u.assigns.emplace_back(var, expr());
            expect_punct(")");
            if (!eat_punct("&")) break;
        }
        return u;
    }

    LabelDecl label_decl() {
        expect_ident("label");
        LabelDecl l;
        l.name = expect(Token::Kind::String, "a quoted label name").text;
        expect_punct("=");
        l.expr = expr();
        expect_punct(";");
        return l;
    }

    RewardBlock reward_block() {
        expect_ident("rewards");
        RewardBlock r;
        r.name = expect(Token::Kind::String, "a quoted reward name").text;
        for (;;) {
            if (eat_ident("endrewards")) break;
            RewardItem item;
            if (eat_punct("[")) {
                item.is_action = true;
                if (lex_.peek().kind == Token::Kind::Ident) item.action = lex_.next().text;
                expect_punct("]");
            }
            item.guard = expr();
            expect_punct(":");
            item.value = expr();
            expect_punct(";");
            r.items.push_back(std::move(item));
        }
        return r;
    }

    // expression grammar: | over & over ! over comparisons over +- over */ over unary
    ExprPtr expr() { return or_expr(); }

    ExprPtr or_expr() {
        ExprPtr e = and_expr();
        while (lex_.peek().kind == Token::Kind::Punct && lex_.peek().text == "|") {
            lex_.next();
            e = binary("|", e, and_expr());
        }
        return e;
    }

    ExprPtr and_expr() {
        ExprPtr e = cmp_expr();
        while (lex_.peek().kind == Token::Kind::Punct && lex_.peek().text == "&") {
            lex_.next();
            e = binary("&", e, cmp_expr());
        }
        return e;
    }

    ExprPtr cmp_expr() {
        ExprPtr e = add_expr();
        const Token& t = lex_.peek();
        if (t.kind == Token::Kind::Punct &&
            (t.text == "=" || t.text == "!=" || t.text == "<" || t.text == "<=" || t.text == ">" ||
             t.text == ">=")) {
            std::string op = lex_.next().text;
            e = binary(op, e, add_expr());
        }
        return e;
    }

    ExprPtr add_expr() {
        ExprPtr e = mul_expr();
        for (;;) {
            const Token& t = lex_.peek();
            if (t.kind == Token::Kind::Punct && (t.text == "+" || t.text == "-")) {
                std::string op = lex_.next().text;
                e = binary(op, e, mul_expr());
            } else {
                break;
            }
        }
        return e;
    }

    ExprPtr mul_expr() {
        ExprPtr e = unary_expr();
        for (;;) {
            const Token& t = lex_.peek();
            if (t.kind == Token::Kind::Punct && (t.text == "*" || t.text == "/")) {
                std::string op = lex_.next().text;
                e = binary(op, e, unary_expr());
            } else {
                break;
            }
        }
        return e;
    }

    ExprPtr unary_expr() {
        const Token& t = lex_.peek();
        if (t.kind == Token::Kind::Punct && t.text == "!") {
            lex_.next();
            Expr e;
            e.kind = Expr::Kind::Not;
            e.lhs = unary_expr();
            return make_expr(std::move(e));
        }
        if (t.kind == Token::Kind::Punct && t.text == "-") {
            lex_.next();
            Expr e;
            e.kind = Expr::Kind::Neg;
            e.lhs = unary_expr();
            return make_expr(std::move(e));
        }
        return atom_expr();
    }

    ExprPtr atom_expr() {
        Token t = lex_.next();
        Expr e;
        e.line = t.line;
        e.col = t.col;
        if (t.kind == Token::Kind::Int) {
            e.kind = Expr::Kind::IntLit;
            e.int_val = t.int_val;
            return make_expr(std::move(e));
        }
        if (t.kind == Token::Kind::Double) {
            e.kind = Expr::Kind::DoubleLit;
            e.dbl_val = t.dbl_val;
            return make_expr(std::move(e));
        }
        if (t.kind == Token::Kind::Punct && t.text == "(") {
            ExprPtr inner = expr();
            expect_punct(")");
            return inner;
        }
        if (t.kind == Token::Kind::Ident) {
            if (t.text == "true" || t.text == "false") {
                e.kind = Expr::Kind::BoolLit;
                e.bool_val = t.text == "true";
                return make_expr(std::move(e));
            }
            if (t.text == "min" || t.text == "max") {
                e.kind = t.text == "min" ? Expr::Kind::Min : Expr::Kind::Max;
                expect_punct("(");
                e.lhs = expr();
                expect_punct(",");
                e.rhs = expr();
                expect_punct(")");
                return make_expr(std::move(e));
            }
            e.kind = Expr::Kind::Ident;
            e.name = t.text;
            return make_expr(std::move(e));
        }
        lex_.fail("expected an expression");
    }

    ExprPtr binary(std::string op, ExprPtr lhs, ExprPtr rhs) {
        Expr e;
        e.kind = Expr::Kind::Binary;
        e.op = std::move(op);
        e.lhs = std::move(lhs);
        e.rhs = std::move(rhs);
        return make_expr(std::move(e));
    }

    lang_detail::Lexer lex_;
};

inline ModelAst parse_model(const std::string& text) { return ModelParser(text).parse(); }

// ---- printer ------------------------------------------------------------

inline std::string to_string(const Expr& e) {
    std::ostringstream os;
    switch (e.kind) {
        case Expr::Kind::IntLit: os << e.int_val; break;
        case Expr::Kind::DoubleLit: {
            os.precision(17);
            os << e.dbl_val;
            if (os.str().find('.') == std::string::npos && os.str().find('e') == std::string::npos)
                os << ".0";
            break;
        }
        case Expr::Kind::BoolLit: os << (e.bool_val ? "true" : "false"); break;
        case Expr::Kind::Ident: os << e.name; break;
        case Expr::Kind::Not: os << "!(" << to_string(*e.lhs) << ")"; break;
        case Expr::Kind::Neg: os << "-(" << to_string(*e.lhs) << ")"; break;
        case Expr::Kind::Binary:
            os << "(" << to_string(*e.lhs) << " " << e.op << " " << to_string(*e.rhs) << ")";
            break;
        case Expr::Kind::Min: os << "min(" << to_string(*e.lhs) << ", " << to_string(*e.rhs) << ")"; break;
        case Expr::Kind::Max: os << "max(" << to_string(*e.lhs) << ", " << to_string(*e.rhs) << ")"; break;
    }
    return os.str();
}

inline std::string to_string(const ModelAst& ast) {
    std::ostringstream os;
    os << "tsg\n\n";
    for (const auto& c : ast.constants) {
        os << "const "
           << (c.type == ConstDecl::Type::Int ? "int" : c.type == ConstDecl::Type::Double ? "double" : "bool")
           << " " << c.name;
        if (c.value) os << " = " << to_string(*c.value);
        os << ";\n";
    }
    for (const auto& p : ast.players) {
        os << "player " << p.name;
        bool first = true;
        for (const auto& m : p.modules) {
            os << (first ? " " : ", ") << m;
            first = false;
        }
        for (const auto& a : p.actions) {
            os << (first ? " [" : ", [") << a << "]";
            first = false;
        }
        os << " endplayer\n";
    }
    for (const auto& m : ast.modules) {
        os << "module " << m.name << "\n";
        for (const auto& v : m.vars) {
            os << "  " << v.name << " : ";
            if (v.is_bool)
                os << "bool";
            else
                os << "[" << to_string(*v.low) << ".." << to_string(*v.high) << "]";
            os << " init " << to_string(*v.init) << ";\n";
        }
        for (const auto& c : m.commands) {
            os << "  [" << c.action << "] " << to_string(*c.guard) << " -> ";
            for (std::size_t i = 0; i < c.branches.size(); ++i) {
                if (i) os << " + ";
                const Branch& b = c.branches[i];
                if (b.prob) os << to_string(*b.prob) << ":";
                if (b.update.assigns.empty()) {
                    os << "true";
                } else {
                    for (std::size_t j = 0; j < b.update.assigns.size(); ++j) {
                        if (j) os << " & ";
                        os << "(" << b.update.assigns[j].first << "'=" << to_string(*b.update.assigns[j].second)
                           << ")";
                    }
                }
            }
            os << ";\n";
        }
        os << "endmodule\n";
    }
    for (const auto& l : ast.labels) os << "label \"" << l.name << "\" = " << to_string(*l.expr) << ";\n";
    for (const auto& r : ast.rewards) {
        os << "rewards \"" << r.name << "\"\n";
        for (const auto& item : r.items) {
            os << "  ";
            if (item.is_action) os << "[" << item.action << "] ";
            os << to_string(*item.guard) << " : " << to_string(*item.value) << ";\n";
        }
        os << "endrewards\n";
    }
    return os.str();
}

}  // namespace tsg
