#include <cctype>
#include <cerrno>
#include <cstdlib>
#include <functional>
#include <set>

#include "asyncratt/surface.hpp"

namespace asyncratt {

SyntaxError::SyntaxError(Span s, std::string msg, std::vector<std::string> exp)
    : std::runtime_error(s.to_string() + ": " + msg), span(s), message(std::move(msg)), expected(std::move(exp)) {}

ElaborationError::ElaborationError(Span s, std::string msg)
    : std::runtime_error(s.to_string() + ": " + msg), span(s), message(std::move(msg)) {}

const SurfaceDef* SurfaceProgram::find_def(const std::string& name) const {
    for (const auto& d : defs)
        if (d.name == name) return &d;
    return nullptr;
}

namespace {

struct Token {
    enum class Kind { Ident, Nat, Float, Sym, End };
    Kind kind = Kind::End;
    std::string text;
    std::uint64_t nat = 0;
    double number = 0.0;
    Span span;
    bool bol = false;       // first token on its line
    bool adjacent = false;  // no whitespace before it
};

const std::set<std::string>& keywords() {
    static const std::set<std::string> k = {
        "let",   "in",    "if",    "then", "else", "case", "of",   "natrec", "with", "fix",  "delay", "adv",
        "select", "never", "box",  "unbox", "await", "read", "into", "out",   "suc",  "fst",  "snd",   "in1",
        "in2",   "zero",  "where", "Left", "Right", "Both", "dfix"};
    return k;
}

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '\'' || c == '~';
}

std::vector<Token> lex(std::string_view src) {
    static const char* symbols[] = {"->", "=>", "::", "==", "<=", ">=", "\\", ":", "=", "<", ">", "+", "-",
                                    "*",  "/",  "(",  ")",  ",",  "|",  ";",  "{", "}", "."};
    std::vector<Token> out;
    int line = 1, col = 1;
    std::size_t i = 0;
    bool bol = true, adjacent = false;
    auto bump = [&](std::size_t n) {
        for (std::size_t k = 0; k < n; ++k) {
            if (src[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
            ++i;
        }
    };
    while (i < src.size()) {
        char c = src[i];
        if (c == '\n') {
            bump(1);
            bol = true;
            adjacent = false;
            continue;
        }
        if (std::isspace(static_cast<unsigned char>(c))) {
            bump(1);
            adjacent = false;
            continue;
        }
        if (c == '-' && i + 1 < src.size() && src[i + 1] == '-') {
            while (i < src.size() && src[i] != '\n') bump(1);
            continue;
        }
        Token t;
        t.span = {line, col};
        t.bol = bol;
        t.adjacent = adjacent;
        bol = false;
        adjacent = true;
        if (is_ident_start(c)) {
            std::size_t j = i;
            while (j < src.size() && is_ident_char(src[j])) ++j;
            t.kind = Token::Kind::Ident;
            t.text = std::string(src.substr(i, j - i));
            bump(j - i);
        } else if (std::isdigit(static_cast<unsigned char>(c))) {
            std::size_t j = i;
            while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
            bool is_float = false;
            if (j + 1 < src.size() && src[j] == '.' && std::isdigit(static_cast<unsigned char>(src[j + 1]))) {
                is_float = true;
                ++j;
                while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
            }
            if (j < src.size() && (src[j] == 'e' || src[j] == 'E')) {
                std::size_t k = j + 1;
                if (k < src.size() && (src[k] == '+' || src[k] == '-')) ++k;
                if (k < src.size() && std::isdigit(static_cast<unsigned char>(src[k]))) {
                    is_float = true;
                    j = k;
                    while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
                }
            }
            t.text = std::string(src.substr(i, j - i));
            if (is_float) {
                t.kind = Token::Kind::Float;
                t.number = std::strtod(t.text.c_str(), nullptr);
            } else {
                t.kind = Token::Kind::Nat;
                errno = 0;
                t.nat = std::strtoull(t.text.c_str(), nullptr, 10);
                if (errno == ERANGE) throw SyntaxError(t.span, "numeric literal out of range");
            }
            bump(j - i);
        } else {
            bool matched = false;
            for (const char* s : symbols) {
                std::string_view sv(s);
                if (src.substr(i, sv.size()) == sv) {
                    t.kind = Token::Kind::Sym;
                    t.text = std::string(sv);
                    bump(sv.size());
                    matched = true;
                    break;
                }
            }
            if (!matched) throw SyntaxError(t.span, std::string("unexpected character '") + c + "'");
        }
        out.push_back(std::move(t));
    }
    Token end;
    end.kind = Token::Kind::End;
    end.span = {line, col};
    end.bol = true;
    out.push_back(end);
    return out;
}

std::string describe(const Token& t) {
    switch (t.kind) {
        case Token::Kind::End:
            return "end of item";
        case Token::Kind::Nat:
        case Token::Kind::Float:
            return "number " + t.text;
        default:
            return "'" + t.text + "'";
    }
}

class Parser {
public:
    explicit Parser(std::string_view src) : toks_(lex(src)) {}

    ExprPtr whole_expr() {
        ExprPtr e = expr();
        expect_end();
        return e;
    }
    TypePtr whole_type() {
        TypePtr t = type();
        expect_end();
        return t;
    }
    Scheme whole_scheme() {
        Scheme s = scheme();
        expect_end();
        return s;
    }

private:
    struct Fence {
        int col;
        std::size_t start;
    };

    std::vector<Token> toks_;
    std::size_t pos_ = 0;
    std::vector<Fence> fences_;
    std::vector<std::string> type_binders_;

    const Token& raw() const { return toks_[pos_]; }

    bool fenced(std::size_t at) const {
        const Token& t = toks_[at];
        if (t.kind == Token::Kind::End) return true;
        if (!t.bol) return false;
        for (const auto& f : fences_)
            if (at != f.start && t.span.col <= f.col) return true;
        return false;
    }

    Token peek_at(std::size_t at) const {
        if (at >= toks_.size()) return toks_.back();
        if (fenced(at)) {
            Token end;
            end.kind = Token::Kind::End;
            end.span = toks_[at].span;
            return end;
        }
        return toks_[at];
    }
    Token peek() const { return peek_at(pos_); }
    Token peek2() const {
        if (fenced(pos_)) return peek();
        return peek_at(pos_ + 1);
    }

    Token advance() {
        Token t = peek();
        if (t.kind != Token::Kind::End) ++pos_;
        return t;
    }

    [[noreturn]] void error_here(const std::string& what, std::vector<std::string> expected = {}) {
        Token t = peek();
        throw SyntaxError(t.span, what + ", found " + describe(t), std::move(expected));
    }

    bool is_sym(const Token& t, std::string_view s) const { return t.kind == Token::Kind::Sym && t.text == s; }
    bool is_kw(const Token& t, std::string_view s) const { return t.kind == Token::Kind::Ident && t.text == s; }
    bool at_sym(std::string_view s) const { return is_sym(peek(), s); }
    bool at_kw(std::string_view s) const { return is_kw(peek(), s); }

    Token expect_sym(std::string_view s) {
        if (!at_sym(s)) error_here("expected '" + std::string(s) + "'", {"'" + std::string(s) + "'"});
        return advance();
    }
    Token expect_kw(std::string_view s) {
        if (!at_kw(s)) error_here("expected '" + std::string(s) + "'", {"'" + std::string(s) + "'"});
        return advance();
    }
    void expect_end() {
        if (peek().kind != Token::Kind::End) error_here("unexpected token", {"end of item"});
    }

    bool is_name(const Token& t) const {
        return t.kind == Token::Kind::Ident && t.text != "_" && !keywords().count(t.text);
    }

    std::string expect_name(const char* what) {
        if (!is_name(peek())) error_here(std::string("expected ") + what, {what});
        return advance().text;
    }

    // Types -----------------------------------------------------------------

    TypePtr type() {
        TypePtr l = sum_type();
        if (at_sym("->")) {
            advance();
            return ty::fun(l, type());
        }
        return l;
    }
    TypePtr sum_type() {
        TypePtr l = prod_type();
        if (at_sym("+")) {
            advance();
            return ty::sum(l, sum_type());
        }
        return l;
    }
    TypePtr prod_type() {
        TypePtr l = prefix_type();
        if (at_sym("*")) {
            advance();
            return ty::prod(l, prod_type());
        }
        return l;
    }
    TypePtr prefix_type() {
        Token t = peek();
        if (is_kw(t, "Sig")) {
            advance();
            return ty::sig(prefix_type());
        }
        if (is_kw(t, "Delay")) {
            advance();
            return ty::later(prefix_type());
        }
        if (is_kw(t, "DelayAny")) {
            advance();
            return ty::any(prefix_type());
        }
        if (is_kw(t, "Box")) {
            advance();
            return ty::box(prefix_type());
        }
        if (is_kw(t, "Fix")) {
            advance();
            std::string a = expect_name("type variable");
            expect_sym(".");
            type_binders_.push_back(a);
            TypePtr body = type();
            type_binders_.pop_back();
            return ty::fix(a, body);
        }
        return atom_type();
    }
    TypePtr atom_type() {
        Token t = peek();
        if (at_sym("(")) {
            advance();
            TypePtr a = type();
            expect_sym(")");
            return a;
        }
        if (t.kind == Token::Kind::Ident) {
            if (t.text == "Unit") return advance(), ty::unit();
            if (t.text == "Nat") return advance(), ty::nat();
            if (t.text == "Float") return advance(), ty::flt();
            if (t.text == "Bool") return advance(), ty::boolean();
            if (t.text == "Stable") error_here("expected type", {"type"});
            if (std::isupper(static_cast<unsigned char>(t.text[0]))) {
                advance();
                return ty::param(t.text);
            }
            if (is_name(t)) {
                for (auto it = type_binders_.rbegin(); it != type_binders_.rend(); ++it)
                    if (*it == t.text) return advance(), ty::var(t.text);
                throw SyntaxError(t.span, "unbound type variable '" + t.text + "'");
            }
        }
        error_here("expected type", {"type"});
    }

    static void collect_params(const TypePtr& a, std::vector<std::string>& out) {
        if (a->kind == TypeKind::Param) {
            for (const auto& p : out)
                if (p == a->name) return;
            out.push_back(a->name);
            return;
        }
        if (a->left) collect_params(a->left, out);
        if (a->right) collect_params(a->right, out);
    }

    Scheme scheme() {
        Scheme s;
        std::vector<std::pair<std::string, Span>> constraints;
        auto one = [&] {
            expect_kw("Stable");
            Token p = peek();
            if (p.kind != Token::Kind::Ident || !std::isupper(static_cast<unsigned char>(p.text[0])))
                error_here("expected type parameter", {"type parameter"});
            advance();
            constraints.emplace_back(p.text, p.span);
        };
        if (at_kw("Stable")) {
            one();
            expect_sym("=>");
        } else if (at_sym("(") && is_kw(peek2(), "Stable")) {
            advance();
            one();
            while (at_sym(",")) {
                advance();
                one();
            }
            expect_sym(")");
            expect_sym("=>");
        }
        s.type = type();
        collect_params(s.type, s.params);
        for (const auto& [name, span] : constraints) {
            bool known = false;
            for (const auto& p : s.params) known = known || p == name;
            if (!known) throw SyntaxError(span, "constraint on '" + name + "' which does not occur in the type");
            s.stable.insert(name);
        }
        return s;
    }

    // Patterns --------------------------------------------------------------

    static PatternPtr mk_pat(Pattern::Kind k, Span s, std::vector<PatternPtr> kids = {}) {
        auto p = std::make_shared<Pattern>();
        p->kind = k;
        p->span = s;
        p->kids = std::move(kids);
        return p;
    }
    static PatternPtr mk_inj(int i, PatternPtr kid, Span s) {
        auto p = std::make_shared<Pattern>();
        p->kind = Pattern::Kind::Inj;
        p->index = i;
        p->span = s;
        p->kids = {std::move(kid)};
        return p;
    }

    bool at_apat_start() const {
        Token t = peek();
        if (t.kind == Token::Kind::Nat) return true;
        if (is_sym(t, "(")) return true;
        if (t.kind != Token::Kind::Ident) return false;
        return t.text == "_" || t.text == "zero" || is_name(t);
    }

    PatternPtr pattern() {
        Span s = peek().span;
        PatternPtr head = con_pattern();
        if (at_sym("::")) {
            advance();
            return mk_pat(Pattern::Kind::Cons, s, {head, pattern()});
        }
        return head;
    }

    PatternPtr con_pattern() {
        Token t = peek();
        Span s = t.span;
        if (is_kw(t, "in1") || is_kw(t, "in2")) {
            advance();
            return mk_inj(t.text == "in1" ? 1 : 2, apattern(), s);
        }
        if (is_kw(t, "suc")) {
            advance();
            return mk_pat(Pattern::Kind::Suc, s, {apattern()});
        }
        if (is_kw(t, "Left") || is_kw(t, "Right") || is_kw(t, "Both")) {
            advance();
            PatternPtr a = apattern();
            PatternPtr b = apattern();
            PatternPtr pr = mk_pat(Pattern::Kind::Pair, s, {a, b});
            if (t.text == "Left") return mk_inj(1, mk_inj(1, pr, s), s);
            if (t.text == "Right") return mk_inj(1, mk_inj(2, pr, s), s);
            return mk_inj(2, pr, s);
        }
        return apattern();
    }

    PatternPtr apattern() {
        Token t = peek();
        Span s = t.span;
        if (t.kind == Token::Kind::Nat) {
            advance();
            auto p = std::make_shared<Pattern>();
            p->kind = Pattern::Kind::Nat;
            p->nat = t.nat;
            p->span = s;
            return p;
        }
        if (is_kw(t, "zero")) {
            advance();
            auto p = std::make_shared<Pattern>();
            p->kind = Pattern::Kind::Nat;
            p->span = s;
            return p;
        }
        if (t.kind == Token::Kind::Ident && t.text == "_") {
            advance();
            return mk_pat(Pattern::Kind::Wild, s);
        }
        if (is_name(t)) {
            advance();
            auto p = std::make_shared<Pattern>();
            p->kind = Pattern::Kind::Var;
            p->name = t.text;
            p->span = s;
            return p;
        }
        if (is_sym(t, "(")) {
            advance();
            if (at_sym(")")) {
                advance();
                return mk_pat(Pattern::Kind::Unit, s);
            }
            std::vector<PatternPtr> items{pattern()};
            while (at_sym(",")) {
                advance();
                items.push_back(pattern());
            }
            expect_sym(")");
            PatternPtr acc = items.back();
            for (std::size_t i = items.size() - 1; i-- > 0;) acc = mk_pat(Pattern::Kind::Pair, s, {items[i], acc});
            return acc;
        }
        error_here("expected pattern", {"pattern"});
    }

    // Expressions -----------------------------------------------------------

    static std::shared_ptr<Expr> mk(Expr::Kind k, Span s, std::vector<ExprPtr> kids = {}) {
        auto e = std::make_shared<Expr>();
        e->kind = k;
        e->span = s;
        e->kids = std::move(kids);
        return e;
    }

    bool at_block_start() const {
        Token t = peek();
        return is_sym(t, "\\") || is_kw(t, "let") || is_kw(t, "if") || is_kw(t, "case") || is_kw(t, "natrec") ||
               is_kw(t, "fix");
    }

    bool at_atom_start() const {
        Token t = peek();
        if (t.kind == Token::Kind::Nat || t.kind == Token::Kind::Float) return true;
        if (is_sym(t, "(")) return true;
        return is_kw(t, "never") || is_kw(t, "zero") || is_name(t);
    }

    ExprPtr expr() {
        Span s = peek().span;
        ExprPtr l = cons_expr();
        if (at_sym(";")) {
            advance();
            return mk(Expr::Kind::Seq, s, {l, expr()});
        }
        return l;
    }

    ExprPtr cons_expr() {
        Span s = peek().span;
        ExprPtr l = cmp_expr();
        if (at_sym("::")) {
            advance();
            return mk(Expr::Kind::Cons, s, {l, cons_expr()});
        }
        return l;
    }

    ExprPtr prim(PrimOp op, ExprPtr l, ExprPtr r, Span s) {
        auto e = mk(Expr::Kind::Prim, s, {std::move(l), std::move(r)});
        e->op = op;
        return e;
    }

    ExprPtr cmp_expr() {
        Span s = peek().span;
        ExprPtr l = add_expr();
        static const std::pair<const char*, PrimOp> ops[] = {{"==", PrimOp::Eq}, {"<=", PrimOp::Le},
                                                             {">=", PrimOp::Ge}, {"<", PrimOp::Lt},
                                                             {">", PrimOp::Gt}};
        for (const auto& [sym, op] : ops) {
            if (at_sym(sym)) {
                advance();
                return prim(op, l, add_expr(), s);
            }
        }
        return l;
    }

    ExprPtr add_expr() {
        Span s = peek().span;
        ExprPtr l = mul_expr();
        while (at_sym("+") || at_sym("-")) {
            PrimOp op = advance().text == "+" ? PrimOp::Add : PrimOp::Sub;
            l = prim(op, l, mul_expr(), s);
        }
        return l;
    }

    ExprPtr mul_expr() {
        Span s = peek().span;
        ExprPtr l = app_expr();
        while (at_sym("*") || at_sym("/")) {
            PrimOp op = advance().text == "*" ? PrimOp::Mul : PrimOp::Div;
            l = prim(op, l, app_expr(), s);
        }
        return l;
    }

    ExprPtr app_expr() {
        if (at_block_start()) return block();
        Span s = peek().span;
        ExprPtr head = head_expr();
        std::vector<ExprPtr> kids{head};
        while (true) {
            if (at_atom_start()) {
                kids.push_back(atom());
            } else if (at_block_start()) {
                kids.push_back(block());
                break;
            } else {
                break;
            }
        }
        if (kids.size() == 1) return head;
        return mk(Expr::Kind::App, s, std::move(kids));
    }

    ExprPtr arg() {
        if (at_block_start()) return block();
        return atom();
    }

    ExprPtr head_expr() {
        Token t = peek();
        Span s = t.span;
        static const std::pair<const char*, Expr::UnaryOp> unary[] = {
            {"adv", Expr::UnaryOp::Adv},   {"unbox", Expr::UnaryOp::Unbox}, {"box", Expr::UnaryOp::Box},
            {"into", Expr::UnaryOp::Into}, {"out", Expr::UnaryOp::Out},     {"suc", Expr::UnaryOp::Suc},
            {"fst", Expr::UnaryOp::Fst},   {"snd", Expr::UnaryOp::Snd},     {"in1", Expr::UnaryOp::In1},
            {"in2", Expr::UnaryOp::In2}};
        for (const auto& [kw, op] : unary) {
            if (is_kw(t, kw)) {
                advance();
                auto e = mk(Expr::Kind::Unary, s, {arg()});
                e->unary = op;
                return e;
            }
        }
        if (is_kw(t, "delay")) {
            advance();
            auto e = mk(Expr::Kind::Delay, s);
            if (at_sym("{") && peek().adjacent) {
                advance();
                e->has_clock = true;
                do {
                    if (at_sym(",")) advance();
                    Token a = peek();
                    if (is_kw(a, "await")) {
                        advance();
                        auto w = mk(Expr::Kind::Await, a.span);
                        w->name = expect_name("channel name");
                        e->clock.push_back(w);
                    } else {
                        auto v = mk(Expr::Kind::Var, a.span);
                        v->name = expect_name("clock variable");
                        e->clock.push_back(v);
                    }
                } while (at_sym(","));
                expect_sym("}");
            }
            e->kids.push_back(arg());
            return e;
        }
        if (is_kw(t, "select")) {
            advance();
            ExprPtr a = arg();
            ExprPtr b = arg();
            return mk(Expr::Kind::Select, s, {a, b});
        }
        if (is_kw(t, "Left") || is_kw(t, "Right") || is_kw(t, "Both")) {
            advance();
            ExprPtr a = arg();
            ExprPtr b = arg();
            auto e = mk(Expr::Kind::Ctor, s, {a, b});
            e->index = t.text == "Left" ? 1 : t.text == "Right" ? 2 : 3;
            return e;
        }
        if (is_kw(t, "await") || is_kw(t, "read")) {
            advance();
            auto e = mk(t.text == "await" ? Expr::Kind::Await : Expr::Kind::Read, s);
            e->name = expect_name("channel name");
            return e;
        }
        if (!at_atom_start()) error_here("expected expression", {"expression"});
        return atom();
    }

    ExprPtr atom() {
        Token t = peek();
        Span s = t.span;
        if (t.kind == Token::Kind::Nat) {
            advance();
            auto e = mk(Expr::Kind::Nat, s);
            e->nat = t.nat;
            return e;
        }
        if (t.kind == Token::Kind::Float) {
            advance();
            auto e = mk(Expr::Kind::Float, s);
            e->number = t.number;
            return e;
        }
        if (is_kw(t, "never")) return advance(), mk(Expr::Kind::Never, s);
        if (is_kw(t, "zero")) return advance(), mk(Expr::Kind::Nat, s);
        if (is_name(t)) {
            advance();
            if (at_sym("{") && peek().adjacent) {
                advance();
                auto e = mk(Expr::Kind::Template, s);
                e->name = t.text;
                e->name2 = expect_name("channel name");
                expect_sym("}");
                return e;
            }
            auto e = mk(Expr::Kind::Var, s);
            e->name = t.text;
            return e;
        }
        if (is_sym(t, "(")) {
            advance();
            if (at_sym(")")) {
                advance();
                return mk(Expr::Kind::Unit, s);
            }
            std::vector<ExprPtr> items{expr()};
            while (at_sym(",")) {
                advance();
                items.push_back(expr());
            }
            expect_sym(")");
            if (items.size() == 1) return items[0];
            return mk(Expr::Kind::Tuple, s, std::move(items));
        }
        error_here("expected expression", {"expression"});
    }

    ExprPtr block() {
        Token t = peek();
        Span s = t.span;
        if (is_sym(t, "\\")) {
            advance();
            auto e = mk(Expr::Kind::Lam, s);
            do {
                e->pats.push_back(apattern());
            } while (at_apat_start());
            expect_sym("->");
            e->kids.push_back(expr());
            return e;
        }
        if (is_kw(t, "let")) {
            advance();
            auto e = mk(Expr::Kind::Let, s);
            e->pats.push_back(pattern());
            expect_sym("=");
            e->kids.push_back(expr());
            expect_kw("in");
            e->kids.push_back(expr());
            return e;
        }
        if (is_kw(t, "if")) {
            advance();
            ExprPtr c = expr();
            expect_kw("then");
            ExprPtr a = expr();
            expect_kw("else");
            ExprPtr b = expr();
            return mk(Expr::Kind::If, s, {c, a, b});
        }
        if (is_kw(t, "case")) {
            advance();
            auto e = mk(Expr::Kind::Case, s, {expr()});
            expect_kw("of");
            if (!at_sym("|")) error_here("expected '|'", {"'|'"});
            while (at_sym("|")) {
                advance();
                e->pats.push_back(pattern());
                expect_sym("->");
                e->kids.push_back(expr());
            }
            return e;
        }
        if (is_kw(t, "natrec")) {
            advance();
            auto e = mk(Expr::Kind::NatRec, s, {expr()});
            expect_kw("with");
            expect_kw("zero");
            expect_sym("->");
            e->kids.push_back(expr());
            expect_sym("|");
            expect_kw("suc");
            e->name = binder_name();
            e->name2 = binder_name();
            expect_sym("->");
            e->kids.push_back(expr());
            return e;
        }
        if (is_kw(t, "fix")) {
            advance();
            auto e = mk(Expr::Kind::Fix, s);
            e->name = expect_name("variable");
            expect_sym("->");
            e->kids.push_back(expr());
            return e;
        }
        error_here("expected expression", {"expression"});
    }

    std::string binder_name() {
        Token t = peek();
        if (t.kind == Token::Kind::Ident && t.text == "_") return advance(), "_";
        return expect_name("variable");
    }

    // Items -----------------------------------------------------------------

    enum class Section { Inputs, Defs, Outputs };

    void input_item(SurfaceProgram& p) {
        SurfaceInput in;
        in.span = peek().span;
        in.name = expect_name("channel name");
        expect_sym(":");
        if (at_kw("push")) {
            advance();
            in.cls = ChannelClass::PushOnly;
        } else if (at_kw("buffered")) {
            advance();
            in.cls = ChannelClass::BufferedOnly;
            if (at_kw("push")) {
                advance();
                in.cls = ChannelClass::BufferedPush;
            }
        } else {
            error_here("expected channel class", {"'push'", "'buffered'", "'buffered push'"});
        }
        in.type = type();
        p.inputs.push_back(std::move(in));
    }

    void output_item(SurfaceProgram& p) {
        SurfaceOutput o;
        o.span = peek().span;
        o.name = expect_name("output name");
        expect_sym(":");
        o.type = type();
        expect_sym("=");
        o.expr = expr();
        p.outputs.push_back(std::move(o));
    }

    void def_item(SurfaceProgram& p) {
        Span s = peek().span;
        std::string name = expect_name("definition name");
        std::optional<std::string> chan;
        TypePtr chan_type;
        if (at_sym("{") && peek().adjacent) {
            advance();
            chan = expect_name("channel parameter");
            if (at_sym(":")) {
                advance();
                chan_type = type();
            }
            expect_sym("}");
            // name{chan} without a channel type is an instance specialised to a declared channel
            bool instance = !chan_type && (at_sym(":") || (!p.defs.empty() && p.defs.back().name == name + "{" + *chan + "}"));
            if (instance) {
                name += "{" + *chan + "}";
                chan.reset();
            }
        }
        SurfaceDef* def = p.defs.empty() || p.defs.back().name != name ? nullptr : &p.defs.back();
        if (at_sym(":")) {
            advance();
            if (def) throw SyntaxError(s, "duplicate signature for '" + name + "'");
            for (const auto& d : p.defs)
                if (d.name == name) throw SyntaxError(s, "duplicate definition of '" + name + "'");
            SurfaceDef d;
            d.name = name;
            d.channel_param = chan;
            d.channel_type = chan_type;
            d.has_signature = true;
            d.scheme = scheme();
            d.span = s;
            if (chan_type) {
                std::vector<std::string> extra;
                collect_params(chan_type, extra);
                for (const auto& x : extra) {
                    bool seen = false;
                    for (const auto& q : d.scheme.params) seen = seen || q == x;
                    if (!seen) d.scheme.params.push_back(x);
                }
            }
            p.defs.push_back(std::move(d));
            return;
        }
        if (!def) {
            for (const auto& d : p.defs)
                if (d.name == name) throw SyntaxError(s, "equations for '" + name + "' must follow its signature directly");
            SurfaceDef d;
            d.name = name;
            d.channel_param = chan;
            d.span = s;
            p.defs.push_back(std::move(d));
            def = &p.defs.back();
        }
        if (chan_type) throw SyntaxError(s, "channel type belongs in the signature");
        if (def->channel_param != chan) throw SyntaxError(s, "equation does not match the template header of '" + name + "'");
        Equation eq;
        eq.span = s;
        while (at_apat_start()) eq.pats.push_back(apattern());
        expect_sym("=");
        eq.body = expr();
        if (at_kw("where")) {
            advance();
            int col = peek().span.col;
            while (true) {
                fences_.push_back({col, pos_});
                PatternPtr pat = pattern();
                expect_sym("=");
                ExprPtr rhs = expr();
                expect_end();
                fences_.pop_back();
                eq.where.emplace_back(pat, rhs);
                const Token& next = raw();
                if (next.kind == Token::Kind::End || !next.bol || next.span.col != col || fenced(pos_)) break;
            }
        }
        def->equations.push_back(std::move(eq));
    }

public:
    SurfaceProgram run_program() {
        SurfaceProgram p;
        Section section = Section::Defs;
        while (raw().kind != Token::Kind::End) {
            const Token& t = raw();
            if (!t.bol) throw SyntaxError(t.span, "unexpected " + describe(t) + "; items start on a new line");
            if (t.span.col == 1 && t.kind == Token::Kind::Ident &&
                (t.text == "inputs" || t.text == "defs" || t.text == "outputs")) {
                section = t.text == "inputs" ? Section::Inputs : t.text == "defs" ? Section::Defs : Section::Outputs;
                ++pos_;
                continue;
            }
            fences_.push_back({t.span.col, pos_});
            switch (section) {
                case Section::Inputs:
                    input_item(p);
                    break;
                case Section::Defs:
                    def_item(p);
                    break;
                case Section::Outputs:
                    output_item(p);
                    break;
            }
            expect_end();
            fences_.pop_back();
        }
        return p;
    }
};

}  // namespace

SurfaceProgram parse_program(std::string_view text) { return Parser(text).run_program(); }
ExprPtr parse_expr(std::string_view text) { return Parser(text).whole_expr(); }
TypePtr parse_type(std::string_view text) { return Parser(text).whole_type(); }
Scheme parse_scheme(std::string_view text) { return Parser(text).whole_scheme(); }

}  // namespace asyncratt
