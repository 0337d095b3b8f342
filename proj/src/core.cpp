#include "asyncratt/core.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <stdexcept>

namespace asyncratt {

std::string Span::to_string() const {
    if (!known()) return "?:?";
    return std::to_string(line) + ":" + std::to_string(col);
}

// ---------------------------------------------------------------------------
// Types
// ---------------------------------------------------------------------------

namespace ty {
namespace {
TypePtr make(TypeKind k, TypePtr l = nullptr, TypePtr r = nullptr, std::string n = {}, int m = -1) {
    return std::make_shared<const Type>(k, std::move(l), std::move(r), std::move(n), m);
}
}  // namespace

TypePtr unit() {
    static const TypePtr t = make(TypeKind::Unit);
    return t;
}
TypePtr nat() {
    static const TypePtr t = make(TypeKind::Nat);
    return t;
}
TypePtr flt() {
    static const TypePtr t = make(TypeKind::Float);
    return t;
}
TypePtr prod(TypePtr a, TypePtr b) { return make(TypeKind::Prod, std::move(a), std::move(b)); }
TypePtr sum(TypePtr a, TypePtr b) { return make(TypeKind::Sum, std::move(a), std::move(b)); }
TypePtr fun(TypePtr a, TypePtr b) { return make(TypeKind::Fun, std::move(a), std::move(b)); }
TypePtr later(TypePtr a) { return make(TypeKind::DelayExist, std::move(a)); }
TypePtr any(TypePtr a) { return make(TypeKind::DelayAny, std::move(a)); }
TypePtr box(TypePtr a) { return make(TypeKind::Box, std::move(a)); }
TypePtr fix(std::string binder, TypePtr body) {
    return make(TypeKind::FixRec, std::move(body), nullptr, std::move(binder));
}
TypePtr var(std::string name) { return make(TypeKind::Var, nullptr, nullptr, std::move(name)); }
TypePtr param(std::string name) { return make(TypeKind::Param, nullptr, nullptr, std::move(name)); }
TypePtr meta(int id) { return make(TypeKind::Meta, nullptr, nullptr, {}, id); }
TypePtr sig(TypePtr a) { return fix("a", prod(std::move(a), var("a"))); }
TypePtr boolean() { return sum(unit(), unit()); }
}  // namespace ty

bool is_stable(const TypePtr& a, const std::set<std::string>* stable_params) {
    switch (a->kind) {
        case TypeKind::Unit:
        case TypeKind::Nat:
        case TypeKind::Float:
        case TypeKind::DelayAny:
        case TypeKind::Box:
            return true;
        case TypeKind::Prod:
        case TypeKind::Sum:
            return is_stable(a->left, stable_params) && is_stable(a->right, stable_params);
        case TypeKind::Param:
            return stable_params != nullptr && stable_params->count(a->name) > 0;
        default:
            return false;
    }
}

bool is_value_type(const TypePtr& a) {
    switch (a->kind) {
        case TypeKind::Unit:
        case TypeKind::Nat:
        case TypeKind::Float:
            return true;
        case TypeKind::Prod:
        case TypeKind::Sum:
            return is_value_type(a->left) && is_value_type(a->right);
        default:
            return false;
    }
}

namespace {

using BinderEnv = std::vector<std::pair<std::string, std::string>>;

bool type_equal_in(const TypePtr& a, const TypePtr& b, BinderEnv& env) {
    if (a->kind != b->kind) return false;
    switch (a->kind) {
        case TypeKind::Unit:
        case TypeKind::Nat:
        case TypeKind::Float:
            return true;
        case TypeKind::Prod:
        case TypeKind::Sum:
        case TypeKind::Fun:
            return type_equal_in(a->left, b->left, env) && type_equal_in(a->right, b->right, env);
        case TypeKind::DelayExist:
        case TypeKind::DelayAny:
        case TypeKind::Box:
            return type_equal_in(a->left, b->left, env);
        case TypeKind::FixRec: {
            env.emplace_back(a->name, b->name);
            bool eq = type_equal_in(a->left, b->left, env);
            env.pop_back();
            return eq;
        }
        case TypeKind::Var:
            for (auto it = env.rbegin(); it != env.rend(); ++it) {
                bool l = it->first == a->name;
                bool r = it->second == b->name;
                if (l || r) return l && r;
            }
            return a->name == b->name;
        case TypeKind::Param:
            return a->name == b->name;
        case TypeKind::Meta:
            return a->meta == b->meta;
    }
    return false;
}

bool type_has_free_var(const TypePtr& a, const std::string& name) {
    switch (a->kind) {
        case TypeKind::Var:
            return a->name == name;
        case TypeKind::FixRec:
            return a->name != name && type_has_free_var(a->left, name);
        default:
            return (a->left && type_has_free_var(a->left, name)) ||
                   (a->right && type_has_free_var(a->right, name));
    }
}

std::atomic<std::uint64_t> g_fresh_type_names{0};

}  // namespace

bool type_equal(const TypePtr& a, const TypePtr& b) {
    if (a == b) return true;
    BinderEnv env;
    return type_equal_in(a, b, env);
}

TypePtr subst_type(const TypePtr& a, const std::string& name, const TypePtr& replacement) {
    switch (a->kind) {
        case TypeKind::Unit:
        case TypeKind::Nat:
        case TypeKind::Float:
        case TypeKind::Param:
        case TypeKind::Meta:
            return a;
        case TypeKind::Var:
            return a->name == name ? replacement : a;
        case TypeKind::Prod:
            return ty::prod(subst_type(a->left, name, replacement), subst_type(a->right, name, replacement));
        case TypeKind::Sum:
            return ty::sum(subst_type(a->left, name, replacement), subst_type(a->right, name, replacement));
        case TypeKind::Fun:
            return ty::fun(subst_type(a->left, name, replacement), subst_type(a->right, name, replacement));
        case TypeKind::DelayExist:
            return ty::later(subst_type(a->left, name, replacement));
        case TypeKind::DelayAny:
            return ty::any(subst_type(a->left, name, replacement));
        case TypeKind::Box:
            return ty::box(subst_type(a->left, name, replacement));
        case TypeKind::FixRec: {
            if (a->name == name) return a;
            if (type_has_free_var(replacement, a->name)) {
                std::string fresh = a->name + "'" + std::to_string(g_fresh_type_names++);
                TypePtr body = subst_type(a->left, a->name, ty::var(fresh));
                return ty::fix(fresh, subst_type(body, name, replacement));
            }
            return ty::fix(a->name, subst_type(a->left, name, replacement));
        }
    }
    return a;
}

TypePtr unfold(const TypePtr& fixrec) {
    if (fixrec->kind != TypeKind::FixRec) throw std::invalid_argument("unfold: not a recursive type");
    return subst_type(fixrec->left, fixrec->name, ty::later(fixrec));
}

TypePtr sig_element(const TypePtr& a) {
    if (a->kind != TypeKind::FixRec) return nullptr;
    const TypePtr& body = a->left;
    if (body->kind != TypeKind::Prod) return nullptr;
    if (body->right->kind != TypeKind::Var || body->right->name != a->name) return nullptr;
    if (type_has_free_var(body->left, a->name)) return nullptr;
    return body->left;
}

bool contains_meta(const TypePtr& a) {
    if (a->kind == TypeKind::Meta) return true;
    return (a->left && contains_meta(a->left)) || (a->right && contains_meta(a->right));
}

bool contains_param(const TypePtr& a) {
    if (a->kind == TypeKind::Param) return true;
    return (a->left && contains_param(a->left)) || (a->right && contains_param(a->right));
}

namespace {

// Precedence: 0 arrow, 1 sum, 2 product, 3 prefix constructor, 4 atom.
void print_type(std::ostream& os, const TypePtr& a, int prec) {
    auto open = [&](int p) {
        if (prec > p) os << '(';
    };
    auto close = [&](int p) {
        if (prec > p) os << ')';
    };
    if (TypePtr elem = sig_element(a)) {
        open(3);
        os << "Sig ";
        print_type(os, elem, 4);
        close(3);
        return;
    }
    switch (a->kind) {
        case TypeKind::Unit:
            os << "Unit";
            return;
        case TypeKind::Nat:
            os << "Nat";
            return;
        case TypeKind::Float:
            os << "Float";
            return;
        case TypeKind::Var:
        case TypeKind::Param:
            os << a->name;
            return;
        case TypeKind::Meta:
            os << "?" << a->meta;
            return;
        case TypeKind::Fun:
            open(0);
            print_type(os, a->left, 1);
            os << " -> ";
            print_type(os, a->right, 0);
            close(0);
            return;
        case TypeKind::Sum:
            open(1);
            print_type(os, a->left, 2);
            os << " + ";
            print_type(os, a->right, 1);
            close(1);
            return;
        case TypeKind::Prod:
            open(2);
            print_type(os, a->left, 3);
            os << " * ";
            print_type(os, a->right, 2);
            close(2);
            return;
        case TypeKind::DelayExist:
        case TypeKind::DelayAny:
        case TypeKind::Box:
            open(3);
            os << (a->kind == TypeKind::DelayExist ? "Delay " : a->kind == TypeKind::DelayAny ? "DelayAny " : "Box ");
            print_type(os, a->left, 4);
            close(3);
            return;
        case TypeKind::FixRec:
            open(0);
            os << "Fix " << a->name << ". ";
            print_type(os, a->left, 0);
            close(0);
            return;
    }
}

}  // namespace

std::string to_string(const TypePtr& a) {
    std::ostringstream os;
    print_type(os, a, 0);
    return os.str();
}

// ---------------------------------------------------------------------------
// Channels, clocks
// ---------------------------------------------------------------------------

std::string_view to_string(ChannelClass c) {
    switch (c) {
        case ChannelClass::PushOnly:
            return "push";
        case ChannelClass::BufferedOnly:
            return "buffered";
        case ChannelClass::BufferedPush:
            return "buffered push";
    }
    return "?";
}

InputContext::InputContext(std::initializer_list<ChannelDecl> decls) {
    for (const auto& d : decls) add(d);
}

void InputContext::add(ChannelDecl decl) {
    if (find(decl.name)) throw std::invalid_argument("duplicate input channel '" + decl.name + "'");
    decls_.push_back(std::move(decl));
}

const ChannelDecl* InputContext::find(std::string_view name) const {
    for (const auto& d : decls_)
        if (d.name == name) return &d;
    return nullptr;
}

std::vector<std::string> InputContext::push_channels() const {
    std::vector<std::string> out;
    for (const auto& d : decls_)
        if (is_push(d.cls)) out.push_back(d.name);
    return out;
}

std::vector<std::string> InputContext::buffered_channels() const {
    std::vector<std::string> out;
    for (const auto& d : decls_)
        if (is_buffered(d.cls)) out.push_back(d.name);
    return out;
}

InputContext InputContext::restrict_to(const std::set<std::string>& names) const {
    InputContext out;
    for (const auto& d : decls_)
        if (names.count(d.name)) out.add(d);
    return out;
}

std::string to_string(const Clock& c) {
    std::string out = "{";
    bool first = true;
    for (const auto& ch : c) {
        if (!first) out += ",";
        out += ch;
        first = false;
    }
    return out + "}";
}

ClockPtr clock_of(TermPtr value) {
    return std::make_shared<const ClockExpr>(ClockExpr{ClockExpr::Kind::Of, std::move(value), nullptr, nullptr});
}

ClockPtr clock_union(ClockPtr a, ClockPtr b) {
    return std::make_shared<const ClockExpr>(ClockExpr{ClockExpr::Kind::Union, nullptr, std::move(a), std::move(b)});
}

std::vector<TermPtr> clock_atoms(const ClockPtr& c) {
    std::vector<TermPtr> out;
    std::function<void(const ClockPtr&)> walk = [&](const ClockPtr& e) {
        if (e->kind == ClockExpr::Kind::Of) {
            out.push_back(e->value);
        } else {
            walk(e->left);
            walk(e->right);
        }
    };
    walk(c);
    return out;
}

// ---------------------------------------------------------------------------
// Terms
// ---------------------------------------------------------------------------

std::string_view to_string(PrimOp op) {
    switch (op) {
        case PrimOp::Add:
            return "+";
        case PrimOp::Sub:
            return "-";
        case PrimOp::Mul:
            return "*";
        case PrimOp::Div:
            return "/";
        case PrimOp::Eq:
            return "==";
        case PrimOp::Lt:
            return "<";
        case PrimOp::Le:
            return "<=";
        case PrimOp::Gt:
            return ">";
        case PrimOp::Ge:
            return ">=";
    }
    return "?";
}

bool is_comparison(PrimOp op) { return op >= PrimOp::Eq; }

bool Term::has_free(const std::string& x) const { return std::binary_search(free_.begin(), free_.end(), x); }

namespace {

void merge_free(std::vector<std::string>& into, const std::vector<std::string>& from,
                const std::string* skip1 = nullptr, const std::string* skip2 = nullptr) {
    for (const auto& x : from) {
        if (skip1 && x == *skip1) continue;
        if (skip2 && x == *skip2) continue;
        into.push_back(x);
    }
}

void clock_free(std::vector<std::string>& into, const ClockPtr& c) {
    if (!c) return;
    for (const auto& atom : clock_atoms(c)) merge_free(into, atom->free_vars());
}

}  // namespace

TermPtr finish(std::shared_ptr<Term> t) {
    std::vector<std::string> fv;
    const auto& k = t->kids;
    switch (t->kind) {
        case TermKind::Var:
            fv.push_back(t->name);
            break;
        case TermKind::Lam:
        case TermKind::Fix:
        case TermKind::DFix:
            merge_free(fv, k[0]->free_vars(), &t->name);
            break;
        case TermKind::Let:
            merge_free(fv, k[0]->free_vars());
            merge_free(fv, k[1]->free_vars(), &t->name);
            break;
        case TermKind::Case:
            merge_free(fv, k[0]->free_vars());
            merge_free(fv, k[1]->free_vars(), &t->name);
            merge_free(fv, k[2]->free_vars(), &t->name2);
            break;
        case TermKind::NatRec:
            merge_free(fv, k[0]->free_vars());
            merge_free(fv, k[1]->free_vars(), &t->name, &t->name2);
            merge_free(fv, k[2]->free_vars());
            break;
        default:
            for (const auto& kid : k) merge_free(fv, kid->free_vars());
            break;
    }
    if (t->kind == TermKind::Delay) clock_free(fv, t->clock);
    std::sort(fv.begin(), fv.end());
    fv.erase(std::unique(fv.begin(), fv.end()), fv.end());
    t->free_ = std::move(fv);

    switch (t->kind) {
        case TermKind::Var:
        case TermKind::Unit:
        case TermKind::Nat:
        case TermKind::Lam:
        case TermKind::Loc:
        case TermKind::Await:
        case TermKind::Box:
        case TermKind::DFix:
        case TermKind::Float:
            t->value_ = true;
            break;
        case TermKind::Suc:
        case TermKind::Inj:
        case TermKind::Into:
            t->value_ = k[0]->is_value();
            break;
        case TermKind::Pair:
            t->value_ = k[0]->is_value() && k[1]->is_value();
            break;
        default:
            t->value_ = false;
            break;
    }
    return t;
}

namespace tm {
namespace {
std::shared_ptr<Term> node(TermKind k, Span s, std::vector<TermPtr> kids = {}) {
    auto t = std::make_shared<Term>(k);
    t->span = s;
    t->kids = std::move(kids);
    return t;
}
}  // namespace

TermPtr var(std::string x, Span s) {
    auto t = node(TermKind::Var, s);
    t->name = std::move(x);
    return finish(t);
}
TermPtr unit(Span s) { return finish(node(TermKind::Unit, s)); }
TermPtr zero(Span s) { return nat(0, s); }
TermPtr nat(std::uint64_t n, Span s) {
    auto t = node(TermKind::Nat, s);
    t->nat = n;
    return finish(t);
}
TermPtr suc(TermPtr a, Span s) { return finish(node(TermKind::Suc, s, {std::move(a)})); }
TermPtr lam(std::string x, TermPtr body, Span s) {
    auto t = node(TermKind::Lam, s, {std::move(body)});
    t->name = std::move(x);
    return finish(t);
}
TermPtr pair(TermPtr a, TermPtr b, Span s) { return finish(node(TermKind::Pair, s, {std::move(a), std::move(b)})); }
TermPtr inj(int i, TermPtr a, Span s) {
    auto t = node(TermKind::Inj, s, {std::move(a)});
    t->index = i;
    return finish(t);
}
TermPtr proj(int i, TermPtr a, Span s) {
    auto t = node(TermKind::Proj, s, {std::move(a)});
    t->index = i;
    return finish(t);
}
TermPtr app(TermPtr f, TermPtr a, Span s) { return finish(node(TermKind::App, s, {std::move(f), std::move(a)})); }
TermPtr let(std::string x, TermPtr bound, TermPtr body, Span s) {
    auto t = node(TermKind::Let, s, {std::move(bound), std::move(body)});
    t->name = std::move(x);
    return finish(t);
}
TermPtr case_(TermPtr scrut, std::string x1, TermPtr t1, std::string x2, TermPtr t2, Span s) {
    auto t = node(TermKind::Case, s, {std::move(scrut), std::move(t1), std::move(t2)});
    t->name = std::move(x1);
    t->name2 = std::move(x2);
    return finish(t);
}
TermPtr natrec(TermPtr zero_case, std::string x, std::string y, TermPtr step, TermPtr n, Span s) {
    auto t = node(TermKind::NatRec, s, {std::move(zero_case), std::move(step), std::move(n)});
    t->name = std::move(x);
    t->name2 = std::move(y);
    return finish(t);
}
TermPtr delay(ClockPtr clock, TermPtr body, Span s) {
    auto t = node(TermKind::Delay, s, {std::move(body)});
    t->clock = std::move(clock);
    return finish(t);
}
TermPtr adv(TermPtr a, Span s) { return finish(node(TermKind::Adv, s, {std::move(a)})); }
TermPtr select(TermPtr a, TermPtr b, Span s) { return finish(node(TermKind::Select, s, {std::move(a), std::move(b)})); }
TermPtr never(Span s) { return finish(node(TermKind::Never, s)); }
TermPtr await(std::string channel, Span s) {
    auto t = node(TermKind::Await, s);
    t->name = std::move(channel);
    return finish(t);
}
TermPtr read(std::string channel, Span s) {
    auto t = node(TermKind::Read, s);
    t->name = std::move(channel);
    return finish(t);
}
TermPtr box(TermPtr a, Span s) { return finish(node(TermKind::Box, s, {std::move(a)})); }
TermPtr unbox(TermPtr a, Span s) { return finish(node(TermKind::Unbox, s, {std::move(a)})); }
TermPtr fix(std::string x, TermPtr body, Span s) {
    auto t = node(TermKind::Fix, s, {std::move(body)});
    t->name = std::move(x);
    return finish(t);
}
TermPtr into(TermPtr a, Span s) { return finish(node(TermKind::Into, s, {std::move(a)})); }
TermPtr out(TermPtr a, Span s) { return finish(node(TermKind::Out, s, {std::move(a)})); }
TermPtr loc(Location l) {
    auto t = node(TermKind::Loc, {});
    t->loc = std::move(l);
    return finish(t);
}
TermPtr dfix(std::string x, TermPtr body) {
    auto t = node(TermKind::DFix, {}, {std::move(body)});
    t->name = std::move(x);
    return finish(t);
}
TermPtr flt(double x, Span s) {
    auto t = node(TermKind::Float, s);
    t->number = x;
    return finish(t);
}
TermPtr prim(PrimOp op, TermPtr a, TermPtr b, Span s) {
    auto t = node(TermKind::Prim, s, {std::move(a), std::move(b)});
    t->op = op;
    return finish(t);
}
TermPtr cons(TermPtr head, TermPtr tail, Span s) { return into(pair(std::move(head), std::move(tail), s), s); }
TermPtr boolean(bool b) { return inj(b ? 1 : 2, unit()); }
}  // namespace tm

// ---------------------------------------------------------------------------
// Substitution
// ---------------------------------------------------------------------------

namespace {

std::atomic<std::uint64_t> g_fresh_term_names{0};

std::string fresh_like(const std::string& x) { return x + "~" + std::to_string(g_fresh_term_names++); }

std::shared_ptr<Term> clone(const Term& t) {
    auto c = std::make_shared<Term>(t.kind);
    c->name = t.name;
    c->name2 = t.name2;
    c->index = t.index;
    c->nat = t.nat;
    c->number = t.number;
    c->op = t.op;
    c->loc = t.loc;
    c->clock = t.clock;
    c->kids = t.kids;
    c->span = t.span;
    return c;
}

ClockPtr subst_clock(const ClockPtr& c, const TermPtr& v, const std::string& x);

// Renames binder `from` to `to` inside `body` (to is fresh).
TermPtr rename(const TermPtr& body, const std::string& from, const std::string& to) {
    return subst(body, tm::var(to), from);
}

TermPtr subst_binder_body(const TermPtr& body, const std::string& binder, const TermPtr& v, const std::string& x,
                          std::string& new_binder) {
    new_binder = binder;
    if (binder == x) return body;
    if (!body->has_free(x)) return body;
    if (v->has_free(binder)) {
        new_binder = fresh_like(binder);
        return subst(rename(body, binder, new_binder), v, x);
    }
    return subst(body, v, x);
}

ClockPtr subst_clock(const ClockPtr& c, const TermPtr& v, const std::string& x) {
    if (!c) return c;
    if (c->kind == ClockExpr::Kind::Of) {
        TermPtr nv = subst(c->value, v, x);
        return nv == c->value ? c : clock_of(nv);
    }
    ClockPtr l = subst_clock(c->left, v, x);
    ClockPtr r = subst_clock(c->right, v, x);
    return (l == c->left && r == c->right) ? c : clock_union(l, r);
}

}  // namespace

TermPtr subst(const TermPtr& t, const TermPtr& v, const std::string& x) {
    if (!t->has_free(x)) return t;
    switch (t->kind) {
        case TermKind::Var:
            return v;
        case TermKind::Lam:
        case TermKind::Fix:
        case TermKind::DFix: {
            std::string b;
            TermPtr body = subst_binder_body(t->kids[0], t->name, v, x, b);
            auto c = clone(*t);
            c->name = b;
            c->kids[0] = body;
            return finish(c);
        }
        case TermKind::Let: {
            std::string b;
            TermPtr bound = subst(t->kids[0], v, x);
            TermPtr body = subst_binder_body(t->kids[1], t->name, v, x, b);
            auto c = clone(*t);
            c->name = b;
            c->kids = {bound, body};
            return finish(c);
        }
        case TermKind::Case: {
            std::string b1, b2;
            TermPtr scrut = subst(t->kids[0], v, x);
            TermPtr t1 = subst_binder_body(t->kids[1], t->name, v, x, b1);
            TermPtr t2 = subst_binder_body(t->kids[2], t->name2, v, x, b2);
            auto c = clone(*t);
            c->name = b1;
            c->name2 = b2;
            c->kids = {scrut, t1, t2};
            return finish(c);
        }
        case TermKind::NatRec: {
            TermPtr z = subst(t->kids[0], v, x);
            TermPtr n = subst(t->kids[2], v, x);
            TermPtr step = t->kids[1];
            std::string bx = t->name, by = t->name2;
            if (bx != x && by != x && step->has_free(x)) {
                if (v->has_free(bx)) {
                    std::string f = fresh_like(bx);
                    step = rename(step, bx, f);
                    bx = f;
                }
                if (v->has_free(by)) {
                    std::string f = fresh_like(by);
                    step = rename(step, by, f);
                    by = f;
                }
                step = subst(step, v, x);
            }
            auto c = clone(*t);
            c->name = bx;
            c->name2 = by;
            c->kids = {z, step, n};
            return finish(c);
        }
        default: {
            auto c = clone(*t);
            for (auto& kid : c->kids) kid = subst(kid, v, x);
            if (c->kind == TermKind::Delay) c->clock = subst_clock(c->clock, v, x);
            return finish(c);
        }
    }
}

// ---------------------------------------------------------------------------
// Alpha equivalence and traversals
// ---------------------------------------------------------------------------

namespace {

struct AlphaEnv {
    std::vector<std::pair<std::string, std::string>> binders;

    bool same_var(const std::string& a, const std::string& b) const {
        for (auto it = binders.rbegin(); it != binders.rend(); ++it) {
            bool l = it->first == a;
            bool r = it->second == b;
            if (l || r) return l && r;
        }
        return a == b;
    }
};

bool alpha_in(const TermPtr& a, const TermPtr& b, AlphaEnv& env);

bool alpha_clock(const ClockPtr& a, const ClockPtr& b, AlphaEnv& env) {
    if (!a || !b) return !a && !b;
    if (a->kind != b->kind) return false;
    if (a->kind == ClockExpr::Kind::Of) return alpha_in(a->value, b->value, env);
    return alpha_clock(a->left, b->left, env) && alpha_clock(a->right, b->right, env);
}

bool alpha_under(const TermPtr& a, const TermPtr& b, const std::string& xa, const std::string& xb, AlphaEnv& env) {
    env.binders.emplace_back(xa, xb);
    bool eq = alpha_in(a, b, env);
    env.binders.pop_back();
    return eq;
}

bool alpha_in(const TermPtr& a, const TermPtr& b, AlphaEnv& env) {
    if (a->kind != b->kind) return false;
    switch (a->kind) {
        case TermKind::Var:
            return env.same_var(a->name, b->name);
        case TermKind::Unit:
        case TermKind::Never:
            return true;
        case TermKind::Nat:
            return a->nat == b->nat;
        case TermKind::Float:
            return a->number == b->number || (std::isnan(a->number) && std::isnan(b->number));
        case TermKind::Await:
        case TermKind::Read:
            return a->name == b->name;
        case TermKind::Loc:
            return a->loc.id == b->loc.id && a->loc.clock == b->loc.clock;
        case TermKind::Inj:
        case TermKind::Proj:
            return a->index == b->index && alpha_in(a->kids[0], b->kids[0], env);
        case TermKind::Prim:
            return a->op == b->op && alpha_in(a->kids[0], b->kids[0], env) && alpha_in(a->kids[1], b->kids[1], env);
        case TermKind::Lam:
        case TermKind::Fix:
        case TermKind::DFix:
            return alpha_under(a->kids[0], b->kids[0], a->name, b->name, env);
        case TermKind::Let:
            return alpha_in(a->kids[0], b->kids[0], env) &&
                   alpha_under(a->kids[1], b->kids[1], a->name, b->name, env);
        case TermKind::Case:
            return alpha_in(a->kids[0], b->kids[0], env) &&
                   alpha_under(a->kids[1], b->kids[1], a->name, b->name, env) &&
                   alpha_under(a->kids[2], b->kids[2], a->name2, b->name2, env);
        case TermKind::NatRec: {
            if (!alpha_in(a->kids[0], b->kids[0], env) || !alpha_in(a->kids[2], b->kids[2], env)) return false;
            env.binders.emplace_back(a->name, b->name);
            env.binders.emplace_back(a->name2, b->name2);
            bool eq = alpha_in(a->kids[1], b->kids[1], env);
            env.binders.pop_back();
            env.binders.pop_back();
            return eq;
        }
        case TermKind::Delay:
            return alpha_clock(a->clock, b->clock, env) && alpha_in(a->kids[0], b->kids[0], env);
        default:
            if (a->kids.size() != b->kids.size()) return false;
            for (std::size_t i = 0; i < a->kids.size(); ++i)
                if (!alpha_in(a->kids[i], b->kids[i], env)) return false;
            return true;
    }
}

template <typename F>
void visit(const TermPtr& t, F&& f) {
    f(t);
    for (const auto& k : t->kids) visit(k, f);
    if (t->kind == TermKind::Delay && t->clock)
        for (const auto& atom : clock_atoms(t->clock)) visit(atom, f);
}

}  // namespace

bool alpha_equal(const TermPtr& a, const TermPtr& b) {
    if (a == b) return true;
    AlphaEnv env;
    return alpha_in(a, b, env);
}

bool contains_machine_terms(const TermPtr& t) {
    bool found = false;
    visit(t, [&](const TermPtr& n) {
        if (n->kind == TermKind::Loc || n->kind == TermKind::DFix) found = true;
    });
    return found;
}

bool contains_location(const TermPtr& t) {
    bool found = false;
    visit(t, [&](const TermPtr& n) {
        if (n->kind == TermKind::Loc) found = true;
    });
    return found;
}

void collect_locations(const TermPtr& t, std::set<std::uint64_t>& out) {
    visit(t, [&](const TermPtr& n) {
        if (n->kind == TermKind::Loc) out.insert(n->loc.id);
    });
}

std::optional<std::uint64_t> as_numeral(const TermPtr& t) {
    std::uint64_t extra = 0;
    const Term* cur = t.get();
    while (cur->kind == TermKind::Suc) {
        ++extra;
        cur = cur->kids[0].get();
    }
    if (cur->kind != TermKind::Nat) return std::nullopt;
    return cur->nat + extra;
}

std::size_t term_size(const TermPtr& t) {
    std::size_t n = 0;
    visit(t, [&](const TermPtr&) { ++n; });
    return n;
}

// ---------------------------------------------------------------------------
// Printing
// ---------------------------------------------------------------------------

namespace {

// 0 block forms and `;`, 1 `::`, 2 comparison, 3 additive, 4 multiplicative,
// 5 application / prefix, 6 atom.
class Printer {
public:
    explicit Printer(const PrintOptions& o) : opts_(o) {}

    void term(const TermPtr& t, int prec) {
        switch (t->kind) {
            case TermKind::Var:
                os_ << t->name;
                return;
            case TermKind::Unit:
                os_ << "()";
                return;
            case TermKind::Nat:
                os_ << t->nat;
                return;
            case TermKind::Float:
                number(t->number);
                return;
            case TermKind::Never:
                os_ << "never";
                return;
            case TermKind::Loc:
                if (opts_.compact_locations)
                    os_ << "l" << t->loc.id;
                else
                    os_ << "#" << t->loc.id << to_string(t->loc.clock);
                return;
            case TermKind::Pair:
                os_ << '(';
                term(t->kids[0], 0);
                os_ << ", ";
                term(t->kids[1], 0);
                os_ << ')';
                return;
            case TermKind::Await:
            case TermKind::Read:
                open(prec, 5);
                os_ << (t->kind == TermKind::Await ? "await " : "read ") << t->name;
                close(prec, 5);
                return;
            case TermKind::Unbox:
                if (opts_.globals && t->kids[0]->kind == TermKind::Var && opts_.globals->count(t->kids[0]->name)) {
                    os_ << t->kids[0]->name;
                    return;
                }
                prefix(prec, "unbox", t->kids[0]);
                return;
            case TermKind::Suc:
                prefix(prec, "suc", t->kids[0]);
                return;
            case TermKind::Inj:
                prefix(prec, t->index == 1 ? "in1" : "in2", t->kids[0]);
                return;
            case TermKind::Proj:
                prefix(prec, t->index == 1 ? "fst" : "snd", t->kids[0]);
                return;
            case TermKind::Adv:
                prefix(prec, "adv", t->kids[0]);
                return;
            case TermKind::Box:
                prefix(prec, "box", t->kids[0]);
                return;
            case TermKind::Out:
                prefix(prec, "out", t->kids[0]);
                return;
            case TermKind::Into:
                if (t->kids[0]->kind == TermKind::Pair) {
                    open(prec, 1);
                    term(t->kids[0]->kids[0], 2);
                    os_ << " :: ";
                    term(t->kids[0]->kids[1], 1);
                    close(prec, 1);
                    return;
                }
                prefix(prec, "into", t->kids[0]);
                return;
            case TermKind::Select:
                open(prec, 5);
                os_ << "select ";
                term(t->kids[0], 6);
                os_ << ' ';
                term(t->kids[1], 6);
                close(prec, 5);
                return;
            case TermKind::Delay:
                open(prec, 5);
                os_ << "delay";
                if (t->clock) {
                    os_ << '{';
                    bool first = true;
                    for (const auto& atom : clock_atoms(t->clock)) {
                        if (!first) os_ << ", ";
                        term(atom, 0);
                        first = false;
                    }
                    os_ << '}';
                }
                os_ << ' ';
                term(t->kids[0], 6);
                close(prec, 5);
                return;
            case TermKind::App: {
                open(prec, 5);
                std::vector<TermPtr> args;
                TermPtr head = t;
                while (head->kind == TermKind::App) {
                    args.push_back(head->kids[1]);
                    head = head->kids[0];
                }
                term(head, 5);
                for (auto it = args.rbegin(); it != args.rend(); ++it) {
                    os_ << ' ';
                    term(*it, 6);
                }
                close(prec, 5);
                return;
            }
            case TermKind::Prim: {
                int p = is_comparison(t->op) ? 2 : (t->op == PrimOp::Add || t->op == PrimOp::Sub) ? 3 : 4;
                open(prec, p);
                // Comparisons are non-associative; arithmetic is left-associative.
                term(t->kids[0], is_comparison(t->op) ? p + 1 : p);
                os_ << ' ' << to_string(t->op) << ' ';
                term(t->kids[1], p + 1);
                close(prec, p);
                return;
            }
            case TermKind::Lam: {
                open(prec, 0);
                os_ << '\\' << t->name;
                TermPtr body = t->kids[0];
                while (body->kind == TermKind::Lam) {
                    os_ << ' ' << body->name;
                    body = body->kids[0];
                }
                os_ << " -> ";
                term(body, 0);
                close(prec, 0);
                return;
            }
            case TermKind::Fix:
            case TermKind::DFix:
                open(prec, 0);
                os_ << (t->kind == TermKind::Fix ? "fix " : "dfix ") << t->name << " -> ";
                term(t->kids[0], 0);
                close(prec, 0);
                return;
            case TermKind::Let:
                open(prec, 0);
                if (t->name == "_") {
                    term(t->kids[0], 1);
                    os_ << "; ";
                    term(t->kids[1], 0);
                } else {
                    os_ << "let " << t->name << " = ";
                    term(t->kids[0], 0);
                    os_ << " in ";
                    term(t->kids[1], 0);
                }
                close(prec, 0);
                return;
            case TermKind::Case:
                open(prec, 0);
                os_ << "case ";
                term(t->kids[0], 0);
                os_ << " of | in1 " << t->name << " -> ";
                term(t->kids[1], 1);
                os_ << " | in2 " << t->name2 << " -> ";
                term(t->kids[2], 1);
                close(prec, 0);
                return;
            case TermKind::NatRec:
                open(prec, 0);
                os_ << "natrec ";
                term(t->kids[2], 0);
                os_ << " with zero -> ";
                term(t->kids[0], 1);
                os_ << " | suc " << t->name << ' ' << t->name2 << " -> ";
                term(t->kids[1], 1);
                close(prec, 0);
                return;
        }
    }

    std::string str() const { return os_.str(); }

private:
    void open(int prec, int p) {
        if (prec > p) os_ << '(';
    }
    void close(int prec, int p) {
        if (prec > p) os_ << ')';
    }
    void prefix(int prec, const char* kw, const TermPtr& arg) {
        open(prec, 5);
        os_ << kw << ' ';
        term(arg, 6);
        close(prec, 5);
    }
    void number(double x) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.17g", x);
        std::string s = buf;
        if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
        os_ << s;
    }

    const PrintOptions& opts_;
    std::ostringstream os_;
};

}  // namespace

std::string to_string(const TermPtr& t, const PrintOptions& opts) {
    Printer p(opts);
    p.term(t, 0);
    return p.str();
}

std::string to_string(const ClockPtr& c, const PrintOptions& opts) {
    std::string out;
    bool first = true;
    for (const auto& atom : clock_atoms(c)) {
        if (!first) out += " \\/ ";
        out += "cl(" + to_string(atom, opts) + ")";
        first = false;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Stores
// ---------------------------------------------------------------------------

const HeapCell* Store::find(std::uint64_t id) const {
    if (now) {
        auto it = now->heap.find(id);
        if (it != now->heap.end()) return &it->second;
    }
    auto it = later.find(id);
    return it == later.end() ? nullptr : &it->second;
}

}  // namespace asyncratt
