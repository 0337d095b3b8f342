#include "asyncratt/typecheck.hpp"

#include <algorithm>
#include <functional>

namespace asyncratt {

std::string_view to_string(TypeErrorKind k) {
    switch (k) {
        case TypeErrorKind::UnboundVariable:
            return "UnboundVariable";
        case TypeErrorKind::VariableCrossesTick:
            return "VariableCrossesTick";
        case TypeErrorKind::TickInLambdaContext:
            return "TickInLambdaContext";
        case TypeErrorKind::SecondTick:
            return "SecondTick";
        case TypeErrorKind::ClockMismatch:
            return "ClockMismatch";
        case TypeErrorKind::NotStable:
            return "NotStable";
        case TypeErrorKind::NotValueType:
            return "NotValueType";
        case TypeErrorKind::ChannelClassMismatch:
            return "ChannelClassMismatch";
        case TypeErrorKind::Mismatch:
            return "Mismatch";
        case TypeErrorKind::CannotInfer:
            return "CannotInfer";
    }
    return "?";
}

TypeError::TypeError(TypeErrorKind k, Span s, std::string msg)
    : std::runtime_error(std::string(to_string(k)) + ": " + msg), kind(k), span(s), message(std::move(msg)) {}

namespace {

std::string atom_key(const TermPtr& v) {
    switch (v->kind) {
        case TermKind::Var:
            return "v:" + v->name;
        case TermKind::Await:
            return "a:" + v->name;
        case TermKind::Loc:
            return "l:" + std::to_string(v->loc.id);
        default:
            return "t:" + to_string(v);
    }
}

std::set<std::string> clock_keys(const ClockPtr& c) {
    std::set<std::string> out;
    for (const auto& atom : clock_atoms(c)) out.insert(atom_key(atom));
    return out;
}

enum class Stability { Yes, No, Unknown };

class Checker {
public:
    Checker(const InputContext& delta, CheckOptions opts) : delta_(delta), opts_(opts) {}

    TypingContext ctx;

    TypePtr infer(const TermPtr& t);
    void check(const TermPtr& t, const TypePtr& expected);
    void check_clock(const ClockPtr& theta, Span span);

    void finish() {
        for (const auto& d : deferred_) {
            if (d.numeric) {
                TypePtr z = zonk(d.type);
                if (z->kind == TypeKind::Meta)
                    throw TypeError(TypeErrorKind::CannotInfer, d.span, d.message);
                if (z->kind != TypeKind::Nat && z->kind != TypeKind::Float)
                    throw TypeError(TypeErrorKind::Mismatch, d.span, d.message + ": expects Nat or Float, found " + to_string(z));
                continue;
            }
            switch (stability(d.type)) {
                case Stability::Yes:
                    break;
                case Stability::No:
                    throw TypeError(d.kind, d.span, d.message + " (type " + to_string(zonk(d.type)) + ")");
                case Stability::Unknown:
                    throw TypeError(TypeErrorKind::CannotInfer, d.span,
                                    "cannot determine whether " + to_string(zonk(d.type)) + " is stable");
            }
        }
        deferred_.clear();
    }

    TypePtr zonk(const TypePtr& a) const {
        switch (a->kind) {
            case TypeKind::Meta: {
                const TypePtr& sol = metas_[a->meta];
                return sol ? zonk(sol) : a;
            }
            case TypeKind::Prod:
                return ty::prod(zonk(a->left), zonk(a->right));
            case TypeKind::Sum:
                return ty::sum(zonk(a->left), zonk(a->right));
            case TypeKind::Fun:
                return ty::fun(zonk(a->left), zonk(a->right));
            case TypeKind::DelayExist:
                return ty::later(zonk(a->left));
            case TypeKind::DelayAny:
                return ty::any(zonk(a->left));
            case TypeKind::Box:
                return ty::box(zonk(a->left));
            case TypeKind::FixRec:
                return ty::fix(a->name, zonk(a->left));
            default:
                return a;
        }
    }

private:
    struct Deferred {
        TypePtr type;
        TypeErrorKind kind;
        Span span;
        std::string message;
        bool numeric = false;
    };

    const InputContext& delta_;
    CheckOptions opts_;
    std::vector<TypePtr> metas_;
    std::vector<Deferred> deferred_;

    [[noreturn]] static void fail(TypeErrorKind k, Span s, std::string msg) { throw TypeError(k, s, std::move(msg)); }

    TypePtr fresh() {
        metas_.push_back(nullptr);
        return ty::meta(static_cast<int>(metas_.size() - 1));
    }

    TypePtr head(TypePtr a) const {
        while (a->kind == TypeKind::Meta && metas_[a->meta]) a = metas_[a->meta];
        return a;
    }

    bool occurs(int id, const TypePtr& a) const {
        TypePtr h = head(a);
        if (h->kind == TypeKind::Meta) return h->meta == id;
        return (h->left && occurs(id, h->left)) || (h->right && occurs(id, h->right));
    }

    bool unify_rec(const TypePtr& x, const TypePtr& y) {
        TypePtr a = head(x), b = head(y);
        if (a->kind == TypeKind::Meta && b->kind == TypeKind::Meta && a->meta == b->meta) return true;
        if (a->kind == TypeKind::Meta) {
            if (occurs(a->meta, b)) return false;
            metas_[a->meta] = b;
            return true;
        }
        if (b->kind == TypeKind::Meta) {
            if (occurs(b->meta, a)) return false;
            metas_[b->meta] = a;
            return true;
        }
        if (a->kind != b->kind) return false;
        switch (a->kind) {
            case TypeKind::Unit:
            case TypeKind::Nat:
            case TypeKind::Float:
                return true;
            case TypeKind::Prod:
            case TypeKind::Sum:
            case TypeKind::Fun:
                return unify_rec(a->left, b->left) && unify_rec(a->right, b->right);
            case TypeKind::DelayExist:
            case TypeKind::DelayAny:
            case TypeKind::Box:
                return unify_rec(a->left, b->left);
            case TypeKind::FixRec: {
                if (a->name == b->name) return unify_rec(a->left, b->left);
                TypePtr common = ty::var("%" + std::to_string(metas_.size()) + a->name);
                return unify_rec(subst_type(a->left, a->name, common), subst_type(b->left, b->name, common));
            }
            case TypeKind::Var:
            case TypeKind::Param:
                return a->name == b->name;
            case TypeKind::Meta:
                return false;
        }
        return false;
    }

    void unify(const TypePtr& expected, const TypePtr& found, Span span, const std::string& what = {}) {
        if (!unify_rec(expected, found)) {
            std::string msg = "expected " + to_string(zonk(expected)) + ", found " + to_string(zonk(found));
            if (!what.empty()) msg = what + ": " + msg;
            fail(TypeErrorKind::Mismatch, span, msg);
        }
    }

    Stability stability(const TypePtr& x) const {
        TypePtr a = head(x);
        switch (a->kind) {
            case TypeKind::Unit:
            case TypeKind::Nat:
            case TypeKind::Float:
            case TypeKind::DelayAny:
            case TypeKind::Box:
                return Stability::Yes;
            case TypeKind::Prod:
            case TypeKind::Sum: {
                Stability l = stability(a->left), r = stability(a->right);
                if (l == Stability::No || r == Stability::No) return Stability::No;
                if (l == Stability::Unknown || r == Stability::Unknown) return Stability::Unknown;
                return Stability::Yes;
            }
            case TypeKind::Param:
                return opts_.stable_params && opts_.stable_params->count(a->name) ? Stability::Yes : Stability::No;
            case TypeKind::Meta:
                return Stability::Unknown;
            default:
                return Stability::No;
        }
    }

    void require_stable(const TypePtr& a, TypeErrorKind kind, Span span, const std::string& msg) {
        switch (stability(a)) {
            case Stability::Yes:
                return;
            case Stability::No:
                fail(kind, span, msg + " (type " + to_string(zonk(a)) + ")");
            case Stability::Unknown:
                deferred_.push_back({a, kind, span, msg});
                return;
        }
    }

    // Context helpers ------------------------------------------------------

    /// Index of the tick visible from the end of the context, if any.
    std::optional<std::size_t> visible_tick() const {
        for (std::size_t i = ctx.size(); i-- > 0;) {
            if (ctx[i].kind == CtxEntry::Kind::Lock) return std::nullopt;
            if (ctx[i].kind == CtxEntry::Kind::Tick) return i;
        }
        return std::nullopt;
    }

    template <typename F>
    auto in_prefix(std::size_t n, F&& f) {
        TypingContext suffix(std::make_move_iterator(ctx.begin() + static_cast<std::ptrdiff_t>(n)),
                             std::make_move_iterator(ctx.end()));
        ctx.resize(n);
        struct Restore {
            TypingContext& ctx;
            TypingContext& suffix;
            ~Restore() {
                for (auto& e : suffix) ctx.push_back(std::move(e));
            }
        } restore{ctx, suffix};
        return f();
    }

    struct Scope {
        TypingContext& ctx;
        std::size_t n;
        ~Scope() { ctx.resize(n); }
    };

    Scope push(CtxEntry e) {
        std::size_t n = ctx.size();
        ctx.push_back(std::move(e));
        return Scope{ctx, n};
    }

    Scope push_lock() {
        CtxEntry e;
        e.kind = CtxEntry::Kind::Lock;
        return push(std::move(e));
    }

    TypePtr lookup(const std::string& x, Span span) {
        bool tick = false, lock = false;
        for (std::size_t i = ctx.size(); i-- > 0;) {
            const CtxEntry& e = ctx[i];
            if (e.kind == CtxEntry::Kind::Tick) {
                tick = true;
            } else if (e.kind == CtxEntry::Kind::Lock) {
                lock = true;
            } else if (e.name == x) {
                if (!tick && !lock) return e.type;
                if (lock)
                    require_stable(e.type, TypeErrorKind::UnboundVariable, span,
                                   "variable '" + x + "' is not stable and is unavailable in a stable context");
                else
                    require_stable(e.type, TypeErrorKind::VariableCrossesTick, span,
                                   "variable '" + x + "' of non-stable type is used after a tick");
                return e.type;
            }
        }
        if (opts_.globals) {
            auto it = opts_.globals->find(x);
            if (it != opts_.globals->end()) return ty::box(instantiate(x, it->second, span));
        }
        fail(TypeErrorKind::UnboundVariable, span, "unbound variable '" + x + "'");
    }

    TypePtr replace_params(const TypePtr& a, const std::map<std::string, TypePtr>& m) {
        switch (a->kind) {
            case TypeKind::Param: {
                auto it = m.find(a->name);
                return it == m.end() ? a : it->second;
            }
            case TypeKind::Prod:
                return ty::prod(replace_params(a->left, m), replace_params(a->right, m));
            case TypeKind::Sum:
                return ty::sum(replace_params(a->left, m), replace_params(a->right, m));
            case TypeKind::Fun:
                return ty::fun(replace_params(a->left, m), replace_params(a->right, m));
            case TypeKind::DelayExist:
                return ty::later(replace_params(a->left, m));
            case TypeKind::DelayAny:
                return ty::any(replace_params(a->left, m));
            case TypeKind::Box:
                return ty::box(replace_params(a->left, m));
            case TypeKind::FixRec:
                return ty::fix(a->name, replace_params(a->left, m));
            default:
                return a;
        }
    }

    TypePtr instantiate(const std::string& g, const Scheme& s, Span span) {
        std::map<std::string, TypePtr> m;
        for (const auto& p : s.params) m[p] = fresh();
        for (const auto& p : s.stable)
            require_stable(m.at(p), TypeErrorKind::NotStable, span,
                           "'" + g + "' requires a stable instance for " + p);
        return replace_params(s.type, m);
    }

    void require_value(const TermPtr& v, const char* form) {
        if (!v->is_value())
            fail(TypeErrorKind::Mismatch, v->span, std::string(form) + " applies only to values");
    }

    TypePtr expect_later(const TermPtr& v, Span span) {
        TypePtr a = head(infer(v));
        if (a->kind == TypeKind::Meta) {
            TypePtr inner = fresh();
            unify(ty::later(inner), a, span);
            return inner;
        }
        if (a->kind != TypeKind::DelayExist)
            fail(TypeErrorKind::Mismatch, span, "expected a delayed computation, found " + to_string(zonk(a)));
        return a->left;
    }

    TypePtr infer_spine(const TermPtr& t, const TypePtr* expected);
    TypePtr infer_prim(const TermPtr& t, const TypePtr* expected);
};

void Checker::check_clock(const ClockPtr& theta, Span span) {
    for (const auto& atom : clock_atoms(theta)) {
        if (!atom->is_value() || (atom->kind != TermKind::Var && atom->kind != TermKind::Await))
            fail(TypeErrorKind::Mismatch, atom->span.known() ? atom->span : span,
                 "clock expressions take variables or await references");
        expect_later(atom, atom->span.known() ? atom->span : span);
    }
}

TypePtr Checker::infer_spine(const TermPtr& t, const TypePtr* expected) {
    std::vector<TermPtr> args;
    TermPtr h = t;
    while (h->kind == TermKind::App) {
        args.push_back(h->kids[1]);
        h = h->kids[0];
    }
    std::reverse(args.begin(), args.end());
    TypePtr f = infer(h);
    std::vector<TypePtr> params;
    for (const auto& arg : args) {
        TypePtr fh = head(f);
        if (fh->kind == TypeKind::Meta) {
            TypePtr a = fresh(), b = fresh();
            unify(ty::fun(a, b), fh, arg->span);
            fh = head(f);
        }
        if (fh->kind != TypeKind::Fun)
            fail(TypeErrorKind::Mismatch, t->span, "applying a non-function of type " + to_string(zonk(f)));
        params.push_back(fh->left);
        f = fh->right;
    }
    if (expected) unify(*expected, f, t->span);
    for (std::size_t i = 0; i < args.size(); ++i) check(args[i], params[i]);
    return f;
}

TypePtr Checker::infer_prim(const TermPtr& t, const TypePtr* expected) {
    const TermPtr& a = t->kids[0];
    const TermPtr& b = t->kids[1];
    auto numeric = [&](const TypePtr& x) {
        TypePtr h = head(x);
        return h->kind == TypeKind::Nat || h->kind == TypeKind::Float;
    };
    TypePtr operand;
    if (!is_comparison(t->op) && expected && numeric(*expected)) {
        operand = head(*expected);
        check(a, operand);
        check(b, operand);
    } else {
        TypePtr ta = head(infer(a));
        if (numeric(ta)) {
            check(b, ta);
            operand = ta;
        } else if (ta->kind == TypeKind::Meta) {
            TypePtr tb = head(infer(b));
            unify(tb, ta, a->span);
            operand = head(tb);
            if (operand->kind == TypeKind::Meta)
                deferred_.push_back({operand, TypeErrorKind::CannotInfer, t->span,
                                     "cannot resolve the operand type of " + std::string(to_string(t->op)), true});
            else if (!numeric(operand))
                fail(TypeErrorKind::Mismatch, b->span,
                     "operator " + std::string(to_string(t->op)) + " expects Nat or Float, found " + to_string(zonk(operand)));
        } else {
            fail(TypeErrorKind::Mismatch, a->span,
                 "operator " + std::string(to_string(t->op)) + " expects Nat or Float, found " + to_string(zonk(ta)));
        }
    }
    return is_comparison(t->op) ? ty::boolean() : operand;
}

TypePtr Checker::infer(const TermPtr& t) {
    switch (t->kind) {
        case TermKind::Var:
            return lookup(t->name, t->span);
        case TermKind::Unit:
            return ty::unit();
        case TermKind::Nat:
            return ty::nat();
        case TermKind::Float:
            return ty::flt();
        case TermKind::Suc:
            check(t->kids[0], ty::nat());
            return ty::nat();
        case TermKind::Prim:
            return infer_prim(t, nullptr);
        case TermKind::Lam: {
            TypePtr a = fresh(), b = fresh();
            check(t, ty::fun(a, b));
            return ty::fun(a, b);
        }
        case TermKind::Pair: {
            TypePtr a = infer(t->kids[0]);
            TypePtr b = infer(t->kids[1]);
            return ty::prod(a, b);
        }
        case TermKind::Inj: {
            TypePtr a = fresh(), b = fresh();
            TypePtr s = ty::sum(a, b);
            check(t, s);
            return s;
        }
        case TermKind::Proj: {
            TypePtr p = head(infer(t->kids[0]));
            if (p->kind == TypeKind::Meta) {
                TypePtr a = fresh(), b = fresh();
                unify(ty::prod(a, b), p, t->span);
                p = head(p);
            }
            if (p->kind != TypeKind::Prod)
                fail(TypeErrorKind::Mismatch, t->span, "projection from non-product " + to_string(zonk(p)));
            return t->index == 1 ? p->left : p->right;
        }
        case TermKind::App:
            return infer_spine(t, nullptr);
        case TermKind::Let: {
            TypePtr a = infer(t->kids[0]);
            auto scope = push(CtxEntry::var(t->name, a));
            return infer(t->kids[1]);
        }
        case TermKind::Case: {
            TypePtr s = head(infer(t->kids[0]));
            if (s->kind == TypeKind::Meta) {
                TypePtr a = fresh(), b = fresh();
                unify(ty::sum(a, b), s, t->span);
                s = head(s);
            }
            if (s->kind != TypeKind::Sum)
                fail(TypeErrorKind::Mismatch, t->kids[0]->span, "case on non-sum " + to_string(zonk(s)));
            TypePtr r;
            {
                auto scope = push(CtxEntry::var(t->name, s->left));
                r = infer(t->kids[1]);
            }
            auto scope = push(CtxEntry::var(t->name2, s->right));
            check(t->kids[2], r);
            return r;
        }
        case TermKind::NatRec: {
            check(t->kids[2], ty::nat());
            TypePtr a = infer(t->kids[0]);
            auto sx = push(CtxEntry::var(t->name, ty::nat()));
            auto sy = push(CtxEntry::var(t->name2, a));
            check(t->kids[1], a);
            return a;
        }
        case TermKind::Delay: {
            TypePtr a = fresh();
            check(t, ty::later(a));
            return ty::later(a);
        }
        case TermKind::Adv: {
            const TermPtr& v = t->kids[0];
            require_value(v, "adv");
            auto tick = visible_tick();
            if (!tick) fail(TypeErrorKind::ClockMismatch, t->span, "adv outside the scope of a tick");
            ClockPtr theta = ctx[*tick].clock;
            TypePtr vt = in_prefix(*tick, [&] { return head(infer(v)); });
            if (vt->kind == TypeKind::DelayAny && v->kind == TermKind::Var) return vt->left;
            if (vt->kind == TypeKind::Meta) {
                TypePtr inner = fresh();
                unify(ty::later(inner), vt, v->span);
                vt = head(vt);
            }
            if (vt->kind != TypeKind::DelayExist)
                fail(TypeErrorKind::Mismatch, v->span, "adv of non-delayed type " + to_string(zonk(vt)));
            if (!clock_equal(theta, clock_of(v)))
                fail(TypeErrorKind::ClockMismatch, t->span,
                     "adv " + to_string(v) + " under a tick on " + to_string(theta));
            return vt->left;
        }
        case TermKind::Select: {
            const TermPtr& v1 = t->kids[0];
            const TermPtr& v2 = t->kids[1];
            require_value(v1, "select");
            require_value(v2, "select");
            auto tick = visible_tick();
            if (!tick) fail(TypeErrorKind::ClockMismatch, t->span, "select outside the scope of a tick");
            ClockPtr theta = ctx[*tick].clock;
            TypePtr a1, a2;
            in_prefix(*tick, [&] {
                a1 = expect_later(v1, v1->span);
                a2 = expect_later(v2, v2->span);
                return 0;
            });
            if (!clock_equal(theta, clock_union(clock_of(v1), clock_of(v2))))
                fail(TypeErrorKind::ClockMismatch, t->span,
                     "select " + to_string(v1) + " " + to_string(v2) + " under a tick on " + to_string(theta));
            return ty::sum(ty::sum(ty::prod(a1, ty::later(a2)), ty::prod(ty::later(a1), a2)), ty::prod(a1, a2));
        }
        case TermKind::Never:
            return ty::later(fresh());
        case TermKind::Await: {
            const ChannelDecl* d = delta_.find(t->name);
            if (!d) fail(TypeErrorKind::UnboundVariable, t->span, "undeclared input channel '" + t->name + "'");
            if (!is_push(d->cls))
                fail(TypeErrorKind::ChannelClassMismatch, t->span,
                     "await on channel '" + t->name + "' which is " + std::string(to_string(d->cls)));
            return ty::later(d->type);
        }
        case TermKind::Read: {
            const ChannelDecl* d = delta_.find(t->name);
            if (!d) fail(TypeErrorKind::UnboundVariable, t->span, "undeclared input channel '" + t->name + "'");
            if (!is_buffered(d->cls))
                fail(TypeErrorKind::ChannelClassMismatch, t->span,
                     "read on channel '" + t->name + "' which is " + std::string(to_string(d->cls)));
            return d->type;
        }
        case TermKind::Box: {
            auto lock = push_lock();
            return ty::box(infer(t->kids[0]));
        }
        case TermKind::Unbox: {
            TypePtr b = head(infer(t->kids[0]));
            if (b->kind == TypeKind::Meta) {
                TypePtr a = fresh();
                unify(ty::box(a), b, t->span);
                b = head(b);
            }
            if (b->kind != TypeKind::Box)
                fail(TypeErrorKind::Mismatch, t->span, "unbox of non-boxed type " + to_string(zonk(b)));
            return b->left;
        }
        case TermKind::Fix: {
            TypePtr a = fresh();
            check(t, a);
            return a;
        }
        case TermKind::Into: {
            TypePtr p = head(infer(t->kids[0]));
            if (p->kind == TypeKind::Prod) {
                TypePtr s = ty::sig(zonk(p->left));
                unify(ty::later(s), p->right, t->span, "signal tail");
                return s;
            }
            fail(TypeErrorKind::CannotInfer, t->span, "cannot infer the recursive type for into");
        }
        case TermKind::Out: {
            TypePtr a = head(infer(t->kids[0]));
            if (a->kind != TypeKind::FixRec) {
                if (a->kind == TypeKind::Meta)
                    fail(TypeErrorKind::CannotInfer, t->span, "cannot infer the recursive type for out");
                fail(TypeErrorKind::Mismatch, t->span, "out of non-recursive type " + to_string(zonk(a)));
            }
            return unfold(a);
        }
        case TermKind::Loc:
        case TermKind::DFix:
            fail(TypeErrorKind::Mismatch, t->span, "machine-only term is not typable");
    }
    fail(TypeErrorKind::Mismatch, t->span, "unknown term");
}

void Checker::check(const TermPtr& t, const TypePtr& expected) {
    TypePtr e = head(expected);
    switch (t->kind) {
        case TermKind::Lam: {
            if (visible_tick())
                fail(TypeErrorKind::TickInLambdaContext, t->span, "lambda abstraction under a tick");
            if (e->kind == TypeKind::Meta) {
                TypePtr a = fresh(), b = fresh();
                unify(ty::fun(a, b), e, t->span);
                e = head(e);
            }
            if (e->kind != TypeKind::Fun)
                fail(TypeErrorKind::Mismatch, t->span, "lambda checked against " + to_string(zonk(e)));
            auto scope = push(CtxEntry::var(t->name, e->left));
            check(t->kids[0], e->right);
            return;
        }
        case TermKind::Pair:
            if (e->kind == TypeKind::Prod) {
                check(t->kids[0], e->left);
                check(t->kids[1], e->right);
                return;
            }
            break;
        case TermKind::Inj:
            if (e->kind == TypeKind::Meta) {
                TypePtr a = fresh(), b = fresh();
                unify(ty::sum(a, b), e, t->span);
                e = head(e);
            }
            if (e->kind != TypeKind::Sum)
                fail(TypeErrorKind::Mismatch, t->span, "injection checked against " + to_string(zonk(e)));
            check(t->kids[0], t->index == 1 ? e->left : e->right);
            return;
        case TermKind::App:
            infer_spine(t, &expected);
            return;
        case TermKind::Prim:
            unify(expected, infer_prim(t, &expected), t->span);
            return;
        case TermKind::Let: {
            TypePtr a = infer(t->kids[0]);
            auto scope = push(CtxEntry::var(t->name, a));
            check(t->kids[1], expected);
            return;
        }
        case TermKind::Case: {
            TypePtr s = head(infer(t->kids[0]));
            if (s->kind == TypeKind::Meta) {
                TypePtr a = fresh(), b = fresh();
                unify(ty::sum(a, b), s, t->span);
                s = head(s);
            }
            if (s->kind != TypeKind::Sum)
                fail(TypeErrorKind::Mismatch, t->kids[0]->span, "case on non-sum " + to_string(zonk(s)));
            {
                auto scope = push(CtxEntry::var(t->name, s->left));
                check(t->kids[1], expected);
            }
            auto scope = push(CtxEntry::var(t->name2, s->right));
            check(t->kids[2], expected);
            return;
        }
        case TermKind::NatRec: {
            check(t->kids[2], ty::nat());
            check(t->kids[0], expected);
            auto sx = push(CtxEntry::var(t->name, ty::nat()));
            auto sy = push(CtxEntry::var(t->name2, expected));
            check(t->kids[1], expected);
            return;
        }
        case TermKind::Delay: {
            if (visible_tick()) fail(TypeErrorKind::SecondTick, t->span, "delay under a tick would need a second tick");
            if (!t->clock) fail(TypeErrorKind::CannotInfer, t->span, "delay without a clock");
            check_clock(t->clock, t->span);
            if (e->kind == TypeKind::Meta) {
                TypePtr a = fresh();
                unify(ty::later(a), e, t->span);
                e = head(e);
            }
            if (e->kind != TypeKind::DelayExist)
                fail(TypeErrorKind::Mismatch, t->span, "delay checked against " + to_string(zonk(e)));
            auto scope = push(CtxEntry::tick(t->clock));
            check(t->kids[0], e->left);
            return;
        }
        case TermKind::Never:
            if (e->kind == TypeKind::Meta) {
                TypePtr a = fresh();
                unify(ty::later(a), e, t->span);
                return;
            }
            if (e->kind != TypeKind::DelayExist)
                fail(TypeErrorKind::Mismatch, t->span, "never checked against " + to_string(zonk(e)));
            return;
        case TermKind::Box: {
            if (e->kind == TypeKind::Meta) {
                TypePtr a = fresh();
                unify(ty::box(a), e, t->span);
                e = head(e);
            }
            if (e->kind != TypeKind::Box)
                fail(TypeErrorKind::Mismatch, t->span, "box checked against " + to_string(zonk(e)));
            auto lock = push_lock();
            check(t->kids[0], e->left);
            return;
        }
        case TermKind::Fix: {
            auto lock = push_lock();
            auto self = push(CtxEntry::var(t->name, ty::any(expected)));
            check(t->kids[0], expected);
            return;
        }
        case TermKind::Into:
            if (e->kind == TypeKind::FixRec) {
                check(t->kids[0], unfold(e));
                return;
            }
            break;
        default:
            break;
    }
    TypePtr found = infer(t);
    unify(expected, found, t->span);
}

}  // namespace

bool clock_equal(const ClockPtr& a, const ClockPtr& b) { return clock_keys(a) == clock_keys(b); }

void check_ctx(const InputContext& delta, const TypingContext& gamma) {
    bool seen_tick = false;
    for (std::size_t i = 0; i < gamma.size(); ++i) {
        const CtxEntry& e = gamma[i];
        if (e.kind == CtxEntry::Kind::Lock) {
            seen_tick = false;
            continue;
        }
        if (e.kind != CtxEntry::Kind::Tick) continue;
        if (seen_tick) throw TypeError(TypeErrorKind::SecondTick, {}, "context contains a second tick");
        seen_tick = true;
        if (!e.clock) throw TypeError(TypeErrorKind::CannotInfer, {}, "tick without a clock");
        TypingContext prefix(gamma.begin(), gamma.begin() + static_cast<std::ptrdiff_t>(i));
        check_clock(delta, prefix, e.clock);
    }
}

void check_clock(const InputContext& delta, const TypingContext& gamma, const ClockPtr& theta) {
    Checker c(delta, {});
    c.ctx = gamma;
    c.check_clock(theta, {});
    c.finish();
}

TypePtr infer(const InputContext& delta, const TypingContext& gamma, const TermPtr& t, const CheckOptions& opts) {
    Checker c(delta, opts);
    c.ctx = gamma;
    TypePtr a = c.infer(t);
    c.finish();
    a = c.zonk(a);
    if (contains_meta(a)) throw TypeError(TypeErrorKind::CannotInfer, t->span, "type not determined: " + to_string(a));
    return a;
}

void check(const InputContext& delta, const TypingContext& gamma, const TermPtr& t, const TypePtr& expected,
           const CheckOptions& opts) {
    Checker c(delta, opts);
    c.ctx = gamma;
    c.check(t, expected);
    c.finish();
}

TypingContext stabilize(const TypingContext& gamma) {
    TypingContext out;
    for (const auto& e : gamma)
        if (e.kind == CtxEntry::Kind::Var && is_stable(e.type)) out.push_back(e);
    return out;
}

void check_definition(const InputContext& delta, const Globals& globals, const GlobalDef& def) {
    CheckOptions opts;
    opts.globals = &globals;
    opts.stable_params = &def.scheme.stable;
    try {
        check(delta, {}, def.body, def.scheme.type, opts);
    } catch (TypeError& e) {
        if (e.origin.empty()) e.origin = def.origin;
        throw;
    }
}

void check_reactive_program(const ElaboratedProgram& p) {
    for (const auto& d : p.inputs.decls())
        if (!is_value_type(d.type))
            throw TypeError(TypeErrorKind::NotValueType, {},
                            "input channel '" + d.name + "' has non-value type " + to_string(d.type));
    Globals globals;
    for (const auto& g : p.globals) {
        check_definition(p.inputs, globals, g);
        globals[g.name] = g.scheme;
    }
    CheckOptions opts;
    opts.globals = &globals;
    for (const auto& o : p.outputs) {
        if (!is_value_type(o.type))
            throw TypeError(TypeErrorKind::NotValueType, o.span,
                            "output '" + o.name + "' has non-value type " + to_string(o.type));
        check(p.inputs, {}, o.expr, ty::sig(o.type), opts);
    }
}

}  // namespace asyncratt
