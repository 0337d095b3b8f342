#include <algorithm>
#include <atomic>
#include <deque>
#include <map>
#include <sstream>

#include "asyncratt/surface.hpp"

namespace asyncratt {

namespace {

std::atomic<std::uint64_t> g_fresh{0};

std::string fresh(const std::string& base) { return base + "~" + std::to_string(g_fresh++); }

const PatternPtr& wild() {
    static const PatternPtr w = std::make_shared<Pattern>();
    return w;
}

bool is_var_like(const PatternPtr& p) { return p->kind == Pattern::Kind::Wild || p->kind == Pattern::Kind::Var; }

void pattern_vars(const PatternPtr& p, std::vector<std::pair<std::string, Span>>& out) {
    if (p->kind == Pattern::Kind::Var) out.emplace_back(p->name, p->span);
    for (const auto& k : p->kids) pattern_vars(k, out);
}

std::string atom_key(const TermPtr& v) {
    if (v->kind == TermKind::Var) return "v:" + v->name;
    if (v->kind == TermKind::Await) return "a:" + v->name;
    return "t:" + to_string(v);
}

TypePtr replace_param(const TypePtr& a, const std::string& name, const TypePtr& repl) {
    switch (a->kind) {
        case TypeKind::Param:
            return a->name == name ? repl : a;
        case TypeKind::Prod:
            return ty::prod(replace_param(a->left, name, repl), replace_param(a->right, name, repl));
        case TypeKind::Sum:
            return ty::sum(replace_param(a->left, name, repl), replace_param(a->right, name, repl));
        case TypeKind::Fun:
            return ty::fun(replace_param(a->left, name, repl), replace_param(a->right, name, repl));
        case TypeKind::DelayExist:
            return ty::later(replace_param(a->left, name, repl));
        case TypeKind::DelayAny:
            return ty::any(replace_param(a->left, name, repl));
        case TypeKind::Box:
            return ty::box(replace_param(a->left, name, repl));
        case TypeKind::FixRec:
            return ty::fix(a->name, replace_param(a->left, name, repl));
        default:
            return a;
    }
}

struct Row {
    std::vector<PatternPtr> pats;
    TermPtr body;
};

enum class Family { Unit, Pair, Cons, Sum, Nat };

Family family_of(const PatternPtr& p) {
    switch (p->kind) {
        case Pattern::Kind::Unit:
            return Family::Unit;
        case Pattern::Kind::Pair:
            return Family::Pair;
        case Pattern::Kind::Cons:
            return Family::Cons;
        case Pattern::Kind::Inj:
            return Family::Sum;
        default:
            return Family::Nat;
    }
}

[[noreturn]] void mismatch(const PatternPtr& p) {
    throw ElaborationError(p->span, "pattern does not fit the other patterns in this position");
}

TermPtr bind_var(TermPtr body, const PatternPtr& p, const std::string& col) {
    if (p->kind == Pattern::Kind::Var && p->name != col) return subst(body, tm::var(col), p->name);
    return body;
}

bool in_cols(const std::vector<std::string>& cols, const std::string& x) {
    for (const auto& c : cols)
        if (c == x) return true;
    return false;
}

/// Binder for a sub-position: the single row's own variable name when that
/// is unambiguous, otherwise a fresh name.
std::string sub_binder(const std::vector<Row>& rows, std::size_t col, const std::vector<std::string>& cols,
                       const char* base) {
    if (rows.size() == 1 && rows[0].pats[col]->kind == Pattern::Kind::Var && !in_cols(cols, rows[0].pats[col]->name))
        return rows[0].pats[col]->name;
    return fresh(base);
}

TermPtr compile(std::vector<std::string> cols, std::vector<Row> rows, Span span) {
    if (rows.empty()) throw ElaborationError(span, "non-exhaustive patterns");
    const Row& r0 = rows[0];
    std::size_t c = cols.size();
    for (std::size_t i = 0; i < cols.size(); ++i) {
        if (!is_var_like(r0.pats[i])) {
            c = i;
            break;
        }
    }
    if (c == cols.size()) {
        TermPtr body = r0.body;
        for (std::size_t i = 0; i < cols.size(); ++i) body = bind_var(body, r0.pats[i], cols[i]);
        return body;
    }
    const std::string x = cols[c];
    Family fam = family_of(r0.pats[c]);
    switch (fam) {
        case Family::Unit: {
            std::vector<Row> next;
            for (auto& r : rows) {
                const PatternPtr& p = r.pats[c];
                if (!is_var_like(p) && p->kind != Pattern::Kind::Unit) mismatch(p);
                Row nr{r.pats, bind_var(r.body, p, x)};
                nr.pats.erase(nr.pats.begin() + static_cast<std::ptrdiff_t>(c));
                next.push_back(std::move(nr));
            }
            cols.erase(cols.begin() + static_cast<std::ptrdiff_t>(c));
            return compile(cols, std::move(next), span);
        }
        case Family::Pair:
        case Family::Cons: {
            Pattern::Kind k = fam == Family::Pair ? Pattern::Kind::Pair : Pattern::Kind::Cons;
            std::vector<Row> next;
            for (auto& r : rows) {
                const PatternPtr& p = r.pats[c];
                Row nr{{}, r.body};
                for (std::size_t i = 0; i < r.pats.size(); ++i) {
                    if (i != c) {
                        nr.pats.push_back(r.pats[i]);
                        continue;
                    }
                    if (p->kind == k) {
                        nr.pats.push_back(p->kids[0]);
                        nr.pats.push_back(p->kids[1]);
                    } else if (is_var_like(p)) {
                        nr.body = bind_var(nr.body, p, x);
                        nr.pats.push_back(wild());
                        nr.pats.push_back(wild());
                    } else {
                        mismatch(p);
                    }
                }
                next.push_back(std::move(nr));
            }
            std::vector<std::string> ncols;
            for (std::size_t i = 0; i < cols.size(); ++i) {
                if (i != c) {
                    ncols.push_back(cols[i]);
                    continue;
                }
                ncols.push_back("");
                ncols.push_back("");
            }
            std::string n1 = sub_binder(next, c, cols, "h");
            ncols[c] = n1;
            std::string n2 = sub_binder(next, c + 1, ncols, "t");
            ncols[c + 1] = n2;
            TermPtr inner = compile(ncols, std::move(next), span);
            TermPtr src = fam == Family::Cons ? tm::out(tm::var(x)) : tm::var(x);
            TermPtr src2 = fam == Family::Cons ? tm::out(tm::var(x)) : tm::var(x);
            return tm::let(n1, tm::proj(1, src), tm::let(n2, tm::proj(2, src2), inner));
        }
        case Family::Sum: {
            std::vector<Row> branch[2];
            for (auto& r : rows) {
                const PatternPtr& p = r.pats[c];
                for (int i = 1; i <= 2; ++i) {
                    Row nr{r.pats, r.body};
                    if (p->kind == Pattern::Kind::Inj) {
                        if (p->index != i) continue;
                        nr.pats[c] = p->kids[0];
                    } else if (is_var_like(p)) {
                        nr.body = bind_var(nr.body, p, x);
                        nr.pats[c] = wild();
                    } else {
                        mismatch(p);
                    }
                    branch[i - 1].push_back(std::move(nr));
                }
            }
            std::string b[2];
            TermPtr t[2];
            for (int i = 0; i < 2; ++i) {
                std::vector<std::string> ncols = cols;
                ncols[c] = "";
                b[i] = branch[i].size() == 1 && branch[i][0].pats[c]->kind == Pattern::Kind::Wild
                           ? std::string("_")
                           : sub_binder(branch[i], c, ncols, "b");
                ncols[c] = b[i];
                if (b[i] == "_") ncols[c] = fresh("u");
                t[i] = compile(ncols, std::move(branch[i]), span);
            }
            return tm::case_(tm::var(x), b[0], t[0], b[1], t[1]);
        }
        case Family::Nat: {
            std::vector<Row> zero_rows, suc_rows;
            for (auto& r : rows) {
                const PatternPtr& p = r.pats[c];
                if (is_var_like(p)) {
                    TermPtr body = bind_var(r.body, p, x);
                    Row z{r.pats, body};
                    z.pats.erase(z.pats.begin() + static_cast<std::ptrdiff_t>(c));
                    zero_rows.push_back(std::move(z));
                    Row s{r.pats, body};
                    s.pats[c] = wild();
                    suc_rows.push_back(std::move(s));
                } else if (p->kind == Pattern::Kind::Nat) {
                    if (p->nat == 0) {
                        Row z{r.pats, r.body};
                        z.pats.erase(z.pats.begin() + static_cast<std::ptrdiff_t>(c));
                        zero_rows.push_back(std::move(z));
                    } else {
                        auto pred = std::make_shared<Pattern>(*p);
                        pred->nat = p->nat - 1;
                        Row s{r.pats, r.body};
                        s.pats[c] = pred;
                        suc_rows.push_back(std::move(s));
                    }
                } else if (p->kind == Pattern::Kind::Suc) {
                    Row s{r.pats, r.body};
                    s.pats[c] = p->kids[0];
                    suc_rows.push_back(std::move(s));
                } else {
                    mismatch(p);
                }
            }
            std::vector<std::string> zcols = cols;
            zcols.erase(zcols.begin() + static_cast<std::ptrdiff_t>(c));
            TermPtr z = compile(zcols, std::move(zero_rows), span);
            std::vector<std::string> scols = cols;
            scols[c] = "";
            std::string pred = sub_binder(suc_rows, c, scols, "n");
            scols[c] = pred;
            TermPtr s = compile(scols, std::move(suc_rows), span);
            std::string test = fresh("z");
            return tm::let(test, tm::prim(PrimOp::Eq, tm::var(x), tm::nat(0)),
                           tm::case_(tm::var(test), "_", z, "_",
                                     tm::let(pred, tm::prim(PrimOp::Sub, tm::var(x), tm::nat(1)), s)));
        }
    }
    throw ElaborationError(span, "unsupported pattern");
}

void check_linear(const std::vector<PatternPtr>& pats) {
    std::vector<std::pair<std::string, Span>> vars;
    for (const auto& p : pats) pattern_vars(p, vars);
    std::set<std::string> seen;
    for (const auto& [name, span] : vars)
        if (!seen.insert(name).second) throw ElaborationError(span, "variable '" + name + "' bound twice in a pattern");
}

}  // namespace

struct Elaborator::Impl {
    InputContext delta;
    ElaboratedProgram prog;
    std::set<std::string> names;
    std::deque<SurfaceDef> owned;
    std::map<std::string, std::pair<const SurfaceDef*, std::string>> templates;
    std::set<std::string> in_progress;

    struct Local {
        std::string name;
        bool fix = false;
    };

    struct DelayFrame {
        std::vector<TermPtr> atoms;
        std::set<std::string> keys;
        std::vector<std::pair<std::string, TermPtr>> lifts;
        std::size_t locals_base = 0;
    };

    struct Env {
        std::vector<Local> locals;
        std::string self;
        std::string self_template;
        std::string self_chan;
        std::string rec_var;
        bool used_rec = false;
        std::map<std::string, std::string> chan_subst;
        DelayFrame* delay = nullptr;
    };

    struct LocalScope {
        Env& env;
        std::size_t n;
        ~LocalScope() { env.locals.resize(n); }
    };

    LocalScope push_pattern_vars(Env& env, const std::vector<PatternPtr>& pats) {
        LocalScope s{env, env.locals.size()};
        std::vector<std::pair<std::string, Span>> vars;
        for (const auto& p : pats) pattern_vars(p, vars);
        for (const auto& v : vars) env.locals.push_back({v.first, false});
        return s;
    }

    const Local* find_local(const Env& env, const std::string& x, std::size_t* index = nullptr) const {
        for (std::size_t i = env.locals.size(); i-- > 0;) {
            if (env.locals[i].name == x) {
                if (index) *index = i;
                return &env.locals[i];
            }
        }
        return nullptr;
    }

    std::string channel(const Env& env, const std::string& ch) const {
        auto it = env.chan_subst.find(ch);
        return it == env.chan_subst.end() ? ch : it->second;
    }

    TermPtr self_ref(Env& env, Span span) {
        if (!env.delay)
            throw ElaborationError(span, "recursive reference to '" + env.self + "' must occur under delay");
        env.used_rec = true;
        return tm::adv(tm::var(env.rec_var, span), span);
    }

    TermPtr advance_arg(Env& env, TermPtr t, Span span, const char* form) {
        DelayFrame* f = env.delay;
        if (!f) throw ElaborationError(span, std::string(form) + " outside of a delay");
        if (t->kind == TermKind::Var) {
            const Local* l = find_local(env, t->name);
            if (l && l->fix) return t;
        }
        for (const auto& v : t->free_vars()) {
            std::size_t idx = 0;
            if (find_local(env, v, &idx) && idx >= f->locals_base)
                throw ElaborationError(span, std::string("argument of ") + form + " mentions '" + v +
                                                 "' which is bound inside the delay");
        }
        if (!t->is_value()) {
            std::string name = fresh("v");
            f->lifts.emplace_back(name, t);
            t = tm::var(name, span);
        }
        if (f->keys.insert(atom_key(t)).second) f->atoms.push_back(t);
        return t;
    }

    TermPtr make_let(const PatternPtr& pat, TermPtr bound, TermPtr body, Span span) {
        if (pat->kind == Pattern::Kind::Var) return tm::let(pat->name, bound, body, span);
        if (pat->kind == Pattern::Kind::Wild) return tm::let("_", bound, body, span);
        std::string v = bound->kind == TermKind::Var ? bound->name : fresh("m");
        TermPtr inner = compile({v}, {Row{{pat}, body}}, span);
        if (bound->kind == TermKind::Var) return inner;
        return tm::let(v, bound, inner, span);
    }

    TermPtr elab(const ExprPtr& e, Env& env) {
        Span s = e->span;
        switch (e->kind) {
            case Expr::Kind::Var: {
                if (find_local(env, e->name)) return tm::var(e->name, s);
                if (e->name == env.self && env.self_template.empty()) return self_ref(env, s);
                if (names.count(e->name) && !templates.count(e->name)) return tm::unbox(tm::var(e->name, s), s);
                if (templates.count(e->name))
                    throw ElaborationError(s, "template '" + e->name + "' needs a channel: " + e->name + "{k}");
                return tm::var(e->name, s);
            }
            case Expr::Kind::Template: {
                std::string ch = channel(env, e->name2);
                if (e->name == env.self_template && ch == env.self_chan) return self_ref(env, s);
                const GlobalDef& g = instance_impl(e->name, ch, s);
                return tm::unbox(tm::var(g.name, s), s);
            }
            case Expr::Kind::Unit:
                return tm::unit(s);
            case Expr::Kind::Nat:
                return tm::nat(e->nat, s);
            case Expr::Kind::Float:
                return tm::flt(e->number, s);
            case Expr::Kind::Never:
                return tm::never(s);
            case Expr::Kind::Await:
                return tm::await(channel(env, e->name), s);
            case Expr::Kind::Read:
                return tm::read(channel(env, e->name), s);
            case Expr::Kind::Lam: {
                check_linear(e->pats);
                std::vector<std::string> binders;
                for (const auto& p : e->pats) {
                    if (p->kind == Pattern::Kind::Var)
                        binders.push_back(p->name);
                    else if (p->kind == Pattern::Kind::Wild)
                        binders.push_back("_");
                    else
                        binders.push_back(fresh("p"));
                }
                TermPtr body;
                {
                    auto scope = push_pattern_vars(env, e->pats);
                    body = elab(e->kids[0], env);
                }
                std::vector<std::string> cols = binders;
                for (auto& c : cols)
                    if (c == "_") c = fresh("u");
                body = compile(cols, {Row{e->pats, body}}, s);
                for (std::size_t i = binders.size(); i-- > 0;) body = tm::lam(binders[i], body, s);
                return body;
            }
            case Expr::Kind::App: {
                TermPtr f = elab(e->kids[0], env);
                for (std::size_t i = 1; i < e->kids.size(); ++i) f = tm::app(f, elab(e->kids[i], env), s);
                return f;
            }
            case Expr::Kind::Let: {
                check_linear(e->pats);
                TermPtr bound = elab(e->kids[0], env);
                auto scope = push_pattern_vars(env, e->pats);
                TermPtr body = elab(e->kids[1], env);
                return make_let(e->pats[0], bound, body, s);
            }
            case Expr::Kind::Seq: {
                TermPtr a = elab(e->kids[0], env);
                TermPtr b = elab(e->kids[1], env);
                return tm::let("_", a, b, s);
            }
            case Expr::Kind::If: {
                TermPtr c = elab(e->kids[0], env);
                TermPtr a = elab(e->kids[1], env);
                TermPtr b = elab(e->kids[2], env);
                return tm::case_(c, "_", a, "_", b, s);
            }
            case Expr::Kind::Case:
                return elab_case(e, env);
            case Expr::Kind::NatRec: {
                TermPtr n = elab(e->kids[0], env);
                TermPtr z = elab(e->kids[1], env);
                LocalScope scope{env, env.locals.size()};
                env.locals.push_back({e->name, false});
                env.locals.push_back({e->name2, false});
                TermPtr st = elab(e->kids[2], env);
                return tm::natrec(z, e->name, e->name2, st, n, s);
            }
            case Expr::Kind::Fix: {
                LocalScope scope{env, env.locals.size()};
                env.locals.push_back({e->name, true});
                DelayFrame* saved = env.delay;
                env.delay = nullptr;
                TermPtr body;
                try {
                    body = elab(e->kids[0], env);
                } catch (...) {
                    env.delay = saved;
                    throw;
                }
                env.delay = saved;
                return tm::fix(e->name, body, s);
            }
            case Expr::Kind::Cons: {
                TermPtr a = elab(e->kids[0], env);
                TermPtr b = elab(e->kids[1], env);
                return tm::cons(a, b, s);
            }
            case Expr::Kind::Prim: {
                TermPtr a = elab(e->kids[0], env);
                TermPtr b = elab(e->kids[1], env);
                return tm::prim(e->op, a, b, s);
            }
            case Expr::Kind::Tuple: {
                std::vector<TermPtr> items;
                for (const auto& k : e->kids) items.push_back(elab(k, env));
                TermPtr acc = items.back();
                for (std::size_t i = items.size() - 1; i-- > 0;) acc = tm::pair(items[i], acc, s);
                return acc;
            }
            case Expr::Kind::Unary: {
                if (e->unary == Expr::UnaryOp::Adv) {
                    TermPtr a = elab(e->kids[0], env);
                    return tm::adv(advance_arg(env, a, s, "adv"), s);
                }
                if (e->unary == Expr::UnaryOp::Box) {
                    DelayFrame* saved = env.delay;
                    env.delay = nullptr;
                    TermPtr body;
                    try {
                        body = elab(e->kids[0], env);
                    } catch (...) {
                        env.delay = saved;
                        throw;
                    }
                    env.delay = saved;
                    return tm::box(body, s);
                }
                TermPtr a = elab(e->kids[0], env);
                switch (e->unary) {
                    case Expr::UnaryOp::Unbox:
                        return tm::unbox(a, s);
                    case Expr::UnaryOp::Into:
                        return tm::into(a, s);
                    case Expr::UnaryOp::Out:
                        return tm::out(a, s);
                    case Expr::UnaryOp::Suc:
                        return tm::suc(a, s);
                    case Expr::UnaryOp::Fst:
                        return tm::proj(1, a, s);
                    case Expr::UnaryOp::Snd:
                        return tm::proj(2, a, s);
                    case Expr::UnaryOp::In1:
                        return tm::inj(1, a, s);
                    case Expr::UnaryOp::In2:
                        return tm::inj(2, a, s);
                    default:
                        break;
                }
                throw ElaborationError(s, "unknown prefix form");
            }
            case Expr::Kind::Delay:
                return elab_delay(e, env);
            case Expr::Kind::Select: {
                TermPtr a = elab(e->kids[0], env);
                a = advance_arg(env, a, e->kids[0]->span, "select");
                TermPtr b = elab(e->kids[1], env);
                b = advance_arg(env, b, e->kids[1]->span, "select");
                return tm::select(a, b, s);
            }
            case Expr::Kind::Ctor: {
                TermPtr a = elab(e->kids[0], env);
                TermPtr b = elab(e->kids[1], env);
                TermPtr p = tm::pair(a, b, s);
                if (e->index == 1) return tm::inj(1, tm::inj(1, p, s), s);
                if (e->index == 2) return tm::inj(1, tm::inj(2, p, s), s);
                return tm::inj(2, p, s);
            }
        }
        throw ElaborationError(s, "unknown expression form");
    }

    TermPtr elab_delay(const ExprPtr& e, Env& env) {
        Span s = e->span;
        DelayFrame frame;
        frame.locals_base = env.locals.size();
        DelayFrame* saved = env.delay;
        env.delay = &frame;
        TermPtr body;
        try {
            body = elab(e->kids[0], env);
        } catch (...) {
            env.delay = saved;
            throw;
        }
        env.delay = saved;
        std::vector<TermPtr> atoms;
        if (e->has_clock) {
            for (const auto& a : e->clock)
                atoms.push_back(a->kind == Expr::Kind::Await ? tm::await(channel(env, a->name), a->span)
                                                             : tm::var(a->name, a->span));
        } else {
            atoms = frame.atoms;
        }
        if (atoms.empty())
            throw ElaborationError(s, "cannot infer the clock of this delay: its body advances no delayed value");
        ClockPtr clock = clock_of(atoms[0]);
        for (std::size_t i = 1; i < atoms.size(); ++i) clock = clock_union(clock, clock_of(atoms[i]));
        TermPtr out = tm::delay(clock, body, s);
        for (std::size_t i = frame.lifts.size(); i-- > 0;)
            out = tm::let(frame.lifts[i].first, frame.lifts[i].second, out, s);
        return out;
    }

    TermPtr elab_case(const ExprPtr& e, Env& env) {
        Span s = e->span;
        TermPtr scrut = elab(e->kids[0], env);
        std::vector<Row> rows;
        for (std::size_t i = 0; i < e->pats.size(); ++i) {
            check_linear({e->pats[i]});
            auto scope = push_pattern_vars(env, {e->pats[i]});
            rows.push_back(Row{{e->pats[i]}, elab(e->kids[i + 1], env)});
        }
        auto simple = [&](std::size_t i, int idx) {
            const PatternPtr& p = e->pats[i];
            return p->kind == Pattern::Kind::Inj && p->index == idx && is_var_like(p->kids[0]);
        };
        if (rows.size() == 2 && simple(0, 1) && simple(1, 2)) {
            auto binder = [](const PatternPtr& p) {
                return p->kids[0]->kind == Pattern::Kind::Var ? p->kids[0]->name : std::string("_");
            };
            return tm::case_(scrut, binder(e->pats[0]), rows[0].body, binder(e->pats[1]), rows[1].body, s);
        }
        if (scrut->kind == TermKind::Var) return compile({scrut->name}, std::move(rows), s);
        std::string v = fresh("c");
        return tm::let(v, scrut, compile({v}, std::move(rows), s), s);
    }

    GlobalDef elab_def(const SurfaceDef& d, const std::string& chan, const std::string& origin) {
        if (!d.has_signature) throw ElaborationError(d.span, "missing type signature for '" + d.name + "'");
        if (d.equations.empty()) throw ElaborationError(d.span, "no equations for '" + d.name + "'");
        std::size_t arity = d.equations[0].pats.size();
        for (const auto& eq : d.equations)
            if (eq.pats.size() != arity)
                throw ElaborationError(eq.span, "equations for '" + d.name + "' have different numbers of arguments");

        GlobalDef g;
        g.span = d.span;
        g.origin = origin;
        g.scheme = d.scheme;
        Env env;
        env.rec_var = fresh("r");
        if (d.channel_param) {
            g.name = d.name + "{" + chan + "}";
            env.self_template = d.name;
            env.self_chan = chan;
            env.chan_subst[*d.channel_param] = chan;
            const ChannelDecl* decl = delta.find(chan);
            if (decl && d.channel_type->kind == TypeKind::Param) {
                const std::string p = d.channel_type->name;
                g.scheme.type = replace_param(g.scheme.type, p, decl->type);
                g.scheme.params.erase(std::remove(g.scheme.params.begin(), g.scheme.params.end(), p),
                                      g.scheme.params.end());
                g.scheme.stable.erase(p);
            }
        } else {
            g.name = d.name;
        }
        env.self = g.name;

        std::vector<std::string> binders;
        for (std::size_t i = 0; i < arity; ++i) {
            const PatternPtr& p = d.equations[0].pats[i];
            if (d.equations.size() == 1 && p->kind == Pattern::Kind::Var)
                binders.push_back(p->name);
            else
                binders.push_back(fresh("p"));
        }
        std::vector<Row> rows;
        for (const auto& eq : d.equations) {
            check_linear(eq.pats);
            auto scope = push_pattern_vars(env, eq.pats);
            std::vector<TermPtr> where_terms;
            std::size_t mark = env.locals.size();
            for (const auto& [wp, we] : eq.where) {
                check_linear({wp});
                where_terms.push_back(elab(we, env));
                std::vector<std::pair<std::string, Span>> vars;
                pattern_vars(wp, vars);
                for (const auto& v : vars) env.locals.push_back({v.first, false});
            }
            TermPtr body = elab(eq.body, env);
            env.locals.resize(mark);
            for (std::size_t i = eq.where.size(); i-- > 0;)
                body = make_let(eq.where[i].first, where_terms[i], body, eq.where[i].second->span);
            rows.push_back(Row{eq.pats, body});
        }
        TermPtr term = compile(binders, std::move(rows), d.span);
        for (std::size_t i = binders.size(); i-- > 0;) term = tm::lam(binders[i], term, d.span);
        if (env.used_rec) term = tm::fix(env.rec_var, term, d.span);
        g.body = term;
        return g;
    }

    const GlobalDef& instance_impl(const std::string& name, const std::string& chan, Span use) {
        std::string inst = name + "{" + chan + "}";
        for (const auto& g : prog.globals)
            if (g.name == inst) return g;
        auto it = templates.find(name);
        if (it == templates.end()) throw ElaborationError(use, "unknown template '" + name + "'");
        if (!in_progress.insert(inst).second)
            throw ElaborationError(use, "cyclic template instantiation of '" + inst + "'");
        GlobalDef g;
        try {
            g = elab_def(*it->second.first, chan, it->second.second);
        } catch (...) {
            in_progress.erase(inst);
            throw;
        }
        in_progress.erase(inst);
        prog.globals.push_back(std::move(g));
        return prog.globals.back();
    }
};

Elaborator::Elaborator(InputContext delta) : impl_(std::make_unique<Impl>()) {
    impl_->delta = delta;
    impl_->prog.inputs = std::move(delta);
}

Elaborator::~Elaborator() = default;

void Elaborator::add_source(const SurfaceProgram& p, const std::string& origin) {
    for (const auto& d : p.defs) {
        try {
            if (!impl_->names.insert(d.name).second)
                throw ElaborationError(d.span, "duplicate definition of '" + d.name + "'");
            impl_->owned.push_back(d);
            const SurfaceDef* stored = &impl_->owned.back();
            if (d.channel_param) {
                if (!d.has_signature) throw ElaborationError(d.span, "missing type signature for '" + d.name + "'");
                impl_->templates[d.name] = {stored, origin};
            } else {
                impl_->prog.globals.push_back(impl_->elab_def(*stored, {}, origin));
            }
        } catch (ElaborationError& e) {
            if (e.origin.empty()) e.origin = origin;
            throw;
        }
    }
}

const GlobalDef& Elaborator::instance(const std::string& name, const std::string& channel, Span use) {
    return impl_->instance_impl(name, channel, use);
}

TermPtr Elaborator::expr(const ExprPtr& e) {
    Impl::Env env;
    return impl_->elab(e, env);
}

const ElaboratedProgram& Elaborator::program() const { return impl_->prog; }
ElaboratedProgram& Elaborator::program() { return impl_->prog; }

ElaboratedProgram elaborate(const SurfaceProgram& p, const ElabOptions& opts) {
    InputContext delta;
    for (const auto& in : p.inputs) {
        if (delta.contains(in.name)) throw ElaborationError(in.span, "duplicate input channel '" + in.name + "'");
        delta.add({in.name, in.cls, in.type});
    }
    std::set<std::string> outs;
    for (const auto& o : p.outputs) {
        if (delta.contains(o.name))
            throw ElaborationError(o.span, "output '" + o.name + "' clashes with an input channel");
        if (!outs.insert(o.name).second) throw ElaborationError(o.span, "duplicate output '" + o.name + "'");
    }
    Elaborator el(delta);
    if (opts.prelude) el.add_source(*opts.prelude, opts.prelude_origin);
    el.add_source(p, {});
    std::vector<OutputDef> outputs;
    for (const auto& o : p.outputs) outputs.push_back({o.name, o.type, el.expr(o.expr), o.span});
    ElaboratedProgram result = el.program();
    result.outputs = std::move(outputs);
    return result;
}

std::string print_program(const ElaboratedProgram& p) {
    std::ostringstream os;
    std::set<std::string> globals = p.global_names();
    PrintOptions opts;
    opts.globals = &globals;
    if (!p.inputs.decls().empty()) {
        os << "inputs\n";
        for (const auto& d : p.inputs.decls()) os << d.name << " : " << to_string(d.cls) << " " << to_string(d.type) << "\n";
    }
    if (!p.globals.empty()) {
        os << "defs\n";
        for (const auto& g : p.globals) {
            os << g.name << " : " << to_string(g.scheme) << "\n";
            os << g.name << " = " << to_string(g.body, opts) << "\n";
        }
    }
    if (!p.outputs.empty()) {
        os << "outputs\n";
        for (const auto& o : p.outputs) os << o.name << " : " << to_string(o.type) << " = " << to_string(o.expr, opts) << "\n";
    }
    return os.str();
}

}  // namespace asyncratt
