#include "asyncratt/eval.hpp"

#include <cmath>

namespace asyncratt {

std::string_view to_string(StuckKind k) {
    switch (k) {
        case StuckKind::DanglingLocation:
            return "DanglingLocation";
        case StuckKind::AdvOutsideNowHeap:
            return "AdvOutsideNowHeap";
        case StuckKind::BadSelect:
            return "BadSelect";
        case StuckKind::UnboundChannelBuffer:
            return "UnboundChannelBuffer";
        case StuckKind::IllTypedRedex:
            return "IllTypedRedex";
    }
    return "?";
}

StuckError::StuckError(StuckKind k, TermPtr t, Store s, const std::string& detail)
    : MachineError(std::string(to_string(k)) + ": " + detail + " in " + to_string(t)),
      kind(k),
      term(std::move(t)),
      store(std::move(s)) {}

FuelExhausted::FuelExhausted(std::uint64_t b)
    : MachineError("evaluation exceeded its budget of " + std::to_string(b) + " rule applications"), budget(b) {}

void EvalObserver::on_rule(std::string_view, const TermPtr&, const Store&) {}
void EvalObserver::on_deref(const Location&) {}
void EvalObserver::on_collect(const Heap&) {}

Clock clock_eval(const ClockPtr& theta) {
    Clock out;
    for (const auto& atom : clock_atoms(theta)) {
        if (atom->kind == TermKind::Loc) {
            out.insert(atom->loc.clock.begin(), atom->loc.clock.end());
        } else if (atom->kind == TermKind::Await) {
            out.insert(atom->name);
        } else {
            throw StuckError(StuckKind::IllTypedRedex, atom, {}, "clock of a term that is neither a location nor await");
        }
    }
    return out;
}

namespace {

class Machine {
public:
    Machine(Store& st, const InputBuffer& iota, Allocator& alloc, const EvalConfig& cfg)
        : st_(st), iota_(iota), alloc_(alloc), cfg_(cfg), fuel_(cfg.fuel) {}

    TermPtr eval(const TermPtr& t);

private:
    Store& st_;
    const InputBuffer& iota_;
    Allocator& alloc_;
    const EvalConfig& cfg_;
    std::uint64_t fuel_;

    void rule(std::string_view name, const TermPtr& t) {
        if (fuel_ == 0) throw FuelExhausted(cfg_.fuel);
        --fuel_;
        if (cfg_.observer) cfg_.observer->on_rule(name, t, st_);
    }

    [[noreturn]] void stuck(StuckKind k, const TermPtr& t, const std::string& detail) {
        throw StuckError(k, t, st_, detail);
    }

    static Clock value_clock(const TermPtr& v) {
        if (v->kind == TermKind::Loc) return v->loc.clock;
        if (v->kind == TermKind::Await) return {v->name};
        return {};
    }

    TermPtr advance(const TermPtr& v, const TermPtr& redex);
    TermPtr prim(const TermPtr& t, const TermPtr& a, const TermPtr& b);
};

TermPtr Machine::advance(const TermPtr& v, const TermPtr& redex) {
    switch (v->kind) {
        case TermKind::Await: {
            rule("adv-await", redex);
            if (!st_.now) stuck(StuckKind::AdvOutsideNowHeap, redex, "no input is being processed");
            if (st_.now->channel != v->name)
                stuck(StuckKind::IllTypedRedex, redex, "await on '" + v->name + "' while processing '" + st_.now->channel + "'");
            return st_.now->value;
        }
        case TermKind::Loc: {
            rule("adv-loc", redex);
            if (cfg_.observer) cfg_.observer->on_deref(v->loc);
            if (!st_.now) stuck(StuckKind::AdvOutsideNowHeap, redex, "no now-heap");
            auto it = st_.now->heap.find(v->loc.id);
            if (it == st_.now->heap.end())
                stuck(StuckKind::DanglingLocation, redex, "location l" + std::to_string(v->loc.id) + " is not in the now-heap");
            TermPtr body = it->second.term;
            return eval(body);
        }
        case TermKind::DFix:
            rule("adv-dfix", redex);
            return eval(subst(v->kids[0], v, v->name));
        default:
            stuck(StuckKind::IllTypedRedex, redex, "adv of a value that is not delayed");
    }
}

TermPtr Machine::prim(const TermPtr& t, const TermPtr& a, const TermPtr& b) {
    if (a->kind == TermKind::Float && b->kind == TermKind::Float) {
        double x = a->number, y = b->number;
        switch (t->op) {
            case PrimOp::Add:
                return tm::flt(x + y);
            case PrimOp::Sub:
                return tm::flt(x - y);
            case PrimOp::Mul:
                return tm::flt(x * y);
            case PrimOp::Div:
                return tm::flt(x / y);
            case PrimOp::Eq:
                return tm::boolean(x == y);
            case PrimOp::Lt:
                return tm::boolean(x < y);
            case PrimOp::Le:
                return tm::boolean(x <= y);
            case PrimOp::Gt:
                return tm::boolean(x > y);
            case PrimOp::Ge:
                return tm::boolean(x >= y);
        }
    }
    auto na = as_numeral(a), nb = as_numeral(b);
    if (!na || !nb) stuck(StuckKind::IllTypedRedex, t, "arithmetic on non-numbers");
    std::uint64_t x = *na, y = *nb;
    switch (t->op) {
        case PrimOp::Add:
            return tm::nat(x + y);
        case PrimOp::Sub:
            return tm::nat(x > y ? x - y : 0);
        case PrimOp::Mul:
            return tm::nat(x * y);
        case PrimOp::Div:
            return tm::nat(y == 0 ? 0 : x / y);
        case PrimOp::Eq:
            return tm::boolean(x == y);
        case PrimOp::Lt:
            return tm::boolean(x < y);
        case PrimOp::Le:
            return tm::boolean(x <= y);
        case PrimOp::Gt:
            return tm::boolean(x > y);
        case PrimOp::Ge:
            return tm::boolean(x >= y);
    }
    stuck(StuckKind::IllTypedRedex, t, "unknown operator");
}

TermPtr Machine::eval(const TermPtr& t) {
    switch (t->kind) {
        case TermKind::Var:
            rule("stuck", t);
            stuck(StuckKind::IllTypedRedex, t, "free variable '" + t->name + "'");
        case TermKind::Unit:
        case TermKind::Nat:
        case TermKind::Float:
        case TermKind::Lam:
        case TermKind::Loc:
        case TermKind::Await:
        case TermKind::Box:
        case TermKind::DFix:
            rule("value", t);
            return t;
        case TermKind::Suc: {
            rule("suc", t);
            TermPtr v = eval(t->kids[0]);
            auto n = as_numeral(v);
            if (!n) stuck(StuckKind::IllTypedRedex, t, "suc of a non-number");
            return tm::nat(*n + 1);
        }
        default:
            break;
    }
    if (t->is_value()) {
        rule("value", t);
        return t;
    }
    switch (t->kind) {
        case TermKind::Pair: {
            rule("pair", t);
            TermPtr a = eval(t->kids[0]);
            TermPtr b = eval(t->kids[1]);
            return tm::pair(a, b);
        }
        case TermKind::Inj:
            rule("inj", t);
            return tm::inj(t->index, eval(t->kids[0]));
        case TermKind::Into:
            rule("into", t);
            return tm::into(eval(t->kids[0]));
        case TermKind::Proj: {
            rule("proj", t);
            TermPtr v = eval(t->kids[0]);
            if (v->kind != TermKind::Pair) stuck(StuckKind::IllTypedRedex, t, "projection from a non-pair");
            return v->kids[t->index - 1];
        }
        case TermKind::Out: {
            rule("out", t);
            TermPtr v = eval(t->kids[0]);
            if (v->kind != TermKind::Into) stuck(StuckKind::IllTypedRedex, t, "out of a value not built by into");
            return v->kids[0];
        }
        case TermKind::App: {
            rule("app", t);
            TermPtr f = eval(t->kids[0]);
            TermPtr a = eval(t->kids[1]);
            if (f->kind != TermKind::Lam) stuck(StuckKind::IllTypedRedex, t, "application of a non-function");
            return eval(subst(f->kids[0], a, f->name));
        }
        case TermKind::Let: {
            rule("let", t);
            TermPtr v = eval(t->kids[0]);
            return eval(subst(t->kids[1], v, t->name));
        }
        case TermKind::Case: {
            rule("case", t);
            TermPtr v = eval(t->kids[0]);
            if (v->kind != TermKind::Inj) stuck(StuckKind::IllTypedRedex, t, "case on a non-injection");
            if (v->index == 1) return eval(subst(t->kids[1], v->kids[0], t->name));
            return eval(subst(t->kids[2], v->kids[0], t->name2));
        }
        case TermKind::NatRec: {
            rule("natrec", t);
            TermPtr nv = eval(t->kids[2]);
            auto n = as_numeral(nv);
            if (!n) stuck(StuckKind::IllTypedRedex, t, "natrec on a non-number");
            TermPtr acc = eval(t->kids[0]);
            for (std::uint64_t i = 0; i < *n; ++i) {
                rule("natrec-suc", t);
                TermPtr step = subst(t->kids[1], tm::nat(i), t->name);
                acc = eval(subst(step, acc, t->name2));
            }
            return acc;
        }
        case TermKind::Prim: {
            rule("prim", t);
            TermPtr a = eval(t->kids[0]);
            TermPtr b = eval(t->kids[1]);
            return prim(t, a, b);
        }
        case TermKind::Delay: {
            rule("delay", t);
            if (!t->clock) stuck(StuckKind::IllTypedRedex, t, "delay without a clock");
            Location l = alloc_.alloc(clock_eval(t->clock));
            st_.later[l.id] = HeapCell{l, t->kids[0]};
            return tm::loc(l);
        }
        case TermKind::Never: {
            rule("never", t);
            return tm::loc(alloc_.alloc({}));
        }
        case TermKind::Adv: {
            TermPtr v = eval(t->kids[0]);
            return advance(v, t);
        }
        case TermKind::Select: {
            TermPtr v1 = eval(t->kids[0]);
            TermPtr v2 = eval(t->kids[1]);
            if (!st_.now) stuck(StuckKind::AdvOutsideNowHeap, t, "select without an input");
            const std::string& k = st_.now->channel;
            bool in1 = value_clock(v1).count(k) > 0;
            bool in2 = value_clock(v2).count(k) > 0;
            if (in1 && !in2) {
                rule("select-left", t);
                TermPtr u1 = advance(v1, t);
                return tm::inj(1, tm::inj(1, tm::pair(u1, v2)));
            }
            if (in2 && !in1) {
                rule("select-right", t);
                TermPtr u2 = advance(v2, t);
                return tm::inj(1, tm::inj(2, tm::pair(v1, u2)));
            }
            if (in1 && in2) {
                rule("select-both", t);
                TermPtr u1 = advance(v1, t);
                TermPtr u2 = advance(v2, t);
                return tm::inj(2, tm::pair(u1, u2));
            }
            rule("stuck", t);
            stuck(StuckKind::BadSelect, t, "channel '" + k + "' is in neither clock");
        }
        case TermKind::Read: {
            rule("read", t);
            auto it = iota_.find(t->name);
            if (it == iota_.end()) stuck(StuckKind::UnboundChannelBuffer, t, "no buffered value for '" + t->name + "'");
            return it->second;
        }
        case TermKind::Unbox: {
            rule("unbox", t);
            TermPtr v = eval(t->kids[0]);
            if (v->kind != TermKind::Box) stuck(StuckKind::IllTypedRedex, t, "unbox of a non-box");
            return eval(v->kids[0]);
        }
        case TermKind::Fix: {
            rule("fix", t);
            return eval(subst(t->kids[0], tm::dfix(t->name, t->kids[0]), t->name));
        }
        default:
            stuck(StuckKind::IllTypedRedex, t, "no rule applies");
    }
}

}  // namespace

TermPtr eval_in(const TermPtr& t, Store& sigma, const InputBuffer& iota, Allocator& alloc, const EvalConfig& cfg) {
    Machine m(sigma, iota, alloc, cfg);
    return m.eval(t);
}

EvalOutcome eval(const TermPtr& t, Store sigma, const InputBuffer& iota, Allocator& alloc, const EvalConfig& cfg) {
    TermPtr v = eval_in(t, sigma, iota, alloc, cfg);
    return {v, std::move(sigma)};
}

}  // namespace asyncratt
