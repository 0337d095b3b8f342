#include "asyncratt/verify.hpp"

#include <bit>
#include <cstdio>
#include <functional>

#include "asyncratt/stdlib.hpp"
#include "asyncratt/typecheck.hpp"

namespace asyncratt {

// ---------------------------------------------------------------------------
// Random inputs

TermPtr random_value(const TypePtr& a, std::mt19937_64& rng) {
    switch (a->kind) {
        case TypeKind::Unit:
            return tm::unit();
        case TypeKind::Nat:
            return tm::nat(std::uniform_int_distribution<std::uint64_t>(0, 9)(rng));
        case TypeKind::Float:
            return tm::flt(static_cast<double>(std::uniform_int_distribution<int>(0, 100)(rng)) / 10.0);
        case TypeKind::Prod: {
            TermPtr l = random_value(a->left, rng);
            return tm::pair(l, random_value(a->right, rng));
        }
        case TypeKind::Sum:
            if (std::bernoulli_distribution(0.5)(rng)) return tm::inj(1, random_value(a->left, rng));
            return tm::inj(2, random_value(a->right, rng));
        default:
            throw std::invalid_argument("no random values of type " + to_string(a));
    }
}

std::vector<InputEvent> random_events(const InputContext& delta, const std::vector<std::string>& channels,
                                      std::size_t n, std::mt19937_64& rng) {
    std::vector<InputEvent> out;
    if (channels.empty()) return out;
    std::uniform_int_distribution<std::size_t> pick(0, channels.size() - 1);
    for (std::size_t i = 0; i < n; ++i) {
        const ChannelDecl* d = delta.find(channels[pick(rng)]);
        if (!d) throw std::invalid_argument("unknown channel");
        out.push_back({d->name, random_value(d->type, rng)});
    }
    return out;
}

std::vector<InputEvent> random_events(const InputContext& delta, std::size_t n, std::mt19937_64& rng) {
    std::vector<std::string> names;
    for (const auto& d : delta.decls()) names.push_back(d.name);
    return random_events(delta, names, n, rng);
}

InputBuffer random_buffer(const InputContext& delta, std::mt19937_64& rng) {
    InputBuffer buf;
    for (const auto& d : delta.decls())
        if (is_buffered(d.cls)) buf[d.name] = random_value(d.type, rng);
    return buf;
}

// ---------------------------------------------------------------------------
// GC audit

void ShadowAuditor::on_deref(const Location& l) {
    ++derefs_;
    if (tombstones_.count(l.id)) hits_.push_back(l.id);
}

void ShadowAuditor::on_collect(const Heap& dropped) {
    for (const auto& [id, cell] : dropped) tombstones_.insert(id);
}

AuditReport audit_gc(const ElaboratedProgram& program, const InputBuffer& buffer,
                     const std::vector<InputEvent>& events, Fault fault) {
    ShadowAuditor auditor;
    MachineConfig cfg;
    cfg.eval.observer = &auditor;
    cfg.fault = fault;
    AuditReport r;
    try {
        Machine m(program, buffer, cfg);
        m.init();
        r.max_heap = m.running().store.size();
        for (const auto& e : events) {
            m.step_input(e);
            r.max_heap = std::max(r.max_heap, m.running().store.size());
            m.step_output();
            ++r.steps;
        }
    } catch (const MachineError& e) {
        r.machine_error = e.what();
    }
    r.derefs = auditor.derefs();
    r.collected = auditor.collected();
    r.tombstone_hits = auditor.hits();
    return r;
}

// ---------------------------------------------------------------------------
// Determinism

namespace {

void canon(const TermPtr& t, std::vector<std::string>& scope, const std::map<std::uint64_t, std::uint64_t>& rank,
           std::string& out);

void canon_clock(const ClockPtr& c, std::vector<std::string>& scope,
                 const std::map<std::uint64_t, std::uint64_t>& rank, std::string& out) {
    if (!c) {
        out += "{}";
        return;
    }
    if (c->kind == ClockExpr::Kind::Of) {
        out += "cl(";
        canon(c->value, scope, rank, out);
        out += ")";
        return;
    }
    out += "(";
    canon_clock(c->left, scope, rank, out);
    out += "|";
    canon_clock(c->right, scope, rank, out);
    out += ")";
}

void canon_under(const TermPtr& t, const std::vector<std::string>& names, std::vector<std::string>& scope,
                 const std::map<std::uint64_t, std::uint64_t>& rank, std::string& out) {
    for (const auto& n : names) scope.push_back(n);
    canon(t, scope, rank, out);
    scope.resize(scope.size() - names.size());
}

void canon(const TermPtr& t, std::vector<std::string>& scope, const std::map<std::uint64_t, std::uint64_t>& rank,
           std::string& out) {
    out += std::to_string(static_cast<int>(t->kind));
    switch (t->kind) {
        case TermKind::Var: {
            for (std::size_t i = scope.size(); i-- > 0;)
                if (scope[i] == t->name) {
                    out += "#" + std::to_string(i);
                    return;
                }
            out += "$" + t->name;
            return;
        }
        case TermKind::Nat:
            out += "n" + std::to_string(t->nat);
            return;
        case TermKind::Float:
            out += "f" + std::to_string(std::bit_cast<std::uint64_t>(t->number));
            return;
        case TermKind::Loc: {
            auto it = rank.find(t->loc.id);
            out += "L" + (it == rank.end() ? "?" + std::to_string(t->loc.id) : std::to_string(it->second));
            out += to_string(t->loc.clock);
            return;
        }
        case TermKind::Await:
        case TermKind::Read:
            out += "@" + t->name;
            return;
        default:
            break;
    }
    out += "(";
    if (t->kind == TermKind::Inj || t->kind == TermKind::Proj) out += std::to_string(t->index) + ",";
    if (t->kind == TermKind::Prim) out += std::string(to_string(t->op)) + ",";
    if (t->kind == TermKind::Delay) canon_clock(t->clock, scope, rank, out);
    for (std::size_t i = 0; i < t->kids.size(); ++i) {
        out += ",";
        const TermPtr& k = t->kids[i];
        switch (t->kind) {
            case TermKind::Lam:
            case TermKind::Fix:
            case TermKind::DFix:
                canon_under(k, {t->name}, scope, rank, out);
                break;
            case TermKind::Let:
                if (i == 1)
                    canon_under(k, {t->name}, scope, rank, out);
                else
                    canon(k, scope, rank, out);
                break;
            case TermKind::Case:
                if (i == 0)
                    canon(k, scope, rank, out);
                else
                    canon_under(k, {i == 1 ? t->name : t->name2}, scope, rank, out);
                break;
            case TermKind::NatRec:
                if (i == 1)
                    canon_under(k, {t->name, t->name2}, scope, rank, out);
                else
                    canon(k, scope, rank, out);
                break;
            default:
                canon(k, scope, rank, out);
        }
    }
    out += ")";
}

std::map<std::uint64_t, std::uint64_t> location_ranks(const Running& s) {
    std::set<std::uint64_t> ids;
    for (const auto& [name, l] : s.outputs) ids.insert(l.id);
    auto add_heap = [&](const Heap& h) {
        for (const auto& [id, cell] : h) {
            ids.insert(id);
            collect_locations(cell.term, ids);
        }
    };
    add_heap(s.store.later);
    if (s.store.now) {
        add_heap(s.store.now->heap);
        collect_locations(s.store.now->value, ids);
    }
    for (const auto& [k, v] : s.buffer) collect_locations(v, ids);
    std::map<std::uint64_t, std::uint64_t> rank;
    std::uint64_t r = 0;
    for (auto id : ids) rank[id] = r++;
    return rank;
}

}  // namespace

std::string canonical_term(const TermPtr& t, const std::map<std::uint64_t, std::uint64_t>& rank) {
    std::vector<std::string> scope;
    std::string out;
    canon(t, scope, rank, out);
    return out;
}

std::string canonical_state(const Running& s) {
    auto rank = location_ranks(s);
    std::string out = "outputs:";
    for (const auto& [name, l] : s.outputs) out += name + "=" + std::to_string(rank[l.id]) + to_string(l.clock) + ";";
    out += "buffer:";
    for (const auto& [k, v] : s.buffer) out += k + "=" + canonical_term(v, rank) + ";";
    auto heap = [&](const Heap& h) {
        for (const auto& [id, cell] : h)
            out += std::to_string(rank[id]) + to_string(cell.loc.clock) + "=" + canonical_term(cell.term, rank) + ";";
    };
    out += "later:";
    heap(s.store.later);
    if (s.store.now) {
        out += "now:" + s.store.now->channel + "=" + canonical_term(s.store.now->value, rank) + ";";
        heap(s.store.now->heap);
    }
    return out;
}

std::uint64_t state_hash(const Running& s) { return std::hash<std::string>{}(canonical_state(s)); }

std::string canonical_batch(const OutputBatch& b) {
    std::string out;
    for (const auto& [name, v] : b) out += name + "=" + canonical_term(v, {}) + ";";
    return out;
}

DeterminismReport check_determinism(const ElaboratedProgram& program, const InputBuffer& buffer,
                                    const std::vector<InputEvent>& events) {
    struct Trace {
        std::vector<std::string> batches;
        std::vector<std::string> states;
        std::optional<std::string> error;
    };
    auto run_once = [&](std::uint64_t seed) {
        Trace tr;
        MachineConfig cfg;
        cfg.seed = seed;
        try {
            Machine m(program, buffer, cfg);
            tr.batches.push_back(canonical_batch(m.init()));
            tr.states.push_back(canonical_state(m.running()));
            for (const auto& e : events) {
                tr.batches.push_back(canonical_batch(m.step(e)));
                tr.states.push_back(canonical_state(m.running()));
            }
        } catch (const MachineError& e) {
            tr.error = e.what();
        }
        return tr;
    };
    Trace a = run_once(1);
    Trace b = run_once(1'000'003);
    DeterminismReport r;
    r.steps = std::min(a.batches.size(), b.batches.size());
    if (a.error) r.machine_error = a.error;
    else if (b.error) r.machine_error = b.error;
    for (std::size_t i = 0; i < r.steps; ++i) {
        if (!r.first_output_mismatch && a.batches[i] != b.batches[i]) r.first_output_mismatch = i;
        if (!r.first_state_mismatch && a.states[i] != b.states[i]) r.first_state_mismatch = i;
    }
    if (a.batches.size() != b.batches.size() && !r.first_output_mismatch) r.first_output_mismatch = r.steps;
    return r;
}

// ---------------------------------------------------------------------------
// Signal independence

namespace {

void walk(const TermPtr& t, const std::function<void(const TermPtr&)>& f) {
    f(t);
    for (const auto& k : t->kids) walk(k, f);
    if (t->clock)
        for (const auto& a : clock_atoms(t->clock)) walk(a, f);
}

std::set<std::string> reachable_globals(const ElaboratedProgram& p, const TermPtr& root) {
    std::set<std::string> seen;
    std::vector<std::string> work(root->free_vars().begin(), root->free_vars().end());
    while (!work.empty()) {
        std::string n = work.back();
        work.pop_back();
        const GlobalDef* g = p.find_global(n);
        if (!g || !seen.insert(n).second) continue;
        for (const auto& v : g->body->free_vars()) work.push_back(v);
    }
    return seen;
}

}  // namespace

std::set<std::string> output_channels(const ElaboratedProgram& program, std::size_t i) {
    const OutputDef& o = program.outputs.at(i);
    std::set<std::string> chans;
    auto collect = [&](const TermPtr& t) {
        walk(t, [&](const TermPtr& s) {
            if (s->kind == TermKind::Await || s->kind == TermKind::Read) chans.insert(s->name);
        });
    };
    collect(o.expr);
    for (const auto& g : reachable_globals(program, o.expr)) collect(program.find_global(g)->body);
    return chans;
}

ElaboratedProgram restrict_output(const ElaboratedProgram& program, std::size_t i) {
    const OutputDef& o = program.outputs.at(i);
    auto keep = reachable_globals(program, o.expr);
    ElaboratedProgram r;
    r.inputs = program.inputs.restrict_to(output_channels(program, i));
    for (const auto& g : program.globals)
        if (keep.count(g.name)) r.globals.push_back(g);
    r.outputs.push_back(o);
    check_reactive_program(r);
    return r;
}

IndependenceReport check_independence(const ElaboratedProgram& program, const InputBuffer& buffer,
                                      const std::vector<InputEvent>& events) {
    IndependenceReport r;
    std::vector<std::set<std::string>> deps;
    for (std::size_t i = 0; i < program.outputs.size(); ++i) {
        try {
            ElaboratedProgram sub = restrict_output(program, i);
            deps.push_back(std::set<std::string>());
            for (const auto& d : sub.inputs.decls()) deps.back().insert(d.name);
        } catch (const TypeError& e) {
            r.violations.push_back("output '" + program.outputs[i].name +
                                   "' does not typecheck over its own channels: " + e.what());
            deps.push_back({});
        }
    }
    Machine m(program, buffer);
    m.init();
    for (std::size_t step = 0; step < events.size(); ++step) {
        const InputEvent& e = events[step];
        OutputBatch b = m.step(e);
        ++r.events;
        const ChannelDecl* d = program.inputs.find(e.channel);
        bool buffered_only = d && !is_push(d->cls);
        if (buffered_only) {
            ++r.buffered_events;
            if (!b.empty())
                r.violations.push_back("step " + std::to_string(step + 1) + ": buffered input '" + e.channel +
                                       "' produced output");
            continue;
        }
        for (const auto& [name, v] : b) {
            std::size_t i = 0;
            while (program.outputs[i].name != name) ++i;
            if (!deps[i].count(e.channel))
                r.violations.push_back("step " + std::to_string(step + 1) + ": output '" + name +
                                       "' updated on unrelated channel '" + e.channel + "'");
        }
    }
    return r;
}

// ---------------------------------------------------------------------------
// Fuzzing

InputContext fuzz_context() {
    return InputContext{
        {"a", ChannelClass::PushOnly, ty::nat()},
        {"b", ChannelClass::PushOnly, ty::nat()},
        {"u", ChannelClass::PushOnly, ty::unit()},
        {"time", ChannelClass::BufferedOnly, ty::flt()},
        {"s", ChannelClass::BufferedPush, ty::flt()},
    };
}

bool GenNode::is_float() const {
    switch (kind) {
        case Kind::FConst:
        case Kind::FSig:
        case Kind::FIntegral:
        case Kind::FDerivative:
        case Kind::FScale:
            return true;
        default:
            return false;
    }
}

namespace {

using K = GenNode::Kind;

struct Gen {
    std::mt19937_64& rng;
    int var_counter = 0;

    std::size_t pick(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); }
    std::uint64_t small() { return std::uniform_int_distribution<std::uint64_t>(0, 5)(rng); }
    std::string chan(std::initializer_list<const char*> cs) { return std::data(cs)[pick(cs.size())]; }

    GenNode leaf_nat(const std::vector<std::string>& vars) {
        GenNode n;
        std::size_t options = vars.empty() ? 3 : 4;
        switch (pick(options)) {
            case 0:
                n.kind = K::Const;
                n.n = small();
                break;
            case 1:
                n.kind = K::Count;
                n.chan = chan({"a", "b", "u"});
                n.n = small();
                break;
            case 2:
                n.kind = K::ScanAwait;
                n.chan = chan({"a", "b"});
                n.n = small();
                break;
            default:
                n.kind = K::Bound;
                n.var = vars[pick(vars.size())];
        }
        return n;
    }

    GenNode delay(int depth) {
        GenNode n;
        if (depth <= 1 || pick(3) != 0) {
            n.kind = K::Await;
            n.chan = chan({"a", "b"});
            return n;
        }
        n.kind = K::Interleave;
        n.kids = {delay(depth - 1), delay(depth - 1)};
        return n;
    }

    GenNode nat(int depth, const std::vector<std::string>& vars) {
        if (depth <= 1 || pick(4) == 0) return leaf_nat(vars);
        GenNode n;
        switch (pick(8)) {
            case 0:
                n.kind = K::MapAdd;
                n.n = small();
                n.kids = {nat(depth - 1, vars)};
                break;
            case 1:
                n.kind = K::MapMul;
                n.n = small();
                n.kids = {nat(depth - 1, vars)};
                break;
            case 2:
                n.kind = K::MapClamp;
                n.n = small();
                n.kids = {nat(depth - 1, vars)};
                break;
            case 3:
                n.kind = K::Sum;
                n.kids = {nat(depth - 1, vars)};
                break;
            case 4:
                n.kind = K::Scan;
                n.n = small();
                n.kids = {nat(depth - 1, vars)};
                break;
            case 5:
                n.kind = K::Switch;
                n.kids = {nat(depth - 1, vars), delay(depth - 1)};
                break;
            case 6: {
                n.kind = K::Toggle;
                n.n = small();
                n.var = "n" + std::to_string(++var_counter);
                auto inner = vars;
                inner.push_back(n.var);
                n.kids = {nat(depth - 1, inner), nat(depth - 1, inner)};
                break;
            }
            default:
                n.kind = K::ZipFst;
                n.kids = {nat(depth - 1, vars), nat(depth - 1, vars)};
        }
        return n;
    }

    GenNode flt(int depth) {
        GenNode n;
        if (depth <= 1 || pick(3) == 0) {
            if (pick(2) == 0) {
                n.kind = K::FConst;
                n.n = small();
            } else {
                n.kind = K::FSig;
            }
            return n;
        }
        switch (pick(3)) {
            case 0:
                n.kind = K::FIntegral;
                break;
            case 1:
                n.kind = K::FDerivative;
                break;
            default:
                n.kind = K::FScale;
        }
        n.kids = {flt(depth - 1)};
        return n;
    }
};

std::string render(const GenNode& n) {
    auto k = [&](std::size_t i) { return "(" + render(n.kids[i]) + ")"; };
    std::string num = std::to_string(n.n);
    switch (n.kind) {
        case K::Const:
            return "const " + num;
        case K::Count:
            return "count sigAwait{" + n.chan + "} " + num;
        case K::ScanAwait:
            return "scanAwait (box (\\m k -> m + k)) " + num + " sigAwait{" + n.chan + "}";
        case K::Bound:
            return "const " + n.var;
        case K::MapAdd:
            return "map (box (\\x -> x + " + num + ")) " + k(0);
        case K::MapMul:
            return "map (box (\\x -> x * " + num + ")) " + k(0);
        case K::MapClamp:
            return "map (box (\\x -> if x < " + num + " then 0 else x)) " + k(0);
        case K::Sum:
            return "sum " + k(0);
        case K::Scan:
            return "scan (box (\\m x -> m + x)) " + num + " " + k(0);
        case K::Switch:
            return "switch " + k(0) + " " + k(1);
        case K::Toggle:
            return "toggleSig (box (await u)) (box (\\" + n.var + " -> " + render(n.kids[0]) + ")) (box (\\" + n.var +
                   " -> " + render(n.kids[1]) + ")) " + num;
        case K::ZipFst:
            return "map (box (\\p -> fst p)) (zip " + k(0) + " " + k(1) + ")";
        case K::Await:
            return "sigAwait{" + n.chan + "}";
        case K::Interleave:
            return "interleave (box (\\x y -> x + y)) " + k(0) + " " + k(1);
        case K::FConst:
            return "const " + num + ".5";
        case K::FSig:
            return "sig{s}";
        case K::FIntegral:
            return "integral{s} 0.0 " + k(0);
        case K::FDerivative:
            return "derivative{s} " + k(0);
        case K::FScale:
            return "map (box (\\x -> x * 2.0)) " + k(0);
    }
    return "const 0";
}

std::size_t node_size(const GenNode& n) {
    std::size_t s = 1;
    for (const auto& k : n.kids) s += node_size(k);
    return s;
}

GenNode smallest_like(const GenNode& n) {
    GenNode out;
    if (n.is_delay()) {
        out.kind = K::Await;
        out.chan = "a";
    } else if (n.is_float()) {
        out.kind = K::FConst;
    } else {
        out.kind = K::Const;
    }
    return out;
}

bool same_node(const GenNode& a, const GenNode& b) {
    if (a.kind != b.kind || a.chan != b.chan || a.var != b.var || a.n != b.n || a.kids.size() != b.kids.size())
        return false;
    for (std::size_t i = 0; i < a.kids.size(); ++i)
        if (!same_node(a.kids[i], b.kids[i])) return false;
    return true;
}

/// Single-edit simplifications of `n`.
std::vector<GenNode> simplifications(const GenNode& n) {
    std::vector<GenNode> out;
    GenNode leaf = smallest_like(n);
    if (!same_node(leaf, n)) out.push_back(leaf);
    if (n.kind != K::Toggle)
        for (const auto& k : n.kids)
            if (k.is_delay() == n.is_delay() && k.is_float() == n.is_float()) out.push_back(k);
    if (n.n > 0) {
        GenNode z = n;
        z.n = 0;
        out.push_back(z);
    }
    for (std::size_t i = 0; i < n.kids.size(); ++i)
        for (auto& alt : simplifications(n.kids[i])) {
            GenNode c = n;
            c.kids[i] = std::move(alt);
            out.push_back(std::move(c));
        }
    return out;
}

}  // namespace

GenProgram generate_program(std::mt19937_64& rng, const GenConfig& cfg) {
    Gen g{rng};
    GenProgram p;
    std::size_t outs = 1 + g.pick(std::max<std::size_t>(cfg.max_outputs, 1));
    for (std::size_t i = 0; i < outs; ++i)
        p.outputs.push_back(g.pick(4) == 0 ? g.flt(cfg.max_depth) : g.nat(cfg.max_depth, {}));
    return p;
}

std::string render(const GenProgram& p) {
    std::string s =
        "inputs\na : push Nat\nb : push Nat\nu : push Unit\ntime : buffered Float\ns : buffered push Float\n\n"
        "outputs\n";
    for (std::size_t i = 0; i < p.outputs.size(); ++i)
        s += "o" + std::to_string(i + 1) + " : " + (p.outputs[i].is_float() ? "Float" : "Nat") + " = " +
             render(p.outputs[i]) + "\n";
    return s;
}

std::size_t gen_size(const GenProgram& p) {
    std::size_t s = 0;
    for (const auto& o : p.outputs) s += node_size(o);
    return s;
}

FuzzCase fuzz_case(std::uint64_t seed, std::size_t index, const FuzzConfig& cfg) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
    std::mt19937_64 rng(seq);
    FuzzCase c;
    c.program = generate_program(rng, cfg.gen);
    InputContext delta = fuzz_context();
    c.buffer = random_buffer(delta, rng);
    c.events = random_events(delta, cfg.events, rng);
    return c;
}

std::optional<std::string> run_case(const FuzzCase& c, const MachineConfig& machine) {
    ElaboratedProgram prog;
    try {
        prog = load_program(render(c.program));
    } catch (const std::exception& e) {
        return std::string("generated program rejected: ") + e.what();
    }
    try {
        Machine m(prog, c.buffer, machine);
        m.init();
        for (const auto& e : c.events) m.step(e);
    } catch (const MachineError& e) {
        return std::string(e.what());
    }
    return std::nullopt;
}

FuzzCase shrink_case(FuzzCase c, const MachineConfig& machine) {
    auto fails = [&](const FuzzCase& x) { return run_case(x, machine).has_value(); };
    bool progress = true;
    while (progress) {
        progress = false;
        for (std::size_t chunk = std::max<std::size_t>(c.events.size() / 2, 1); chunk >= 1; chunk /= 2) {
            for (std::size_t start = 0; start < c.events.size();) {
                FuzzCase t = c;
                std::size_t end = std::min(start + chunk, t.events.size());
                t.events.erase(t.events.begin() + static_cast<std::ptrdiff_t>(start),
                               t.events.begin() + static_cast<std::ptrdiff_t>(end));
                if (fails(t)) {
                    c = std::move(t);
                    progress = true;
                } else {
                    start += chunk;
                }
            }
            if (chunk == 1) break;
        }
        if (c.program.outputs.size() > 1) {
            for (std::size_t i = 0; i < c.program.outputs.size() && c.program.outputs.size() > 1;) {
                FuzzCase t = c;
                t.program.outputs.erase(t.program.outputs.begin() + static_cast<std::ptrdiff_t>(i));
                if (fails(t)) {
                    c = std::move(t);
                    progress = true;
                } else {
                    ++i;
                }
            }
        }
        for (std::size_t i = 0; i < c.program.outputs.size(); ++i) {
            for (auto& alt : simplifications(c.program.outputs[i])) {
                FuzzCase t = c;
                t.program.outputs[i] = std::move(alt);
                if (fails(t)) {
                    c = std::move(t);
                    progress = true;
                    break;
                }
            }
        }
    }
    return c;
}

FuzzReport fuzz_productivity(const FuzzConfig& cfg) {
    FuzzReport r;
    for (std::size_t i = 0; i < cfg.cases; ++i) {
        FuzzCase c = fuzz_case(cfg.seed, i, cfg);
        ++r.cases;
        auto err = run_case(c, cfg.machine);
        if (!err) {
            r.steps += c.events.size();
            continue;
        }
        FuzzCase small = cfg.shrink ? shrink_case(c, cfg.machine) : c;
        auto small_err = run_case(small, cfg.machine);
        r.failures.push_back(
            FuzzFailure{cfg.seed, i, render(small.program), small.events, small_err ? *small_err : *err});
    }
    return r;
}

}  // namespace asyncratt
