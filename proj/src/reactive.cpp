#include "asyncratt/reactive.hpp"

#include <stdexcept>

namespace asyncratt {

bool value_has_type(const TermPtr& v, const TypePtr& a) {
    switch (a->kind) {
        case TypeKind::Unit:
            return v->kind == TermKind::Unit;
        case TypeKind::Nat:
            return as_numeral(v).has_value();
        case TypeKind::Float:
            return v->kind == TermKind::Float;
        case TypeKind::Prod:
            return v->kind == TermKind::Pair && value_has_type(v->kids[0], a->left) &&
                   value_has_type(v->kids[1], a->right);
        case TypeKind::Sum:
            return v->kind == TermKind::Inj && value_has_type(v->kids[0], v->index == 1 ? a->left : a->right);
        default:
            return false;
    }
}

void validate_event(const InputContext& delta, const InputEvent& e) {
    const ChannelDecl* d = delta.find(e.channel);
    if (!d) throw EventError("unknown input channel '" + e.channel + "'");
    if (!e.value || !value_has_type(e.value, d->type))
        throw EventError("value for '" + e.channel + "' does not have type " + to_string(d->type));
}

void validate_buffer(const InputContext& delta, const InputBuffer& buffer) {
    for (const auto& d : delta.decls()) {
        if (!is_buffered(d.cls)) continue;
        auto it = buffer.find(d.name);
        if (it == buffer.end()) throw EventError("missing initial value for buffered channel '" + d.name + "'");
        if (!value_has_type(it->second, d.type))
            throw EventError("initial value for '" + d.name + "' does not have type " + to_string(d.type));
    }
    for (const auto& [name, v] : buffer) {
        const ChannelDecl* d = delta.find(name);
        if (!d) throw EventError("initial value for unknown channel '" + name + "'");
        if (!is_buffered(d->cls)) throw EventError("channel '" + name + "' is push only and has no buffer");
    }
}

std::pair<Heap, Heap> heap_split(const Heap& heap, const std::string& kappa) {
    std::pair<Heap, Heap> out;
    for (const auto& [id, cell] : heap) (cell.loc.clock.count(kappa) ? out.first : out.second).emplace(id, cell);
    return out;
}

Store gc(const Store& store) { return Store{std::nullopt, store.later}; }

Heap reachable(const Running& s) {
    Heap out;
    std::vector<std::uint64_t> work;
    for (const auto& [name, l] : s.outputs) work.push_back(l.id);
    while (!work.empty()) {
        std::uint64_t id = work.back();
        work.pop_back();
        if (out.count(id)) continue;
        const HeapCell* cell = s.store.find(id);
        if (!cell) continue;
        out.emplace(id, *cell);
        std::set<std::uint64_t> refs;
        collect_locations(cell->term, refs);
        for (auto r : refs) work.push_back(r);
    }
    return out;
}

std::vector<std::pair<TermPtr, Location>> split_outputs(const TermPtr& v, std::size_t n) {
    std::vector<std::pair<TermPtr, Location>> out;
    auto take = [&](const TermPtr& sig) {
        if (sig->kind != TermKind::Into || sig->kids[0]->kind != TermKind::Pair ||
            sig->kids[0]->kids[1]->kind != TermKind::Loc)
            throw StuckError(StuckKind::IllTypedRedex, sig, {}, "output value is not of the form v :: l");
        out.emplace_back(sig->kids[0]->kids[0], sig->kids[0]->kids[1]->loc);
    };
    if (n == 0) return out;
    TermPtr cur = v;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        if (cur->kind != TermKind::Pair) throw StuckError(StuckKind::IllTypedRedex, cur, {}, "output tuple is too short");
        take(cur->kids[0]);
        cur = cur->kids[1];
    }
    take(cur);
    return out;
}

std::pair<OutputBatch, Running> init(const InitState& s, const std::vector<std::string>& names, Allocator& alloc,
                                     const EvalConfig& cfg) {
    Running r;
    r.buffer = s.buffer;
    TermPtr v = eval_in(s.program, r.store, r.buffer, alloc, cfg);
    OutputBatch batch;
    auto parts = split_outputs(v, names.size());
    for (std::size_t i = 0; i < names.size(); ++i) {
        batch.emplace_back(names[i], parts[i].first);
        r.outputs.emplace_back(names[i], parts[i].second);
    }
    return {std::move(batch), std::move(r)};
}

Running step_input(Running s, const InputContext& delta, const InputEvent& e) {
    if (s.store.now) throw std::logic_error("input transition while an update is pending");
    validate_event(delta, e);
    if (s.buffer.count(e.channel)) s.buffer[e.channel] = e.value;
    auto [now, later] = heap_split(s.store.later, e.channel);
    s.store.now = NowPart{std::move(now), e.channel, e.value};
    s.store.later = std::move(later);
    return s;
}

std::pair<OutputBatch, Running> step_output(Running s, Allocator& alloc, const EvalConfig& cfg, Fault fault) {
    if (!s.store.now) throw std::logic_error("output transition without a pending input");
    const std::string kappa = s.store.now->channel;
    if (fault == Fault::CollectBeforeCompute) {
        if (cfg.observer) cfg.observer->on_collect(s.store.now->heap);
        s.store.now->heap.clear();
    }
    OutputBatch batch;
    for (auto& [name, l] : s.outputs) {
        if (!l.clock.count(kappa)) continue;
        TermPtr v = eval_in(tm::adv(tm::loc(l)), s.store, s.buffer, alloc, cfg);
        auto parts = split_outputs(v, 1);
        batch.emplace_back(name, parts[0].first);
        l = parts[0].second;
    }
    if (cfg.observer) cfg.observer->on_collect(s.store.now->heap);
    s.store = gc(s.store);
    return {std::move(batch), std::move(s)};
}

Machine::Machine(const ElaboratedProgram& program, InputBuffer buffer, MachineConfig cfg)
    : program_(program), cfg_(cfg), alloc_(cfg.seed), state_(InitState{std::move(buffer), program.to_term()}) {
    for (const auto& o : program_.outputs) names_.push_back(o.name);
    validate_buffer(program_.inputs, std::get<InitState>(state_).buffer);
}

OutputBatch Machine::init() {
    if (!std::holds_alternative<InitState>(state_)) throw std::logic_error("machine already initialised");
    auto [batch, r] = asyncratt::init(std::get<InitState>(state_), names_, alloc_, cfg_.eval);
    state_ = std::move(r);
    return batch;
}

const Running& Machine::running() const {
    if (!std::holds_alternative<Running>(state_)) throw std::logic_error("machine not initialised");
    return std::get<Running>(state_);
}

void Machine::step_input(const InputEvent& e) {
    state_ = asyncratt::step_input(running(), program_.inputs, e);
}

OutputBatch Machine::step_output() {
    auto [batch, r] = asyncratt::step_output(running(), alloc_, cfg_.eval, cfg_.fault);
    state_ = std::move(r);
    ++steps_;
    return batch;
}

OutputBatch Machine::step(const InputEvent& e) {
    step_input(e);
    return step_output();
}

std::vector<OutputBatch> run(const ElaboratedProgram& program, const InputBuffer& buffer,
                             const std::vector<InputEvent>& events, const MachineConfig& cfg) {
    for (const auto& e : events) validate_event(program.inputs, e);
    Machine m(program, buffer, cfg);
    std::vector<OutputBatch> out;
    out.push_back(m.init());
    for (const auto& e : events) out.push_back(m.step(e));
    return out;
}

}  // namespace asyncratt
