#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "asyncratt/reactive.hpp"
#include "asyncratt/stdlib.hpp"
#include "asyncratt/verify.hpp"
#include "helpers.hpp"

using namespace asyncratt;
using testing_support::find_output;
using testing_support::nat_event;
using testing_support::nat_of;
using testing_support::unit_event;

namespace {

HeapCell cell(std::uint64_t id, Clock c) { return {{id, std::move(c)}, tm::unit()}; }

std::multiset<Clock> clocks(const Heap& h) {
    std::multiset<Clock> out;
    for (const auto& [id, c] : h) out.insert(c.loc.clock);
    return out;
}

}  // namespace

TEST(HeapSplit, Field1Shape) {
    Heap h{{1, cell(1, {"up", "toggle"})}, {2, cell(2, {"up"})}, {4, cell(4, {"toggle"})}};
    auto [now, later] = heap_split(h, "up");
    EXPECT_EQ(now.size(), 2u);
    EXPECT_TRUE(now.count(1) && now.count(2));
    ASSERT_EQ(later.size(), 1u);
    EXPECT_TRUE(later.count(4));
}

TEST(HeapSplit, Empty) {
    auto [now, later] = heap_split({}, "up");
    EXPECT_TRUE(now.empty());
    EXPECT_TRUE(later.empty());
}

TEST(HeapSplit, NothingWaiting) {
    Heap h{{1, cell(1, {"a"})}, {2, cell(2, {"b"})}};
    auto [now, later] = heap_split(h, "c");
    EXPECT_TRUE(now.empty());
    EXPECT_EQ(later.size(), 2u);
}

TEST(Gc, DropsNowPart) {
    Store s;
    s.now = NowPart{{{1, cell(1, {"up"})}}, "up", tm::unit()};
    s.later = {{4, cell(4, {"toggle"})}};
    Store g = gc(s);
    EXPECT_FALSE(g.two_heap());
    EXPECT_EQ(g.later.size(), 1u);
    EXPECT_TRUE(g.later.count(4));
}

TEST(Gc, SingleHeapIdentity) {
    Store s;
    s.later = {{4, cell(4, {"toggle"})}};
    Store g = gc(s);
    EXPECT_EQ(g.later.size(), 1u);
    EXPECT_FALSE(g.two_heap());
}

// ---------------------------------------------------------------------------
// The field1 run

TEST(Field1, Init) {
    Machine m(testing_support::load_example("field1.ratt"), {});
    OutputBatch b = m.init();
    ASSERT_EQ(b.size(), 1u);
    EXPECT_EQ(b[0].first, "x");
    EXPECT_EQ(nat_of(b[0].second), 0u);
    const Running& r = m.running();
    ASSERT_EQ(r.outputs.size(), 1u);
    EXPECT_EQ(r.outputs[0].second.clock, (Clock{"toggle", "up"}));
    EXPECT_EQ(clocks(r.store.later),
              (std::multiset<Clock>{{"toggle", "up"}, {"up"}, {"up"}, {"toggle"}}));
}

TEST(Field1, InputSplitsOnUp) {
    Machine m(testing_support::load_example("field1.ratt"), {});
    m.init();
    m.step_input(unit_event("up"));
    const Running& r = m.running();
    ASSERT_TRUE(r.store.two_heap());
    EXPECT_EQ(clocks(r.store.now->heap), (std::multiset<Clock>{{"toggle", "up"}, {"up"}, {"up"}}));
    EXPECT_EQ(clocks(r.store.later), (std::multiset<Clock>{{"toggle"}}));
    EXPECT_EQ(r.store.now->channel, "up");
}

TEST(Field1, OutputAfterUp) {
    Machine m(testing_support::load_example("field1.ratt"), {});
    m.init();
    OutputBatch b = m.step(unit_event("up"));
    ASSERT_EQ(b.size(), 1u);
    EXPECT_EQ(nat_of(b[0].second), 1u);
    const Running& r = m.running();
    EXPECT_FALSE(r.store.two_heap());
    EXPECT_EQ(clocks(r.store.later), (std::multiset<Clock>{{"toggle", "up"}, {"up"}, {"up"}, {"toggle"}}));
    EXPECT_EQ(r.outputs[0].second.clock, (Clock{"toggle", "up"}));
}

TEST(Field1, FullTrace) {
    ElaboratedProgram p = testing_support::load_example("field1.ratt");
    auto batches = run(p, {}, {unit_event("up"), unit_event("toggle"), unit_event("up"), unit_event("up")});
    ASSERT_EQ(batches.size(), 5u);
    EXPECT_EQ(nat_of(find_output(batches[0], "x")), 0u);
    EXPECT_EQ(nat_of(find_output(batches[1], "x")), 1u);
    EXPECT_EQ(nat_of(find_output(batches[2], "x")), 1u);
    EXPECT_TRUE(batches[3].empty());
    EXPECT_TRUE(batches[4].empty());
}

TEST(Field1, UpAfterToggleLeavesStateUnchanged) {
    Machine m(testing_support::load_example("field1.ratt"), {});
    m.init();
    m.step(unit_event("up"));
    m.step(unit_event("toggle"));
    m.step(unit_event("up"));
    std::string once = canonical_state(m.running());
    EXPECT_TRUE(m.step(unit_event("up")).empty());
    EXPECT_EQ(canonical_state(m.running()), once);
    EXPECT_EQ(m.running().store.later.size(), 2u);
    EXPECT_EQ(clocks(m.running().store.later), (std::multiset<Clock>{{"toggle"}, {"toggle"}}));
}

TEST(Field1, NeverLocationIsNotOnTheHeap) {
    Machine m(testing_support::load_example("field1.ratt"), {});
    m.init();
    m.step(unit_event("up"));
    m.step(unit_event("toggle"));
    const Heap& heap = m.running().store.later;
    std::set<std::uint64_t> mentioned;
    for (const auto& [id, c] : heap) collect_locations(c.term, mentioned);
    std::size_t dangling = 0;
    for (auto id : mentioned) dangling += heap.count(id) ? 0 : 1;
    EXPECT_GE(dangling, 1u);
}

// ---------------------------------------------------------------------------
// Initialisation shapes

TEST(Init, ConstHasEmptyClockTail) {
    ElaboratedProgram p = load_program("outputs\ny : Nat = const 5\n");
    Machine m(p, {});
    OutputBatch b = m.init();
    ASSERT_EQ(b.size(), 1u);
    EXPECT_EQ(nat_of(b[0].second), 5u);
    EXPECT_TRUE(m.running().outputs[0].second.clock.empty());
    EXPECT_TRUE(m.running().store.later.empty());
}

TEST(Init, DeclarationOrder) {
    ElaboratedProgram p = load_program("outputs\nb : Nat = const 2\na : Unit = const ()\nc : Float = const 1.5\n");
    OutputBatch batch = Machine(p, {}).init();
    ASSERT_EQ(batch.size(), 3u);
    EXPECT_EQ(batch[0].first, "b");
    EXPECT_EQ(batch[1].first, "a");
    EXPECT_EQ(batch[2].first, "c");
}

TEST(Init, NoOutputs) {
    ElaboratedProgram p = load_program("");
    Machine m(p, {});
    EXPECT_TRUE(m.init().empty());
    EXPECT_TRUE(m.running().outputs.empty());
}

TEST(Init, RunningBeforeInitThrows) {
    Machine m(load_program(""), {});
    EXPECT_THROW(m.running(), std::logic_error);
}

// ---------------------------------------------------------------------------
// Inputs and buffers

TEST(Input, BufferedPushUpdatesBufferAndSplits) {
    ElaboratedProgram p = testing_support::load_example("sum.ratt");
    Machine m(p, {{"n", tm::nat(0)}});
    m.init();
    m.step_input(nat_event("n", 7));
    const Running& r = m.running();
    EXPECT_EQ(nat_of(r.buffer.at("n")), 7u);
    ASSERT_TRUE(r.store.two_heap());
    EXPECT_FALSE(r.store.now->heap.empty());
}

TEST(Input, BufferedOnlyLeavesNowHeapEmpty) {
    ElaboratedProgram p = testing_support::load_example("stamp.ratt");
    Machine m(p, {{"time", tm::flt(0.0)}});
    m.init();
    m.step_input(testing_support::float_event("time", 4.0));
    const Running& r = m.running();
    ASSERT_TRUE(r.store.two_heap());
    EXPECT_TRUE(r.store.now->heap.empty());
    EXPECT_EQ(r.buffer.at("time")->number, 4.0);
    EXPECT_TRUE(m.step_output().empty());
}

TEST(Input, PushOnlyLeavesBufferAlone) {
    ElaboratedProgram p = testing_support::load_example("stamp.ratt");
    Machine m(p, {{"time", tm::flt(2.0)}});
    m.init();
    m.step_input(unit_event("tick"));
    EXPECT_EQ(m.running().buffer.size(), 1u);
    EXPECT_EQ(m.running().buffer.at("time")->number, 2.0);
}

TEST(Validation, UnknownChannel) {
    ElaboratedProgram p = testing_support::load_example("field1.ratt");
    EXPECT_THROW(validate_event(p.inputs, unit_event("down")), EventError);
    EXPECT_THROW(run(p, {}, {unit_event("down")}), EventError);
}

TEST(Validation, IllTypedValue) {
    ElaboratedProgram p = testing_support::load_example("sum.ratt");
    EXPECT_THROW(validate_event(p.inputs, unit_event("n")), EventError);
    EXPECT_NO_THROW(validate_event(p.inputs, nat_event("n", 3)));
}

TEST(Validation, BufferMustCoverBufferedChannels) {
    ElaboratedProgram p = testing_support::load_example("zip.ratt");
    EXPECT_THROW(validate_buffer(p.inputs, {{"a", tm::nat(0)}}), EventError);
    EXPECT_THROW(validate_buffer(p.inputs, {{"a", tm::nat(0)}, {"b", tm::nat(0)}, {"c", tm::nat(0)}}), EventError);
    EXPECT_THROW(validate_buffer(p.inputs, {{"a", tm::nat(0)}, {"b", tm::unit()}}), EventError);
    EXPECT_NO_THROW(validate_buffer(p.inputs, {{"a", tm::nat(0)}, {"b", tm::nat(1)}}));
}

TEST(ValueHasType, Structural) {
    TypePtr a = ty::prod(ty::nat(), ty::sum(ty::unit(), ty::flt()));
    EXPECT_TRUE(value_has_type(tm::pair(tm::nat(3), tm::inj(2, tm::flt(0.5))), a));
    EXPECT_FALSE(value_has_type(tm::pair(tm::nat(3), tm::inj(2, tm::nat(1))), a));
    EXPECT_TRUE(value_has_type(tm::suc(tm::zero()), ty::nat()));
}

// ---------------------------------------------------------------------------
// Runs

TEST(Run, SumPrefixSums) {
    ElaboratedProgram p = testing_support::load_example("sum.ratt");
    auto batches = run(p, {{"n", tm::nat(0)}}, {nat_event("n", 1), nat_event("n", 2), nat_event("n", 3)});
    ASSERT_EQ(batches.size(), 4u);
    EXPECT_EQ(nat_of(find_output(batches[1], "total")), 1u);
    EXPECT_EQ(nat_of(find_output(batches[2], "total")), 3u);
    EXPECT_EQ(nat_of(find_output(batches[3], "total")), 6u);
}

TEST(Run, SumMatchesOracleOnRandomInputs) {
    ElaboratedProgram p = testing_support::load_example("sum.ratt");
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        std::uint64_t start = rng() % 10;
        std::vector<InputEvent> events;
        for (int i = 0; i < 30; ++i) events.push_back(nat_event("n", rng() % 100));
        auto batches = run(p, {{"n", tm::nat(start)}}, events);
        std::uint64_t total = start;
        EXPECT_EQ(nat_of(find_output(batches[0], "total")), total);
        for (std::size_t i = 0; i < events.size(); ++i) {
            total += nat_of(events[i].value);
            EXPECT_EQ(nat_of(find_output(batches[i + 1], "total")), total);
        }
    }
}

TEST(Run, EmptyScript) {
    auto batches = run(testing_support::load_example("field1.ratt"), {}, {});
    ASSERT_EQ(batches.size(), 1u);
}

TEST(Run, FuelBudgetPerStep) {
    ElaboratedProgram p = testing_support::load_example("sum.ratt");
    MachineConfig cfg;
    cfg.eval.fuel = 3;
    EXPECT_THROW(run(p, {{"n", tm::nat(0)}}, {nat_event("n", 1)}, cfg), FuelExhausted);
}

// ---------------------------------------------------------------------------
// Properties over fuzzed programs

namespace {

struct Case {
    ElaboratedProgram program;
    InputBuffer buffer;
    std::vector<InputEvent> events;
};

Case make_case(std::uint64_t seed, std::size_t i) {
    FuzzConfig cfg;
    cfg.events = 60;
    FuzzCase c = fuzz_case(seed, i, cfg);
    return {load_program(render(c.program)), c.buffer, c.events};
}

}  // namespace

TEST(ReactiveProperty, NoSurvivingLocationWaitsOnConsumedChannel) {
    for (std::size_t i = 0; i < 30; ++i) {
        Case c = make_case(21, i);
        Machine m(c.program, c.buffer);
        m.init();
        for (const auto& e : c.events) {
            m.step_input(e);
            const Store& before = m.running().store;
            Heap old_later = before.later;
            std::uint64_t last_old = 0;
            for (const auto& [id, cell] : old_later) last_old = std::max(last_old, id);
            for (const auto& [id, cell] : before.now->heap) last_old = std::max(last_old, id);
            m.step_output();
            const Heap& heap = m.running().store.later;
            std::size_t survivors = 0;
            for (const auto& [id, cell] : heap) {
                if (id > last_old) continue;  // allocated by this step
                ++survivors;
                EXPECT_FALSE(cell.loc.clock.count(e.channel)) << e.channel;
                EXPECT_TRUE(old_later.count(id));
            }
            EXPECT_EQ(survivors, old_later.size());
        }
    }
}

TEST(ReactiveProperty, OutputsHaveDeclaredTypes) {
    for (std::size_t i = 0; i < 30; ++i) {
        Case c = make_case(22, i);
        auto batches = run(c.program, c.buffer, c.events);
        for (const auto& b : batches)
            for (const auto& [name, v] : b) {
                const OutputDef* def = nullptr;
                for (const auto& o : c.program.outputs)
                    if (o.name == name) def = &o;
                ASSERT_NE(def, nullptr);
                EXPECT_TRUE(value_has_type(v, def->type)) << name << " " << to_string(v);
            }
    }
}

TEST(ReactiveProperty, DeterministicTransitions) {
    for (std::size_t i = 0; i < 20; ++i) {
        Case c = make_case(23, i);
        Machine a(c.program, c.buffer);
        Machine b(c.program, c.buffer);
        EXPECT_EQ(canonical_batch(a.init()), canonical_batch(b.init()));
        for (const auto& e : c.events) {
            EXPECT_EQ(canonical_batch(a.step(e)), canonical_batch(b.step(e)));
            EXPECT_EQ(canonical_state(a.running()), canonical_state(b.running()));
        }
    }
}

TEST(ReactiveProperty, CausalityPrefixReplay) {
    std::mt19937_64 rng(5);
    for (std::size_t i = 0; i < 20; ++i) {
        Case c = make_case(24, i);
        auto full = run(c.program, c.buffer, c.events);
        std::size_t cut = rng() % (c.events.size() + 1);
        std::vector<InputEvent> prefix(c.events.begin(), c.events.begin() + static_cast<std::ptrdiff_t>(cut));
        auto part = run(c.program, c.buffer, prefix);
        ASSERT_EQ(part.size(), cut + 1);
        for (std::size_t k = 0; k < part.size(); ++k) EXPECT_EQ(canonical_batch(part[k]), canonical_batch(full[k]));
    }
}
