#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "asyncratt/stdlib.hpp"
#include "asyncratt/surface.hpp"
#include "asyncratt/typecheck.hpp"
#include "asyncratt/verify.hpp"
#include "helpers.hpp"

using namespace asyncratt;
using testing_support::slurp;

namespace {

constexpr const char* kMapSource =
    "defs\n"
    "map : Box (A -> B) -> Sig A -> Sig B\n"
    "map f (x :: xs) = unbox f x :: delay (map f (adv xs))\n";

void expect_same_globals(const ElaboratedProgram& a, const ElaboratedProgram& b) {
    ASSERT_EQ(a.globals.size(), b.globals.size());
    for (std::size_t i = 0; i < a.globals.size(); ++i) {
        EXPECT_EQ(a.globals[i].name, b.globals[i].name);
        EXPECT_TRUE(alpha_equal(a.globals[i].body, b.globals[i].body)) << a.globals[i].name;
        EXPECT_TRUE(type_equal(a.globals[i].scheme.type, b.globals[i].scheme.type)) << a.globals[i].name;
    }
    ASSERT_EQ(a.outputs.size(), b.outputs.size());
    for (std::size_t i = 0; i < a.outputs.size(); ++i) {
        EXPECT_EQ(a.outputs[i].name, b.outputs[i].name);
        EXPECT_TRUE(alpha_equal(a.outputs[i].expr, b.outputs[i].expr)) << a.outputs[i].name;
    }
}

}  // namespace

TEST(Parse, EmptyProgram) {
    SurfaceProgram p = parse_program("");
    EXPECT_TRUE(p.inputs.empty());
    EXPECT_TRUE(p.defs.empty());
    EXPECT_TRUE(p.outputs.empty());
}

TEST(Parse, MissingLetBinding) {
    try {
        parse_expr("let x = in");
        FAIL() << "expected a syntax error";
    } catch (const SyntaxError& e) {
        EXPECT_EQ(e.span.line, 1);
        EXPECT_EQ(e.span.col, 9);
        EXPECT_FALSE(e.expected.empty());
    }
}

TEST(Parse, MapDefinition) {
    SurfaceProgram p = parse_program(kMapSource);
    ASSERT_EQ(p.defs.size(), 1u);
    const SurfaceDef& d = p.defs[0];
    EXPECT_EQ(d.name, "map");
    ASSERT_EQ(d.equations.size(), 1u);
    EXPECT_EQ(d.equations[0].pats.size(), 2u);
    EXPECT_TRUE(d.has_signature);
    EXPECT_EQ(d.scheme.params, (std::vector<std::string>{"A", "B"}));
}

TEST(Parse, InputClasses) {
    SurfaceProgram p = parse_program(
        "inputs\n"
        "a : push Nat\n"
        "b : buffered Float\n"
        "c : buffered push (Unit + Nat)\n");
    ASSERT_EQ(p.inputs.size(), 3u);
    EXPECT_EQ(p.inputs[0].cls, ChannelClass::PushOnly);
    EXPECT_EQ(p.inputs[1].cls, ChannelClass::BufferedOnly);
    EXPECT_EQ(p.inputs[2].cls, ChannelClass::BufferedPush);
    EXPECT_TRUE(type_equal(p.inputs[2].type, ty::sum(ty::unit(), ty::nat())));
}

TEST(Parse, SchemeConstraints) {
    Scheme s = parse_scheme("(Stable A, Stable B) => Sig A -> Sig B -> Sig (A * B)");
    EXPECT_EQ(s.params, (std::vector<std::string>{"A", "B"}));
    EXPECT_EQ(s.stable, (std::set<std::string>{"A", "B"}));
}

TEST(Parse, TypeSugar) {
    EXPECT_TRUE(type_equal(parse_type("Sig Nat"), ty::sig(ty::nat())));
    EXPECT_TRUE(type_equal(parse_type("Delay Nat -> Nat"), ty::fun(ty::later(ty::nat()), ty::nat())));
}

TEST(Parse, ErrorsCarryPositions) {
    try {
        parse_program("outputs\nx : Nat = (1 +\n");
        FAIL() << "expected a syntax error";
    } catch (const SyntaxError& e) {
        EXPECT_TRUE(e.span.known());
    }
}

TEST(Elaborate, MapMatchesHandWrittenTerm) {
    ElaboratedProgram p = elaborate(parse_program(kMapSource));
    ASSERT_EQ(p.globals.size(), 1u);
    using namespace tm;
    TermPtr s = var("s");
    TermPtr expected = fix(
        "r", lam("f", lam("s", let("x", proj(1, out(s)),
                                   let("xs", proj(2, out(s)),
                                       into(pair(app(unbox(var("f")), var("x")),
                                                 delay(clock_of(var("xs")),
                                                       app(app(adv(var("r")), var("f")), adv(var("xs")))))))))));
    EXPECT_TRUE(alpha_equal(p.globals[0].body, expected)) << to_string(p.globals[0].body);
}

TEST(Elaborate, NeverContainsMachineTerms) {
    ElaboratedProgram p = testing_support::load_example("field1.ratt");
    for (const auto& g : p.globals) EXPECT_FALSE(contains_machine_terms(g.body)) << g.name;
    for (const auto& o : p.outputs) EXPECT_FALSE(contains_machine_terms(o.expr)) << o.name;
}

TEST(Elaborate, DelayClockInferredFromTwoAdvances) {
    const char* inferred =
        "defs\n"
        "twice : Delay Nat -> Delay Nat\n"
        "twice x = delay (adv x + adv x)\n";
    const char* explicit_clock =
        "defs\n"
        "twice : Delay Nat -> Delay Nat\n"
        "twice x = delay{x} (adv x + adv x)\n";
    ElaboratedProgram a = load_program(inferred, {false});
    ElaboratedProgram b = load_program(explicit_clock, {false});
    ASSERT_EQ(a.globals.size(), 1u);
    EXPECT_TRUE(type_equal(a.globals[0].scheme.type, b.globals[0].scheme.type));
    const Term* da = a.globals[0].body->kids[0].get();
    const Term* db = b.globals[0].body->kids[0].get();
    ASSERT_EQ(da->kind, TermKind::Delay);
    ASSERT_EQ(db->kind, TermKind::Delay);
    EXPECT_TRUE(clock_equal(da->clock, db->clock));
    EXPECT_TRUE(clock_equal(da->clock, clock_of(tm::var(a.globals[0].body->name))));
}

TEST(Elaborate, AdvancesOnDistinctClocksNeedSelect) {
    const char* text =
        "defs\n"
        "both : Delay Nat -> Delay Nat -> Delay Nat\n"
        "both x y = delay (adv x + adv y)\n";
    try {
        load_program(text, {false});
        FAIL() << "expected a clock mismatch";
    } catch (const TypeError& e) {
        EXPECT_EQ(e.kind, TypeErrorKind::ClockMismatch);
    }
}

TEST(Elaborate, DelayWithoutAdvanceIsRejected) {
    EXPECT_THROW(elaborate(parse_program("defs\nf : Nat -> Delay Nat\nf x = delay x\n")), ElaborationError);
}

TEST(Elaborate, AdvOutsideDelayIsRejected) {
    EXPECT_THROW(elaborate(parse_program("defs\nf : Delay Nat -> Nat\nf x = adv x\n")), ElaborationError);
}

TEST(Elaborate, AdvOfInnerBindingIsRejected) {
    EXPECT_THROW(elaborate(parse_program("defs\nf : Delay Nat -> Delay Nat\nf x = delay (let y = x in adv y)\n")),
                 ElaborationError);
}

TEST(Elaborate, NonExhaustivePatternsAreRejected) {
    EXPECT_THROW(elaborate(parse_program("defs\nf : Nat + Nat -> Nat\nf (in1 x) = x\n")), ElaborationError);
}

TEST(Elaborate, TemplateInstantiatedPerChannel) {
    ElaboratedProgram p = load_program(
        "inputs\na : push Nat\nb : push Nat\n"
        "outputs\nx : Nat = count sigAwait{a} 0\ny : Nat = count sigAwait{b} 0\n");
    EXPECT_NE(p.find_global("sigAwait{a}"), nullptr);
    EXPECT_NE(p.find_global("sigAwait{b}"), nullptr);
}

TEST(Elaborate, ProgramTermIsClosed) {
    ElaboratedProgram p = testing_support::load_example("counters.ratt");
    EXPECT_TRUE(p.to_term()->is_closed());
    EXPECT_TRUE(p.output_term(0)->is_closed());
}

// ---------------------------------------------------------------------------
// Property: printing an elaborated program and reading it back is the identity
// up to alpha-equivalence.

TEST(RoundTrip, ExamplePrograms) {
    for (const auto& entry : std::filesystem::directory_iterator(ASYNCRATT_PROGRAMS_DIR)) {
        if (entry.path().extension() != ".ratt") continue;
        SCOPED_TRACE(entry.path().filename().string());
        ElaboratedProgram p = load_program(slurp(entry.path().string()));
        ElaboratedProgram q = elaborate(parse_program(print_program(p)));
        expect_same_globals(p, q);
        EXPECT_NO_THROW(check_reactive_program(q));
    }
}

TEST(RoundTrip, GeneratedPrograms) {
    std::mt19937_64 rng(2024);
    for (int i = 0; i < 60; ++i) {
        std::string text = render(generate_program(rng, GenConfig{5, 3}));
        SCOPED_TRACE(text);
        ElaboratedProgram p = load_program(text);
        ElaboratedProgram q = elaborate(parse_program(print_program(p)));
        expect_same_globals(p, q);
    }
}

TEST(RoundTrip, ExpressionPrinting) {
    Elaborator el{InputContext{{"k", ChannelClass::BufferedPush, ty::nat()}}};
    const char* exprs[] = {
        "\\x -> (x, in2 ())",
        "let y = 3 in y * 2 - 1",
        "natrec 4 with zero -> 0 | suc m r -> r + 2",
        "case in1 5 of | in1 a -> a | in2 b -> 0",
        "box (\\n -> n + read k)",
        "fix r -> delay{await k} (adv (await k) :: adv r)",
        "\\a b -> delay (select a b)",
        "\\x -> if x < 3 then 1.5 else 2.0",
    };
    for (const char* e : exprs) {
        SCOPED_TRACE(e);
        TermPtr t = el.expr(parse_expr(e));
        TermPtr u = el.expr(parse_expr(to_string(t)));
        EXPECT_TRUE(alpha_equal(t, u)) << to_string(t) << "\n" << to_string(u);
    }
}
