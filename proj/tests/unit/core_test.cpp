#include <gtest/gtest.h>

#include <random>

#include "asyncratt/core.hpp"

using namespace asyncratt;

TEST(Stability, BoxOfFunctionIsStable) { EXPECT_TRUE(is_stable(ty::box(ty::fun(ty::nat(), ty::nat())))); }
TEST(Stability, FunctionIsNotStable) { EXPECT_FALSE(is_stable(ty::fun(ty::nat(), ty::nat()))); }
TEST(Stability, NatIsStable) { EXPECT_TRUE(is_stable(ty::nat())); }

TEST(Stability, DelaysAndSignals) {
    EXPECT_TRUE(is_stable(ty::any(ty::fun(ty::nat(), ty::nat()))));
    EXPECT_FALSE(is_stable(ty::later(ty::nat())));
    EXPECT_FALSE(is_stable(ty::sig(ty::nat())));
    EXPECT_TRUE(is_stable(ty::prod(ty::flt(), ty::sum(ty::unit(), ty::nat()))));
}

TEST(Stability, ParamsNeedConstraint) {
    std::set<std::string> stable{"A"};
    EXPECT_FALSE(is_stable(ty::param("A")));
    EXPECT_TRUE(is_stable(ty::param("A"), &stable));
    EXPECT_FALSE(is_stable(ty::param("B"), &stable));
}

TEST(ValueTypes, Examples) {
    EXPECT_TRUE(is_value_type(ty::prod(ty::nat(), ty::sum(ty::unit(), ty::nat()))));
    EXPECT_FALSE(is_value_type(ty::later(ty::nat())));
    EXPECT_TRUE(is_value_type(ty::unit()));
    EXPECT_TRUE(is_value_type(ty::flt()));
    EXPECT_FALSE(is_value_type(ty::box(ty::nat())));
    EXPECT_FALSE(is_value_type(ty::fun(ty::nat(), ty::nat())));
}

TEST(Values, IntoOfPairWithLocation) {
    EXPECT_TRUE(tm::into(tm::pair(tm::zero(), tm::loc({1, {"up"}})))->is_value());
}

TEST(Values, DelayIsNotAValue) { EXPECT_FALSE(tm::delay(clock_of(tm::await("up")), tm::unit())->is_value()); }

TEST(Values, RedexIsNotAValue) { EXPECT_FALSE(tm::app(tm::lam("x", tm::var("x")), tm::unit())->is_value()); }

TEST(Values, GrammarForms) {
    EXPECT_TRUE(tm::var("x")->is_value());
    EXPECT_TRUE(tm::suc(tm::suc(tm::zero()))->is_value());
    EXPECT_TRUE(tm::lam("x", tm::app(tm::var("x"), tm::var("x")))->is_value());
    EXPECT_TRUE(tm::inj(2, tm::unit())->is_value());
    EXPECT_TRUE(tm::await("k")->is_value());
    EXPECT_TRUE(tm::box(tm::app(tm::var("f"), tm::unit()))->is_value());
    EXPECT_TRUE(tm::dfix("r", tm::var("r"))->is_value());
    EXPECT_FALSE(tm::suc(tm::app(tm::var("f"), tm::zero()))->is_value());
    EXPECT_FALSE(tm::read("k")->is_value());
    EXPECT_FALSE(tm::never()->is_value());
    EXPECT_FALSE(tm::adv(tm::var("x"))->is_value());
}

TEST(Subst, VariableHit) { EXPECT_TRUE(alpha_equal(subst(tm::var("x"), tm::zero(), "x"), tm::zero())); }

TEST(Subst, Shadowing) {
    TermPtr t = tm::lam("x", tm::var("x"));
    EXPECT_TRUE(alpha_equal(subst(t, tm::zero(), "x"), t));
}

TEST(Subst, Congruence) {
    EXPECT_TRUE(alpha_equal(subst(tm::suc(tm::var("x")), tm::suc(tm::zero()), "x"), tm::suc(tm::suc(tm::zero()))));
}

TEST(Subst, AvoidsCapture) {
    // (\y -> x)[y/x] must not capture y
    TermPtr t = subst(tm::lam("y", tm::var("x")), tm::var("y"), "x");
    ASSERT_EQ(t->kind, TermKind::Lam);
    EXPECT_NE(t->name, "y");
    EXPECT_EQ(t->kids[0]->name, "y");
}

TEST(Subst, ReachesClockSubscripts) {
    TermPtr t = tm::delay(clock_of(tm::var("xs")), tm::adv(tm::var("xs")));
    TermPtr r = subst(t, tm::loc({7, {"up"}}), "xs");
    EXPECT_TRUE(r->is_closed());
    std::set<std::uint64_t> ids;
    collect_locations(r, ids);
    EXPECT_EQ(ids, (std::set<std::uint64_t>{7}));
}

TEST(AlphaEqual, BinderNamesIrrelevant) {
    EXPECT_TRUE(alpha_equal(tm::lam("a", tm::var("a")), tm::lam("b", tm::var("b"))));
    EXPECT_FALSE(alpha_equal(tm::lam("a", tm::var("c")), tm::lam("b", tm::var("b"))));
}

TEST(InputContextTest, RejectsDuplicates) {
    InputContext d;
    d.add({"up", ChannelClass::PushOnly, ty::unit()});
    EXPECT_THROW(d.add({"up", ChannelClass::BufferedOnly, ty::nat()}), std::invalid_argument);
}

TEST(InputContextTest, ChannelClasses) {
    InputContext d{{"p", ChannelClass::PushOnly, ty::unit()},
                   {"b", ChannelClass::BufferedOnly, ty::nat()},
                   {"bp", ChannelClass::BufferedPush, ty::flt()}};
    EXPECT_EQ(d.push_channels(), (std::vector<std::string>{"p", "bp"}));
    EXPECT_EQ(d.buffered_channels(), (std::vector<std::string>{"b", "bp"}));
    EXPECT_EQ(d.restrict_to({"bp"}).decls().size(), 1u);
}

// ---------------------------------------------------------------------------
// Property: substituting closed values preserves the value grammar.

namespace {

TermPtr gen_closed_value(std::mt19937_64& rng, int depth) {
    std::uniform_int_distribution<int> pick(0, depth > 0 ? 9 : 4);
    switch (pick(rng)) {
        case 0:
            return tm::unit();
        case 1:
            return tm::nat(rng() % 10);
        case 2:
            return tm::await("k");
        case 3:
            return tm::loc({rng() % 50, {"k"}});
        case 4:
            return tm::flt(0.5);
        case 5:
            return tm::pair(gen_closed_value(rng, depth - 1), gen_closed_value(rng, depth - 1));
        case 6:
            return tm::inj(1 + static_cast<int>(rng() % 2), gen_closed_value(rng, depth - 1));
        case 7:
            return tm::into(gen_closed_value(rng, depth - 1));
        case 8:
            return tm::box(tm::app(tm::lam("z", tm::var("z")), gen_closed_value(rng, depth - 1)));
        default:
            return tm::lam("y", tm::pair(tm::var("y"), tm::var("y")));
    }
}

/// Values over free variables x and y.
TermPtr gen_open_value(std::mt19937_64& rng, int depth) {
    std::uniform_int_distribution<int> pick(0, depth > 0 ? 7 : 2);
    switch (pick(rng)) {
        case 0:
            return tm::var("x");
        case 1:
            return tm::var("y");
        case 2:
            return tm::zero();
        case 3:
            return tm::suc(gen_open_value(rng, depth - 1));
        case 4:
            return tm::pair(gen_open_value(rng, depth - 1), gen_open_value(rng, depth - 1));
        case 5:
            return tm::inj(1, gen_open_value(rng, depth - 1));
        case 6:
            return tm::lam("x", tm::app(tm::var("x"), gen_open_value(rng, depth - 1)));
        default:
            return tm::dfix("r", tm::pair(tm::var("r"), gen_open_value(rng, depth - 1)));
    }
}

}  // namespace

TEST(SubstProperty, ValueGrammarClosedUnderClosedSubstitution) {
    std::mt19937_64 rng(42);
    for (int i = 0; i < 500; ++i) {
        TermPtr v = gen_open_value(rng, 4);
        TermPtr w = gen_closed_value(rng, 3);
        ASSERT_TRUE(v->is_value()) << to_string(v);
        TermPtr r = subst(v, w, "x");
        EXPECT_TRUE(r->is_value()) << to_string(v) << " [" << to_string(w) << "/x]";
        EXPECT_FALSE(r->has_free("x")) << to_string(r);
    }
}

TEST(SubstProperty, IdentityWhenVariableAbsent) {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 300; ++i) {
        TermPtr v = gen_open_value(rng, 4);
        TermPtr r = subst(v, tm::unit(), "z");
        EXPECT_TRUE(alpha_equal(v, r)) << to_string(v);
    }
}
