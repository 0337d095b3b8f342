#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "asyncratt/io.hpp"
#include "asyncratt/stdlib.hpp"
#include "asyncratt/verify.hpp"
#include "helpers.hpp"

using namespace asyncratt;
using nlohmann::json;

namespace {

const InputContext kDelta{{"up", ChannelClass::PushOnly, ty::unit()},
                          {"n", ChannelClass::BufferedPush, ty::nat()},
                          {"time", ChannelClass::BufferedOnly, ty::flt()},
                          {"p", ChannelClass::PushOnly, ty::prod(ty::nat(), ty::sum(ty::unit(), ty::flt()))}};

TypePtr random_value_type(std::mt19937_64& rng, int depth) {
    switch (rng() % (depth > 0 ? 5 : 3)) {
        case 0:
            return ty::unit();
        case 1:
            return ty::nat();
        case 2:
            return ty::flt();
        case 3:
            return ty::prod(random_value_type(rng, depth - 1), random_value_type(rng, depth - 1));
        default:
            return ty::sum(random_value_type(rng, depth - 1), random_value_type(rng, depth - 1));
    }
}

}  // namespace

TEST(Json, ValueEncodings) {
    EXPECT_EQ(value_to_json(tm::unit()), json(nullptr));
    EXPECT_EQ(value_to_json(tm::nat(3)), json(3));
    EXPECT_EQ(value_to_json(tm::flt(0.5)), json(0.5));
    EXPECT_EQ(value_to_json(tm::pair(tm::nat(1), tm::unit())), json::array({1, nullptr}));
    EXPECT_EQ(value_to_json(tm::inj(2, tm::nat(4))), (json{{"in", 2}, {"val", 4}}));
}

TEST(Json, FloatAcceptsIntegerLiteral) {
    EXPECT_EQ(value_from_json(json(2), ty::flt())->number, 2.0);
}

TEST(Json, RejectsIllTyped) {
    EXPECT_THROW(value_from_json(json(-1), ty::nat()), EventError);
    EXPECT_THROW(value_from_json(json(1.5), ty::nat()), EventError);
    EXPECT_THROW(value_from_json(json::array({1}), ty::prod(ty::nat(), ty::nat())), EventError);
    EXPECT_THROW(value_from_json((json{{"in", 3}, {"val", 1}}), ty::sum(ty::nat(), ty::nat())), EventError);
    EXPECT_THROW(value_from_json(json("x"), ty::unit()), EventError);
}

// Property: decoding an encoded value at its type gives the value back.
TEST(JsonProperty, RoundTrip) {
    std::mt19937_64 rng(77);
    for (int i = 0; i < 300; ++i) {
        TypePtr a = random_value_type(rng, 3);
        TermPtr v = random_value(a, rng);
        TermPtr back = value_from_json(value_to_json(v), a);
        EXPECT_TRUE(alpha_equal(v, back)) << to_string(a) << " " << to_string(v);
        EXPECT_EQ(json::parse(value_to_json(v).dump()), value_to_json(v));
    }
}

TEST(Events, Parse) {
    InputEvent e = event_from_json(json::parse(R"({"ch":"p","val":[3,{"in":2,"val":0.25}]})"), kDelta);
    EXPECT_EQ(e.channel, "p");
    EXPECT_TRUE(value_has_type(e.value, kDelta.find("p")->type));
    InputEvent u = event_from_json(json::parse(R"({"ch":"up"})"), kDelta);
    EXPECT_EQ(u.value->kind, TermKind::Unit);
}

TEST(Events, UnknownChannel) {
    EXPECT_THROW(event_from_json(json::parse(R"({"ch":"down"})"), kDelta), EventError);
}

TEST(Events, ScriptSkipsCommentsAndReportsLines) {
    std::istringstream ok("# start\n{\"ch\":\"up\"}\n\n{\"ch\":\"n\",\"val\":2}\n");
    auto events = read_events(ok, kDelta);
    ASSERT_EQ(events.size(), 2u);
    EXPECT_EQ(events[1].channel, "n");

    std::istringstream bad("{\"ch\":\"up\"}\n{\"ch\":\"n\",\"val\":\"x\"}\n");
    try {
        read_events(bad, kDelta);
        FAIL();
    } catch (const EventError& e) {
        EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
    }
}

TEST(Events, RoundTrip) {
    InputEvent e{"n", tm::nat(5)};
    InputEvent back = event_from_json(event_to_json(e), kDelta);
    EXPECT_EQ(back.channel, "n");
    EXPECT_EQ(testing_support::nat_of(back.value), 5u);
}

TEST(Buffer, Read) {
    std::istringstream in(R"({"n": 1, "time": 0.5})");
    InputBuffer b = read_buffer(in, kDelta);
    EXPECT_EQ(testing_support::nat_of(b.at("n")), 1u);
    EXPECT_EQ(b.at("time")->number, 0.5);
    std::istringstream missing(R"({"n": 1})");
    EXPECT_THROW(read_buffer(missing, kDelta), EventError);
}

TEST(Trace, BatchFormat) {
    OutputBatch b{{"x", tm::nat(1)}, {"y", tm::pair(tm::unit(), tm::flt(2.0))}};
    json j = batch_to_json(3, b);
    EXPECT_EQ(j["step"], 3);
    EXPECT_EQ(j["outputs"], json::parse(R"([["x",1],["y",[null,2.0]]])"));
}

TEST(Trace, StateDumpOfField1) {
    Machine m(testing_support::load_example("field1.ratt"), {});
    m.init();
    json j = state_to_json(m.running());
    ASSERT_EQ(j["heap"].size(), 4u);
    std::multiset<std::vector<std::string>> clocks;
    for (const auto& c : j["heap"]) clocks.insert(c["clock"].get<std::vector<std::string>>());
    EXPECT_EQ(clocks, (std::multiset<std::vector<std::string>>{{"toggle", "up"}, {"up"}, {"up"}, {"toggle"}}));
    ASSERT_EQ(j["outputs"].size(), 1u);
    EXPECT_EQ(j["outputs"][0]["output"], "x");
    EXPECT_EQ(j["outputs"][0]["clock"], json::parse(R"(["toggle","up"])"));
}

TEST(Trace, RuleLogger) {
    std::ostringstream log;
    RuleLogger logger(log);
    MachineConfig cfg;
    cfg.eval.observer = &logger;
    run(testing_support::load_example("field1.ratt"), {}, {testing_support::unit_event("up")}, cfg);
    std::istringstream lines(log.str());
    std::string line;
    std::size_t n = 0;
    std::set<std::string> rules;
    while (std::getline(lines, line)) {
        json r = json::parse(line);
        rules.insert(r["rule"].get<std::string>());
        EXPECT_TRUE(r.contains("redex"));
        EXPECT_TRUE(r.contains("store"));
        ++n;
    }
    EXPECT_GT(n, 10u);
    EXPECT_TRUE(rules.count("delay"));
    EXPECT_TRUE(rules.count("adv-loc"));
    EXPECT_TRUE(rules.count("select-left"));
}
