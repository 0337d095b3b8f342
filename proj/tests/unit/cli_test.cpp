#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "helpers.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using testing_support::program_path;
using testing_support::slurp;

namespace {

struct Result {
    int status = -1;
    std::string out;
    std::string err;
};

fs::path scratch() {
    fs::path dir = fs::temp_directory_path() / ("asyncratt_cli_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    return dir;
}

Result cli(const std::string& args, const std::string& stdin_text = {}) {
    fs::path dir = scratch();
    fs::path in = dir / "stdin";
    fs::path out = dir / "stdout";
    fs::path err = dir / "stderr";
    std::ofstream(in) << stdin_text;
    std::string cmd = std::string("\"") + ASYNCRATT_CLI + "\" " + args + " <\"" + in.string() + "\" >\"" +
                      out.string() + "\" 2>\"" + err.string() + "\"";
    int raw = std::system(cmd.c_str());
    Result r;
    r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    r.out = slurp(out.string());
    r.err = slurp(err.string());
    return r;
}

std::string write_temp(const std::string& name, const std::string& text) {
    fs::path p = scratch() / name;
    std::ofstream(p) << text;
    return p.string();
}

std::vector<json> lines(const std::string& text) {
    std::vector<json> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) out.push_back(json::parse(line));
    return out;
}

std::string shell_quote(const std::string& s) { return "\"" + s + "\""; }

}  // namespace

TEST(CliCheck, PreludeFile) {
    Result r = cli("check " + shell_quote(std::string(ASYNCRATT_PROGRAMS_DIR) + "/../stdlib/prelude.ratt"));
    EXPECT_EQ(r.status, 0) << r.err;
}

TEST(CliCheck, Example) {
    Result r = cli("check " + shell_quote(program_path("field1.ratt")));
    EXPECT_EQ(r.status, 0) << r.err;
}

TEST(CliCheck, BoxOfFunctionVariable) {
    std::string f = write_temp("bad.ratt", "defs\nf : (Nat -> Nat) -> Box (Nat -> Nat)\nf y = box y\n");
    Result r = cli("check " + shell_quote(f));
    EXPECT_EQ(r.status, 1);
    EXPECT_NE(r.err.find("error[UnboundVariable]"), std::string::npos) << r.err;
    EXPECT_NE(r.err.find("not stable"), std::string::npos) << r.err;
    EXPECT_NE(r.err.find("bad.ratt:3:"), std::string::npos) << r.err;
}

TEST(CliCheck, SyntaxError) {
    std::string f = write_temp("syntax.ratt", "outputs\nx : Nat = let x = in x\n");
    Result r = cli("check " + shell_quote(f));
    EXPECT_EQ(r.status, 1);
    EXPECT_NE(r.err.find("error[SyntaxError]"), std::string::npos) << r.err;
}

TEST(CliCheck, MissingFile) {
    Result r = cli("check /nonexistent/file.ratt");
    EXPECT_EQ(r.status, 2);
    EXPECT_NE(r.err.find("cannot open"), std::string::npos);
}

TEST(CliRun, Field1Script) {
    Result r = cli("run " + shell_quote(program_path("field1.ratt")) + " --events " +
                   shell_quote(program_path("field1.events.jsonl")));
    ASSERT_EQ(r.status, 0) << r.err;
    auto out = lines(r.out);
    ASSERT_EQ(out.size(), 5u);
    EXPECT_EQ(out[0], json::parse(R"({"step":0,"outputs":[["x",0]]})"));
    EXPECT_EQ(out[1], json::parse(R"({"step":1,"outputs":[["x",1]]})"));
    EXPECT_EQ(out[2], json::parse(R"({"step":2,"outputs":[["x",1]]})"));
    EXPECT_EQ(out[3], json::parse(R"({"step":3,"outputs":[]})"));
    EXPECT_EQ(out[4], json::parse(R"({"step":4,"outputs":[]})"));
}

TEST(CliRun, EmptyScript) {
    std::string ev = write_temp("empty.jsonl", "");
    Result r = cli("run " + shell_quote(program_path("field1.ratt")) + " --events " + shell_quote(ev));
    ASSERT_EQ(r.status, 0) << r.err;
    EXPECT_EQ(lines(r.out).size(), 1u);
}

TEST(CliRun, UnknownChannelInScript) {
    std::string ev = write_temp("unknown.jsonl", "{\"ch\":\"up\"}\n{\"ch\":\"down\"}\n");
    Result r = cli("run " + shell_quote(program_path("field1.ratt")) + " --events " + shell_quote(ev));
    EXPECT_EQ(r.status, 3);
    EXPECT_NE(r.err.find("EventValidation"), std::string::npos) << r.err;
}

TEST(CliRun, BufferAndSum) {
    Result r = cli("run " + shell_quote(program_path("sum.ratt")) + " --buffer " + shell_quote(program_path("sum.buffer.json")) +
                   " --events " + shell_quote(program_path("sum.events.jsonl")));
    ASSERT_EQ(r.status, 0) << r.err;
    auto out = lines(r.out);
    ASSERT_EQ(out.size(), 4u);
    EXPECT_EQ(out[3]["outputs"][0][1], 6);
}

TEST(CliRun, NeedsEventsOrInteractive) {
    Result r = cli("run " + shell_quote(program_path("field1.ratt")));
    EXPECT_EQ(r.status, 2);
}

TEST(CliRun, FuelExhaustion) {
    Result r = cli("run " + shell_quote(program_path("field1.ratt")) + " --fuel 5 --events " +
                   shell_quote(program_path("field1.events.jsonl")));
    EXPECT_EQ(r.status, 4);
    EXPECT_NE(r.err.find("FuelExhausted"), std::string::npos) << r.err;
}

TEST(CliRun, Interactive) {
    Result r = cli("run " + shell_quote(program_path("field1.ratt")) + " --interactive",
                   "{\"ch\":\"up\"}\n{\"ch\":\"down\"}\n{\"ch\":\"toggle\"}\n");
    ASSERT_EQ(r.status, 0) << r.err;
    auto out = lines(r.out);
    ASSERT_EQ(out.size(), 3u);
    EXPECT_EQ(out[1]["outputs"][0][1], 1);
    EXPECT_EQ(out[2]["step"], 2);
    EXPECT_NE(r.err.find("down"), std::string::npos);
}

TEST(CliRun, ByteIdenticalAcrossRuns) {
    std::string args = "trace " + shell_quote(program_path("field1.ratt")) + " --events " +
                       shell_quote(program_path("field1.events.jsonl"));
    Result a = cli(args);
    Result b = cli(args);
    ASSERT_EQ(a.status, 0);
    EXPECT_EQ(a.out, b.out);
}

TEST(CliTrace, Field1Dumps) {
    Result r = cli("trace " + shell_quote(program_path("field1.ratt")) + " --events " +
                   shell_quote(program_path("field1.events.jsonl")));
    ASSERT_EQ(r.status, 0) << r.err;
    auto out = lines(r.out);
    ASSERT_EQ(out.size(), 5u);
    auto clocks = [](const json& state) {
        std::multiset<std::vector<std::string>> c;
        for (const auto& cell : state["heap"]) c.insert(cell["clock"].get<std::vector<std::string>>());
        return c;
    };
    std::multiset<std::vector<std::string>> four{{"toggle", "up"}, {"up"}, {"up"}, {"toggle"}};
    EXPECT_EQ(clocks(out[0]["state"]), four);
    EXPECT_EQ(clocks(out[1]["state"]), four);
    EXPECT_EQ(out[3]["state"]["heap"].size(), 2u);
}

TEST(CliTrace, EmptyProgram) {
    std::string f = write_temp("empty.ratt", "");
    std::string ev = write_temp("none.jsonl", "");
    Result r = cli("trace " + shell_quote(f) + " --events " + shell_quote(ev));
    ASSERT_EQ(r.status, 0) << r.err;
    auto out = lines(r.out);
    ASSERT_EQ(out.size(), 1u);
    EXPECT_TRUE(out[0]["state"]["outputs"].empty());
}

TEST(CliVerify, Field1) {
    Result r = cli("verify " + shell_quote(program_path("field1.ratt")) + " --random 50");
    EXPECT_EQ(r.status, 0) << r.out << r.err;
    for (const auto& l : lines(r.out)) EXPECT_TRUE(l["pass"].get<bool>()) << l.dump();
}

TEST(CliFuzz, SmallCampaign) {
    Result r = cli("fuzz --seed 0 --cases 5 --steps 20 --depth 5");
    EXPECT_EQ(r.status, 0) << r.out << r.err;
    auto out = lines(r.out);
    ASSERT_FALSE(out.empty());
    EXPECT_TRUE(out.back()["pass"].get<bool>());
}

TEST(CliFuzz, DepthOutOfRange) {
    Result r = cli("fuzz --depth 9");
    EXPECT_NE(r.status, 0);
}
