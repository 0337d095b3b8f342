#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "asyncratt/io.hpp"
#include "asyncratt/stdlib.hpp"
#include "asyncratt/typecheck.hpp"
#include "asyncratt/verify.hpp"

using namespace asyncratt;
using nlohmann::json;

namespace {

enum Exit { Ok = 0, TypeFailure = 1, IoFailure = 2, EventFailure = 3, MachineFailure = 4 };

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path + ": cannot open file");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void diagnostic(const std::string& file, Span span, std::string_view kind, const std::string& msg) {
    std::cerr << file;
    if (span.known()) std::cerr << ":" << span.line << ":" << span.col;
    std::cerr << ": error[" << kind << "]: " << msg << "\n";
}

/// Loads and checks a program; prints diagnostics and returns nullopt on failure.
std::optional<ElaboratedProgram> load(const std::string& path, bool prelude, int& status) {
    std::string text;
    try {
        text = read_file(path);
    } catch (const IoError& e) {
        std::cerr << e.what() << "\n";
        status = IoFailure;
        return std::nullopt;
    }
    status = TypeFailure;
    auto origin = [&](const std::string& o) { return o.empty() ? path : o; };
    try {
        return load_program(text, LoadOptions{prelude});
    } catch (const SyntaxError& e) {
        std::string msg = e.message;
        if (!e.expected.empty()) {
            msg += " (expected ";
            for (std::size_t i = 0; i < e.expected.size(); ++i) msg += (i ? ", " : "") + e.expected[i];
            msg += ")";
        }
        diagnostic(path, e.span, "SyntaxError", msg);
    } catch (const ElaborationError& e) {
        diagnostic(origin(e.origin), e.span, "ElaborationError", e.message);
    } catch (const TypeError& e) {
        diagnostic(origin(e.origin), e.span, to_string(e.kind), e.message);
    }
    return std::nullopt;
}

struct RunOptions {
    std::string program;
    std::string events;
    bool interactive = false;
    std::string buffer;
    std::uint64_t fuel = EvalConfig{}.fuel;
    std::uint64_t seed = 1;
    bool no_prelude = false;
    std::string rule_log;
};

int machine_error(const MachineError& e) {
    std::cerr << "error[" << (dynamic_cast<const FuelExhausted*>(&e) ? "FuelExhausted" : "Stuck") << "]: " << e.what()
              << "\n";
    return MachineFailure;
}

int cmd_run(const RunOptions& o, bool trace) {
    int status = Ok;
    auto prog = load(o.program, !o.no_prelude, status);
    if (!prog) return status;

    InputBuffer buffer;
    std::vector<InputEvent> events;
    try {
        if (!o.buffer.empty()) {
            std::ifstream in(o.buffer);
            if (!in) throw IoError(o.buffer + ": cannot open file");
            buffer = read_buffer(in, prog->inputs);
        } else {
            validate_buffer(prog->inputs, buffer);
        }
        if (!o.interactive && !o.events.empty()) {
            std::ifstream in(o.events);
            if (!in) throw IoError(o.events + ": cannot open file");
            events = read_events(in, prog->inputs);
        }
    } catch (const IoError& e) {
        std::cerr << e.what() << "\n";
        return IoFailure;
    } catch (const EventError& e) {
        std::cerr << "error[EventValidation]: " << e.what() << "\n";
        return EventFailure;
    }

    MachineConfig cfg;
    cfg.eval.fuel = o.fuel;
    cfg.seed = o.seed;
    std::ofstream log_file;
    std::optional<RuleLogger> logger;
    if (!o.rule_log.empty()) {
        log_file.open(o.rule_log);
        if (!log_file) {
            std::cerr << o.rule_log << ": cannot open file\n";
            return IoFailure;
        }
        logger.emplace(log_file);
        cfg.eval.observer = &*logger;
    }
    std::size_t step = 0;
    auto emit = [&](const Machine& m, const OutputBatch& b) {
        json line = batch_to_json(step++, b);
        if (trace) line["state"] = state_to_json(m.running());
        std::cout << line.dump() << std::endl;
    };
    try {
        Machine m(*prog, buffer, cfg);
        emit(m, m.init());
        if (!o.interactive) {
            for (const auto& e : events) emit(m, m.step(e));
            return Ok;
        }
        std::string line;
        while (std::getline(std::cin, line)) {
            auto first = line.find_first_not_of(" \t\r");
            if (first == std::string::npos || line[first] == '#') continue;
            InputEvent e;
            try {
                e = event_from_json(json::parse(line), prog->inputs);
            } catch (const json::exception& x) {
                std::cerr << "error[EventValidation]: malformed JSON: " << x.what() << "\n";
                continue;
            } catch (const EventError& x) {
                std::cerr << "error[EventValidation]: " << x.what() << "\n";
                continue;
            }
            emit(m, m.step(e));
        }
    } catch (const EventError& e) {
        std::cerr << "error[EventValidation]: " << e.what() << "\n";
        return EventFailure;
    } catch (const MachineError& e) {
        return machine_error(e);
    }
    return Ok;
}

/// The bundled prelude is not imported into itself; its templates are checked at a probe channel.
int check_prelude_file(const std::string& path) {
    int status = Ok;
    for (const auto& c : check_prelude()) {
        if (!c.error) continue;
        std::cerr << path << ": error[" << c.name << "]: " << *c.error << "\n";
        status = TypeFailure;
    }
    if (status == Ok) std::cerr << path << ": ok (" << prelude_manifest().size() << " combinators)\n";
    return status;
}

int cmd_check(const std::string& path, bool no_prelude) {
    int status = Ok;
    try {
        if (read_file(path) == prelude_source()) return check_prelude_file(path);
    } catch (const IoError& e) {
        std::cerr << e.what() << "\n";
        return IoFailure;
    }
    auto prog = load(path, !no_prelude, status);
    if (!prog) return status;
    std::cerr << path << ": ok (" << prog->globals.size() << " definitions, " << prog->outputs.size()
              << " outputs)\n";
    return Ok;
}

struct VerifyOptions {
    std::string program;
    std::string events;
    std::string buffer;
    std::size_t random = 200;
    std::uint64_t seed = 1;
    bool no_prelude = false;
};

int cmd_verify(const VerifyOptions& o) {
    int status = Ok;
    auto prog = load(o.program, !o.no_prelude, status);
    if (!prog) return status;
    std::mt19937_64 rng(o.seed);
    InputBuffer buffer;
    std::vector<InputEvent> events;
    try {
        if (!o.buffer.empty()) {
            std::ifstream in(o.buffer);
            if (!in) throw IoError(o.buffer + ": cannot open file");
            buffer = read_buffer(in, prog->inputs);
        } else {
            buffer = random_buffer(prog->inputs, rng);
        }
        if (!o.events.empty()) {
            std::ifstream in(o.events);
            if (!in) throw IoError(o.events + ": cannot open file");
            events = read_events(in, prog->inputs);
        } else {
            events = random_events(prog->inputs, o.random, rng);
        }
    } catch (const IoError& e) {
        std::cerr << e.what() << "\n";
        return IoFailure;
    } catch (const EventError& e) {
        std::cerr << "error[EventValidation]: " << e.what() << "\n";
        return EventFailure;
    }

    bool ok = true;
    AuditReport a = audit_gc(*prog, buffer, events);
    json ja{{"check", "gc"},         {"pass", a.clean()},       {"steps", a.steps},
            {"derefs", a.derefs},    {"collected", a.collected}, {"max_heap", a.max_heap},
            {"tombstone_hits", a.tombstone_hits}};
    if (a.machine_error) ja["error"] = *a.machine_error;
    std::cout << ja.dump() << "\n";
    ok = ok && a.clean();

    DeterminismReport d = check_determinism(*prog, buffer, events);
    json jd{{"check", "determinism"}, {"pass", d.identical()}, {"steps", d.steps}};
    if (d.first_output_mismatch) jd["first_output_mismatch"] = *d.first_output_mismatch;
    if (d.first_state_mismatch) jd["first_state_mismatch"] = *d.first_state_mismatch;
    if (d.machine_error) jd["error"] = *d.machine_error;
    std::cout << jd.dump() << "\n";
    ok = ok && d.identical();

    try {
        IndependenceReport i = check_independence(*prog, buffer, events);
        std::cout << json{{"check", "independence"},
                          {"pass", i.ok()},
                          {"events", i.events},
                          {"buffered_events", i.buffered_events},
                          {"violations", i.violations}}
                         .dump()
                  << "\n";
        ok = ok && i.ok();
    } catch (const MachineError& e) {
        std::cout << json{{"check", "independence"}, {"pass", false}, {"error", e.what()}}.dump() << "\n";
        ok = false;
    }
    return ok ? Ok : MachineFailure;
}

int cmd_fuzz(const FuzzConfig& cfg) {
    FuzzReport r = fuzz_productivity(cfg);
    for (const auto& f : r.failures) {
        json ev = json::array();
        for (const auto& e : f.events) ev.push_back(event_to_json(e));
        std::cout << json{{"check", "productivity"}, {"pass", false}, {"case", f.index},
                          {"program", f.program},   {"events", ev},   {"error", f.error}}
                         .dump()
                  << "\n";
    }
    std::cout << json{{"check", "productivity"},
                      {"pass", r.failures.empty()},
                      {"seed", cfg.seed},
                      {"cases", r.cases},
                      {"steps", r.steps},
                      {"failures", r.failures.size()}}
                     .dump()
              << "\n";
    return r.failures.empty() ? Ok : MachineFailure;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Interpreter and checker for an asynchronous modal FRP language"};
    app.require_subcommand(1);

    std::string check_path;
    bool check_no_prelude = false;
    auto* check = app.add_subcommand("check", "Parse, elaborate and typecheck a program");
    check->add_option("file", check_path, "Program source")->required();
    check->add_flag("--no-prelude", check_no_prelude, "Do not import the standard combinators");

    RunOptions run_opts;
    auto add_run_options = [&](CLI::App* c) {
        c->add_option("file", run_opts.program, "Program source")->required();
        auto* ev = c->add_option("--events", run_opts.events, "Event script, one JSON record per line");
        auto* it = c->add_flag("--interactive", run_opts.interactive, "Read events from standard input");
        ev->excludes(it);
        c->add_option("--buffer", run_opts.buffer, "Initial values of buffered channels (JSON object)");
        c->add_option("--fuel", run_opts.fuel, "Rule applications allowed per evaluation");
        c->add_option("--seed", run_opts.seed, "First heap location id");
        c->add_flag("--no-prelude", run_opts.no_prelude, "Do not import the standard combinators");
        c->add_option("--rule-log", run_opts.rule_log, "Write one JSON record per evaluation rule to this file");
    };
    auto* run = app.add_subcommand("run", "Run a program on an event script or interactively");
    add_run_options(run);
    auto* trace = app.add_subcommand("trace", "Like run, with a machine state dump after every step");
    add_run_options(trace);

    VerifyOptions verify_opts;
    auto* verify = app.add_subcommand("verify", "Audit gc safety, determinism and signal independence");
    verify->add_option("file", verify_opts.program, "Program source")->required();
    verify->add_option("--events", verify_opts.events, "Event script; random events when omitted");
    verify->add_option("--buffer", verify_opts.buffer, "Initial buffer; random when omitted");
    verify->add_option("--random", verify_opts.random, "Number of random events");
    verify->add_option("--seed", verify_opts.seed, "Seed for random inputs");
    verify->add_flag("--no-prelude", verify_opts.no_prelude, "Do not import the standard combinators");

    FuzzConfig fuzz_cfg;
    auto* fuzz = app.add_subcommand("fuzz", "Check productivity on generated well-typed programs");
    fuzz->add_option("--seed", fuzz_cfg.seed, "Generator seed");
    fuzz->add_option("--cases", fuzz_cfg.cases, "Number of programs");
    fuzz->add_option("--steps", fuzz_cfg.events, "Events per program");
    fuzz->add_option("--depth", fuzz_cfg.gen.max_depth, "Maximum generator depth")->check(CLI::Range(1, 7));
    fuzz->add_option("--fuel", fuzz_cfg.machine.eval.fuel, "Rule applications allowed per evaluation");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? Ok : IoFailure;
    }

    if (check->parsed()) return cmd_check(check_path, check_no_prelude);
    if (run->parsed() || trace->parsed()) {
        if (!run_opts.interactive && run_opts.events.empty()) {
            std::cerr << "error: one of --events or --interactive is required\n";
            return IoFailure;
        }
        return cmd_run(run_opts, trace->parsed());
    }
    if (verify->parsed()) return cmd_verify(verify_opts);
    if (fuzz->parsed()) return cmd_fuzz(fuzz_cfg);
    return Ok;
}
