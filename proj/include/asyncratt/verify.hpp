#pragma once

// Executable checks of the machine's guarantees: gc safety, determinism,
// signal independence, and productivity under a typed program fuzzer.

#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "asyncratt/reactive.hpp"

namespace asyncratt {

// ---------------------------------------------------------------------------
// Random inputs
// ---------------------------------------------------------------------------

/// Nat in [0, 9], Float k/10 for k in [0, 100], sums pick a side uniformly.
TermPtr random_value(const TypePtr& a, std::mt19937_64& rng);
/// Events uniformly over every channel of delta, push and buffered alike.
std::vector<InputEvent> random_events(const InputContext& delta, std::size_t n, std::mt19937_64& rng);
std::vector<InputEvent> random_events(const InputContext& delta, const std::vector<std::string>& channels,
                                      std::size_t n, std::mt19937_64& rng);
InputBuffer random_buffer(const InputContext& delta, std::mt19937_64& rng);

// ---------------------------------------------------------------------------
// GC audit
// ---------------------------------------------------------------------------

/// Shadow of every location the machine has discarded; any later dereference
/// of one is a tombstone hit.
class ShadowAuditor : public EvalObserver {
public:
    void on_deref(const Location& l) override;
    void on_collect(const Heap& dropped) override;

    std::size_t derefs() const { return derefs_; }
    std::size_t collected() const { return tombstones_.size(); }
    const std::vector<std::uint64_t>& hits() const { return hits_; }

private:
    std::set<std::uint64_t> tombstones_;
    std::vector<std::uint64_t> hits_;
    std::size_t derefs_ = 0;
};

struct AuditReport {
    std::size_t steps = 0;
    std::size_t derefs = 0;
    std::size_t collected = 0;
    std::size_t max_heap = 0;
    std::vector<std::uint64_t> tombstone_hits;
    std::optional<std::string> machine_error;

    bool clean() const { return tombstone_hits.empty() && !machine_error; }
};

AuditReport audit_gc(const ElaboratedProgram& program, const InputBuffer& buffer,
                     const std::vector<InputEvent>& events, Fault fault = Fault::None);

// ---------------------------------------------------------------------------
// Determinism
// ---------------------------------------------------------------------------

/// Rendering invariant under alpha-renaming and order-preserving location
/// renumbering; floats are rendered by bit pattern.
std::string canonical_term(const TermPtr& t, const std::map<std::uint64_t, std::uint64_t>& rank);
std::string canonical_state(const Running& s);
std::uint64_t state_hash(const Running& s);
std::string canonical_batch(const OutputBatch& b);

struct DeterminismReport {
    std::size_t steps = 0;  // batches compared, the initial one included
    std::optional<std::size_t> first_output_mismatch;
    std::optional<std::size_t> first_state_mismatch;
    std::optional<std::string> machine_error;

    bool identical() const { return !first_output_mismatch && !first_state_mismatch && !machine_error; }
};

/// Runs the program twice, the second time with location ids offset, and
/// compares every batch and every post-step state.
DeterminismReport check_determinism(const ElaboratedProgram& program, const InputBuffer& buffer,
                                    const std::vector<InputEvent>& events);

// ---------------------------------------------------------------------------
// Signal independence
// ---------------------------------------------------------------------------

/// Channels mentioned by output `i` and the globals it reaches.
std::set<std::string> output_channels(const ElaboratedProgram& program, std::size_t i);
/// The program cut down to output `i` over the channels it mentions;
/// throws TypeError if that restriction does not typecheck.
ElaboratedProgram restrict_output(const ElaboratedProgram& program, std::size_t i);

struct IndependenceReport {
    std::size_t events = 0;
    std::size_t buffered_events = 0;
    std::vector<std::string> violations;

    bool ok() const { return violations.empty(); }
};

/// Buffered-only events must produce empty batches, and an output never
/// updates on a push channel outside its restricted input context.
IndependenceReport check_independence(const ElaboratedProgram& program, const InputBuffer& buffer,
                                      const std::vector<InputEvent>& events);

// ---------------------------------------------------------------------------
// Productivity fuzzing
// ---------------------------------------------------------------------------

/// a, b : push Nat; u : push Unit; time : buffered Float; s : buffered push Float.
InputContext fuzz_context();

struct GenNode {
    enum class Kind {
        Const,      // const n
        Count,      // count sigAwait{chan} n
        ScanAwait,  // scanAwait (box (+)) n sigAwait{chan}
        Bound,      // const var
        MapAdd,
        MapMul,
        MapClamp,
        Sum,
        Scan,
        Switch,     // switch kids[0] kids[1]
        Toggle,     // toggleSig over two branches binding var
        ZipFst,
        Await,      // sigAwait{chan} : Delay (Sig Nat)
        Interleave,
        FConst,
        FSig,       // sig{s}
        FIntegral,
        FDerivative,
        FScale,
    };
    Kind kind = Kind::Const;
    std::string chan;
    std::string var;
    std::uint64_t n = 0;
    std::vector<GenNode> kids;

    bool is_float() const;
    bool is_delay() const { return kind == Kind::Await || kind == Kind::Interleave; }
};

struct GenProgram {
    std::vector<GenNode> outputs;
};

struct GenConfig {
    int max_depth = 7;
    std::size_t max_outputs = 3;
};

GenProgram generate_program(std::mt19937_64& rng, const GenConfig& cfg = {});
std::string render(const GenProgram& p);
std::size_t gen_size(const GenProgram& p);

struct FuzzCase {
    GenProgram program;
    std::vector<InputEvent> events;
    InputBuffer buffer;
};

struct FuzzFailure {
    std::uint64_t seed = 0;
    std::size_t index = 0;
    std::string program;
    std::vector<InputEvent> events;
    std::string error;
};

struct FuzzConfig {
    std::uint64_t seed = 1;
    std::size_t cases = 100;
    std::size_t events = 50;
    GenConfig gen;
    MachineConfig machine;
    bool shrink = true;
};

struct FuzzReport {
    std::size_t cases = 0;
    std::size_t steps = 0;
    std::vector<FuzzFailure> failures;
};

/// Deterministic case `index` of a fuzz run.
FuzzCase fuzz_case(std::uint64_t seed, std::size_t index, const FuzzConfig& cfg);
/// nullopt when the case typechecks and runs every step without getting stuck.
std::optional<std::string> run_case(const FuzzCase& c, const MachineConfig& machine);
/// Greedy shrinking of a failing case: drops events, then replaces subtrees
/// with leaves or with same-sorted children, while the case keeps failing.
FuzzCase shrink_case(FuzzCase c, const MachineConfig& machine);
FuzzReport fuzz_productivity(const FuzzConfig& cfg);

}  // namespace asyncratt
