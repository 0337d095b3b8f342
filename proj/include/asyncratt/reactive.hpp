#pragma once

// Reactive machine: initialisation, input and output transitions, gc.

#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "asyncratt/core.hpp"
#include "asyncratt/eval.hpp"
#include "asyncratt/program.hpp"

namespace asyncratt {

struct InputEvent {
    std::string channel;
    TermPtr value;
};

/// Output channel name and the value produced on it, in declaration order.
using OutputBatch = std::vector<std::pair<std::string, TermPtr>>;

struct InitState {
    InputBuffer buffer;
    TermPtr program;
};

struct Running {
    InputBuffer buffer;
    std::vector<std::pair<std::string, Location>> outputs;
    Store store;
};

using MachineState = std::variant<InitState, Running>;

class EventError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Structural membership of a closed value in a value type.
bool value_has_type(const TermPtr& v, const TypePtr& a);
void validate_event(const InputContext& delta, const InputEvent& e);
void validate_buffer(const InputContext& delta, const InputBuffer& buffer);

/// (eta_N, eta_L): locations whose clock contains kappa, and the rest.
std::pair<Heap, Heap> heap_split(const Heap& heap, const std::string& kappa);
/// Drops the now-heap and the current input.
Store gc(const Store& store);

/// Heap cells reachable from the output locations through stored terms.
Heap reachable(const Running& s);

enum class Fault {
    None,
    CollectBeforeCompute,  // discards the now-heap before outputs are computed
};

struct MachineConfig {
    EvalConfig eval;
    std::uint64_t seed = 1;  // first location id
    Fault fault = Fault::None;
};

/// Splits the value of a program term into one (head, tail location) per output.
std::vector<std::pair<TermPtr, Location>> split_outputs(const TermPtr& v, std::size_t n);

std::pair<OutputBatch, Running> init(const InitState& s, const std::vector<std::string>& names, Allocator& alloc,
                                     const EvalConfig& cfg = {});
Running step_input(Running s, const InputContext& delta, const InputEvent& e);
std::pair<OutputBatch, Running> step_output(Running s, Allocator& alloc, const EvalConfig& cfg = {},
                                            Fault fault = Fault::None);

class Machine {
public:
    Machine(const ElaboratedProgram& program, InputBuffer buffer, MachineConfig cfg = {});

    OutputBatch init();
    void step_input(const InputEvent& e);
    OutputBatch step_output();
    OutputBatch step(const InputEvent& e);

    const MachineState& state() const { return state_; }
    /// Throws std::logic_error before init().
    const Running& running() const;
    const ElaboratedProgram& program() const { return program_; }
    std::size_t steps() const { return steps_; }

private:
    ElaboratedProgram program_;
    MachineConfig cfg_;
    Allocator alloc_;
    MachineState state_;
    std::vector<std::string> names_;
    std::size_t steps_ = 0;
};

/// Validates the buffer and every event, then runs init followed by one
/// input/output pair per event. Batch 0 is the initial one.
std::vector<OutputBatch> run(const ElaboratedProgram& program, const InputBuffer& buffer,
                             const std::vector<InputEvent>& events, const MachineConfig& cfg = {});

}  // namespace asyncratt
