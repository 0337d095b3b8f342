#pragma once

// Modal typechecker: context and clock well-formedness, bidirectional term
// typing with unification for schematic globals, and reactive programs.

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "asyncratt/core.hpp"
#include "asyncratt/program.hpp"

namespace asyncratt {

enum class TypeErrorKind {
    UnboundVariable,
    VariableCrossesTick,
    TickInLambdaContext,
    SecondTick,
    ClockMismatch,
    NotStable,
    NotValueType,
    ChannelClassMismatch,
    Mismatch,
    CannotInfer,
};

std::string_view to_string(TypeErrorKind k);

class TypeError : public std::runtime_error {
public:
    TypeError(TypeErrorKind kind, Span span, std::string message);
    TypeErrorKind kind;
    Span span;
    std::string message;
    std::string origin;  // set when the error arises in a definition from another source
};

struct CtxEntry {
    enum class Kind { Var, Tick, Lock };
    Kind kind = Kind::Var;
    std::string name;
    TypePtr type;
    ClockPtr clock;

    static CtxEntry var(std::string n, TypePtr t) { return {Kind::Var, std::move(n), std::move(t), nullptr}; }
    static CtxEntry tick(ClockPtr c) { return {Kind::Tick, {}, nullptr, std::move(c)}; }
};

/// Ordered typing context of variable bindings and ticks. Lock entries are
/// used internally to mark a stabilised suffix and never appear in contexts
/// passed to or returned from the public functions.
using TypingContext = std::vector<CtxEntry>;

/// Global definitions visible to terms, referenced as `unbox g`.
using Globals = std::map<std::string, Scheme>;

struct CheckOptions {
    const Globals* globals = nullptr;
    /// Schematic parameters allowed as stable in the current definition.
    const std::set<std::string>* stable_params = nullptr;
};

void check_ctx(const InputContext& delta, const TypingContext& gamma);
void check_clock(const InputContext& delta, const TypingContext& gamma, const ClockPtr& theta);
/// Fully determined type of t, or CannotInfer when unification leaves holes.
TypePtr infer(const InputContext& delta, const TypingContext& gamma, const TermPtr& t, const CheckOptions& opts = {});
void check(const InputContext& delta, const TypingContext& gamma, const TermPtr& t, const TypePtr& expected,
           const CheckOptions& opts = {});
/// Drops ticks and bindings of non-stable type, preserving order.
TypingContext stabilize(const TypingContext& gamma);

/// Checks a closed definition body at its scheme (params rigid).
void check_definition(const InputContext& delta, const Globals& globals, const GlobalDef& def);

/// Input declarations are value types, every global checks at its scheme in
/// order, and each output checks at Sig A_i in the empty context.
void check_reactive_program(const ElaboratedProgram& p);

/// Clock-expression equality up to associativity, commutativity, idempotence.
bool clock_equal(const ClockPtr& a, const ClockPtr& b);

}  // namespace asyncratt
