#pragma once

// Big-step evaluator over heap-structured stores.

#include <stdexcept>
#include <string>
#include <string_view>

#include "asyncratt/core.hpp"

namespace asyncratt {

class MachineError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class StuckKind { DanglingLocation, AdvOutsideNowHeap, BadSelect, UnboundChannelBuffer, IllTypedRedex };
std::string_view to_string(StuckKind k);

class StuckError : public MachineError {
public:
    StuckError(StuckKind kind, TermPtr term, Store store, const std::string& detail);
    StuckKind kind;
    TermPtr term;
    Store store;
};

class FuelExhausted : public MachineError {
public:
    explicit FuelExhausted(std::uint64_t budget);
    std::uint64_t budget;
};

/// Hooks for tracing and auditing. Default implementations do nothing.
class EvalObserver {
public:
    virtual ~EvalObserver() = default;
    virtual void on_rule(std::string_view rule, const TermPtr& redex, const Store& store);
    /// Called before every heap dereference made by adv, including failed ones.
    virtual void on_deref(const Location& l);
    /// Called by the machine with the cells it is about to discard.
    virtual void on_collect(const Heap& dropped);
};

/// Location ids from a per-run counter; ids are never reused.
class Allocator {
public:
    explicit Allocator(std::uint64_t seed = 1) : next_(seed) {}
    Location alloc(Clock clock) { return Location{next_++, std::move(clock)}; }
    std::uint64_t peek() const { return next_; }

private:
    std::uint64_t next_;
};

struct EvalConfig {
    std::uint64_t fuel = 10'000'000;  // rule applications per evaluation
    EvalObserver* observer = nullptr;
};

/// ceil(theta) for a closed clock expression over locations and await references.
Clock clock_eval(const ClockPtr& theta);

struct EvalOutcome {
    TermPtr value;
    Store store;
};

/// <t, sigma> evaluates to <v, sigma'> under input buffer iota.
EvalOutcome eval(const TermPtr& t, Store sigma, const InputBuffer& iota, Allocator& alloc,
                 const EvalConfig& cfg = {});

/// In-place variant used by the machine; returns the value and extends `sigma`.
TermPtr eval_in(const TermPtr& t, Store& sigma, const InputBuffer& iota, Allocator& alloc,
                const EvalConfig& cfg = {});

}  // namespace asyncratt
