#pragma once

// An elaborated reactive program: input context, closed top-level
// definitions (implicitly boxed), and value-typed output signals.

#include <string>
#include <vector>

#include "asyncratt/core.hpp"

namespace asyncratt {

/// Top-level type scheme. `params` are the schematic variables (TypeKind::Param
/// inside `type`); `stable` lists those carrying a Stable constraint.
struct Scheme {
    std::vector<std::string> params;
    std::set<std::string> stable;
    TypePtr type;
};

std::string to_string(const Scheme& s);

struct GlobalDef {
    std::string name;
    Scheme scheme;
    TermPtr body;  // closed apart from references to earlier globals
    Span span;
    std::string origin;  // source name for diagnostics; empty for the main file
};

struct OutputDef {
    std::string name;
    TypePtr type;  // value type A; the expression has type Sig A
    TermPtr expr;
    Span span;
};

struct ElaboratedProgram {
    InputContext inputs;
    std::vector<GlobalDef> globals;
    std::vector<OutputDef> outputs;

    const GlobalDef* find_global(const std::string& name) const;
    /// Product of the output expressions: Unit for none, the signal itself for
    /// one, right-nested pairs otherwise.
    TermPtr output_tuple() const;
    /// Closed core term: `let g = box body in ...` for every global reachable
    /// from the outputs, wrapped around output_tuple().
    TermPtr to_term() const;
    /// Same, for one output alone.
    TermPtr output_term(std::size_t index) const;
    std::set<std::string> global_names() const;
};

}  // namespace asyncratt
