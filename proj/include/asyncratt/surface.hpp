#pragma once

// Surface language: lexer, parser, abstract syntax, elaboration to core
// terms, and printing of elaborated programs back to parseable text.

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "asyncratt/core.hpp"
#include "asyncratt/program.hpp"

namespace asyncratt {

class SyntaxError : public std::runtime_error {
public:
    SyntaxError(Span span, std::string message, std::vector<std::string> expected = {});
    Span span;
    std::string message;
    std::vector<std::string> expected;
};

class ElaborationError : public std::runtime_error {
public:
    ElaborationError(Span span, std::string message);
    Span span;
    std::string message;
    std::string origin;
};

struct Pattern;
using PatternPtr = std::shared_ptr<const Pattern>;

struct Pattern {
    enum class Kind { Wild, Var, Unit, Pair, Cons, Inj, Suc, Nat };
    Kind kind = Kind::Wild;
    std::string name;
    int index = 0;  // Inj
    std::uint64_t nat = 0;
    std::vector<PatternPtr> kids;
    Span span;
};

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
    enum class Kind {
        Var,
        Template,  // name{channel}
        Unit,
        Nat,
        Float,
        Never,
        Await,
        Read,
        Lam,     // pats -> kids[0]
        App,     // kids[0] applied to kids[1..]
        Let,     // pats[0] = kids[0] in kids[1]
        Seq,     // kids[0]; kids[1]
        If,      // kids[0..2]
        Case,    // kids[0] of (pats[i] -> kids[i+1])
        NatRec,  // natrec kids[0] with zero -> kids[1] | suc name name2 -> kids[2]
        Fix,     // fix name -> kids[0]
        Cons,
        Prim,
        Tuple,
        Unary,   // keyword applied to kids[0]
        Delay,   // kids[0]; explicit clock atoms in `clock` when has_clock
        Select,
        Ctor,    // Left / Right / Both (index 1..3) kids[0] kids[1]
    };
    enum class UnaryOp { Adv, Unbox, Box, Into, Out, Suc, Fst, Snd, In1, In2 };

    Kind kind = Kind::Unit;
    std::string name;
    std::string name2;
    std::uint64_t nat = 0;
    double number = 0.0;
    PrimOp op = PrimOp::Add;
    UnaryOp unary = UnaryOp::Adv;
    int index = 0;
    bool has_clock = false;
    std::vector<ExprPtr> clock;
    std::vector<PatternPtr> pats;
    std::vector<ExprPtr> kids;
    Span span;
};

struct SurfaceInput {
    std::string name;
    ChannelClass cls = ChannelClass::PushOnly;
    TypePtr type;
    Span span;
};

struct Equation {
    std::vector<PatternPtr> pats;
    ExprPtr body;
    std::vector<std::pair<PatternPtr, ExprPtr>> where;
    Span span;
};

struct SurfaceDef {
    std::string name;
    std::optional<std::string> channel_param;  // template definitions: name{k}
    TypePtr channel_type;                      // declared type of k, may be a Param
    bool has_signature = false;
    Scheme scheme;
    std::vector<Equation> equations;
    Span span;
};

struct SurfaceOutput {
    std::string name;
    TypePtr type;
    ExprPtr expr;
    Span span;
};

struct SurfaceProgram {
    std::vector<SurfaceInput> inputs;
    std::vector<SurfaceDef> defs;
    std::vector<SurfaceOutput> outputs;

    const SurfaceDef* find_def(const std::string& name) const;
};

SurfaceProgram parse_program(std::string_view text);
ExprPtr parse_expr(std::string_view text);
TypePtr parse_type(std::string_view text);
/// Parses `[constraints =>] type`, collecting Param names in order.
Scheme parse_scheme(std::string_view text);

/// Incremental elaborator: register sources, then elaborate expressions in
/// the resulting global scope. Template definitions are instantiated per
/// channel on first use.
class Elaborator {
public:
    explicit Elaborator(InputContext delta);
    ~Elaborator();
    Elaborator(const Elaborator&) = delete;
    Elaborator& operator=(const Elaborator&) = delete;

    /// Registers every definition of `p` and elaborates the non-template ones
    /// in order.
    void add_source(const SurfaceProgram& p, const std::string& origin = {});
    /// Global for template `name` at `channel`, elaborating it if needed.
    const GlobalDef& instance(const std::string& name, const std::string& channel, Span use = {});
    /// Closed core term for an expression in the current global scope.
    TermPtr expr(const ExprPtr& e);
    const ElaboratedProgram& program() const;
    ElaboratedProgram& program();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

struct ElabOptions {
    const SurfaceProgram* prelude = nullptr;
    std::string prelude_origin = "<prelude>";
};

/// Whole-program elaboration: inputs, prelude and program definitions, outputs.
ElaboratedProgram elaborate(const SurfaceProgram& p, const ElabOptions& opts = {});

/// Parseable text for an elaborated program; every global is rendered as a
/// zero-argument definition of its core term.
std::string print_program(const ElaboratedProgram& p);

}  // namespace asyncratt
