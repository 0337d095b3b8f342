#pragma once

// Abstract syntax shared by every stage: types, clock expressions, terms,
// input contexts, heaps and stores.

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace asyncratt {

struct Span {
    int line = 0;
    int col = 0;

    bool known() const { return line > 0; }
    std::string to_string() const;
};

// ---------------------------------------------------------------------------
// Types
// ---------------------------------------------------------------------------

enum class TypeKind {
    Unit,
    Nat,
    Float,
    Prod,
    Sum,
    Fun,
    DelayExist,  // asynchronous delay on an existentially quantified clock
    DelayAny,    // delay runnable on any future tick (fixed points)
    Box,
    FixRec,
    Var,    // bound by an enclosing FixRec
    Param,  // rigid schematic variable of a top-level signature
    Meta,   // unification variable, typechecker-internal
};

class Type;
using TypePtr = std::shared_ptr<const Type>;

class Type {
public:
    TypeKind kind;
    TypePtr left;   // unary payload, or left operand
    TypePtr right;  // right operand of Prod/Sum/Fun
    std::string name;
    int meta = -1;

    Type(TypeKind k, TypePtr l, TypePtr r, std::string n, int m)
        : kind(k), left(std::move(l)), right(std::move(r)), name(std::move(n)), meta(m) {}
};

namespace ty {
TypePtr unit();
TypePtr nat();
TypePtr flt();
TypePtr prod(TypePtr a, TypePtr b);
TypePtr sum(TypePtr a, TypePtr b);
TypePtr fun(TypePtr a, TypePtr b);
TypePtr later(TypePtr a);
TypePtr any(TypePtr a);
TypePtr box(TypePtr a);
TypePtr fix(std::string binder, TypePtr body);
TypePtr var(std::string name);
TypePtr param(std::string name);
TypePtr meta(int id);
/// Sig A = Fix a. A x a
TypePtr sig(TypePtr a);
/// Unit + Unit; in1 () is true.
TypePtr boolean();
}  // namespace ty

/// Stable grammar: Unit | Nat | Float | S x S' | S + S' | DelayAny A | Box A.
/// Params count as stable only when listed in `stable_params`.
bool is_stable(const TypePtr& a, const std::set<std::string>* stable_params = nullptr);
/// Value grammar: Unit | Nat | Float | T x T' | T + T'.
bool is_value_type(const TypePtr& a);
bool type_equal(const TypePtr& a, const TypePtr& b);
/// a[replacement/name], capture-avoiding over FixRec binders.
TypePtr subst_type(const TypePtr& a, const std::string& name, const TypePtr& replacement);
/// Fix a.A  ~>  A[DelayExist(Fix a.A)/a]
TypePtr unfold(const TypePtr& fixrec);
/// If `a` is Sig B, returns B.
TypePtr sig_element(const TypePtr& a);
bool contains_meta(const TypePtr& a);
bool contains_param(const TypePtr& a);
std::string to_string(const TypePtr& a);

// ---------------------------------------------------------------------------
// Channels and clocks
// ---------------------------------------------------------------------------

enum class ChannelClass { PushOnly, BufferedOnly, BufferedPush };

inline bool is_push(ChannelClass c) { return c != ChannelClass::BufferedOnly; }
inline bool is_buffered(ChannelClass c) { return c != ChannelClass::PushOnly; }
std::string_view to_string(ChannelClass c);

struct ChannelDecl {
    std::string name;
    ChannelClass cls;
    TypePtr type;
};

/// Input channel context: ordered, names unique.
class InputContext {
public:
    InputContext() = default;
    InputContext(std::initializer_list<ChannelDecl> decls);

    /// Throws std::invalid_argument on a duplicate name.
    void add(ChannelDecl decl);
    const ChannelDecl* find(std::string_view name) const;
    bool contains(std::string_view name) const { return find(name) != nullptr; }
    const std::vector<ChannelDecl>& decls() const { return decls_; }
    std::vector<std::string> push_channels() const;
    std::vector<std::string> buffered_channels() const;
    /// Sub-context keeping only the named channels, in original order.
    InputContext restrict_to(const std::set<std::string>& names) const;

private:
    std::vector<ChannelDecl> decls_;
};

/// A runtime clock: a finite set of push channels.
using Clock = std::set<std::string>;
std::string to_string(const Clock& c);

struct Location {
    std::uint64_t id = 0;
    Clock clock;
};

// ---------------------------------------------------------------------------
// Terms
// ---------------------------------------------------------------------------

class Term;
using TermPtr = std::shared_ptr<const Term>;

struct ClockExpr;
using ClockPtr = std::shared_ptr<const ClockExpr>;

/// cl(v) | theta \/ theta'
struct ClockExpr {
    enum class Kind { Of, Union };
    Kind kind;
    TermPtr value;
    ClockPtr left;
    ClockPtr right;
};

ClockPtr clock_of(TermPtr value);
ClockPtr clock_union(ClockPtr a, ClockPtr b);
/// Leaves of a clock expression, left to right.
std::vector<TermPtr> clock_atoms(const ClockPtr& c);

enum class TermKind {
    Var,
    Unit,
    Nat,  // closed numeral; zero is Nat 0
    Suc,
    Lam,
    Pair,
    Inj,
    Proj,
    App,
    Let,
    Case,
    NatRec,
    Delay,
    Adv,
    Select,
    Never,
    Await,
    Read,
    Box,
    Unbox,
    Fix,
    Into,
    Out,
    Loc,
    DFix,
    Float,
    Prim,
};

/// Primitive arithmetic over Nat and Float; comparisons yield Unit + Unit.
enum class PrimOp { Add, Sub, Mul, Div, Eq, Lt, Le, Gt, Ge };
std::string_view to_string(PrimOp op);
bool is_comparison(PrimOp op);

class Term {
public:
    TermKind kind;
    std::string name;   // variable, first binder, channel
    std::string name2;  // second binder (case, natrec)
    int index = 0;      // injection / projection index, 1 or 2
    std::uint64_t nat = 0;
    double number = 0.0;
    PrimOp op = PrimOp::Add;
    Location loc;
    ClockPtr clock;  // Delay subscript; null when not yet inferred
    std::vector<TermPtr> kids;
    Span span;

    bool is_value() const { return value_; }
    bool is_closed() const { return free_.empty(); }
    /// Sorted free variables, including those under clock subscripts.
    const std::vector<std::string>& free_vars() const { return free_; }
    bool has_free(const std::string& x) const;

    explicit Term(TermKind k) : kind(k) {}

private:
    friend TermPtr finish(std::shared_ptr<Term> t);
    bool value_ = false;
    std::vector<std::string> free_;
};

/// Computes the cached value flag and free-variable set.
TermPtr finish(std::shared_ptr<Term> t);

namespace tm {
TermPtr var(std::string x, Span s = {});
TermPtr unit(Span s = {});
TermPtr zero(Span s = {});
TermPtr nat(std::uint64_t n, Span s = {});
TermPtr suc(TermPtr t, Span s = {});
TermPtr lam(std::string x, TermPtr body, Span s = {});
TermPtr pair(TermPtr a, TermPtr b, Span s = {});
TermPtr inj(int i, TermPtr t, Span s = {});
TermPtr proj(int i, TermPtr t, Span s = {});
TermPtr app(TermPtr f, TermPtr a, Span s = {});
TermPtr let(std::string x, TermPtr bound, TermPtr body, Span s = {});
TermPtr case_(TermPtr scrut, std::string x1, TermPtr t1, std::string x2, TermPtr t2, Span s = {});
/// rec(zero_case, x y. step, n)
TermPtr natrec(TermPtr zero_case, std::string x, std::string y, TermPtr step, TermPtr n, Span s = {});
TermPtr delay(ClockPtr clock, TermPtr body, Span s = {});
TermPtr adv(TermPtr t, Span s = {});
TermPtr select(TermPtr a, TermPtr b, Span s = {});
TermPtr never(Span s = {});
TermPtr await(std::string channel, Span s = {});
TermPtr read(std::string channel, Span s = {});
TermPtr box(TermPtr t, Span s = {});
TermPtr unbox(TermPtr t, Span s = {});
TermPtr fix(std::string x, TermPtr body, Span s = {});
TermPtr into(TermPtr t, Span s = {});
TermPtr out(TermPtr t, Span s = {});
TermPtr loc(Location l);
TermPtr dfix(std::string x, TermPtr body);
TermPtr flt(double x, Span s = {});
TermPtr prim(PrimOp op, TermPtr a, TermPtr b, Span s = {});
/// s :: t  =  into <s, t>
TermPtr cons(TermPtr head, TermPtr tail, Span s = {});
TermPtr boolean(bool b);
}  // namespace tm

/// Capture-avoiding t[v/x].
TermPtr subst(const TermPtr& t, const TermPtr& v, const std::string& x);
bool alpha_equal(const TermPtr& a, const TermPtr& b);
/// True when some Loc or DFix node occurs in t.
bool contains_machine_terms(const TermPtr& t);
/// True when some Loc node occurs in t.
bool contains_location(const TermPtr& t);
/// Every location id mentioned anywhere in t, including clock subscripts.
void collect_locations(const TermPtr& t, std::set<std::uint64_t>& out);
/// Reads a closed numeral (Nat n or suc chains over one).
std::optional<std::uint64_t> as_numeral(const TermPtr& t);
std::size_t term_size(const TermPtr& t);

struct PrintOptions {
    /// Variables printed by bare name when wrapped in Unbox (implicitly unboxed
    /// top-level definitions).
    const std::set<std::string>* globals = nullptr;
    /// Render locations as l<id> instead of the parseable #loc form.
    bool compact_locations = true;
};

/// Surface-syntax rendering; parseable for location-free terms.
std::string to_string(const TermPtr& t, const PrintOptions& opts = {});
std::string to_string(const ClockPtr& c, const PrintOptions& opts = {});

// ---------------------------------------------------------------------------
// Heaps and stores
// ---------------------------------------------------------------------------

struct HeapCell {
    Location loc;
    TermPtr term;
};

/// Location id -> delayed computation.
using Heap = std::map<std::uint64_t, HeapCell>;

/// The now-part of a two-heap store: eta_N <kappa |-> v>.
struct NowPart {
    Heap heap;
    std::string channel;
    TermPtr value;
};

/// Either eta_L or eta_N <kappa |-> v> eta_L.
struct Store {
    std::optional<NowPart> now;
    Heap later;

    bool two_heap() const { return now.has_value(); }
    std::size_t size() const { return later.size() + (now ? now->heap.size() : 0); }
    const HeapCell* find(std::uint64_t id) const;
};

using InputBuffer = std::map<std::string, TermPtr>;

}  // namespace asyncratt
