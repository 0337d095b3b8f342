#include "asyncratt/stdlib.hpp"

#include "asyncratt/typecheck.hpp"

namespace asyncratt {

namespace detail {
extern const std::string_view kPreludeSource;
}

std::string_view prelude_source() { return detail::kPreludeSource; }

const SurfaceProgram& prelude() {
    static const SurfaceProgram p = parse_program(prelude_source());
    return p;
}

const std::vector<ManifestEntry>& prelude_manifest() {
    static const std::vector<ManifestEntry> m = {
        {"map", false, "Box (A -> B) -> Sig A -> Sig B"},
        {"scan", false, "Stable B => Box (B -> A -> B) -> B -> Sig A -> Sig B"},
        {"sum", false, "Sig Nat -> Sig Nat"},
        {"sigAwait", true, "Delay (Sig A)"},
        {"scanAwait", false, "Stable B => Box (B -> A -> B) -> B -> Delay (Sig A) -> Sig B"},
        {"count", false, "Delay (Sig A) -> Nat -> Sig Nat"},
        {"const", false, "A -> Sig A"},
        {"interleave", false, "Box (A -> A -> A) -> Delay (Sig A) -> Delay (Sig A) -> Delay (Sig A)"},
        {"zip", false, "(Stable A, Stable B) => Sig A -> Sig B -> Sig (A * B)"},
        {"switch", false, "Sig A -> Delay (Sig A) -> Sig A"},
        {"switchf", false, "Stable A => Sig A -> Delay (A -> Sig A) -> Sig A"},
        {"toggleSig", false,
         "Stable A => Box (Delay Unit) -> Box (A -> Sig A) -> Box (A -> Sig A) -> A -> Sig A"},
        {"sig", true, "Sig A"},
        {"integral", true, "Float -> Sig Float -> Sig Float"},
        {"derivative", true, "Sig Float -> Sig Float"},
    };
    return m;
}

namespace {

bool same_scheme(const Scheme& a, const Scheme& b) {
    if (a.stable != b.stable) return false;
    std::set<std::string> pa(a.params.begin(), a.params.end()), pb(b.params.begin(), b.params.end());
    return pa == pb && type_equal(a.type, b.type);
}

std::string describe(const std::exception& e) {
    if (auto* t = dynamic_cast<const TypeError*>(&e))
        return t->span.to_string() + ": " + std::string(to_string(t->kind)) + ": " + t->what();
    if (auto* x = dynamic_cast<const ElaborationError*>(&e)) return x->span.to_string() + ": " + x->message;
    return e.what();
}

}  // namespace

std::vector<PreludeCheck> check_prelude() {
    std::vector<PreludeCheck> out;
    for (const auto& entry : prelude_manifest()) {
        PreludeCheck c{entry.name, std::nullopt};
        try {
            const SurfaceDef* d = prelude().find_def(entry.name);
            if (!d) throw std::runtime_error("not defined in the prelude");
            if (d->channel_param.has_value() != entry.is_template)
                throw std::runtime_error(entry.is_template ? "expected a channel template" : "unexpected channel template");
            Scheme stated = parse_scheme(entry.scheme);
            if (!same_scheme(d->scheme, stated))
                throw std::runtime_error("declared scheme " + to_string(d->scheme) + " differs from " + entry.scheme);
            InputContext delta;
            if (entry.is_template) delta.add({"probe", ChannelClass::BufferedPush, d->channel_type});
            Elaborator el(delta);
            el.add_source(prelude());
            if (entry.is_template) el.instance(entry.name, "probe");
            Globals globals;
            for (const auto& g : el.program().globals) {
                check_definition(delta, globals, g);
                globals[g.name] = g.scheme;
            }
        } catch (const std::exception& e) {
            c.error = describe(e);
        }
        out.push_back(std::move(c));
    }
    return out;
}

ElaboratedProgram load_program(std::string_view text, const LoadOptions& opts) {
    SurfaceProgram p = parse_program(text);
    ElabOptions eo;
    if (opts.prelude) eo.prelude = &prelude();
    ElaboratedProgram prog = elaborate(p, eo);
    check_reactive_program(prog);
    return prog;
}

}  // namespace asyncratt
