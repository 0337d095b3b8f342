#pragma once

// The bundled prelude of signal combinators and program loading helpers.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "asyncratt/program.hpp"
#include "asyncratt/surface.hpp"

namespace asyncratt {

std::string_view prelude_source();
/// Parsed once on first use.
const SurfaceProgram& prelude();

struct ManifestEntry {
    std::string name;
    bool is_template = false;
    std::string scheme;  // stated type scheme, surface syntax
};

/// The documented combinators, in prelude order.
const std::vector<ManifestEntry>& prelude_manifest();

struct PreludeCheck {
    std::string name;
    std::optional<std::string> error;  // empty when the combinator checks
};

/// Elaborates and typechecks every manifest entry against its stated scheme.
/// Templates are instantiated at a probe channel of class buffered push.
std::vector<PreludeCheck> check_prelude();

struct LoadOptions {
    bool prelude = true;
};

/// Parse, elaborate and typecheck a reactive program.
ElaboratedProgram load_program(std::string_view text, const LoadOptions& opts = {});

}  // namespace asyncratt
