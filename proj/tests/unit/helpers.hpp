#pragma once

#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "asyncratt/core.hpp"
#include "asyncratt/reactive.hpp"
#include "asyncratt/stdlib.hpp"

namespace testing_support {

inline std::string program_path(const std::string& name) { return std::string(ASYNCRATT_PROGRAMS_DIR) + "/" + name; }

inline std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline asyncratt::ElaboratedProgram load_example(const std::string& name) {
    return asyncratt::load_program(slurp(program_path(name)));
}

inline asyncratt::InputEvent unit_event(const std::string& ch) { return {ch, asyncratt::tm::unit()}; }
inline asyncratt::InputEvent nat_event(const std::string& ch, std::uint64_t n) { return {ch, asyncratt::tm::nat(n)}; }
inline asyncratt::InputEvent float_event(const std::string& ch, double x) { return {ch, asyncratt::tm::flt(x)}; }

inline std::uint64_t nat_of(const asyncratt::TermPtr& v) { return asyncratt::as_numeral(v).value(); }

/// Looks up an output by name in a batch; nullptr when absent.
inline asyncratt::TermPtr find_output(const asyncratt::OutputBatch& b, const std::string& name) {
    for (const auto& [n, v] : b)
        if (n == name) return v;
    return nullptr;
}

}  // namespace testing_support
