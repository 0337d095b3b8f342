#include "asyncratt/program.hpp"

#include <algorithm>

namespace asyncratt {

std::string to_string(const Scheme& s) {
    std::string out;
    if (!s.stable.empty()) {
        std::vector<std::string> names(s.stable.begin(), s.stable.end());
        if (names.size() == 1) {
            out += "Stable " + names[0] + " => ";
        } else {
            out += "(";
            for (std::size_t i = 0; i < names.size(); ++i) {
                if (i) out += ", ";
                out += "Stable " + names[i];
            }
            out += ") => ";
        }
    }
    return out + to_string(s.type);
}

const GlobalDef* ElaboratedProgram::find_global(const std::string& name) const {
    for (const auto& g : globals)
        if (g.name == name) return &g;
    return nullptr;
}

TermPtr ElaboratedProgram::output_tuple() const {
    if (outputs.empty()) return tm::unit();
    TermPtr acc = outputs.back().expr;
    for (std::size_t i = outputs.size() - 1; i-- > 0;) acc = tm::pair(outputs[i].expr, acc);
    return acc;
}

namespace {

TermPtr wrap_globals(const std::vector<GlobalDef>& globals, TermPtr body) {
    std::set<std::string> needed(body->free_vars().begin(), body->free_vars().end());
    std::vector<const GlobalDef*> used;
    for (auto it = globals.rbegin(); it != globals.rend(); ++it) {
        if (!needed.count(it->name)) continue;
        used.push_back(&*it);
        needed.erase(it->name);
        for (const auto& v : it->body->free_vars()) needed.insert(v);
    }
    for (const GlobalDef* g : used) body = tm::let(g->name, tm::box(g->body), body);
    return body;
}

}  // namespace

TermPtr ElaboratedProgram::to_term() const { return wrap_globals(globals, output_tuple()); }

TermPtr ElaboratedProgram::output_term(std::size_t index) const {
    return wrap_globals(globals, outputs.at(index).expr);
}

std::set<std::string> ElaboratedProgram::global_names() const {
    std::set<std::string> out;
    for (const auto& g : globals) out.insert(g.name);
    return out;
}

}  // namespace asyncratt
