#include "asyncratt/io.hpp"

#include <cmath>

namespace asyncratt {

using nlohmann::json;

json value_to_json(const TermPtr& v) {
    switch (v->kind) {
        case TermKind::Unit:
            return nullptr;
        case TermKind::Nat:
            return v->nat;
        case TermKind::Float:
            return v->number;
        case TermKind::Pair:
            return json::array({value_to_json(v->kids[0]), value_to_json(v->kids[1])});
        case TermKind::Inj:
            return json{{"in", v->index}, {"val", value_to_json(v->kids[0])}};
        default:
            if (auto n = as_numeral(v)) return *n;
            return to_string(v);
    }
}

TermPtr value_from_json(const json& j, const TypePtr& a) {
    auto fail = [&]() -> TermPtr { throw EventError("expected a value of type " + to_string(a) + ", got " + j.dump()); };
    switch (a->kind) {
        case TypeKind::Unit:
            if (!j.is_null()) fail();
            return tm::unit();
        case TypeKind::Nat:
            if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<std::int64_t>() >= 0)) fail();
            return tm::nat(j.get<std::uint64_t>());
        case TypeKind::Float:
            if (!j.is_number()) fail();
            return tm::flt(j.get<double>());
        case TypeKind::Prod:
            if (!j.is_array() || j.size() != 2) fail();
            return tm::pair(value_from_json(j[0], a->left), value_from_json(j[1], a->right));
        case TypeKind::Sum: {
            if (!j.is_object() || !j.contains("in") || !j.contains("val") || j.size() != 2) fail();
            const json& i = j["in"];
            if (!i.is_number_integer() || (i.get<int>() != 1 && i.get<int>() != 2)) fail();
            int idx = i.get<int>();
            return tm::inj(idx, value_from_json(j["val"], idx == 1 ? a->left : a->right));
        }
        default:
            throw EventError("type " + to_string(a) + " is not a value type");
    }
}

InputEvent event_from_json(const json& j, const InputContext& delta) {
    if (!j.is_object() || !j.contains("ch") || !j["ch"].is_string())
        throw EventError("event must be an object with a string field \"ch\"");
    std::string ch = j["ch"].get<std::string>();
    const ChannelDecl* d = delta.find(ch);
    if (!d) throw EventError("unknown input channel '" + ch + "'");
    json val = j.contains("val") ? j["val"] : json(nullptr);
    return InputEvent{ch, value_from_json(val, d->type)};
}

json event_to_json(const InputEvent& e) { return json{{"ch", e.channel}, {"val", value_to_json(e.value)}}; }

std::vector<InputEvent> read_events(std::istream& in, const InputContext& delta) {
    std::vector<InputEvent> out;
    std::string line;
    int n = 0;
    while (std::getline(in, line)) {
        ++n;
        auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        try {
            out.push_back(event_from_json(json::parse(line), delta));
        } catch (const json::exception& e) {
            throw EventError("line " + std::to_string(n) + ": malformed JSON: " + e.what());
        } catch (const EventError& e) {
            throw EventError("line " + std::to_string(n) + ": " + e.what());
        }
    }
    return out;
}

InputBuffer read_buffer(std::istream& in, const InputContext& delta) {
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw EventError(std::string("malformed buffer JSON: ") + e.what());
    }
    if (!j.is_object()) throw EventError("buffer must be a JSON object");
    InputBuffer buf;
    for (auto it = j.begin(); it != j.end(); ++it) {
        const ChannelDecl* d = delta.find(it.key());
        if (!d) throw EventError("initial value for unknown channel '" + it.key() + "'");
        buf[it.key()] = value_from_json(it.value(), d->type);
    }
    validate_buffer(delta, buf);
    return buf;
}

void RuleLogger::on_rule(std::string_view rule, const TermPtr& redex, const Store& store) {
    out_ << json{{"rule", rule}, {"redex", to_string(redex)}, {"store", store.size()}}.dump() << "\n";
}

json batch_to_json(std::size_t step, const OutputBatch& batch) {
    json outs = json::array();
    for (const auto& [name, v] : batch) outs.push_back(json::array({name, value_to_json(v)}));
    return json{{"step", step}, {"outputs", outs}};
}

json state_to_json(const Running& s) {
    json outs = json::array();
    for (const auto& [name, l] : s.outputs)
        outs.push_back(json{{"output", name}, {"loc", l.id}, {"clock", json(l.clock)}});
    json buf = json::object();
    for (const auto& [k, v] : s.buffer) buf[k] = value_to_json(v);
    json heap = json::array();
    for (const auto& [id, cell] : s.store.later)
        heap.push_back(json{{"loc", id}, {"clock", json(cell.loc.clock)}, {"term", to_string(cell.term)}});
    return json{{"outputs", outs}, {"buffer", buf}, {"heap", heap}};
}

}  // namespace asyncratt
