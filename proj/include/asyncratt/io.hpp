#pragma once

// JSON encodings of values, events, output batches and machine states.
//
// Values: unit = null, Nat = integer, Float = number, pair = [a, b],
// injection = {"in": 1|2, "val": v}.
// Events: {"ch": name, "val": value}, one per line.

#include <istream>
#include <string>
#include <vector>

#include <json.hpp>

#include "asyncratt/reactive.hpp"

namespace asyncratt {

nlohmann::json value_to_json(const TermPtr& v);
/// Throws EventError when `j` does not encode a value of type `a`.
TermPtr value_from_json(const nlohmann::json& j, const TypePtr& a);

InputEvent event_from_json(const nlohmann::json& j, const InputContext& delta);
nlohmann::json event_to_json(const InputEvent& e);
/// One JSON object per non-blank line; lines starting with '#' are skipped.
/// Errors carry the 1-based line number.
std::vector<InputEvent> read_events(std::istream& in, const InputContext& delta);
/// A single JSON object mapping buffered channel names to initial values.
InputBuffer read_buffer(std::istream& in, const InputContext& delta);

/// One {"rule", "redex", "store"} record per rule application.
class RuleLogger : public EvalObserver {
public:
    explicit RuleLogger(std::ostream& out) : out_(out) {}
    void on_rule(std::string_view rule, const TermPtr& redex, const Store& store) override;

private:
    std::ostream& out_;
};

/// {"step": n, "outputs": [[name, value], ...]}
nlohmann::json batch_to_json(std::size_t step, const OutputBatch& batch);
/// Output map, buffer and heap of a running machine.
nlohmann::json state_to_json(const Running& s);

}  // namespace asyncratt
