#pragma once

// JSON documents for scenarios, evolution graphs, runs and searches. Every
// rational field X is a "p/q" string and is followed by XDecimal, a number
// rounded to 10 significant digits for display.

#include <string>
#include <string_view>

#include "hpn/dss.hpp"
#include "hpn/evolution.hpp"
#include "hpn/json_io.hpp"

namespace hpn::formats {

using json = json_io::json;

[[nodiscard]] json scenario_to_json(const dss::Scenario& s);
[[nodiscard]] dss::Scenario scenario_from_json(const json& j);
[[nodiscard]] dss::Scenario load_scenario(std::string_view bytes);
[[nodiscard]] std::string save_scenario(const dss::Scenario& s);

/// Self-describing: carries the place and transition ids its vectors refer to.
[[nodiscard]] json graph_to_json(const HybridNet& net, const evolution::EvolutionGraph& g);
[[nodiscard]] evolution::EvolutionGraph graph_from_json(const json& j);

/// Graph JSON for the applied scenario net, as produced by run_scenario.
[[nodiscard]] json result_to_json(const HybridNet& net, const dss::ScenarioResult& r);
[[nodiscard]] dss::ScenarioResult result_from_json(const json& j);

[[nodiscard]] json search_to_json(const HybridNet& net, const dss::SearchResult& r);

[[nodiscard]] json history_entry_to_json(const HybridNet& net, const dss::HistoryEntry& e);
[[nodiscard]] json history_entry_to_json(const dss::HistoryEntry& e, const json& result);
[[nodiscard]] dss::HistoryEntry history_entry_from_json(const json& j);

[[nodiscard]] json comparison_to_json(const std::vector<dss::ComparisonRow>& rows);

/// Sampled trajectory as CSV: time, time_decimal, then one column per place.
[[nodiscard]] std::string trajectory_csv(const HybridNet& net, const evolution::EvolutionGraph& g,
                                         const Rational& dt);

/// Two-space indented rendering with a trailing newline, used for every
/// document the CLI prints and the HTTP server returns.
[[nodiscard]] std::string dump(const json& j);

}  // namespace hpn::formats
