#pragma once

// Scenario layer: parameterizing a net, running it against a deadline, and
// searching priority configurations.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hpn/evolution.hpp"
#include "hpn/net.hpp"
#include "hpn/rational.hpp"

namespace hpn::dss {

/// Availability flips to `available` at time `at`.
struct ToggleStep {
    Rational at;
    bool available = true;

    friend bool operator==(const ToggleStep&, const ToggleStep&) = default;
};

struct AvailabilitySetting {
    /// Discrete place holding one token while the connection is up.
    std::string place;
    bool available = true;
    /// Later toggles, strictly increasing in time.
    std::vector<ToggleStep> schedule;

    friend bool operator==(const AvailabilitySetting&, const AvailabilitySetting&) = default;
};

/// Rate in force from `from` until the next piece starts.
struct ProfilePiece {
    Rational from;
    ExtRational rate;

    friend bool operator==(const ProfilePiece&, const ProfilePiece&) = default;
};

struct RandomProfile {
    Rational low;
    Rational high;
    Rational interval;
    std::size_t intervals = 1;
    std::uint64_t seed = 0;

    friend bool operator==(const RandomProfile&, const RandomProfile&) = default;
};

enum class ProfileKind { Constant, Piecewise, Random };

struct SpeedProfile {
    std::string transition;
    ProfileKind kind = ProfileKind::Constant;
    ExtRational rate;
    std::vector<ProfilePiece> pieces;
    RandomProfile random;

    /// Pieces in force: one piece for Constant, sampled ones for Random.
    [[nodiscard]] std::vector<ProfilePiece> resolved() const;

    friend bool operator==(const SpeedProfile&, const SpeedProfile&) = default;
};

struct Scenario {
    std::string name;
    /// Model id or file the scenario was written for; informational.
    std::string net;
    std::vector<AvailabilitySetting> availability;
    std::vector<SpeedProfile> speeds;
    /// Replace the net's policies place by place.
    std::vector<ConflictPolicy> policies;
    Rational message_size;
    std::optional<Rational> deadline;
    std::string source;
    std::string destination;
    std::optional<Rational> horizon;

    friend bool operator==(const Scenario&, const Scenario&) = default;
};

/// Checks ids, kinds and ranges; throws ContractViolation or NotFound.
void check_scenario(const HybridNet& net, const Scenario& scenario);

/// Net with the scenario's marking, rates and policies substituted. Toggle
/// schedules and non-constant profiles become chains of timed discrete
/// transitions (ids prefixed "sched.") whose firings flip availability or
/// set rates. The input net is not modified.
[[nodiscard]] HybridNet apply_scenario(const HybridNet& net, const Scenario& scenario);

struct ScenarioResult {
    std::string label;
    Scenario scenario;
    bool feasible = false;
    std::optional<Rational> completion_time;
    evolution::EvolutionGraph graph;
    /// Continuous places other than source and destination with a positive
    /// balance in some phase, in place order.
    std::vector<std::string> accumulating_places;
    /// Availability places unmarked at time 0.
    std::vector<std::string> unavailable_connections;

    friend bool operator==(const ScenarioResult&, const ScenarioResult&) = default;
};

/// Evolves apply_scenario(net, scenario) until the destination holds the
/// message. Feasible when a deadline is set and met, or when no deadline is
/// set and the message arrives.
[[nodiscard]] ScenarioResult run_scenario(const HybridNet& net, const Scenario& scenario,
                                          const std::string& label = {});

/// Priority order per continuous conflict place: high-priority jobs first,
/// transfers by descending flow rate (ties keep the current policy order,
/// then net order), other transitions, then drains.
[[nodiscard]] std::vector<ConflictPolicy> initial_priority_assignment(const HybridNet& net,
                                                                      const Scenario& scenario);

/// Moves each transfer transition feeding an accumulating place one step
/// below the next transfer in every priority list containing it. Empty when
/// there is nothing to demote.
[[nodiscard]] std::optional<std::vector<ConflictPolicy>> refine_on_accumulation(
    const HybridNet& net, const ScenarioResult& result, const std::vector<ConflictPolicy>& assignment);

enum class SearchMode { Heuristic, Exhaustive };

struct Attempt {
    std::string label;
    std::vector<ConflictPolicy> policies;
    std::optional<Rational> completion_time;
    bool feasible = false;
    std::size_t phases = 0;
    std::vector<std::string> accumulating_places;

    friend bool operator==(const Attempt&, const Attempt&) = default;
};

struct SearchOptions {
    std::size_t exhaustive_cap = 100000;
};

struct SearchResult {
    SearchMode mode = SearchMode::Heuristic;
    std::vector<Attempt> trace;
    bool feasible = false;
    /// Index into trace of the first feasible attempt, or of the best one.
    std::size_t selected = 0;
    /// Run of the selected attempt.
    ScenarioResult result;
    std::vector<std::string> warnings;
};

/// Requires a deadline. Never throws for infeasibility: an infeasible search
/// returns feasible = false with the best attempt selected.
[[nodiscard]] SearchResult search_first_feasible(const HybridNet& net, const Scenario& scenario, SearchMode mode,
                                                 const SearchOptions& options = {});

/// Number of configurations the exhaustive mode would enumerate.
[[nodiscard]] std::size_t exhaustive_size(const HybridNet& net, const Scenario& scenario);

struct Bounds {
    Rational low;
    Rational high;
};

/// `intervals` pieces of length `interval` starting at 0, values uniform in
/// [low, high] on the 1/100 grid. Deterministic for a seed.
[[nodiscard]] std::vector<ProfilePiece> sample_speed_profile(const Bounds& bounds, std::size_t intervals,
                                                             const Rational& interval, std::uint64_t seed);

struct HistoryEntry {
    std::string id;
    std::string timestamp;
    std::string label;
    ScenarioResult result;

    friend bool operator==(const HistoryEntry&, const HistoryEntry&) = default;
};

struct RunHistory {
    std::vector<HistoryEntry> entries;
};

struct ComparisonRow {
    std::string id;
    std::string label;
    bool feasible = false;
    std::optional<Rational> completion_time;
    std::size_t phases = 0;
    std::vector<std::string> accumulating_places;
};

/// Rows for the given ids sorted by completion time (unfinished runs last).
/// Throws NotFound for an unknown id.
[[nodiscard]] std::vector<ComparisonRow> compare_runs(const RunHistory& history, const std::vector<std::string>& ids);

[[nodiscard]] std::string comparison_csv(const std::vector<ComparisonRow>& rows);

}  // namespace hpn::dss
