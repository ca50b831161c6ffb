#pragma once

// Timed evolution graph: phases of constant (m^D, e^D, v), the events that
// end them, and the loop that strings them together.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hpn/net.hpp"
#include "hpn/rational.hpp"
#include "hpn/semantics.hpp"

namespace hpn::evolution {

enum class EventKind { C1, C2, D1, D2 };

[[nodiscard]] std::string_view to_string(EventKind kind) noexcept;

struct Event {
    Rational time;
    EventKind kind = EventKind::C1;
    /// Place id for C1/C2, transition id for D1/D2.
    std::string subject;

    friend bool operator==(const Event&, const Event&) = default;
};

/// Remaining time per discrete transition; empty while the transition is
/// disabled. Infinite for d_j = inf.
struct DiscreteClockState {
    std::vector<std::optional<ExtRational>> remaining;

    friend bool operator==(const DiscreteClockState&, const DiscreteClockState&) = default;
};

struct EngineState {
    Rational time;
    Marking marking;
    DiscreteClockState clocks;
};

struct Phase {
    Rational start;
    /// Empty for an open-ended final phase.
    std::optional<Rational> duration;
    /// Marking at the start of the phase.
    Marking marking;
    /// Discrete enabling degree per transition: 0 for continuous ones, -1 when
    /// unbounded (no input places).
    std::vector<std::int64_t> discrete_degrees;
    semantics::SpeedVector speeds;
    /// Balance B_i per place (0 for discrete places).
    std::vector<Rational> balances;
    std::vector<ExtRational> max_speeds;
    std::vector<semantics::ContinuousLabel> labels;
    std::vector<std::size_t> effective_conflicts;

    /// m_i(start) + B_i * (t - start).
    [[nodiscard]] Rational marking_at(std::size_t p, const Rational& t) const;
    [[nodiscard]] Marking marking_at(const Rational& t) const;

    friend bool operator==(const Phase&, const Phase&) = default;
};

enum class Status { HorizonReached, Deadlock, TargetReached, Error };

[[nodiscard]] std::string_view to_string(Status status) noexcept;

struct EvolutionGraph {
    std::vector<Phase> phases;
    /// Every event in time order; simultaneous events ordered D1, C1, D2, then
    /// by subject position, with C2 entries after them.
    std::vector<Event> events;
    Status status = Status::HorizonReached;
    std::string detail;
    Rational end_time;
    Marking final_marking;
    /// Time the target predicate first held, when one was given.
    std::optional<Rational> completion_time;

    friend bool operator==(const EvolutionGraph&, const EvolutionGraph&) = default;
};

/// Destination place must hold at least `amount`.
struct Target {
    std::string place;
    Rational amount;
};

struct EvolveOptions {
    Rational horizon{1000000};
    std::size_t phase_cap = 10000;
    std::optional<Target> target;
    /// Zero-delay discrete firings allowed at a single instant.
    std::size_t instant_firing_cap = 1000;
};

/// Initial engine state: m0, clocks armed for the enabled discrete transitions.
[[nodiscard]] EngineState initial_state(const HybridNet& net);

/// Phase starting at state.time; duration left open.
[[nodiscard]] Phase compute_phase(const HybridNet& net, const EngineState& state,
                                  std::span<const ConflictPolicy> policies);

struct Boundary {
    Rational time;
    /// Predicted C1, D1 and D2 events at `time`, in boundary order.
    std::vector<Event> events;
};

/// Earliest C1/D1/D2 instant after the phase start, with every event that
/// coincides with it. Empty when nothing can happen.
[[nodiscard]] std::optional<Boundary> next_event(const HybridNet& net, const Phase& phase,
                                                 const DiscreteClockState& clocks);

/// Standard discrete firing; throws ContractViolation if t is not enabled.
[[nodiscard]] Marking fire_discrete(const HybridNet& net, const Marking& m, std::size_t t);

/// Builds the evolution graph from m0 until the horizon, a deadlock, the
/// target or the phase cap. Solver errors propagate with the phase index in
/// the message.
[[nodiscard]] EvolutionGraph evolve(const HybridNet& net, const EvolveOptions& options = {});

/// Markings at start, start + dt, ... up to the graph's end time.
[[nodiscard]] std::vector<std::pair<Rational, Marking>> sample(const EvolutionGraph& graph, const Rational& dt);

/// Marking at time t (within [0, end_time]).
[[nodiscard]] Marking marking_at(const EvolutionGraph& graph, const Rational& t);

}  // namespace hpn::evolution
