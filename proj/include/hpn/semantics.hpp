#pragma once

// Instantaneous semantics of timed hybrid Petri nets: enabling degrees,
// maximal firing speeds, enabling classification, flow balances, conflict
// resolution and the speed-vector fixed point.

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hpn/net.hpp"
#include "hpn/rational.hpp"

namespace hpn::semantics {

/// Label of a continuous place in the marking used for speed computation.
enum class ContinuousLabel { Zero, ZeroPlus, Positive };

struct ExtendedMarking {
    /// Stored marking (discrete and continuous values).
    Marking marking;
    /// One label per place; discrete places are always Positive or Zero by value.
    std::vector<ContinuousLabel> labels;

    friend bool operator==(const ExtendedMarking&, const ExtendedMarking&) = default;
};

enum class Enabling { NotEnabled, WeaklyEnabled, StronglyEnabled };

/// Instantaneous firing speed per transition index; discrete entries are 0.
struct SpeedVector {
    std::vector<Rational> values;

    [[nodiscard]] const Rational& operator[](std::size_t t) const { return values[t]; }
    [[nodiscard]] std::size_t size() const noexcept { return values.size(); }

    friend bool operator==(const SpeedVector&, const SpeedVector&) = default;
};

/// Enabling degree: min over input places of m(P)/Pre(P,t).
/// Unbounded (infinite) for a transition with no input places.
[[nodiscard]] ExtRational enabling_degree(const HybridNet& net, const Marking& m, std::size_t t);

/// Enabling degree restricted to discrete input places; unbounded when there
/// are none. Throws ContractViolation for a discrete transition.
[[nodiscard]] ExtRational d_enabling_degree(const HybridNet& net, const Marking& m, std::size_t t);

/// V_j = D(T_j, m) * U_j with inf*0 = 0.
[[nodiscard]] ExtRational max_firing_speed(const HybridNet& net, const Marking& m, std::size_t t);

/// Classification of a continuous transition against an extended marking.
/// `feeding` holds the feeding speed of every place (used for immediate
/// transitions, whose empty inputs must be fed).
[[nodiscard]] Enabling classify_enabling(const HybridNet& net, const ExtendedMarking& em,
                                         std::span<const Rational> feeding, std::size_t t);

[[nodiscard]] Rational feeding_speed(const HybridNet& net, const SpeedVector& v, std::size_t p);
[[nodiscard]] Rational draining_speed(const HybridNet& net, const SpeedVector& v, std::size_t p);
[[nodiscard]] Rational balance(const HybridNet& net, const SpeedVector& v, std::size_t p);

/// Discrete transitions enabled at m under the ordinary rule m(P) >= Pre(P,t).
[[nodiscard]] std::vector<bool> discrete_enabled(const HybridNet& net, const Marking& m);

/// Continuous marking left for continuous transitions once every enabled
/// discrete output transition has reserved its Pre weight (discrete
/// transitions are served first). Equals m for places without discrete outputs.
[[nodiscard]] std::vector<Rational> residual_marking(const HybridNet& net, const Marking& m);

/// Demand of one conflict member, in speed units, and its Pre weight on the
/// shared place.
struct Demand {
    std::string transition;
    Rational speed;
    Rational weight{1};
};

using Allocation = std::map<std::string, Rational>;

/// Splits `supply` (flow units of the shared place) among the demands.
/// Priority: greedy in group order. Sharing: proportional to weights, each
/// member capped at its demand, the remainder redistributed among uncapped
/// members until nothing is left or everyone is satisfied. Members absent from
/// the policy are served after all groups in the order given. Never allocates
/// more than a member's demand; total Pre-weighted outflow never exceeds supply.
[[nodiscard]] Allocation resolve_conflict(const ConflictPolicy& policy, const Rational& supply,
                                          std::span<const Demand> demands);

/// Places with m = 0 in structural conflict whose feeding speed is strictly
/// below the Pre-weighted sum of the conflict-free demands of their outputs.
[[nodiscard]] std::vector<std::size_t> effective_conflicts(const HybridNet& net, const Marking& m,
                                                           const SpeedVector& conflict_free);

struct SpeedOptions {
    /// 0 means the default 10 * |T|.
    std::size_t max_iterations = 0;
};

struct SpeedSolution {
    SpeedVector speeds;
    ExtendedMarking extended;
    /// Maximal firing speed V_j per transition (0 for discrete ones).
    std::vector<ExtRational> max_speeds;
    std::vector<std::size_t> effective_conflicts;
    std::size_t iterations = 0;
};

/// Speed-vector fixed point for marking m using the net's flow rates and the
/// given policies (normally net.policies()). Throws UnresolvedConflict when an
/// effective conflict has no policy and NonConvergence when the iteration
/// limit is hit or an immediate transition has only marked inputs.
[[nodiscard]] SpeedSolution compute_speed_vector(const HybridNet& net, const Marking& m,
                                                 std::span<const ConflictPolicy> policies,
                                                 const SpeedOptions& options = {});

[[nodiscard]] inline SpeedSolution compute_speed_vector(const HybridNet& net, const Marking& m) {
    return compute_speed_vector(net, m, net.policies());
}

}  // namespace hpn::semantics
