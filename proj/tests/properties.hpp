#pragma once

// Randomised invariant checks shared by the property suite and the
// acceptance binary. Every check returns an empty string on success and a
// description of the first violation otherwise.

#include <cstdint>
#include <random>
#include <string>

#include "hpn/evolution.hpp"
#include "hpn/net.hpp"

namespace hpn::props {

struct NetShape {
    /// Adds a timed discrete transition whose firing rewrites a flow rate.
    bool with_discrete = true;
};

/// Acyclic net with at most 6 places and 8 transitions, a policy on every
/// shared place, and discrete delays on a 1/10 grid.
[[nodiscard]] HybridNet random_net(std::mt19937& rng, const NetShape& shape = {});

inline constexpr std::int64_t kHorizon = 6;

[[nodiscard]] evolution::EvolutionGraph run(const HybridNet& net, const Rational& horizon = Rational(kHorizon));

/// 0 <= v <= V for every continuous transition in every phase.
[[nodiscard]] std::string check_speed_caps(const HybridNet& net, const evolution::EvolutionGraph& g);
/// Empty continuous places never have a negative balance, and no marking
/// goes negative within a phase.
[[nodiscard]] std::string check_balances(const HybridNet& net, const evolution::EvolutionGraph& g);
/// Random supplies and demands against priority, sharing and grouped
/// policies: caps, dominance of earlier groups, totality and fair shares.
[[nodiscard]] std::string check_allocation(std::mt19937& rng);
/// Rates times k and delays over k give the same events at times over k.
[[nodiscard]] std::string check_rescaling(const HybridNet& net, std::int64_t k);
inline constexpr double kEulerConstant = 10;

/// Forward Euler at dt = 1/10, 1/20, 1/40 stays within kEulerConstant * dt of
/// the exact trajectory at every half time unit. `errors` receives the three
/// maximum deviations so callers can check the aggregate shrinkage.
[[nodiscard]] std::string check_euler(const HybridNet& net, double errors[3]);
/// Two runs, and a run on the reloaded file, give equal graphs.
[[nodiscard]] std::string check_determinism(const HybridNet& net);

}  // namespace hpn::props
