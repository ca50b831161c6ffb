#pragma once

// Fixed-step Euler simulation in double precision. Shares no code with the
// semantics and evolution modules; used as a test oracle.

#include <cstddef>
#include <vector>

#include "hpn/net.hpp"
#include "hpn/rational.hpp"

namespace hpn::oracle {

struct Sample {
    double time = 0;
    std::vector<double> marking;
};

/// Steps m += B*dt from m0 up to `horizon`, recording every `sample_every`
/// time units (rounded to whole steps). Outflow of a place per step is capped
/// by its stock and split by the place's conflict policy.
[[nodiscard]] std::vector<Sample> euler_simulate(const HybridNet& net, const Rational& dt, const Rational& horizon,
                                                 const Rational& sample_every);

}  // namespace hpn::oracle
