#include "hpn/evolution.hpp"

#include <algorithm>
#include <limits>

#include "hpn/errors.hpp"

namespace hpn::evolution {

namespace {

int kind_rank(EventKind k) {
    switch (k) {
        case EventKind::D1: return 0;
        case EventKind::C1: return 1;
        case EventKind::D2: return 2;
        case EventKind::C2: return 3;
    }
    return 4;
}

struct Candidate {
    Rational rel;
    EventKind kind;
    std::size_t index;
};

bool enabled(const HybridNet& net, const Marking& m, std::size_t t) {
    for (const auto& in : net.inputs(t))
        if (m[in.node] < in.weight) return false;
    return true;
}

std::int64_t discrete_degree(const HybridNet& net, const Marking& m, std::size_t t) {
    if (net.inputs(t).empty()) return -1;
    std::int64_t best = std::numeric_limits<std::int64_t>::max();
    for (const auto& in : net.inputs(t)) best = std::min(best, (m[in.node] / in.weight).floor());
    return best;
}

// Time until the enabling degree of a discrete transition with continuous
// inputs changes under the phase laws.
std::optional<Rational> degree_change(const HybridNet& net, const Phase& ph, std::size_t t) {
    const auto& ins = net.inputs(t);
    bool any_continuous = false;
    for (const auto& in : ins) any_continuous = any_continuous || net.is_continuous_place(in.node);
    if (!any_continuous) return std::nullopt;

    // Degree just after the phase start.
    std::int64_t r = std::numeric_limits<std::int64_t>::max();
    for (const auto& in : ins) {
        Rational q = ph.marking[in.node] / in.weight;
        std::int64_t level = q.floor();
        if (q.is_integer() && q.is_positive() && ph.balances[in.node].is_negative()) --level;
        r = std::min(r, level);
    }
    r = std::max<std::int64_t>(r, 0);

    std::optional<Rational> best;
    auto offer = [&](const Rational& x) {
        if (x.is_positive() && (!best || x < *best)) best = x;
    };

    if (r > 0) {
        for (const auto& in : ins) {
            const auto& b = ph.balances[in.node];
            if (b.is_negative()) offer((ph.marking[in.node] - Rational(r) * in.weight) / -b);
        }
    }

    Rational reach;
    std::optional<Rational> deadline;
    bool possible = true;
    for (const auto& in : ins) {
        const auto& m = ph.marking[in.node];
        const auto& b = ph.balances[in.node];
        Rational level = Rational(r + 1) * in.weight;
        if (m >= level) {
            if (b.is_negative()) {
                Rational d = (m - level) / -b;
                deadline = deadline ? min(*deadline, d) : d;
            }
        } else if (b.is_positive()) {
            reach = max(reach, (level - m) / b);
        } else {
            possible = false;
        }
    }
    if (possible && (!deadline || reach < *deadline)) offer(reach);
    return best;
}

template <class E>
[[noreturn]] void rethrow_at(const E& e, std::size_t phase) {
    throw E("phase " + std::to_string(phase) + ": " + e.what(), e.subject());
}

}  // namespace

std::string_view to_string(EventKind kind) noexcept {
    switch (kind) {
        case EventKind::C1: return "C1";
        case EventKind::C2: return "C2";
        case EventKind::D1: return "D1";
        case EventKind::D2: return "D2";
    }
    return "?";
}

std::string_view to_string(Status status) noexcept {
    switch (status) {
        case Status::HorizonReached: return "HorizonReached";
        case Status::Deadlock: return "Deadlock";
        case Status::TargetReached: return "TargetReached";
        case Status::Error: return "Error";
    }
    return "?";
}

Rational Phase::marking_at(std::size_t p, const Rational& t) const {
    return marking[p] + balances[p] * (t - start);
}

Marking Phase::marking_at(const Rational& t) const {
    Marking m = marking;
    for (std::size_t p = 0; p < m.size(); ++p)
        if (!balances[p].is_zero()) m[p] = marking_at(p, t);
    return m;
}

EngineState initial_state(const HybridNet& net) {
    EngineState s;
    s.marking = net.initial_marking();
    s.clocks.remaining.assign(net.transition_count(), std::nullopt);
    for (std::size_t t = 0; t < net.transition_count(); ++t)
        if (net.transition(t).is_discrete() && enabled(net, s.marking, t))
            s.clocks.remaining[t] = net.transition(t).timing;
    return s;
}

Phase compute_phase(const HybridNet& net, const EngineState& state, std::span<const ConflictPolicy> policies) {
    auto sol = semantics::compute_speed_vector(net, state.marking, policies);
    Phase ph;
    ph.start = state.time;
    ph.marking = state.marking;
    ph.discrete_degrees.assign(net.transition_count(), 0);
    for (std::size_t t = 0; t < net.transition_count(); ++t)
        if (net.transition(t).is_discrete()) ph.discrete_degrees[t] = discrete_degree(net, state.marking, t);
    ph.balances.assign(net.place_count(), Rational(0));
    for (std::size_t p = 0; p < net.place_count(); ++p)
        if (net.is_continuous_place(p)) ph.balances[p] = semantics::balance(net, sol.speeds, p);
    ph.speeds = std::move(sol.speeds);
    ph.max_speeds = std::move(sol.max_speeds);
    ph.labels = std::move(sol.extended.labels);
    ph.effective_conflicts = std::move(sol.effective_conflicts);
    return ph;
}

std::optional<Boundary> next_event(const HybridNet& net, const Phase& phase, const DiscreteClockState& clocks) {
    std::vector<Candidate> cands;
    auto residual = semantics::residual_marking(net, phase.marking);
    for (std::size_t p = 0; p < net.place_count(); ++p) {
        if (!net.is_continuous_place(p) || !phase.balances[p].is_negative()) continue;
        if (residual[p].is_positive()) cands.push_back({residual[p] / -phase.balances[p], EventKind::C1, p});
    }
    for (std::size_t t = 0; t < net.transition_count(); ++t) {
        if (!net.transition(t).is_discrete()) continue;
        if (t < clocks.remaining.size() && clocks.remaining[t] && clocks.remaining[t]->is_finite())
            cands.push_back({clocks.remaining[t]->value(), EventKind::D1, t});
        if (auto d = degree_change(net, phase, t)) cands.push_back({*d, EventKind::D2, t});
    }
    if (cands.empty()) return std::nullopt;
    Rational first = cands.front().rel;
    for (const auto& c : cands) first = min(first, c.rel);
    std::vector<Candidate> now;
    for (const auto& c : cands)
        if (c.rel == first) now.push_back(c);
    std::sort(now.begin(), now.end(), [](const Candidate& a, const Candidate& b) {
        if (kind_rank(a.kind) != kind_rank(b.kind)) return kind_rank(a.kind) < kind_rank(b.kind);
        return a.index < b.index;
    });
    Boundary b;
    b.time = phase.start + first;
    for (const auto& c : now) {
        const std::string& subject =
            c.kind == EventKind::C1 ? net.place(c.index).id : net.transition(c.index).id;
        b.events.push_back(Event{b.time, c.kind, subject});
    }
    return b;
}

Marking fire_discrete(const HybridNet& net, const Marking& m, std::size_t t) {
    if (t >= net.transition_count()) throw NotFound("unknown transition index " + std::to_string(t));
    if (!net.transition(t).is_discrete())
        throw ContractViolation("cannot fire a continuous transition as a discrete event", net.transition(t).id);
    if (!enabled(net, m, t)) throw ContractViolation("transition is not enabled", net.transition(t).id);
    Marking out = m;
    for (const auto& in : net.inputs(t)) out[in.node] -= in.weight;
    for (const auto& o : net.outputs(t)) out[o.node] += o.weight;
    return out;
}

EvolutionGraph evolve(const HybridNet& base, const EvolveOptions& options) {
    {
        auto report = validate(base);
        std::erase_if(report.violations, [](const Violation& v) { return v.code == "missing-conflict-policy"; });
        if (!report.ok()) throw ValidationError("invalid net: " + report.summary(), report.violations.front().subject);
    }
    std::optional<std::size_t> dest;
    if (options.target) dest = base.place_index(options.target->place);

    HybridNet net = base;
    EngineState st = initial_state(net);
    EvolutionGraph g;

    // Arms newly enabled clocks, clears disabled ones, then fires every
    // expired clock. Returns false when zero-delay firings do not settle.
    auto settle = [&](std::vector<Event>& fired) {
        for (std::size_t round = 0;; ++round) {
            for (std::size_t t = 0; t < net.transition_count(); ++t) {
                if (!net.transition(t).is_discrete()) continue;
                if (!enabled(net, st.marking, t)) st.clocks.remaining[t].reset();
                else if (!st.clocks.remaining[t]) st.clocks.remaining[t] = net.transition(t).timing;
            }
            std::vector<std::size_t> due;
            for (std::size_t t = 0; t < net.transition_count(); ++t)
                if (st.clocks.remaining[t] && st.clocks.remaining[t]->is_zero()) due.push_back(t);
            if (due.empty()) return true;
            if (round >= options.instant_firing_cap) return false;
            for (auto t : due) {
                if (!enabled(net, st.marking, t)) {
                    st.clocks.remaining[t].reset();
                    continue;
                }
                st.marking = fire_discrete(net, st.marking, t);
                st.clocks.remaining[t].reset();
                fired.push_back(Event{st.time, EventKind::D1, net.transition(t).id});
                for (const auto& effect : net.transition(t).on_fire)
                    net = net.with_timing(net.transition_index(effect.transition), effect.rate);
            }
        }
    };

    auto fail = [&](std::string detail) {
        g.status = Status::Error;
        g.detail = std::move(detail);
    };

    std::vector<Event> fired;
    if (!settle(fired)) fail("zero-delay discrete firings did not settle at t=" + st.time.str());
    g.events = fired;

    while (g.status != Status::Error) {
        if (dest && st.marking[*dest] >= options.target->amount) {
            g.status = Status::TargetReached;
            g.completion_time = st.time;
            break;
        }
        if (st.time >= options.horizon) {
            g.status = Status::HorizonReached;
            break;
        }
        if (g.phases.size() >= options.phase_cap) {
            fail("phase cap of " + std::to_string(options.phase_cap) + " reached");
            break;
        }
        const std::size_t k = g.phases.size();
        Phase ph;
        try {
            ph = compute_phase(net, st, net.policies());
        } catch (const UnresolvedConflict& e) {
            rethrow_at(e, k);
        } catch (const NonConvergence& e) {
            rethrow_at(e, k);
        } catch (const ContractViolation& e) {
            rethrow_at(e, k);
        }
        for (std::size_t p = 0; p < net.place_count(); ++p)
            if (net.is_continuous_place(p) && ph.labels[p] != semantics::ContinuousLabel::Positive &&
                ph.balances[p].is_positive())
                g.events.push_back(Event{st.time, EventKind::C2, net.place(p).id});

        auto boundary = next_event(net, ph, st.clocks);
        std::optional<Rational> reach;
        if (dest && ph.balances[*dest].is_positive())
            reach = ph.start + (options.target->amount - st.marking[*dest]) / ph.balances[*dest];

        if (reach && *reach <= options.horizon && (!boundary || *reach <= boundary->time)) {
            ph.duration = *reach - ph.start;
            st.marking = ph.marking_at(*reach);
            st.time = *reach;
            g.phases.push_back(std::move(ph));
            g.status = Status::TargetReached;
            g.completion_time = st.time;
            break;
        }
        if (!boundary) {
            bool frozen = std::all_of(ph.speeds.values.begin(), ph.speeds.values.end(),
                                      [](const Rational& v) { return v.is_zero(); });
            if (frozen) {
                g.phases.push_back(std::move(ph));
                g.status = Status::Deadlock;
                break;
            }
        }
        if (!boundary || boundary->time > options.horizon) {
            ph.duration = options.horizon - ph.start;
            st.marking = ph.marking_at(options.horizon);
            st.time = options.horizon;
            g.phases.push_back(std::move(ph));
            g.status = Status::HorizonReached;
            break;
        }

        const Rational elapsed = boundary->time - ph.start;
        ph.duration = elapsed;
        st.marking = ph.marking_at(boundary->time);
        st.time = boundary->time;
        for (auto& c : st.clocks.remaining)
            if (c && c->is_finite()) c = ExtRational(c->value() - elapsed);
        g.phases.push_back(std::move(ph));

        fired.clear();
        if (!settle(fired)) fail("zero-delay discrete firings did not settle at t=" + st.time.str());
        g.events.insert(g.events.end(), fired.begin(), fired.end());
        for (const auto& e : boundary->events)
            if (e.kind != EventKind::D1) g.events.push_back(e);
    }
    g.end_time = st.time;
    g.final_marking = st.marking;
    return g;
}

Marking marking_at(const EvolutionGraph& graph, const Rational& t) {
    if (graph.phases.empty()) return graph.final_marking;
    std::size_t k = 0;
    while (k + 1 < graph.phases.size() && graph.phases[k + 1].start <= t) ++k;
    const auto& ph = graph.phases[k];
    if (ph.duration && t >= ph.start + *ph.duration) {
        if (k + 1 == graph.phases.size()) return graph.final_marking;
        return ph.marking_at(ph.start + *ph.duration);
    }
    return ph.marking_at(t);
}

std::vector<std::pair<Rational, Marking>> sample(const EvolutionGraph& graph, const Rational& dt) {
    if (!dt.is_positive()) throw ContractViolation("sample step must be positive");
    std::vector<std::pair<Rational, Marking>> out;
    for (Rational t; t <= graph.end_time; t += dt) out.emplace_back(t, marking_at(graph, t));
    return out;
}

}  // namespace hpn::evolution
