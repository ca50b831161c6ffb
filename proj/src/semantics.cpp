#include "hpn/semantics.hpp"

#include <algorithm>
#include <set>
#include <unordered_map>

#include "hpn/errors.hpp"

namespace hpn::semantics {

namespace {

struct Member {
    std::size_t slot;
    Rational weight;
};

using Groups = std::vector<std::vector<Member>>;

struct Need {
    Rational speed;
    Rational pre;
};

// Allocates supply among needs[slot]; groups reference slots. Slots missing
// from every group are appended as trailing singletons in slot order.
std::vector<Rational> allocate(Groups groups, const Rational& supply, const std::vector<Need>& needs) {
    std::vector<bool> seen(needs.size(), false);
    for (const auto& g : groups)
        for (const auto& m : g) seen[m.slot] = true;
    for (std::size_t s = 0; s < needs.size(); ++s)
        if (!seen[s]) groups.push_back({Member{s, Rational(1)}});

    std::vector<Rational> out(needs.size());
    Rational remaining = supply;
    for (const auto& group : groups) {
        if (!remaining.is_positive()) break;
        if (group.size() == 1) {
            const auto& n = needs[group[0].slot];
            Rational a = min(n.speed, remaining / n.pre);
            out[group[0].slot] = a;
            remaining -= a * n.pre;
            continue;
        }
        Rational total;
        for (const auto& m : group) total += needs[m.slot].speed * needs[m.slot].pre;
        if (total <= remaining) {
            for (const auto& m : group) out[m.slot] = needs[m.slot].speed;
            remaining -= total;
            continue;
        }
        std::vector<Member> active;
        for (const auto& m : group)
            if (needs[m.slot].speed.is_positive()) active.push_back(m);
        while (!active.empty() && remaining.is_positive()) {
            Rational denom;
            for (const auto& m : active) denom += needs[m.slot].pre * m.weight;
            Rational lambda = remaining / denom;
            std::vector<Member> next;
            bool capped = false;
            for (const auto& m : active) {
                const auto& n = needs[m.slot];
                if (n.speed <= lambda * m.weight) {
                    out[m.slot] = n.speed;
                    remaining -= n.speed * n.pre;
                    capped = true;
                } else {
                    next.push_back(m);
                }
            }
            if (!capped) {
                for (const auto& m : active) out[m.slot] = lambda * m.weight;
                remaining = Rational(0);
                break;
            }
            active = std::move(next);
        }
    }
    return out;
}

// Policy groups translated to slots of the given transition list.
Groups compile(const ConflictPolicy& policy, const std::vector<std::size_t>& slot_transition,
               const HybridNet& net) {
    Groups groups;
    for (const auto& g : policy.groups) {
        std::vector<Member> members;
        for (const auto& m : g) {
            auto t = net.find_transition(m.transition);
            if (!t) continue;
            for (std::size_t s = 0; s < slot_transition.size(); ++s)
                if (slot_transition[s] == *t) members.push_back(Member{s, m.weight});
        }
        if (!members.empty()) groups.push_back(std::move(members));
    }
    return groups;
}

ExtRational degree_over(const HybridNet& net, const Marking& m, std::size_t t, bool discrete_only) {
    ExtRational best = ExtRational::infinity();
    for (const auto& in : net.inputs(t)) {
        if (discrete_only && net.is_continuous_place(in.node)) continue;
        best = min(best, ExtRational(m[in.node] / in.weight));
    }
    return best;
}

void require_continuous(const HybridNet& net, std::size_t t) {
    if (t >= net.transition_count()) throw NotFound("unknown transition index " + std::to_string(t));
    if (net.transition(t).is_discrete())
        throw ContractViolation("transition is discrete", net.transition(t).id);
}

}  // namespace

ExtRational enabling_degree(const HybridNet& net, const Marking& m, std::size_t t) {
    if (t >= net.transition_count()) throw NotFound("unknown transition index " + std::to_string(t));
    return degree_over(net, m, t, false);
}

ExtRational d_enabling_degree(const HybridNet& net, const Marking& m, std::size_t t) {
    require_continuous(net, t);
    return degree_over(net, m, t, true);
}

ExtRational max_firing_speed(const HybridNet& net, const Marking& m, std::size_t t) {
    auto d = d_enabling_degree(net, m, t);
    return d.is_infinite() ? net.transition(t).timing : d * net.transition(t).timing;
}

Enabling classify_enabling(const HybridNet& net, const ExtendedMarking& em, std::span<const Rational> feeding,
                           std::size_t t) {
    const auto& tr = net.transition(t);
    if (tr.is_discrete()) {
        for (const auto& in : net.inputs(t))
            if (em.marking[in.node] < in.weight) return Enabling::NotEnabled;
        return Enabling::StronglyEnabled;
    }
    if (!d_enabling_degree(net, em.marking, t).is_positive()) return Enabling::NotEnabled;
    bool all_positive = true;
    for (const auto& in : net.inputs(t)) {
        if (!net.is_continuous_place(in.node)) continue;
        auto label = em.labels[in.node];
        if (label == ContinuousLabel::Positive) continue;
        all_positive = false;
        if (tr.timing.is_infinite()) {
            if (in.node >= feeding.size() || !feeding[in.node].is_positive()) return Enabling::NotEnabled;
        } else if (label == ContinuousLabel::Zero) {
            return Enabling::NotEnabled;
        }
    }
    if (tr.timing.is_infinite()) return Enabling::WeaklyEnabled;
    return all_positive ? Enabling::StronglyEnabled : Enabling::WeaklyEnabled;
}

Rational feeding_speed(const HybridNet& net, const SpeedVector& v, std::size_t p) {
    Rational sum;
    for (const auto& l : net.producers(p)) sum += l.weight * v[l.node];
    return sum;
}

Rational draining_speed(const HybridNet& net, const SpeedVector& v, std::size_t p) {
    Rational sum;
    for (const auto& l : net.consumers(p)) sum += l.weight * v[l.node];
    return sum;
}

Rational balance(const HybridNet& net, const SpeedVector& v, std::size_t p) {
    return feeding_speed(net, v, p) - draining_speed(net, v, p);
}

std::vector<bool> discrete_enabled(const HybridNet& net, const Marking& m) {
    std::vector<bool> out(net.transition_count(), false);
    for (std::size_t t = 0; t < net.transition_count(); ++t) {
        if (!net.transition(t).is_discrete()) continue;
        bool ok = true;
        for (const auto& in : net.inputs(t))
            if (m[in.node] < in.weight) ok = false;
        out[t] = ok;
    }
    return out;
}

std::vector<Rational> residual_marking(const HybridNet& net, const Marking& m) {
    std::vector<Rational> out = m.values;
    auto enabled = discrete_enabled(net, m);
    for (std::size_t p = 0; p < net.place_count(); ++p) {
        if (!net.is_continuous_place(p)) continue;
        for (const auto& c : net.consumers(p))
            if (enabled[c.node]) out[p] -= c.weight;
        if (out[p].is_negative()) out[p] = Rational(0);
    }
    return out;
}

Allocation resolve_conflict(const ConflictPolicy& policy, const Rational& supply, std::span<const Demand> demands) {
    if (supply.is_negative()) throw ContractViolation("negative supply", policy.place);
    std::vector<Need> needs;
    std::unordered_map<std::string, std::size_t> slot;
    for (const auto& d : demands) {
        if (d.speed.is_negative()) throw ContractViolation("negative demand", d.transition);
        if (!d.weight.is_positive()) throw ContractViolation("non-positive arc weight", d.transition);
        if (!slot.emplace(d.transition, needs.size()).second)
            throw ContractViolation("duplicate demand", d.transition);
        needs.push_back(Need{d.speed, d.weight});
    }
    Groups groups;
    for (const auto& g : policy.groups) {
        std::vector<Member> members;
        for (const auto& m : g) {
            auto it = slot.find(m.transition);
            if (it != slot.end()) members.push_back(Member{it->second, m.weight});
        }
        if (!members.empty()) groups.push_back(std::move(members));
    }
    auto got = allocate(std::move(groups), supply, needs);
    Allocation out;
    for (std::size_t s = 0; s < demands.size(); ++s) out[demands[s].transition] = got[s];
    return out;
}

std::vector<std::size_t> effective_conflicts(const HybridNet& net, const Marking& m, const SpeedVector& conflict_free) {
    std::vector<std::size_t> out;
    for (std::size_t p = 0; p < net.place_count(); ++p) {
        if (!net.is_continuous_place(p) || !m[p].is_zero()) continue;
        std::size_t continuous = 0;
        Rational demand;
        for (const auto& c : net.consumers(p)) {
            if (!net.transition(c.node).is_continuous()) continue;
            ++continuous;
            demand += c.weight * conflict_free[c.node];
        }
        if (continuous < 2) continue;
        if (feeding_speed(net, conflict_free, p) < demand) out.push_back(p);
    }
    return out;
}

SpeedSolution compute_speed_vector(const HybridNet& net, const Marking& m, std::span<const ConflictPolicy> policies,
                                   const SpeedOptions& options) {
    const std::size_t np = net.place_count();
    const std::size_t nt = net.transition_count();
    if (m.size() != np) throw ContractViolation("marking size does not match the net");

    std::vector<const ConflictPolicy*> policy(np, nullptr);
    for (const auto& pol : policies) {
        auto p = net.find_place(pol.place);
        if (p && !policy[*p]) policy[*p] = &pol;
    }

    const auto residual = residual_marking(net, m);
    std::vector<bool> zero(np, false);
    for (std::size_t p = 0; p < np; ++p) zero[p] = net.is_continuous_place(p) && residual[p].is_zero();

    // D-enabling degrees; a discrete place with a policy splits its tokens.
    std::vector<ExtRational> degree(nt, ExtRational(0));
    for (std::size_t t = 0; t < nt; ++t)
        if (net.transition(t).is_continuous()) degree[t] = degree_over(net, m, t, true);
    for (std::size_t p = 0; p < np; ++p) {
        if (net.is_continuous_place(p) || !policy[p]) continue;
        std::vector<std::size_t> members;
        std::vector<Need> needs;
        for (const auto& c : net.consumers(p)) {
            if (!net.transition(c.node).is_continuous()) continue;
            ExtRational other = ExtRational::infinity();
            for (const auto& in : net.inputs(c.node))
                if (!net.is_continuous_place(in.node) && in.node != p)
                    other = min(other, ExtRational(m[in.node] / in.weight));
            Rational own = m[p] / c.weight;
            members.push_back(c.node);
            needs.push_back(Need{other.is_infinite() ? own : min(own, other.value()), c.weight});
        }
        if (members.size() < 2) continue;
        auto got = allocate(compile(*policy[p], members, net), m[p], needs);
        for (std::size_t s = 0; s < members.size(); ++s)
            degree[members[s]] = min(degree[members[s]], ExtRational(got[s]));
    }

    std::vector<ExtRational> vmax(nt, ExtRational(0));
    std::vector<std::vector<Link>> empty_inputs(nt);
    for (std::size_t t = 0; t < nt; ++t) {
        const auto& tr = net.transition(t);
        if (!tr.is_continuous()) continue;
        vmax[t] = degree[t].is_infinite() ? tr.timing : degree[t] * tr.timing;
        for (const auto& in : net.inputs(t))
            if (zero[in.node]) empty_inputs[t].push_back(in);
        if (vmax[t].is_infinite() && empty_inputs[t].empty())
            throw NonConvergence("immediate transition has no empty input place to bound its speed", tr.id);
    }

    // Places where continuous consumers have to share the inflow.
    std::vector<std::size_t> shared;
    std::vector<std::vector<std::size_t>> shared_members(np);
    for (std::size_t p = 0; p < np; ++p) {
        if (!zero[p]) continue;
        for (const auto& c : net.consumers(p))
            if (net.transition(c.node).is_continuous()) shared_members[p].push_back(c.node);
        if (shared_members[p].size() >= 2) shared.push_back(p);
    }
    std::vector<Groups> compiled(np);
    for (auto p : shared)
        if (policy[p]) compiled[p] = compile(*policy[p], shared_members[p], net);

    const std::size_t limit = options.max_iterations ? options.max_iterations : 10 * std::max<std::size_t>(nt, 1);
    SpeedVector v{std::vector<Rational>(nt)};
    std::vector<Rational> feed(np);
    std::set<std::size_t> conflicted;
    std::size_t iterations = 0;
    bool converged = false;

    auto share = [&](std::size_t p, const std::vector<Rational>& demand, bool record) {
        const auto& members = shared_members[p];
        std::vector<Need> needs;
        Rational total;
        for (auto t : members) {
            needs.push_back(Need{demand[t], net.pre(p, t)});
            total += needs.back().speed * needs.back().pre;
        }
        if (!(feed[p] < total)) {
            std::vector<Rational> same;
            for (auto t : members) same.push_back(demand[t]);
            return same;
        }
        if (!policy[p]) throw UnresolvedConflict("effective conflict without a conflict policy", net.place(p).id);
        if (record) conflicted.insert(p);
        return allocate(compiled[p], feed[p], needs);
    };

    while (iterations < limit) {
        ++iterations;
        for (std::size_t p = 0; p < np; ++p) feed[p] = feeding_speed(net, v, p);

        std::vector<Rational> cf(nt);
        for (std::size_t t = 0; t < nt; ++t) {
            if (!net.transition(t).is_continuous() || vmax[t].is_zero()) continue;
            ExtRational cap = vmax[t];
            for (const auto& in : empty_inputs[t]) cap = min(cap, ExtRational(feed[in.node] / in.weight));
            cf[t] = cap.value();
        }

        // Allocations per shared place, keyed by member position. The first
        // pass sees conflict-free demands; later sweeps cap each member by what
        // its other shared inputs granted, updating in place until nothing moves.
        std::vector<std::vector<Rational>> table(np);
        for (auto p : shared) table[p] = share(p, cf, false);
        auto allotted = [&](const std::vector<std::vector<Rational>>& tab, std::size_t p, std::size_t t) {
            const auto& members = shared_members[p];
            auto it = std::find(members.begin(), members.end(), t);
            return tab[p][static_cast<std::size_t>(it - members.begin())];
        };
        const std::size_t sweeps = 2 + 2 * shared.size();
        for (std::size_t sweep = 0; sweep < sweeps; ++sweep) {
            conflicted.clear();
            bool settled = true;
            for (auto p : shared) {
                std::vector<Rational> demand = cf;
                for (auto t : shared_members[p]) {
                    for (const auto& in : empty_inputs[t])
                        if (in.node != p && shared_members[in.node].size() >= 2)
                            demand[t] = min(demand[t], allotted(table, in.node, t));
                }
                auto got = share(p, demand, true);
                if (got != table[p]) settled = false;
                table[p] = std::move(got);
            }
            if (settled) break;
        }
        const auto& second = table;

        SpeedVector next{cf};
        for (std::size_t t = 0; t < nt; ++t)
            for (const auto& in : empty_inputs[t])
                if (shared_members[in.node].size() >= 2)
                    next.values[t] = min(next.values[t], allotted(second, in.node, t));

        if (next == v) {
            converged = true;
            break;
        }
        v = std::move(next);
    }
    if (!converged)
        throw NonConvergence("speed fixed point not reached after " + std::to_string(limit) + " iterations");

    SpeedSolution out;
    out.speeds = v;
    out.max_speeds = vmax;
    out.iterations = iterations;
    out.effective_conflicts.assign(conflicted.begin(), conflicted.end());
    out.extended.marking = m;
    out.extended.labels.resize(np);
    for (std::size_t p = 0; p < np; ++p) {
        if (!net.is_continuous_place(p)) {
            out.extended.labels[p] = m[p].is_positive() ? ContinuousLabel::Positive : ContinuousLabel::Zero;
        } else if (!zero[p]) {
            out.extended.labels[p] = ContinuousLabel::Positive;
        } else {
            out.extended.labels[p] = feed[p].is_positive() ? ContinuousLabel::ZeroPlus : ContinuousLabel::Zero;
        }
    }
    return out;
}

}  // namespace hpn::semantics
