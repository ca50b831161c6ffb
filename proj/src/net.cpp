#include "hpn/net.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "hpn/errors.hpp"

namespace hpn {

std::string_view to_string(NodeKind kind) noexcept {
    return kind == NodeKind::Discrete ? "discrete" : "continuous";
}

std::string_view to_string(TransitionRole role) noexcept {
    switch (role) {
        case TransitionRole::Transfer: return "transfer";
        case TransitionRole::HighPriorityJob: return "high-priority-job";
        case TransitionRole::LowPriorityDrain: return "low-priority-drain";
        case TransitionRole::Other: break;
    }
    return "other";
}

ConflictPolicy ConflictPolicy::priority(std::string place, const std::vector<std::string>& order) {
    ConflictPolicy p;
    p.place = std::move(place);
    p.kind = PolicyKind::Priority;
    for (const auto& t : order) p.groups.push_back({PolicyMember{t, Rational(1)}});
    return p;
}

ConflictPolicy ConflictPolicy::sharing(std::string place, std::vector<PolicyMember> members) {
    ConflictPolicy p;
    p.place = std::move(place);
    p.kind = PolicyKind::Sharing;
    p.groups.push_back(std::move(members));
    return p;
}

ConflictPolicy ConflictPolicy::grouped(std::string place, std::vector<std::vector<PolicyMember>> groups) {
    ConflictPolicy p;
    p.place = std::move(place);
    p.kind = PolicyKind::Groups;
    p.groups = std::move(groups);
    return p;
}

std::vector<std::string> ConflictPolicy::order() const {
    std::vector<std::string> out;
    for (const auto& g : groups)
        for (const auto& m : g) out.push_back(m.transition);
    return out;
}

bool ConflictPolicy::contains(std::string_view transition) const {
    for (const auto& g : groups)
        for (const auto& m : g)
            if (m.transition == transition) return true;
    return false;
}

HybridNet::HybridNet(NetParts parts) : parts_(std::move(parts)) { build_indices(); }

void HybridNet::build_indices() {
    const std::size_t np = parts_.places.size();
    const std::size_t nt = parts_.transitions.size();
    place_ids_.clear();
    transition_ids_.clear();
    for (std::size_t i = 0; i < np; ++i) place_ids_.emplace(parts_.places[i].id, i);
    for (std::size_t i = 0; i < nt; ++i) transition_ids_.emplace(parts_.transitions[i].id, i);

    t_inputs_.assign(nt, {});
    t_outputs_.assign(nt, {});
    p_consumers_.assign(np, {});
    p_producers_.assign(np, {});
    for (const auto& arc : parts_.arcs) {
        if (arc.weight.is_zero() || arc.weight.is_negative()) continue;
        if (auto p = find_place(arc.from)) {
            if (auto t = find_transition(arc.to)) {
                t_inputs_[*t].push_back({*p, arc.weight});
                p_consumers_[*p].push_back({*t, arc.weight});
            }
        } else if (auto t = find_transition(arc.from)) {
            if (auto p2 = find_place(arc.to)) {
                t_outputs_[*t].push_back({*p2, arc.weight});
                p_producers_[*p2].push_back({*t, arc.weight});
            }
        }
    }
    auto by_node = [](const Link& a, const Link& b) { return a.node < b.node; };
    for (auto& v : t_inputs_) std::stable_sort(v.begin(), v.end(), by_node);
    for (auto& v : t_outputs_) std::stable_sort(v.begin(), v.end(), by_node);
    for (auto& v : p_consumers_) std::stable_sort(v.begin(), v.end(), by_node);
    for (auto& v : p_producers_) std::stable_sort(v.begin(), v.end(), by_node);

    m0_.values.assign(np, Rational(0));
    for (const auto& [id, value] : parts_.initial_marking) {
        if (auto p = find_place(id)) m0_.values[*p] = value;
    }

    policy_of_place_.assign(np, -1);
    for (std::size_t i = 0; i < parts_.policies.size(); ++i) {
        if (auto p = find_place(parts_.policies[i].place)) {
            if (policy_of_place_[*p] < 0) policy_of_place_[*p] = static_cast<int>(i);
        }
    }
}

std::optional<std::size_t> HybridNet::find_place(std::string_view id) const {
    auto it = place_ids_.find(std::string(id));
    if (it == place_ids_.end()) return std::nullopt;
    return it->second;
}

std::optional<std::size_t> HybridNet::find_transition(std::string_view id) const {
    auto it = transition_ids_.find(std::string(id));
    if (it == transition_ids_.end()) return std::nullopt;
    return it->second;
}

std::size_t HybridNet::place_index(std::string_view id) const {
    if (auto p = find_place(id)) return *p;
    throw NotFound("unknown place \"" + std::string(id) + "\"", std::string(id));
}

std::size_t HybridNet::transition_index(std::string_view id) const {
    if (auto t = find_transition(id)) return *t;
    throw NotFound("unknown transition \"" + std::string(id) + "\"", std::string(id));
}

Rational HybridNet::pre(std::size_t p, std::size_t t) const {
    for (const auto& l : t_inputs_[t])
        if (l.node == p) return l.weight;
    return Rational(0);
}

Rational HybridNet::post(std::size_t p, std::size_t t) const {
    for (const auto& l : t_outputs_[t])
        if (l.node == p) return l.weight;
    return Rational(0);
}

const ConflictPolicy* HybridNet::policy_for(std::size_t p) const {
    int i = policy_of_place_[p];
    return i < 0 ? nullptr : &parts_.policies[static_cast<std::size_t>(i)];
}

HybridNet HybridNet::with_initial_marking(const Marking& m) const {
    NetParts parts = parts_;
    parts.initial_marking.clear();
    for (std::size_t i = 0; i < parts.places.size(); ++i) {
        parts.initial_marking.emplace_back(parts.places[i].id, m.values.at(i));
    }
    return HybridNet(std::move(parts));
}

HybridNet HybridNet::with_timing(std::size_t t, ExtRational timing) const {
    NetParts parts = parts_;
    parts.transitions.at(t).timing = timing;
    return HybridNet(std::move(parts));
}

HybridNet HybridNet::with_policy_overrides(const std::vector<ConflictPolicy>& overrides) const {
    NetParts parts = parts_;
    for (const auto& o : overrides) {
        std::erase_if(parts.policies, [&](const ConflictPolicy& p) { return p.place == o.place; });
    }
    for (const auto& o : overrides) parts.policies.push_back(o);
    return HybridNet(std::move(parts));
}

bool operator==(const HybridNet& a, const HybridNet& b) {
    return a.parts_.places == b.parts_.places && a.parts_.transitions == b.parts_.transitions &&
           a.parts_.arcs == b.parts_.arcs && a.m0_ == b.m0_ && a.parts_.policies == b.parts_.policies;
}

bool ValidationReport::has(std::string_view code) const {
    return std::any_of(violations.begin(), violations.end(), [&](const Violation& v) { return v.code == code; });
}

std::string ValidationReport::summary() const {
    std::ostringstream os;
    for (std::size_t i = 0; i < violations.size(); ++i) {
        if (i) os << "; ";
        os << violations[i].code << " at " << violations[i].subject << ": " << violations[i].message;
    }
    return os.str();
}

namespace {

class Validator {
public:
    explicit Validator(const HybridNet& net) : net_(net) {}

    ValidationReport run() {
        check_nodes();
        check_arcs();
        check_marking();
        check_timings();
        check_policies();
        check_conflicts_have_policies();
        return std::move(report_);
    }

private:
    void add(std::string code, std::string subject, std::string message) {
        report_.violations.push_back({std::move(code), std::move(subject), std::move(message)});
    }

    void check_nodes() {
        if (net_.places().empty()) add("no-places", "net", "the net has no places");
        if (net_.transitions().empty()) add("no-transitions", "net", "the net has no transitions");
        std::set<std::string> seen;
        for (const auto& p : net_.places()) {
            if (p.id.empty()) add("empty-id", "place", "place with empty id");
            if (!seen.insert(p.id).second) add("duplicate-id", p.id, "id declared more than once");
        }
        for (const auto& t : net_.transitions()) {
            if (t.id.empty()) add("empty-id", "transition", "transition with empty id");
            if (!seen.insert(t.id).second) add("duplicate-id", t.id, "id declared more than once");
        }
    }

    void check_arcs() {
        std::set<std::pair<std::string, std::string>> seen;
        for (const auto& arc : net_.arcs()) {
            std::string subject = arc.from + "->" + arc.to;
            auto fp = net_.find_place(arc.from);
            auto ft = net_.find_transition(arc.from);
            auto tp = net_.find_place(arc.to);
            auto tt = net_.find_transition(arc.to);
            if (!fp && !ft) add("unknown-node", subject, "arc source \"" + arc.from + "\" is not a node");
            if (!tp && !tt) add("unknown-node", subject, "arc target \"" + arc.to + "\" is not a node");
            if ((fp && tp) || (ft && tt)) add("arc-direction", subject, "arcs must connect a place and a transition");
            if (!seen.insert({arc.from, arc.to}).second) add("duplicate-arc", subject, "arc declared more than once");
            if (arc.weight.is_negative()) add("negative-weight", subject, "negative weight " + arc.weight.str());
            std::optional<std::size_t> place = fp ? fp : tp;
            if (place && !net_.is_continuous_place(*place) && !arc.weight.is_integer()) {
                add("non-integer-weight", subject, "arcs touching a discrete place need integer weights");
            }
        }
        // Discrete place / continuous transition pairs must form a marking-preserving loop.
        for (std::size_t p = 0; p < net_.place_count(); ++p) {
            if (net_.is_continuous_place(p)) continue;
            std::set<std::size_t> touching;
            for (const auto& l : net_.consumers(p)) touching.insert(l.node);
            for (const auto& l : net_.producers(p)) touching.insert(l.node);
            for (std::size_t t : touching) {
                if (!net_.transition(t).is_continuous()) continue;
                if (net_.pre(p, t) != net_.post(p, t)) {
                    add("loop-mismatch", net_.place(p).id + "<->" + net_.transition(t).id,
                        "discrete/continuous loop weight mismatch: pre " + net_.pre(p, t).str() + ", post " +
                            net_.post(p, t).str());
                }
            }
        }
    }

    void check_marking() {
        std::set<std::string> seen;
        for (const auto& [id, value] : net_.parts().initial_marking) {
            auto p = net_.find_place(id);
            if (!p) {
                add("unknown-marking", id, "initial marking for unknown place");
                continue;
            }
            if (!seen.insert(id).second) add("duplicate-marking", id, "place marked more than once");
            if (value.is_negative()) add("negative-marking", id, "negative initial marking " + value.str());
            if (!net_.is_continuous_place(*p) && !value.is_integer()) {
                add("non-integer-marking", id, "discrete places hold natural markings");
            }
        }
    }

    void check_timings() {
        for (const auto& t : net_.transitions()) {
            if (t.is_discrete()) {
                if (t.timing.is_negative()) add("bad-timing", t.id, "negative delay");
                for (const auto& effect : t.on_fire) {
                    auto target = net_.find_transition(effect.transition);
                    if (!target || !net_.transition(*target).is_continuous()) {
                        add("bad-rate-effect", t.id, "rate effect targets \"" + effect.transition +
                                                         "\", which is not a continuous transition");
                    } else if (effect.rate.is_negative()) {
                        add("bad-rate-effect", t.id, "negative rate in effect");
                    }
                }
            } else {
                if (!t.timing.is_positive()) add("bad-timing", t.id, "continuous flow rate must be positive");
                if (!t.on_fire.empty()) add("bad-rate-effect", t.id, "only discrete transitions carry rate effects");
            }
        }
    }

    void check_policies() {
        std::set<std::string> places_with_policy;
        for (const auto& pol : net_.policies()) {
            auto p = net_.find_place(pol.place);
            if (!p) {
                add("policy-unknown-place", pol.place, "conflict policy for unknown place");
                continue;
            }
            if (!places_with_policy.insert(pol.place).second) {
                add("policy-duplicate-place", pol.place, "more than one policy for the place");
            }
            std::set<std::string> members;
            bool any = false;
            for (const auto& group : pol.groups) {
                if (group.empty()) add("policy-empty-group", pol.place, "empty sharing group");
                for (const auto& m : group) {
                    any = true;
                    auto t = net_.find_transition(m.transition);
                    if (!t || net_.pre(*p, *t).is_zero()) {
                        add("policy-not-output", pol.place + "/" + m.transition,
                            "policy member is not an output transition of the place");
                    }
                    if (!members.insert(m.transition).second) {
                        add("policy-duplicate-member", pol.place + "/" + m.transition,
                            "transition appears twice in the policy");
                    }
                    if (!m.weight.is_positive()) {
                        add("policy-weight", pol.place + "/" + m.transition, "sharing weights must be positive");
                    }
                }
            }
            if (!any) add("policy-empty", pol.place, "policy lists no transitions");
        }
    }

    void check_conflicts_have_policies() {
        for (std::size_t p = 0; p < net_.place_count(); ++p) {
            if (!net_.is_continuous_place(p)) continue;
            std::size_t continuous_consumers = 0;
            for (const auto& l : net_.consumers(p))
                if (net_.transition(l.node).is_continuous()) ++continuous_consumers;
            if (continuous_consumers >= 2 && net_.policy_for(p) == nullptr) {
                add("missing-conflict-policy", net_.place(p).id,
                    "continuous transitions compete for this place but no priority or sharing rule is declared");
            }
        }
    }

    const HybridNet& net_;
    ValidationReport report_;
};

}  // namespace

ValidationReport validate(const HybridNet& net) { return Validator(net).run(); }

void require_valid(const HybridNet& net) {
    auto report = validate(net);
    if (!report.ok()) {
        throw ValidationError("invalid net: " + report.summary(), report.violations.front().subject);
    }
}

std::vector<StructuralConflict> structural_conflicts(const HybridNet& net) {
    std::vector<StructuralConflict> out;
    for (std::size_t p = 0; p < net.place_count(); ++p) {
        const auto& consumers = net.consumers(p);
        if (consumers.size() < 2) continue;
        StructuralConflict c;
        c.place = net.place(p).id;
        bool any_discrete = false;
        bool any_continuous = false;
        for (const auto& l : consumers) {
            c.transitions.push_back(net.transition(l.node).id);
            (net.transition(l.node).is_discrete() ? any_discrete : any_continuous) = true;
        }
        if (any_discrete && any_continuous) {
            c.conflict_case = 3;
        } else if (any_discrete) {
            c.conflict_case = 1;
        } else {
            c.conflict_case = net.is_continuous_place(p) ? 2 : 4;
        }
        out.push_back(std::move(c));
    }
    return out;
}

}  // namespace hpn
