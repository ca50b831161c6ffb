#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "hpn/rational.hpp"

namespace hpn {

enum class NodeKind { Discrete, Continuous };

/// Narrative role of a transition. The scenario heuristics only reorder
/// transfer transitions; jobs stay above them and drains below.
enum class TransitionRole { Other, Transfer, HighPriorityJob, LowPriorityDrain };

[[nodiscard]] std::string_view to_string(NodeKind kind) noexcept;
[[nodiscard]] std::string_view to_string(TransitionRole role) noexcept;

struct Place {
    std::string id;
    NodeKind kind = NodeKind::Continuous;
    std::string name;

    friend bool operator==(const Place&, const Place&) = default;
};

/// Side effect of a discrete transition firing: set the flow rate of a
/// continuous transition. Scenario speed profiles compile to timed discrete
/// transitions carrying these.
struct RateAssignment {
    std::string transition;
    ExtRational rate;

    friend bool operator==(const RateAssignment&, const RateAssignment&) = default;
};

struct Transition {
    std::string id;
    NodeKind kind = NodeKind::Continuous;
    /// Delay d_j for discrete transitions, flow rate U_j for continuous ones.
    ExtRational timing;
    std::string name;
    TransitionRole role = TransitionRole::Other;
    std::vector<RateAssignment> on_fire;

    [[nodiscard]] bool is_discrete() const noexcept { return kind == NodeKind::Discrete; }
    [[nodiscard]] bool is_continuous() const noexcept { return kind == NodeKind::Continuous; }

    friend bool operator==(const Transition&, const Transition&) = default;
};

/// Place -> transition arcs carry Pre weights, transition -> place arcs Post weights.
struct Arc {
    std::string from;
    std::string to;
    Rational weight;

    friend bool operator==(const Arc&, const Arc&) = default;
};

enum class PolicyKind { Priority, Sharing, Groups };

struct PolicyMember {
    std::string transition;
    Rational weight{1};

    friend bool operator==(const PolicyMember&, const PolicyMember&) = default;
};

/// Conflict rule for one shared input place. All three forms are an ordered
/// list of sharing groups: Priority is a list of singletons, Sharing is one
/// group, Groups is priority between sharing groups.
struct ConflictPolicy {
    std::string place;
    PolicyKind kind = PolicyKind::Priority;
    std::vector<std::vector<PolicyMember>> groups;

    static ConflictPolicy priority(std::string place, const std::vector<std::string>& order);
    static ConflictPolicy sharing(std::string place, std::vector<PolicyMember> members);
    static ConflictPolicy grouped(std::string place, std::vector<std::vector<PolicyMember>> groups);

    /// Members flattened in priority order.
    [[nodiscard]] std::vector<std::string> order() const;
    [[nodiscard]] bool contains(std::string_view transition) const;

    friend bool operator==(const ConflictPolicy&, const ConflictPolicy&) = default;
};

/// Marking indexed by place position in the net. Discrete entries hold
/// integral values.
struct Marking {
    std::vector<Rational> values;

    [[nodiscard]] const Rational& operator[](std::size_t i) const { return values[i]; }
    Rational& operator[](std::size_t i) { return values[i]; }
    [[nodiscard]] std::size_t size() const noexcept { return values.size(); }

    friend bool operator==(const Marking&, const Marking&) = default;
};

/// Raw constituents of a net, as read from a file or assembled in code.
struct NetParts {
    std::vector<Place> places;
    std::vector<Transition> transitions;
    std::vector<Arc> arcs;
    std::vector<std::pair<std::string, Rational>> initial_marking;
    std::vector<ConflictPolicy> policies;
};

struct Link {
    std::size_t node;
    Rational weight;
};

/// Marked timed hybrid Petri net. Immutable once built; the `with_*`
/// functions return modified copies. Construction never rejects a net:
/// structural defects are reported by validate(), and arcs with unresolvable
/// endpoints are left out of the adjacency lists.
class HybridNet {
public:
    HybridNet() = default;
    explicit HybridNet(NetParts parts);

    [[nodiscard]] const std::vector<Place>& places() const noexcept { return parts_.places; }
    [[nodiscard]] const std::vector<Transition>& transitions() const noexcept { return parts_.transitions; }
    [[nodiscard]] const std::vector<Arc>& arcs() const noexcept { return parts_.arcs; }
    [[nodiscard]] const std::vector<ConflictPolicy>& policies() const noexcept { return parts_.policies; }
    [[nodiscard]] const NetParts& parts() const noexcept { return parts_; }
    [[nodiscard]] const Marking& initial_marking() const noexcept { return m0_; }

    [[nodiscard]] std::size_t place_count() const noexcept { return parts_.places.size(); }
    [[nodiscard]] std::size_t transition_count() const noexcept { return parts_.transitions.size(); }

    [[nodiscard]] const Place& place(std::size_t i) const { return parts_.places[i]; }
    [[nodiscard]] const Transition& transition(std::size_t i) const { return parts_.transitions[i]; }

    [[nodiscard]] std::optional<std::size_t> find_place(std::string_view id) const;
    [[nodiscard]] std::optional<std::size_t> find_transition(std::string_view id) const;
    /// Throw NotFound for unknown ids.
    [[nodiscard]] std::size_t place_index(std::string_view id) const;
    [[nodiscard]] std::size_t transition_index(std::string_view id) const;

    /// (place, Pre) for each input place of transition t.
    [[nodiscard]] const std::vector<Link>& inputs(std::size_t t) const { return t_inputs_[t]; }
    /// (place, Post) for each output place of transition t.
    [[nodiscard]] const std::vector<Link>& outputs(std::size_t t) const { return t_outputs_[t]; }
    /// (transition, Pre) for each output transition of place p.
    [[nodiscard]] const std::vector<Link>& consumers(std::size_t p) const { return p_consumers_[p]; }
    /// (transition, Post) for each input transition of place p.
    [[nodiscard]] const std::vector<Link>& producers(std::size_t p) const { return p_producers_[p]; }

    [[nodiscard]] Rational pre(std::size_t p, std::size_t t) const;
    [[nodiscard]] Rational post(std::size_t p, std::size_t t) const;

    /// First policy declared for place p, if any.
    [[nodiscard]] const ConflictPolicy* policy_for(std::size_t p) const;

    [[nodiscard]] bool is_continuous_place(std::size_t p) const {
        return parts_.places[p].kind == NodeKind::Continuous;
    }

    [[nodiscard]] HybridNet with_initial_marking(const Marking& m) const;
    [[nodiscard]] HybridNet with_timing(std::size_t t, ExtRational timing) const;
    /// Replaces policies place by place; places not mentioned keep theirs.
    [[nodiscard]] HybridNet with_policy_overrides(const std::vector<ConflictPolicy>& overrides) const;

    friend bool operator==(const HybridNet& a, const HybridNet& b);

private:
    void build_indices();

    NetParts parts_;
    Marking m0_;
    std::unordered_map<std::string, std::size_t> place_ids_;
    std::unordered_map<std::string, std::size_t> transition_ids_;
    std::vector<std::vector<Link>> t_inputs_;
    std::vector<std::vector<Link>> t_outputs_;
    std::vector<std::vector<Link>> p_consumers_;
    std::vector<std::vector<Link>> p_producers_;
    std::vector<int> policy_of_place_;
};

struct Violation {
    std::string code;
    std::string subject;
    std::string message;
};

struct ValidationReport {
    std::vector<Violation> violations;

    [[nodiscard]] bool ok() const noexcept { return violations.empty(); }
    [[nodiscard]] bool has(std::string_view code) const;
    [[nodiscard]] std::string summary() const;
};

/// Checks every structural invariant of the net. Violations are data; a
/// valid net yields an empty report.
[[nodiscard]] ValidationReport validate(const HybridNet& net);

/// Throws ValidationError carrying the report summary when the net is invalid.
void require_valid(const HybridNet& net);

struct StructuralConflict {
    std::string place;
    std::vector<std::string> transitions;
    /// 1: discrete competitors; 2: continuous competitors on a continuous
    /// place; 3: mixed discrete/continuous; 4: continuous competitors on a
    /// discrete place.
    int conflict_case = 0;
};

/// Every place with two or more output transitions, once, in place order.
[[nodiscard]] std::vector<StructuralConflict> structural_conflicts(const HybridNet& net);

/// Canonical JSON net file. load_net throws ParseError with line/field context.
[[nodiscard]] HybridNet load_net(std::string_view bytes);
/// Throws ValidationError for invalid nets.
[[nodiscard]] std::string save_net(const HybridNet& net);

}  // namespace hpn
