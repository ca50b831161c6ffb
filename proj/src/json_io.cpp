#include "hpn/json_io.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>

#include "hpn/errors.hpp"

namespace hpn::json_io {

json rational(const Rational& r) { return r.str(); }
json rational(const ExtRational& r) { return r.str(); }

json decimal(const Rational& r) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", r.to_double());
    return std::strtod(buf, nullptr);
}

json decimal(const ExtRational& r) {
    if (r.is_infinite()) return "inf";
    return decimal(r.value());
}

Rational read_rational(const json& j, const std::string& path) {
    try {
        if (j.is_string()) return Rational::parse(j.get<std::string>());
        if (j.is_number_integer()) return Rational(j.get<std::int64_t>());
    } catch (const std::exception& e) {
        throw ParseError(path + ": " + e.what(), path);
    }
    throw ParseError(path + ": expected a rational as a \"p/q\" string", path);
}

ExtRational read_ext_rational(const json& j, const std::string& path) {
    if (j.is_string() && j.get<std::string>() == "inf") return ExtRational::infinity();
    return read_rational(j, path);
}

std::string read_string(const json& j, const std::string& path) {
    if (!j.is_string()) throw ParseError(path + ": expected a string", path);
    return j.get<std::string>();
}

void require_known_keys(const json& object, std::initializer_list<std::string_view> allowed,
                        const std::string& path) {
    if (!object.is_object()) throw ParseError(path + ": expected an object", path);
    for (const auto& [key, value] : object.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            std::string field = path.empty() ? key : path + "." + key;
            throw ParseError("unknown field \"" + field + "\"", field);
        }
    }
}

json parse_document(std::string_view bytes, std::string_view what) {
    try {
        return json::parse(bytes.begin(), bytes.end());
    } catch (const json::parse_error& e) {
        std::size_t line = 1;
        std::size_t column = 1;
        std::size_t limit = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, bytes.size());
        for (std::size_t i = 0; i < limit; ++i) {
            if (bytes[i] == '\n') {
                ++line;
                column = 1;
            } else {
                ++column;
            }
        }
        throw ParseError(std::string(what) + " line " + std::to_string(line) + ", column " + std::to_string(column) +
                             ": malformed JSON",
                         std::string(what));
    }
}

namespace {

NodeKind read_kind(const json& j, const std::string& path) {
    auto s = read_string(j, path);
    if (s == "discrete") return NodeKind::Discrete;
    if (s == "continuous") return NodeKind::Continuous;
    throw ParseError(path + ": kind must be \"discrete\" or \"continuous\"", path);
}

TransitionRole read_role(const json& j, const std::string& path) {
    auto s = read_string(j, path);
    if (s == "transfer") return TransitionRole::Transfer;
    if (s == "high-priority-job") return TransitionRole::HighPriorityJob;
    if (s == "low-priority-drain") return TransitionRole::LowPriorityDrain;
    if (s == "other") return TransitionRole::Other;
    throw ParseError(path + ": unknown role \"" + s + "\"", path);
}

const json& require(const json& object, const char* key, const std::string& path) {
    auto it = object.find(key);
    if (it == object.end()) {
        std::string field = path + "." + key;
        throw ParseError("missing field \"" + field + "\"", field);
    }
    return *it;
}

std::vector<PolicyMember> read_members(const json& j, const std::string& path) {
    std::vector<PolicyMember> members;
    if (j.is_object()) {
        for (const auto& [t, w] : j.items()) members.push_back({t, read_rational(w, path + "." + t)});
    } else if (j.is_array()) {
        for (std::size_t i = 0; i < j.size(); ++i) {
            members.push_back({read_string(j[i], path + "[" + std::to_string(i) + "]"), Rational(1)});
        }
    } else {
        throw ParseError(path + ": expected an object of weights", path);
    }
    return members;
}

}  // namespace

json policy_to_json(const ConflictPolicy& policy) {
    json j;
    j["place"] = policy.place;
    switch (policy.kind) {
        case PolicyKind::Priority: {
            json order = json::array();
            for (const auto& t : policy.order()) order.push_back(t);
            j["priority"] = std::move(order);
            break;
        }
        case PolicyKind::Sharing: {
            json weights = json::object();
            for (const auto& m : policy.groups.at(0)) weights[m.transition] = rational(m.weight);
            j["sharing"] = std::move(weights);
            break;
        }
        case PolicyKind::Groups: {
            json groups = json::array();
            for (const auto& g : policy.groups) {
                json weights = json::object();
                for (const auto& m : g) weights[m.transition] = rational(m.weight);
                groups.push_back(std::move(weights));
            }
            j["groups"] = std::move(groups);
            break;
        }
    }
    return j;
}

ConflictPolicy policy_from_json(const json& j, const std::string& path) {
    require_known_keys(j, {"place", "priority", "sharing", "groups"}, path);
    std::string place = read_string(require(j, "place", path), path + ".place");
    int forms = static_cast<int>(j.contains("priority")) + static_cast<int>(j.contains("sharing")) +
                static_cast<int>(j.contains("groups"));
    if (forms != 1) throw ParseError(path + ": exactly one of priority, sharing, groups is required", path);
    if (j.contains("priority")) {
        const auto& order = j["priority"];
        if (!order.is_array()) throw ParseError(path + ".priority: expected an array", path + ".priority");
        std::vector<std::string> ids;
        for (std::size_t i = 0; i < order.size(); ++i) {
            ids.push_back(read_string(order[i], path + ".priority[" + std::to_string(i) + "]"));
        }
        return ConflictPolicy::priority(place, ids);
    }
    if (j.contains("sharing")) return ConflictPolicy::sharing(place, read_members(j["sharing"], path + ".sharing"));
    const auto& groups = j["groups"];
    if (!groups.is_array()) throw ParseError(path + ".groups: expected an array", path + ".groups");
    std::vector<std::vector<PolicyMember>> out;
    for (std::size_t i = 0; i < groups.size(); ++i) {
        out.push_back(read_members(groups[i], path + ".groups[" + std::to_string(i) + "]"));
    }
    return ConflictPolicy::grouped(place, std::move(out));
}

json net_to_json(const HybridNet& net) {
    json j;
    json places = json::array();
    for (const auto& p : net.places()) {
        json e;
        e["id"] = p.id;
        e["kind"] = std::string(to_string(p.kind));
        if (!p.name.empty()) e["name"] = p.name;
        places.push_back(std::move(e));
    }
    json transitions = json::array();
    for (const auto& t : net.transitions()) {
        json e;
        e["id"] = t.id;
        e["kind"] = std::string(to_string(t.kind));
        e[t.is_discrete() ? "delay" : "rate"] = rational(t.timing);
        if (t.role != TransitionRole::Other) e["role"] = std::string(to_string(t.role));
        if (!t.name.empty()) e["name"] = t.name;
        if (!t.on_fire.empty()) {
            json effects = json::object();
            for (const auto& a : t.on_fire) effects[a.transition] = rational(a.rate);
            e["onFire"] = std::move(effects);
        }
        transitions.push_back(std::move(e));
    }
    json arcs = json::array();
    for (const auto& a : net.arcs()) {
        arcs.push_back(json{{"from", a.from}, {"to", a.to}, {"weight", rational(a.weight)}});
    }
    json marking = json::object();
    for (std::size_t i = 0; i < net.place_count(); ++i) {
        marking[net.place(i).id] = rational(net.initial_marking()[i]);
    }
    json policies = json::array();
    for (const auto& p : net.policies()) policies.push_back(policy_to_json(p));

    j["places"] = std::move(places);
    j["transitions"] = std::move(transitions);
    j["arcs"] = std::move(arcs);
    j["initialMarking"] = std::move(marking);
    j["conflictPolicies"] = std::move(policies);
    return j;
}

HybridNet net_from_json(const json& j) {
    if (!j.is_object()) throw ParseError("net: expected a JSON object", "net");
    require_known_keys(j, {"places", "transitions", "arcs", "initialMarking", "conflictPolicies"}, "");
    NetParts parts;

    auto places_it = j.find("places");
    if (places_it == j.end() || !places_it->is_array() || places_it->empty()) {
        throw ParseError("no places", "places");
    }
    for (std::size_t i = 0; i < places_it->size(); ++i) {
        std::string path = "places[" + std::to_string(i) + "]";
        const auto& e = (*places_it)[i];
        require_known_keys(e, {"id", "kind", "name"}, path);
        Place p;
        p.id = read_string(require(e, "id", path), path + ".id");
        p.kind = read_kind(require(e, "kind", path), path + ".kind");
        if (e.contains("name")) p.name = read_string(e["name"], path + ".name");
        parts.places.push_back(std::move(p));
    }

    auto transitions_it = j.find("transitions");
    if (transitions_it == j.end() || !transitions_it->is_array() || transitions_it->empty()) {
        throw ParseError("no transitions", "transitions");
    }
    for (std::size_t i = 0; i < transitions_it->size(); ++i) {
        std::string path = "transitions[" + std::to_string(i) + "]";
        const auto& e = (*transitions_it)[i];
        require_known_keys(e, {"id", "kind", "delay", "rate", "role", "name", "onFire"}, path);
        Transition t;
        t.id = read_string(require(e, "id", path), path + ".id");
        t.kind = read_kind(require(e, "kind", path), path + ".kind");
        const char* timing_key = t.is_discrete() ? "delay" : "rate";
        const char* wrong_key = t.is_discrete() ? "rate" : "delay";
        if (e.contains(wrong_key)) {
            throw ParseError(path + "." + wrong_key + ": " + std::string(to_string(t.kind)) +
                                 " transitions carry only \"" + timing_key + "\"",
                             path + "." + wrong_key);
        }
        t.timing = read_ext_rational(require(e, timing_key, path), path + "." + timing_key);
        if (e.contains("role")) t.role = read_role(e["role"], path + ".role");
        if (e.contains("name")) t.name = read_string(e["name"], path + ".name");
        if (e.contains("onFire")) {
            const auto& effects = e["onFire"];
            if (!effects.is_object()) throw ParseError(path + ".onFire: expected an object", path + ".onFire");
            for (const auto& [target, rate] : effects.items()) {
                t.on_fire.push_back({target, read_ext_rational(rate, path + ".onFire." + target)});
            }
        }
        parts.transitions.push_back(std::move(t));
    }

    if (auto it = j.find("arcs"); it != j.end()) {
        if (!it->is_array()) throw ParseError("arcs: expected an array", "arcs");
        for (std::size_t i = 0; i < it->size(); ++i) {
            std::string path = "arcs[" + std::to_string(i) + "]";
            const auto& e = (*it)[i];
            require_known_keys(e, {"from", "to", "weight"}, path);
            Arc a;
            a.from = read_string(require(e, "from", path), path + ".from");
            a.to = read_string(require(e, "to", path), path + ".to");
            a.weight = e.contains("weight") ? read_rational(e["weight"], path + ".weight") : Rational(1);
            parts.arcs.push_back(std::move(a));
        }
    }

    if (auto it = j.find("initialMarking"); it != j.end()) {
        if (!it->is_object()) throw ParseError("initialMarking: expected an object", "initialMarking");
        for (const auto& [id, value] : it->items()) {
            parts.initial_marking.emplace_back(id, read_rational(value, "initialMarking." + id));
        }
    }

    if (auto it = j.find("conflictPolicies"); it != j.end()) {
        if (!it->is_array()) throw ParseError("conflictPolicies: expected an array", "conflictPolicies");
        for (std::size_t i = 0; i < it->size(); ++i) {
            parts.policies.push_back(policy_from_json((*it)[i], "conflictPolicies[" + std::to_string(i) + "]"));
        }
    }
    return HybridNet(std::move(parts));
}

}  // namespace hpn::json_io

namespace hpn {

HybridNet load_net(std::string_view bytes) {
    if (bytes.find_first_not_of(" \t\r\n") == std::string_view::npos) throw ParseError("no places", "places");
    return json_io::net_from_json(json_io::parse_document(bytes, "net"));
}

std::string save_net(const HybridNet& net) {
    require_valid(net);
    return json_io::net_to_json(net).dump(2) + "\n";
}

}  // namespace hpn
