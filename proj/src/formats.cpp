#include "hpn/formats.hpp"

#include <sstream>

#include "hpn/errors.hpp"

namespace hpn::formats {

using json_io::decimal;
using json_io::rational;
using json_io::read_ext_rational;
using json_io::read_rational;
using json_io::read_string;
using json_io::require_known_keys;

namespace {

const json& field(const json& j, const char* key, const std::string& path) {
    auto it = j.find(key);
    if (it == j.end()) {
        std::string f = path.empty() ? key : path + "." + key;
        throw ParseError("missing field \"" + f + "\"", f);
    }
    return *it;
}

std::string at(const std::string& path, const char* key) { return path.empty() ? key : path + "." + key; }
std::string at(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

template <class R>
void put(json& j, const std::string& key, const R& r) {
    j[key] = rational(r);
    j[key + "Decimal"] = decimal(r);
}

template <class R>
void put(json& j, const std::string& key, const std::optional<R>& r) {
    if (r) {
        put(j, key, *r);
    } else {
        j[key] = nullptr;
        j[key + "Decimal"] = nullptr;
    }
}

std::optional<Rational> optional_rational(const json& j, const char* key, const std::string& path) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    return read_rational(*it, at(path, key));
}

bool read_bool(const json& j, const std::string& path) {
    if (!j.is_boolean()) throw ParseError(path + ": expected true or false", path);
    return j.get<bool>();
}

std::vector<std::string> read_strings(const json& j, const std::string& path) {
    if (!j.is_array()) throw ParseError(path + ": expected an array", path);
    std::vector<std::string> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(read_string(j[i], at(path, i)));
    return out;
}

json strings(const std::vector<std::string>& v) {
    json a = json::array();
    for (const auto& s : v) a.push_back(s);
    return a;
}

std::string_view label_name(semantics::ContinuousLabel l) {
    switch (l) {
        case semantics::ContinuousLabel::Zero: return "zero";
        case semantics::ContinuousLabel::ZeroPlus: return "zeroPlus";
        case semantics::ContinuousLabel::Positive: return "positive";
    }
    return "zero";
}

semantics::ContinuousLabel read_label(const json& j, const std::string& path) {
    auto s = read_string(j, path);
    if (s == "zero") return semantics::ContinuousLabel::Zero;
    if (s == "zeroPlus") return semantics::ContinuousLabel::ZeroPlus;
    if (s == "positive") return semantics::ContinuousLabel::Positive;
    throw ParseError(path + ": unknown label \"" + s + "\"", path);
}

evolution::EventKind read_event_kind(const json& j, const std::string& path) {
    auto s = read_string(j, path);
    for (auto k : {evolution::EventKind::C1, evolution::EventKind::C2, evolution::EventKind::D1,
                   evolution::EventKind::D2})
        if (s == evolution::to_string(k)) return k;
    throw ParseError(path + ": unknown event kind \"" + s + "\"", path);
}

evolution::Status read_status(const json& j, const std::string& path) {
    auto s = read_string(j, path);
    for (auto k : {evolution::Status::HorizonReached, evolution::Status::Deadlock, evolution::Status::TargetReached,
                   evolution::Status::Error})
        if (s == evolution::to_string(k)) return k;
    throw ParseError(path + ": unknown status \"" + s + "\"", path);
}

// Map keyed by node id -> indexed vector.
template <class T, class Read>
void read_map(const json& j, const std::vector<std::string>& ids, std::vector<T>& out, const std::string& path,
              Read read) {
    if (!j.is_object()) throw ParseError(path + ": expected an object", path);
    for (const auto& [id, value] : j.items()) {
        auto it = std::find(ids.begin(), ids.end(), id);
        if (it == ids.end()) throw ParseError(path + ": unknown id \"" + id + "\"", path + "." + id);
        out[static_cast<std::size_t>(it - ids.begin())] = read(value, path + "." + id);
    }
}

json marking_json(const HybridNet& net, const Marking& m, bool decimals) {
    json j = json::object();
    for (std::size_t p = 0; p < net.place_count(); ++p)
        j[net.place(p).id] = decimals ? decimal(m[p]) : rational(m[p]);
    return j;
}

}  // namespace

json scenario_to_json(const dss::Scenario& s) {
    json j;
    if (!s.name.empty()) j["name"] = s.name;
    if (!s.net.empty()) j["net"] = s.net;
    j["source"] = s.source;
    j["destination"] = s.destination;
    j["messageSize"] = rational(s.message_size);
    if (s.deadline) j["deadline"] = rational(*s.deadline);
    if (s.horizon) j["horizon"] = rational(*s.horizon);
    if (!s.availability.empty()) {
        json a = json::array();
        for (const auto& av : s.availability) {
            json e;
            e["place"] = av.place;
            e["available"] = av.available;
            if (!av.schedule.empty()) {
                json sched = json::array();
                for (const auto& step : av.schedule)
                    sched.push_back(json{{"at", rational(step.at)}, {"available", step.available}});
                e["schedule"] = std::move(sched);
            }
            a.push_back(std::move(e));
        }
        j["availability"] = std::move(a);
    }
    if (!s.speeds.empty()) {
        json a = json::array();
        for (const auto& sp : s.speeds) {
            json e;
            e["transition"] = sp.transition;
            switch (sp.kind) {
                case dss::ProfileKind::Constant: e["rate"] = rational(sp.rate); break;
                case dss::ProfileKind::Piecewise: {
                    json pieces = json::array();
                    for (const auto& p : sp.pieces)
                        pieces.push_back(json{{"from", rational(p.from)}, {"rate", rational(p.rate)}});
                    e["piecewise"] = std::move(pieces);
                    break;
                }
                case dss::ProfileKind::Random:
                    e["random"] = json{{"low", rational(sp.random.low)},
                                       {"high", rational(sp.random.high)},
                                       {"interval", rational(sp.random.interval)},
                                       {"intervals", sp.random.intervals},
                                       {"seed", sp.random.seed}};
                    break;
            }
            a.push_back(std::move(e));
        }
        j["speeds"] = std::move(a);
    }
    if (!s.policies.empty()) {
        json a = json::array();
        for (const auto& p : s.policies) a.push_back(json_io::policy_to_json(p));
        j["policies"] = std::move(a);
    }
    return j;
}

dss::Scenario scenario_from_json(const json& j) {
    require_known_keys(j, {"name", "net", "source", "destination", "messageSize", "deadline", "horizon",
                           "availability", "speeds", "policies"},
                       "");
    dss::Scenario s;
    if (j.contains("name")) s.name = read_string(j["name"], "name");
    if (j.contains("net")) s.net = read_string(j["net"], "net");
    s.source = read_string(field(j, "source", ""), "source");
    s.destination = read_string(field(j, "destination", ""), "destination");
    s.message_size = read_rational(field(j, "messageSize", ""), "messageSize");
    s.deadline = optional_rational(j, "deadline", "");
    s.horizon = optional_rational(j, "horizon", "");
    if (auto it = j.find("availability"); it != j.end()) {
        if (!it->is_array()) throw ParseError("availability: expected an array", "availability");
        for (std::size_t i = 0; i < it->size(); ++i) {
            const auto& e = (*it)[i];
            std::string path = at("availability", i);
            require_known_keys(e, {"place", "available", "schedule"}, path);
            dss::AvailabilitySetting a;
            a.place = read_string(field(e, "place", path), at(path, "place"));
            if (e.contains("available")) a.available = read_bool(e["available"], at(path, "available"));
            if (e.contains("schedule")) {
                const auto& sched = e["schedule"];
                if (!sched.is_array()) throw ParseError(at(path, "schedule") + ": expected an array", path);
                for (std::size_t k = 0; k < sched.size(); ++k) {
                    std::string sp = at(at(path, "schedule"), k);
                    require_known_keys(sched[k], {"at", "available"}, sp);
                    a.schedule.push_back(dss::ToggleStep{read_rational(field(sched[k], "at", sp), at(sp, "at")),
                                                         read_bool(field(sched[k], "available", sp),
                                                                   at(sp, "available"))});
                }
            }
            s.availability.push_back(std::move(a));
        }
    }
    if (auto it = j.find("speeds"); it != j.end()) {
        if (!it->is_array()) throw ParseError("speeds: expected an array", "speeds");
        for (std::size_t i = 0; i < it->size(); ++i) {
            const auto& e = (*it)[i];
            std::string path = at("speeds", i);
            require_known_keys(e, {"transition", "rate", "piecewise", "random"}, path);
            dss::SpeedProfile sp;
            sp.transition = read_string(field(e, "transition", path), at(path, "transition"));
            int forms = int(e.contains("rate")) + int(e.contains("piecewise")) + int(e.contains("random"));
            if (forms != 1) throw ParseError(path + ": exactly one of rate, piecewise, random is required", path);
            if (e.contains("rate")) {
                sp.kind = dss::ProfileKind::Constant;
                sp.rate = read_ext_rational(e["rate"], at(path, "rate"));
            } else if (e.contains("piecewise")) {
                sp.kind = dss::ProfileKind::Piecewise;
                const auto& pieces = e["piecewise"];
                if (!pieces.is_array()) throw ParseError(at(path, "piecewise") + ": expected an array", path);
                for (std::size_t k = 0; k < pieces.size(); ++k) {
                    std::string pp = at(at(path, "piecewise"), k);
                    require_known_keys(pieces[k], {"from", "rate"}, pp);
                    sp.pieces.push_back(dss::ProfilePiece{read_rational(field(pieces[k], "from", pp), at(pp, "from")),
                                                          read_ext_rational(field(pieces[k], "rate", pp),
                                                                            at(pp, "rate"))});
                }
            } else {
                sp.kind = dss::ProfileKind::Random;
                const auto& r = e["random"];
                std::string rp = at(path, "random");
                require_known_keys(r, {"low", "high", "interval", "intervals", "seed"}, rp);
                sp.random.low = read_rational(field(r, "low", rp), at(rp, "low"));
                sp.random.high = read_rational(field(r, "high", rp), at(rp, "high"));
                sp.random.interval = read_rational(field(r, "interval", rp), at(rp, "interval"));
                const auto& n = field(r, "intervals", rp);
                const auto& seed = field(r, "seed", rp);
                if (!n.is_number_unsigned()) throw ParseError(at(rp, "intervals") + ": expected a count", rp);
                if (!seed.is_number_unsigned()) throw ParseError(at(rp, "seed") + ": expected an unsigned seed", rp);
                sp.random.intervals = n.get<std::size_t>();
                sp.random.seed = seed.get<std::uint64_t>();
            }
            s.speeds.push_back(std::move(sp));
        }
    }
    if (auto it = j.find("policies"); it != j.end()) {
        if (!it->is_array()) throw ParseError("policies: expected an array", "policies");
        for (std::size_t i = 0; i < it->size(); ++i)
            s.policies.push_back(json_io::policy_from_json((*it)[i], at("policies", i)));
    }
    return s;
}

dss::Scenario load_scenario(std::string_view bytes) {
    return scenario_from_json(json_io::parse_document(bytes, "scenario"));
}

std::string save_scenario(const dss::Scenario& s) { return scenario_to_json(s).dump(2) + "\n"; }

json graph_to_json(const HybridNet& net, const evolution::EvolutionGraph& g) {
    json j;
    j["status"] = std::string(evolution::to_string(g.status));
    j["detail"] = g.detail;
    put(j, "endTime", g.end_time);
    put(j, "completionTime", g.completion_time);
    json places = json::array();
    for (const auto& p : net.places()) places.push_back(p.id);
    json transitions = json::array();
    for (const auto& t : net.transitions()) transitions.push_back(t.id);
    j["places"] = std::move(places);
    j["transitions"] = std::move(transitions);

    json phases = json::array();
    for (std::size_t k = 0; k < g.phases.size(); ++k) {
        const auto& ph = g.phases[k];
        json e;
        e["index"] = k;
        put(e, "start", ph.start);
        put(e, "duration", ph.duration);
        e["marking"] = marking_json(net, ph.marking, false);
        e["markingDecimal"] = marking_json(net, ph.marking, true);
        json speeds = json::object(), speeds_d = json::object(), vmax = json::object(), vmax_d = json::object();
        json degrees = json::object();
        for (std::size_t t = 0; t < net.transition_count(); ++t) {
            const auto& id = net.transition(t).id;
            if (net.transition(t).is_continuous()) {
                speeds[id] = rational(ph.speeds[t]);
                speeds_d[id] = decimal(ph.speeds[t]);
                vmax[id] = rational(ph.max_speeds[t]);
                vmax_d[id] = decimal(ph.max_speeds[t]);
            } else {
                degrees[id] = ph.discrete_degrees[t];
            }
        }
        e["speeds"] = std::move(speeds);
        e["speedsDecimal"] = std::move(speeds_d);
        e["maxSpeeds"] = std::move(vmax);
        e["maxSpeedsDecimal"] = std::move(vmax_d);
        e["discreteDegrees"] = std::move(degrees);
        json bal = json::object(), bal_d = json::object(), labels = json::object();
        for (std::size_t p = 0; p < net.place_count(); ++p) {
            const auto& id = net.place(p).id;
            if (net.is_continuous_place(p)) {
                bal[id] = rational(ph.balances[p]);
                bal_d[id] = decimal(ph.balances[p]);
            }
            labels[id] = std::string(label_name(ph.labels[p]));
        }
        e["balances"] = std::move(bal);
        e["balancesDecimal"] = std::move(bal_d);
        e["labels"] = std::move(labels);
        json conflicts = json::array();
        for (auto p : ph.effective_conflicts) conflicts.push_back(net.place(p).id);
        e["effectiveConflicts"] = std::move(conflicts);
        phases.push_back(std::move(e));
    }
    j["phases"] = std::move(phases);

    json events = json::array();
    for (const auto& ev : g.events) {
        json e;
        put(e, "time", ev.time);
        e["kind"] = std::string(evolution::to_string(ev.kind));
        e["subject"] = ev.subject;
        events.push_back(std::move(e));
    }
    j["events"] = std::move(events);
    j["finalMarking"] = marking_json(net, g.final_marking, false);
    j["finalMarkingDecimal"] = marking_json(net, g.final_marking, true);
    return j;
}

evolution::EvolutionGraph graph_from_json(const json& j) {
    const std::string root = "graph";
    if (!j.is_object()) throw ParseError("graph: expected an object", root);
    auto places = read_strings(field(j, "places", root), "graph.places");
    auto transitions = read_strings(field(j, "transitions", root), "graph.transitions");
    const std::size_t np = places.size();
    const std::size_t nt = transitions.size();
    auto rat = [](const json& v, const std::string& p) { return read_rational(v, p); };

    evolution::EvolutionGraph g;
    g.status = read_status(field(j, "status", root), "graph.status");
    if (j.contains("detail")) g.detail = read_string(j["detail"], "graph.detail");
    g.end_time = read_rational(field(j, "endTime", root), "graph.endTime");
    g.completion_time = optional_rational(j, "completionTime", root);
    g.final_marking.values.assign(np, Rational(0));
    read_map(field(j, "finalMarking", root), places, g.final_marking.values, "graph.finalMarking", rat);

    const auto& phases = field(j, "phases", root);
    if (!phases.is_array()) throw ParseError("graph.phases: expected an array", "graph.phases");
    for (std::size_t k = 0; k < phases.size(); ++k) {
        const auto& e = phases[k];
        std::string path = at("graph.phases", k);
        evolution::Phase ph;
        ph.start = read_rational(field(e, "start", path), at(path, "start"));
        ph.duration = optional_rational(e, "duration", path);
        ph.marking.values.assign(np, Rational(0));
        read_map(field(e, "marking", path), places, ph.marking.values, at(path, "marking"), rat);
        ph.speeds.values.assign(nt, Rational(0));
        read_map(field(e, "speeds", path), transitions, ph.speeds.values, at(path, "speeds"), rat);
        ph.max_speeds.assign(nt, ExtRational(0));
        read_map(field(e, "maxSpeeds", path), transitions, ph.max_speeds, at(path, "maxSpeeds"),
                 [](const json& v, const std::string& p) { return read_ext_rational(v, p); });
        ph.discrete_degrees.assign(nt, 0);
        read_map(field(e, "discreteDegrees", path), transitions, ph.discrete_degrees, at(path, "discreteDegrees"),
                 [](const json& v, const std::string& p) {
                     if (!v.is_number_integer()) throw ParseError(p + ": expected an integer", p);
                     return v.get<std::int64_t>();
                 });
        ph.balances.assign(np, Rational(0));
        read_map(field(e, "balances", path), places, ph.balances, at(path, "balances"), rat);
        ph.labels.assign(np, semantics::ContinuousLabel::Zero);
        read_map(field(e, "labels", path), places, ph.labels, at(path, "labels"), read_label);
        for (const auto& id : read_strings(field(e, "effectiveConflicts", path), at(path, "effectiveConflicts"))) {
            auto it = std::find(places.begin(), places.end(), id);
            if (it == places.end()) throw ParseError(path + ": unknown place \"" + id + "\"", path);
            ph.effective_conflicts.push_back(static_cast<std::size_t>(it - places.begin()));
        }
        g.phases.push_back(std::move(ph));
    }
    const auto& events = field(j, "events", root);
    if (!events.is_array()) throw ParseError("graph.events: expected an array", "graph.events");
    for (std::size_t i = 0; i < events.size(); ++i) {
        std::string path = at("graph.events", i);
        evolution::Event ev;
        ev.time = read_rational(field(events[i], "time", path), at(path, "time"));
        ev.kind = read_event_kind(field(events[i], "kind", path), at(path, "kind"));
        ev.subject = read_string(field(events[i], "subject", path), at(path, "subject"));
        g.events.push_back(std::move(ev));
    }
    return g;
}

json result_to_json(const HybridNet& net, const dss::ScenarioResult& r) {
    json j;
    j["label"] = r.label;
    j["feasible"] = r.feasible;
    put(j, "completionTime", r.completion_time);
    j["accumulatingPlaces"] = strings(r.accumulating_places);
    j["unavailableConnections"] = strings(r.unavailable_connections);
    j["scenario"] = scenario_to_json(r.scenario);
    j["graph"] = graph_to_json(dss::apply_scenario(net, r.scenario), r.graph);
    return j;
}

dss::ScenarioResult result_from_json(const json& j) {
    const std::string root = "result";
    dss::ScenarioResult r;
    r.label = read_string(field(j, "label", root), "result.label");
    r.feasible = read_bool(field(j, "feasible", root), "result.feasible");
    r.completion_time = optional_rational(j, "completionTime", root);
    r.accumulating_places = read_strings(field(j, "accumulatingPlaces", root), "result.accumulatingPlaces");
    r.unavailable_connections =
        read_strings(field(j, "unavailableConnections", root), "result.unavailableConnections");
    r.scenario = scenario_from_json(field(j, "scenario", root));
    r.graph = graph_from_json(field(j, "graph", root));
    return r;
}

json search_to_json(const HybridNet& net, const dss::SearchResult& r) {
    json j;
    j["mode"] = r.mode == dss::SearchMode::Heuristic ? "heuristic" : "exhaustive";
    j["feasible"] = r.feasible;
    j["selected"] = r.selected;
    j["warnings"] = strings(r.warnings);
    json trace = json::array();
    for (const auto& a : r.trace) {
        json e;
        e["label"] = a.label;
        json pols = json::array();
        for (const auto& p : a.policies) pols.push_back(json_io::policy_to_json(p));
        e["policies"] = std::move(pols);
        put(e, "completionTime", a.completion_time);
        e["feasible"] = a.feasible;
        e["phases"] = a.phases;
        e["accumulatingPlaces"] = strings(a.accumulating_places);
        trace.push_back(std::move(e));
    }
    j["trace"] = std::move(trace);
    j["result"] = r.trace.empty() ? json(nullptr) : result_to_json(net, r.result);
    return j;
}

json history_entry_to_json(const dss::HistoryEntry& e, const json& result) {
    json j;
    j["id"] = e.id;
    j["timestamp"] = e.timestamp;
    j["label"] = e.label;
    j["result"] = result;
    return j;
}

json history_entry_to_json(const HybridNet& net, const dss::HistoryEntry& e) {
    return history_entry_to_json(e, result_to_json(net, e.result));
}

dss::HistoryEntry history_entry_from_json(const json& j) {
    require_known_keys(j, {"id", "timestamp", "label", "result"}, "");
    dss::HistoryEntry e;
    e.id = read_string(field(j, "id", ""), "id");
    e.timestamp = read_string(field(j, "timestamp", ""), "timestamp");
    e.label = read_string(field(j, "label", ""), "label");
    e.result = result_from_json(field(j, "result", ""));
    return e;
}

json comparison_to_json(const std::vector<dss::ComparisonRow>& rows) {
    json out = json::array();
    for (const auto& r : rows) {
        json e;
        e["id"] = r.id;
        e["label"] = r.label;
        e["feasible"] = r.feasible;
        put(e, "completionTime", r.completion_time);
        e["phases"] = r.phases;
        e["accumulatingPlaces"] = strings(r.accumulating_places);
        out.push_back(std::move(e));
    }
    return out;
}

std::string trajectory_csv(const HybridNet& net, const evolution::EvolutionGraph& g, const Rational& dt) {
    std::ostringstream os;
    os << "time,time_decimal";
    for (const auto& p : net.places()) os << ',' << p.id;
    os << '\n';
    for (const auto& [t, m] : evolution::sample(g, dt)) {
        os << t.str() << ',' << decimal(t).dump();
        for (std::size_t p = 0; p < m.size(); ++p) os << ',' << m[p].str();
        os << '\n';
    }
    return os.str();
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

}  // namespace hpn::formats
