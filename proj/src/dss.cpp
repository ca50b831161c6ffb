#include "hpn/dss.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "hpn/errors.hpp"

namespace hpn::dss {

namespace {

std::size_t continuous_place(const HybridNet& net, const std::string& id, const char* what) {
    if (id.empty()) throw ContractViolation(std::string("scenario has no ") + what + " place");
    auto p = net.find_place(id);
    if (!p) throw NotFound(std::string(what) + " place \"" + id + "\" is not in the net", id);
    if (!net.is_continuous_place(*p))
        throw ContractViolation(std::string(what) + " place must be continuous", id);
    return *p;
}

struct Builder {
    NetParts parts;
    std::map<std::string, Rational> marking;

    void place(const std::string& id, std::int64_t tokens) {
        parts.places.push_back(Place{id, NodeKind::Discrete, {}});
        marking[id] = Rational(tokens);
    }
    void timer(const std::string& id, const Rational& delay, std::vector<RateAssignment> effects = {}) {
        Transition t;
        t.id = id;
        t.kind = NodeKind::Discrete;
        t.timing = delay;
        t.on_fire = std::move(effects);
        parts.transitions.push_back(std::move(t));
    }
    void arc(const std::string& from, const std::string& to) { parts.arcs.push_back(Arc{from, to, Rational(1)}); }

    // Chain of timers firing at the given absolute times, calling `hook`
    // with the k-th transition id.
    template <class Hook>
    void chain(const std::string& owner, const std::vector<Rational>& times, Hook hook) {
        Rational previous;
        for (std::size_t k = 0; k < times.size(); ++k) {
            std::string state = "sched." + owner + ".s" + std::to_string(k);
            std::string tid = "sched." + owner + ".t" + std::to_string(k);
            place(state, k == 0 ? 1 : 0);
            timer(tid, times[k] - previous);
            arc(state, tid);
            if (k + 1 < times.size()) arc(tid, "sched." + owner + ".s" + std::to_string(k + 1));
            hook(k, parts.transitions.back());
            previous = times[k];
        }
    }
};

std::vector<std::size_t> continuous_consumers(const HybridNet& net, std::size_t p) {
    std::vector<std::size_t> out;
    for (const auto& c : net.consumers(p))
        if (net.transition(c.node).is_continuous()) out.push_back(c.node);
    return out;
}

bool is_loop_place(const HybridNet& net, std::size_t p) {
    if (net.is_continuous_place(p)) return false;
    for (const auto& c : net.consumers(p))
        if (net.transition(c.node).is_continuous()) return true;
    return false;
}

std::vector<ConflictPolicy> merge(std::vector<ConflictPolicy> base, const std::vector<ConflictPolicy>& over) {
    for (const auto& o : over) {
        auto it = std::find_if(base.begin(), base.end(), [&](const ConflictPolicy& b) { return b.place == o.place; });
        if (it == base.end()) base.push_back(o);
        else *it = o;
    }
    return base;
}

bool singleton_groups(const ConflictPolicy& p) {
    return std::all_of(p.groups.begin(), p.groups.end(), [](const auto& g) { return g.size() == 1; });
}

struct Layout {
    std::string place;
    std::vector<std::string> jobs, transfers, others, drains;
};

std::vector<Layout> layouts(const HybridNet& net, const std::vector<ConflictPolicy>& assignment) {
    std::vector<Layout> out;
    for (const auto& pol : assignment) {
        Layout l;
        l.place = pol.place;
        for (const auto& id : pol.order()) {
            switch (net.transition(net.transition_index(id)).role) {
                case TransitionRole::HighPriorityJob: l.jobs.push_back(id); break;
                case TransitionRole::Transfer: l.transfers.push_back(id); break;
                case TransitionRole::LowPriorityDrain: l.drains.push_back(id); break;
                case TransitionRole::Other: l.others.push_back(id); break;
            }
        }
        out.push_back(std::move(l));
    }
    return out;
}

std::vector<ConflictPolicy> candidates(const Layout& l) {
    std::vector<ConflictPolicy> out;
    std::vector<std::size_t> idx(l.transfers.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    do {
        std::vector<std::string> order = l.jobs;
        for (auto i : idx) order.push_back(l.transfers[i]);
        order.insert(order.end(), l.others.begin(), l.others.end());
        order.insert(order.end(), l.drains.begin(), l.drains.end());
        out.push_back(ConflictPolicy::priority(l.place, order));
    } while (std::next_permutation(idx.begin(), idx.end()));
    if (l.transfers.size() >= 2) {
        std::vector<std::vector<PolicyMember>> groups;
        for (const auto& j : l.jobs) groups.push_back({PolicyMember{j, Rational(1)}});
        std::vector<PolicyMember> shared;
        for (const auto& t : l.transfers) shared.push_back(PolicyMember{t, Rational(1)});
        groups.push_back(std::move(shared));
        for (const auto& o : l.others) groups.push_back({PolicyMember{o, Rational(1)}});
        for (const auto& d : l.drains) groups.push_back({PolicyMember{d, Rational(1)}});
        out.push_back(ConflictPolicy::grouped(l.place, std::move(groups)));
    }
    return out;
}

Attempt summarize(const std::string& label, const std::vector<ConflictPolicy>& policies, const ScenarioResult& r) {
    Attempt a;
    a.label = label;
    a.policies = policies;
    a.completion_time = r.completion_time;
    a.feasible = r.feasible;
    a.phases = r.graph.phases.size();
    a.accumulating_places = r.accumulating_places;
    return a;
}

bool better(const std::optional<Rational>& a, const std::optional<Rational>& b) {
    if (!a) return false;
    if (!b) return true;
    return *a < *b;
}

}  // namespace

std::vector<ProfilePiece> SpeedProfile::resolved() const {
    switch (kind) {
        case ProfileKind::Constant: return {ProfilePiece{Rational(0), rate}};
        case ProfileKind::Piecewise: return pieces;
        case ProfileKind::Random:
            return sample_speed_profile(Bounds{random.low, random.high}, random.intervals, random.interval, random.seed);
    }
    return {};
}

void check_scenario(const HybridNet& net, const Scenario& s) {
    std::size_t src = continuous_place(net, s.source, "source");
    std::size_t dst = continuous_place(net, s.destination, "destination");
    if (src == dst) throw ContractViolation("source and destination must differ", s.source);
    if (!s.message_size.is_positive()) throw ContractViolation("message size must be positive");
    if (s.deadline && !s.deadline->is_positive()) throw ContractViolation("deadline must be positive");
    if (s.horizon && !s.horizon->is_positive()) throw ContractViolation("horizon must be positive");

    std::set<std::string> seen;
    for (const auto& a : s.availability) {
        auto p = net.find_place(a.place);
        if (!p) throw NotFound("availability place \"" + a.place + "\" is not in the net", a.place);
        if (net.is_continuous_place(*p)) throw ContractViolation("availability place must be discrete", a.place);
        if (!seen.insert(a.place).second) throw ContractViolation("availability set twice", a.place);
        Rational last;
        for (const auto& step : a.schedule) {
            if (step.at <= last) throw ContractViolation("toggle times must be positive and increasing", a.place);
            last = step.at;
        }
    }
    seen.clear();
    for (const auto& sp : s.speeds) {
        auto t = net.find_transition(sp.transition);
        if (!t) throw NotFound("speed profile transition \"" + sp.transition + "\" is not in the net", sp.transition);
        if (!net.transition(*t).is_continuous())
            throw ContractViolation("speed profiles apply to continuous transitions", sp.transition);
        if (!seen.insert(sp.transition).second) throw ContractViolation("speed profile set twice", sp.transition);
        if (sp.kind == ProfileKind::Constant && !sp.rate.is_positive())
            throw ContractViolation("constant rate must be positive", sp.transition);
        if (sp.kind == ProfileKind::Piecewise) {
            if (sp.pieces.empty() || !sp.pieces.front().from.is_zero())
                throw ContractViolation("piecewise profile must start at time 0", sp.transition);
            for (std::size_t i = 0; i < sp.pieces.size(); ++i) {
                if (sp.pieces[i].rate.is_negative()) throw ContractViolation("negative rate", sp.transition);
                if (i > 0 && sp.pieces[i].from <= sp.pieces[i - 1].from)
                    throw ContractViolation("profile pieces must be increasing in time", sp.transition);
            }
        }
        if (sp.kind == ProfileKind::Random) {
            const auto& r = sp.random;
            if (r.low.is_negative() || r.high < r.low)
                throw ContractViolation("random profile needs 0 <= low <= high", sp.transition);
            if (!r.interval.is_positive() || r.intervals == 0)
                throw ContractViolation("random profile needs a positive interval and count", sp.transition);
        }
    }
    for (const auto& pol : s.policies)
        if (!net.find_place(pol.place))
            throw NotFound("policy place \"" + pol.place + "\" is not in the net", pol.place);
}

HybridNet apply_scenario(const HybridNet& net, const Scenario& s) {
    check_scenario(net, s);
    Builder b;
    b.parts = net.parts();
    for (std::size_t p = 0; p < net.place_count(); ++p) b.marking[net.place(p).id] = net.initial_marking()[p];
    b.marking[s.source] = s.message_size;

    for (const auto& a : s.availability) {
        b.marking[a.place] = Rational(a.available ? 1 : 0);
        if (a.schedule.empty()) continue;
        std::vector<Rational> times;
        for (const auto& step : a.schedule) times.push_back(step.at);
        bool state = a.available;
        b.chain(a.place, times, [&](std::size_t k, Transition& t) {
            bool next = a.schedule[k].available;
            if (next != state) {
                if (next) b.arc(t.id, a.place);
                else b.arc(a.place, t.id);
            }
            state = next;
        });
    }

    for (const auto& sp : s.speeds) {
        auto pieces = sp.resolved();
        std::size_t t = net.transition_index(sp.transition);
        std::size_t first = 0;
        if (pieces.front().rate.is_positive()) {
            b.parts.transitions[t].timing = pieces.front().rate;
            first = 1;
        }
        if (first >= pieces.size()) continue;
        std::vector<Rational> times;
        for (std::size_t i = first; i < pieces.size(); ++i) times.push_back(pieces[i].from);
        b.chain(sp.transition, times, [&](std::size_t k, Transition& timer) {
            timer.on_fire.push_back(RateAssignment{sp.transition, pieces[first + k].rate});
        });
    }

    b.parts.initial_marking.clear();
    for (const auto& p : b.parts.places) b.parts.initial_marking.emplace_back(p.id, b.marking[p.id]);
    HybridNet out(std::move(b.parts));
    return s.policies.empty() ? out : out.with_policy_overrides(s.policies);
}

ScenarioResult run_scenario(const HybridNet& net, const Scenario& s, const std::string& label) {
    HybridNet applied = apply_scenario(net, s);
    evolution::EvolveOptions options;
    if (s.horizon) options.horizon = *s.horizon;
    options.target = evolution::Target{s.destination, s.message_size};

    ScenarioResult r;
    r.label = label.empty() ? s.name : label;
    r.scenario = s;
    r.graph = evolution::evolve(applied, options);
    r.completion_time = r.graph.completion_time;
    r.feasible = r.completion_time && (!s.deadline || *r.completion_time <= *s.deadline);

    const std::size_t src = net.place_index(s.source);
    const std::size_t dst = net.place_index(s.destination);
    for (std::size_t p = 0; p < net.place_count(); ++p) {
        if (!net.is_continuous_place(p) || p == src || p == dst) continue;
        bool grows = std::any_of(r.graph.phases.begin(), r.graph.phases.end(),
                                 [&](const evolution::Phase& ph) { return ph.balances[p].is_positive(); });
        if (grows) r.accumulating_places.push_back(net.place(p).id);
    }
    for (std::size_t p = 0; p < net.place_count(); ++p)
        if (is_loop_place(applied, p) && applied.initial_marking()[p].is_zero())
            r.unavailable_connections.push_back(net.place(p).id);
    return r;
}

std::vector<ConflictPolicy> initial_priority_assignment(const HybridNet& net, const Scenario& scenario) {
    HybridNet applied = apply_scenario(net, scenario);
    std::vector<ConflictPolicy> out;
    for (std::size_t p = 0; p < applied.place_count(); ++p) {
        if (!applied.is_continuous_place(p)) continue;
        auto members = continuous_consumers(applied, p);
        if (members.size() < 2) continue;

        std::map<std::size_t, std::size_t> rank;
        if (const auto* pol = applied.policy_for(p)) {
            auto order = pol->order();
            for (std::size_t i = 0; i < order.size(); ++i)
                if (auto t = applied.find_transition(order[i])) rank.emplace(*t, i);
        }
        auto rank_of = [&](std::size_t t) {
            auto it = rank.find(t);
            return it == rank.end() ? applied.transition_count() + t : it->second;
        };
        std::sort(members.begin(), members.end(),
                  [&](std::size_t a, std::size_t b) { return rank_of(a) < rank_of(b); });

        std::vector<std::size_t> jobs, transfers, others, drains;
        for (auto t : members) {
            switch (applied.transition(t).role) {
                case TransitionRole::HighPriorityJob: jobs.push_back(t); break;
                case TransitionRole::Transfer: transfers.push_back(t); break;
                case TransitionRole::LowPriorityDrain: drains.push_back(t); break;
                case TransitionRole::Other: others.push_back(t); break;
            }
        }
        std::stable_sort(transfers.begin(), transfers.end(), [&](std::size_t a, std::size_t b) {
            return applied.transition(b).timing < applied.transition(a).timing;
        });
        std::vector<std::string> order;
        for (const auto* group : {&jobs, &transfers, &others, &drains})
            for (auto t : *group) order.push_back(applied.transition(t).id);
        out.push_back(ConflictPolicy::priority(applied.place(p).id, order));
    }
    return out;
}

std::optional<std::vector<ConflictPolicy>> refine_on_accumulation(const HybridNet& net, const ScenarioResult& result,
                                                                  const std::vector<ConflictPolicy>& assignment) {
    std::vector<std::string> demote;
    for (const auto& id : result.accumulating_places) {
        auto p = net.find_place(id);
        if (!p) continue;
        for (const auto& prod : net.producers(*p)) {
            const auto& t = net.transition(prod.node);
            if (t.role == TransitionRole::Transfer &&
                std::find(demote.begin(), demote.end(), t.id) == demote.end())
                demote.push_back(t.id);
        }
    }
    if (demote.empty()) return std::nullopt;

    auto is_transfer = [&](const std::string& id) {
        auto t = net.find_transition(id);
        return t && net.transition(*t).role == TransitionRole::Transfer;
    };
    std::vector<ConflictPolicy> next = assignment;
    bool changed = false;
    for (auto& pol : next) {
        if (!singleton_groups(pol)) continue;
        auto order = pol.order();
        for (const auto& id : demote) {
            auto it = std::find(order.begin(), order.end(), id);
            if (it == order.end()) continue;
            auto below = std::find_if(it + 1, order.end(), is_transfer);
            if (below == order.end()) continue;
            std::iter_swap(it, below);
            changed = true;
        }
        pol = ConflictPolicy::priority(pol.place, order);
    }
    if (!changed) return std::nullopt;
    return next;
}

std::size_t exhaustive_size(const HybridNet& net, const Scenario& scenario) {
    std::size_t total = 1;
    for (const auto& l : layouts(net, initial_priority_assignment(net, scenario))) {
        std::size_t k = l.transfers.size();
        std::size_t n = 1;
        for (std::size_t i = 2; i <= k; ++i) n *= i;
        if (k >= 2) ++n;
        if (total > 0 && n > SIZE_MAX / total) return SIZE_MAX;
        total *= n;
    }
    return total;
}

SearchResult search_first_feasible(const HybridNet& net, const Scenario& scenario, SearchMode mode,
                                   const SearchOptions& options) {
    if (!scenario.deadline) throw ContractViolation("search requires a deadline");
    check_scenario(net, scenario);

    SearchResult out;
    out.mode = mode;
    std::optional<ScenarioResult> best;
    bool stop = false;

    auto attempt = [&](const std::vector<ConflictPolicy>& assignment, const std::string& label) {
        Scenario s = scenario;
        s.policies = merge(scenario.policies, assignment);
        ScenarioResult r = run_scenario(net, s, label);
        out.trace.push_back(summarize(label, assignment, r));
        if (r.feasible) {
            out.feasible = true;
            out.selected = out.trace.size() - 1;
            best = r;
            stop = true;
        } else if (!best || better(r.completion_time, best->completion_time)) {
            out.selected = out.trace.size() - 1;
            best = r;
        }
        return r;
    };

    auto initial = initial_priority_assignment(net, scenario);
    if (mode == SearchMode::Exhaustive) {
        std::size_t size = exhaustive_size(net, scenario);
        if (size > options.exhaustive_cap) {
            out.warnings.push_back("exhaustive search would need " + std::to_string(size) +
                                   " attempts (cap " + std::to_string(options.exhaustive_cap) +
                                   "); heuristic mode used instead");
            out.mode = SearchMode::Heuristic;
        }
    }

    if (out.mode == SearchMode::Heuristic) {
        std::vector<std::vector<ConflictPolicy>> seen;
        auto assignment = initial;
        for (std::size_t k = 1; !stop; ++k) {
            seen.push_back(assignment);
            auto r = attempt(assignment, "attempt " + std::to_string(k));
            if (stop) break;
            auto next = refine_on_accumulation(net, r, assignment);
            if (!next || std::find(seen.begin(), seen.end(), *next) != seen.end()) break;
            assignment = std::move(*next);
        }
    } else {
        std::vector<std::vector<ConflictPolicy>> choices;
        for (const auto& l : layouts(net, initial)) choices.push_back(candidates(l));
        std::vector<std::size_t> digit(choices.size(), 0);
        for (std::size_t k = 1; !stop; ++k) {
            std::vector<ConflictPolicy> assignment;
            for (std::size_t i = 0; i < choices.size(); ++i) assignment.push_back(choices[i][digit[i]]);
            attempt(assignment, "config " + std::to_string(k));
            bool carry = true;
            for (std::size_t i = choices.size(); carry && i > 0;) {
                --i;
                if (++digit[i] < choices[i].size()) carry = false;
                else digit[i] = 0;
            }
            if (carry) break;
        }
    }
    if (best) out.result = *best;
    if (!out.feasible && out.result.unavailable_connections.size())
        out.warnings.push_back("no configuration met the deadline; unavailable connections could be enabled");
    return out;
}

std::vector<ProfilePiece> sample_speed_profile(const Bounds& bounds, std::size_t intervals, const Rational& interval,
                                               std::uint64_t seed) {
    if (bounds.high < bounds.low) throw ContractViolation("bounds need low <= high");
    if (!interval.is_positive()) throw ContractViolation("interval length must be positive");
    const std::int64_t lo = (bounds.low * Rational(100)).ceil();
    const std::int64_t hi = (bounds.high * Rational(100)).floor();
    if (lo > hi) throw ContractViolation("bounds contain no multiple of 1/100");
    const auto range = static_cast<std::uint64_t>(hi - lo) + 1;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % range;

    std::mt19937_64 rng(seed);
    std::vector<ProfilePiece> out;
    for (std::size_t k = 0; k < intervals; ++k) {
        std::uint64_t u;
        do u = rng();
        while (u >= limit);
        auto value = lo + static_cast<std::int64_t>(u % range);
        out.push_back(ProfilePiece{interval * Rational(static_cast<std::int64_t>(k)), Rational(value, 100)});
    }
    return out;
}

std::vector<ComparisonRow> compare_runs(const RunHistory& history, const std::vector<std::string>& ids) {
    std::vector<ComparisonRow> rows;
    for (const auto& id : ids) {
        auto it = std::find_if(history.entries.begin(), history.entries.end(),
                               [&](const HistoryEntry& e) { return e.id == id; });
        if (it == history.entries.end()) throw NotFound("no history entry \"" + id + "\"", id);
        ComparisonRow row;
        row.id = it->id;
        row.label = it->label;
        row.feasible = it->result.feasible;
        row.completion_time = it->result.completion_time;
        row.phases = it->result.graph.phases.size();
        row.accumulating_places = it->result.accumulating_places;
        rows.push_back(std::move(row));
    }
    std::stable_sort(rows.begin(), rows.end(), [](const ComparisonRow& a, const ComparisonRow& b) {
        return better(a.completion_time, b.completion_time);
    });
    return rows;
}

std::string comparison_csv(const std::vector<ComparisonRow>& rows) {
    auto quote = [](const std::string& s) {
        if (s.find_first_of(",\"\n") == std::string::npos) return s;
        std::string q = "\"";
        for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
        return q + "\"";
    };
    std::ostringstream os;
    os << "id,label,feasible,completion_time,completion_decimal,phases,accumulating_places\n";
    for (const auto& r : rows) {
        std::string places;
        for (std::size_t i = 0; i < r.accumulating_places.size(); ++i)
            places += (i ? ";" : "") + r.accumulating_places[i];
        char dec[32] = "";
        if (r.completion_time) std::snprintf(dec, sizeof dec, "%.10g", r.completion_time->to_double());
        os << quote(r.id) << ',' << quote(r.label) << ',' << (r.feasible ? "true" : "false") << ','
           << (r.completion_time ? r.completion_time->str() : "") << ',' << dec << ',' << r.phases << ','
           << quote(places) << '\n';
    }
    return os.str();
}

}  // namespace hpn::dss
