#include "hpn/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <unordered_map>

namespace hpn::oracle {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double as_double(const ExtRational& r) { return r.is_infinite() ? kInf : r.value().to_double(); }

struct Share {
    std::size_t t;
    double weight;
};

struct Model {
    std::size_t np = 0;
    std::size_t nt = 0;
    std::vector<bool> continuous_place;
    std::vector<bool> discrete_transition;
    std::vector<std::map<std::size_t, double>> pre;   // per transition: place -> weight
    std::vector<std::map<std::size_t, double>> post;  // per transition: place -> weight
    std::vector<std::vector<std::size_t>> readers;    // per place: consuming transitions
    std::vector<std::vector<std::vector<Share>>> order;  // per place: policy groups
};

Model build(const HybridNet& net) {
    Model md;
    md.np = net.places().size();
    md.nt = net.transitions().size();
    std::unordered_map<std::string, std::size_t> pid, tid;
    for (std::size_t i = 0; i < md.np; ++i) {
        pid[net.places()[i].id] = i;
        md.continuous_place.push_back(net.places()[i].kind == NodeKind::Continuous);
    }
    for (std::size_t i = 0; i < md.nt; ++i) {
        tid[net.transitions()[i].id] = i;
        md.discrete_transition.push_back(net.transitions()[i].kind == NodeKind::Discrete);
    }
    md.pre.resize(md.nt);
    md.post.resize(md.nt);
    md.readers.resize(md.np);
    for (const auto& a : net.arcs()) {
        double w = a.weight.to_double();
        if (pid.count(a.from) && tid.count(a.to)) {
            md.pre[tid[a.to]][pid[a.from]] += w;
        } else if (tid.count(a.from) && pid.count(a.to)) {
            md.post[tid[a.from]][pid[a.to]] += w;
        }
    }
    for (std::size_t t = 0; t < md.nt; ++t)
        for (const auto& [p, w] : md.pre[t]) md.readers[p].push_back(t);
    md.order.resize(md.np);
    for (const auto& pol : net.policies()) {
        auto it = pid.find(pol.place);
        if (it == pid.end() || !md.order[it->second].empty()) continue;
        for (const auto& g : pol.groups) {
            std::vector<Share> group;
            for (const auto& m : g)
                if (tid.count(m.transition)) group.push_back({tid[m.transition], m.weight.to_double()});
            md.order[it->second].push_back(group);
        }
    }
    return md;
}

// Splits budget (flow units) among demands (speed units) at place p.
std::map<std::size_t, double> split(const Model& md, std::size_t p, double budget,
                                    const std::map<std::size_t, double>& demand) {
    std::vector<std::vector<Share>> groups;
    std::map<std::size_t, bool> listed;
    for (const auto& g : md.order[p]) {
        std::vector<Share> keep;
        for (const auto& s : g)
            if (demand.count(s.t)) {
                keep.push_back(s);
                listed[s.t] = true;
            }
        if (!keep.empty()) groups.push_back(keep);
    }
    for (const auto& [t, d] : demand)
        if (!listed.count(t)) groups.push_back({{t, 1.0}});

    std::map<std::size_t, double> got;
    for (const auto& [t, d] : demand) got[t] = 0;
    double left = budget;
    for (const auto& g : groups) {
        double need = 0;
        for (const auto& s : g) need += demand.at(s.t) * md.pre[s.t].at(p);
        if (need <= left) {
            for (const auto& s : g) got[s.t] = demand.at(s.t);
            left -= need;
            continue;
        }
        std::vector<Share> open = g;
        while (!open.empty() && left > 0) {
            double wsum = 0;
            for (const auto& s : open) wsum += s.weight * md.pre[s.t].at(p);
            double lambda = left / wsum;
            std::vector<Share> rest;
            for (const auto& s : open) {
                if (demand.at(s.t) <= lambda * s.weight) {
                    got[s.t] = demand.at(s.t);
                    left -= demand.at(s.t) * md.pre[s.t].at(p);
                } else {
                    rest.push_back(s);
                }
            }
            if (rest.size() == open.size()) {
                for (const auto& s : open) got[s.t] = lambda * s.weight;
                left = 0;
                break;
            }
            open = rest;
        }
        left = std::max(left, 0.0);
    }
    return got;
}

}  // namespace

std::vector<Sample> euler_simulate(const HybridNet& net, const Rational& dt_r, const Rational& horizon_r,
                                   const Rational& sample_every) {
    const Model md = build(net);
    const double dt = dt_r.to_double();
    const std::int64_t steps = (horizon_r / dt_r).floor();
    const std::int64_t stride = std::max<std::int64_t>(1, (sample_every / dt_r).floor());

    std::vector<double> m(md.np, 0.0);
    for (std::size_t i = 0; i < md.np; ++i) m[i] = net.initial_marking()[i].to_double();
    // discrete clocks count whole steps; -1 while disabled, -2 for an infinite delay
    std::vector<double> rate(md.nt);
    std::vector<std::int64_t> delay(md.nt, -2);
    for (std::size_t t = 0; t < md.nt; ++t) {
        const auto& timing = net.transitions()[t].timing;
        rate[t] = as_double(timing);
        if (md.discrete_transition[t] && timing.is_finite()) delay[t] = (timing.value() / dt_r).ceil();
    }
    std::vector<std::int64_t> clock(md.nt, -1);

    auto enabled = [&](std::size_t t) {
        for (const auto& [p, w] : md.pre[t])
            if (m[p] < w - 1e-9) return false;
        return true;
    };

    std::vector<Sample> out;
    for (std::int64_t k = 0; k <= steps; ++k) {
        for (int round = 0; round < 100; ++round) {
            bool any = false;
            for (std::size_t t = 0; t < md.nt; ++t) {
                if (!md.discrete_transition[t]) continue;
                if (!enabled(t)) clock[t] = -1;
                else if (clock[t] == -1) clock[t] = delay[t];
            }
            for (std::size_t t = 0; t < md.nt; ++t) {
                if (!md.discrete_transition[t] || clock[t] != 0 || !enabled(t)) continue;
                for (const auto& [p, w] : md.pre[t]) m[p] -= w;
                for (const auto& [p, w] : md.post[t]) m[p] += w;
                clock[t] = -1;
                any = true;
                for (const auto& fx : net.transitions()[t].on_fire) {
                    for (std::size_t u = 0; u < md.nt; ++u)
                        if (net.transitions()[u].id == fx.transition) rate[u] = as_double(fx.rate);
                }
            }
            if (!any) break;
        }

        if (k % stride == 0) out.push_back(Sample{static_cast<double>(k) * dt, m});
        if (k == steps) break;

        std::vector<double> cap(md.nt, 0.0);
        for (std::size_t t = 0; t < md.nt; ++t) {
            if (md.discrete_transition[t]) continue;
            double d = kInf;
            for (const auto& [p, w] : md.pre[t])
                if (!md.continuous_place[p]) d = std::min(d, m[p] / w);
            if (d == 0) cap[t] = 0;
            else if (std::isinf(d)) cap[t] = rate[t];
            else cap[t] = d * rate[t];
        }
        std::vector<double> budget(md.np, 0.0);
        for (std::size_t p = 0; p < md.np; ++p) {
            if (!md.continuous_place[p]) continue;
            double stock = m[p];
            for (auto t : md.readers[p])
                if (md.discrete_transition[t] && clock[t] != -1) stock -= md.pre[t].at(p);
            budget[p] = std::max(stock, 0.0) / dt;
        }

        // per-place splits, each member capped by its latest grant at the
        // other places, swept in place until no grant moves
        std::vector<std::map<std::size_t, double>> grant(md.np);
        for (int sweep = 0; sweep < 50; ++sweep) {
            bool moved = false;
            for (std::size_t p = 0; p < md.np; ++p) {
                if (!md.continuous_place[p]) continue;
                std::map<std::size_t, double> demand;
                for (auto t : md.readers[p]) {
                    if (md.discrete_transition[t]) continue;
                    double d = std::min(cap[t], budget[p] / md.pre[t].at(p));
                    for (const auto& [q, w] : md.pre[t])
                        if (q != p && md.continuous_place[q] && grant[q].count(t)) d = std::min(d, grant[q].at(t));
                    demand[t] = d;
                }
                if (demand.empty()) continue;
                auto got = split(md, p, budget[p], demand);
                for (const auto& [t, g] : got)
                    if (!grant[p].count(t) || std::abs(grant[p][t] - g) > 1e-12) moved = true;
                grant[p] = std::move(got);
            }
            if (!moved) break;
        }
        const auto& second = grant;

        std::vector<double> v(md.nt, 0.0);
        for (std::size_t t = 0; t < md.nt; ++t) {
            if (md.discrete_transition[t]) continue;
            double s = cap[t];
            for (const auto& [p, w] : md.pre[t])
                if (md.continuous_place[p]) s = std::min(s, second[p].at(t));
            v[t] = std::isinf(s) ? 0.0 : s;
        }
        for (std::size_t t = 0; t < md.nt; ++t) {
            if (v[t] == 0) continue;
            for (const auto& [p, w] : md.pre[t])
                if (md.continuous_place[p]) m[p] -= w * v[t] * dt;
            for (const auto& [p, w] : md.post[t])
                if (md.continuous_place[p]) m[p] += w * v[t] * dt;
        }
        for (std::size_t p = 0; p < md.np; ++p)
            if (md.continuous_place[p] && m[p] < 0 && m[p] > -1e-9) m[p] = 0;
        for (std::size_t t = 0; t < md.nt; ++t)
            if (clock[t] > 0) clock[t] -= 1;
    }
    return out;
}

}  // namespace hpn::oracle
