#include "hpn/api.hpp"

#include "hpn/errors.hpp"
#include "hpn/formats.hpp"
#include "hpn/store.hpp"

namespace hpn::api {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::Validation: return "validation";
        case ErrorCode::Conflict: return "conflict";
        case ErrorCode::NonConvergence: return "nonconvergence";
        case ErrorCode::NotFound: return "notfound";
        case ErrorCode::BadRequest: return "badrequest";
    }
    return "badrequest";
}

int ApiError::http_status() const noexcept {
    switch (code) {
        case ErrorCode::Validation:
        case ErrorCode::Conflict: return 422;
        case ErrorCode::NonConvergence: return 500;
        case ErrorCode::NotFound: return 404;
        case ErrorCode::BadRequest: return 400;
    }
    return 500;
}

json ApiError::to_json() const {
    json j;
    j["error"] = std::string(to_string(code));
    j["message"] = message;
    j["subject"] = subject;
    return j;
}

ApiError to_api_error(const std::exception& e) {
    std::string subject;
    if (const auto* he = dynamic_cast<const Error*>(&e)) subject = he->subject();
    auto make = [&](ErrorCode c) { return ApiError{c, e.what(), subject}; };
    if (dynamic_cast<const ParseError*>(&e)) return make(ErrorCode::BadRequest);
    if (dynamic_cast<const ContractViolation*>(&e)) return make(ErrorCode::BadRequest);
    if (dynamic_cast<const ValidationError*>(&e)) return make(ErrorCode::Validation);
    if (dynamic_cast<const CompositionError*>(&e)) return make(ErrorCode::Validation);
    if (dynamic_cast<const UnresolvedConflict*>(&e)) return make(ErrorCode::Conflict);
    if (dynamic_cast<const NotFound*>(&e)) return make(ErrorCode::NotFound);
    if (dynamic_cast<const nlohmann::json::exception*>(&e)) return make(ErrorCode::BadRequest);
    return make(ErrorCode::NonConvergence);
}

json validation_json(const ValidationReport& report) {
    json j;
    j["valid"] = report.ok();
    json vs = json::array();
    for (const auto& v : report.violations) {
        json e;
        e["code"] = v.code;
        e["subject"] = v.subject;
        e["message"] = v.message;
        vs.push_back(std::move(e));
    }
    j["violations"] = std::move(vs);
    return j;
}

json models_json(const std::vector<store::ModelInfo>& models) {
    json arr = json::array();
    for (const auto& m : models) {
        json e;
        e["id"] = m.id;
        e["name"] = m.name;
        e["version"] = m.version;
        e["hash"] = m.hash;
        e["storedAt"] = m.stored_at;
        arr.push_back(std::move(e));
    }
    json j;
    j["models"] = std::move(arr);
    return j;
}

json history_index_json(const std::vector<store::HistoryInfo>& entries) {
    json arr = json::array();
    for (const auto& h : entries) {
        json e;
        e["id"] = h.id;
        e["label"] = h.label;
        e["timestamp"] = h.timestamp;
        arr.push_back(std::move(e));
    }
    json j;
    j["entries"] = std::move(arr);
    return j;
}

json simulate_json(const HybridNet& net, const dss::Scenario& scenario, const std::optional<Rational>& horizon) {
    dss::Scenario s = scenario;
    if (horizon) s.horizon = horizon;
    return formats::result_to_json(net, dss::run_scenario(net, s, s.name));
}

namespace {

Response reply(int status, const json& j) { return Response{status, formats::dump(j), "application/json", {}}; }

Response error_reply(const ApiError& e) { return reply(e.http_status(), e.to_json()); }

std::vector<std::string> split_path(std::string_view path) {
    std::vector<std::string> parts;
    std::size_t i = 0;
    while (i < path.size()) {
        if (path[i] == '/') {
            ++i;
            continue;
        }
        std::size_t j = path.find('/', i);
        if (j == std::string_view::npos) j = path.size();
        parts.emplace_back(path.substr(i, j - i));
        i = j;
    }
    return parts;
}

int hex_value(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

std::string url_decode(std::string_view s) {
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '%' && i + 2 < s.size()) {
            int hi = hex_value(s[i + 1]);
            int lo = hex_value(s[i + 2]);
            if (hi >= 0 && lo >= 0) {
                out.push_back(static_cast<char>(hi * 16 + lo));
                i += 2;
                continue;
            }
        }
        out.push_back(s[i] == '+' ? ' ' : s[i]);
    }
    return out;
}

std::string query_param(std::string_view query, std::string_view key) {
    std::size_t i = 0;
    while (i <= query.size()) {
        std::size_t amp = query.find('&', i);
        if (amp == std::string_view::npos) amp = query.size();
        std::string_view kv = query.substr(i, amp - i);
        std::size_t eq = kv.find('=');
        if (url_decode(kv.substr(0, eq)) == key) return eq == std::string_view::npos ? "" : url_decode(kv.substr(eq + 1));
        i = amp + 1;
    }
    return {};
}

json parse_body(std::string_view body) {
    json j = json_io::parse_document(body, "request body");
    if (!j.is_object()) throw ParseError("request body must be a JSON object");
    return j;
}

HybridNet resolve_net(const store::ModelRepository& repo, const json& body, const std::string& id_key,
                      const std::string& inline_key) {
    if (body.contains(inline_key)) return json_io::net_from_json(body.at(inline_key));
    if (!body.contains(id_key)) throw ParseError("missing field " + id_key, id_key);
    return repo.get(json_io::read_string(body.at(id_key), id_key));
}

dss::Scenario resolve_scenario(const json& body) {
    if (!body.contains("scenario")) throw ParseError("missing field scenario", "scenario");
    return formats::scenario_from_json(body.at("scenario"));
}

dss::SearchMode parse_mode(const std::string& mode) {
    if (mode.empty() || mode == "heuristic") return dss::SearchMode::Heuristic;
    if (mode == "exhaustive") return dss::SearchMode::Exhaustive;
    throw ParseError("unknown search mode " + mode, "mode");
}

bool flag(const json& body, const char* key) { return body.contains(key) && body.at(key).is_boolean() && body.at(key).get<bool>(); }

}  // namespace

Service::Service(std::filesystem::path repo) : repo_(std::move(repo)) {}

Response Service::handle(std::string_view method, std::string_view path, std::string_view query,
                         std::string_view body) const {
    try {
        const auto parts = split_path(path);
        store::ModelRepository repo(repo_);
        auto route = [&](std::string_view m, std::size_t n, std::string_view head) {
            return method == m && parts.size() == n && !parts.empty() && parts[0] == head;
        };

        if (route("GET", 1, "nets")) return reply(200, models_json(repo.list()));
        if (route("POST", 1, "nets")) {
            json b = parse_body(body);
            json_io::require_known_keys(b, {"name", "net"}, "request");
            HybridNet net = resolve_net(repo, b, "netId", "net");
            if (!b.contains("name")) throw ParseError("missing field name", "name");
            std::string name = json_io::read_string(b.at("name"), "name");
            std::string id = repo.put(net, name);
            json j;
            j["id"] = id;
            return reply(201, j);
        }
        if (route("GET", 2, "nets")) {
            return reply(200, json_io::net_to_json(repo.get(url_decode(parts[1]))));
        }
        if (route("POST", 1, "validate")) {
            json b = parse_body(body);
            HybridNet net = resolve_net(repo, b, "netId", "net");
            return reply(200, validation_json(validate(net)));
        }
        if (route("POST", 1, "simulate")) {
            json b = parse_body(body);
            json_io::require_known_keys(b, {"netId", "net", "scenario", "horizon", "record"}, "request");
            HybridNet net = resolve_net(repo, b, "netId", "net");
            dss::Scenario s = resolve_scenario(b);
            if (b.contains("horizon")) s.horizon = json_io::read_rational(b.at("horizon"), "horizon");
            dss::ScenarioResult r = dss::run_scenario(net, s, s.name);
            Response resp = reply(200, formats::result_to_json(net, r));
            if (flag(b, "record")) resp.headers.emplace_back("X-History-Id", repo.append_history(net, r));
            return resp;
        }
        if (route("POST", 1, "search")) {
            json b = parse_body(body);
            json_io::require_known_keys(b, {"netId", "net", "scenario", "mode", "record"}, "request");
            HybridNet net = resolve_net(repo, b, "netId", "net");
            dss::Scenario s = resolve_scenario(b);
            auto mode = parse_mode(b.contains("mode") ? json_io::read_string(b.at("mode"), "mode") : "");
            dss::SearchResult r = dss::search_first_feasible(net, s, mode);
            Response resp = reply(200, formats::search_to_json(net, r));
            if (flag(b, "record") && !r.trace.empty())
                resp.headers.emplace_back("X-History-Id", repo.append_history(net, r.result));
            return resp;
        }
        if (route("GET", 1, "history")) return reply(200, history_index_json(repo.history_index()));
        if (route("GET", 2, "history")) {
            return Response{200, repo.history_document(url_decode(parts[1])), "application/json", {}};
        }
        if (route("GET", 1, "compare")) {
            std::vector<std::string> ids;
            std::string raw = query_param(query, "ids");
            std::size_t i = 0;
            while (i < raw.size()) {
                std::size_t c = raw.find(',', i);
                if (c == std::string::npos) c = raw.size();
                if (c > i) ids.push_back(raw.substr(i, c - i));
                i = c + 1;
            }
            if (ids.empty()) throw ParseError("query parameter ids is required", "ids");
            auto rows = dss::compare_runs(repo.load_history(), ids);
            if (query_param(query, "format") == "csv") return Response{200, dss::comparison_csv(rows), "text/csv", {}};
            return reply(200, formats::comparison_to_json(rows));
        }
        if (route("POST", 1, "compose")) {
            json b = parse_body(body);
            json_io::require_known_keys(b, {"a", "b", "netA", "netB", "fusion", "name"}, "request");
            HybridNet a = resolve_net(repo, b, "a", "netA");
            HybridNet c = resolve_net(repo, b, "b", "netB");
            if (!b.contains("fusion")) throw ParseError("missing field fusion", "fusion");
            HybridNet out = store::compose(a, c, store::load_fusion(b.at("fusion").dump()));
            Response resp = reply(200, json_io::net_to_json(out));
            if (b.contains("name")) resp.headers.emplace_back("X-Model-Id", repo.put(out, json_io::read_string(b.at("name"), "name")));
            return resp;
        }
        return error_reply(ApiError{ErrorCode::NotFound, "no route " + std::string(method) + " " + std::string(path),
                                    std::string(path)});
    } catch (const std::exception& e) {
        return error_reply(to_api_error(e));
    }
}

}  // namespace hpn::api
