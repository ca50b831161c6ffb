#include "hpn/store.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "hpn/errors.hpp"
#include "hpn/formats.hpp"
#include "hpn/json_io.hpp"

namespace hpn::store {

namespace fs = std::filesystem;
using json = json_io::json;

namespace {

class FileLock {
public:
    FileLock(const fs::path& path, bool exclusive) {
        fd_ = ::open(path.c_str(), O_CREAT | O_RDWR | O_CLOEXEC, 0644);
        if (fd_ < 0) throw Error("cannot open lock file " + path.string());
        if (::flock(fd_, exclusive ? LOCK_EX : LOCK_SH) != 0) {
            ::close(fd_);
            throw Error("cannot lock " + path.string());
        }
    }
    ~FileLock() {
        ::flock(fd_, LOCK_UN);
        ::close(fd_);
    }
    FileLock(const FileLock&) = delete;
    FileLock& operator=(const FileLock&) = delete;

private:
    int fd_ = -1;
};

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw NotFound("cannot read " + path.string(), path.filename().string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_atomic(const fs::path& path, const std::string& bytes) {
    fs::path tmp = path;
    tmp += ".tmp." + std::to_string(::getpid());
    int fd = ::open(tmp.c_str(), O_CREAT | O_WRONLY | O_TRUNC | O_CLOEXEC, 0644);
    if (fd < 0) throw Error("cannot write " + tmp.string());
    const char* p = bytes.data();
    std::size_t left = bytes.size();
    while (left > 0) {
        ssize_t n = ::write(fd, p, left);
        if (n < 0) {
            ::close(fd);
            fs::remove(tmp);
            throw Error("write failed for " + tmp.string());
        }
        p += n;
        left -= static_cast<std::size_t>(n);
    }
    ::fsync(fd);
    ::close(fd);
    fs::rename(tmp, path);
}

std::string utc_now() {
    auto now = std::chrono::system_clock::now();
    auto secs = std::chrono::system_clock::to_time_t(now);
    auto micros = std::chrono::duration_cast<std::chrono::microseconds>(now.time_since_epoch()).count() % 1000000;
    std::tm tm{};
    gmtime_r(&secs, &tm);
    char buf[40];
    std::strftime(buf, sizeof buf, "%Y%m%dT%H%M%S", &tm);
    char out[56];
    std::snprintf(out, sizeof out, "%s.%06lldZ", buf, static_cast<long long>(micros));
    return out;
}

std::string slug(const std::string& label) {
    std::string s;
    for (char c : label) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
        bool ok = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9');
        if (ok) {
            s += c;
        } else if (!s.empty() && s.back() != '-') {
            s += '-';
        }
    }
    while (!s.empty() && s.back() == '-') s.pop_back();
    if (s.empty()) s = "run";
    return s.substr(0, 64);
}

json read_index(const fs::path& root) {
    fs::path path = root / "index.json";
    if (!fs::exists(path)) return json{{"models", json::array()}, {"history", json::array()}};
    return json_io::parse_document(read_file(path), "index.json");
}

ModelInfo model_info(const json& e) {
    ModelInfo m;
    m.id = e.at("id").get<std::string>();
    m.name = e.at("name").get<std::string>();
    m.version = e.at("version").get<int>();
    m.hash = e.at("hash").get<std::string>();
    m.stored_at = e.at("storedAt").get<std::string>();
    return m;
}

}  // namespace

std::string sha256_hex(std::string_view bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw Error("SHA-256 computation failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 15];
    }
    return out;
}

ModelRepository::ModelRepository(fs::path root) : root_(std::move(root)) {
    fs::create_directories(root_ / "models");
    fs::create_directories(root_ / "history");
}

std::string ModelRepository::put(const HybridNet& net, const std::string& name) {
    if (name.empty() || name.find('@') != std::string::npos)
        throw ContractViolation("model name must be non-empty and must not contain '@'", name);
    std::string bytes = save_net(net);
    std::string hash = sha256_hex(bytes);

    FileLock lock(root_ / ".lock", true);
    json index = read_index(root_);
    fs::path model = root_ / "models" / (hash + ".hpn.json");
    if (!fs::exists(model)) write_atomic(model, bytes);
    int version = 1;
    for (const auto& e : index["models"])
        if (e.at("name").get<std::string>() == name) version = std::max(version, e.at("version").get<int>() + 1);
    std::string id = name + "@" + std::to_string(version);
    index["models"].push_back(
        json{{"id", id}, {"name", name}, {"version", version}, {"hash", hash}, {"storedAt", utc_now()}});
    write_atomic(root_ / "index.json", index.dump(2) + "\n");
    return id;
}

HybridNet ModelRepository::get(const std::string& id) const {
    FileLock lock(root_ / ".lock", false);
    json index = read_index(root_);
    for (const auto& e : index["models"]) {
        if (e.at("id").get<std::string>() == id || e.at("hash").get<std::string>() == id)
            return load_net(read_file(root_ / "models" / (e.at("hash").get<std::string>() + ".hpn.json")));
    }
    throw NotFound("no model \"" + id + "\"", id);
}

std::vector<ModelInfo> ModelRepository::list() const {
    FileLock lock(root_ / ".lock", false);
    std::vector<ModelInfo> out;
    const json index = read_index(root_);
    for (const auto& e : index["models"]) out.push_back(model_info(e));
    return out;
}

std::string ModelRepository::append_history(const HybridNet& net, const dss::ScenarioResult& result) {
    dss::HistoryEntry entry;
    entry.label = result.label;
    entry.result = result;
    json doc_result = formats::result_to_json(net, result);

    FileLock lock(root_ / ".lock", true);
    json index = read_index(root_);
    entry.timestamp = utc_now();
    std::string base = entry.timestamp + "-" + slug(result.label);
    std::string id = base;
    for (int n = 2; fs::exists(root_ / "history" / (id + ".json")); ++n) id = base + "-" + std::to_string(n);
    entry.id = id;
    write_atomic(root_ / "history" / (id + ".json"), formats::dump(formats::history_entry_to_json(entry, doc_result)));
    index["history"].push_back(json{{"id", id}, {"label", entry.label}, {"timestamp", entry.timestamp}});
    write_atomic(root_ / "index.json", index.dump(2) + "\n");
    return id;
}

std::vector<HistoryInfo> ModelRepository::history_index() const {
    FileLock lock(root_ / ".lock", false);
    std::vector<HistoryInfo> out;
    const json index = read_index(root_);
    for (const auto& e : index["history"])
        out.push_back(HistoryInfo{e.at("id").get<std::string>(), e.at("label").get<std::string>(),
                                  e.at("timestamp").get<std::string>()});
    return out;
}

std::string ModelRepository::history_document(const std::string& id) const {
    FileLock lock(root_ / ".lock", false);
    const json index = read_index(root_);
    for (const auto& e : index["history"])
        if (e.at("id").get<std::string>() == id) return read_file(root_ / "history" / (id + ".json"));
    throw NotFound("no history entry \"" + id + "\"", id);
}

dss::HistoryEntry ModelRepository::history_entry(const std::string& id) const {
    return formats::history_entry_from_json(json_io::parse_document(history_document(id), "history entry"));
}

dss::RunHistory ModelRepository::load_history() const {
    dss::RunHistory h;
    for (const auto& info : history_index()) h.entries.push_back(history_entry(info.id));
    return h;
}

FusionMap load_fusion(std::string_view bytes) {
    json j = json_io::parse_document(bytes, "fusion map");
    json_io::require_known_keys(j, {"places", "transitions", "policies", "prefix"}, "");
    FusionMap f;
    auto pairs = [&](const char* key, std::vector<std::pair<std::string, std::string>>& out) {
        auto it = j.find(key);
        if (it == j.end()) return;
        if (!it->is_array()) throw ParseError(std::string(key) + ": expected an array", key);
        for (std::size_t i = 0; i < it->size(); ++i) {
            std::string path = std::string(key) + "[" + std::to_string(i) + "]";
            const auto& e = (*it)[i];
            json_io::require_known_keys(e, {"a", "b"}, path);
            if (!e.contains("a") || !e.contains("b")) throw ParseError(path + ": needs both \"a\" and \"b\"", path);
            out.emplace_back(json_io::read_string(e["a"], path + ".a"), json_io::read_string(e["b"], path + ".b"));
        }
    };
    pairs("places", f.places);
    pairs("transitions", f.transitions);
    if (auto it = j.find("policies"); it != j.end()) {
        if (!it->is_array()) throw ParseError("policies: expected an array", "policies");
        for (std::size_t i = 0; i < it->size(); ++i)
            f.policies.push_back(json_io::policy_from_json((*it)[i], "policies[" + std::to_string(i) + "]"));
    }
    if (j.contains("prefix")) f.prefix = json_io::read_string(j["prefix"], "prefix");
    return f;
}

std::string save_fusion(const FusionMap& f) {
    json j;
    auto pairs = [](const std::vector<std::pair<std::string, std::string>>& v) {
        json a = json::array();
        for (const auto& [x, y] : v) a.push_back(json{{"a", x}, {"b", y}});
        return a;
    };
    j["places"] = pairs(f.places);
    j["transitions"] = pairs(f.transitions);
    json pols = json::array();
    for (const auto& p : f.policies) pols.push_back(json_io::policy_to_json(p));
    j["policies"] = std::move(pols);
    j["prefix"] = f.prefix;
    return j.dump(2) + "\n";
}

HybridNet compose(const HybridNet& a, const HybridNet& b, const FusionMap& fusion) {
    if (fusion.prefix.empty()) throw CompositionError("fusion prefix must not be empty");
    std::map<std::string, std::string> rename;  // b id -> composed id
    std::set<std::string> fused_a_places, fused_a, fused_b;

    for (const auto& [pa, pb] : fusion.places) {
        auto ia = a.find_place(pa);
        auto ib = b.find_place(pb);
        std::string pair = pa + "/" + pb;
        if (!ia || !ib) throw CompositionError("fusion pair " + pair + " names an unknown place", pair);
        if (!fused_a.insert(pa).second || !fused_b.insert(pb).second)
            throw CompositionError("fusion pair " + pair + " reuses a node", pair);
        if (a.place(*ia).kind != b.place(*ib).kind) throw CompositionError("kind mismatch in fusion of " + pair, pair);
        if (a.initial_marking()[*ia] != b.initial_marking()[*ib])
            throw CompositionError("marking mismatch in fusion of " + pair, pair);
        fused_a_places.insert(pa);
        rename[pb] = pa;
    }
    for (const auto& [ta, tb] : fusion.transitions) {
        auto ia = a.find_transition(ta);
        auto ib = b.find_transition(tb);
        std::string pair = ta + "/" + tb;
        if (!ia || !ib) throw CompositionError("fusion pair " + pair + " names an unknown transition", pair);
        if (!fused_a.insert(ta).second || !fused_b.insert(tb).second)
            throw CompositionError("fusion pair " + pair + " reuses a node", pair);
        const auto& x = a.transition(*ia);
        const auto& y = b.transition(*ib);
        if (x.kind != y.kind) throw CompositionError("kind mismatch in fusion of " + pair, pair);
        if (x.timing != y.timing) throw CompositionError("timing mismatch in fusion of " + pair, pair);
        rename[tb] = ta;
    }

    std::set<std::string> taken;
    for (const auto& p : a.places()) taken.insert(p.id);
    for (const auto& t : a.transitions()) taken.insert(t.id);
    auto fresh = [&](const std::string& id) {
        std::string out = id;
        while (taken.count(out)) out = fusion.prefix + out;
        taken.insert(out);
        return out;
    };
    for (const auto& p : b.places())
        if (!rename.count(p.id)) rename[p.id] = fresh(p.id);
    for (const auto& t : b.transitions())
        if (!rename.count(t.id)) rename[t.id] = fresh(t.id);
    auto id_of = [&](const std::string& id) {
        auto it = rename.find(id);
        return it == rename.end() ? id : it->second;
    };

    NetParts parts;
    parts.places = a.places();
    parts.transitions = a.transitions();
    for (const auto& p : b.places()) {
        if (fused_b.count(p.id)) continue;
        Place q = p;
        q.id = rename[p.id];
        parts.places.push_back(std::move(q));
    }
    for (const auto& t : b.transitions()) {
        if (fused_b.count(t.id)) continue;
        Transition u = t;
        u.id = rename[t.id];
        for (auto& effect : u.on_fire) effect.transition = id_of(effect.transition);
        parts.transitions.push_back(std::move(u));
    }

    std::map<std::pair<std::string, std::string>, Rational> arc_weight;
    auto add_arc = [&](const Arc& arc) {
        auto key = std::make_pair(arc.from, arc.to);
        auto it = arc_weight.find(key);
        if (it != arc_weight.end()) {
            if (it->second != arc.weight)
                throw CompositionError("conflicting weights for arc " + arc.from + " -> " + arc.to, arc.from);
            return;
        }
        arc_weight.emplace(key, arc.weight);
        parts.arcs.push_back(arc);
    };
    for (const auto& arc : a.arcs()) add_arc(arc);
    for (const auto& arc : b.arcs()) add_arc(Arc{id_of(arc.from), id_of(arc.to), arc.weight});

    for (std::size_t p = 0; p < a.place_count(); ++p)
        parts.initial_marking.emplace_back(a.place(p).id, a.initial_marking()[p]);
    for (std::size_t p = 0; p < b.place_count(); ++p)
        if (!fused_b.count(b.place(p).id)) parts.initial_marking.emplace_back(rename[b.place(p).id], b.initial_marking()[p]);

    std::set<std::string> redeclared;
    for (const auto& pol : fusion.policies) redeclared.insert(pol.place);
    auto keep = [&](const ConflictPolicy& pol, const std::string& place) {
        if (fused_a_places.count(place)) {
            if (!redeclared.count(place))
                throw CompositionError("policy conflict: fused place " + place +
                                           " had a conflict policy that must be re-declared in the fusion map",
                                       place);
            return;
        }
        ConflictPolicy q = pol;
        q.place = place;
        for (auto& g : q.groups)
            for (auto& m : g) m.transition = id_of(m.transition);
        parts.policies.push_back(std::move(q));
    };
    for (const auto& pol : a.policies()) {
        if (!fused_a_places.count(pol.place)) {
            parts.policies.push_back(pol);
        } else if (!redeclared.count(pol.place)) {
            keep(pol, pol.place);
        }
    }
    for (const auto& pol : b.policies()) keep(pol, id_of(pol.place));
    for (const auto& pol : fusion.policies) {
        if (!fused_a_places.count(pol.place))
            throw CompositionError("fusion map policy for " + pol.place + " is not on a fused place", pol.place);
        parts.policies.push_back(pol);
    }

    HybridNet out(std::move(parts));
    auto report = validate(out);
    if (!report.ok()) throw CompositionError("composed net is invalid: " + report.summary(), report.violations.front().subject);
    return out;
}

}  // namespace hpn::store
