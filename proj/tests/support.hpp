#pragma once

#include <stdlib.h>

#include <filesystem>
#include <stdexcept>
#include <fstream>
#include <sstream>
#include <string>

#include "hpn/dss.hpp"
#include "hpn/formats.hpp"
#include "hpn/net.hpp"

namespace hpn::test {

inline std::filesystem::path fixture_path(const std::string& name) {
    return std::filesystem::path(HPN_FIXTURES_DIR) / name;
}

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

inline HybridNet fixture_net(const std::string& name = "case_study.hpn.json") {
    return load_net(read_file(fixture_path(name)));
}

inline dss::Scenario fixture_scenario(const std::string& name) {
    return formats::load_scenario(read_file(fixture_path("scenarios/" + name)));
}

inline Rational R(std::int64_t n, std::int64_t d = 1) { return Rational(n, d); }

inline ExtRational inf() { return ExtRational::infinity(); }

/// Assembles nets in code.
class Builder {
public:
    Builder& cplace(const std::string& id, Rational m = 0) { return place(id, NodeKind::Continuous, m); }
    Builder& dplace(const std::string& id, Rational m = 0) { return place(id, NodeKind::Discrete, m); }

    Builder& ctrans(const std::string& id, ExtRational rate, TransitionRole role = TransitionRole::Other) {
        Transition t;
        t.id = id;
        t.kind = NodeKind::Continuous;
        t.timing = rate;
        t.role = role;
        parts_.transitions.push_back(std::move(t));
        return *this;
    }
    Builder& dtrans(const std::string& id, Rational delay, std::vector<RateAssignment> on_fire = {}) {
        Transition t;
        t.id = id;
        t.kind = NodeKind::Discrete;
        t.timing = ExtRational(delay);
        t.on_fire = std::move(on_fire);
        parts_.transitions.push_back(std::move(t));
        return *this;
    }
    Builder& arc(const std::string& from, const std::string& to, Rational w = 1) {
        parts_.arcs.push_back(Arc{from, to, w});
        return *this;
    }
    Builder& policy(ConflictPolicy p) {
        parts_.policies.push_back(std::move(p));
        return *this;
    }
    Builder& mark(const std::string& id, Rational m) {
        for (auto& [pid, value] : parts_.initial_marking)
            if (pid == id) {
                value = m;
                return *this;
            }
        parts_.initial_marking.emplace_back(id, m);
        return *this;
    }

    [[nodiscard]] NetParts& parts() { return parts_; }
    [[nodiscard]] HybridNet build() const { return HybridNet(parts_); }

private:
    Builder& place(const std::string& id, NodeKind kind, Rational m) {
        parts_.places.push_back(Place{id, kind, {}});
        parts_.initial_marking.emplace_back(id, m);
        return *this;
    }

    NetParts parts_;
};

}  // namespace hpn::test

namespace hpn::test {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir() {
        std::string tmpl = (std::filesystem::temp_directory_path() / "hpn-test-XXXXXX").string();
        if (::mkdtemp(tmpl.data()) == nullptr) throw std::runtime_error("mkdtemp failed");
        path_ = tmpl;
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    [[nodiscard]] const std::filesystem::path& path() const noexcept { return path_; }

private:
    std::filesystem::path path_;
};

}  // namespace hpn::test
