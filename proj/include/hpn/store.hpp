#pragma once

// File-based model database, run history and net composition.
//
// Layout under the repository root:
//   index.json                      models and history entries in append order
//   models/<sha256>.hpn.json        canonical net files, content addressed
//   history/<timestamp>-<label>.json
//   .lock                           advisory lock taken by every access

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hpn/dss.hpp"
#include "hpn/net.hpp"

namespace hpn::store {

struct ModelInfo {
    /// "<name>@<version>", versions counting from 1 per name.
    std::string id;
    std::string name;
    int version = 1;
    /// Hex SHA-256 of the canonical net file.
    std::string hash;
    std::string stored_at;

    friend bool operator==(const ModelInfo&, const ModelInfo&) = default;
};

struct HistoryInfo {
    std::string id;
    std::string label;
    std::string timestamp;

    friend bool operator==(const HistoryInfo&, const HistoryInfo&) = default;
};

[[nodiscard]] std::string sha256_hex(std::string_view bytes);

class ModelRepository {
public:
    /// Creates the directory layout when missing.
    explicit ModelRepository(std::filesystem::path root);

    [[nodiscard]] const std::filesystem::path& root() const noexcept { return root_; }

    /// Stores a valid net (ValidationError otherwise) and returns its id.
    std::string put(const HybridNet& net, const std::string& name);
    /// Accepts a model id or a full content hash. NotFound for unknown ids.
    [[nodiscard]] HybridNet get(const std::string& id) const;
    [[nodiscard]] std::vector<ModelInfo> list() const;

    /// `net` is the base net the result's scenario was applied to.
    std::string append_history(const HybridNet& net, const dss::ScenarioResult& result);
    [[nodiscard]] dss::RunHistory load_history() const;
    [[nodiscard]] dss::HistoryEntry history_entry(const std::string& id) const;
    [[nodiscard]] std::vector<HistoryInfo> history_index() const;
    /// Raw stored document of a history entry.
    [[nodiscard]] std::string history_document(const std::string& id) const;

private:
    std::filesystem::path root_;
};

struct FusionMap {
    /// (node of a, node of b) pairs.
    std::vector<std::pair<std::string, std::string>> places;
    std::vector<std::pair<std::string, std::string>> transitions;
    /// Policies for fused places, using the composed ids.
    std::vector<ConflictPolicy> policies;
    /// Prepended to ids of b that would collide with ids of a.
    std::string prefix = "b.";
};

[[nodiscard]] FusionMap load_fusion(std::string_view bytes);
[[nodiscard]] std::string save_fusion(const FusionMap& f);

/// Union of a and b with fused pairs identified under a's ids. Throws
/// CompositionError naming the offending pair for kind, marking or timing
/// mismatches, conflicting arcs, a fused place whose policy was not
/// re-declared, or a composed net that fails validation.
[[nodiscard]] HybridNet compose(const HybridNet& a, const HybridNet& b, const FusionMap& fusion);

}  // namespace hpn::store
