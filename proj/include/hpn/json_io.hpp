#pragma once

#include <string>
#include <string_view>

#include <json.hpp>

#include "hpn/net.hpp"

namespace hpn::json_io {

using json = nlohmann::ordered_json;

/// Rationals cross every document boundary as "p/q" strings; "inf" for infinity.
[[nodiscard]] json rational(const Rational& r);
[[nodiscard]] json rational(const ExtRational& r);

/// Display value rounded to 10 significant digits, accompanying exact fields.
[[nodiscard]] json decimal(const Rational& r);
[[nodiscard]] json decimal(const ExtRational& r);

/// Field readers. `path` is used in ParseError messages ("transitions[3].rate").
[[nodiscard]] Rational read_rational(const json& j, const std::string& path);
[[nodiscard]] ExtRational read_ext_rational(const json& j, const std::string& path);
[[nodiscard]] std::string read_string(const json& j, const std::string& path);

/// Rejects keys outside `allowed` with a ParseError naming the field.
void require_known_keys(const json& object, std::initializer_list<std::string_view> allowed,
                        const std::string& path);

/// Parses text; syntax errors become ParseError with line and column.
[[nodiscard]] json parse_document(std::string_view bytes, std::string_view what);

[[nodiscard]] json policy_to_json(const ConflictPolicy& policy);
[[nodiscard]] ConflictPolicy policy_from_json(const json& j, const std::string& path);

[[nodiscard]] json net_to_json(const HybridNet& net);
[[nodiscard]] HybridNet net_from_json(const json& j);

}  // namespace hpn::json_io
