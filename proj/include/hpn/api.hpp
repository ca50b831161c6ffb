#pragma once

// Command-line and HTTP front ends. Both render documents through
// formats::dump, so identical requests produce identical bytes.

#include <exception>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hpn/dss.hpp"
#include "hpn/json_io.hpp"
#include "hpn/net.hpp"
#include "hpn/store.hpp"

namespace hpn::api {

using json = json_io::json;

enum class ErrorCode { Validation, Conflict, NonConvergence, NotFound, BadRequest };

[[nodiscard]] std::string_view to_string(ErrorCode code) noexcept;

struct ApiError {
    ErrorCode code = ErrorCode::BadRequest;
    std::string message;
    std::string subject;

    /// 422 validation/conflict, 500 nonconvergence, 404 notfound, 400 badrequest.
    [[nodiscard]] int http_status() const noexcept;
    [[nodiscard]] json to_json() const;
};

/// Maps every exception type thrown by the library to one code.
[[nodiscard]] ApiError to_api_error(const std::exception& e);

[[nodiscard]] json validation_json(const ValidationReport& report);

[[nodiscard]] json models_json(const std::vector<store::ModelInfo>& models);
[[nodiscard]] json history_index_json(const std::vector<store::HistoryInfo>& entries);

/// Document returned by `simulate` and POST /simulate.
[[nodiscard]] json simulate_json(const HybridNet& net, const dss::Scenario& scenario,
                                 const std::optional<Rational>& horizon = std::nullopt);

struct Response {
    int status = 200;
    std::string body;
    std::string content_type = "application/json";
    std::vector<std::pair<std::string, std::string>> headers;
};

/// Request dispatcher behind the HTTP server; usable without a socket.
class Service {
public:
    explicit Service(std::filesystem::path repo);

    [[nodiscard]] Response handle(std::string_view method, std::string_view path, std::string_view query,
                                  std::string_view body) const;

private:
    std::filesystem::path repo_;
};

/// cpp-httplib server forwarding every request to a Service.
class HttpServer {
public:
    explicit HttpServer(Service service);
    ~HttpServer();
    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    /// Port 0 picks a free port. Returns the bound port, or -1.
    int bind(const std::string& host, int port);
    /// Blocks until stop() is called from another thread.
    void run();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Exit codes: 0 success, 1 infeasible or invalid input, 2 engine error,
/// 64 usage error.
int cli_main(int argc, char** argv);

}  // namespace hpn::api
