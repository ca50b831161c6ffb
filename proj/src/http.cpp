#include <httplib.h>

#include "hpn/api.hpp"

namespace hpn::api {

struct HttpServer::Impl {
    Service service;
    httplib::Server server;

    explicit Impl(Service s) : service(std::move(s)) {}
};

namespace {

std::string query_of(const httplib::Request& req) {
    auto q = req.target.find('?');
    return q == std::string::npos ? std::string() : req.target.substr(q + 1);
}

}  // namespace

HttpServer::HttpServer(Service service) : impl_(std::make_unique<Impl>(std::move(service))) {
    auto forward = [this](const httplib::Request& req, httplib::Response& res) {
        Response r = impl_->service.handle(req.method, req.path, query_of(req), req.body);
        res.status = r.status;
        for (const auto& [k, v] : r.headers) res.set_header(k, v);
        res.set_content(r.body, r.content_type);
    };
    impl_->server.Get(".*", forward);
    impl_->server.Post(".*", forward);
    impl_->server.Put(".*", forward);
    impl_->server.Delete(".*", forward);
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
    if (port == 0) return impl_->server.bind_to_any_port(host);
    return impl_->server.bind_to_port(host, port) ? port : -1;
}

void HttpServer::run() { impl_->server.listen_after_bind(); }

void HttpServer::stop() {
    if (impl_) impl_->server.stop();
}

}  // namespace hpn::api
