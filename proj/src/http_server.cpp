#include "shelf/service.hpp"

#include "shelf/error.hpp"

#include <httplib.h>

namespace shelf {

namespace {

void reply(httplib::Response& res, const ApiResponse& r) {
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
}

std::optional<nlohmann::json> body_json(const httplib::Request& req, httplib::Response& res) {
    try {
        return nlohmann::json::parse(req.body);
    } catch (const nlohmann::json::exception&) {
        reply(res, {400, {{"error", "malformed JSON body"}}});
        return std::nullopt;
    }
}

}  // namespace

struct HttpServer::Impl {
    explicit Impl(Service& s) : service(s) {}
    Service& service;
    httplib::Server server;
};

HttpServer::HttpServer(Service& service) : impl_(std::make_unique<Impl>(service)) {
    auto& srv = impl_->server;
    Service& svc = impl_->service;

    srv.Post("/classify", [&svc](const httplib::Request& req, httplib::Response& res) {
        if (!req.has_file("image")) return reply(res, {400, {{"error", "expected multipart field 'image'"}}});
        const auto file = req.get_file_value("image");
        std::optional<double> tau;
        std::string tau_text;
        if (req.has_file("tau")) tau_text = req.get_file_value("tau").content;
        else if (req.has_param("tau")) tau_text = req.get_param_value("tau");
        if (!tau_text.empty()) {
            try {
                std::size_t used = 0;
                tau = std::stod(tau_text, &used);
                if (used != tau_text.size()) throw std::invalid_argument("trailing");
            } catch (const std::exception&) {
                return reply(res, {400, {{"error", "tau must be a number"}}});
            }
        }
        const auto* data = reinterpret_cast<const std::uint8_t*>(file.content.data());
        reply(res, svc.classify(std::span(data, file.content.size()), tau));
    });
    srv.Get(R"(/words/([^/]+))", [&svc](const httplib::Request& req, httplib::Response& res) {
        reply(res, svc.word(req.matches[1]));
    });
    srv.Post("/shopping-list", [&svc](const httplib::Request& req, httplib::Response& res) {
        if (const auto body = body_json(req, res)) reply(res, svc.create_list(*body));
    });
    srv.Get(R"(/shopping-list/([^/]+))", [&svc](const httplib::Request& req, httplib::Response& res) {
        reply(res, svc.get_list(req.matches[1]));
    });
    srv.Patch(R"(/shopping-list/([^/]+)/entries/([^/]+))", [&svc](const httplib::Request& req, httplib::Response& res) {
        if (const auto body = body_json(req, res)) reply(res, svc.patch_entry(req.matches[1], req.matches[2], *body));
    });
    srv.Get("/label-queue", [&svc](const httplib::Request& req, httplib::Response& res) {
        reply(res, svc.label_queue(req.has_param("k") ? req.get_param_value("k") : ""));
    });
    srv.Post(R"(/label-queue/([^/]+))", [&svc](const httplib::Request& req, httplib::Response& res) {
        if (const auto body = body_json(req, res)) reply(res, svc.submit_label(req.matches[1], *body));
    });
    srv.Post("/retrain", [&svc](const httplib::Request&, httplib::Response& res) { reply(res, svc.retrain()); });
    srv.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        std::string what = "internal error";
        try {
            std::rethrow_exception(ep);
        } catch (const std::exception& e) {
            what = e.what();
        } catch (...) {
        }
        reply(res, {500, {{"error", what}}});
    });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
    if (port == 0) {
        const int bound = impl_->server.bind_to_any_port(host);
        if (bound < 0) throw Error(ErrorCode::Io, "cannot bind " + host);
        return bound;
    }
    if (!impl_->server.bind_to_port(host, port))
        throw Error(ErrorCode::Io, "cannot bind " + host + ":" + std::to_string(port));
    return port;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }

void HttpServer::stop() {
    if (impl_) impl_->server.stop();
}

}  // namespace shelf
