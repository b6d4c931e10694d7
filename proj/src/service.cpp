#include "revealq/service.hpp"

#include <functional>

#include "httplib.h"
#include "revealq/errors.hpp"

namespace revealq {
namespace {

void send_json(httplib::Response& res, int status, const Json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, const std::string& code, const std::string& message) {
    send_json(res, http_status_for(code), Json{{"error", Json{{"code", code}, {"message", message}}}});
}

Json parse_body(const httplib::Request& req) {
    if (req.body.empty()) {
        return Json::object();
    }
    try {
        return Json::parse(req.body);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error("bad_json", std::string("request body is not valid JSON: ") + e.what());
    }
}

// Runs a handler and turns library errors into structured 4xx/5xx replies.
void guarded(httplib::Response& res, const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        send_error(res, e.code(), e.what());
    } catch (const std::exception& e) {
        send_error(res, "internal", e.what());
    }
}

}  // namespace

int http_status_for(const std::string& code) {
    if (code == "validation_error" || code == "config_error" || code == "bad_json") return 400;
    if (code == "not_found" || code == "debug_disabled") return 404;
    if (code == "conflict") return 409;
    if (code == "unsupported_question" || code == "degenerate_evidence") return 422;
    return 500;
}

struct Service::Impl {
    explicit Impl(ServiceOptions o)
        : options(std::move(o)), store(options.sessions_dir, options.limits, options.ttl_seconds) {
        routes();
    }

    void routes();

    ServiceOptions options;
    SessionStore store;
    httplib::Server server;
};

void Service::Impl::routes() {
    server.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
    server.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) {
        res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
        res.set_header("Access-Control-Allow-Headers", "Content-Type");
        res.status = 204;
    });

    server.Get("/healthz", [this](const httplib::Request&, httplib::Response& res) {
        send_json(res, 200, Json{{"status", "ok"}, {"sessions", store.size()}});
    });

    server.Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            const SessionSettings settings = session_settings_from_json(parse_body(req));
            const std::string id = store.create(settings);
            send_json(res, 201, Json{{"session_id", id}});
        });
    });

    server.Get(R"(/sessions/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            send_json(res, 200, store.with_session(req.matches[1], [](Session& s) { return s.state_payload(); }));
        });
    });

    server.Get(R"(/sessions/([^/]+)/question)", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            const Json body = store.with_session(req.matches[1], [](Session& s) {
                const std::optional<Question> q = s.next_question(unix_now());
                if (!q) {
                    return Json{{"complete", true}, {"index", nullptr}, {"round", s.answered()},
                                {"max_rounds", s.limits().max_rounds}, {"status", to_string(s.status())}};
                }
                return s.question_payload(*q);
            });
            send_json(res, 200, body);
        });
    });

    server.Post(R"(/sessions/([^/]+)/answer)", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            const Json body = parse_body(req);
            if (!body.is_object() || !body.contains("index") || !is_non_negative_integer(body["index"])) {
                throw ValidationError("index is required and must be a positive integer");
            }
            const std::size_t index = body["index"].get<std::size_t>();
            const Answer answer = answer_from_json(body);
            send_json(res, 200, store.with_session(req.matches[1], [&](Session& s) {
                s.submit_answer(index, answer, unix_now());
                return s.belief_payload();
            }));
        });
    });

    server.Post(R"(/sessions/([^/]+)/deploy)", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            send_json(res, 200, store.with_session(req.matches[1], [](Session& s) {
                s.deploy(unix_now());
                Json out = s.belief_payload();
                return Json{{"status", to_string(s.status())}, {"round", s.answered()}, {"z_star", out["z_star"]},
                            {"preview_waypoints", out["preview_waypoints"]}};
            }));
        });
    });

    server.Get(R"(/sessions/([^/]+)/debug)", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            if (!options.debug_panel) {
                throw Error("debug_disabled", "the debug panel is disabled; start the service with --debug-panel");
            }
            send_json(res, 200, store.with_session(req.matches[1], [](Session& s) { return s.debug_payload(); }));
        });
    });

    server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
        if (res.body.empty()) {
            const std::string code = res.status == 404 ? "not_found" : "http_error";
            res.set_content(Json{{"error", Json{{"code", code}, {"message", "no such route"}}}}.dump(),
                            "application/json");
        }
    });
}

Service::Service(ServiceOptions options) : impl_(std::make_unique<Impl>(std::move(options))) {}

Service::~Service() = default;

int Service::bind(const std::string& host, int port) {
    if (port == 0) {
        const int bound = impl_->server.bind_to_any_port(host);
        if (bound <= 0) {
            throw Error("bind_failed", "cannot bind " + host);
        }
        return bound;
    }
    if (!impl_->server.bind_to_port(host, port)) {
        throw Error("bind_failed", "cannot bind " + host + ":" + std::to_string(port));
    }
    return port;
}

void Service::run() { impl_->server.listen_after_bind(); }

void Service::stop() { impl_->server.stop(); }

SessionStore& Service::store() { return impl_->store; }

}  // namespace revealq
