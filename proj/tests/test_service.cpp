#include <filesystem>
#include <thread>
#include <unistd.h>

#include "doctest.h"
#include "httplib.h"
#include "revealq/service.hpp"

using namespace revealq;
namespace fs = std::filesystem;

namespace {

struct RunningService {
    fs::path dir;
    std::unique_ptr<Service> service;
    std::thread thread;
    int port = 0;

    explicit RunningService(bool debug_panel = true) {
        static int counter = 0;
        dir = fs::temp_directory_path() /
              ("revealq-service-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        fs::remove_all(dir);
        ServiceOptions options;
        options.sessions_dir = dir;
        options.limits.particles = 80;
        options.limits.human_candidates = 50;
        options.limits.candidates = 20;
        options.debug_panel = debug_panel;
        service = std::make_unique<Service>(options);
        port = service->bind("127.0.0.1", 0);
        thread = std::thread([this] { service->run(); });
    }
    ~RunningService() {
        service->stop();
        thread.join();
        fs::remove_all(dir);
    }

    httplib::Client client() const {
        httplib::Client c("127.0.0.1", port);
        c.set_connection_timeout(5);
        return c;
    }
};

Json body_of(const httplib::Result& r) {
    REQUIRE(r);
    return Json::parse(r->body);
}

std::string create_session(httplib::Client& c, const Json& body) {
    const auto r = c.Post("/sessions", body.dump(), "application/json");
    REQUIRE(r);
    REQUIRE(r->status == 201);
    return body_of(r)["session_id"].get<std::string>();
}

}  // namespace

TEST_CASE("health check answers") {
    RunningService svc;
    auto c = svc.client();
    const auto r = c.Get("/healthz");
    REQUIRE(r);
    CHECK(r->status == 200);
    CHECK(body_of(r)["status"] == "ok");
    CHECK(r->get_header_value("Access-Control-Allow-Origin") == "*");
}

TEST_CASE("a client can teach and deploy over HTTP") {
    RunningService svc;
    auto c = svc.client();
    const std::string id = create_session(
        c, Json{{"environment", "tabletop"}, {"strategy", "combined"}, {"lambda", 1.0}, {"k", 3}, {"seed", 5}});

    for (int round = 1; round <= 3; ++round) {
        const auto q = c.Get("/sessions/" + id + "/question");
        REQUIRE(q);
        REQUIRE(q->status == 200);
        const Json question = body_of(q);
        CHECK(question["index"] == round);
        REQUIRE(question["trajectories"].size() == 2);
        for (const Json& t : question["trajectories"]) {
            CHECK(t.contains("id"));
            CHECK(t["features"].size() == 3);
            CHECK(t["waypoints"].size() == tabletop::kWaypoints);
        }
        CHECK(question["scene"].contains("landmarks"));

        const Json answer = round == 2 ? Json{{"index", round}, {"kind", "idk"}}
                                       : Json{{"index", round}, {"kind", "choice"}, {"slot", 1}};
        const auto a = c.Post("/sessions/" + id + "/answer", answer.dump(), "application/json");
        REQUIRE(a);
        REQUIRE(a->status == 200);
        const Json belief = body_of(a);
        CHECK(belief["round"] == round);
        CHECK(belief["z_star"]["mu"].size() == 3);
        CHECK(belief["z_star"]["sigma"].size() == 3);
        CHECK(belief["preview_waypoints"].is_array());
    }

    const auto stale = c.Post("/sessions/" + id + "/answer", Json{{"index", 3}, {"kind", "idk"}}.dump(),
                              "application/json");
    REQUIRE(stale);
    CHECK(stale->status == 409);
    CHECK(body_of(stale)["error"]["code"] == "conflict");

    const auto debug = c.Get("/sessions/" + id + "/debug");
    REQUIRE(debug);
    CHECK(debug->status == 200);
    CHECK(body_of(debug).contains("human_model"));

    const auto deploy = c.Post("/sessions/" + id + "/deploy", "", "application/json");
    REQUIRE(deploy);
    CHECK(deploy->status == 200);
    CHECK(body_of(deploy)["status"] == "deployed");

    const auto after = c.Get("/sessions/" + id + "/question");
    REQUIRE(after);
    CHECK(after->status == 409);
    CHECK(fs::exists(svc.dir / (id + ".json")));
}

TEST_CASE("bad requests get structured errors") {
    RunningService svc(false);
    auto c = svc.client();
    auto r = c.Post("/sessions", "{oops", "application/json");
    REQUIRE(r);
    CHECK(r->status == 400);
    CHECK(body_of(r)["error"]["code"] == "bad_json");

    r = c.Post("/sessions", Json{{"strategy", "random"}}.dump(), "application/json");
    REQUIRE(r);
    CHECK(r->status == 400);

    r = c.Get("/sessions/0000000000000000/question");
    REQUIRE(r);
    CHECK(r->status == 404);
    CHECK(body_of(r)["error"]["code"] == "not_found");

    const std::string id = create_session(c, Json{{"environment", "driving"}, {"strategy", "informative"}});
    c.Get("/sessions/" + id + "/question");
    r = c.Post("/sessions/" + id + "/answer", Json{{"index", 1}, {"kind", "maybe"}}.dump(), "application/json");
    REQUIRE(r);
    CHECK(r->status == 400);
    r = c.Post("/sessions/" + id + "/answer", Json{{"index", 1}, {"kind", "choice"}, {"slot", 4}}.dump(),
               "application/json");
    REQUIRE(r);
    CHECK(r->status == 400);
    r = c.Post("/sessions/" + id + "/answer", Json{{"kind", "idk"}}.dump(), "application/json");
    REQUIRE(r);
    CHECK(r->status == 400);

    r = c.Get("/sessions/" + id + "/debug");
    REQUIRE(r);
    CHECK(r->status == 404);
    CHECK(body_of(r)["error"]["code"] == "debug_disabled");

    r = c.Get("/nowhere");
    REQUIRE(r);
    CHECK(r->status == 404);
}

TEST_CASE("the question route reports completion at the cap") {
    RunningService svc;
    auto c = svc.client();
    const std::string id = create_session(c, Json{{"environment", "synthetic"}, {"strategy", "random"}});
    for (int round = 1; round <= 12; ++round) {
        const Json q = body_of(c.Get("/sessions/" + id + "/question"));
        REQUIRE(q["index"] == round);
        const auto a = c.Post("/sessions/" + id + "/answer", Json{{"index", round}, {"kind", "choice"}, {"slot", 0}}.dump(),
                              "application/json");
        REQUIRE(a);
        REQUIRE(a->status == 200);
    }
    const Json done = body_of(c.Get("/sessions/" + id + "/question"));
    CHECK(done["complete"] == true);
    CHECK(done["index"].is_null());
    CHECK(body_of(c.Get("/sessions/" + id))["round"] == 12);
}

TEST_CASE("status codes follow the error kind") {
    CHECK(http_status_for("validation_error") == 400);
    CHECK(http_status_for("not_found") == 404);
    CHECK(http_status_for("conflict") == 409);
    CHECK(http_status_for("degenerate_evidence") == 422);
    CHECK(http_status_for("internal") == 500);
}
