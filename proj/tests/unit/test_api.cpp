#include <fstream>
#include <thread>

#include "doctest.h"
#include "httplib.h"
#include "peerlabel/api.hpp"
#include "unit/support.hpp"

using namespace peerlabel;

namespace {

// Three labelled comments rated 9, 2 and 5.
ReviewData three_items() {
  const auto tax = default_taxonomy();
  ReviewData d{Corpus{}, tax, {}, {}, FlagPolicy{}, Strictness::decisive};
  const std::vector<std::pair<std::string, int>> items{
      {"attended-group-meetings", 9}, {"unreliable", 2}, {"has-good-attitude", 5}};
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto id = i + 1;
    d.corpus.comments.push_back(Comment{id, "comment " + std::to_string(id), true, ""});
    LabelAssignment a;
    a.comment_id = id;
    a.label = *tax.find_by_id(items[i].first);
    a.assignment_id = make_assignment_id(id, a.label);
    a.raw_label = a.label->text;
    a.match_kind = MatchKind::exact;
    d.assignments.push_back(a);
    d.checks.push_back(AccuracyCheck{a.assignment_id, items[i].second, band_of(items[i].second), "", false});
  }
  return d;
}

std::shared_ptr<ReviewStore> store_for(const ReviewData& d, std::size_t quorum = 1) {
  std::set<std::string> ids;
  for (const auto& a : d.assignments) ids.insert(a.assignment_id);
  return std::make_shared<ReviewStore>(ids, quorum);
}

std::string body(const std::string& id, const std::string& rater, int score) {
  return nlohmann::json{{"assignment_id", id}, {"rater_id", rater}, {"score", score}}.dump();
}

}  // namespace

TEST_SUITE("api") {
  TEST_CASE("queue is worst first with joined fields") {
    const auto d = three_items();
    ReviewApi api(d, store_for(d));
    const auto r = api.list_queue(std::nullopt);
    CHECK(r.status == 200);
    const auto& items = r.body["items"];
    REQUIRE(items.size() == 2);
    CHECK(items[0]["assignment_id"] == "c2:unreliable");
    CHECK(items[0]["rating"] == 2);
    CHECK(items[0]["band"] == "inaccurate");
    CHECK(items[0]["comment_text"] == "comment 2");
    CHECK(items[0]["label"] == "Unreliable");
    CHECK(items[0]["raw_label"] == "Unreliable");
    CHECK(items[1]["rating"] == 5);
    CHECK(items[0]["judgments"].empty());
  }

  TEST_CASE("post then fetch") {
    const auto d = three_items();
    ReviewApi api(d, store_for(d));
    const auto posted = api.post_judgment(body("c2:unreliable", "r1", 1));
    CHECK(posted.status == 201);
    CHECK(posted.body["judgment"]["score"] == 1);
    CHECK(posted.body["resolution"]["status"] == "resolved");
    const auto got = api.get_assignment("c2:unreliable");
    CHECK(got.status == 200);
    REQUIRE(got.body["judgments"].size() == 1);
    CHECK(got.body["judgments"][0]["rater_id"] == "r1");
    CHECK(api.get_assignment("c9:nope").status == 404);
  }

  TEST_CASE("error statuses") {
    const auto d = three_items();
    ReviewApi api(d, store_for(d));
    CHECK(api.post_judgment(body("c2:unreliable", "r1", 3)).status == 422);
    CHECK(api.post_judgment(R"({"assignment_id":"c2:unreliable","rater_id":"r1","score":"1"})").status == 422);
    CHECK(api.post_judgment(R"({"assignment_id":"c2:unreliable"})").status == 422);
    CHECK(api.post_judgment(body("c7:x", "r1", 1)).status == 404);
    CHECK(api.post_judgment("{oops").status == 400);
    CHECK(api.post_judgment("[1]").status == 400);
    auto stale = nlohmann::json::parse(body("c2:unreliable", "r1", 1));
    stale["expected_prior_count"] = 0;
    CHECK(api.post_judgment(stale.dump()).status == 201);
    CHECK(api.post_judgment(stale.dump()).status == 409);
  }

  TEST_CASE("peer scores stay hidden until the rater submits") {
    const auto d = three_items();
    ReviewApi api(d, store_for(d, 3));
    api.post_judgment(body("c2:unreliable", "r1", -1));
    auto q = api.list_queue(std::string("r2")).body["items"][0];
    CHECK(q["peer_judgment_count"] == 1);
    CHECK(q["my_judgment"].is_null());
    CHECK(q["judgments"].empty());
    api.post_judgment(body("c2:unreliable", "r2", 1));
    q = api.list_queue(std::string("r2")).body["items"][0];
    CHECK(q["my_judgment"]["score"] == 1);
    CHECK(q["judgments"].size() == 2);
    CHECK(q["resolution"]["status"] == "pending");
  }

  TEST_CASE("report payload") {
    const auto d = three_items();
    auto store = store_for(d);
    ReviewApi api(d, store);
    api.post_judgment(body("c2:unreliable", "r1", 1));
    api.post_judgment(body("c1:attended-group-meetings", "r1", 1));
    const auto r = api.get_report().body;
    CHECK(r["assignment_count"] == 3);
    CHECK(r["checked_count"] == 3);
    CHECK(r["flagged_count"] == 2);
    CHECK(r["judged_count"] == 2);
    CHECK(r["agreement"]["percent"]["accurate"] == 100);
    CHECK(r["cross_tab"]["model_conservative"] == 1);
    CHECK(r["cross_tab"]["disagreements"] == 1);
  }

  TEST_CASE("http routes with bearer token") {
    const auto d = three_items();
    ReviewApi api(d, store_for(d), std::string("tok"));
    testing::TempDir ui;
    std::ofstream(ui / "index.html") << "<html>review</html>";
    httplib::Server server;
    api.mount(server, ui.path());
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread t([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    httplib::Client client("127.0.0.1", port);
    CHECK(client.Get("/api/v1/queue")->status == 401);
    CHECK(client.Get("/api/v1/health")->status == 200);
    const httplib::Headers auth{{"Authorization", "Bearer tok"}};
    auto res = client.Get("/api/v1/queue", auth);
    REQUIRE(res);
    CHECK(res->status == 200);
    CHECK(nlohmann::json::parse(res->body)["items"].size() == 2);
    res = client.Post("/api/v1/judgments", auth, body("c2:unreliable", "r1", 0), "application/json");
    CHECK(res->status == 201);
    res = client.Get("/api/v1/assignments/c2%3Aunreliable", auth);
    REQUIRE(res);
    CHECK(res->status == 200);
    CHECK(nlohmann::json::parse(res->body)["judgments"].size() == 1);
    CHECK(client.Get("/api/v1/assignments/c2:unreliable", auth)->status == 200);
    CHECK(client.Get("/api/v1/report", auth)->status == 200);
    res = client.Get("/index.html");
    REQUIRE(res);
    CHECK(res->body == "<html>review</html>");

    server.stop();
    t.join();
  }
}
