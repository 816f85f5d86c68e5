#include <cstdlib>
#include <sstream>
#include <thread>

#include "doctest.h"
#include "fixtures/feedback_fixture.hpp"
#include "httplib.h"
#include "peerlabel/hash.hpp"
#include "peerlabel/service.hpp"
#include "unit/support.hpp"

using namespace peerlabel;
namespace svc = peerlabel::service;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = svc::run_cli(args, out, err);
  return Result{code, out.str(), err.str()};
}

// Writes a small corpus and a matching mock script.
struct SmallRun {
  testing::TempDir dir;
  std::string run;
  std::string input;
  std::string script;

  explicit SmallRun(const nlohmann::json& extra = nlohmann::json::object()) {
    run = (dir / "run").string();
    input = (dir / "in.csv").string();
    script = (dir / "mock.json").string();
    write_file_atomic(input, "id,comment\n10,Ana always came to meetings\n11,\n12,Never replied to anything\n13,Nothing to add\n");
    nlohmann::json s;
    s["labeling"]["0"] = "| original comment id | topic |\n|---|---|\n| [1] | Attended group meetings |\n| [2] | Lack of communication |\n";
    s["labeling"]["1"] = "| [3] | N/A |";
    s["verification"]["c1:attended-group-meetings"] = "9";
    s["verification"]["c2:lack-of-communication"] = "2";
    s.update(extra);
    write_file_atomic(script, s.dump());
    write_file_atomic(dir / "roster.txt", "Ana\n");
  }

  Result ingest() { return cli({"ingest", "--run-dir", run, "--input", input, "--roster", (dir / "roster.txt").string()}); }
  Result label(std::vector<std::string> more = {}) {
    std::vector<std::string> args{"label", "--run-dir", run, "--mock-script", script, "--batch-size", "2", "--backoff-ms", "1"};
    args.insert(args.end(), more.begin(), more.end());
    return cli(args);
  }
  Result verify() { return cli({"verify", "--run-dir", run, "--mock-script", script, "--backoff-ms", "1"}); }
};

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("usage and help") {
    CHECK(cli({}).code == svc::kUsage);
    CHECK(cli({"bogus"}).code == svc::kUsage);
    CHECK(cli({"label"}).code == svc::kUsage);  // --run-dir required
    CHECK(cli({"--help"}).code == svc::kOk);
    CHECK(cli({"label", "--run-dir", "x", "--provider", "carrier-pigeon"}).code == svc::kUsage);
  }

  TEST_CASE("stages must run in order") {
    SmallRun r;
    CHECK(r.label().code == svc::kStageOrder);
    CHECK(r.verify().code == svc::kStageOrder);
    CHECK(cli({"report", "--run-dir", r.run}).code == svc::kStageOrder);
  }

  TEST_CASE("full small pipeline") {
    SmallRun r;
    auto res = r.ingest();
    REQUIRE(res.code == svc::kOk);
    CHECK(res.out.find("ingested 3 comments (1 empty rows skipped)") != std::string::npos);
    CHECK(read_file(r.dir / "run/corpus.jsonl").find("[NAME] always came") != std::string::npos);

    res = r.label();
    REQUIRE(res.code == svc::kOk);
    const auto assignments = read_file(r.dir / "run/assignments.csv");
    CHECK(assignments.find("c1:attended-group-meetings") != std::string::npos);
    CHECK(assignments.find("c3:n-a") != std::string::npos);

    res = r.verify();
    REQUIRE(res.code == svc::kOk);
    CHECK(read_file(r.dir / "run/checks.csv") ==
          "assignment_id,rating,band,flagged\nc1:attended-group-meetings,9,accurate,false\nc2:lack-of-communication,2,inaccurate,true\n");

    res = cli({"judge", "--run-dir", r.run, "--assignment", "c2:lack-of-communication", "--rater", "r1", "--score", "1",
               "--quorum", "1", "--timestamp", "2024-05-01T00:00:00Z"});
    REQUIRE(res.code == svc::kOk);
    CHECK(res.out.find("resolution: resolved 1 (unanimous)") != std::string::npos);
    CHECK(cli({"judge", "--run-dir", r.run, "--assignment", "c2:lack-of-communication", "--rater", "r1", "--score", "5"}).code ==
          svc::kUsage);
    CHECK(cli({"judge", "--run-dir", r.run, "--assignment", "c2:lack-of-communication", "--rater", "r1", "--score", "1",
               "--quorum", "2"})
              .code == svc::kStageOrder);

    res = cli({"report", "--run-dir", r.run});
    REQUIRE(res.code == svc::kOk);
    const auto report = read_file(r.dir / "run/report.json");
    const auto j = nlohmann::json::parse(report);
    CHECK(j["judged_count"] == 1);
    CHECK(j["cross_tab"]["model_conservative"] == 1);
    CHECK(read_file(r.dir / "run/crosstab.csv").find("inaccurate,0,0,1") != std::string::npos);
    const auto manifest = read_file(r.dir / "run/manifest.json");
    REQUIRE(cli({"report", "--run-dir", r.run}).code == svc::kOk);
    CHECK(read_file(r.dir / "run/report.json") == report);
    CHECK(read_file(r.dir / "run/manifest.json") == manifest);

    res = cli({"export", "--run-dir", r.run, "--what", "queue"});
    CHECK(res.code == svc::kOk);
    CHECK(res.out.rfind("assignment_id,comment_id,comment_text,label,raw_label,rating,band\nc2:lack-of-communication,2,", 0) == 0);
    for (const auto* what : {"assignments", "issues", "checks", "judgments", "resolved", "agreement", "crosstab", "report"}) {
      CHECK(cli({"export", "--run-dir", r.run, "--what", what}).code == svc::kOk);
    }
    CHECK(cli({"export", "--run-dir", r.run, "--what", "judgments", "--out", (r.dir / "j.csv").string()}).code == svc::kOk);
    CHECK(read_file(r.dir / "j.csv").find("c2:lack-of-communication,r1,1,2024-05-01T00:00:00Z") != std::string::npos);
    CHECK(cli({"export", "--run-dir", r.run, "--what", "nonsense"}).code == svc::kUsage);
  }

  TEST_CASE("config mismatch and tampering are stage errors") {
    SmallRun r;
    REQUIRE(r.ingest().code == svc::kOk);
    REQUIRE(r.label().code == svc::kOk);
    CHECK(r.label({"--fuzzy-threshold", "0.9"}).code == svc::kStageOrder);
    CHECK(cli({"label", "--run-dir", r.run, "--mock-script", r.script, "--batch-size", "3"}).code == svc::kStageOrder);
    // Same settings again are fine and idempotent.
    const auto manifest = read_file(r.dir / "run/manifest.json");
    REQUIRE(r.label().code == svc::kOk);
    CHECK(read_file(r.dir / "run/manifest.json") == manifest);
    write_file_atomic(r.dir / "run/assignments.csv", "tampered");
    CHECK(r.verify().code == svc::kStageOrder);
  }

  TEST_CASE("provider failures exit 3 and are recorded") {
    SmallRun r(nlohmann::json{{"failures", {{"labeling:1", 10}}}});
    REQUIRE(r.ingest().code == svc::kOk);
    const auto res = r.label({"--max-retries", "1"});
    CHECK(res.code == svc::kProviderFailure);
    CHECK(res.err.find("batch 1 failed") != std::string::npos);
    CHECK(read_file(r.dir / "run/label_failures.jsonl").find("\"batch_index\":1") != std::string::npos);
    CHECK(read_file(r.dir / "run/issues.jsonl").find("missing_comment") == std::string::npos);
  }

  TEST_CASE("http provider credentials come from the environment only") {
    httplib::Server server;
    std::string seen_auth;
    server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
      seen_auth = req.get_header_value("Authorization");
      const auto j = nlohmann::json::parse(req.body);
      const std::string last = j["messages"].back()["content"];
      std::string reply = "| [1] | Attended group meetings |\n| [2] | N/A |\n| [3] | N/A |";
      if (last.rfind("On a scale", 0) == 0) reply = "8";
      res.set_content(nlohmann::json{{"choices", {{{"message", {{"content", reply}}}}}}}.dump(), "application/json");
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread t([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    SmallRun r;
    REQUIRE(r.ingest().code == svc::kOk);
    ::setenv(svc::kApiKeyEnv, "top-secret-value", 1);
    const auto endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
    const auto res = cli({"label", "--run-dir", r.run, "--provider", "http", "--endpoint", endpoint});
    ::unsetenv(svc::kApiKeyEnv);
    server.stop();
    t.join();
    CHECK(res.code == svc::kOk);
    CHECK(seen_auth == "Bearer top-secret-value");
    for (const auto& entry : std::filesystem::directory_iterator(r.dir / "run")) {
      CHECK(read_file(entry.path()).find("top-secret-value") == std::string::npos);
    }
    CHECK(cli({"label", "--run-dir", r.run, "--api-key", "x"}).code == svc::kUsage);
  }

  TEST_CASE("shuffled taxonomy is recorded and reused") {
    SmallRun r;
    REQUIRE(r.ingest().code == svc::kOk);
    REQUIRE(r.label({"--shuffle-taxonomy", "7"}).code == svc::kOk);
    const auto m = nlohmann::json::parse(read_file(r.dir / "run/manifest.json"));
    CHECK(m["config"]["shuffle_taxonomy"] == 7);
    const auto order = m["stages"]["label"]["info"]["taxonomy_order"];
    CHECK(order.size() == 24);
    CHECK(order[0] != "attended-group-meetings");
    CHECK(r.verify().code == svc::kOk);
    CHECK(r.label({"--shuffle-taxonomy", "8"}).code == svc::kStageOrder);
  }

  TEST_CASE("sampling at ingest") {
    testing::TempDir dir;
    write_file_atomic(dir / "in.csv", fixture::corpus_csv(fixture::corpus_comments()));
    const auto run = (dir / "run").string();
    REQUIRE(cli({"ingest", "--run-dir", run, "--input", (dir / "in.csv").string(), "--sample", "20", "--seed", "4"}).code ==
            svc::kOk);
    const auto corpus = read_file(dir / "run/corpus.jsonl");
    CHECK(std::count(corpus.begin(), corpus.end(), '\n') == 20);
    CHECK(corpus.find("sampled_from") != std::string::npos);
    CHECK(cli({"ingest", "--run-dir", run, "--input", (dir / "in.csv").string(), "--sample", "20", "--seed", "5"}).code ==
          svc::kStageOrder);
  }
}
