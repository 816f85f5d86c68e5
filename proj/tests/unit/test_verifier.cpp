#include <random>

#include "doctest.h"
#include "peerlabel/verifier.hpp"

using namespace peerlabel;

namespace {

const std::string kTableThreePrompt =
    "On a scale from 1 (completely inaccurate) to 10 (completely accurate), how accurate is the following label for "
    "describing a topic mentioned in the following comment? Only provide your numeric rating.\n\n"
    "LABEL: Lack of communication\n\n"
    "COMMENT: Sometimes, it is difficult because not everyone responds quickly, making the completion of assignments "
    "even more difficult.";

struct Fixture {
  Taxonomy tax = default_taxonomy();
  Corpus corpus;
  std::vector<LabelAssignment> assignments;

  Fixture() {
    corpus.comments.push_back(Comment{1, "Sometimes, it is difficult because not everyone responds quickly, making the completion of assignments even more difficult.", true, ""});
    corpus.comments.push_back(Comment{2, "Nothing to add.", true, ""});
    corpus.comments.push_back(Comment{3, "is great!", true, ""});
    add(1, "lack-of-communication");
    add(2, std::nullopt);
    add(3, "has-good-attitude");
  }
  void add(std::size_t comment, std::optional<std::string> label_id) {
    LabelAssignment a;
    a.comment_id = comment;
    if (label_id) a.label = *tax.find_by_id(*label_id);
    a.assignment_id = make_assignment_id(comment, a.label);
    a.raw_label = a.label ? a.label->text : "N/A";
    a.match_kind = a.label ? MatchKind::exact : MatchKind::not_applicable;
    assignments.push_back(a);
  }
};

AccuracyCheck check(std::string id, int rating) { return AccuracyCheck{std::move(id), rating, band_of(rating), "", false}; }

std::vector<std::string> ids(const std::vector<ReviewQueueEntry>& q) {
  std::vector<std::string> out;
  for (const auto& e : q) out.push_back(e.assignment_id);
  return out;
}

}  // namespace

TEST_SUITE("verifier") {
  TEST_CASE("accuracy prompt") {
    const auto p = build_accuracy_prompt(
        "Lack of communication",
        "Sometimes, it is difficult because not everyone responds quickly, making the completion of assignments even "
        "more difficult.");
    CHECK(p.role == Role::user);
    CHECK(p.text == kTableThreePrompt);
    CHECK(build_accuracy_prompt("Was dependable, kept his or her word", "x").text.find(
              "LABEL: Was dependable, kept his or her word\n") != std::string::npos);
    CHECK_THROWS(build_accuracy_prompt("", "x"));
    CHECK_THROWS(build_accuracy_prompt("x", " "));
  }

  TEST_CASE("parse_rating") {
    CHECK(parse_rating("8").rating == 8);
    CHECK_FALSE(parse_rating("8").lenient);
    CHECK(parse_rating("  10\n").rating == 10);
    const auto chatty = parse_rating("I'd say 7 overall");
    CHECK(chatty.rating == 7);
    CHECK(chatty.lenient);
    CHECK(parse_rating("Rating: 9/10").rating == 9);
    auto kind = [](std::string_view s) {
      try {
        parse_rating(s);
      } catch (const RatingError& e) {
        return e.kind;
      }
      FAIL("expected RatingError");
      return RatingErrorKind::no_rating_found;
    };
    CHECK(kind("11") == RatingErrorKind::out_of_range);
    CHECK(kind("0") == RatingErrorKind::out_of_range);
    CHECK(kind("maybe") == RatingErrorKind::no_rating_found);
    CHECK(kind("") == RatingErrorKind::no_rating_found);
    CHECK(kind("score -3") == RatingErrorKind::out_of_range);
    CHECK(kind("99999999999999999999999") == RatingErrorKind::out_of_range);
  }

  TEST_CASE("band_of") {
    CHECK(band_of(8) == Band::accurate);
    CHECK(band_of(3) == Band::inaccurate);
    CHECK(band_of(4) == Band::uncertain);
    CHECK(band_of(7) == Band::uncertain);
    CHECK(band_of(10) == Band::accurate);
    CHECK(band_of(1) == Band::inaccurate);
    CHECK_THROWS(band_of(0));
    CHECK_THROWS(band_of(11));
    CHECK(parse_band("uncertain") == Band::uncertain);
  }

  TEST_CASE("run_verification with constant mock") {
    Fixture f;
    MockProvider mock(nlohmann::json{{"verification_default", "8"}});
    const auto run = run_verification(f.assignments, f.corpus, mock, ProviderConfig{});
    REQUIRE(run.checks.size() == 2);
    for (const auto& c : run.checks) {
      CHECK(c.rating == 8);
      CHECK(c.band == Band::accurate);
    }
    CHECK(run.skipped == std::vector<std::string>{"c2:n-a"});
    CHECK(run.failures.empty());
    CHECK(mock.calls() == 2);
  }

  TEST_CASE("run_verification keeps going past a bad item and leaves assignments alone") {
    Fixture f;
    const auto before = f.assignments;
    MockProvider mock(nlohmann::json{{"verification", {{"c1:lack-of-communication", "8"}, {"c3:has-good-attitude", "maybe"}}}});
    const auto run = run_verification(f.assignments, f.corpus, mock, ProviderConfig{});
    REQUIRE(run.checks.size() == 1);
    CHECK(run.checks[0].assignment_id == "c1:lack-of-communication");
    CHECK(run.checks[0].raw_response == "8");
    REQUIRE(run.failures.size() == 1);
    CHECK(run.failures[0].assignment_id == "c3:has-good-attitude");
    CHECK(f.assignments == before);
  }

  TEST_CASE("run_verification sends the single-pair prompt") {
    Fixture f;
    std::vector<std::string> prompts;
    std::mutex m;
    FunctionProvider capture([&](std::span<const PromptMessage> msgs, const CompletionParams&) {
      std::lock_guard lock(m);
      REQUIRE(msgs.size() == 1);
      prompts.push_back(msgs[0].text);
      return std::string("Sure! 6");
    });
    const auto run = run_verification(f.assignments, f.corpus, capture, ProviderConfig{});
    CHECK(std::find(prompts.begin(), prompts.end(), kTableThreePrompt) != prompts.end());
    CHECK(run.lenient.size() == 2);
  }

  TEST_CASE("flag examples") {
    const std::vector<AccuracyCheck> checks{check("a", 9), check("b", 2), check("c", 5)};
    CHECK(ids(flag(checks, FlagPolicy{})) == std::vector<std::string>{"b", "c"});
    CHECK(ids(flag(checks, FlagPolicy({Band::inaccurate}))) == std::vector<std::string>{"b"});
    const std::vector<AccuracyCheck> tens{check("a", 10), check("b", 10)};
    CHECK(flag(tens, FlagPolicy{}).empty());
    CHECK_THROWS(FlagPolicy(std::set<Band>{}));
    CHECK_THROWS(parse_flag_policy(""));
    CHECK(format_flag_policy(parse_flag_policy("uncertain, inaccurate")) == "inaccurate,uncertain");
  }

  TEST_CASE("property: banding is monotone and flagging is monotone in policy") {
    for (int r1 = 1; r1 <= 10; ++r1) {
      for (int r2 = r1; r2 <= 10; ++r2) CHECK(band_of(r1) <= band_of(r2));
    }
    std::mt19937_64 rng(5);
    const std::array<Band, 3> bands{Band::inaccurate, Band::uncertain, Band::accurate};
    for (int iter = 0; iter < 200; ++iter) {
      std::vector<AccuracyCheck> checks;
      const auto n = rng() % 20;
      for (std::size_t i = 0; i < n; ++i) checks.push_back(check("a" + std::to_string(i), 1 + int(rng() % 10)));
      std::set<Band> small{bands[rng() % 3]};
      std::set<Band> large = small;
      large.insert(bands[rng() % 3]);
      const auto a = ids(flag(checks, FlagPolicy(small)));
      const auto b = ids(flag(checks, FlagPolicy(large)));
      for (const auto& id : a) CHECK(std::find(b.begin(), b.end(), id) != b.end());
      const auto q = flag(checks, FlagPolicy(large));
      for (std::size_t i = 1; i < q.size(); ++i) CHECK(q[i - 1].rating <= q[i].rating);
    }
  }

  TEST_CASE("checks csv round trip") {
    const std::vector<AccuracyCheck> checks{check("c1:x", 2), check("c2:y", 9)};
    const auto csv = checks_to_csv(checks, FlagPolicy{});
    CHECK(csv == "assignment_id,rating,band,flagged\nc1:x,2,inaccurate,true\nc2:y,9,accurate,false\n");
    CHECK(checks_from_csv(csv) == checks);
    CHECK_THROWS(checks_from_csv("h\nc1:x,2,accurate,true\n"));
  }
}
