#include <cmath>
#include <fstream>
#include <random>
#include <regex>
#include <set>

#include "doctest.h"
#include "fixtures/feedback_fixture.hpp"
#include "peerlabel/corpus.hpp"
#include "unit/support.hpp"

using namespace peerlabel;

namespace {

Corpus from_csv(const std::string& content) { return parse_corpus(content, CorpusFormat::csv, "in.csv"); }

Comment comment(std::string text) {
  Comment c;
  c.id = 1;
  c.text = std::move(text);
  return c;
}

bool contains_word(const std::string& s, const std::string& word) {
  return std::regex_search(s, std::regex("(^|[^A-Za-z0-9])" + word + "($|[^A-Za-z0-9])", std::regex::icase));
}

}  // namespace

TEST_SUITE("corpus") {
  TEST_CASE("three rows get ids 1..3") {
    const auto c = from_csv("comment\nfirst\nsecond\nthird\n");
    REQUIRE(c.size() == 3);
    CHECK(c.comments[0].id == 1);
    CHECK(c.comments[2].id == 3);
    CHECK(c.comments[2].text == "third");
    CHECK(c.comments[1].source_row == "in.csv:3");
    CHECK_FALSE(c.comments[0].redacted);
  }

  TEST_CASE("blank comments are reported, not dropped silently") {
    const auto c = from_csv("id,comment\na,one\nb,two\nc,  \nd,four\ne,five\n");
    CHECK(c.size() == 4);
    REQUIRE(c.skipped.size() == 1);
    CHECK(c.skipped[0].source_row == "in.csv:4");
    CHECK(c.comments[2].origin_id == std::optional<std::string>("d"));
    CHECK(c.comments[2].id == 3);
  }

  TEST_CASE("malformed and duplicate rows") {
    try {
      from_csv("id,comment\n1,a\n2,b,extra\n");
      FAIL("expected a malformed row error");
    } catch (const CorpusError& e) {
      CHECK(e.line == std::optional<std::size_t>(3));
    }
    CHECK_THROWS_AS(from_csv("id,comment\n1,a\n1,b\n"), CorpusError);
    CHECK_THROWS_AS(from_csv("name,grade\nx,1\n"), CorpusError);
    CHECK_THROWS_AS(parse_corpus("{\"text\": 3}\n", CorpusFormat::jsonl, "x"), CorpusError);
  }

  TEST_CASE("tsv and jsonl inputs") {
    const auto t = parse_corpus("id\ttext\n9\thello\n", CorpusFormat::tsv, "in.tsv");
    REQUIRE(t.size() == 1);
    CHECK(t.comments[0].origin_id == std::optional<std::string>("9"));
    const auto j = parse_corpus("{\"id\": 4, \"text\": \"a\"}\n\n{\"text\": \"b\"}\n", CorpusFormat::jsonl, "in.jsonl");
    REQUIRE(j.size() == 2);
    CHECK(j.comments[0].origin_id == std::optional<std::string>("4"));
    CHECK(j.comments[1].id == 2);
  }

  TEST_CASE("format guessing") {
    CHECK(guess_corpus_format("a.tsv") == CorpusFormat::tsv);
    CHECK(guess_corpus_format("a.jsonl") == CorpusFormat::jsonl);
    CHECK(guess_corpus_format("a.csv") == CorpusFormat::csv);
    CHECK(parse_corpus_format("canonical") == CorpusFormat::canonical);
    CHECK_THROWS(parse_corpus_format("xml"));
  }

  TEST_CASE("ingest reads files and fails on missing ones") {
    testing::TempDir dir;
    std::ofstream(dir / "c.csv") << "comment\n\"multi\nline\"\n";
    const auto c = ingest(dir / "c.csv", CorpusFormat::csv);
    REQUIRE(c.size() == 1);
    CHECK(c.comments[0].text == "multi\nline");
    CHECK_THROWS(ingest(dir / "nope.csv", CorpusFormat::csv));
  }

  TEST_CASE("canonical round trip") {
    auto c = from_csv("id,comment\nx,\"He said \"\"hi\"\"\"\ny,\nz,Arda's work\n");
    c = redact(c, Roster({"Arda"}));
    c = sample(c, 2, 5);
    const auto back = parse_corpus(serialize_corpus(c), CorpusFormat::canonical, "corpus.jsonl");
    CHECK(back == c);
  }

  TEST_CASE("table of accurate examples has six distinct comments") {
    std::set<std::string_view> distinct;
    for (const auto& p : fixture::kAccuratePairs) distinct.insert(p.comment);
    CHECK(fixture::kAccuratePairs.size() == 11);
    CHECK(distinct.size() == 6);
  }

  TEST_CASE("redact replaces whole-word names") {
    const Roster roster({"Sehar", "Arda"});
    auto r = redact(comment("Sehar was an essential part of our team and an all around good teammate."), roster);
    CHECK(r.text == "[NAME] was an essential part of our team and an all around good teammate.");
    CHECK(r.redacted);
    r = redact(comment("I feel like Arda, similarly to myself, could be more knowledgable in coding"), roster);
    CHECK(r.text == "I feel like [NAME], similarly to myself, could be more knowledgable in coding");
    r = redact(comment("Nothing to see"), roster);
    CHECK(r.text == "Nothing to see");
    CHECK(r.redacted);
    CHECK(redact(comment("Ardath and sehar"), roster).text == "Ardath and [NAME]");
    CHECK(redact(comment("Arda's notes"), roster).text == "[NAME]'s notes");
    CHECK(redact(comment("Arda\xE2\x80\x99s notes"), roster).text == "[NAME]\xE2\x80\x99s notes");
  }

  TEST_CASE("longer roster names win") {
    const Roster roster({"Mary", "Mary Ann"});
    CHECK(redact(comment("Mary Ann and Mary"), roster).text == "[NAME] and [NAME]");
    CHECK_THROWS_AS(Roster({" "}), CorpusError);
  }

  TEST_CASE("property: redaction is idempotent and leaves no roster word") {
    const std::vector<std::string> names{"Ann", "Bo", "Sehar", "Arda", "Li"};
    const std::vector<std::string> words{"the", "Ann", "annual", "bo", "Bob", "sehar's", "ARDA", "li,", "[NAME]", "x"};
    const Roster roster(names);
    std::mt19937_64 rng(99);
    for (int i = 0; i < 300; ++i) {
      std::string s;
      const auto n = 1 + rng() % 12;
      for (std::size_t k = 0; k < n; ++k) s += (k ? " " : "") + words[rng() % words.size()];
      const auto once = redact(comment(s), roster);
      const auto twice = redact(once, roster);
      CHECK(once.text == twice.text);
      for (const auto& name : names) CHECK_FALSE(contains_word(once.text, name));
    }
  }

  TEST_CASE("sample basics") {
    Corpus c;
    for (std::size_t i = 1; i <= 10; ++i) c.comments.push_back(Comment{i, "c" + std::to_string(i), false, "f:" + std::to_string(i)});
    const auto all = sample(c, 10, 3);
    REQUIRE(all.size() == 10);
    for (std::size_t i = 0; i < 10; ++i) {
      CHECK(all.comments[i].text == c.comments[i].text);
      CHECK(all.comments[i].sampled_from == std::optional<std::size_t>(i + 1));
    }
    const auto a = sample(c, 4, 77);
    const auto b = sample(c, 4, 77);
    CHECK(a == b);
    for (std::size_t i = 0; i < 4; ++i) CHECK(a.comments[i].id == i + 1);
    CHECK(std::is_sorted(a.comments.begin(), a.comments.end(),
                         [](const Comment& x, const Comment& y) { return *x.sampled_from < *y.sampled_from; }));
    CHECK_THROWS_AS(sample(c, 11, 1), CorpusError);
  }

  TEST_CASE("sample inclusion frequency is uniform") {
    const std::size_t total = 20, n = 6, seeds = 10000;
    Corpus c;
    for (std::size_t i = 1; i <= total; ++i) c.comments.push_back(Comment{i, "c", false, ""});
    std::vector<std::size_t> hits(total + 1, 0);
    for (std::uint64_t seed = 0; seed < seeds; ++seed) {
      for (const auto& s : sample(c, n, seed).comments) ++hits[*s.sampled_from];
    }
    const double p = double(n) / double(total);
    const double mean = p * seeds;
    const double sigma = std::sqrt(seeds * p * (1 - p));
    for (std::size_t i = 1; i <= total; ++i) {
      CHECK(std::abs(double(hits[i]) - mean) <= 3 * sigma);
    }
  }
}
