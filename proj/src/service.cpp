#include "peerlabel/service.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>

#include "CLI11.hpp"
#include "httplib.h"
#include "peerlabel/corpus.hpp"
#include "peerlabel/csv.hpp"
#include "peerlabel/hash.hpp"
#include "peerlabel/labeler.hpp"
#include "peerlabel/response_parser.hpp"
#include "peerlabel/review.hpp"
#include "peerlabel/taxonomy.hpp"
#include "peerlabel/verifier.hpp"

namespace fs = std::filesystem;

namespace peerlabel::service {

namespace {

struct ProviderFlags {
  std::string provider = "mock";
  std::string mock_script;
  std::string endpoint;
  std::string model = "gpt-3.5-turbo";
  double temperature = 0.0;
  std::size_t max_retries = 3;
  long timeout_ms = 60000;
  std::size_t concurrency = 4;
  std::size_t rate_limit = 0;
  long rate_interval_ms = 60000;
  long backoff_ms = 500;
  bool corrective = false;
};

struct Options {
  std::string run_dir;
  // ingest
  std::string input;
  std::string format;
  std::string roster;
  std::size_t sample = 0;
  std::uint64_t seed = 0;
  // label
  std::size_t batch_size = kDefaultBatchSize;
  std::string taxonomy = "default";
  std::uint64_t shuffle_seed = 0;
  double fuzzy_threshold = kDefaultFuzzyThreshold;
  ProviderFlags provider;
  // review
  std::string flag_bands = "inaccurate,uncertain";
  std::string strictness = "decisive";
  std::size_t quorum = kDefaultQuorum;
  // judge
  std::string assignment;
  std::string rater;
  int score = 0;
  std::string note;
  bool adjudicate = false;
  std::string timestamp;
  std::size_t expected_prior = 0;
  // export / serve
  std::string what;
  std::string out;
  std::string host = "127.0.0.1";
  int port = 8787;
  std::string ui_dir;
};

// Tracks which flags the user actually passed.
// Subcommands register the same flag names; any of them counts.
struct Given {
  std::multimap<std::string, const CLI::Option*> opts;
  CLI::Option* add(const std::string& name, CLI::Option* opt) {
    opts.emplace(name, opt);
    return opt;
  }
  bool operator()(const std::string& name) const {
    const auto [lo, hi] = opts.equal_range(name);
    return std::any_of(lo, hi, [](const auto& kv) { return kv.second->count() > 0; });
  }
};

/// Flag value if given (and bound into the manifest), else the manifest's
/// value, else the default (bound).
template <typename T>
T effective(RunManifest& m, const Given& given, const std::string& flag, const std::string& key, const T& value) {
  if (given(flag)) {
    m.bind_config(key, value);
    return value;
  }
  if (auto v = m.config_value(key)) return v->get<T>();
  m.bind_config(key, value);
  return value;
}

void write_out(const fs::path& run_dir, const char* name, const std::string& content, StageRecord& record) {
  write_file_atomic(run_dir / name, content);
  record.outputs[name] = sha256_hex(content);
}

void record_input(const fs::path& run_dir, const char* name, StageRecord& record) {
  const auto path = run_dir / name;
  record.inputs[name] = fs::exists(path) ? sha256_file(path) : std::string("absent");
}

struct ProviderBundle {
  std::unique_ptr<Provider> provider;
  std::unique_ptr<RateLimiter> limiter;
  ProviderConfig config;
};

ProviderBundle make_provider(RunManifest& m, const Given& given, const Options& o, const std::string& stage) {
  const auto& p = o.provider;
  ProviderBundle b;
  const auto kind = effective<std::string>(m, given, "--provider", "provider", p.provider);
  b.config.model = effective<std::string>(m, given, "--model", "model", p.model);
  b.config.temperature = effective<double>(m, given, "--temperature", "temperature", p.temperature);
  b.config.max_retries = p.max_retries;
  b.config.timeout = std::chrono::milliseconds(p.timeout_ms);
  b.config.concurrency = p.concurrency;
  b.config.rate_limit_requests = p.rate_limit;
  b.config.rate_limit_interval = std::chrono::milliseconds(p.rate_interval_ms);
  b.config.backoff_base = std::chrono::milliseconds(p.backoff_ms);
  b.config.validate();
  if (kind == "mock") {
    if (p.mock_script.empty()) throw std::invalid_argument("--provider mock needs --mock-script");
    m.bind_config(stage + "_mock_script_sha256", sha256_file(p.mock_script));
    b.provider = std::make_unique<MockProvider>(nlohmann::json::parse(read_file(p.mock_script)));
  } else if (kind == "http") {
    b.config.endpoint = effective<std::string>(m, given, "--endpoint", "endpoint", p.endpoint);
    if (b.config.endpoint.empty()) throw std::invalid_argument("--provider http needs --endpoint");
    b.provider = std::make_unique<HttpProvider>(b.config.endpoint, kApiKeyEnv);
  } else {
    throw std::invalid_argument("unknown provider: " + kind);
  }
  if (p.rate_limit > 0) b.limiter = std::make_unique<RateLimiter>(p.rate_limit, b.config.rate_limit_interval);
  return b;
}

nlohmann::json dispatch_info(const ProviderConfig& c) {
  return {{"max_retries", c.max_retries},
          {"timeout_ms", c.timeout.count()},
          {"concurrency", c.concurrency},
          {"rate_limit_requests", c.rate_limit_requests},
          {"rate_limit_interval_ms", c.rate_limit_interval.count()}};
}

Corpus load_corpus(const fs::path& run_dir) { return parse_corpus(read_file(run_dir / files::kCorpus), CorpusFormat::canonical, files::kCorpus); }

Taxonomy load_run_taxonomy(const fs::path& run_dir, const RunManifest& m) {
  auto t = parse_taxonomy(read_file(run_dir / files::kTaxonomy));
  std::optional<std::uint64_t> seed;
  if (auto v = m.config_value("shuffle_taxonomy"); v && !v->is_null()) seed = v->get<std::uint64_t>();
  const auto ids = t.ids();
  return reorder(t, ids, seed);
}

FlagPolicy bound_policy(RunManifest& m, const Given& given, const Options& o) {
  const auto policy = parse_flag_policy(o.flag_bands);
  const auto text = effective<std::string>(m, given, "--flag-bands", "flag_bands", format_flag_policy(policy));
  return parse_flag_policy(text);
}

// ---------------------------------------------------------------------------

int cmd_ingest(const Options& o, const Given& given, std::ostream& out) {
  const fs::path run_dir = o.run_dir;
  fs::create_directories(run_dir);
  auto m = RunManifest::load(run_dir);

  const fs::path input = o.input;
  const auto format = o.format.empty() ? guess_corpus_format(input) : parse_corpus_format(o.format);
  if (!fs::exists(input)) throw CorpusError("input file not found: " + input.string());
  const auto input_hash = sha256_file(input);
  m.bind_config("input_file", input.filename().string());
  m.bind_config("input_sha256", input_hash);
  m.bind_config("format", o.format.empty() ? std::string("auto") : o.format);
  m.bind_config("roster_sha256", o.roster.empty() ? nlohmann::json(nullptr) : nlohmann::json(sha256_file(o.roster)));
  m.bind_config("sample", given("--sample") ? nlohmann::json(o.sample) : nlohmann::json(nullptr));
  m.bind_config("seed", o.seed);

  auto corpus = ingest(input, format);
  if (!o.roster.empty()) corpus = redact(corpus, load_roster(o.roster));
  if (given("--sample")) corpus = sample(corpus, o.sample, o.seed);

  StageRecord rec;
  rec.inputs[input.filename().string()] = input_hash;
  if (!o.roster.empty()) rec.inputs[fs::path(o.roster).filename().string()] = sha256_file(o.roster);
  write_out(run_dir, files::kCorpus, serialize_corpus(corpus), rec);
  auto skipped = nlohmann::json::array();
  for (const auto& s : corpus.skipped) skipped.push_back({{"source_row", s.source_row}, {"reason", s.reason}});
  rec.info = {{"comments", corpus.size()}, {"skipped_rows", skipped}, {"redacted", !o.roster.empty()}};

  if (m.run_id.empty()) m.run_id = sha256_hex(input_hash + m.config.dump()).substr(0, 16);
  m.complete("ingest", std::move(rec));
  m.save(run_dir);
  out << "ingested " << corpus.size() << " comments (" << corpus.skipped.size() << " empty rows skipped)\n";
  for (const auto& s : corpus.skipped) out << "  skipped " << s.source_row << ": " << s.reason << "\n";
  return kOk;
}

int cmd_label(const Options& o, const Given& given, std::ostream& out, std::ostream& err) {
  const fs::path run_dir = o.run_dir;
  auto m = RunManifest::load(run_dir);
  m.require("ingest", run_dir);
  const auto corpus = load_corpus(run_dir);
  if (std::any_of(corpus.comments.begin(), corpus.comments.end(), [](const Comment& c) { return !c.redacted; })) {
    err << "warning: corpus was not redacted (pass --roster to ingest)\n";
  }

  const auto taxonomy_source = o.taxonomy == "default" ? std::string("default")
                                                         : "file:" + sha256_file(o.taxonomy);
  const auto bound_source = effective<std::string>(m, given, "--taxonomy", "taxonomy", taxonomy_source);
  if (bound_source != taxonomy_source && given("--taxonomy")) throw StageError("taxonomy mismatch");
  Taxonomy taxonomy = o.taxonomy == "default" ? default_taxonomy() : load_taxonomy(o.taxonomy);
  if (bound_source != "default" && o.taxonomy == "default") {
    throw StageError("run uses a taxonomy file; pass the same --taxonomy");
  }
  const auto shuffle_seed = given("--shuffle-taxonomy") ? nlohmann::json(o.shuffle_seed) : nlohmann::json(nullptr);
  if (given("--shuffle-taxonomy")) m.bind_config("shuffle_taxonomy", shuffle_seed);
  else if (!m.config_value("shuffle_taxonomy")) m.bind_config("shuffle_taxonomy", nullptr);
  if (auto v = m.config_value("shuffle_taxonomy"); v && !v->is_null()) taxonomy = shuffle(taxonomy, v->get<std::uint64_t>());

  const auto batch_size = effective<std::size_t>(m, given, "--batch-size", "batch_size", o.batch_size);
  const auto threshold = effective<double>(m, given, "--fuzzy-threshold", "fuzzy_threshold", o.fuzzy_threshold);
  const auto corrective = effective<bool>(m, given, "--corrective-redispatch", "corrective_redispatch", o.provider.corrective);
  auto bundle = make_provider(m, given, o, "label");
  bundle.config.corrective_redispatch = corrective;

  ResponseCheck check = [&taxonomy](std::string_view text) {
    return !parse_label_table(text, taxonomy).rows.empty();
  };
  const auto run = run_labeling(corpus, taxonomy, *bundle.provider, bundle.config, batch_size, bundle.limiter.get(), check);
  const auto batches = make_batches(corpus, batch_size);

  std::vector<LabelAssignment> assignments;
  std::vector<ParseIssue> issues;
  std::string responses_text;
  std::string timings;
  auto fingerprints = nlohmann::json::array();
  for (const auto& r : run.responses) {
    auto parsed = parse_label_table(r.response_text, taxonomy, r.batch_index);
    auto validated = validate(parsed.rows, batches[r.batch_index], taxonomy, threshold);
    issues.insert(issues.end(), parsed.issues.begin(), parsed.issues.end());
    issues.insert(issues.end(), validated.issues.begin(), validated.issues.end());
    assignments.insert(assignments.end(), validated.assignments.begin(), validated.assignments.end());
    nlohmann::ordered_json j;
    j["batch_index"] = r.batch_index;
    j["request_fingerprint"] = r.request_fingerprint;
    j["retry_count"] = r.retry_count;
    j["redispatched"] = r.redispatched;
    j["response_text"] = r.response_text;
    responses_text += j.dump() + "\n";
    timings += "batch " + std::to_string(r.batch_index) + " " + std::to_string(r.elapsed.count()) + "ms\n";
  }
  std::string failures_text;
  for (const auto& f : run.failures) {
    nlohmann::ordered_json j;
    j["batch_index"] = f.batch_index;
    j["kind"] = to_string(f.kind);
    j["message"] = f.message;
    j["attempts"] = f.attempts;
    j["request_fingerprint"] = f.request_fingerprint;
    failures_text += j.dump() + "\n";
  }
  for (const auto& b : batches) {
    fingerprints.push_back(request_fingerprint(labeling_messages(taxonomy, b), bundle.config));
  }

  StageRecord rec;
  record_input(run_dir, files::kCorpus, rec);
  write_out(run_dir, files::kTaxonomy, serialize_taxonomy(taxonomy), rec);
  write_out(run_dir, files::kResponses, responses_text, rec);
  write_out(run_dir, files::kLabelFailures, failures_text, rec);
  write_out(run_dir, files::kIssues, issues_to_jsonl(issues), rec);
  write_out(run_dir, files::kAssignments, assignments_to_csv(assignments, corpus), rec);
  write_file_atomic(run_dir / files::kTimings, timings);

  std::map<std::string, std::size_t> issue_counts;
  for (const auto& i : issues) ++issue_counts[std::string(to_string(i.kind))];
  std::size_t na = 0;
  for (const auto& a : assignments) na += a.not_applicable();
  rec.info = {{"batches", batches.size()},
              {"failed_batches", run.failures.size()},
              {"assignments", assignments.size()},
              {"not_applicable", na},
              {"issue_counts", issue_counts},
              {"request_fingerprints", fingerprints},
              {"taxonomy_order", taxonomy.ids()},
              {"dispatch", dispatch_info(bundle.config)}};
  m.complete("label", std::move(rec));
  m.save(run_dir);

  out << "labelled " << batches.size() << " batches: " << assignments.size() << " assignments (" << na
      << " N/A), " << issues.size() << " parse issues\n";
  if (!run.failures.empty()) {
    for (const auto& f : run.failures) err << "batch " << f.batch_index << " failed: " << f.message << "\n";
    return kProviderFailure;
  }
  return kOk;
}

int cmd_verify(const Options& o, const Given& given, std::ostream& out, std::ostream& err) {
  const fs::path run_dir = o.run_dir;
  auto m = RunManifest::load(run_dir);
  m.require("label", run_dir);
  const auto corpus = load_corpus(run_dir);
  const auto taxonomy = load_run_taxonomy(run_dir, m);
  const auto assignments = assignments_from_csv(read_file(run_dir / files::kAssignments), taxonomy);
  auto bundle = make_provider(m, given, o, "verify");
  const auto policy = bound_policy(m, given, o);

  const auto run = run_verification(assignments, corpus, *bundle.provider, bundle.config, bundle.limiter.get());

  std::string responses;
  for (const auto& c : run.checks) {
    nlohmann::ordered_json j;
    j["assignment_id"] = c.assignment_id;
    j["rating"] = c.rating;
    j["lenient"] = c.lenient;
    j["raw_response"] = c.raw_response;
    responses += j.dump() + "\n";
  }
  std::string failures;
  for (const auto& f : run.failures) {
    failures += nlohmann::ordered_json{{"assignment_id", f.assignment_id}, {"message", f.message}}.dump() + "\n";
  }

  StageRecord rec;
  record_input(run_dir, files::kAssignments, rec);
  write_out(run_dir, files::kChecks, checks_to_csv(run.checks, policy), rec);
  write_out(run_dir, files::kVerifyResponses, responses, rec);
  write_out(run_dir, files::kVerifyFailures, failures, rec);
  const auto flagged = flag(run.checks, policy).size();
  rec.info = {{"checks", run.checks.size()},
              {"skipped_not_applicable", run.skipped.size()},
              {"failures", run.failures.size()},
              {"lenient_ratings", run.lenient.size()},
              {"flagged", flagged},
              {"dispatch", dispatch_info(bundle.config)}};
  m.complete("verify", std::move(rec));
  m.save(run_dir);

  out << "verified " << run.checks.size() << " assignments (" << run.skipped.size() << " N/A skipped), " << flagged
      << " flagged for review\n";
  if (!run.failures.empty()) {
    for (const auto& f : run.failures) err << f.assignment_id << ": " << f.message << "\n";
    return kProviderFailure;
  }
  return kOk;
}

struct ReviewSetup {
  ReviewData data;
  std::shared_ptr<ReviewStore> store;
};

ReviewSetup review_setup(RunManifest& m, const Given& given, const Options& o) {
  const fs::path run_dir = o.run_dir;
  m.require("verify", run_dir);
  auto data = load_review_data(run_dir, m);
  data.strictness = parse_strictness(effective<std::string>(m, given, "--strictness", "strictness", o.strictness));
  const auto quorum = effective<std::size_t>(m, given, "--quorum", "quorum", o.quorum);
  auto store = open_review_store(run_dir, data, quorum);
  return ReviewSetup{std::move(data), std::move(store)};
}

int cmd_judge(const Options& o, const Given& given, std::ostream& out) {
  auto m = RunManifest::load(o.run_dir);
  auto setup = review_setup(m, given, o);
  JudgmentRequest req;
  req.assignment_id = o.assignment;
  req.rater_id = o.rater;
  req.score = o.score;
  if (given("--note")) req.note = o.note;
  req.adjudication = o.adjudicate;
  req.timestamp = o.timestamp;
  if (given("--expected-prior-count")) req.expected_prior_count = o.expected_prior;
  const auto stored = setup.store->record_judgment(req);
  m.save(o.run_dir);
  out << to_json(stored).dump() << "\n";
  const auto r = setup.store->resolve(stored.assignment_id);
  out << "resolution: " << to_string(r.status);
  if (r.resolved) out << " " << to_int(r.resolved->score) << " (" << to_string(r.resolved->method) << ")";
  out << "\n";
  return kOk;
}

int cmd_report(const Options& o, const Given& given, std::ostream& out) {
  const fs::path run_dir = o.run_dir;
  auto m = RunManifest::load(run_dir);
  auto setup = review_setup(m, given, o);
  const auto payload = report_payload(setup.data, *setup.store);
  const auto resolved = setup.store->resolved_scores();

  StageRecord rec;
  record_input(run_dir, files::kAssignments, rec);
  record_input(run_dir, files::kChecks, rec);
  record_input(run_dir, files::kJudgments, rec);
  write_out(run_dir, files::kReport, payload.dump(2) + "\n", rec);
  write_out(run_dir, files::kAgreement, agreement_to_csv(agreement_report(resolved)), rec);
  write_out(run_dir, files::kCrossTab, cross_tab_to_csv(cross_tab(setup.data.checks, resolved, setup.data.strictness)), rec);
  m.complete("report", std::move(rec));
  m.save(run_dir);

  const auto& a = payload["agreement"];
  out << "assignments " << payload["assignment_count"] << ", judged " << payload["judged_count"] << ": accurate "
      << a["percent"]["accurate"] << "%, ambiguous " << a["percent"]["ambiguous"] << "%, inaccurate "
      << a["percent"]["inaccurate"] << "%\n";
  out << "disagreements " << payload["cross_tab"]["disagreements"] << " (model-conservative "
      << payload["cross_tab"]["model_conservative"] << ", model-lenient " << payload["cross_tab"]["model_lenient"]
      << ")\n";
  return kOk;
}

int cmd_export(const Options& o, const Given& given, std::ostream& out) {
  const fs::path run_dir = o.run_dir;
  auto m = RunManifest::load(run_dir);
  std::string content;
  if (o.what == "assignments" || o.what == "issues") {
    m.require("label", run_dir);
    content = read_file(run_dir / (o.what == "assignments" ? files::kAssignments : files::kIssues));
  } else if (o.what == "checks") {
    m.require("verify", run_dir);
    content = read_file(run_dir / files::kChecks);
  } else {
    auto setup = review_setup(m, given, o);
    const auto resolved = setup.store->resolved_scores();
    if (o.what == "queue") {
      const auto q = queue_payload(setup.data, *setup.store);
      content = csv::format_row({"assignment_id", "comment_id", "comment_text", "label", "raw_label", "rating", "band"});
      for (const auto& item : q["items"]) {
        content += csv::format_row({item["assignment_id"].get<std::string>(), std::to_string(item["comment_id"].get<std::size_t>()),
                                    item["comment_text"].get<std::string>(), item["label"].get<std::string>(),
                                    item["raw_label"].get<std::string>(), std::to_string(item["rating"].get<int>()),
                                    item["band"].get<std::string>()});
      }
    } else if (o.what == "judgments") {
      content = csv::format_row({"seq", "assignment_id", "rater_id", "score", "timestamp", "note", "adjudication"});
      for (const auto& h : setup.store->log()) {
        content += csv::format_row({std::to_string(h.seq), h.assignment_id, h.rater_id, std::to_string(to_int(h.score)),
                                    h.timestamp, h.note.value_or(""), h.adjudication ? "true" : "false"});
      }
    } else if (o.what == "resolved") {
      content = csv::format_row({"assignment_id", "score", "method", "adjudicator"});
      for (const auto& r : resolved) {
        content += csv::format_row({r.assignment_id, std::to_string(to_int(r.score)), std::string(to_string(r.method)),
                                    r.adjudicator.value_or("")});
      }
    } else if (o.what == "agreement") {
      content = agreement_to_csv(agreement_report(resolved));
    } else if (o.what == "crosstab") {
      content = cross_tab_to_csv(cross_tab(setup.data.checks, resolved, setup.data.strictness));
    } else if (o.what == "report") {
      content = report_payload(setup.data, *setup.store).dump(2) + "\n";
    } else {
      throw std::invalid_argument("unknown export: " + o.what);
    }
  }
  if (o.out.empty() || o.out == "-") out << content;
  else write_file_atomic(o.out, content);
  return kOk;
}

int cmd_serve(const Options& o, const Given& given, std::ostream& out) {
  auto m = RunManifest::load(o.run_dir);
  auto setup = review_setup(m, given, o);
  std::optional<std::string> token;
  if (const char* t = std::getenv(kReviewTokenEnv); t && *t) token = t;
  ReviewApi api(std::move(setup.data), setup.store, token);
  httplib::Server server;
  std::optional<fs::path> ui;
  if (!o.ui_dir.empty()) ui = o.ui_dir;
  api.mount(server, ui);
  out << "review API on http://" << o.host << ":" << o.port << kApiPrefix << "\n" << std::flush;
  if (!server.listen(o.host, o.port)) throw std::runtime_error("cannot listen on " + o.host + ":" + std::to_string(o.port));
  return kOk;
}

void add_provider_flags(CLI::App* cmd, Options& o, Given& g) {
  auto& p = o.provider;
  g.add("--provider", cmd->add_option("--provider", p.provider, "mock or http")->check(CLI::IsMember({"mock", "http"})));
  g.add("--mock-script", cmd->add_option("--mock-script", p.mock_script, "Mock provider script (JSON)"));
  g.add("--endpoint", cmd->add_option("--endpoint", p.endpoint, "Chat completions URL for --provider http"));
  g.add("--model", cmd->add_option("--model", p.model, "Model identifier"));
  g.add("--temperature", cmd->add_option("--temperature", p.temperature, "Sampling temperature")->check(CLI::NonNegativeNumber));
  cmd->add_option("--max-retries", p.max_retries, "Retries per request");
  cmd->add_option("--timeout-ms", p.timeout_ms, "Request timeout")->check(CLI::PositiveNumber);
  cmd->add_option("--concurrency", p.concurrency, "Requests in flight")->check(CLI::PositiveNumber);
  cmd->add_option("--rate-limit", p.rate_limit, "Max requests per interval (0 = unlimited)");
  cmd->add_option("--rate-interval-ms", p.rate_interval_ms, "Rate limit interval")->check(CLI::PositiveNumber);
  cmd->add_option("--backoff-ms", p.backoff_ms, "Base retry backoff");
}

void add_review_flags(CLI::App* cmd, Options& o, Given& g) {
  g.add("--flag-bands", cmd->add_option("--flag-bands", o.flag_bands, "Bands routed to review"));
  g.add("--strictness", cmd->add_option("--strictness", o.strictness, "headline, decisive or strict")
                               ->check(CLI::IsMember({"headline", "decisive", "strict"})));
  g.add("--quorum", cmd->add_option("--quorum", o.quorum, "Raters needed for a unanimous resolution")->check(CLI::PositiveNumber));
}

}  // namespace

ReviewData load_review_data(const fs::path& run_dir, const RunManifest& manifest) {
  auto corpus = load_corpus(run_dir);
  auto taxonomy = load_run_taxonomy(run_dir, manifest);
  auto assignments = assignments_from_csv(read_file(run_dir / files::kAssignments), taxonomy);
  auto checks = checks_from_csv(read_file(run_dir / files::kChecks));
  FlagPolicy policy;
  if (auto v = manifest.config_value("flag_bands")) policy = parse_flag_policy(v->get<std::string>());
  Strictness strictness = Strictness::decisive;
  if (auto v = manifest.config_value("strictness")) strictness = parse_strictness(v->get<std::string>());
  return ReviewData{std::move(corpus), std::move(taxonomy), std::move(assignments), std::move(checks), policy, strictness};
}

std::shared_ptr<ReviewStore> open_review_store(const fs::path& run_dir, const ReviewData& data, std::size_t quorum) {
  std::set<std::string> known;
  for (const auto& a : data.assignments) known.insert(a.assignment_id);
  return std::make_shared<ReviewStore>(std::move(known), quorum, run_dir / files::kJudgments);
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Label peer-feedback comments against a teamwork taxonomy with a chat model, self-check the labels "
               "and adjudicate them"};
  app.require_subcommand(1);
  Options o;
  Given g;

  auto add_run_dir = [&](CLI::App* cmd) { cmd->add_option("--run-dir", o.run_dir, "Run directory")->required(); };

  auto* ingest_cmd = app.add_subcommand("ingest", "Read comments, redact names, optionally sample");
  add_run_dir(ingest_cmd);
  ingest_cmd->add_option("--input", o.input, "Comment file (csv, tsv or jsonl)")->required();
  ingest_cmd->add_option("--format", o.format, "csv, tsv, jsonl or canonical (default: by extension)");
  ingest_cmd->add_option("--roster", o.roster, "Names to redact, one per line");
  g.add("--sample", ingest_cmd->add_option("--sample", o.sample, "Sample this many comments"));
  ingest_cmd->add_option("--seed", o.seed, "Sampling seed");

  auto* label_cmd = app.add_subcommand("label", "Label comments in batches");
  add_run_dir(label_cmd);
  g.add("--batch-size", label_cmd->add_option("--batch-size", o.batch_size, "Comments per request")->check(CLI::PositiveNumber));
  g.add("--taxonomy", label_cmd->add_option("--taxonomy", o.taxonomy, "Taxonomy file or 'default'"));
  g.add("--shuffle-taxonomy", label_cmd->add_option("--shuffle-taxonomy", o.shuffle_seed, "Shuffle label order with this seed"));
  g.add("--fuzzy-threshold", label_cmd->add_option("--fuzzy-threshold", o.fuzzy_threshold, "Fuzzy match threshold")
                                    ->check(CLI::Range(0.0, 1.0)));
  g.add("--corrective-redispatch",
        label_cmd->add_flag("--corrective-redispatch", o.provider.corrective, "Re-send unparseable batches once"));
  add_provider_flags(label_cmd, o, g);

  auto* verify_cmd = app.add_subcommand("verify", "Ask the model to rate each label 1-10");
  add_run_dir(verify_cmd);
  add_provider_flags(verify_cmd, o, g);
  g.add("--flag-bands", verify_cmd->add_option("--flag-bands", o.flag_bands, "Bands routed to review"));

  auto* judge_cmd = app.add_subcommand("judge", "Record a human judgment (-1, 0, +1)");
  add_run_dir(judge_cmd);
  judge_cmd->add_option("--assignment", o.assignment, "Assignment id")->required();
  judge_cmd->add_option("--rater", o.rater, "Rater id")->required();
  judge_cmd->add_option("--score", o.score, "-1, 0 or 1")->required();
  g.add("--note", judge_cmd->add_option("--note", o.note, "Free-text note"));
  judge_cmd->add_flag("--adjudicate", o.adjudicate, "Record as the adjudication decision");
  judge_cmd->add_option("--timestamp", o.timestamp, "Override the judgment timestamp");
  g.add("--expected-prior-count",
        judge_cmd->add_option("--expected-prior-count", o.expected_prior, "Fail if the rater's history length differs"));
  add_review_flags(judge_cmd, o, g);

  auto* report_cmd = app.add_subcommand("report", "Write agreement report and cross-tab");
  add_run_dir(report_cmd);
  add_review_flags(report_cmd, o, g);

  auto* export_cmd = app.add_subcommand("export", "Export a table");
  add_run_dir(export_cmd);
  export_cmd->add_option("--what", o.what, "assignments, issues, checks, queue, judgments, resolved, agreement, crosstab, report")
      ->required();
  export_cmd->add_option("--out", o.out, "Output file (default stdout)");
  add_review_flags(export_cmd, o, g);

  auto* serve_cmd = app.add_subcommand("review-serve", "Serve the review API");
  add_run_dir(serve_cmd);
  serve_cmd->add_option("--host", o.host, "Bind address");
  serve_cmd->add_option("--port", o.port, "Port");
  serve_cmd->add_option("--ui-dir", o.ui_dir, "Static review UI directory");
  add_review_flags(serve_cmd, o, g);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*ingest_cmd) return cmd_ingest(o, g, out);
    if (*label_cmd) return cmd_label(o, g, out, err);
    if (*verify_cmd) return cmd_verify(o, g, out, err);
    if (*judge_cmd) return cmd_judge(o, g, out);
    if (*report_cmd) return cmd_report(o, g, out);
    if (*export_cmd) return cmd_export(o, g, out);
    if (*serve_cmd) return cmd_serve(o, g, out);
  } catch (const StageError& e) {
    err << "error: " << e.what() << "\n";
    return kStageOrder;
  } catch (const ProviderError& e) {
    err << "provider error: " << e.what() << "\n";
    return kProviderFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}

}  // namespace peerlabel::service
