#include "peerlabel/review.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <mutex>

#include "peerlabel/csv.hpp"
#include "peerlabel/hash.hpp"
#include "peerlabel/text.hpp"

namespace peerlabel {

std::string_view to_string(Score score) {
  switch (score) {
    case Score::disagree: return "disagree";
    case Score::ambiguous: return "ambiguous";
    case Score::agree: return "agree";
  }
  return "ambiguous";
}

int to_int(Score score) { return static_cast<int>(score); }

std::string_view to_string(ResolutionMethod method) {
  return method == ResolutionMethod::unanimous ? "unanimous" : "adjudicated";
}

std::string_view to_string(ResolutionStatus status) {
  switch (status) {
    case ResolutionStatus::resolved: return "resolved";
    case ResolutionStatus::pending: return "pending";
    case ResolutionStatus::no_judgments: return "no_judgments";
  }
  return "pending";
}

std::string utc_timestamp_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

namespace {

Score score_from_int(int v) {
  if (v < -1 || v > 1) throw ReviewError(ReviewErrorKind::invalid_score, "score must be -1, 0 or 1, got " + std::to_string(v));
  return static_cast<Score>(v);
}

}  // namespace

std::string judgment_to_json_line(const HumanJudgment& j) { return to_json(j).dump(); }

HumanJudgment judgment_from_json(const nlohmann::json& j) {
  HumanJudgment h;
  h.seq = j.at("seq").get<std::size_t>();
  h.assignment_id = j.at("assignment_id").get<std::string>();
  h.rater_id = j.at("rater_id").get<std::string>();
  h.score = score_from_int(j.at("score").get<int>());
  h.timestamp = j.at("timestamp").get<std::string>();
  if (j.contains("note") && !j.at("note").is_null()) h.note = j.at("note").get<std::string>();
  h.adjudication = j.value("adjudication", false);
  return h;
}

ReviewStore::ReviewStore(std::set<std::string> known_assignments, std::size_t quorum,
                         std::optional<std::filesystem::path> log_path)
    : known_(std::move(known_assignments)), quorum_(quorum), log_path_(std::move(log_path)) {
  if (quorum_ == 0) throw std::invalid_argument("quorum must be >= 1");
  if (!log_path_ || !std::filesystem::exists(*log_path_)) return;
  std::size_t line_no = 0;
  for (const auto& line : text::split(read_file(*log_path_), '\n')) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      auto j = judgment_from_json(nlohmann::json::parse(line));
      if (!knows(j.assignment_id)) throw ReviewError(ReviewErrorKind::corrupt_log, "unknown assignment " + j.assignment_id);
      if (j.seq != log_.size() + 1) throw ReviewError(ReviewErrorKind::corrupt_log, "sequence gap");
      apply(std::move(j));
    } catch (const std::exception& e) {
      throw ReviewError(ReviewErrorKind::corrupt_log,
                        "judgment log line " + std::to_string(line_no) + ": " + e.what());
    }
  }
}

void ReviewStore::apply(HumanJudgment judgment) {
  const auto index = log_.size();
  if (judgment.adjudication) adjudications_[judgment.assignment_id].push_back(index);
  else by_rater_[judgment.assignment_id][judgment.rater_id].push_back(index);
  log_.push_back(std::move(judgment));
}

HumanJudgment ReviewStore::record_judgment(const JudgmentRequest& request) {
  if (text::trim(request.rater_id).empty()) throw ReviewError(ReviewErrorKind::invalid_request, "rater_id is required");
  if (!knows(request.assignment_id)) {
    throw ReviewError(ReviewErrorKind::unknown_assignment, "unknown assignment " + request.assignment_id);
  }
  const auto score = score_from_int(request.score);

  std::unique_lock lock(mutex_);
  if (request.expected_prior_count) {
    std::size_t prior = 0;
    if (request.adjudication) {
      if (auto it = adjudications_.find(request.assignment_id); it != adjudications_.end()) {
        for (auto i : it->second) prior += log_[i].rater_id == request.rater_id;
      }
    } else if (auto it = by_rater_.find(request.assignment_id); it != by_rater_.end()) {
      if (auto r = it->second.find(request.rater_id); r != it->second.end()) prior = r->second.size();
    }
    if (prior != *request.expected_prior_count) {
      throw ReviewError(ReviewErrorKind::write_conflict, "rater " + request.rater_id + " has " + std::to_string(prior) +
                                                             " judgments on " + request.assignment_id + ", expected " +
                                                             std::to_string(*request.expected_prior_count));
    }
  }

  HumanJudgment j;
  j.seq = log_.size() + 1;
  j.assignment_id = request.assignment_id;
  j.rater_id = std::string(text::trim(request.rater_id));
  j.score = score;
  j.timestamp = request.timestamp.empty() ? utc_timestamp_now() : request.timestamp;
  j.note = request.note;
  j.adjudication = request.adjudication;

  if (log_path_) {
    std::ofstream out(*log_path_, std::ios::app | std::ios::binary);
    out << judgment_to_json_line(j) << '\n';
    out.flush();
    if (!out) throw std::runtime_error("cannot append to judgment log " + log_path_->string());
  }
  apply(j);
  return j;
}

std::vector<HumanJudgment> ReviewStore::live_judgments(std::string_view assignment_id) const {
  std::shared_lock lock(mutex_);
  std::vector<HumanJudgment> out;
  if (auto it = by_rater_.find(std::string(assignment_id)); it != by_rater_.end()) {
    for (const auto& [rater, indices] : it->second) out.push_back(log_[indices.back()]);
  }
  if (auto it = adjudications_.find(std::string(assignment_id)); it != adjudications_.end()) {
    out.push_back(log_[it->second.back()]);
  }
  return out;
}

std::vector<HumanJudgment> ReviewStore::history(std::string_view assignment_id, std::string_view rater_id) const {
  std::shared_lock lock(mutex_);
  std::vector<HumanJudgment> out;
  for (const auto& j : log_) {
    if (j.assignment_id == assignment_id && j.rater_id == rater_id) out.push_back(j);
  }
  return out;
}

std::vector<HumanJudgment> ReviewStore::log() const {
  std::shared_lock lock(mutex_);
  return log_;
}

Resolution ReviewStore::resolve_locked(const std::string& assignment_id) const {
  if (auto it = adjudications_.find(assignment_id); it != adjudications_.end()) {
    const auto& adj = log_[it->second.back()];
    return Resolution{ResolutionStatus::resolved,
                      ResolvedScore{assignment_id, adj.score, ResolutionMethod::adjudicated, adj.rater_id}, ""};
  }
  auto it = by_rater_.find(assignment_id);
  if (it == by_rater_.end() || it->second.empty()) return Resolution{ResolutionStatus::no_judgments, std::nullopt, "no judgments"};

  std::optional<Score> common;
  bool conflict = false;
  for (const auto& [rater, indices] : it->second) {
    const auto s = log_[indices.back()].score;
    if (common && *common != s) conflict = true;
    common = s;
  }
  if (conflict) return Resolution{ResolutionStatus::pending, std::nullopt, "raters disagree; awaiting adjudication"};
  if (it->second.size() < quorum_) {
    return Resolution{ResolutionStatus::pending, std::nullopt,
                      "awaiting quorum (" + std::to_string(it->second.size()) + "/" + std::to_string(quorum_) + ")"};
  }
  return Resolution{ResolutionStatus::resolved, ResolvedScore{assignment_id, *common, ResolutionMethod::unanimous, std::nullopt}, ""};
}

Resolution ReviewStore::resolve(std::string_view assignment_id) const {
  std::shared_lock lock(mutex_);
  return resolve_locked(std::string(assignment_id));
}

std::vector<ResolvedScore> ReviewStore::resolved_scores() const {
  std::shared_lock lock(mutex_);
  std::set<std::string> touched;
  for (const auto& [id, _] : by_rater_) touched.insert(id);
  for (const auto& [id, _] : adjudications_) touched.insert(id);
  std::vector<ResolvedScore> out;
  for (const auto& id : touched) {
    auto r = resolve_locked(id);
    if (r.resolved) out.push_back(std::move(*r.resolved));
  }
  return out;
}

int whole_percent(std::size_t count, std::size_t total) {
  if (total == 0) return 0;
  // floor(100 * count / total + 1/2) in integers
  return static_cast<int>((200 * count + total) / (2 * total));
}

AgreementReport agreement_report(std::span<const ResolvedScore> resolved) {
  AgreementReport r;
  for (const auto& s : resolved) {
    switch (s.score) {
      case Score::agree: ++r.accurate; break;
      case Score::ambiguous: ++r.ambiguous; break;
      case Score::disagree: ++r.inaccurate; break;
    }
  }
  r.total = resolved.size();
  r.no_data = r.total == 0;
  r.accurate_percent = whole_percent(r.accurate, r.total);
  r.ambiguous_percent = whole_percent(r.ambiguous, r.total);
  r.inaccurate_percent = whole_percent(r.inaccurate, r.total);
  return r;
}

std::string_view to_string(Strictness strictness) {
  switch (strictness) {
    case Strictness::headline: return "headline";
    case Strictness::decisive: return "decisive";
    case Strictness::strict: return "strict";
  }
  return "decisive";
}

Strictness parse_strictness(std::string_view s) {
  for (auto v : {Strictness::headline, Strictness::decisive, Strictness::strict}) {
    if (text::iequals(s, to_string(v))) return v;
  }
  throw std::invalid_argument("unknown strictness: " + std::string(s));
}

bool is_disagreement(Band band, Score score, Strictness strictness) {
  const bool conservative = band == Band::inaccurate && score == Score::agree;
  const bool lenient = band == Band::accurate && score == Score::disagree;
  if (conservative || lenient) return true;
  if (strictness == Strictness::headline) return false;
  if (band == Band::inaccurate && score == Score::ambiguous) return true;
  if (band == Band::accurate && score == Score::ambiguous) return true;
  if (strictness == Strictness::strict && band == Band::uncertain && score != Score::ambiguous) return true;
  return false;
}

CrossTab cross_tab(std::span<const AccuracyCheck> checks, std::span<const ResolvedScore> resolved, Strictness strictness) {
  std::map<std::string_view, Score> human;
  for (const auto& r : resolved) human.emplace(r.assignment_id, r.score);
  CrossTab tab;
  tab.strictness = strictness;
  for (const auto& c : checks) {
    auto it = human.find(c.assignment_id);
    if (it == human.end()) continue;
    const auto score = it->second;
    ++tab.cells[static_cast<std::size_t>(c.band)][static_cast<std::size_t>(to_int(score) + 1)];
    ++tab.total;
    if (c.band == Band::inaccurate && score == Score::agree) ++tab.model_conservative;
    if (c.band == Band::accurate && score == Score::disagree) ++tab.model_lenient;
    if (is_disagreement(c.band, score, strictness)) ++tab.disagreements;
  }
  return tab;
}

nlohmann::ordered_json to_json(const AgreementReport& r) {
  nlohmann::ordered_json j;
  j["total"] = r.total;
  j["no_data"] = r.no_data;
  j["counts"] = {{"accurate", r.accurate}, {"ambiguous", r.ambiguous}, {"inaccurate", r.inaccurate}};
  j["percent"] = {{"accurate", r.accurate_percent}, {"ambiguous", r.ambiguous_percent}, {"inaccurate", r.inaccurate_percent}};
  return j;
}

nlohmann::ordered_json to_json(const CrossTab& t) {
  nlohmann::ordered_json j;
  j["bands"] = {"inaccurate", "uncertain", "accurate"};
  j["scores"] = {-1, 0, 1};
  j["cells"] = t.cells;
  j["total"] = t.total;
  j["model_conservative"] = t.model_conservative;
  j["model_lenient"] = t.model_lenient;
  j["disagreements"] = t.disagreements;
  j["strictness"] = to_string(t.strictness);
  return j;
}

nlohmann::ordered_json to_json(const HumanJudgment& h) {
  nlohmann::ordered_json j;
  j["seq"] = h.seq;
  j["assignment_id"] = h.assignment_id;
  j["rater_id"] = h.rater_id;
  j["score"] = to_int(h.score);
  j["timestamp"] = h.timestamp;
  j["note"] = h.note ? nlohmann::ordered_json(*h.note) : nlohmann::ordered_json(nullptr);
  j["adjudication"] = h.adjudication;
  return j;
}

nlohmann::ordered_json to_json(const ResolvedScore& r) {
  nlohmann::ordered_json j;
  j["assignment_id"] = r.assignment_id;
  j["score"] = to_int(r.score);
  j["method"] = to_string(r.method);
  j["adjudicator"] = r.adjudicator ? nlohmann::ordered_json(*r.adjudicator) : nlohmann::ordered_json(nullptr);
  return j;
}

std::string agreement_to_csv(const AgreementReport& r) {
  std::string out = csv::format_row({"score", "class", "count", "percent"});
  out += csv::format_row({"1", "accurate", std::to_string(r.accurate), std::to_string(r.accurate_percent)});
  out += csv::format_row({"0", "ambiguous", std::to_string(r.ambiguous), std::to_string(r.ambiguous_percent)});
  out += csv::format_row({"-1", "inaccurate", std::to_string(r.inaccurate), std::to_string(r.inaccurate_percent)});
  out += csv::format_row({"", "total", std::to_string(r.total), r.no_data ? "no data" : "100"});
  return out;
}

std::string cross_tab_to_csv(const CrossTab& t) {
  std::string out = csv::format_row({"band", "human_-1", "human_0", "human_+1"});
  const char* names[] = {"inaccurate", "uncertain", "accurate"};
  for (std::size_t b = 0; b < 3; ++b) {
    out += csv::format_row({names[b], std::to_string(t.cells[b][0]), std::to_string(t.cells[b][1]), std::to_string(t.cells[b][2])});
  }
  return out;
}

}  // namespace peerlabel
