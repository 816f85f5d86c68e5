#include "peerlabel/api.hpp"

#include "httplib.h"

namespace peerlabel {

namespace {

nlohmann::ordered_json error_body(std::string_view code, std::string_view message) {
  nlohmann::ordered_json j;
  j["error"] = code;
  j["message"] = message;
  return j;
}

int status_for(ReviewErrorKind kind) {
  switch (kind) {
    case ReviewErrorKind::unknown_assignment: return 404;
    case ReviewErrorKind::invalid_score: return 422;
    case ReviewErrorKind::write_conflict: return 409;
    case ReviewErrorKind::invalid_request: return 422;
    case ReviewErrorKind::corrupt_log: return 500;
  }
  return 500;
}

std::string_view code_for(ReviewErrorKind kind) {
  switch (kind) {
    case ReviewErrorKind::unknown_assignment: return "unknown_assignment";
    case ReviewErrorKind::invalid_score: return "invalid_score";
    case ReviewErrorKind::write_conflict: return "write_conflict";
    case ReviewErrorKind::invalid_request: return "invalid_request";
    case ReviewErrorKind::corrupt_log: return "corrupt_log";
  }
  return "error";
}

nlohmann::ordered_json resolution_json(const Resolution& r) {
  nlohmann::ordered_json j;
  j["status"] = to_string(r.status);
  j["resolved"] = r.resolved ? to_json(*r.resolved) : nlohmann::ordered_json(nullptr);
  j["reason"] = r.reason;
  return j;
}

nlohmann::ordered_json judgments_json(const std::vector<HumanJudgment>& js) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& j : js) arr.push_back(to_json(j));
  return arr;
}

}  // namespace

nlohmann::ordered_json report_payload(const ReviewData& data, const ReviewStore& store) {
  const auto resolved = store.resolved_scores();
  std::size_t labelled = 0;
  for (const auto& a : data.assignments) labelled += !a.not_applicable();
  std::size_t judged_assignments = 0;
  std::size_t pending = 0;
  for (const auto& a : data.assignments) {
    const auto r = store.resolve(a.assignment_id);
    if (r.status != ResolutionStatus::no_judgments) ++judged_assignments;
    if (r.status == ResolutionStatus::pending) ++pending;
  }
  nlohmann::ordered_json j;
  j["assignment_count"] = data.assignments.size();
  j["labelled_count"] = labelled;
  j["checked_count"] = data.checks.size();
  j["flagged_count"] = flag(data.checks, data.policy).size();
  j["flag_bands"] = format_flag_policy(data.policy);
  j["judged_count"] = resolved.size();
  j["pending_count"] = pending;
  j["with_judgments_count"] = judged_assignments;
  j["agreement"] = to_json(agreement_report(resolved));
  j["cross_tab"] = to_json(cross_tab(data.checks, resolved, data.strictness));
  return j;
}

ReviewApi::ReviewApi(ReviewData data, std::shared_ptr<ReviewStore> store, std::optional<std::string> token)
    : data_(std::move(data)), store_(std::move(store)), token_(std::move(token)) {
  for (std::size_t i = 0; i < data_.assignments.size(); ++i) index_.emplace(data_.assignments[i].assignment_id, i);
}

namespace {

const AccuracyCheck* find_check(const ReviewData& data, std::string_view assignment_id) {
  for (const auto& c : data.checks) {
    if (c.assignment_id == assignment_id) return &c;
  }
  return nullptr;
}

nlohmann::ordered_json assignment_json(const ReviewData& data, const LabelAssignment& a) {
  nlohmann::ordered_json j;
  const auto* comment = data.corpus.find(a.comment_id);
  j["assignment_id"] = a.assignment_id;
  j["comment_id"] = a.comment_id;
  j["comment_text"] = comment ? comment->text : std::string();
  j["label_id"] = a.label ? a.label->id : std::string(kNotApplicableId);
  j["label"] = a.label ? a.label->text : std::string(kNotApplicableId);
  j["raw_label"] = a.raw_label;
  j["match_kind"] = to_string(a.match_kind);
  j["batch_index"] = a.batch_index;
  if (const auto* c = find_check(data, a.assignment_id)) {
    j["rating"] = c->rating;
    j["band"] = to_string(c->band);
    j["flagged"] = data.policy.flag_bands.count(c->band) > 0;
  } else {
    j["rating"] = nullptr;
    j["band"] = nullptr;
    j["flagged"] = false;
  }
  return j;
}

}  // namespace

nlohmann::ordered_json queue_payload(const ReviewData& data, const ReviewStore& store,
                                     const std::optional<std::string>& rater) {
  std::map<std::string_view, const LabelAssignment*> by_id;
  for (const auto& a : data.assignments) by_id.emplace(a.assignment_id, &a);
  auto items = nlohmann::ordered_json::array();
  for (const auto& entry : flag(data.checks, data.policy)) {
    auto it = by_id.find(entry.assignment_id);
    if (it == by_id.end()) continue;
    auto j = assignment_json(data, *it->second);
    const auto live = store.live_judgments(entry.assignment_id);
    // Peer scores stay hidden from a rater until they have submitted.
    bool reveal = true;
    if (rater) {
      nlohmann::ordered_json mine = nullptr;
      std::size_t peers = 0;
      for (const auto& h : live) {
        if (h.rater_id == *rater && !h.adjudication) mine = to_json(h);
        else ++peers;
      }
      reveal = !mine.is_null();
      j["my_judgment"] = mine;
      j["peer_judgment_count"] = peers;
    }
    j["judgments"] = reveal ? judgments_json(live) : nlohmann::ordered_json::array();
    j["resolution"] = reveal ? resolution_json(store.resolve(entry.assignment_id)) : nlohmann::ordered_json(nullptr);
    items.push_back(std::move(j));
  }
  nlohmann::ordered_json body;
  body["flag_bands"] = format_flag_policy(data.policy);
  body["items"] = std::move(items);
  return body;
}

ApiResponse ReviewApi::list_queue(const std::optional<std::string>& rater) const {
  return ApiResponse{200, queue_payload(data_, *store_, rater)};
}

ApiResponse ReviewApi::get_assignment(std::string_view assignment_id) const {
  auto it = index_.find(std::string(assignment_id));
  if (it == index_.end()) return ApiResponse{404, error_body("unknown_assignment", "no assignment " + std::string(assignment_id))};
  auto j = assignment_json(data_, data_.assignments[it->second]);
  j["judgments"] = judgments_json(store_->live_judgments(assignment_id));
  std::vector<HumanJudgment> all;
  for (const auto& h : store_->log()) {
    if (h.assignment_id == assignment_id) all.push_back(h);
  }
  j["history"] = judgments_json(all);
  j["resolution"] = resolution_json(store_->resolve(assignment_id));
  return ApiResponse{200, std::move(j)};
}

ApiResponse ReviewApi::post_judgment(std::string_view body) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception& e) {
    return ApiResponse{400, error_body("bad_json", e.what())};
  }
  if (!j.is_object()) return ApiResponse{400, error_body("bad_json", "body must be an object")};
  JudgmentRequest req;
  try {
    req.assignment_id = j.at("assignment_id").get<std::string>();
    req.rater_id = j.at("rater_id").get<std::string>();
    const auto& score = j.at("score");
    if (!score.is_number_integer()) return ApiResponse{422, error_body("invalid_score", "score must be -1, 0 or 1")};
    req.score = score.get<int>();
    if (j.contains("note") && !j.at("note").is_null()) req.note = j.at("note").get<std::string>();
    req.adjudication = j.value("adjudication", false);
    if (j.contains("expected_prior_count") && !j.at("expected_prior_count").is_null()) {
      req.expected_prior_count = j.at("expected_prior_count").get<std::size_t>();
    }
  } catch (const nlohmann::json::exception& e) {
    return ApiResponse{422, error_body("invalid_request", e.what())};
  }
  try {
    const auto stored = store_->record_judgment(req);
    nlohmann::ordered_json out;
    out["judgment"] = to_json(stored);
    out["resolution"] = resolution_json(store_->resolve(stored.assignment_id));
    return ApiResponse{201, std::move(out)};
  } catch (const ReviewError& e) {
    return ApiResponse{status_for(e.kind), error_body(code_for(e.kind), e.what())};
  }
}

ApiResponse ReviewApi::get_report() const { return ApiResponse{200, report_payload(data_, *store_)}; }

bool ReviewApi::authorized(std::string_view header) const {
  if (!token_) return true;
  return header == "Bearer " + *token_;
}

void ReviewApi::mount(httplib::Server& server, const std::optional<std::filesystem::path>& ui_dir) {
  const std::string prefix(kApiPrefix);
  auto reply = [](httplib::Response& res, const ApiResponse& r) {
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };
  auto guard = [this, reply](const httplib::Request& req, httplib::Response& res) {
    if (authorized(req.get_header_value("Authorization"))) return true;
    reply(res, ApiResponse{401, error_body("unauthorized", "missing or wrong bearer token")});
    return false;
  };

  server.Get(prefix + "/queue", [=, this](const httplib::Request& req, httplib::Response& res) {
    if (!guard(req, res)) return;
    std::optional<std::string> rater;
    if (req.has_param("rater")) rater = req.get_param_value("rater");
    reply(res, list_queue(rater));
  });
  server.Get(prefix + R"(/assignments/([^/]+))", [=, this](const httplib::Request& req, httplib::Response& res) {
    if (!guard(req, res)) return;
    reply(res, get_assignment(httplib::detail::decode_url(req.matches[1].str(), false)));
  });
  server.Post(prefix + "/judgments", [=, this](const httplib::Request& req, httplib::Response& res) {
    if (!guard(req, res)) return;
    reply(res, post_judgment(req.body));
  });
  server.Get(prefix + "/report", [=, this](const httplib::Request& req, httplib::Response& res) {
    if (!guard(req, res)) return;
    reply(res, get_report());
  });
  server.Get(prefix + "/health", [=](const httplib::Request&, httplib::Response& res) {
    reply(res, ApiResponse{200, {{"status", "ok"}}});
  });
  if (ui_dir) server.set_mount_point("/", ui_dir->string());
}

}  // namespace peerlabel
