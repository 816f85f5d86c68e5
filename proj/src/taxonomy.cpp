#include "peerlabel/taxonomy.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <set>

#include "json.hpp"
#include "peerlabel/hash.hpp"
#include "peerlabel/rng.hpp"
#include "peerlabel/text.hpp"

namespace peerlabel {

std::string_view to_string(LabelSource source) {
  return source == LabelSource::baker2008 ? "Baker2008" : "Miller2016";
}

std::string_view to_string(Polarity polarity) { return polarity == Polarity::positive ? "positive" : "negative"; }

LabelSource parse_label_source(std::string_view s) {
  if (text::iequals(s, "Baker2008")) return LabelSource::baker2008;
  if (text::iequals(s, "Miller2016")) return LabelSource::miller2016;
  throw TaxonomyError("unknown label source: " + std::string(s));
}

Polarity parse_polarity(std::string_view s) {
  if (text::iequals(s, "positive")) return Polarity::positive;
  if (text::iequals(s, "negative")) return Polarity::negative;
  throw TaxonomyError("unknown polarity: " + std::string(s));
}

std::string_view to_string(MatchKind kind) {
  switch (kind) {
    case MatchKind::exact: return "exact";
    case MatchKind::normalized: return "normalized";
    case MatchKind::fuzzy: return "fuzzy";
    case MatchKind::not_applicable: return "not_applicable";
    case MatchKind::unmatched: return "unmatched";
  }
  return "unmatched";
}

MatchKind parse_match_kind(std::string_view s) {
  for (auto k : {MatchKind::exact, MatchKind::normalized, MatchKind::fuzzy, MatchKind::not_applicable,
                 MatchKind::unmatched}) {
    if (to_string(k) == s) return k;
  }
  throw std::invalid_argument("unknown match kind: " + std::string(s));
}

Taxonomy::Taxonomy(std::vector<TaxonomyLabel> labels, std::optional<std::uint64_t> order_seed)
    : labels_(std::move(labels)), order_seed_(order_seed) {
  std::set<std::string> ids;
  std::set<std::string> texts;
  for (const auto& label : labels_) {
    if (label.id.empty() || text::trim(label.text).empty()) throw TaxonomyError("label with empty id or text");
    if (!ids.insert(label.id).second) throw TaxonomyError("duplicate label id: " + label.id);
    if (!texts.insert(text::to_lower(label.text)).second) throw TaxonomyError("duplicate label text: " + label.text);
  }
}

const TaxonomyLabel* Taxonomy::find_by_id(std::string_view id) const {
  for (const auto& label : labels_) {
    if (label.id == id) return &label;
  }
  return nullptr;
}

const TaxonomyLabel* Taxonomy::find_by_text(std::string_view label_text) const {
  for (const auto& label : labels_) {
    if (text::iequals(label.text, label_text)) return &label;
  }
  return nullptr;
}

std::optional<std::size_t> Taxonomy::position_of(std::string_view id) const {
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i].id == id) return i;
  }
  return std::nullopt;
}

std::vector<std::string> Taxonomy::ids() const {
  std::vector<std::string> out;
  out.reserve(labels_.size());
  for (const auto& label : labels_) out.push_back(label.id);
  return out;
}

Taxonomy default_taxonomy() {
  struct Row {
    const char* text;
    LabelSource source;
  };
  // Prompt order: the Baker items except "Has good attitude", then the Miller
  // items, then "Has good attitude".
  static constexpr Row kRows[] = {
      {"Attended group meetings", LabelSource::baker2008},
      {"Was available and on time", LabelSource::baker2008},
      {"Submitted quality work", LabelSource::baker2008},
      {"Exerted effort and took an active role", LabelSource::baker2008},
      {"Cooperated and communicated with others", LabelSource::baker2008},
      {"Managed group conflict", LabelSource::baker2008},
      {"Made cognitive contributions", LabelSource::baker2008},
      {"Possessed and applied necessary knowledge and skills", LabelSource::baker2008},
      {"Provided structure for goal achievement", LabelSource::baker2008},
      {"Was dependable, kept his or her word", LabelSource::baker2008},
      {"Failing to prioritize project", LabelSource::miller2016},
      {"Lack of competence", LabelSource::miller2016},
      {"Lack of experience", LabelSource::miller2016},
      {"Lack of skills", LabelSource::miller2016},
      {"Failed to advance toward project's completion", LabelSource::miller2016},
      {"Lack of initiative", LabelSource::miller2016},
      {"Lack of communication", LabelSource::miller2016},
      {"Unreliable", LabelSource::miller2016},
      {"Procrastination", LabelSource::miller2016},
      {"Inconsistent contribution", LabelSource::miller2016},
      {"High expectations", LabelSource::miller2016},
      {"Inconsistency with an engineering identity", LabelSource::miller2016},
      {"Restricted work of others", LabelSource::miller2016},
      {"Has good attitude", LabelSource::baker2008},
  };
  std::vector<TaxonomyLabel> labels;
  for (const auto& row : kRows) {
    labels.push_back(TaxonomyLabel{text::slugify(row.text), row.text, row.source,
                                   row.source == LabelSource::baker2008 ? Polarity::positive : Polarity::negative});
  }
  return Taxonomy(std::move(labels));
}

Taxonomy shuffle(const Taxonomy& taxonomy, std::uint64_t seed) {
  std::vector<TaxonomyLabel> labels(taxonomy.labels().begin(), taxonomy.labels().end());
  std::mt19937_64 rng(seed);
  fisher_yates(std::span<TaxonomyLabel>(labels), rng);
  return Taxonomy(std::move(labels), seed);
}

Taxonomy reorder(const Taxonomy& taxonomy, std::span<const std::string> ids, std::optional<std::uint64_t> order_seed) {
  if (ids.size() != taxonomy.size()) throw TaxonomyError("label order does not cover the taxonomy");
  std::vector<TaxonomyLabel> labels;
  for (const auto& id : ids) {
    const auto* label = taxonomy.find_by_id(id);
    if (!label) throw TaxonomyError("label order names unknown id: " + id);
    labels.push_back(*label);
  }
  return Taxonomy(std::move(labels), order_seed);
}

std::string serialize_taxonomy(const Taxonomy& taxonomy) {
  std::string out;
  for (const auto& label : taxonomy.labels()) {
    nlohmann::ordered_json j;
    j["id"] = label.id;
    j["text"] = label.text;
    j["source"] = to_string(label.source);
    j["polarity_hint"] = to_string(label.polarity_hint);
    out += j.dump();
    out += '\n';
  }
  return out;
}

Taxonomy parse_taxonomy(std::string_view content) {
  std::vector<TaxonomyLabel> labels;
  std::size_t line_no = 0;
  for (const auto& line : text::split(content, '\n')) {
    ++line_no;
    const auto trimmed = text::trim(line);
    if (trimmed.empty() || trimmed.front() == '#') continue;
    try {
      const auto j = nlohmann::json::parse(trimmed);
      const auto label_text = j.at("text").get<std::string>();
      labels.push_back(TaxonomyLabel{j.contains("id") ? j.at("id").get<std::string>() : text::slugify(label_text),
                                     label_text, parse_label_source(j.at("source").get<std::string>()),
                                     parse_polarity(j.at("polarity_hint").get<std::string>())});
    } catch (const nlohmann::json::exception& e) {
      throw TaxonomyError("taxonomy line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (labels.empty()) throw TaxonomyError("taxonomy has no labels");
  return Taxonomy(std::move(labels));
}

Taxonomy load_taxonomy(const std::filesystem::path& path) { return parse_taxonomy(read_file(path)); }

double token_similarity(std::string_view a, std::string_view b) {
  const auto ta = text::content_tokens(a);
  const auto tb = text::content_tokens(b);
  const std::set<std::string> sa(ta.begin(), ta.end());
  const std::set<std::string> sb(tb.begin(), tb.end());
  if (sa.empty() || sb.empty()) return 0.0;
  std::size_t common = 0;
  for (const auto& t : sa) common += sb.count(t);
  const double overlap = static_cast<double>(common) / static_cast<double>(std::min(sa.size(), sb.size()));
  const double jaccard = static_cast<double>(common) / static_cast<double>(sa.size() + sb.size() - common);
  return 0.5 * (overlap + jaccard);
}

bool is_not_applicable(std::string_view raw) {
  const auto t = text::trim(raw);
  return text::iequals(t, "N/A") || text::iequals(t, "N/A.");
}

CanonicalMatch canonicalize(std::string_view raw, const Taxonomy& taxonomy, double fuzzy_threshold) {
  const auto trimmed = text::trim(raw);
  if (is_not_applicable(trimmed)) return CanonicalMatch{std::nullopt, MatchKind::not_applicable, 1.0, {}};
  if (trimmed.empty()) return CanonicalMatch{};

  if (const auto* label = taxonomy.find_by_text(trimmed)) return CanonicalMatch{*label, MatchKind::exact, 1.0, {}};

  const auto folded = text::fold(trimmed);
  for (const auto& label : taxonomy.labels()) {
    if (!folded.empty() && text::fold(label.text) == folded) {
      return CanonicalMatch{label, MatchKind::normalized, 1.0, {}};
    }
  }

  double best = 0.0;
  const TaxonomyLabel* best_label = nullptr;
  std::vector<std::string> tied;
  for (const auto& label : taxonomy.labels()) {
    const double score = token_similarity(trimmed, label.text);
    if (score > best) {
      best = score;
      best_label = &label;
      tied.clear();
    } else if (best_label && score == best) {
      tied.push_back(label.id);
    }
  }
  if (best_label && best >= fuzzy_threshold) return CanonicalMatch{*best_label, MatchKind::fuzzy, best, tied};
  return CanonicalMatch{std::nullopt, MatchKind::unmatched, best, {}};
}

}  // namespace peerlabel
