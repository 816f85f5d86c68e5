#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace peerlabel {

enum class LabelSource { baker2008, miller2016 };
enum class Polarity { positive, negative };

std::string_view to_string(LabelSource source);
std::string_view to_string(Polarity polarity);
LabelSource parse_label_source(std::string_view s);
Polarity parse_polarity(std::string_view s);

struct TaxonomyLabel {
  std::string id;
  std::string text;
  LabelSource source = LabelSource::baker2008;
  Polarity polarity_hint = Polarity::positive;

  bool operator==(const TaxonomyLabel&) const = default;
};

struct TaxonomyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Ordered, immutable label set. Label ids and texts are unique
/// (texts compared case-insensitively).
class Taxonomy {
 public:
  explicit Taxonomy(std::vector<TaxonomyLabel> labels, std::optional<std::uint64_t> order_seed = std::nullopt);

  std::span<const TaxonomyLabel> labels() const { return labels_; }
  std::size_t size() const { return labels_.size(); }
  const TaxonomyLabel& operator[](std::size_t i) const { return labels_[i]; }
  std::optional<std::uint64_t> order_seed() const { return order_seed_; }

  const TaxonomyLabel* find_by_id(std::string_view id) const;
  const TaxonomyLabel* find_by_text(std::string_view text) const;
  std::optional<std::size_t> position_of(std::string_view id) const;

  std::vector<std::string> ids() const;

 private:
  std::vector<TaxonomyLabel> labels_;
  std::optional<std::uint64_t> order_seed_;
};

/// The 24-label teammate feedback taxonomy (11 Baker 2008 items, 13 Miller
/// 2016 items) in the order the labeling prompt lists them.
Taxonomy default_taxonomy();

/// Deterministic permutation of `taxonomy` for `seed`.
Taxonomy shuffle(const Taxonomy& taxonomy, std::uint64_t seed);

/// Reorders the default taxonomy (or any taxonomy) to the given id order.
Taxonomy reorder(const Taxonomy& taxonomy, std::span<const std::string> ids, std::optional<std::uint64_t> order_seed);

// Line-delimited JSON, one {id, text, source, polarity_hint} record per line.
std::string serialize_taxonomy(const Taxonomy& taxonomy);
Taxonomy parse_taxonomy(std::string_view content);
Taxonomy load_taxonomy(const std::filesystem::path& path);

inline constexpr double kDefaultFuzzyThreshold = 0.55;

enum class MatchKind { exact, normalized, fuzzy, not_applicable, unmatched };
std::string_view to_string(MatchKind kind);
MatchKind parse_match_kind(std::string_view s);

struct CanonicalMatch {
  std::optional<TaxonomyLabel> label;
  MatchKind kind = MatchKind::unmatched;
  double score = 0.0;
  // Set when another label reached the same best fuzzy score; the earlier
  // label in taxonomy order wins.
  std::vector<std::string> tied_with;
};

/// Token-set similarity in [0,1]: the mean of the overlap coefficient and the
/// Jaccard index over content tokens. 0 when either side has no tokens.
double token_similarity(std::string_view a, std::string_view b);

bool is_not_applicable(std::string_view raw);

/// Maps a model-emitted label string onto the taxonomy. Total: always returns
/// exactly one kind. Precedence is exact, normalized, fuzzy.
CanonicalMatch canonicalize(std::string_view raw, const Taxonomy& taxonomy,
                            double fuzzy_threshold = kDefaultFuzzyThreshold);

}  // namespace peerlabel
