#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fsgauge/feature_store.hpp"

namespace fsgauge {

struct EpisodeSpec {
  int n_way = 5;
  int k_shot = 5;
  int q_query = 15;
  int test_per_class = 50;
  /// Unset = balanced queries; otherwise the query share of the first class.
  std::optional<double> first_class_fraction;
  std::uint64_t seed = 0;
};

/// One sampled few-shot task. All index lists hold FeatureSet row indices,
/// grouped per episode class (position c refers to class_ids[c]).
struct Episode {
  std::vector<Label> class_ids;
  std::vector<std::vector<std::size_t>> support;
  std::vector<std::vector<std::size_t>> query;
  std::vector<std::vector<std::size_t>> test;

  int n_way() const { return static_cast<int>(class_ids.size()); }

  /// Flattened rows (class-major) and their episode-local labels 0..N-1.
  std::vector<std::size_t> support_rows() const;
  std::vector<std::size_t> query_rows() const;
  std::vector<std::size_t> test_rows() const;
  std::vector<int> support_labels() const;
  std::vector<int> query_labels() const;
  std::vector<int> test_labels() const;
};

/// Validates the spec itself (N >= 2, K + Q >= 1, fractions in (0,1)).
void validate_spec(const EpisodeSpec& spec);

/// Per-class query counts: balanced, or round-half-up share for the first
/// class with the remainder spread over the others in class order.
std::vector<int> query_counts(const EpisodeSpec& spec);

/// Draws N classes uniformly, then K + Q + test rows per class, all without
/// replacement. Deterministic in (fs, spec).
Episode sample_episode(const FeatureSet& fs, const EpisodeSpec& spec);

/// As sample_episode with the classes given; only rows are redrawn.
Episode sample_episode_fixed_classes(const FeatureSet& fs, const EpisodeSpec& spec,
                                     const std::vector<Label>& class_ids);

/// Draws N classes among those with pre-assigned shots and reuses the shots
/// verbatim; queries and test rows come from the remaining rows.
Episode sample_episode_fixed_shots(const FeatureSet& fs, const EpisodeSpec& spec,
                                   const std::map<Label, std::vector<std::size_t>>& shots_per_class);

/// Same as sample_episode; the spec must carry first_class_fraction.
Episode sample_unbalanced_queries(const FeatureSet& fs, const EpisodeSpec& spec);

/// JSON text with class ids and index lists, stable across runs.
std::string episode_to_json(const Episode& episode);
Episode episode_from_json(const std::string& text);

}  // namespace fsgauge
