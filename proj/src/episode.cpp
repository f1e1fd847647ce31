#include "fsgauge/episode.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <nlohmann/json.hpp>

#include "fsgauge/errors.hpp"
#include "fsgauge/rng.hpp"

namespace fsgauge {

namespace {

// Partial Fisher-Yates: the first `count` entries become a uniform sample
// without replacement, in draw order.
std::vector<std::size_t> draw_without_replacement(std::vector<std::size_t> pool, std::size_t count, Rng& rng) {
  for (std::size_t i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  pool.resize(count);
  return pool;
}

std::vector<std::size_t> flatten(const std::vector<std::vector<std::size_t>>& groups) {
  std::vector<std::size_t> out;
  for (const auto& g : groups) out.insert(out.end(), g.begin(), g.end());
  return out;
}

std::vector<int> group_labels(const std::vector<std::vector<std::size_t>>& groups) {
  std::vector<int> out;
  for (std::size_t c = 0; c < groups.size(); ++c) out.insert(out.end(), groups[c].size(), static_cast<int>(c));
  return out;
}

// Fills support (when `fixed_support` is null), query and test rows for the
// given classes from a single RNG stream.
Episode fill_rows(const FeatureSet& fs, const EpisodeSpec& spec, const std::vector<Label>& classes,
                  const std::vector<std::vector<std::size_t>>* fixed_support, Rng& rng) {
  const auto by_class = fs.rows_by_class();
  const auto queries = query_counts(spec);
  Episode ep;
  ep.class_ids = classes;
  for (std::size_t c = 0; c < classes.size(); ++c) {
    std::vector<std::size_t> pool = by_class[classes[c]];
    std::vector<std::size_t> support;
    if (fixed_support != nullptr) {
      support = (*fixed_support)[c];
      const std::set<std::size_t> taken(support.begin(), support.end());
      std::erase_if(pool, [&](std::size_t r) { return taken.contains(r); });
    }
    const std::size_t drawn_support = fixed_support != nullptr ? 0 : static_cast<std::size_t>(spec.k_shot);
    const std::size_t need = drawn_support + static_cast<std::size_t>(queries[c]) +
                             static_cast<std::size_t>(spec.test_per_class);
    if (need > pool.size()) {
      throw_invalid("class " + fs.class_names[classes[c]] + " has " + std::to_string(pool.size()) +
                    " available rows but the episode needs " + std::to_string(need));
    }
    auto drawn = draw_without_replacement(std::move(pool), need, rng);
    auto it = drawn.begin();
    if (fixed_support == nullptr) support.assign(it, it + static_cast<std::ptrdiff_t>(drawn_support));
    it += static_cast<std::ptrdiff_t>(drawn_support);
    ep.support.push_back(std::move(support));
    ep.query.emplace_back(it, it + queries[c]);
    it += queries[c];
    ep.test.emplace_back(it, drawn.end());
  }
  return ep;
}

void check_classes(const FeatureSet& fs, const EpisodeSpec& spec, const std::vector<Label>& class_ids) {
  if (static_cast<int>(class_ids.size()) != spec.n_way) {
    throw_invalid("expected " + std::to_string(spec.n_way) + " class ids, got " + std::to_string(class_ids.size()));
  }
  std::set<Label> seen;
  for (Label c : class_ids) {
    if (c >= fs.num_classes()) throw_invalid("class id " + std::to_string(c) + " out of range");
    if (!seen.insert(c).second) throw_invalid("duplicate class id " + std::to_string(c));
  }
}

}  // namespace

std::vector<std::size_t> Episode::support_rows() const { return flatten(support); }
std::vector<std::size_t> Episode::query_rows() const { return flatten(query); }
std::vector<std::size_t> Episode::test_rows() const { return flatten(test); }
std::vector<int> Episode::support_labels() const { return group_labels(support); }
std::vector<int> Episode::query_labels() const { return group_labels(query); }
std::vector<int> Episode::test_labels() const { return group_labels(test); }

void validate_spec(const EpisodeSpec& spec) {
  if (spec.n_way < 2) throw_invalid("n_way must be >= 2");
  if (spec.k_shot < 0 || spec.q_query < 0 || spec.test_per_class < 0) throw_invalid("counts must be >= 0");
  if (spec.k_shot + spec.q_query < 1) throw_invalid("k_shot + q_query must be >= 1");
  if (spec.first_class_fraction) {
    const double p = *spec.first_class_fraction;
    if (!(p > 0.0 && p < 1.0)) throw_invalid("first_class_fraction must lie in (0, 1)");
  }
}

std::vector<int> query_counts(const EpisodeSpec& spec) {
  validate_spec(spec);
  const int n = spec.n_way;
  std::vector<int> counts(static_cast<std::size_t>(n), spec.q_query);
  if (!spec.first_class_fraction) return counts;
  const int total = n * spec.q_query;
  const int first = static_cast<int>(std::floor(*spec.first_class_fraction * total + 0.5));
  const int rest = total - first;
  counts[0] = first;
  for (int c = 1; c < n; ++c) counts[c] = rest / (n - 1) + ((c - 1) < rest % (n - 1) ? 1 : 0);
  return counts;
}

Episode sample_episode(const FeatureSet& fs, const EpisodeSpec& spec) {
  validate_spec(spec);
  if (static_cast<int>(fs.num_classes()) < spec.n_way) {
    throw_invalid("feature set has " + std::to_string(fs.num_classes()) + " classes, episode needs " +
                  std::to_string(spec.n_way));
  }
  Rng rng = make_rng(spec.seed);
  std::vector<std::size_t> all(fs.num_classes());
  std::iota(all.begin(), all.end(), 0);
  const auto drawn = draw_without_replacement(std::move(all), static_cast<std::size_t>(spec.n_way), rng);
  const std::vector<Label> classes(drawn.begin(), drawn.end());
  return fill_rows(fs, spec, classes, nullptr, rng);
}

Episode sample_episode_fixed_classes(const FeatureSet& fs, const EpisodeSpec& spec,
                                     const std::vector<Label>& class_ids) {
  validate_spec(spec);
  check_classes(fs, spec, class_ids);
  Rng rng = make_rng(spec.seed);
  return fill_rows(fs, spec, class_ids, nullptr, rng);
}

Episode sample_episode_fixed_shots(const FeatureSet& fs, const EpisodeSpec& spec,
                                   const std::map<Label, std::vector<std::size_t>>& shots_per_class) {
  validate_spec(spec);
  if (static_cast<int>(shots_per_class.size()) < spec.n_way) {
    throw_invalid("only " + std::to_string(shots_per_class.size()) + " classes carry fixed shots, episode needs " +
                  std::to_string(spec.n_way));
  }
  for (const auto& [cls, rows] : shots_per_class) {
    if (cls >= fs.num_classes()) throw_invalid("fixed-shot class out of range");
    for (std::size_t r : rows) {
      if (r >= fs.num_rows() || fs.labels[r] != cls) {
        throw_invalid("fixed shot row " + std::to_string(r) + " does not belong to class " + std::to_string(cls));
      }
    }
  }
  Rng rng = make_rng(spec.seed);
  std::vector<std::size_t> pool;
  for (const auto& entry : shots_per_class) pool.push_back(entry.first);
  const auto drawn = draw_without_replacement(std::move(pool), static_cast<std::size_t>(spec.n_way), rng);
  const std::vector<Label> classes(drawn.begin(), drawn.end());
  std::vector<std::vector<std::size_t>> support;
  for (Label c : classes) support.push_back(shots_per_class.at(c));
  return fill_rows(fs, spec, classes, &support, rng);
}

Episode sample_unbalanced_queries(const FeatureSet& fs, const EpisodeSpec& spec) {
  if (!spec.first_class_fraction) throw_invalid("unbalanced sampling needs first_class_fraction");
  return sample_episode(fs, spec);
}

std::string episode_to_json(const Episode& ep) {
  nlohmann::ordered_json j;
  j["class_ids"] = ep.class_ids;
  j["support"] = ep.support;
  j["query"] = ep.query;
  j["test"] = ep.test;
  return j.dump();
}

Episode episode_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    Episode ep;
    ep.class_ids = j.at("class_ids").get<std::vector<Label>>();
    ep.support = j.at("support").get<std::vector<std::vector<std::size_t>>>();
    ep.query = j.at("query").get<std::vector<std::vector<std::size_t>>>();
    ep.test = j.at("test").get<std::vector<std::vector<std::size_t>>>();
    return ep;
  } catch (const nlohmann::json::exception& e) {
    throw_data(std::string("malformed episode: ") + e.what());
  }
}

}  // namespace fsgauge
