#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace fsgauge {

/// Row-major single precision storage; this is the on-disk representation.
using FeatureMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Double precision working matrix used by every numerical kernel.
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

using Label = std::uint32_t;

/// Tolerance on the unit norm of a normalized row.
inline constexpr double kUnitNormTolerance = 1e-6;

/// Sidecar description of a feature file.
struct SplitManifest {
  std::string dataset_name;
  std::string split_name;
  std::vector<std::pair<std::string, std::uint64_t>> per_class_counts;
  std::string dtype = "f32";
  std::string storage_order = "row-major";
  /// Free-form provenance (e.g. backbone identifier).
  std::string model;
};

/// Nonnegative feature vectors with one class label per row.
///
/// Instances are immutable once validated and may be shared across threads.
struct FeatureSet {
  FeatureMatrix features;
  std::vector<Label> labels;
  std::vector<std::string> class_names;
  bool normalized = false;
  std::string dataset_name = "unnamed";
  std::string split_name = "novel";

  std::size_t num_rows() const { return static_cast<std::size_t>(features.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(features.cols()); }
  std::size_t num_classes() const { return class_names.size(); }

  /// Row indices of every class, ascending.
  std::vector<std::vector<std::size_t>> rows_by_class() const;

  /// Gathers the given rows into a double matrix.
  Matrix gather(const std::vector<std::size_t>& rows) const;

  SplitManifest manifest() const;
};

/// Checks every FeatureSet invariant; throws DataError naming the first violation.
void validate(const FeatureSet& fs);

/// Loads an FSF1 binary file (with optional `<path>.manifest.json`) or, for a
/// `.csv` extension, the `class,f0,...` text format.
FeatureSet load_feature_set(const std::filesystem::path& path);

/// Writes FSF1 plus manifest, or CSV when the extension is `.csv`.
void save_feature_set(const FeatureSet& fs, const std::filesystem::path& path);

std::filesystem::path manifest_path_for(const std::filesystem::path& data_path);
SplitManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const SplitManifest& manifest, const std::filesystem::path& path);

/// Scales every row to unit L2 norm. Throws DataError on a zero row.
FeatureSet l2_normalize(const FeatureSet& fs);

/// Keeps only the listed classes (relabelled 0..n-1 in the given order).
FeatureSet subset_classes(const FeatureSet& fs, const std::vector<Label>& classes);

struct SynthParams {
  int num_classes = 20;
  int per_class = 600;
  int dim = 64;
  /// Separation of class centroids away from the shared direction.
  double separation = 1.0;
  /// When > separation, per-class separations are spaced linearly over
  /// [separation, separation_max], giving classes of graded difficulty.
  double separation_max = 0.0;
  double spread = 0.1;
  /// Row norm. Anything but 1 yields an unnormalized set; acts as an inverse
  /// temperature for the LR probabilities.
  double scale = 1.0;
  std::uint64_t seed = 0;
};

/// Gaussian blobs around nonnegative centroids, clamped at 0 and normalized.
/// Deterministic in all arguments including the seed.
FeatureSet synth_generate(int num_classes, int per_class, int dim, double separation,
                          double spread, std::uint64_t seed);

FeatureSet synth_generate(const SynthParams& params);

}  // namespace fsgauge
