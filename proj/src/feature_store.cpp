#include "fsgauge/feature_store.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "fsgauge/errors.hpp"
#include "fsgauge/rng.hpp"

namespace fsgauge {

namespace fs = std::filesystem;

namespace {

constexpr std::array<char, 4> kMagic = {'F', 'S', 'F', '1'};
constexpr int kMaxSynthRetries = 100;

void put_u32(std::string& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xffu));
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

bool is_csv(const fs::path& path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".csv";
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_data("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void check_entries(const FeatureMatrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      const float v = m(i, j);
      if (!std::isfinite(v)) {
        throw_data("non-finite entry at row " + std::to_string(i) + ", column " + std::to_string(j));
      }
      if (v < 0.0f) {
        throw_data("negative entry at row " + std::to_string(i) + ", column " + std::to_string(j) +
                   " (features must be taken after a ReLU)");
      }
    }
  }
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    cells.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

FeatureSet load_csv(const fs::path& path) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line)) throw_data("empty CSV file " + path.string());
  const auto header = split_csv_line(line);
  if (header.size() < 2 || header[0] != "class") throw_data("malformed CSV header: expected class,f0,...");
  const std::size_t dim = header.size() - 1;
  for (std::size_t j = 0; j < dim; ++j) {
    if (header[j + 1] != "f" + std::to_string(j)) throw_data("malformed CSV header at column " + header[j + 1]);
  }

  FeatureSet out;
  std::map<std::string, Label> class_ids;
  std::vector<float> values;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != dim + 1) {
      throw_data("dimension mismatch on CSV line " + std::to_string(line_no));
    }
    auto [it, inserted] = class_ids.emplace(cells[0], static_cast<Label>(out.class_names.size()));
    if (inserted) out.class_names.push_back(cells[0]);
    out.labels.push_back(it->second);
    for (std::size_t j = 0; j < dim; ++j) {
      try {
        std::size_t used = 0;
        const float v = std::stof(cells[j + 1], &used);
        if (used != cells[j + 1].size()) throw std::invalid_argument("trailing");
        values.push_back(v);
      } catch (const std::out_of_range&) {
        values.push_back(std::numeric_limits<float>::infinity());
      } catch (const std::invalid_argument&) {
        throw_data("unparseable value on CSV line " + std::to_string(line_no));
      }
    }
  }
  const auto rows = static_cast<Eigen::Index>(out.labels.size());
  out.features = Eigen::Map<FeatureMatrix>(values.data(), rows, static_cast<Eigen::Index>(dim));
  out.dataset_name = path.stem().string();
  validate(out);
  return out;
}

FeatureSet load_fsf1(const fs::path& path) {
  const std::string bytes = read_file(path);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  if (bytes.size() < 12 || std::memcmp(p, kMagic.data(), 4) != 0) {
    throw_data("malformed header: missing FSF1 magic in " + path.string());
  }
  const std::uint64_t rows = get_u32(p + 4);
  const std::uint64_t dim = get_u32(p + 8);
  if (dim == 0) throw_data("malformed header: dim is 0");
  const std::uint64_t expected = 12 + rows * dim * 4 + rows * 4;
  if (bytes.size() != expected) {
    throw_data("malformed header: file size " + std::to_string(bytes.size()) + " does not match " +
               std::to_string(rows) + " rows x " + std::to_string(dim) + " dims");
  }

  FeatureSet out;
  out.features.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(dim));
  const unsigned char* cursor = p + 12;
  for (std::uint64_t i = 0; i < rows; ++i) {
    for (std::uint64_t j = 0; j < dim; ++j, cursor += 4) {
      out.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          std::bit_cast<float>(get_u32(cursor));
    }
  }
  out.labels.resize(rows);
  Label max_label = 0;
  for (std::uint64_t i = 0; i < rows; ++i, cursor += 4) {
    out.labels[i] = get_u32(cursor);
    max_label = std::max(max_label, out.labels[i]);
  }

  const auto manifest_path = manifest_path_for(path);
  if (fs::exists(manifest_path)) {
    const auto manifest = read_manifest(manifest_path);
    if (manifest.dtype != "f32") throw_data("unsupported dtype tag " + manifest.dtype);
    if (manifest.storage_order != "row-major") throw_data("unsupported storage order " + manifest.storage_order);
    std::uint64_t total = 0;
    for (const auto& [name, count] : manifest.per_class_counts) {
      out.class_names.push_back(name);
      total += count;
    }
    if (total != rows) {
      throw_data("manifest counts sum to " + std::to_string(total) + " but file holds " + std::to_string(rows) +
                 " rows");
    }
    out.dataset_name = manifest.dataset_name;
    out.split_name = manifest.split_name;
    if (!out.labels.empty() && max_label >= out.class_names.size()) {
      throw_data("label " + std::to_string(max_label) + " exceeds manifest class count");
    }
    std::vector<std::uint64_t> counts(out.class_names.size(), 0);
    for (Label l : out.labels) ++counts[l];
    for (std::size_t c = 0; c < counts.size(); ++c) {
      if (counts[c] != manifest.per_class_counts[c].second) {
        throw_data("manifest count mismatch for class " + manifest.per_class_counts[c].first);
      }
    }
  } else {
    const std::size_t n_classes = rows == 0 ? 0 : static_cast<std::size_t>(max_label) + 1;
    for (std::size_t c = 0; c < n_classes; ++c) out.class_names.push_back("class_" + std::to_string(c));
    out.dataset_name = path.stem().string();
  }
  validate(out);
  return out;
}

void save_csv(const FeatureSet& fs, const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw_data("cannot write " + path.string());
  out << "class";
  for (std::size_t j = 0; j < fs.dim(); ++j) out << ",f" << j;
  out << "\n";
  out.precision(std::numeric_limits<float>::max_digits10);
  for (std::size_t i = 0; i < fs.num_rows(); ++i) {
    out << fs.class_names[fs.labels[i]];
    for (std::size_t j = 0; j < fs.dim(); ++j) {
      out << ',' << fs.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
    out << "\n";
  }
  if (!out) throw_data("write failed for " + path.string());
}

void save_fsf1(const FeatureSet& fs, const fs::path& path) {
  std::string bytes;
  bytes.reserve(12 + fs.num_rows() * (fs.dim() + 1) * 4);
  bytes.append(kMagic.data(), kMagic.size());
  put_u32(bytes, static_cast<std::uint32_t>(fs.num_rows()));
  put_u32(bytes, static_cast<std::uint32_t>(fs.dim()));
  for (std::size_t i = 0; i < fs.num_rows(); ++i) {
    for (std::size_t j = 0; j < fs.dim(); ++j) {
      put_u32(bytes, std::bit_cast<std::uint32_t>(fs.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))));
    }
  }
  for (Label l : fs.labels) put_u32(bytes, l);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw_data("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw_data("write failed for " + path.string());
  out.close();
  write_manifest(fs.manifest(), manifest_path_for(path));
}

}  // namespace

std::vector<std::vector<std::size_t>> FeatureSet::rows_by_class() const {
  std::vector<std::vector<std::size_t>> out(class_names.size());
  for (std::size_t i = 0; i < labels.size(); ++i) out[labels[i]].push_back(i);
  return out;
}

Matrix FeatureSet::gather(const std::vector<std::size_t>& rows) const {
  Matrix out(static_cast<Eigen::Index>(rows.size()), features.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.row(static_cast<Eigen::Index>(r)) = features.row(static_cast<Eigen::Index>(rows[r])).cast<double>();
  }
  return out;
}

SplitManifest FeatureSet::manifest() const {
  SplitManifest m;
  m.dataset_name = dataset_name;
  m.split_name = split_name;
  std::vector<std::uint64_t> counts(class_names.size(), 0);
  for (Label l : labels) ++counts[l];
  for (std::size_t c = 0; c < class_names.size(); ++c) m.per_class_counts.emplace_back(class_names[c], counts[c]);
  return m;
}

void validate(const FeatureSet& fs) {
  if (fs.num_rows() == 0) throw_data("empty set");
  if (fs.dim() == 0) throw_data("dim must be positive");
  if (fs.labels.size() != fs.num_rows()) throw_data("label count does not match row count");
  check_entries(fs.features);
  std::vector<std::size_t> counts(fs.class_names.size(), 0);
  for (std::size_t i = 0; i < fs.labels.size(); ++i) {
    if (fs.labels[i] >= fs.class_names.size()) {
      throw_data("label " + std::to_string(fs.labels[i]) + " at row " + std::to_string(i) +
                 " exceeds class count " + std::to_string(fs.class_names.size()));
    }
    ++counts[fs.labels[i]];
  }
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (counts[c] == 0) throw_data("class " + fs.class_names[c] + " has no rows");
  }
  if (fs.normalized) {
    for (Eigen::Index i = 0; i < fs.features.rows(); ++i) {
      const double norm = fs.features.row(i).cast<double>().norm();
      if (std::abs(norm - 1.0) > kUnitNormTolerance) {
        throw_data("row " + std::to_string(i) + " is flagged normalized but has norm " + std::to_string(norm));
      }
    }
  }
}

fs::path manifest_path_for(const fs::path& data_path) {
  return fs::path(data_path.string() + ".manifest.json");
}

SplitManifest read_manifest(const fs::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw_data("malformed manifest " + path.string() + ": " + e.what());
  }
  SplitManifest m;
  try {
    m.dataset_name = j.value("dataset_name", "");
    m.split_name = j.value("split_name", "");
    m.dtype = j.value("dtype", "f32");
    m.storage_order = j.value("storage_order", "row-major");
    m.model = j.value("model", "");
    for (const auto& entry : j.at("per_class_counts")) {
      m.per_class_counts.emplace_back(entry.at("class_name").get<std::string>(), entry.at("count").get<std::uint64_t>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw_data("malformed manifest " + path.string() + ": " + e.what());
  }
  return m;
}

void write_manifest(const SplitManifest& m, const fs::path& path) {
  nlohmann::ordered_json j;
  j["format"] = "FSF1";
  j["dataset_name"] = m.dataset_name;
  j["split_name"] = m.split_name;
  j["dtype"] = m.dtype;
  j["storage_order"] = m.storage_order;
  if (!m.model.empty()) j["model"] = m.model;
  j["per_class_counts"] = nlohmann::ordered_json::array();
  for (const auto& [name, count] : m.per_class_counts) {
    j["per_class_counts"].push_back({{"class_name", name}, {"count", count}});
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw_data("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

FeatureSet load_feature_set(const fs::path& path) {
  if (!fs::exists(path)) throw_data("no such file: " + path.string());
  return is_csv(path) ? load_csv(path) : load_fsf1(path);
}

void save_feature_set(const FeatureSet& fs, const fs::path& path) {
  validate(fs);
  if (is_csv(path)) {
    save_csv(fs, path);
  } else {
    save_fsf1(fs, path);
  }
}

FeatureSet l2_normalize(const FeatureSet& fs) {
  FeatureSet out = fs;
  for (Eigen::Index i = 0; i < out.features.rows(); ++i) {
    const Eigen::RowVectorXd row = fs.features.row(i).cast<double>();
    const double norm = row.norm();
    if (norm == 0.0) throw_data("zero-norm row " + std::to_string(i));
    out.features.row(i) = (row / norm).cast<float>();
  }
  out.normalized = true;
  return out;
}

FeatureSet subset_classes(const FeatureSet& fs, const std::vector<Label>& classes) {
  std::vector<long> remap(fs.num_classes(), -1);
  FeatureSet out;
  for (std::size_t k = 0; k < classes.size(); ++k) {
    if (classes[k] >= fs.num_classes()) throw_invalid("class index out of range");
    if (remap[classes[k]] >= 0) throw_invalid("duplicate class in subset");
    remap[classes[k]] = static_cast<long>(k);
    out.class_names.push_back(fs.class_names[classes[k]]);
  }
  std::vector<Eigen::Index> rows;
  for (std::size_t i = 0; i < fs.num_rows(); ++i) {
    if (remap[fs.labels[i]] >= 0) {
      rows.push_back(static_cast<Eigen::Index>(i));
      out.labels.push_back(static_cast<Label>(remap[fs.labels[i]]));
    }
  }
  out.features = fs.features(rows, Eigen::all);
  out.normalized = fs.normalized;
  out.dataset_name = fs.dataset_name;
  out.split_name = fs.split_name;
  validate(out);
  return out;
}

FeatureSet synth_generate(int num_classes, int per_class, int dim, double separation, double spread,
                          std::uint64_t seed) {
  SynthParams p;
  p.num_classes = num_classes;
  p.per_class = per_class;
  p.dim = dim;
  p.separation = separation;
  p.spread = spread;
  p.seed = seed;
  return synth_generate(p);
}

FeatureSet synth_generate(const SynthParams& p) {
  if (p.num_classes < 2) throw_invalid("synth_generate needs num_classes >= 2");
  if (p.per_class < 1) throw_invalid("synth_generate needs per_class >= 1");
  if (p.dim < 2) throw_invalid("synth_generate needs dim >= 2");
  if (!(p.separation >= 0.0)) throw_invalid("separation must be >= 0");
  if (!(p.spread > 0.0)) throw_invalid("spread must be > 0");
  if (!(p.scale > 0.0) || !std::isfinite(p.scale)) throw_invalid("scale must be finite and > 0");

  const auto d = static_cast<Eigen::Index>(p.dim);
  Rng centroid_rng = make_rng(derive_seed(p.seed, 0));
  std::normal_distribution<double> normal(0.0, 1.0);

  const Vector shared = Vector::Ones(d).normalized();
  const bool graded = p.separation_max > p.separation;
  std::vector<Vector> centroids;
  for (int c = 0; c < p.num_classes; ++c) {
    Vector direction(d);
    do {
      for (Eigen::Index j = 0; j < d; ++j) direction(j) = std::max(0.0, normal(centroid_rng));
    } while (direction.norm() == 0.0);
    direction.normalize();
    double sep = p.separation;
    if (graded) sep += (p.separation_max - p.separation) * c / static_cast<double>(p.num_classes - 1);
    centroids.push_back((shared + sep * direction).normalized());
  }

  // Noise per coordinate is scaled so that `spread` is the expected noise norm.
  const double sigma = p.spread / std::sqrt(static_cast<double>(p.dim));
  FeatureSet out;
  out.features.resize(static_cast<Eigen::Index>(p.num_classes) * p.per_class, d);
  out.labels.reserve(static_cast<std::size_t>(p.num_classes) * p.per_class);
  for (int c = 0; c < p.num_classes; ++c) {
    out.class_names.push_back("synth_" + std::to_string(c));
    Rng rng = make_rng(derive_seed(p.seed, 1, static_cast<std::uint64_t>(c)));
    for (int s = 0; s < p.per_class; ++s) {
      Vector sample(d);
      int attempt = 0;
      for (;; ++attempt) {
        if (attempt >= kMaxSynthRetries) {
          throw_numerical("synth_generate: sample clamped to zero after " + std::to_string(kMaxSynthRetries) +
                          " retries");
        }
        for (Eigen::Index j = 0; j < d; ++j) sample(j) = std::max(0.0, centroids[c](j) + sigma * normal(rng));
        if (sample.norm() > 0.0) break;
      }
      const auto row = static_cast<Eigen::Index>(c) * p.per_class + s;
      out.features.row(row) = (p.scale * sample / sample.norm()).cast<float>().transpose();
      out.labels.push_back(static_cast<Label>(c));
    }
  }
  out.normalized = p.scale == 1.0;
  out.dataset_name = "synthetic";
  validate(out);
  return out;
}

}  // namespace fsgauge
