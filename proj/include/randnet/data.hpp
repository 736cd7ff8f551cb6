#ifndef RANDNET_DATA_HPP
#define RANDNET_DATA_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "randnet/core.hpp"
#include "randnet/dictionary.hpp"
#include "randnet/measurement.hpp"
#include "randnet/rng.hpp"

namespace randnet {

// How a dataset is (or will be) compressed: one operator per block, each
// regenerated from a seed derived from master_seed.
struct CompressionConfig {
  MeasurementKind kind = MeasurementKind::Identity;
  Index rows = 0;      // M; ignored for Identity
  Index sparsity = 1;  // s; RowSparse only
  Index blocks = 1;    // B
  std::uint64_t master_seed = 0;
  GaussianScale gaussian_scale = GaussianScale::InvRows;
};

template <typename Scalar>
struct GroundTruth {
  Dictionary<Scalar> dictionary;
  Mat<Scalar> codes;  // p x J
};

template <typename Scalar>
struct Dataset {
  Mat<Scalar> examples;    // N x J; may be dropped after compression
  Mat<Scalar> compressed;  // M x J
  Index dim = 0;           // N
  std::vector<Index> block_of;              // block index per example, 0-based
  std::vector<std::uint64_t> block_seeds;   // one per block
  CompressionConfig compression;
  std::vector<int> labels;  // class per example, empty when unlabeled
  int classes = 0;
  std::optional<GroundTruth<Scalar>> truth;

  Index size() const { return examples.cols() > 0 ? examples.cols() : compressed.cols(); }
  Index measurements() const { return compressed.rows(); }
  Index blocks() const { return static_cast<Index>(block_seeds.size()); }
  bool is_compressed() const { return compressed.cols() > 0 && !block_seeds.empty(); }
  bool labeled() const { return !labels.empty(); }

  MeasurementDescriptor block_descriptor(Index b) const {
    MeasurementDescriptor d;
    d.kind = compression.kind;
    d.cols = dim;
    d.rows = compression.kind == MeasurementKind::Identity ? dim : compression.rows;
    d.sparsity = compression.kind == MeasurementKind::RowSparse ? compression.sparsity : 0;
    d.seed = block_seeds.at(static_cast<std::size_t>(b));
    return d;
  }

  MeasurementMatrix<Scalar> block_operator(Index b) const {
    return MeasurementMatrix<Scalar>::from_descriptor(block_descriptor(b), compression.gaussian_scale);
  }

  std::vector<std::vector<Index>> block_members() const {
    std::vector<std::vector<Index>> members(block_seeds.size());
    for (std::size_t j = 0; j < block_of.size(); ++j) members[static_cast<std::size_t>(block_of[j])].push_back(static_cast<Index>(j));
    return members;
  }
};

struct SimConfig {
  Index n = 500;
  Index p = 20;
  Index count = 4250;  // J
  Index sparsity = 3;  // k
  double amplitude_low = 4.0;
  double amplitude_high = 5.0;
  double noise_sigma = 0.0;
  std::uint64_t seed = 1;

  void validate() const {
    require(n >= 1 && p >= 1 && count >= 1, ErrorKind::Config, "simulation needs N, p, J >= 1");
    require(sparsity >= 0 && sparsity <= p, ErrorKind::Config,
            "code sparsity k=" + std::to_string(sparsity) + " exceeds p=" + std::to_string(p));
    require(amplitude_low >= 0.0 && amplitude_low <= amplitude_high, ErrorKind::Config,
            "amplitude range must satisfy 0 <= low <= high");
    require(noise_sigma >= 0.0, ErrorKind::Config, "noise sigma must be >= 0");
  }
};

// y = A x + v with A ~ N(0, 1/N) then unit columns, k-sparse x with
// magnitudes uniform on [low, high] and random signs, v ~ N(0, sigma^2).
template <typename Scalar>
std::pair<Dataset<Scalar>, Dictionary<Scalar>> simulate(const SimConfig& cfg) {
  cfg.validate();
  Xoshiro256 rng(cfg.seed);
  Dictionary<Scalar> truth(gaussian_matrix<Scalar>(cfg.n, cfg.p, Scalar(1) / Scalar(cfg.n), rng));
  truth.normalize();

  Mat<Scalar> codes = Mat<Scalar>::Zero(cfg.p, cfg.count);
  std::uniform_real_distribution<Scalar> magnitude(static_cast<Scalar>(cfg.amplitude_low), static_cast<Scalar>(cfg.amplitude_high));
  std::vector<Index> support;
  for (Index j = 0; j < cfg.count; ++j) {
    support.clear();
    while (static_cast<Index>(support.size()) < cfg.sparsity) {
      const auto atom = static_cast<Index>(rng.below(static_cast<std::uint64_t>(cfg.p)));
      if (std::find(support.begin(), support.end(), atom) == support.end()) support.push_back(atom);
    }
    for (Index atom : support) {
      const Scalar sign = (rng() >> 63) ? Scalar(1) : Scalar(-1);
      codes(atom, j) = sign * magnitude(rng);
    }
  }

  Dataset<Scalar> ds;
  ds.dim = cfg.n;
  ds.examples = truth.atoms() * codes;
  if (cfg.noise_sigma > 0.0) ds.examples += gaussian_matrix<Scalar>(cfg.n, cfg.count, static_cast<Scalar>(cfg.noise_sigma * cfg.noise_sigma), rng);
  ds.truth = GroundTruth<Scalar>{truth, std::move(codes)};
  return {std::move(ds), std::move(truth)};
}

enum class PixelScaling { None, UnitInterval, Standardize };

inline PixelScaling parse_pixel_scaling(const std::string& name) {
  if (name == "none") return PixelScaling::None;
  if (name == "unit") return PixelScaling::UnitInterval;
  if (name == "standardize") return PixelScaling::Standardize;
  throw Error(ErrorKind::Config, "unknown pixel scaling '" + name + "'");
}

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;  // 2051
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;  // 2049

namespace detail {

inline std::vector<unsigned char> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::Io, "cannot open '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::uint32_t read_be32(const std::vector<unsigned char>& bytes, std::size_t offset, const std::string& path) {
  require(bytes.size() >= offset + 4, ErrorKind::Length, "'" + path + "' ends inside its header");
  return (static_cast<std::uint32_t>(bytes[offset]) << 24) | (static_cast<std::uint32_t>(bytes[offset + 1]) << 16) |
         (static_cast<std::uint32_t>(bytes[offset + 2]) << 8) | static_cast<std::uint32_t>(bytes[offset + 3]);
}

}  // namespace detail

// Reads an IDX image/label pair. Images are flattened row-major; labels
// become class indices 0..9. limit < 0 reads every example.
template <typename Scalar>
Dataset<Scalar> load_mnist_idx(const std::string& images_path, const std::string& labels_path,
                               PixelScaling scaling = PixelScaling::UnitInterval, Index limit = -1) {
  const auto images = detail::read_file(images_path);
  const auto labels = detail::read_file(labels_path);
  const std::uint32_t image_magic = detail::read_be32(images, 0, images_path);
  require(image_magic == kIdxImageMagic, ErrorKind::Format, "'" + images_path + "' has magic " + std::to_string(image_magic) + ", expected 2051");
  const std::uint32_t label_magic = detail::read_be32(labels, 0, labels_path);
  require(label_magic == kIdxLabelMagic, ErrorKind::Format, "'" + labels_path + "' has magic " + std::to_string(label_magic) + ", expected 2049");

  const Index count = detail::read_be32(images, 4, images_path);
  const Index rows = detail::read_be32(images, 8, images_path);
  const Index cols = detail::read_be32(images, 12, images_path);
  const Index label_count = detail::read_be32(labels, 4, labels_path);
  require(count == label_count, ErrorKind::Consistency,
          std::to_string(count) + " images but " + std::to_string(label_count) + " labels");
  const Index pixels = rows * cols;
  require(images.size() >= 16 + static_cast<std::size_t>(count * pixels), ErrorKind::Length, "'" + images_path + "' is truncated");
  require(labels.size() >= 8 + static_cast<std::size_t>(count), ErrorKind::Length, "'" + labels_path + "' is truncated");

  const Index take = limit < 0 ? count : std::min(limit, count);
  Dataset<Scalar> ds;
  ds.dim = pixels;
  ds.classes = 10;
  ds.examples.resize(pixels, take);
  ds.labels.resize(static_cast<std::size_t>(take));
  for (Index j = 0; j < take; ++j) {
    const unsigned char* img = images.data() + 16 + j * pixels;
    for (Index k = 0; k < pixels; ++k) ds.examples(k, j) = static_cast<Scalar>(img[k]);
    const int label = labels[8 + static_cast<std::size_t>(j)];
    require(label >= 0 && label < 10, ErrorKind::Format, "label " + std::to_string(label) + " out of range");
    ds.labels[static_cast<std::size_t>(j)] = label;
  }
  switch (scaling) {
    case PixelScaling::None: break;
    case PixelScaling::UnitInterval: ds.examples /= Scalar(255); break;
    case PixelScaling::Standardize:
      for (Index j = 0; j < take; ++j) {
        auto col = ds.examples.col(j);
        const Scalar mean = col.mean();
        col.array() -= mean;
        const Scalar sd = std::sqrt(col.squaredNorm() / Scalar(pixels));
        if (sd > Scalar(0)) col /= sd;
      }
      break;
  }
  return ds;
}

// Examples [begin, begin + count) of an uncompressed dataset.
template <typename Scalar>
Dataset<Scalar> take_range(const Dataset<Scalar>& ds, Index begin, Index count) {
  require(begin >= 0 && count >= 0 && begin + count <= ds.examples.cols(), ErrorKind::Dimension,
          "range [" + std::to_string(begin) + ", " + std::to_string(begin + count) + ") exceeds " + std::to_string(ds.examples.cols()) + " examples");
  Dataset<Scalar> out;
  out.dim = ds.dim;
  out.classes = ds.classes;
  out.examples = ds.examples.middleCols(begin, count);
  if (ds.labeled()) out.labels.assign(ds.labels.begin() + begin, ds.labels.begin() + begin + count);
  if (ds.truth) out.truth = GroundTruth<Scalar>{ds.truth->dictionary, ds.truth->codes.middleCols(begin, count)};
  return out;
}

// Block b holds examples [floor(bJ/B), floor((b+1)J/B)), so block sizes differ
// by at most one and equal J/B exactly when B divides J.
inline std::vector<Index> contiguous_blocks(Index count, Index blocks) {
  require(blocks >= 1 && blocks <= count, ErrorKind::Config,
          "block count B=" + std::to_string(blocks) + " must be in 1.." + std::to_string(count));
  std::vector<Index> block_of(static_cast<std::size_t>(count));
  for (Index b = 0; b < blocks; ++b) {
    const Index lo = b * count / blocks;
    const Index hi = (b + 1) * count / blocks;
    for (Index j = lo; j < hi; ++j) block_of[static_cast<std::size_t>(j)] = b;
  }
  return block_of;
}

template <typename Scalar>
Dataset<Scalar> partition_and_compress(Dataset<Scalar> ds, const CompressionConfig& cfg, bool keep_examples = true) {
  require(ds.examples.cols() > 0, ErrorKind::Config, "cannot compress a dataset without raw examples");
  const Index count = ds.examples.cols();
  ds.compression = cfg;
  ds.block_of = contiguous_blocks(count, cfg.blocks);
  ds.block_seeds.resize(static_cast<std::size_t>(cfg.blocks));
  for (Index b = 0; b < cfg.blocks; ++b) ds.block_seeds[static_cast<std::size_t>(b)] = derive_seed(cfg.master_seed, static_cast<std::uint64_t>(b));

  const Index m = cfg.kind == MeasurementKind::Identity ? ds.dim : cfg.rows;
  ds.compressed.resize(m, count);
  Index begin = 0;
  for (Index b = 0; b < cfg.blocks; ++b) {
    Index end = begin;
    while (end < count && ds.block_of[static_cast<std::size_t>(end)] == b) ++end;
    const MeasurementMatrix<Scalar> phi = ds.block_operator(b);
    ds.compressed.middleCols(begin, end - begin) = phi.project(ds.examples.middleCols(begin, end - begin));
    begin = end;
  }
  if (!keep_examples) ds.examples.resize(ds.dim, 0);
  return ds;
}

template <typename Scalar>
nlohmann::json dataset_manifest(const Dataset<Scalar>& ds) {
  nlohmann::json j;
  j["N"] = ds.dim;
  j["J"] = ds.size();
  j["M"] = ds.measurements();
  j["B"] = ds.blocks();
  j["kind"] = to_string(ds.compression.kind);
  j["s"] = ds.compression.kind == MeasurementKind::RowSparse ? ds.compression.sparsity : 0;
  j["master_seed"] = ds.compression.master_seed;
  j["gaussian_variance"] = to_string(ds.compression.gaussian_scale);
  j["labeled"] = ds.labeled();
  j["has_ground_truth"] = ds.truth.has_value();
  return j;
}

}  // namespace randnet

#endif  // RANDNET_DATA_HPP
