#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <vector>

#include "test_util.hpp"

using namespace randnet;
using testutil::Matd;

namespace {

void put_be32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) out.push_back(static_cast<unsigned char>(v >> shift));
}

std::string write_bytes(const std::string& name, const std::vector<unsigned char>& bytes) {
  const auto path = (std::filesystem::temp_directory_path() / name).string();
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  return path;
}

// Two 2x3 images: all zeros, then 0..5 scaled; labels 7 and 2.
struct Fixture {
  std::vector<unsigned char> images;
  std::vector<unsigned char> labels;

  Fixture() {
    put_be32(images, 2051);
    put_be32(images, 2);
    put_be32(images, 2);
    put_be32(images, 3);
    for (int k = 0; k < 6; ++k) images.push_back(0);
    for (int k = 0; k < 6; ++k) images.push_back(static_cast<unsigned char>(51 * k));
    put_be32(labels, 2049);
    put_be32(labels, 2);
    labels.push_back(7);
    labels.push_back(2);
  }
};

ErrorKind load_error(const std::vector<unsigned char>& images, const std::vector<unsigned char>& labels) {
  try {
    load_mnist_idx<double>(write_bytes("rn_img.idx", images), write_bytes("rn_lbl.idx", labels));
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::Io;
}

}  // namespace

TEST(Simulate, CodesAreThreeSparseWithBoundedAmplitude) {
  SimConfig cfg;
  auto [ds, truth] = simulate<double>(cfg);
  ASSERT_EQ(ds.size(), 4250);
  const Matd& x = ds.truth->codes;
  for (Index j = 0; j < x.cols(); ++j) {
    ASSERT_EQ((x.col(j).array() != 0.0).count(), 3);
    for (Index i = 0; i < x.rows(); ++i)
      if (x(i, j) != 0.0) {
        ASSERT_GE(std::abs(x(i, j)), 4.0);
        ASSERT_LE(std::abs(x(i, j)), 5.0);
      }
  }
  EXPECT_LE(truth.max_norm_deviation(), 1e-10);
}

TEST(Simulate, NoiselessDataIsExactlyInSpan) {
  SimConfig cfg;
  cfg.count = 200;
  auto [ds, truth] = simulate<double>(cfg);
  EXPECT_EQ((ds.examples - truth.atoms() * ds.truth->codes).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Simulate, Deterministic) {
  SimConfig cfg;
  cfg.count = 100;
  auto a = simulate<double>(cfg);
  auto b = simulate<double>(cfg);
  EXPECT_EQ(a.first.examples, b.first.examples);
  EXPECT_EQ(a.second.atoms(), b.second.atoms());
}

TEST(Simulate, NoiseIsAdded) {
  SimConfig cfg;
  cfg.count = 300;
  cfg.noise_sigma = 0.1;
  auto [ds, truth] = simulate<double>(cfg);
  const Matd v = ds.examples - truth.atoms() * ds.truth->codes;
  EXPECT_NEAR(std::sqrt(v.squaredNorm() / v.size()), 0.1, 0.005);
}

TEST(Simulate, DictionaryEntryVariance) {
  // The generator used by simulate before normalization.
  Xoshiro256 rng(5);
  const Matd a = gaussian_matrix<double>(500, 2000, 1.0 / 500, rng);
  EXPECT_NEAR(a.squaredNorm() / a.size() * 500, 1.0, 0.1);
}

TEST(Simulate, RejectsSparsityAboveAtoms) {
  SimConfig cfg;
  cfg.sparsity = 21;
  EXPECT_THROW(simulate<double>(cfg), Error);
}

TEST(Idx, ReadsFixture) {
  const Fixture f;
  const auto ds = load_mnist_idx<double>(write_bytes("rn_img.idx", f.images), write_bytes("rn_lbl.idx", f.labels));
  ASSERT_EQ(ds.size(), 2);
  EXPECT_EQ(ds.dim, 6);
  EXPECT_TRUE(ds.examples.col(0).isZero(0.0));
  for (int k = 0; k < 6; ++k) EXPECT_DOUBLE_EQ(ds.examples(k, 1), 51.0 * k / 255.0);
  EXPECT_EQ(ds.labels, (std::vector<int>{7, 2}));
  EXPECT_EQ(ds.classes, 10);

  const auto raw = load_mnist_idx<double>(write_bytes("rn_img.idx", f.images), write_bytes("rn_lbl.idx", f.labels),
                                          PixelScaling::None, 1);
  EXPECT_EQ(raw.size(), 1);
}

TEST(Idx, RejectsMalformedFiles) {
  Fixture f;
  auto bad_magic = f.images;
  bad_magic[3] = 0x01;
  EXPECT_EQ(load_error(bad_magic, f.labels), ErrorKind::Format);
  EXPECT_EQ(load_error(f.images, f.images), ErrorKind::Format);

  auto truncated = f.images;
  truncated.resize(truncated.size() - 1);
  EXPECT_EQ(load_error(truncated, f.labels), ErrorKind::Length);
  EXPECT_EQ(load_error(std::vector<unsigned char>(f.images.begin(), f.images.begin() + 6), f.labels), ErrorKind::Length);

  auto three_labels = f.labels;
  three_labels[7] = 3;
  three_labels.push_back(1);
  EXPECT_EQ(load_error(f.images, three_labels), ErrorKind::Consistency);

  auto bad_label = f.labels;
  bad_label[9] = 10;
  EXPECT_EQ(load_error(f.images, bad_label), ErrorKind::Format);
}

TEST(Idx, MissingFileIsIoError) {
  try {
    load_mnist_idx<double>("/nonexistent/images", "/nonexistent/labels");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Io);
  }
}

TEST(Partition, HundredPerBlock) {
  const auto blocks = contiguous_blocks(4000, 40);
  std::vector<int> counts(40, 0);
  for (Index b : blocks) ++counts[static_cast<std::size_t>(b)];
  for (int c : counts) EXPECT_EQ(c, 100);
}

TEST(Partition, UnevenSizesDifferByOne) {
  const auto blocks = contiguous_blocks(103, 10);
  std::vector<int> counts(10, 0);
  for (Index b : blocks) ++counts[static_cast<std::size_t>(b)];
  EXPECT_LE(*std::max_element(counts.begin(), counts.end()) - *std::min_element(counts.begin(), counts.end()), 1);
  EXPECT_TRUE(std::is_sorted(blocks.begin(), blocks.end()));
  EXPECT_THROW(contiguous_blocks(5, 6), Error);
}

TEST(Partition, IdentityKeepsExamples) {
  SimConfig sc;
  sc.count = 60;
  auto [raw, truth] = simulate<double>(sc);
  CompressionConfig cc;
  cc.blocks = 3;
  const auto ds = partition_and_compress(raw, cc);
  EXPECT_EQ(ds.compressed, raw.examples);
}

TEST(Partition, SingleBlockSharesOperator) {
  SimConfig sc;
  sc.count = 30;
  auto [raw, truth] = simulate<double>(sc);
  CompressionConfig cc{MeasurementKind::Gaussian, 100, 1, 1, 9};
  const auto ds = partition_and_compress(raw, cc);
  EXPECT_EQ(ds.blocks(), 1);
  EXPECT_EQ(ds.compressed, ds.block_operator(0).project(raw.examples));
}

TEST(Partition, RecompressionIsBitwise) {
  SimConfig sc;
  sc.count = 400;
  auto [raw, truth] = simulate<double>(sc);
  for (auto kind : {MeasurementKind::Gaussian, MeasurementKind::RowSparse}) {
    CompressionConfig cc{kind, 150, 1, 40, 31};
    const auto ds = partition_and_compress(raw, cc, false);
    EXPECT_EQ(ds.examples.cols(), 0);
    EXPECT_EQ(ds.size(), 400);
    const auto members = ds.block_members();
    for (Index b = 0; b < ds.blocks(); ++b) {
      const auto phi = ds.block_operator(b);
      const auto& idx = members[static_cast<std::size_t>(b)];
      const Matd again = phi.project(raw.examples.middleCols(idx.front(), static_cast<Index>(idx.size())));
      ASSERT_EQ(again, ds.compressed.middleCols(idx.front(), static_cast<Index>(idx.size())));
    }
    EXPECT_NE(ds.block_seeds[0], ds.block_seeds[1]);
  }
}

TEST(Partition, CompressedSizeRatioIsBeta) {
  SimConfig sc;
  sc.count = 100;
  auto [raw, truth] = simulate<double>(sc);
  const auto ds = partition_and_compress(raw, CompressionConfig{MeasurementKind::RowSparse, 150, 1, 4, 2});
  const double ratio = static_cast<double>(ds.compressed.size()) / static_cast<double>(raw.examples.size());
  EXPECT_NEAR(ratio, 0.3, 0.003);
}

TEST(Manifest, Fields) {
  SimConfig sc;
  sc.count = 40;
  auto [raw, truth] = simulate<double>(sc);
  const auto j = dataset_manifest(partition_and_compress(raw, CompressionConfig{MeasurementKind::Gaussian, 250, 1, 4, 2}));
  EXPECT_EQ(j["J"], 40);
  EXPECT_EQ(j["M"], 250);
  EXPECT_EQ(j["B"], 4);
  EXPECT_EQ(j["kind"], "gaussian");
}
