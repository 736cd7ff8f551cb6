#ifndef RANDNET_MEASUREMENT_HPP
#define RANDNET_MEASUREMENT_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "randnet/core.hpp"
#include "randnet/rng.hpp"

namespace randnet {

enum class MeasurementKind { Identity, Gaussian, RowSparse };

// Entry variance of a Gaussian operator.
enum class GaussianScale { InvRows, InvCols, Unit };

inline std::string to_string(MeasurementKind kind) {
  switch (kind) {
    case MeasurementKind::Identity: return "identity";
    case MeasurementKind::Gaussian: return "gaussian";
    case MeasurementKind::RowSparse: return "row_sparse";
  }
  return "unknown";
}

inline MeasurementKind parse_measurement_kind(const std::string& name) {
  if (name == "identity") return MeasurementKind::Identity;
  if (name == "gaussian") return MeasurementKind::Gaussian;
  if (name == "row_sparse" || name == "sparse") return MeasurementKind::RowSparse;
  throw Error(ErrorKind::Config, "unknown measurement kind '" + name + "'");
}

inline std::string to_string(GaussianScale scale) {
  switch (scale) {
    case GaussianScale::InvRows: return "inv_rows";
    case GaussianScale::InvCols: return "inv_cols";
    case GaussianScale::Unit: return "unit";
  }
  return "unknown";
}

inline GaussianScale parse_gaussian_scale(const std::string& name) {
  if (name == "inv_rows") return GaussianScale::InvRows;
  if (name == "inv_cols") return GaussianScale::InvCols;
  if (name == "unit") return GaussianScale::Unit;
  throw Error(ErrorKind::Config, "unknown gaussian variance '" + name + "'");
}

// Everything needed to regenerate an operator. This is what gets persisted;
// the dense array never is.
struct MeasurementDescriptor {
  MeasurementKind kind = MeasurementKind::Identity;
  Index rows = 0;
  Index cols = 0;
  Index sparsity = 0;
  std::uint64_t seed = 0;

  friend bool operator==(const MeasurementDescriptor&, const MeasurementDescriptor&) = default;
};

inline nlohmann::json to_json(const MeasurementDescriptor& d) {
  return nlohmann::json{{"kind", to_string(d.kind)},
                        {"M", d.rows},
                        {"N", d.cols},
                        {"s", d.sparsity},
                        {"seed", d.seed}};
}

inline MeasurementDescriptor descriptor_from_json(const nlohmann::json& j) {
  require(j.is_object() && j.size() == 5, ErrorKind::Format,
          "measurement descriptor must hold exactly kind, M, N, s, seed");
  for (const char* key : {"kind", "M", "N", "s", "seed"}) {
    require(j.contains(key), ErrorKind::Format, std::string("measurement descriptor missing '") + key + "'");
  }
  MeasurementDescriptor d;
  d.kind = parse_measurement_kind(j.at("kind").get<std::string>());
  d.rows = j.at("M").get<Index>();
  d.cols = j.at("N").get<Index>();
  d.sparsity = j.at("s").get<Index>();
  d.seed = j.at("seed").get<std::uint64_t>();
  return d;
}

template <typename Scalar>
Mat<Scalar> gaussian_matrix(Index rows, Index cols, Scalar variance, Xoshiro256& rng) {
  std::normal_distribution<Scalar> normal(Scalar(0), std::sqrt(variance));
  Mat<Scalar> out(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) out(i, j) = normal(rng);
  return out;
}

// The random operator Phi. Identity, dense Gaussian, or row-sparse with s
// entries of +-1 per row stored as per-row (column, sign) lists.
template <typename Scalar>
class MeasurementMatrix {
 public:
  using Matrix = Mat<Scalar>;

  MeasurementMatrix() = default;

  static MeasurementMatrix identity(Index n) {
    require(n >= 1, ErrorKind::Dimension, "identity operator needs N >= 1");
    MeasurementMatrix phi;
    phi.desc_ = {MeasurementKind::Identity, n, n, 0, 0};
    return phi;
  }

  static MeasurementMatrix gaussian(Index m, Index n, std::uint64_t seed,
                                    GaussianScale scale = GaussianScale::InvRows) {
    require(m >= 1 && n >= 1 && m <= n, ErrorKind::Dimension,
            "gaussian operator needs 1 <= M <= N, got " + dims(m, n));
    MeasurementMatrix phi;
    phi.desc_ = {MeasurementKind::Gaussian, m, n, 0, seed};
    phi.scale_ = scale;
    Scalar variance = Scalar(1);
    if (scale == GaussianScale::InvRows) variance = Scalar(1) / Scalar(m);
    if (scale == GaussianScale::InvCols) variance = Scalar(1) / Scalar(n);
    Xoshiro256 rng(seed);
    phi.dense_ = gaussian_matrix<Scalar>(m, n, variance, rng);
    return phi;
  }

  static MeasurementMatrix row_sparse(Index m, Index n, Index s, std::uint64_t seed) {
    require(m >= 1 && n >= 1 && m <= n, ErrorKind::Dimension,
            "row-sparse operator needs 1 <= M <= N, got " + dims(m, n));
    require(s >= 1 && s <= n, ErrorKind::Sparsity,
            "row sparsity must satisfy 1 <= s <= N, got s=" + std::to_string(s));
    MeasurementMatrix phi;
    phi.desc_ = {MeasurementKind::RowSparse, m, n, s, seed};
    phi.columns_.resize(static_cast<std::size_t>(m * s));
    phi.signs_.resize(static_cast<std::size_t>(m * s));
    Xoshiro256 rng(seed);
    std::vector<std::pair<std::uint32_t, std::int8_t>> row(static_cast<std::size_t>(s));
    for (Index i = 0; i < m; ++i) {
      // Rejection sampling of s distinct columns; s << N in practice.
      for (Index k = 0; k < s; ++k) {
        std::uint32_t col = 0;
        bool fresh = false;
        while (!fresh) {
          col = static_cast<std::uint32_t>(rng.below(static_cast<std::uint64_t>(n)));
          fresh = std::none_of(row.begin(), row.begin() + k, [&](const auto& e) { return e.first == col; });
        }
        const std::int8_t sign = (rng() >> 63) ? std::int8_t{1} : std::int8_t{-1};
        row[static_cast<std::size_t>(k)] = {col, sign};
      }
      std::sort(row.begin(), row.end());
      for (Index k = 0; k < s; ++k) {
        const auto pos = static_cast<std::size_t>(i * s + k);
        phi.columns_[pos] = row[static_cast<std::size_t>(k)].first;
        phi.signs_[pos] = row[static_cast<std::size_t>(k)].second;
      }
    }
    return phi;
  }

  static MeasurementMatrix from_descriptor(const MeasurementDescriptor& d,
                                           GaussianScale scale = GaussianScale::InvRows) {
    switch (d.kind) {
      case MeasurementKind::Identity: return identity(d.cols);
      case MeasurementKind::Gaussian: return gaussian(d.rows, d.cols, d.seed, scale);
      case MeasurementKind::RowSparse: return row_sparse(d.rows, d.cols, d.sparsity, d.seed);
    }
    throw Error(ErrorKind::Config, "unknown measurement kind");
  }

  MeasurementKind kind() const { return desc_.kind; }
  Index rows() const { return desc_.rows; }
  Index cols() const { return desc_.cols; }
  Index sparsity() const { return desc_.sparsity; }
  std::uint64_t seed() const { return desc_.seed; }
  GaussianScale gaussian_scale() const { return scale_; }
  const MeasurementDescriptor& descriptor() const { return desc_; }

  double beta() const { return static_cast<double>(desc_.rows) / static_cast<double>(desc_.cols); }

  // Bytes held by the materialized operator.
  std::size_t storage_bytes() const {
    return static_cast<std::size_t>(dense_.size()) * sizeof(Scalar) +
           columns_.size() * sizeof(std::uint32_t) + signs_.size() * sizeof(std::int8_t);
  }

  const Matrix& dense_storage() const { return dense_; }
  const std::vector<std::uint32_t>& row_columns() const { return columns_; }
  const std::vector<std::int8_t>& row_signs() const { return signs_; }

  Matrix densify() const {
    switch (desc_.kind) {
      case MeasurementKind::Identity: return Matrix::Identity(desc_.rows, desc_.cols);
      case MeasurementKind::Gaussian: return dense_;
      case MeasurementKind::RowSparse: {
        Matrix out = Matrix::Zero(desc_.rows, desc_.cols);
        for_each_entry([&](Index i, Index col, Scalar sign) { out(i, col) = sign; });
        return out;
      }
    }
    return {};
  }

  // Phi * Y for Y with N rows (a vector or a block of columns).
  template <typename Derived>
  Matrix project(const Eigen::MatrixBase<Derived>& y) const {
    require(y.rows() == desc_.cols, ErrorKind::Dimension,
            "project expects " + std::to_string(desc_.cols) + " rows, got " + std::to_string(y.rows()));
    switch (desc_.kind) {
      case MeasurementKind::Identity: return y;
      case MeasurementKind::Gaussian: return dense_ * y;
      case MeasurementKind::RowSparse: {
        Matrix out = Matrix::Zero(desc_.rows, y.cols());
        for_each_entry([&](Index i, Index col, Scalar sign) { out.row(i) += sign * y.row(col); });
        return out;
      }
    }
    return {};
  }

  // Phi^T * R for R with M rows. Row-sparse output touches at most sM rows.
  template <typename Derived>
  Matrix adjoint(const Eigen::MatrixBase<Derived>& r) const {
    require(r.rows() == desc_.rows, ErrorKind::Dimension,
            "adjoint expects " + std::to_string(desc_.rows) + " rows, got " + std::to_string(r.rows()));
    switch (desc_.kind) {
      case MeasurementKind::Identity: return r;
      case MeasurementKind::Gaussian: return dense_.transpose() * r;
      case MeasurementKind::RowSparse: {
        Matrix out = Matrix::Zero(desc_.cols, r.cols());
        for_each_entry([&](Index i, Index col, Scalar sign) { out.row(col) += sign * r.row(i); });
        return out;
      }
    }
    return {};
  }

  // Phi * (A * W) without forming Phi*A. The row-sparse path only reads the
  // s*M rows of A that Phi selects.
  template <typename Derived>
  Matrix project_product(const Matrix& a, const Eigen::MatrixBase<Derived>& w) const {
    require(a.rows() == desc_.cols && a.cols() == w.rows(), ErrorKind::Dimension,
            "project_product shape mismatch: A is " + dims(a.rows(), a.cols()) + ", W is " + dims(w.rows(), w.cols()));
    if (desc_.kind != MeasurementKind::RowSparse) return project(a * w);
    Matrix out = Matrix::Zero(desc_.rows, w.cols());
    for_each_entry([&](Index i, Index col, Scalar sign) { out.row(i).noalias() += sign * (a.row(col) * w); });
    return out;
  }

  // A^T * (Phi^T * V); row-sparse Phi^T V has at most s*M nonzeros so only
  // those rows of A are read.
  template <typename Derived>
  Matrix adjoint_product(const Matrix& a, const Eigen::MatrixBase<Derived>& v) const {
    require(a.rows() == desc_.cols && v.rows() == desc_.rows, ErrorKind::Dimension,
            "adjoint_product shape mismatch: A is " + dims(a.rows(), a.cols()) + ", V is " + dims(v.rows(), v.cols()));
    if (desc_.kind != MeasurementKind::RowSparse) return a.transpose() * adjoint(v);
    Matrix out = Matrix::Zero(a.cols(), v.cols());
    for_each_entry([&](Index i, Index col, Scalar sign) {
      out.noalias() += (sign * a.row(col).transpose()) * v.row(i);
    });
    return out;
  }

 private:
  template <typename Fn>
  void for_each_entry(Fn&& fn) const {
    const Index s = desc_.sparsity;
    for (Index i = 0; i < desc_.rows; ++i)
      for (Index k = 0; k < s; ++k) {
        const auto pos = static_cast<std::size_t>(i * s + k);
        fn(i, static_cast<Index>(columns_[pos]), static_cast<Scalar>(signs_[pos]));
      }
  }

  MeasurementDescriptor desc_;
  GaussianScale scale_ = GaussianScale::InvRows;
  Matrix dense_;
  std::vector<std::uint32_t> columns_;
  std::vector<std::int8_t> signs_;
};

}  // namespace randnet

#endif  // RANDNET_MEASUREMENT_HPP
