#ifndef RANDNET_DICTIONARY_HPP
#define RANDNET_DICTIONARY_HPP

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "randnet/core.hpp"
#include "randnet/measurement.hpp"
#include "randnet/rng.hpp"

namespace randnet {

inline constexpr double kMinColumnNorm = 1e-12;

// The N x p dictionary A. Columns are atoms; after normalize() every column
// has unit l2 norm.
template <typename Scalar>
class Dictionary {
 public:
  using Matrix = Mat<Scalar>;

  Dictionary() = default;
  explicit Dictionary(Matrix atoms) : atoms_(std::move(atoms)) {}

  // i.i.d. N(0, 1/N) entries followed by column normalization.
  static Dictionary random(Index n, Index p, std::uint64_t seed) {
    Xoshiro256 rng(seed);
    Dictionary dict(gaussian_matrix<Scalar>(n, p, Scalar(1) / Scalar(n), rng));
    dict.normalize();
    return dict;
  }

  Index rows() const { return atoms_.rows(); }
  Index cols() const { return atoms_.cols(); }
  const Matrix& atoms() const { return atoms_; }
  Matrix& atoms() { return atoms_; }

  // Stacked columns [a_1; a_2; ...; a_p] aliasing the storage.
  Eigen::Map<const Vec<Scalar>> stacked() const { return {atoms_.data(), atoms_.size()}; }
  Eigen::Map<Vec<Scalar>> stacked() { return {atoms_.data(), atoms_.size()}; }

  Dictionary& normalize() {
    for (Index i = 0; i < atoms_.cols(); ++i) {
      const Scalar norm = atoms_.col(i).norm();
      if (!(norm > Scalar(kMinColumnNorm)))
        throw Error(ErrorKind::DegenerateDictionary,
                    "column " + std::to_string(i) + " has norm " + std::to_string(static_cast<double>(norm)));
      atoms_.col(i) /= norm;
    }
    return *this;
  }

  Scalar max_norm_deviation() const {
    if (atoms_.cols() == 0) return Scalar(0);
    return (atoms_.colwise().norm().array() - Scalar(1)).abs().maxCoeff();
  }

  bool all_finite() const { return atoms_.allFinite(); }

 private:
  Matrix atoms_;
};

template <typename Scalar>
Dictionary<Scalar> normalize_columns(Dictionary<Scalar> dict) {
  dict.normalize();
  return dict;
}

struct LipschitzEstimate {
  double value = 0.0;       // safety * eigenvalue estimate
  double eigenvalue = 0.0;  // raw power-iteration estimate
  int iterations = 0;
  bool converged = false;
};

struct PowerIterationOptions {
  int iters = 200;
  double tol = 1e-6;
  double safety = 1.1;
  std::uint64_t seed = 0x5EEDULL;
};

// Power iteration on v -> A^T Phi^T Phi A v applied as chained operators.
template <typename Scalar>
LipschitzEstimate estimate_lipschitz(const Dictionary<Scalar>& dict, const MeasurementMatrix<Scalar>& phi,
                                     const PowerIterationOptions& opt = {}) {
  require(opt.iters >= 1, ErrorKind::Config, "power iteration needs iters >= 1");
  require(opt.safety >= 1.0, ErrorKind::Config, "Lipschitz safety factor must be >= 1");
  require(dict.rows() == phi.cols(), ErrorKind::Dimension,
          "dictionary has " + std::to_string(dict.rows()) + " rows but Phi has " + std::to_string(phi.cols()) + " columns");
  Xoshiro256 rng(opt.seed);
  Vec<Scalar> v = gaussian_matrix<Scalar>(dict.cols(), 1, Scalar(1), rng);
  v.normalize();
  LipschitzEstimate est;
  double previous = 0.0;
  for (int it = 1; it <= opt.iters; ++it) {
    Vec<Scalar> next = phi.adjoint_product(dict.atoms(), phi.project_product(dict.atoms(), v));
    const double lambda = static_cast<double>(v.dot(next));
    const Scalar norm = next.norm();
    est.iterations = it;
    est.eigenvalue = lambda;
    if (!(norm > Scalar(0))) {
      est.converged = true;
      break;
    }
    v = next / norm;
    if (it > 1 && std::abs(lambda - previous) <= opt.tol * std::abs(lambda)) {
      est.converged = true;
      break;
    }
    previous = lambda;
  }
  est.value = opt.safety * est.eigenvalue;
  return est;
}

// Same estimate for an explicit Gram matrix G = D^T D.
template <typename Scalar>
LipschitzEstimate estimate_lipschitz_gram(const Mat<Scalar>& gram, const PowerIterationOptions& opt = {}) {
  Xoshiro256 rng(opt.seed);
  Vec<Scalar> v = gaussian_matrix<Scalar>(gram.rows(), 1, Scalar(1), rng);
  v.normalize();
  LipschitzEstimate est;
  double previous = 0.0;
  for (int it = 1; it <= opt.iters; ++it) {
    Vec<Scalar> next = gram * v;
    const double lambda = static_cast<double>(v.dot(next));
    const Scalar norm = next.norm();
    est.iterations = it;
    est.eigenvalue = lambda;
    if (!(norm > Scalar(0))) {
      est.converged = true;
      break;
    }
    v = next / norm;
    if (it > 1 && std::abs(lambda - previous) <= opt.tol * std::abs(lambda)) {
      est.converged = true;
      break;
    }
    previous = lambda;
  }
  est.value = opt.safety * est.eigenvalue;
  return est;
}

// Matrix checkpoint file: 8-byte header (rows, cols as little-endian
// uint32) followed by rows*cols float64 values in column-major order.
template <typename Scalar>
void write_matrix(const std::string& path, const Mat<Scalar>& m) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorKind::Io, "cannot open '" + path + "' for writing");
  require(m.rows() <= 0xFFFFFFFFLL && m.cols() <= 0xFFFFFFFFLL, ErrorKind::Dimension, "matrix too large for checkpoint header");
  const auto put_u32 = [&](std::uint32_t v) {
    const unsigned char bytes[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                                    static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(bytes), 4);
  };
  put_u32(static_cast<std::uint32_t>(m.rows()));
  put_u32(static_cast<std::uint32_t>(m.cols()));
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic> as_double = m.template cast<double>();
  out.write(reinterpret_cast<const char*>(as_double.data()),
            static_cast<std::streamsize>(as_double.size() * sizeof(double)));
  require(static_cast<bool>(out), ErrorKind::Io, "write failed for '" + path + "'");
}

template <typename Scalar>
Mat<Scalar> read_matrix(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::Io, "cannot open '" + path + "'");
  unsigned char header[8];
  in.read(reinterpret_cast<char*>(header), 8);
  require(in.gcount() == 8, ErrorKind::Length, "checkpoint '" + path + "' is shorter than its header");
  const auto get_u32 = [&](int off) {
    return static_cast<std::uint32_t>(header[off]) | (static_cast<std::uint32_t>(header[off + 1]) << 8) |
           (static_cast<std::uint32_t>(header[off + 2]) << 16) | (static_cast<std::uint32_t>(header[off + 3]) << 24);
  };
  const Index rows = get_u32(0);
  const Index cols = get_u32(4);
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic> data(rows, cols);
  const auto bytes = static_cast<std::streamsize>(data.size() * sizeof(double));
  in.read(reinterpret_cast<char*>(data.data()), bytes);
  require(in.gcount() == bytes, ErrorKind::Length, "checkpoint '" + path + "' is truncated");
  return data.cast<Scalar>();
}

template <typename Scalar>
void save_dictionary(const std::string& path, const Dictionary<Scalar>& dict) {
  write_matrix(path, dict.atoms());
}

template <typename Scalar>
Dictionary<Scalar> load_dictionary(const std::string& path) {
  return Dictionary<Scalar>(read_matrix<Scalar>(path));
}

}  // namespace randnet

#endif  // RANDNET_DICTIONARY_HPP
