#ifndef RANDNET_MODEL_HPP
#define RANDNET_MODEL_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>

#include "randnet/core.hpp"
#include "randnet/dictionary.hpp"
#include "randnet/measurement.hpp"
#include "randnet/rng.hpp"

namespace randnet {

// Floor applied to the true-class probability inside ce_loss.
inline constexpr double kLogProbabilityFloor = 1e-300;

// r_hat = Phi A x, using the same A as the encoder.
template <typename Scalar, typename Derived>
Mat<Scalar> decode(const Eigen::MatrixBase<Derived>& code, const Dictionary<Scalar>& dict,
                   const MeasurementMatrix<Scalar>& phi) {
  require(code.rows() == dict.cols(), ErrorKind::Dimension,
          "code length " + std::to_string(code.rows()) + " does not match p=" + std::to_string(dict.cols()));
  return phi.project_product(dict.atoms(), code);
}

// 1/2 ||r - r_hat||^2 (summed over columns).
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar recon_loss(const Eigen::MatrixBase<DerivedA>& r, const Eigen::MatrixBase<DerivedB>& r_hat) {
  require(r.rows() == r_hat.rows() && r.cols() == r_hat.cols(), ErrorKind::Dimension,
          "recon_loss operands are " + dims(r.rows(), r.cols()) + " and " + dims(r_hat.rows(), r_hat.cols()));
  return typename DerivedA::Scalar(0.5) * (r - r_hat).squaredNorm();
}

// One-hot label: class index c out of K classes.
struct LabelVector {
  int label = 0;
  int classes = 0;

  LabelVector(int c, int k) : label(c), classes(k) {
    require(k >= 1 && c >= 0 && c < k, ErrorKind::Config,
            "label " + std::to_string(c) + " is outside 0.." + std::to_string(k - 1));
  }

  template <typename Scalar = double>
  Vec<Scalar> one_hot() const {
    Vec<Scalar> u = Vec<Scalar>::Zero(classes);
    u(label) = Scalar(1);
    return u;
  }
};

template <typename Scalar>
struct ClassifierParams {
  Mat<Scalar> weights;  // C, K x p
  Vec<Scalar> bias;     // d, K

  Index classes() const { return weights.rows(); }
  Index code_dim() const { return weights.cols(); }

  // Entries i.i.d. uniform on [-1/sqrt(p), 1/sqrt(p)].
  static ClassifierParams uniform_init(Index k, Index p, std::uint64_t seed) {
    Xoshiro256 rng(seed);
    const Scalar bound = Scalar(1) / std::sqrt(Scalar(p));
    std::uniform_real_distribution<Scalar> unif(-bound, bound);
    ClassifierParams params;
    params.weights.resize(k, p);
    for (Index j = 0; j < p; ++j)
      for (Index i = 0; i < k; ++i) params.weights(i, j) = unif(rng);
    params.bias.resize(k);
    for (Index i = 0; i < k; ++i) params.bias(i) = unif(rng);
    return params;
  }
};

// Column-wise softmax with max subtraction.
template <typename Derived>
auto softmax(const Eigen::MatrixBase<Derived>& q) {
  using Plain = typename Derived::PlainObject;
  Plain out(q.rows(), q.cols());
  for (Index j = 0; j < q.cols(); ++j) {
    out.col(j) = (q.col(j).array() - q.col(j).maxCoeff()).exp().matrix();
    out.col(j) /= out.col(j).sum();
  }
  return out;
}

// u_hat = softmax(C x + d) for each column of x.
template <typename Scalar, typename Derived>
Mat<Scalar> classify(const Eigen::MatrixBase<Derived>& code, const ClassifierParams<Scalar>& params) {
  require(code.rows() == params.code_dim(), ErrorKind::Dimension,
          "code length " + std::to_string(code.rows()) + " does not match classifier p=" + std::to_string(params.code_dim()));
  Mat<Scalar> q = params.weights * code;
  q.colwise() += params.bias;
  return softmax(q);
}

// -log u_hat[c], with u_hat[c] clamped at kLogProbabilityFloor.
template <typename Derived>
typename Derived::Scalar ce_loss(const Eigen::MatrixBase<Derived>& u_hat, const LabelVector& u) {
  using Scalar = typename Derived::Scalar;
  require(u_hat.size() == u.classes, ErrorKind::Dimension,
          "probability vector has " + std::to_string(u_hat.size()) + " entries, label has K=" + std::to_string(u.classes));
  const Scalar floor = std::max(static_cast<Scalar>(kLogProbabilityFloor), std::numeric_limits<Scalar>::min());
  const Scalar p = std::max<Scalar>(u_hat(u.label), floor);
  return -std::log(p);
}

// Lowest index wins ties.
template <typename Derived>
int argmax(const Eigen::MatrixBase<Derived>& v) {
  Index best = 0;
  for (Index i = 1; i < v.size(); ++i)
    if (v(i) > v(best)) best = i;
  return static_cast<int>(best);
}

}  // namespace randnet

#endif  // RANDNET_MODEL_HPP
