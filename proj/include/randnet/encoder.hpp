#ifndef RANDNET_ENCODER_HPP
#define RANDNET_ENCODER_HPP

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "randnet/core.hpp"
#include "randnet/dictionary.hpp"
#include "randnet/measurement.hpp"

namespace randnet {

// Two-sided ReLU: (|c| - eps)_+ sgn(c), element-wise.
template <typename Derived>
auto soft_threshold(const Eigen::MatrixBase<Derived>& c, typename Derived::Scalar eps) {
  using Scalar = typename Derived::Scalar;
  using Plain = typename Derived::PlainObject;
  Plain out(c.rows(), c.cols());
  for (Index j = 0; j < c.cols(); ++j)
    for (Index i = 0; i < c.rows(); ++i) {
      const Scalar v = c(i, j);
      out(i, j) = v > eps ? v - eps : (v < -eps ? v + eps : Scalar(0));
    }
  return out;
}

// Derivative of soft_threshold: 1 where |c| > eps, 0 otherwise (the boundary
// |c| == eps takes 0).
template <typename Derived>
auto threshold_mask(const Eigen::MatrixBase<Derived>& c, typename Derived::Scalar eps) {
  using Scalar = typename Derived::Scalar;
  return (c.array().abs() > eps).template cast<Scalar>().matrix().eval();
}

// s_0 = 0, s_t = (1 + sqrt(1 + 4 s_{t-1}^2)) / 2.
template <typename Scalar = double>
std::vector<Scalar> momentum_sequence(int steps) {
  require(steps >= 0, ErrorKind::Config, "momentum sequence length must be >= 0");
  std::vector<Scalar> s(static_cast<std::size_t>(steps) + 1, Scalar(0));
  for (std::size_t t = 1; t < s.size(); ++t) s[t] = (Scalar(1) + std::sqrt(Scalar(1) + Scalar(4) * s[t - 1] * s[t - 1])) / Scalar(2);
  return s;
}

template <typename Scalar>
struct FistaParams {
  Scalar lambda = Scalar(0);
  Scalar L = Scalar(1);
  int T = 1;

  void validate() const {
    require(L > Scalar(0), ErrorKind::Config, "FISTA step bound L must be > 0");
    require(lambda >= Scalar(0), ErrorKind::Config, "lambda must be >= 0");
    require(T >= 1, ErrorKind::Config, "FISTA needs T >= 1");
  }

  Scalar threshold() const { return lambda / L; }
};

// Every intermediate of the unrolled forward pass. Each matrix is p x n for a
// batch of n examples encoded together.
template <typename Scalar>
struct EncoderTrace {
  int T = 0;
  Scalar lambda = Scalar(0);
  Scalar L = Scalar(1);
  Scalar eps = Scalar(0);
  std::vector<Scalar> s;          // s_0 .. s_T
  std::vector<Mat<Scalar>> w;     // w_1 .. w_T at index t-1
  std::vector<Mat<Scalar>> c;     // c_1 .. c_T at index t-1
  std::vector<Mat<Scalar>> x;     // x_0 .. x_T, x_0 = 0

  Index code_dim() const { return x.empty() ? 0 : x.front().rows(); }
  Index batch() const { return x.empty() ? 0 : x.front().cols(); }

  // Extrapolation weight (s_{t-1} - 1) / s_t used to form w_t.
  Scalar extrapolation(int t) const { return (s[static_cast<std::size_t>(t) - 1] - Scalar(1)) / s[static_cast<std::size_t>(t)]; }

  // z_t = (x_t, x_{t-1}), with z_0 = (0, 0).
  std::pair<Mat<Scalar>, Mat<Scalar>> state(int t) const {
    const auto& cur = x[static_cast<std::size_t>(t)];
    if (t == 0) return {cur, Mat<Scalar>::Zero(cur.rows(), cur.cols())};
    return {cur, x[static_cast<std::size_t>(t) - 1]};
  }
};

template <typename Scalar>
struct EncodeResult {
  Mat<Scalar> code;  // x_T, p x n
  std::optional<EncoderTrace<Scalar>> trace;
};

// A^T Phi^T (R - Phi A W) through chained operator applications.
template <typename Scalar>
class ChainedOperator {
 public:
  ChainedOperator(const Dictionary<Scalar>& dict, const MeasurementMatrix<Scalar>& phi, const Mat<Scalar>& r)
      : a_(dict.atoms()), phi_(phi), r_(r) {}

  Index code_dim() const { return a_.cols(); }
  Index batch() const { return r_.cols(); }

  Mat<Scalar> correlate_residual(const Mat<Scalar>& w) const {
    return phi_.adjoint_product(a_, r_ - phi_.project_product(a_, w));
  }

 private:
  const Mat<Scalar>& a_;
  const MeasurementMatrix<Scalar>& phi_;
  const Mat<Scalar>& r_;
};

// D = Phi A materialized for one block, plus G = D^T D when p < M makes
// code-space products cheaper than passing through measurement space.
template <typename Scalar>
struct ProjectedDictionary {
  Mat<Scalar> d;
  Mat<Scalar> gram;
  bool use_gram = false;

  ProjectedDictionary() = default;

  ProjectedDictionary(const Dictionary<Scalar>& dict, const MeasurementMatrix<Scalar>& phi) {
    require(dict.rows() == phi.cols(), ErrorKind::Dimension,
            "dictionary has " + std::to_string(dict.rows()) + " rows but Phi has " + std::to_string(phi.cols()) + " columns");
    d = phi.project(dict.atoms());
    use_gram = d.cols() < d.rows();
    if (use_gram) {
      gram = Mat<Scalar>::Zero(d.cols(), d.cols());
      gram.template selfadjointView<Eigen::Lower>().rankUpdate(d.transpose());
      gram.template triangularView<Eigen::StrictlyUpper>() = gram.transpose();
    }
  }

  Index measurements() const { return d.rows(); }
  Index code_dim() const { return d.cols(); }

  // D^T D V
  Mat<Scalar> normal(const Mat<Scalar>& v) const {
    if (use_gram) return gram * v;
    Mat<Scalar> dv = d * v;
    return d.transpose() * dv;
  }
};

template <typename Scalar>
class ProjectedOperator {
 public:
  ProjectedOperator(const ProjectedDictionary<Scalar>& proj, const Mat<Scalar>& r)
      : proj_(proj), correlation_(proj.d.transpose() * r), r_(r) {
    require(r.rows() == proj.measurements(), ErrorKind::Dimension,
            "measurements have " + std::to_string(r.rows()) + " rows, operator expects " + std::to_string(proj.measurements()));
  }

  Index code_dim() const { return proj_.code_dim(); }
  Index batch() const { return r_.cols(); }

  Mat<Scalar> correlate_residual(const Mat<Scalar>& w) const { return correlation_ - proj_.normal(w); }

 private:
  const ProjectedDictionary<Scalar>& proj_;
  Mat<Scalar> correlation_;
  const Mat<Scalar>& r_;
};

// Unrolled FISTA for any operator exposing correlate_residual(W).
template <typename Scalar, typename Operator>
EncodeResult<Scalar> fista_run(const Operator& op, const FistaParams<Scalar>& params, bool keep_trace) {
  params.validate();
  const Index p = op.code_dim();
  const Index n = op.batch();
  const Scalar eps = params.threshold();
  const Scalar inv_l = Scalar(1) / params.L;
  const std::vector<Scalar> s = momentum_sequence<Scalar>(params.T);

  EncodeResult<Scalar> result;
  EncoderTrace<Scalar> trace;
  if (keep_trace) {
    trace.T = params.T;
    trace.lambda = params.lambda;
    trace.L = params.L;
    trace.eps = eps;
    trace.s = s;
    trace.w.reserve(static_cast<std::size_t>(params.T));
    trace.c.reserve(static_cast<std::size_t>(params.T));
    trace.x.reserve(static_cast<std::size_t>(params.T) + 1);
    trace.x.push_back(Mat<Scalar>::Zero(p, n));
  }

  Mat<Scalar> x_prev = Mat<Scalar>::Zero(p, n);   // x_{t-1}
  Mat<Scalar> x_prev2 = Mat<Scalar>::Zero(p, n);  // x_{t-2}
  for (int t = 1; t <= params.T; ++t) {
    const Scalar alpha = (s[static_cast<std::size_t>(t) - 1] - Scalar(1)) / s[static_cast<std::size_t>(t)];
    Mat<Scalar> w = (Scalar(1) + alpha) * x_prev - alpha * x_prev2;
    Mat<Scalar> c = w + inv_l * op.correlate_residual(w);
    Mat<Scalar> x = soft_threshold(c, eps);
    if (!x.allFinite())
      throw Error(ErrorKind::Divergence, "non-finite code at FISTA iteration " + std::to_string(t) + " (L too small?)");
    if (keep_trace) {
      trace.w.push_back(std::move(w));
      trace.c.push_back(std::move(c));
      trace.x.push_back(x);
    }
    x_prev2 = std::move(x_prev);
    x_prev = std::move(x);
  }
  result.code = std::move(x_prev);
  if (keep_trace) result.trace = std::move(trace);
  return result;
}

// Sparse-code the columns of r (each of length M) against Phi A.
template <typename Scalar, typename Derived>
EncodeResult<Scalar> fista_encode(const Eigen::MatrixBase<Derived>& r, const Dictionary<Scalar>& dict,
                                  const MeasurementMatrix<Scalar>& phi, const FistaParams<Scalar>& params,
                                  bool keep_trace = false) {
  require(dict.rows() == phi.cols(), ErrorKind::Dimension,
          "dictionary has " + std::to_string(dict.rows()) + " rows but Phi has " + std::to_string(phi.cols()) + " columns");
  require(r.rows() == phi.rows(), ErrorKind::Dimension,
          "measurement length " + std::to_string(r.rows()) + " does not match M=" + std::to_string(phi.rows()));
  const Mat<Scalar> rm = r;
  return fista_run(ChainedOperator<Scalar>(dict, phi, rm), params, keep_trace);
}

template <typename Scalar>
EncodeResult<Scalar> fista_encode_projected(const Mat<Scalar>& r, const ProjectedDictionary<Scalar>& proj,
                                            const FistaParams<Scalar>& params, bool keep_trace = false) {
  return fista_run(ProjectedOperator<Scalar>(proj, r), params, keep_trace);
}

// Per-column lasso objective 1/2 ||r - Phi A x||^2 + lambda ||x||_1, summed.
template <typename Scalar, typename DerivedR, typename DerivedX>
Scalar lasso_objective(const Eigen::MatrixBase<DerivedR>& r, const Eigen::MatrixBase<DerivedX>& x,
                       const Dictionary<Scalar>& dict, const MeasurementMatrix<Scalar>& phi, Scalar lambda) {
  const Mat<Scalar> residual = r - phi.project_product(dict.atoms(), x);
  return Scalar(0.5) * residual.squaredNorm() + lambda * x.template lpNorm<1>();
}

}  // namespace randnet

#endif  // RANDNET_ENCODER_HPP
