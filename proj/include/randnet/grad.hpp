#ifndef RANDNET_GRAD_HPP
#define RANDNET_GRAD_HPP

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "randnet/core.hpp"
#include "randnet/dictionary.hpp"
#include "randnet/encoder.hpp"
#include "randnet/measurement.hpp"
#include "randnet/model.hpp"

namespace randnet {

// Gradients of one loss with respect to A, C and d. delta_a is N x p in
// column-major order, so stacked_a() is the stacked-columns vector
// [da_1; ...; da_p]; likewise delta_c is K x p.
template <typename Scalar>
struct GradientBundle {
  Mat<Scalar> delta_a;
  Mat<Scalar> delta_c;
  Vec<Scalar> delta_d;
  Scalar loss_value = Scalar(0);

  Eigen::Map<const Vec<Scalar>> stacked_a() const { return {delta_a.data(), delta_a.size()}; }
  Eigen::Map<const Vec<Scalar>> stacked_c() const { return {delta_c.data(), delta_c.size()}; }

  bool all_finite() const {
    return delta_a.allFinite() && delta_c.allFinite() && delta_d.allFinite() && std::isfinite(static_cast<double>(loss_value));
  }
};

// Lets tests knock out individual contributions to the tied-weight gradient.
struct BackpropOptions {
  bool include_decoder = true;
  int skip_iteration = 0;  // 1..T drops that iteration's dA term; 0 keeps all
};

// Gradient of sum_j 1/2 ||r_j - D x_T,j||^2 with respect to D = Phi A.
template <typename Scalar>
struct ProjectedGradient {
  Mat<Scalar> delta_d;  // M x p
  Scalar loss = Scalar(0);
};

// Reverse pass through the unrolled encoder. For one iteration
//   c_t = w_t + (1/L) D^T (r - D w_t),   x_t = eta(c_t),
//   w_t = (1 + a_t) x_{t-1} - a_t x_{t-2},  a_t = (s_{t-1} - 1) / s_t,
// an upstream g_t = dL/dc_t contributes (1/L) [(r - D w_t) g_t^T - (D g_t) w_t^T]
// to dL/dD and sends g_t - (1/L) D^T D g_t back to w_t. The decoder adds
// (D x_T - r) x_T^T. When the Gram matrix is available the per-iteration
// outer products are summed in code space (p x p) and mapped once at the end.
template <typename Scalar>
ProjectedGradient<Scalar> backprop_projected(const EncoderTrace<Scalar>& trace, const Mat<Scalar>& r,
                                             const ProjectedDictionary<Scalar>& proj,
                                             const BackpropOptions& options = {}) {
  require(trace.T >= 1 && static_cast<int>(trace.x.size()) == trace.T + 1 &&
              static_cast<int>(trace.w.size()) == trace.T && static_cast<int>(trace.c.size()) == trace.T,
          ErrorKind::Consistency, "encoder trace is incomplete (was keep_trace set?)");
  require(trace.code_dim() == proj.code_dim(), ErrorKind::Consistency,
          "trace code length " + std::to_string(trace.code_dim()) + " does not match dictionary p=" + std::to_string(proj.code_dim()));
  require(r.rows() == proj.measurements() && r.cols() == trace.batch(), ErrorKind::Consistency,
          "measurements " + dims(r.rows(), r.cols()) + " do not match trace (" + std::to_string(proj.measurements()) +
              " x " + std::to_string(trace.batch()) + ")");

  const Mat<Scalar>& d = proj.d;
  const Index p = proj.code_dim();
  const Index n = r.cols();
  const Scalar inv_l = Scalar(1) / trace.L;
  const Mat<Scalar>& x_final = trace.x.back();

  ProjectedGradient<Scalar> out;
  const Mat<Scalar> residual = d * x_final - r;  // dL/dr_hat
  out.loss = Scalar(0.5) * residual.squaredNorm();
  out.delta_d = Mat<Scalar>::Zero(d.rows(), p);
  if (options.include_decoder) out.delta_d.noalias() += residual * x_final.transpose();

  Mat<Scalar> dx = d.transpose() * residual;  // dL/dx_T
  Mat<Scalar> dx_prev = Mat<Scalar>::Zero(p, n);
  Mat<Scalar> code_sum;   // sum_t g_t
  Mat<Scalar> outer_sum;  // sum_t w_t g_t^T
  if (proj.use_gram) {
    code_sum = Mat<Scalar>::Zero(p, n);
    outer_sum = Mat<Scalar>::Zero(p, p);
  }

  for (int t = trace.T; t >= 1; --t) {
    const auto idx = static_cast<std::size_t>(t) - 1;
    const Mat<Scalar>& w = trace.w[idx];
    const Mat<Scalar> g = threshold_mask(trace.c[idx], trace.eps).cwiseProduct(dx);
    const Mat<Scalar> dg = d * g;
    if (t != options.skip_iteration) {
      if (proj.use_gram) {
        code_sum += g;
        outer_sum.noalias() += w * g.transpose();
      } else {
        const Mat<Scalar> fit = r - d * w;
        out.delta_d.noalias() += inv_l * (fit * g.transpose());
        out.delta_d.noalias() -= inv_l * (dg * w.transpose());
      }
    }
    const Mat<Scalar> dw = g - inv_l * (d.transpose() * dg);
    const Scalar alpha = trace.extrapolation(t);
    dx = dx_prev + (Scalar(1) + alpha) * dw;
    dx_prev = -alpha * dw;
  }
  if (proj.use_gram) {
    const Mat<Scalar> sym = outer_sum + outer_sum.transpose();
    out.delta_d.noalias() += inv_l * (r * code_sum.transpose());
    out.delta_d.noalias() -= inv_l * (d * sym);
  }
  return out;
}

// dL_A/dA for L_A = 1/2 ||r - Phi A x_T||^2 with x_T the unrolled encoder output.
template <typename Scalar, typename Derived>
GradientBundle<Scalar> backprop_unsupervised(const EncoderTrace<Scalar>& trace, const Eigen::MatrixBase<Derived>& r,
                                             const Dictionary<Scalar>& dict, const MeasurementMatrix<Scalar>& phi,
                                             const BackpropOptions& options = {}) {
  require(r.rows() == phi.rows(), ErrorKind::Consistency,
          "measurement length " + std::to_string(r.rows()) + " does not match M=" + std::to_string(phi.rows()));
  const ProjectedDictionary<Scalar> proj(dict, phi);
  const Mat<Scalar> rm = r;
  ProjectedGradient<Scalar> pg = backprop_projected(trace, rm, proj, options);
  GradientBundle<Scalar> bundle;
  bundle.delta_a = phi.adjoint(pg.delta_d);
  bundle.delta_c = Mat<Scalar>::Zero(0, dict.cols());
  bundle.delta_d = Vec<Scalar>::Zero(0);
  bundle.loss_value = pg.loss;
  return bundle;
}

// Softmax cross-entropy gradient for a batch of codes (columns of x):
// dL/dq = u_hat - u, dL/dd = sum (u_hat - u), dL/dC = sum (u_hat - u) x^T.
template <typename Scalar, typename Derived>
GradientBundle<Scalar> backprop_classifier(const Eigen::MatrixBase<Derived>& code, std::span<const int> labels,
                                           const ClassifierParams<Scalar>& params) {
  require(static_cast<Index>(labels.size()) == code.cols(), ErrorKind::Dimension,
          std::to_string(labels.size()) + " labels for " + std::to_string(code.cols()) + " codes");
  const Mat<Scalar> u_hat = classify(code, params);
  Mat<Scalar> dq = u_hat;
  GradientBundle<Scalar> bundle;
  for (Index j = 0; j < code.cols(); ++j) {
    const LabelVector u(labels[static_cast<std::size_t>(j)], static_cast<int>(params.classes()));
    bundle.loss_value += ce_loss(u_hat.col(j), u);
    dq(u.label, j) -= Scalar(1);
  }
  bundle.delta_a = Mat<Scalar>::Zero(0, 0);
  bundle.delta_c = dq * code.transpose();
  bundle.delta_d = dq.rowwise().sum();
  return bundle;
}

template <typename Scalar, typename Derived>
GradientBundle<Scalar> backprop_classifier(const Eigen::MatrixBase<Derived>& code, const LabelVector& u,
                                           const ClassifierParams<Scalar>& params) {
  const int label = u.label;
  return backprop_classifier(code, std::span<const int>(&label, 1), params);
}

// A loss evaluation plus an activation pattern; coordinates whose
// perturbation changes the pattern sit on a non-differentiable boundary.
template <typename Scalar>
struct Probe {
  Scalar loss = Scalar(0);
  std::vector<std::uint8_t> pattern;
};

struct FiniteDiffResult {
  double max_rel_error = 0.0;
  Index worst_coordinate = -1;
  Index checked = 0;
  Index excluded = 0;
};

// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h against an analytic
// gradient; error is |a - n| / (|a| + |n| + 1e-12), maximized over coordinates.
// loss_fn may return a Scalar or a Probe<Scalar>.
template <typename Scalar, typename LossFn>
FiniteDiffResult finite_diff_check(const Vec<Scalar>& point, const Vec<Scalar>& analytic, LossFn&& loss_fn, Scalar h) {
  require(h > Scalar(0), ErrorKind::Config, "finite-difference step must be > 0");
  require(point.size() == analytic.size(), ErrorKind::Dimension, "point and analytic gradient differ in length");
  using Result = std::invoke_result_t<LossFn&, const Vec<Scalar>&>;
  constexpr bool has_pattern = !std::is_arithmetic_v<Result>;

  FiniteDiffResult res;
  Vec<Scalar> theta = point;
  std::vector<std::uint8_t> base_pattern;
  if constexpr (has_pattern) base_pattern = loss_fn(theta).pattern;
  for (Index i = 0; i < point.size(); ++i) {
    const Scalar saved = theta(i);
    theta(i) = saved + h;
    const Result plus = loss_fn(theta);
    theta(i) = saved - h;
    const Result minus = loss_fn(theta);
    theta(i) = saved;
    double numeric = 0.0;
    if constexpr (has_pattern) {
      if (plus.pattern != base_pattern || minus.pattern != base_pattern) {
        ++res.excluded;
        continue;
      }
      numeric = (static_cast<double>(plus.loss) - static_cast<double>(minus.loss)) / (2.0 * static_cast<double>(h));
    } else {
      numeric = (static_cast<double>(plus) - static_cast<double>(minus)) / (2.0 * static_cast<double>(h));
    }
    const double a = static_cast<double>(analytic(i));
    const double err = std::abs(a - numeric) / (std::abs(a) + std::abs(numeric) + 1e-12);
    ++res.checked;
    if (err > res.max_rel_error || res.worst_coordinate < 0) {
      res.max_rel_error = err;
      res.worst_coordinate = i;
    }
  }
  return res;
}

// Reconstruction loss of the unrolled network as a function of the stacked
// dictionary, with the thresholding pattern of every iteration attached.
template <typename Scalar>
Probe<Scalar> unsupervised_probe(const Vec<Scalar>& stacked_atoms, Index n, Index p, const Mat<Scalar>& r,
                                 const MeasurementMatrix<Scalar>& phi, const FistaParams<Scalar>& params) {
  Dictionary<Scalar> dict(Eigen::Map<const Mat<Scalar>>(stacked_atoms.data(), n, p));
  EncodeResult<Scalar> enc = fista_encode(r, dict, phi, params, true);
  Probe<Scalar> probe;
  probe.loss = recon_loss(r, decode(enc.code, dict, phi));
  const auto& trace = *enc.trace;
  probe.pattern.reserve(static_cast<std::size_t>(trace.T * p * r.cols()));
  for (const auto& c : trace.c)
    for (Index k = 0; k < c.size(); ++k) probe.pattern.push_back(std::abs(c(k)) > trace.eps ? 1 : 0);
  return probe;
}

}  // namespace randnet

#endif  // RANDNET_GRAD_HPP
