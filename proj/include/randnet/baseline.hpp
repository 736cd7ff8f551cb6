#ifndef RANDNET_BASELINE_HPP
#define RANDNET_BASELINE_HPP

#include <chrono>
#include <cmath>
#include <string>
#include <vector>

#include "randnet/core.hpp"
#include "randnet/data.hpp"
#include "randnet/dictionary.hpp"
#include "randnet/encoder.hpp"
#include "randnet/train.hpp"

namespace randnet {

enum class DictionaryUpdate { LeastSquaresNormalize };

// Raw: codes and update against y = A x (Phi = I).
// Compressed: against r = Phi_b A x with each example's block operator.
enum class AltMinSpace { Raw, Compressed };

struct AltMinConfig {
  int outer_iters = 10;
  double lambda = 0.1;
  double L = 0.0;  // <= 0: safety * max block eigenvalue, re-estimated every round
  double lipschitz_safety = 1.1;
  int T = 400;
  DictionaryUpdate update = DictionaryUpdate::LeastSquaresNormalize;
  AltMinSpace space = AltMinSpace::Compressed;
  double damping = 1e-8;
  int cg_iters = 2000;
  double cg_tol = 1e-12;
  int threads = 1;

  void validate() const {
    require(outer_iters >= 0, ErrorKind::Config, "outer_iters must be >= 0");
    require(lambda >= 0.0, ErrorKind::Config, "lambda must be >= 0");
    require(T >= 1, ErrorKind::Config, "T must be >= 1");
    require(damping > 0.0, ErrorKind::Config, "damping must be > 0");
    require(cg_iters >= 1 && cg_tol > 0.0, ErrorKind::Config, "invalid CG settings");
  }
};

namespace detail {

template <typename Scalar>
Dataset<Scalar> raw_view(const Dataset<Scalar>& ds) {
  require(ds.examples.cols() > 0, ErrorKind::Config, "raw alternating minimization needs uncompressed examples");
  Dataset<Scalar> view;
  view.dim = ds.dim;
  view.compressed = ds.examples;
  view.block_of.assign(static_cast<std::size_t>(ds.examples.cols()), 0);
  view.block_seeds = {0};
  view.compression = CompressionConfig{};
  return view;
}

template <typename Scalar>
double lipschitz_for(const Dataset<Scalar>& ds, const Dictionary<Scalar>& dict, const AltMinConfig& cfg) {
  if (cfg.L > 0.0) return cfg.L;
  return estimate_dataset_lipschitz(dict, block_operators(ds), cfg.lipschitz_safety, cfg.threads);
}

}  // namespace detail

// Codes for every example with A held fixed.
template <typename Scalar>
Mat<Scalar> sparse_coding_step(const Dataset<Scalar>& ds, const Dictionary<Scalar>& dict, const FistaParams<Scalar>& fp,
                               AltMinSpace space = AltMinSpace::Compressed, int threads = 1) {
  if (space == AltMinSpace::Raw) return encode_dataset(detail::raw_view(ds), dict, fp, threads);
  return encode_dataset(ds, dict, fp, threads);
}

// sum_j 1/2 ||r_j - Phi_b(j) A x_j||^2 + lambda ||x_j||_1.
template <typename Scalar>
double altmin_objective(const Dataset<Scalar>& ds, const Mat<Scalar>& atoms, const Mat<Scalar>& codes, double lambda,
                        AltMinSpace space = AltMinSpace::Compressed) {
  double fit = 0.0;
  if (space == AltMinSpace::Raw) {
    fit = 0.5 * static_cast<double>((ds.examples - atoms * codes).squaredNorm());
  } else {
    const auto members = ds.block_members();
    for (Index b = 0; b < ds.blocks(); ++b) {
      const auto& idx = members[static_cast<std::size_t>(b)];
      if (idx.empty()) continue;
      const auto phi = ds.block_operator(b);
      const Mat<Scalar> r = detail::gather(ds.compressed, idx);
      fit += 0.5 * static_cast<double>((r - phi.project(atoms * detail::gather(codes, idx))).squaredNorm());
    }
  }
  return fit + lambda * static_cast<double>(codes.template lpNorm<1>());
}

template <typename Scalar>
struct DictionaryUpdateResult {
  Dictionary<Scalar> dictionary;      // normalized
  Mat<Scalar> unnormalized;           // least-squares solution before projection
  std::vector<Index> dead_atoms;      // columns with an all-zero code row, left unchanged
  int cg_iterations = 0;
};

namespace detail {

inline std::vector<Index> active_rows(const auto& codes, std::vector<Index>& dead) {
  std::vector<Index> active;
  for (Index i = 0; i < codes.rows(); ++i) (codes.row(i).cwiseAbs().maxCoeff() > 0 ? active : dead).push_back(i);
  return active;
}

template <typename Scalar>
Mat<Scalar> select_rows(const Mat<Scalar>& m, const std::vector<Index>& rows) {
  Mat<Scalar> out(static_cast<Index>(rows.size()), m.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) out.row(static_cast<Index>(k)) = m.row(rows[k]);
  return out;
}

}  // namespace detail

// min_A sum_j 1/2 ||y_j - A x_j||^2 + damping/2 ||A||^2 by the normal
// equations, then unit-norm columns. Atoms no code uses keep their column.
template <typename Scalar>
DictionaryUpdateResult<Scalar> dictionary_update_step(const Mat<Scalar>& examples, const Mat<Scalar>& codes,
                                                      const Dictionary<Scalar>& previous, double damping = 1e-8) {
  require(examples.cols() == codes.cols(), ErrorKind::Dimension, "examples and codes differ in count");
  require(previous.rows() == examples.rows() && previous.cols() == codes.rows(), ErrorKind::Dimension,
          "previous dictionary does not match data and codes");
  DictionaryUpdateResult<Scalar> out;
  const auto active = detail::active_rows(codes, out.dead_atoms);
  Mat<Scalar> atoms = previous.atoms();
  if (!active.empty()) {
    const Mat<Scalar> x = detail::select_rows(codes, active);
    Mat<Scalar> gram = x * x.transpose();
    gram.diagonal().array() += static_cast<Scalar>(damping);
    const Eigen::LDLT<Mat<Scalar>> ldlt(gram);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || !(ldlt.vectorD().minCoeff() > Scalar(0)))
      throw Error(ErrorKind::Rank, "code Gram matrix is singular even after damping");
    const Mat<Scalar> solved = ldlt.solve(Mat<Scalar>(x * examples.transpose())).transpose();
    for (std::size_t k = 0; k < active.size(); ++k) atoms.col(active[k]) = solved.col(static_cast<Index>(k));
  }
  out.unnormalized = atoms;
  out.dictionary = Dictionary<Scalar>(std::move(atoms));
  out.dictionary.normalize();
  return out;
}

// Compressed variant: min_A sum_b sum_{j in b} 1/2 ||r_j - Phi_b A x_j||^2 +
// damping/2 ||A||^2, solved by conjugate gradients on
// sum_b Phi_b^T Phi_b A (X_b X_b^T) + damping A = sum_b Phi_b^T R_b X_b^T.
template <typename Scalar>
DictionaryUpdateResult<Scalar> dictionary_update_step_compressed(const Dataset<Scalar>& ds, const Mat<Scalar>& codes,
                                                                 const Dictionary<Scalar>& previous,
                                                                 const AltMinConfig& cfg) {
  require(ds.is_compressed(), ErrorKind::Config, "compressed update needs a compressed dataset");
  require(codes.cols() == ds.size() && codes.rows() == previous.cols(), ErrorKind::Dimension, "codes do not match dataset");
  DictionaryUpdateResult<Scalar> out;
  const auto active = detail::active_rows(codes, out.dead_atoms);
  Mat<Scalar> atoms = previous.atoms();
  if (!active.empty()) {
    const auto ops = block_operators(ds);
    const auto members = ds.block_members();
    const Mat<Scalar> x = detail::select_rows(codes, active);
    std::vector<Mat<Scalar>> grams(ops.size());
    Mat<Scalar> rhs = Mat<Scalar>::Zero(ds.dim, static_cast<Index>(active.size()));
    for (std::size_t b = 0; b < ops.size(); ++b) {
      if (members[b].empty()) continue;
      const Mat<Scalar> xb = detail::gather(x, members[b]);
      grams[b] = xb * xb.transpose();
      rhs += ops[b].adjoint(Mat<Scalar>(detail::gather(ds.compressed, members[b]) * xb.transpose()));
    }
    const auto apply = [&](const Mat<Scalar>& a) {
      Mat<Scalar> y = static_cast<Scalar>(cfg.damping) * a;
      for (std::size_t b = 0; b < ops.size(); ++b)
        if (grams[b].size() > 0) y += ops[b].adjoint(Mat<Scalar>(ops[b].project(a) * grams[b]));
      return y;
    };
    Mat<Scalar> a = detail::select_rows(Mat<Scalar>(previous.atoms().transpose()), active).transpose();
    Mat<Scalar> r = rhs - apply(a);
    Mat<Scalar> p = r;
    double rr = static_cast<double>(r.squaredNorm());
    const double stop = cfg.cg_tol * cfg.cg_tol * std::max(1e-300, static_cast<double>(rhs.squaredNorm()));
    int it = 0;
    for (; it < cfg.cg_iters && rr > stop; ++it) {
      const Mat<Scalar> ap = apply(p);
      const double curvature = static_cast<double>((p.array() * ap.array()).sum());
      if (!(curvature > 0.0)) throw Error(ErrorKind::Rank, "compressed normal equations are singular even after damping");
      const auto alpha = static_cast<Scalar>(rr / curvature);
      a += alpha * p;
      r -= alpha * ap;
      const double rr_next = static_cast<double>(r.squaredNorm());
      p = r + static_cast<Scalar>(rr_next / rr) * p;
      rr = rr_next;
    }
    if (!a.allFinite()) throw Error(ErrorKind::Divergence, "non-finite dictionary update");
    out.cg_iterations = it;
    for (std::size_t k = 0; k < active.size(); ++k) atoms.col(active[k]) = a.col(static_cast<Index>(k));
  }
  out.unnormalized = atoms;
  out.dictionary = Dictionary<Scalar>(std::move(atoms));
  out.dictionary.normalize();
  return out;
}

// Per-round objective values; the update minimizes before the normalization
// projection, so after_update <= after_coding while after_normalize may not be.
struct AltMinRound {
  double after_coding = 0.0;
  double after_update = 0.0;
  double after_normalize = 0.0;
  std::size_t dead_atoms = 0;
};

template <typename Scalar>
struct AltMinResult {
  Dictionary<Scalar> dictionary;
  TrainHistory history;  // loss = objective / J after each round
  std::vector<AltMinRound> rounds;
};

template <typename Scalar>
AltMinResult<Scalar> alternating_minimization(const Dataset<Scalar>& ds, const Dictionary<Scalar>& dict0,
                                              const AltMinConfig& cfg) {
  cfg.validate();
  AltMinResult<Scalar> result{dict0, {}, {}};
  const Dataset<Scalar> coded = cfg.space == AltMinSpace::Raw ? detail::raw_view(ds) : ds;
  for (int round = 1; round <= cfg.outer_iters; ++round) {
    const auto start = std::chrono::steady_clock::now();
    const FistaParams<Scalar> fp{static_cast<Scalar>(cfg.lambda), static_cast<Scalar>(detail::lipschitz_for(coded, result.dictionary, cfg)), cfg.T};
    const Mat<Scalar> codes = encode_dataset(coded, result.dictionary, fp, cfg.threads);
    AltMinRound rec;
    rec.after_coding = altmin_objective(ds, result.dictionary.atoms(), codes, cfg.lambda, cfg.space);
    const DictionaryUpdateResult<Scalar> upd = cfg.space == AltMinSpace::Raw
                                                   ? dictionary_update_step(ds.examples, codes, result.dictionary, cfg.damping)
                                                   : dictionary_update_step_compressed(ds, codes, result.dictionary, cfg);
    rec.after_update = altmin_objective(ds, upd.unnormalized, codes, cfg.lambda, cfg.space);
    rec.after_normalize = altmin_objective(ds, upd.dictionary.atoms(), codes, cfg.lambda, cfg.space);
    rec.dead_atoms = upd.dead_atoms.size();
    result.dictionary = upd.dictionary;
    result.rounds.push_back(rec);

    EpochRecord er;
    er.epoch = round;
    er.loss = rec.after_normalize / static_cast<double>(ds.size());
    if (ds.truth) er.err = dict_error(ds.truth->dictionary, result.dictionary);
    er.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.history.epochs.push_back(er);
  }
  return result;
}

}  // namespace randnet

#endif  // RANDNET_BASELINE_HPP
