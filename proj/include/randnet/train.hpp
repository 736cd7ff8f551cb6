#ifndef RANDNET_TRAIN_HPP
#define RANDNET_TRAIN_HPP

#include <algorithm>
#include <chrono>
#include <exception>
#include <iterator>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <thread>
#include <type_traits>
#include <vector>

#include <nlohmann/json.hpp>

#include "randnet/core.hpp"
#include "randnet/data.hpp"
#include "randnet/dictionary.hpp"
#include "randnet/encoder.hpp"
#include "randnet/grad.hpp"
#include "randnet/model.hpp"
#include "randnet/optim.hpp"
#include "randnet/rng.hpp"

namespace randnet {

enum class LipschitzPolicy { Fixed, EstimateOnce, EstimateEachEpoch };

// Example: one permutation of all examples, batches mix blocks.
// Block: blocks visited in shuffled order, examples shuffled within each block,
// so a batch mostly shares one Phi_b.
enum class BatchOrder { Example, Block };

inline LipschitzPolicy parse_lipschitz_policy(const std::string& name) {
  if (name == "fixed") return LipschitzPolicy::Fixed;
  if (name == "estimate" || name == "estimate_once") return LipschitzPolicy::EstimateOnce;
  if (name == "estimate_each_epoch") return LipschitzPolicy::EstimateEachEpoch;
  throw Error(ErrorKind::Config, "unknown Lipschitz policy '" + name + "'");
}

inline BatchOrder parse_batch_order(const std::string& name) {
  if (name == "example") return BatchOrder::Example;
  if (name == "block") return BatchOrder::Block;
  throw Error(ErrorKind::Config, "unknown batch order '" + name + "'");
}

struct TrainConfig {
  std::optional<double> lambda;
  std::optional<double> sigma;  // lambda = sigma * sqrt(2 log p) when lambda is unset
  LipschitzPolicy lipschitz = LipschitzPolicy::EstimateOnce;
  double L = 0.0;               // used when lipschitz == Fixed
  double lipschitz_safety = 1.1;
  int T = 400;
  Index batch_size = 64;
  int epochs = 10;
  AdamConfig adam;
  std::uint64_t seed = 1;
  BatchOrder order = BatchOrder::Example;
  int threads = 1;

  void validate() const {
    require(lambda.has_value() || sigma.has_value(), ErrorKind::Config, "set either lambda or sigma");
    if (lambda) require(*lambda >= 0.0, ErrorKind::Config, "lambda must be >= 0");
    if (sigma) require(*sigma >= 0.0, ErrorKind::Config, "sigma must be >= 0");
    if (lipschitz == LipschitzPolicy::Fixed) require(L > 0.0, ErrorKind::Config, "fixed L must be > 0");
    require(lipschitz_safety >= 1.0, ErrorKind::Config, "Lipschitz safety factor must be >= 1");
    require(T >= 1, ErrorKind::Config, "T must be >= 1");
    require(batch_size >= 1, ErrorKind::Config, "batch size must be >= 1");
    require(epochs >= 0, ErrorKind::Config, "epochs must be >= 0");
    require(threads >= 1, ErrorKind::Config, "threads must be >= 1");
    adam.validate();
  }

  double resolved_lambda(Index p) const {
    if (lambda) return *lambda;
    require(sigma.has_value(), ErrorKind::Config, "set either lambda or sigma");
    return *sigma * std::sqrt(2.0 * std::log(static_cast<double>(p)));
  }
};

struct EpochRecord {
  int epoch = 0;
  double loss = 0.0;
  std::optional<double> err;
  std::optional<double> error_rate;
  double seconds = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;

  void write_csv(std::ostream& out) const {
    out << "epoch,loss,err,error_rate,seconds\n";
    const auto opt = [](const std::optional<double>& v) {
      std::ostringstream s;
      if (v) s << std::setprecision(17) << *v;
      return s.str();
    };
    for (const auto& r : epochs) {
      std::ostringstream row;
      row << std::setprecision(17) << r.epoch << ',' << r.loss << ',' << opt(r.err) << ',' << opt(r.error_rate) << ','
          << std::setprecision(6) << r.seconds;
      out << row.str() << '\n';
    }
  }

  nlohmann::json to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : epochs) {
      nlohmann::json j{{"epoch", r.epoch}, {"loss", r.loss}, {"seconds", r.seconds}};
      j["err"] = r.err ? nlohmann::json(*r.err) : nlohmann::json(nullptr);
      j["error_rate"] = r.error_rate ? nlohmann::json(*r.error_rate) : nlohmann::json(nullptr);
      arr.push_back(std::move(j));
    }
    return arr;
  }
};

// max_i sqrt(1 - <a_i, b_i>^2 / (|a_i|^2 |b_i|^2)), column i against column i.
template <typename Scalar>
double dict_error(const Dictionary<Scalar>& truth, const Dictionary<Scalar>& estimate) {
  require(truth.rows() == estimate.rows() && truth.cols() == estimate.cols(), ErrorKind::Dimension,
          "dictionaries are " + dims(truth.rows(), truth.cols()) + " and " + dims(estimate.rows(), estimate.cols()));
  double worst = 0.0;
  for (Index i = 0; i < truth.cols(); ++i) {
    const double na = static_cast<double>(truth.atoms().col(i).squaredNorm());
    const double nb = static_cast<double>(estimate.atoms().col(i).squaredNorm());
    if (!(na > kMinColumnNorm * kMinColumnNorm) || !(nb > kMinColumnNorm * kMinColumnNorm))
      throw Error(ErrorKind::DegenerateDictionary, "column " + std::to_string(i) + " is zero");
    const double dot = static_cast<double>(truth.atoms().col(i).dot(estimate.atoms().col(i)));
    const double cos2 = std::min(1.0, dot * dot / (na * nb));
    worst = std::max(worst, std::sqrt(1.0 - cos2));
  }
  return worst;
}

// normalize(A + tau Z) with one fixed Gaussian Z; tau found by bisection so
// the result sits within tol of target_err.
template <typename Scalar>
Dictionary<Scalar> perturb_dictionary(const Dictionary<Scalar>& truth, double target_err, std::uint64_t seed,
                                      double tol = 0.02) {
  require(target_err >= 0.0 && target_err < 1.0, ErrorKind::Config, "target error must lie in [0, 1)");
  Xoshiro256 rng(seed);
  const Mat<Scalar> noise = gaussian_matrix<Scalar>(truth.rows(), truth.cols(), Scalar(1) / Scalar(truth.rows()), rng);
  const auto at = [&](double tau) {
    Dictionary<Scalar> d(truth.atoms() + static_cast<Scalar>(tau) * noise);
    d.normalize();
    return d;
  };
  if (target_err == 0.0) return normalize_columns(truth);

  double lo = 0.0;
  double hi = 1.0;
  for (int i = 0; i < 60 && dict_error(truth, at(hi)) < target_err; ++i) hi *= 2.0;
  Dictionary<Scalar> best = at(hi);
  double best_gap = std::abs(dict_error(truth, best) - target_err);
  for (int i = 0; i < 200 && best_gap > tol * 0.05; ++i) {
    const double mid = 0.5 * (lo + hi);
    Dictionary<Scalar> cand = at(mid);
    const double e = dict_error(truth, cand);
    if (std::abs(e - target_err) < best_gap) {
      best_gap = std::abs(e - target_err);
      best = cand;
    }
    (e < target_err ? lo : hi) = mid;
  }
  if (best_gap > tol)
    throw Error(ErrorKind::Divergence, "perturbation bisection ended " + std::to_string(best_gap) + " away from the target");
  return best;
}

namespace detail {

// Runs fn(i) for i in [0, count) on up to `threads` workers; results land in
// index order regardless of scheduling.
template <typename Fn>
void parallel_for(Index count, int threads, Fn&& fn) {
  if (threads <= 1 || count <= 1) {
    for (Index i = 0; i < count; ++i) fn(i);
    return;
  }
  const int workers = static_cast<int>(std::min<Index>(threads, count));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (Index i = w; i < count; i += workers) fn(i);
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

inline std::vector<Index> shuffled(std::vector<Index> v, Xoshiro256& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
  return v;
}

template <typename Scalar>
std::vector<Index> epoch_order(const Dataset<Scalar>& ds, BatchOrder order, std::uint64_t seed, int epoch) {
  Xoshiro256 rng(derive_seed(seed, static_cast<std::uint64_t>(epoch)));
  if (order == BatchOrder::Example) {
    std::vector<Index> all(static_cast<std::size_t>(ds.size()));
    std::iota(all.begin(), all.end(), Index{0});
    return shuffled(std::move(all), rng);
  }
  std::vector<Index> blocks(static_cast<std::size_t>(ds.blocks()));
  std::iota(blocks.begin(), blocks.end(), Index{0});
  const auto members = ds.block_members();
  std::vector<Index> out;
  out.reserve(static_cast<std::size_t>(ds.size()));
  for (Index b : shuffled(std::move(blocks), rng)) {
    const auto inner = shuffled(members[static_cast<std::size_t>(b)], rng);
    out.insert(out.end(), inner.begin(), inner.end());
  }
  return out;
}

// Batch members grouped by block, blocks in ascending order, members in
// batch order within a block.
template <typename Scalar>
std::vector<std::pair<Index, std::vector<Index>>> group_by_block(const Dataset<Scalar>& ds, std::span<const Index> batch) {
  std::vector<std::pair<Index, std::vector<Index>>> groups;
  for (Index j : batch) {
    const Index b = ds.block_of[static_cast<std::size_t>(j)];
    auto it = std::find_if(groups.begin(), groups.end(), [&](const auto& g) { return g.first == b; });
    if (it == groups.end()) {
      groups.push_back({b, {}});
      it = std::prev(groups.end());
    }
    it->second.push_back(j);
  }
  std::sort(groups.begin(), groups.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  return groups;
}

template <typename Scalar>
Mat<Scalar> gather(const Mat<Scalar>& m, std::span<const Index> cols) {
  Mat<Scalar> out(m.rows(), static_cast<Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) out.col(static_cast<Index>(k)) = m.col(cols[k]);
  return out;
}

}  // namespace detail

// Operators for every block, generated once from their seeds.
template <typename Scalar>
std::vector<MeasurementMatrix<Scalar>> block_operators(const Dataset<Scalar>& ds) {
  require(ds.is_compressed(), ErrorKind::Config, "dataset is not compressed");
  std::vector<MeasurementMatrix<Scalar>> ops;
  ops.reserve(static_cast<std::size_t>(ds.blocks()));
  for (Index b = 0; b < ds.blocks(); ++b) ops.push_back(ds.block_operator(b));
  return ops;
}

// safety * max_b lambda_max(A^T Phi_b^T Phi_b A).
template <typename Scalar>
double estimate_dataset_lipschitz(const Dictionary<Scalar>& dict, const std::vector<MeasurementMatrix<Scalar>>& ops,
                                  double safety, int threads = 1) {
  std::vector<double> per_block(ops.size(), 0.0);
  PowerIterationOptions opt;
  opt.safety = safety;
  detail::parallel_for(static_cast<Index>(ops.size()), threads, [&](Index b) {
    const ProjectedDictionary<Scalar> proj(dict, ops[static_cast<std::size_t>(b)]);
    Mat<Scalar> gram = proj.use_gram ? proj.gram : Mat<Scalar>(proj.d.transpose() * proj.d);
    per_block[static_cast<std::size_t>(b)] = estimate_lipschitz_gram(gram, opt).value;
  });
  return *std::max_element(per_block.begin(), per_block.end());
}

template <typename Scalar>
struct UnsupervisedResult {
  Dictionary<Scalar> dictionary;
  TrainHistory history;
  double L = 0.0;
  double lambda = 0.0;
  bool diverged = false;
  std::string message;
};

template <typename Scalar>
struct TrainHooks {
  // after each completed epoch, with that epoch's dictionary
  std::function<void(const EpochRecord&, const Dictionary<Scalar>&)> on_epoch;
  // after each ADAM step and renormalization
  std::function<void(long step, const Mat<Scalar>& atoms)> on_step;
};

// Mean 1/2 ||r - Phi_b A x_T||^2 over the given examples (all when empty).
template <typename Scalar>
double mean_reconstruction_loss(const Dataset<Scalar>& ds, const Dictionary<Scalar>& dict,
                                const FistaParams<Scalar>& params, std::vector<Index> subset = {}, int threads = 1) {
  if (subset.empty()) {
    subset.resize(static_cast<std::size_t>(ds.size()));
    std::iota(subset.begin(), subset.end(), Index{0});
  }
  const auto groups = detail::group_by_block(ds, subset);
  std::vector<double> losses(groups.size(), 0.0);
  detail::parallel_for(static_cast<Index>(groups.size()), threads, [&](Index g) {
    const auto& [b, members] = groups[static_cast<std::size_t>(g)];
    const ProjectedDictionary<Scalar> proj(dict, ds.block_operator(b));
    const Mat<Scalar> r = detail::gather(ds.compressed, members);
    const Mat<Scalar> code = fista_encode_projected(r, proj, params).code;
    losses[static_cast<std::size_t>(g)] = static_cast<double>(Scalar(0.5) * (r - proj.d * code).squaredNorm());
  });
  return std::accumulate(losses.begin(), losses.end(), 0.0) / static_cast<double>(subset.size());
}

// Mini-batch ADAM on L_A with unit-norm projection after every step.
template <typename Scalar>
UnsupervisedResult<Scalar> train_unsupervised(const Dataset<Scalar>& ds, const Dictionary<Scalar>& dict0,
                                              const TrainConfig& cfg,
                                              const std::type_identity_t<TrainHooks<Scalar>>& hooks = {}) {
  cfg.validate();
  require(ds.is_compressed(), ErrorKind::Config, "train_unsupervised needs a compressed dataset");
  require(dict0.rows() == ds.dim, ErrorKind::Dimension,
          "dictionary has " + std::to_string(dict0.rows()) + " rows, data has N=" + std::to_string(ds.dim));
  require(dict0.max_norm_deviation() <= Scalar(1e-6), ErrorKind::Config, "initial dictionary must have unit-norm columns");

  const auto ops = block_operators(ds);
  UnsupervisedResult<Scalar> result;
  result.dictionary = dict0;
  result.lambda = cfg.resolved_lambda(dict0.cols());
  result.L = cfg.lipschitz == LipschitzPolicy::Fixed ? cfg.L
                                                    : estimate_dataset_lipschitz(dict0, ops, cfg.lipschitz_safety, cfg.threads);
  if (cfg.epochs == 0) return result;

  const Index p = dict0.cols();
  Mat<Scalar> atoms = dict0.atoms();
  AdamState<Mat<Scalar>> adam;
  Dictionary<Scalar> checkpoint = dict0;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    if (cfg.lipschitz == LipschitzPolicy::EstimateEachEpoch && epoch > 1)
      result.L = estimate_dataset_lipschitz(checkpoint, ops, cfg.lipschitz_safety, cfg.threads);
    FistaParams<Scalar> params{static_cast<Scalar>(result.lambda), static_cast<Scalar>(result.L), cfg.T};

    const auto order = detail::epoch_order(ds, cfg.order, cfg.seed, epoch);
    double epoch_loss = 0.0;
    std::string failure;
    for (std::size_t begin = 0; begin < order.size() && failure.empty(); begin += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), begin + static_cast<std::size_t>(cfg.batch_size));
      const auto groups = detail::group_by_block(ds, std::span<const Index>(order).subspan(begin, end - begin));
      const Dictionary<Scalar> current(atoms);
      std::vector<Mat<Scalar>> grads(groups.size());
      std::vector<double> losses(groups.size(), 0.0);
      try {
        detail::parallel_for(static_cast<Index>(groups.size()), cfg.threads, [&](Index g) {
          const auto& [b, members] = groups[static_cast<std::size_t>(g)];
          const auto& phi = ops[static_cast<std::size_t>(b)];
          const ProjectedDictionary<Scalar> proj(current, phi);
          const Mat<Scalar> r = detail::gather(ds.compressed, members);
          const EncodeResult<Scalar> enc = fista_encode_projected(r, proj, params, true);
          const ProjectedGradient<Scalar> pg = backprop_projected(*enc.trace, r, proj);
          grads[static_cast<std::size_t>(g)] = phi.adjoint(pg.delta_d);
          losses[static_cast<std::size_t>(g)] = static_cast<double>(pg.loss);
        });
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::Divergence) throw;
        failure = e.what();
        break;
      }
      Mat<Scalar> grad = Mat<Scalar>::Zero(ds.dim, p);
      double batch_loss = 0.0;
      for (std::size_t g = 0; g < groups.size(); ++g) {
        grad += grads[g];
        batch_loss += losses[g];
      }
      if (!std::isfinite(batch_loss) || !grad.allFinite()) {
        failure = "non-finite loss or gradient in epoch " + std::to_string(epoch);
        break;
      }
      epoch_loss += batch_loss;
      adam_step(atoms, grad, adam, cfg.adam);
      Dictionary<Scalar> stepped(atoms);
      try {
        stepped.normalize();
      } catch (const Error&) {
        failure = "dictionary column collapsed in epoch " + std::to_string(epoch);
        break;
      }
      atoms = std::move(stepped.atoms());
      if (hooks.on_step) hooks.on_step(adam.step, atoms);
    }
    if (!failure.empty()) {
      result.dictionary = checkpoint;
      result.diverged = true;
      result.message = failure;
      return result;
    }

    checkpoint = Dictionary<Scalar>(atoms);
    EpochRecord rec;
    rec.epoch = epoch;
    rec.loss = epoch_loss / static_cast<double>(order.size());
    if (ds.truth) rec.err = dict_error(ds.truth->dictionary, checkpoint);
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.history.epochs.push_back(rec);
    if (hooks.on_epoch) hooks.on_epoch(rec, checkpoint);
  }
  result.dictionary = checkpoint;
  return result;
}

// x_T for every example (p x J), A held fixed.
template <typename Scalar>
Mat<Scalar> encode_dataset(const Dataset<Scalar>& ds, const Dictionary<Scalar>& dict, const FistaParams<Scalar>& params,
                           int threads = 1, Index chunk = 256) {
  require(ds.is_compressed(), ErrorKind::Config, "encode_dataset needs a compressed dataset");
  const auto members = ds.block_members();
  Mat<Scalar> codes(dict.cols(), ds.size());
  detail::parallel_for(ds.blocks(), threads, [&](Index b) {
    const auto& idx = members[static_cast<std::size_t>(b)];
    const ProjectedDictionary<Scalar> proj(dict, ds.block_operator(b));
    for (std::size_t k = 0; k < idx.size(); k += static_cast<std::size_t>(chunk)) {
      const auto part = std::span<const Index>(idx).subspan(k, std::min(idx.size() - k, static_cast<std::size_t>(chunk)));
      const Mat<Scalar> code = fista_encode_projected(detail::gather(ds.compressed, part), proj, params).code;
      for (std::size_t q = 0; q < part.size(); ++q) codes.col(part[q]) = code.col(static_cast<Index>(q));
    }
  });
  return codes;
}

// Fraction of columns whose argmax prediction differs from the label.
template <typename Scalar>
double classification_error(const Mat<Scalar>& codes, std::span<const int> labels, const ClassifierParams<Scalar>& params) {
  require(static_cast<Index>(labels.size()) == codes.cols(), ErrorKind::Dimension, "label count does not match code count");
  if (codes.cols() == 0) return 0.0;
  const Mat<Scalar> probs = classify(codes, params);
  Index wrong = 0;
  for (Index j = 0; j < codes.cols(); ++j)
    if (argmax(probs.col(j)) != labels[static_cast<std::size_t>(j)]) ++wrong;
  return static_cast<double>(wrong) / static_cast<double>(codes.cols());
}

template <typename Scalar>
struct ClassifierResult {
  ClassifierParams<Scalar> params;
  TrainHistory history;
};

// ADAM on C and d over precomputed codes; error_rate is the training error
// at the end of each epoch.
template <typename Scalar>
ClassifierResult<Scalar> train_classifier_on_codes(const Mat<Scalar>& codes, std::span<const int> labels,
                                                   const ClassifierParams<Scalar>& params0, const TrainConfig& cfg) {
  require(static_cast<Index>(labels.size()) == codes.cols(), ErrorKind::Dimension, "label count does not match code count");
  require(cfg.batch_size >= 1 && cfg.epochs >= 0, ErrorKind::Config, "invalid batch size or epoch count");
  cfg.adam.validate();
  ClassifierResult<Scalar> result{params0, {}};
  AdamState<Mat<Scalar>> adam_c;
  AdamState<Vec<Scalar>> adam_d;
  std::vector<Index> all(static_cast<std::size_t>(codes.cols()));
  std::iota(all.begin(), all.end(), Index{0});
  std::vector<int> batch_labels;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    Xoshiro256 rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(epoch)));
    const auto order = detail::shuffled(all, rng);
    double loss = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), begin + static_cast<std::size_t>(cfg.batch_size));
      const auto batch = std::span<const Index>(order).subspan(begin, end - begin);
      batch_labels.clear();
      for (Index j : batch) batch_labels.push_back(labels[static_cast<std::size_t>(j)]);
      const GradientBundle<Scalar> g = backprop_classifier(detail::gather(codes, batch), batch_labels, result.params);
      if (!g.all_finite()) throw Error(ErrorKind::Divergence, "non-finite classifier gradient in epoch " + std::to_string(epoch));
      loss += static_cast<double>(g.loss_value);
      adam_step(result.params.weights, g.delta_c, adam_c, cfg.adam);
      adam_step(result.params.bias, g.delta_d, adam_d, cfg.adam);
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.loss = order.empty() ? 0.0 : loss / static_cast<double>(order.size());
    rec.error_rate = classification_error(codes, labels, result.params);
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.history.epochs.push_back(rec);
  }
  return result;
}

// Supervised stage: A frozen, so each example's code is computed once.
template <typename Scalar>
ClassifierResult<Scalar> train_classifier(const Dataset<Scalar>& ds, const Dictionary<Scalar>& dict,
                                          const ClassifierParams<Scalar>& params0, const TrainConfig& cfg, double L) {
  cfg.validate();
  require(ds.labeled(), ErrorKind::Config, "train_classifier needs labels");
  require(params0.code_dim() == dict.cols(), ErrorKind::Dimension, "classifier p does not match dictionary p");
  if (cfg.epochs == 0) return {params0, {}};
  const FistaParams<Scalar> fp{static_cast<Scalar>(cfg.resolved_lambda(dict.cols())), static_cast<Scalar>(L), cfg.T};
  return train_classifier_on_codes(encode_dataset(ds, dict, fp, cfg.threads), ds.labels, params0, cfg);
}

template <typename Scalar>
double eval_classification(const Dataset<Scalar>& ds, const Dictionary<Scalar>& dict, const ClassifierParams<Scalar>& params,
                           const FistaParams<Scalar>& fp, int threads = 1) {
  require(ds.labeled(), ErrorKind::Config, "eval_classification needs labels");
  return classification_error(encode_dataset(ds, dict, fp, threads), ds.labels, params);
}

template <typename Scalar>
void save_classifier(const std::string& weights_path, const std::string& bias_path, const ClassifierParams<Scalar>& params) {
  write_matrix<Scalar>(weights_path, params.weights);
  write_matrix<Scalar>(bias_path, Mat<Scalar>(params.bias));
}

template <typename Scalar>
ClassifierParams<Scalar> load_classifier(const std::string& weights_path, const std::string& bias_path) {
  ClassifierParams<Scalar> params;
  params.weights = read_matrix<Scalar>(weights_path);
  const Mat<Scalar> bias = read_matrix<Scalar>(bias_path);
  require(bias.cols() == 1 && bias.rows() == params.weights.rows(), ErrorKind::Consistency,
          "bias " + dims(bias.rows(), bias.cols()) + " does not fit weights " + dims(params.weights.rows(), params.weights.cols()));
  params.bias = bias.col(0);
  return params;
}

}  // namespace randnet

#endif  // RANDNET_TRAIN_HPP
