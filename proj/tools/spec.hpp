#ifndef RANDNET_TOOLS_SPEC_HPP
#define RANDNET_TOOLS_SPEC_HPP

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <initializer_list>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "randnet/randnet.hpp"

namespace randnet::cli {

using nlohmann::json;

// Strict view of one JSON object: unknown keys are rejected up front and
// type mismatches become config errors naming the offending key.
class Fields {
 public:
  Fields(const json& j, std::string where, std::initializer_list<const char*> allowed) : j_(j), where_(std::move(where)) {
    require(j.is_object(), ErrorKind::Config, where_ + " must be a JSON object");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& item : j.items())
      require(ok.count(item.key()) > 0, ErrorKind::Config, "unknown key '" + item.key() + "' in " + where_);
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  template <typename T>
  T get(const std::string& key, T fallback) const {
    return has(key) ? convert<T>(key) : fallback;
  }

  template <typename T>
  std::optional<T> opt(const std::string& key) const {
    if (!has(key) || j_.at(key).is_null()) return std::nullopt;
    return convert<T>(key);
  }

  template <typename T>
  T need(const std::string& key) const {
    require(has(key), ErrorKind::Config, "missing required key '" + key + "' in " + where_);
    return convert<T>(key);
  }

  const json& at(const std::string& key) const { return j_.at(key); }
  std::string path(const std::string& key) const { return where_ + "." + key; }

 private:
  template <typename T>
  T convert(const std::string& key) const {
    try {
      return j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw Error(ErrorKind::Config, "key '" + key + "' in " + where_ + " has the wrong type");
    }
  }

  const json& j_;
  std::string where_;
};

struct DatasetSpec {
  std::string source = "simulate";
  SimConfig sim;
  Index train_count = 4000;  // simulate: leading examples used for training, rest held out
  std::string dir;
  Index mnist_train = 60000;
  Index mnist_test = 10000;
  PixelScaling scaling = PixelScaling::UnitInterval;
};

struct MeasurementSpec {
  MeasurementKind kind = MeasurementKind::Identity;
  std::optional<double> beta;
  std::optional<Index> rows;
  Index sparsity = 1;
  Index blocks = 1;
  std::optional<Index> test_blocks;
  std::uint64_t master_seed = 1;
  std::optional<std::uint64_t> test_master_seed;
  GaussianScale gaussian_scale = GaussianScale::InvRows;

  Index resolved_rows(Index n) const {
    if (kind == MeasurementKind::Identity) return n;
    if (rows) return *rows;
    require(beta.has_value(), ErrorKind::Config, "measurement needs 'beta' or 'M'");
    return std::max<Index>(1, static_cast<Index>(std::lround(*beta * static_cast<double>(n))));
  }

  CompressionConfig train_config(Index n) const {
    return {kind, resolved_rows(n), sparsity, blocks, master_seed, gaussian_scale};
  }

  // Held-out data gets its own freshly seeded operators; by default the
  // examples-per-block ratio of the training split is kept.
  CompressionConfig test_config(Index n, Index count, Index train_count) const {
    const Index b = std::min(count, test_blocks.value_or(std::max<Index>(1, blocks * count / std::max<Index>(1, train_count))));
    return {kind, resolved_rows(n), sparsity, std::max<Index>(1, b), test_master_seed.value_or(derive_seed(master_seed, 0x7E57ULL)),
            gaussian_scale};
  }
};

struct InitSpec {
  std::string kind = "random";  // random | perturb
  double target_err = 0.5;
  std::uint64_t seed = 1;
};

struct SweepSpec {
  std::vector<double> lambdas{0.5, 1.0, 1.5, 2.0, 2.2, 3.0, 4.0};
  std::optional<int> unsup_epochs;
  std::optional<int> sup_epochs;
};

struct BaselineSpec {
  int outer_iters = 10;
  AltMinSpace space = AltMinSpace::Compressed;
  std::optional<int> T;
};

struct ExperimentSpec {
  json raw;
  DatasetSpec data;
  MeasurementSpec measurement;
  TrainConfig train;
  TrainConfig classifier;
  InitSpec init;
  SweepSpec sweep;
  BaselineSpec baseline;
  std::string stage = "both";
  std::string precision = "double";
  std::string output;
};

inline void parse_adam(const json& j, const std::string& where, AdamConfig& adam) {
  const Fields f(j, where, {"beta1", "beta2", "eps"});
  adam.beta1 = f.get("beta1", adam.beta1);
  adam.beta2 = f.get("beta2", adam.beta2);
  adam.eps = f.get("eps", adam.eps);
}

inline void parse_train(const json& j, const std::string& where, TrainConfig& cfg, bool classifier) {
  const Fields f = classifier ? Fields(j, where, {"batch_size", "learning_rate", "epochs", "adam", "seed"})
                              : Fields(j, where,
                                       {"lambda", "sigma", "L", "lipschitz_safety", "T", "batch_size", "learning_rate", "epochs",
                                        "adam", "seed", "batch_order"});
  if (!classifier) {
    cfg.lambda = f.opt<double>("lambda");
    cfg.sigma = f.opt<double>("sigma");
    if (f.has("L")) {
      if (f.at("L").is_number()) {
        cfg.lipschitz = LipschitzPolicy::Fixed;
        cfg.L = f.need<double>("L");
      } else {
        cfg.lipschitz = parse_lipschitz_policy(f.need<std::string>("L"));
      }
    }
    cfg.lipschitz_safety = f.get("lipschitz_safety", cfg.lipschitz_safety);
    cfg.T = f.get("T", cfg.T);
    if (f.has("batch_order")) cfg.order = parse_batch_order(f.need<std::string>("batch_order"));
  }
  cfg.batch_size = f.get("batch_size", cfg.batch_size);
  cfg.adam.learning_rate = f.get("learning_rate", cfg.adam.learning_rate);
  cfg.epochs = f.get("epochs", cfg.epochs);
  cfg.seed = f.get("seed", cfg.seed);
  if (f.has("adam")) parse_adam(f.at("adam"), f.path("adam"), cfg.adam);
}

inline std::string default_data_dir() {
  const char* env = std::getenv("RANDNET_DATA_DIR");
  return env ? std::string(env) : std::string();
}

// Validates the whole document before anything is computed.
inline ExperimentSpec parse_spec(const json& j) {
  ExperimentSpec spec;
  spec.raw = j;
  const Fields top(j, "spec", {"dataset", "measurement", "train", "classifier", "init", "sweep", "baseline", "stage", "precision", "output"});

  require(top.has("dataset"), ErrorKind::Config, "missing required key 'dataset' in spec");
  const Fields ds(top.at("dataset"), "dataset",
                  {"source", "N", "p", "J", "k", "amplitude_low", "amplitude_high", "noise_sigma", "seed", "train", "test", "dir",
                   "scaling"});
  spec.data.source = ds.get<std::string>("source", "simulate");
  if (spec.data.source == "simulate") {
    for (const char* key : {"dir", "test", "scaling"})
      require(!ds.has(key), ErrorKind::Config, std::string("key '") + key + "' does not apply to simulated data");
    auto& s = spec.data.sim;
    s.n = ds.get("N", s.n);
    s.p = ds.get("p", s.p);
    s.count = ds.get("J", s.count);
    s.sparsity = ds.get("k", s.sparsity);
    s.amplitude_low = ds.get("amplitude_low", s.amplitude_low);
    s.amplitude_high = ds.get("amplitude_high", s.amplitude_high);
    s.noise_sigma = ds.get("noise_sigma", s.noise_sigma);
    s.seed = ds.get("seed", s.seed);
    s.validate();
    spec.data.train_count = ds.get("train", std::min<Index>(spec.data.train_count, s.count));
    require(spec.data.train_count >= 1 && spec.data.train_count <= s.count, ErrorKind::Config,
            "dataset.train must lie in 1..J");
  } else if (spec.data.source == "mnist") {
    for (const char* key : {"N", "p", "J", "k", "amplitude_low", "amplitude_high", "noise_sigma", "seed"})
      require(!ds.has(key), ErrorKind::Config, std::string("key '") + key + "' does not apply to MNIST");
    spec.data.dir = ds.get("dir", default_data_dir());
    spec.data.mnist_train = ds.get("train", spec.data.mnist_train);
    spec.data.mnist_test = ds.get("test", spec.data.mnist_test);
    spec.data.scaling = parse_pixel_scaling(ds.get<std::string>("scaling", "unit"));
    require(spec.data.mnist_train >= 1 && spec.data.mnist_test >= 0, ErrorKind::Config, "invalid MNIST split sizes");
  } else {
    throw Error(ErrorKind::Config, "dataset.source must be 'simulate' or 'mnist'");
  }

  if (top.has("measurement")) {
    const Fields m(top.at("measurement"), "measurement",
                   {"kind", "beta", "M", "s", "B", "test_B", "master_seed", "test_master_seed", "gaussian_variance"});
    auto& ms = spec.measurement;
    ms.kind = parse_measurement_kind(m.get<std::string>("kind", "identity"));
    ms.beta = m.opt<double>("beta");
    ms.rows = m.opt<Index>("M");
    require(!(ms.beta && ms.rows), ErrorKind::Config, "set only one of measurement.beta and measurement.M");
    if (ms.beta) require(*ms.beta > 0.0 && *ms.beta <= 1.0, ErrorKind::Config, "measurement.beta must lie in (0, 1]");
    ms.sparsity = m.get("s", ms.sparsity);
    ms.blocks = m.get("B", ms.blocks);
    ms.test_blocks = m.opt<Index>("test_B");
    ms.master_seed = m.get("master_seed", ms.master_seed);
    ms.test_master_seed = m.opt<std::uint64_t>("test_master_seed");
    ms.gaussian_scale = parse_gaussian_scale(m.get<std::string>("gaussian_variance", "inv_rows"));
    require(ms.kind == MeasurementKind::Identity || ms.beta || ms.rows, ErrorKind::Config, "measurement needs 'beta' or 'M'");
    require(ms.blocks >= 1, ErrorKind::Config, "measurement.B must be >= 1");
  }

  if (top.has("train")) parse_train(top.at("train"), "train", spec.train, false);
  spec.classifier = spec.train;
  spec.classifier.epochs = spec.train.epochs;
  if (top.has("classifier")) parse_train(top.at("classifier"), "classifier", spec.classifier, true);

  if (top.has("init")) {
    const Fields f(top.at("init"), "init", {"kind", "target_err", "seed"});
    spec.init.kind = f.get<std::string>("kind", spec.init.kind);
    spec.init.target_err = f.get("target_err", spec.init.target_err);
    spec.init.seed = f.get("seed", spec.init.seed);
    require(spec.init.kind == "random" || spec.init.kind == "perturb", ErrorKind::Config, "init.kind must be 'random' or 'perturb'");
    require(spec.init.kind != "perturb" || spec.data.source == "simulate", ErrorKind::Config,
            "init.kind 'perturb' needs a ground-truth dictionary (simulated data)");
  }
  if (top.has("sweep")) {
    const Fields f(top.at("sweep"), "sweep", {"lambdas", "unsup_epochs", "sup_epochs"});
    spec.sweep.lambdas = f.get("lambdas", spec.sweep.lambdas);
    spec.sweep.unsup_epochs = f.opt<int>("unsup_epochs");
    spec.sweep.sup_epochs = f.opt<int>("sup_epochs");
    require(!spec.sweep.lambdas.empty(), ErrorKind::Config, "sweep.lambdas must not be empty");
  }
  if (top.has("baseline")) {
    const Fields f(top.at("baseline"), "baseline", {"outer_iters", "space", "T"});
    spec.baseline.outer_iters = f.get("outer_iters", spec.baseline.outer_iters);
    const auto space = f.get<std::string>("space", "compressed");
    require(space == "raw" || space == "compressed", ErrorKind::Config, "baseline.space must be 'raw' or 'compressed'");
    spec.baseline.space = space == "raw" ? AltMinSpace::Raw : AltMinSpace::Compressed;
    spec.baseline.T = f.opt<int>("T");
  }
  spec.stage = top.get<std::string>("stage", spec.stage);
  require(spec.stage == "unsup" || spec.stage == "sup" || spec.stage == "both", ErrorKind::Config,
          "stage must be 'unsup', 'sup' or 'both'");
  spec.precision = top.get<std::string>("precision", spec.precision);
  require(spec.precision == "double" || spec.precision == "float", ErrorKind::Config, "precision must be 'double' or 'float'");
  spec.output = top.get<std::string>("output", spec.output);

  if (top.has("train")) spec.train.validate();
  return spec;
}

}  // namespace randnet::cli

#endif  // RANDNET_TOOLS_SPEC_HPP
