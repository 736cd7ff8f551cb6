#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "randnet/randnet.hpp"
#include "checks.hpp"
#include "spec.hpp"

namespace fs = std::filesystem;
using namespace randnet;
using namespace randnet::cli;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kDivergence = 2, kIo = 3, kCheckFailed = 4 };

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Divergence: return kDivergence;
    case ErrorKind::Io:
    case ErrorKind::Length:
    case ErrorKind::Format: return kIo;
    default: return kUsage;
  }
}

struct Common {
  std::string spec_path;
  std::string out;
  int threads = 1;
  std::optional<std::uint64_t> seed;
};

struct Context {
  ExperimentSpec spec;
  std::string hash;
  fs::path out;
};

Context load_context(const Common& common, bool need_train) {
  Context ctx;
  ctx.spec = parse_spec(read_json(common.spec_path));
  ctx.hash = spec_hash(ctx.spec.raw);
  if (need_train) ctx.spec.train.validate();
  ctx.spec.train.threads = common.threads;
  ctx.spec.classifier.threads = common.threads;
  if (common.seed) {
    ctx.spec.train.seed = *common.seed;
    ctx.spec.classifier.seed = *common.seed;
  }
  const std::string out = !common.out.empty() ? common.out : ctx.spec.output;
  require(!out.empty(), ErrorKind::Config, "no output directory: pass --out or set 'output' in the spec");
  ctx.out = out;
  std::error_code ec;
  fs::create_directories(ctx.out, ec);
  require(!ec, ErrorKind::Io, "cannot create '" + out + "': " + ec.message());
  return ctx;
}

template <typename Scalar>
struct Data {
  Dataset<Scalar> train;
  Dataset<Scalar> test;
  std::optional<Dictionary<Scalar>> truth;
};

template <typename Scalar>
Data<Scalar> load_data(const ExperimentSpec& spec) {
  Data<Scalar> d;
  Dataset<Scalar> raw_train;
  Dataset<Scalar> raw_test;
  if (spec.data.source == "simulate") {
    auto [all, truth] = simulate<Scalar>(spec.data.sim);
    d.truth = truth;
    raw_train = take_range(all, 0, spec.data.train_count);
    if (spec.data.train_count < all.size()) raw_test = take_range(all, spec.data.train_count, all.size() - spec.data.train_count);
  } else {
    require(!spec.data.dir.empty(), ErrorKind::Config, "MNIST needs dataset.dir or RANDNET_DATA_DIR");
    const fs::path dir = spec.data.dir;
    raw_train = load_mnist_idx<Scalar>((dir / "train-images-idx3-ubyte").string(), (dir / "train-labels-idx1-ubyte").string(),
                                       spec.data.scaling, spec.data.mnist_train);
    if (spec.data.mnist_test > 0)
      raw_test = load_mnist_idx<Scalar>((dir / "t10k-images-idx3-ubyte").string(), (dir / "t10k-labels-idx1-ubyte").string(),
                                        spec.data.scaling, spec.data.mnist_test);
  }
  const Index n = raw_train.dim;
  d.train = partition_and_compress(raw_train, spec.measurement.train_config(n), spec.data.source == "simulate");
  if (raw_test.size() > 0 && raw_test.examples.cols() > 0)
    d.test = partition_and_compress(raw_test, spec.measurement.test_config(n, raw_test.size(), raw_train.size()),
                                    spec.data.source == "simulate");
  return d;
}

void write_history(const Context& ctx, const std::string& stem, const TrainHistory& h) {
  write_csv((ctx.out / (stem + ".csv")).string(), ctx.hash, [&](std::ostream& os) { h.write_csv(os); });
  write_json((ctx.out / (stem + ".json")).string(), h.to_json());
}

// ---- simulate --------------------------------------------------------------

template <typename Scalar>
int cmd_simulate(const Context& ctx) {
  const auto& spec = ctx.spec;
  require(spec.data.source == "simulate", ErrorKind::Config, "simulate needs dataset.source = 'simulate'");
  auto [all, truth] = simulate<Scalar>(spec.data.sim);
  const Dataset<Scalar> ds = partition_and_compress(all, spec.measurement.train_config(all.dim));
  write_matrix<Scalar>((ctx.out / "examples.bin").string(), ds.examples);
  write_matrix<Scalar>((ctx.out / "compressed.bin").string(), ds.compressed);
  write_matrix<Scalar>((ctx.out / "codes.bin").string(), ds.truth->codes);
  save_dictionary((ctx.out / "dictionary_true.bin").string(), truth);

  json manifest = dataset_manifest(ds);
  manifest["spec_hash"] = ctx.hash;
  manifest["p"] = spec.data.sim.p;
  manifest["k"] = spec.data.sim.sparsity;
  manifest["train"] = spec.data.train_count;
  json blocks = json::array();
  for (Index b = 0; b < ds.blocks(); ++b) blocks.push_back(to_json(ds.block_descriptor(b)));
  manifest["blocks"] = blocks;
  json files = json::object();
  for (const char* f : {"examples.bin", "compressed.bin", "codes.bin", "dictionary_true.bin"}) files[f] = hash_file((ctx.out / f).string());
  manifest["files"] = files;
  write_json((ctx.out / "manifest.json").string(), manifest);
  std::cout << "simulated J=" << ds.size() << " N=" << ds.dim << " M=" << ds.measurements() << " B=" << ds.blocks() << " -> "
            << ctx.out.string() << '\n';
  return kOk;
}

// ---- train -----------------------------------------------------------------

template <typename Scalar>
Dictionary<Scalar> initial_dictionary(const ExperimentSpec& spec, const Data<Scalar>& data) {
  if (spec.init.kind == "perturb") return perturb_dictionary(*data.truth, spec.init.target_err, spec.init.seed);
  const Index p = spec.data.source == "simulate" ? spec.data.sim.p : data.train.dim;
  return Dictionary<Scalar>::random(data.train.dim, p, spec.init.seed);
}

struct ModelInfo {
  double lambda = 0.0;
  double L = 0.0;
  int T = 1;
};

void write_model(const Context& ctx, const ModelInfo& m, Index n, Index p) {
  write_json((ctx.out / "model.json").string(),
             json{{"lambda", m.lambda}, {"L", m.L}, {"T", m.T}, {"N", n}, {"p", p}, {"spec_hash", ctx.hash}});
}

ModelInfo read_model(const fs::path& dir) {
  const fs::path path = dir / "model.json";
  require(fs::exists(path) && fs::exists(dir / "dictionary.bin"), ErrorKind::Dependency,
          "no unsupervised checkpoint in '" + dir.string() + "' (run stage 'unsup' first)");
  const json j = read_json(path.string());
  return {j.at("lambda").get<double>(), j.at("L").get<double>(), j.at("T").get<int>()};
}

template <typename Scalar>
struct UnsupOutcome {
  Dictionary<Scalar> dictionary;
  ModelInfo model;
  bool diverged = false;
};

template <typename Scalar>
UnsupOutcome<Scalar> run_unsup(const Context& ctx, const Data<Scalar>& data, const TrainConfig& cfg, const std::string& stem,
                               bool verbose) {
  TrainHooks<Scalar> hooks;
  const std::string checkpoint = (ctx.out / (stem + "_checkpoint.bin")).string();
  hooks.on_epoch = [&](const EpochRecord& r, const Dictionary<Scalar>& d) {
    save_dictionary(checkpoint, d);
    if (verbose) {
      std::cout << "unsup epoch " << r.epoch << " loss " << r.loss;
      if (r.err) std::cout << " err " << *r.err;
      std::cout << " (" << r.seconds << " s)" << std::endl;
    }
  };
  auto res = train_unsupervised(data.train, initial_dictionary(ctx.spec, data), cfg, hooks);
  write_history(ctx, "history_" + stem, res.history);
  if (res.diverged) {
    save_dictionary(checkpoint, res.dictionary);
    std::cerr << "numerical divergence: " << res.message << "; last good dictionary in " << checkpoint << '\n';
  }
  return {res.dictionary, {res.lambda, res.L, cfg.T}, res.diverged};
}

template <typename Scalar>
double run_sup(const Context& ctx, const Data<Scalar>& data, const Dictionary<Scalar>& dict, const ModelInfo& model,
               TrainConfig cfg, const std::string& stem, bool save, bool verbose, json& metrics) {
  require(data.train.labeled(), ErrorKind::Config, "the supervised stage needs labeled data");
  cfg.lambda = model.lambda;
  cfg.T = model.T;
  const FistaParams<Scalar> fp{static_cast<Scalar>(model.lambda), static_cast<Scalar>(model.L), model.T};
  const Mat<Scalar> codes = encode_dataset(data.train, dict, fp, cfg.threads);
  const auto params0 = ClassifierParams<Scalar>::uniform_init(data.train.classes, dict.cols(), derive_seed(cfg.seed, 0xC1A5ULL));
  const auto res = train_classifier_on_codes(codes, data.train.labels, params0, cfg);
  if (verbose)
    for (const auto& r : res.history.epochs)
      std::cout << "sup epoch " << r.epoch << " loss " << r.loss << " train error " << 100.0 * *r.error_rate << "%" << std::endl;
  write_history(ctx, "history_" + stem, res.history);
  if (save) save_classifier((ctx.out / "classifier_C.bin").string(), (ctx.out / "classifier_d.bin").string(), res.params);
  metrics["train_error_pct"] = res.history.epochs.empty() ? json(nullptr) : json(100.0 * *res.history.epochs.back().error_rate);
  double test_error = -1.0;
  if (data.test.size() > 0) {
    test_error = eval_classification(data.test, dict, res.params, fp, cfg.threads);
    metrics["test_error_pct"] = 100.0 * test_error;
  }
  return test_error;
}

template <typename Scalar>
int cmd_train(const Context& ctx) {
  const auto& spec = ctx.spec;
  const Data<Scalar> data = load_data<Scalar>(spec);
  json metrics{{"spec_hash", ctx.hash}};
  Dictionary<Scalar> dict;
  ModelInfo model;
  if (spec.stage == "sup") {
    model = read_model(ctx.out);
    dict = load_dictionary<Scalar>((ctx.out / "dictionary.bin").string());
    require(dict.rows() == data.train.dim, ErrorKind::Consistency, "checkpoint dictionary does not match the data dimension");
  } else {
    auto un = run_unsup<Scalar>(ctx, data, spec.train, "unsup", true);
    if (un.diverged) return kDivergence;
    dict = std::move(un.dictionary);
    model = un.model;
    save_dictionary((ctx.out / "dictionary.bin").string(), dict);
    write_model(ctx, model, dict.rows(), dict.cols());
    if (data.truth) metrics["dict_error"] = dict_error(*data.truth, dict);
  }
  if (spec.stage != "unsup") {
    run_sup<Scalar>(ctx, data, dict, model, spec.classifier, "sup", true, true, metrics);
  }
  write_json((ctx.out / "metrics.json").string(), metrics);
  std::cout << metrics.dump(2) << '\n';
  return kOk;
}

// ---- eval ------------------------------------------------------------------

template <typename Scalar>
int cmd_eval(const Context& ctx, const std::string& checkpoint_dir) {
  const fs::path dir = checkpoint_dir.empty() ? ctx.out : fs::path(checkpoint_dir);
  const Data<Scalar> data = load_data<Scalar>(ctx.spec);
  const ModelInfo model = read_model(dir);
  const auto dict = load_dictionary<Scalar>((dir / "dictionary.bin").string());
  json metrics{{"spec_hash", ctx.hash}, {"checkpoint", dir.string()}};
  if (data.truth) metrics["dict_error"] = dict_error(*data.truth, dict);
  const FistaParams<Scalar> fp{static_cast<Scalar>(model.lambda), static_cast<Scalar>(model.L), model.T};
  const auto eval_set = data.test.size() > 0 ? &data.test : &data.train;
  metrics["reconstruction_loss"] = mean_reconstruction_loss(*eval_set, dict, fp, {}, ctx.spec.train.threads);
  if (data.train.labeled() && fs::exists(dir / "classifier_C.bin")) {
    const auto params = load_classifier<Scalar>((dir / "classifier_C.bin").string(), (dir / "classifier_d.bin").string());
    metrics["test_error_pct"] = 100.0 * eval_classification(*eval_set, dict, params, fp, ctx.spec.train.threads);
  }
  write_json((ctx.out / "metrics.json").string(), metrics);
  std::cout << metrics.dump(2) << '\n';
  return kOk;
}

// Trains both stages for every lambda in the grid and records test error.
template <typename Scalar>
int cmd_sweep(const Context& ctx) {
  const auto& spec = ctx.spec;
  const Data<Scalar> data = load_data<Scalar>(spec);
  require(data.train.labeled() && data.test.size() > 0, ErrorKind::Config, "the lambda sweep needs labeled train and test data");
  std::vector<std::pair<double, double>> rows;
  for (double lambda : spec.sweep.lambdas) {
    TrainConfig unsup = spec.train;
    unsup.lambda = lambda;
    unsup.sigma.reset();
    if (spec.sweep.unsup_epochs) unsup.epochs = *spec.sweep.unsup_epochs;
    TrainConfig sup = spec.classifier;
    if (spec.sweep.sup_epochs) sup.epochs = *spec.sweep.sup_epochs;
    std::ostringstream stem;
    stem << "lambda_" << lambda;
    auto un = run_unsup<Scalar>(ctx, data, unsup, "unsup_" + stem.str(), false);
    if (un.diverged) return kDivergence;
    json metrics;
    const double err = run_sup<Scalar>(ctx, data, un.dictionary, un.model, sup, "sup_" + stem.str(), false, false, metrics);
    rows.emplace_back(lambda, 100.0 * err);
    std::cout << "lambda " << lambda << " test error " << 100.0 * err << "%" << std::endl;
  }
  write_csv((ctx.out / "lambda_sweep.csv").string(), ctx.hash, [&](std::ostream& os) {
    os << "lambda,error_pct\n";
    for (const auto& [l, e] : rows) os << l << ',' << e << '\n';
  });
  return kOk;
}

// ---- baseline --------------------------------------------------------------

template <typename Scalar>
int cmd_baseline(const Context& ctx) {
  const auto& spec = ctx.spec;
  const Data<Scalar> data = load_data<Scalar>(spec);
  AltMinConfig cfg;
  cfg.outer_iters = spec.baseline.outer_iters;
  cfg.space = spec.baseline.space;
  cfg.lambda = spec.train.resolved_lambda(spec.data.source == "simulate" ? spec.data.sim.p : data.train.dim);
  cfg.T = spec.baseline.T.value_or(spec.train.T);
  cfg.L = spec.train.lipschitz == LipschitzPolicy::Fixed ? spec.train.L : 0.0;
  cfg.threads = spec.train.threads;
  const auto res = alternating_minimization(data.train, initial_dictionary(spec, data), cfg);
  write_history(ctx, "history_altmin", res.history);
  save_dictionary((ctx.out / "dictionary_altmin.bin").string(), res.dictionary);
  for (const auto& r : res.history.epochs) {
    std::cout << "round " << r.epoch << " objective/J " << r.loss;
    if (r.err) std::cout << " err " << *r.err;
    std::cout << '\n';
  }
  return kOk;
}

// ---- bench / grad-check ----------------------------------------------------

struct BenchArgs {
  Index n = 4096;
  Index p = 256;
  std::vector<double> betas{0.1, 0.3, 0.5};
  std::vector<Index> sparsities{1, 3};
  Index batch = 16;
  int T = 20;
  int reps = 5;
  std::uint64_t seed = 1;
};

int cmd_bench(const BenchArgs& a, const std::string& out) {
  require(!out.empty(), ErrorKind::Config, "bench needs --out");
  fs::create_directories(out);
  const json spec{{"N", a.n}, {"p", a.p}, {"betas", a.betas}, {"s", a.sparsities}, {"batch", a.batch}, {"T", a.T}, {"reps", a.reps},
                  {"seed", a.seed}};
  std::vector<BenchResult> results;
  for (double beta : a.betas) {
    const Index m = std::max<Index>(1, static_cast<Index>(std::lround(beta * static_cast<double>(a.n))));
    BenchCase c{MeasurementKind::Gaussian, a.n, a.p, m, 0, a.batch, a.T, a.reps, a.seed};
    results.push_back(run_bench(c));
    for (Index s : a.sparsities) {
      c.kind = MeasurementKind::RowSparse;
      c.s = s;
      results.push_back(run_bench(c));
    }
  }
  write_csv((fs::path(out) / "bench.csv").string(), spec_hash(spec), [&](std::ostream& os) {
    os << "kind,N,p,M,s,beta,project_s,adjoint_s,encode_s,operator_bytes,dense_bytes,persisted_bytes\n";
    for (const auto& r : results)
      os << to_string(r.c.kind) << ',' << r.c.n << ',' << r.c.p << ',' << r.c.m << ',' << r.c.s << ','
         << static_cast<double>(r.c.m) / static_cast<double>(r.c.n) << ',' << r.project_seconds << ',' << r.adjoint_seconds << ','
         << r.encode_seconds << ',' << r.operator_bytes << ',' << r.dense_bytes << ',' << r.descriptor_bytes << '\n';
  });
  for (const auto& r : results)
    std::cout << to_string(r.c.kind) << " M=" << r.c.m << " s=" << r.c.s << " project " << r.project_seconds * 1e3 << " ms, encode "
              << r.encode_seconds * 1e3 << " ms\n";
  return kOk;
}

int cmd_grad_check(int instances, std::uint64_t seed) {
  const auto g = gradient_suite(instances, seed);
  std::cout << "gradient: " << g.instances << " instances, max relative error " << g.max_rel_error << " (" << g.checked
            << " coordinates, " << g.excluded << " excluded at threshold boundaries)\n";
  const auto l = lasso_suite(std::max(1, instances / 2), seed);
  std::cout << "lasso: " << l.instances << " instances, max relative objective gap " << l.max_rel_gap << '\n';
  const bool ok = g.max_rel_error <= 1e-5 && l.max_rel_gap <= 1e-6;
  std::cout << (ok ? "PASS" : "FAIL") << '\n';
  return ok ? kOk : kCheckFailed;
}

template <typename Fn>
int dispatch(const std::string& precision, Fn&& fn) {
  if (precision == "float") return fn(float{});
  return fn(double{});
}

void add_common(CLI::App* cmd, Common& c, bool need_spec = true) {
  auto* opt = cmd->add_option("--spec", c.spec_path, "experiment spec (JSON)");
  if (need_spec) opt->required();
  cmd->add_option("--out", c.out, "output directory");
  cmd->add_option("--threads", c.threads, "worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", c.seed, "override the training seed");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"RandNet: dictionary learning and classification from compressed random measurements"};
  app.require_subcommand(1);
  Common common;

  auto* sim = app.add_subcommand("simulate", "generate and compress the simulation dataset");
  add_common(sim, common);
  auto* train = app.add_subcommand("train", "train the dictionary and/or classifier");
  add_common(train, common);
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  add_common(eval, common);
  std::string checkpoint;
  bool sweep = false;
  eval->add_option("--checkpoint", checkpoint, "directory holding dictionary.bin and model.json (default: --out)");
  eval->add_flag("--lambda-sweep", sweep, "train and evaluate once per lambda in sweep.lambdas");
  auto* base = app.add_subcommand("baseline", "alternating-minimization dictionary learning");
  add_common(base, common);

  BenchArgs bench_args;
  auto* bench = app.add_subcommand("bench", "time dense vs row-sparse operators");
  bench->add_option("--out", common.out, "output directory")->required();
  bench->add_option("--N", bench_args.n, "data dimension");
  bench->add_option("--p", bench_args.p, "number of atoms");
  bench->add_option("--beta", bench_args.betas, "measurement ratios");
  bench->add_option("--s", bench_args.sparsities, "row sparsities");
  bench->add_option("--batch", bench_args.batch, "columns per call");
  bench->add_option("--T", bench_args.T, "FISTA iterations for the encode timing");
  bench->add_option("--reps", bench_args.reps, "repetitions (median reported)");
  bench->add_option("--seed", bench_args.seed, "operator seed");

  int instances = 50;
  std::uint64_t grad_seed = 1;
  auto* grad = app.add_subcommand("grad-check", "finite-difference check of the unrolled backward pass");
  grad->add_option("--instances", instances, "random instances");
  grad->add_option("--seed", grad_seed, "instance seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (bench->parsed()) return cmd_bench(bench_args, common.out);
    if (grad->parsed()) return cmd_grad_check(instances, grad_seed);
    const bool need_train = train->parsed() || base->parsed() || (eval->parsed() && sweep);
    const Context ctx = load_context(common, need_train);
    return dispatch(ctx.spec.precision, [&](auto tag) -> int {
      using Scalar = decltype(tag);
      if (sim->parsed()) return cmd_simulate<Scalar>(ctx);
      if (train->parsed()) return cmd_train<Scalar>(ctx);
      if (base->parsed()) return cmd_baseline<Scalar>(ctx);
      if (sweep) return cmd_sweep<Scalar>(ctx);
      return cmd_eval<Scalar>(ctx, checkpoint);
    });
  } catch (const Error& e) {
    std::cerr << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const fs::filesystem_error& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
}
