#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "test_util.hpp"

namespace {

using namespace randnet;
using testutil::Matd;
using testutil::Vecd;

struct Instance {
  MeasurementMatrix<double> phi;
  Dictionary<double> dict;
  Matd r;
  FistaParams<double> params;
};

Instance make_instance(MeasurementKind kind, Index n, Index p, Index m, int T, double lambda, std::uint64_t seed,
                       Index batch = 1) {
  Instance inst;
  inst.phi = testutil::make_phi(kind, m, n, 2, seed + 11);
  inst.dict = Dictionary<double>::random(n, p, seed + 23);
  const Matd truth = Dictionary<double>::random(n, p, seed + 37).atoms();
  const Matd codes = testutil::random_matrix(p, batch, seed + 41, 1.5);
  inst.r = inst.phi.project(truth * codes);
  const auto est = estimate_lipschitz(inst.dict, inst.phi);
  inst.params = {lambda, est.value, T};
  return inst;
}

FiniteDiffResult check_unsupervised(const Instance& inst, const BackpropOptions& options = {}) {
  const auto enc = fista_encode(inst.r, inst.dict, inst.phi, inst.params, true);
  const auto bundle = backprop_unsupervised(*enc.trace, inst.r, inst.dict, inst.phi, options);
  const Vecd point = inst.dict.stacked();
  const Index n = inst.dict.rows();
  const Index p = inst.dict.cols();
  return finite_diff_check<double>(
      point, Vecd(bundle.stacked_a()),
      [&](const Vecd& theta) { return unsupervised_probe(theta, n, p, inst.r, inst.phi, inst.params); }, 1e-6);
}

TEST(FiniteDiff, QuadraticIsExact) {
  const Vecd theta = testutil::random_matrix(10, 1, 5);
  // Central differences are exact on quadratics; h only sets the roundoff.
  const auto res = finite_diff_check<double>(theta, theta, [](const Vecd& t) { return 0.5 * t.squaredNorm(); }, 1e-3);
  EXPECT_LE(res.max_rel_error, 1e-10);
  EXPECT_EQ(res.checked, 10);
  EXPECT_EQ(res.excluded, 0);
}

TEST(FiniteDiff, DoubledGradientGivesOneThird) {
  const Vecd theta = testutil::random_matrix(10, 1, 6);
  const auto res = finite_diff_check<double>(theta, Vecd(2.0 * theta),
                                             [](const Vecd& t) { return 0.5 * t.squaredNorm(); }, 1e-6);
  EXPECT_NEAR(res.max_rel_error, 1.0 / 3.0, 1e-8);
}

TEST(BackpropUnsupervised, SpecInstanceMatchesFiniteDifferences) {
  const auto inst = make_instance(MeasurementKind::Gaussian, 12, 4, 6, 5, 0.3, 1);
  const auto res = check_unsupervised(inst);
  EXPECT_GT(res.checked, 0);
  EXPECT_LE(res.max_rel_error, 1e-5) << "worst coordinate " << res.worst_coordinate;
}

TEST(BackpropUnsupervised, MatchesFiniteDifferencesAcrossKinds) {
  int instances = 0;
  for (auto kind : {MeasurementKind::Gaussian, MeasurementKind::RowSparse, MeasurementKind::Identity}) {
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
      const Index n = 8 + static_cast<Index>(seed % 3) * 4;
      const Index p = 3 + static_cast<Index>(seed % 3);
      const Index m = kind == MeasurementKind::Identity ? n : n / 2;
      const auto inst = make_instance(kind, n, p, m, 3 + static_cast<int>(seed), 0.2, 100 + seed * 7);
      const auto res = check_unsupervised(inst);
      EXPECT_LE(res.max_rel_error, 1e-5) << to_string(kind) << " seed " << seed;
      ++instances;
    }
  }
  EXPECT_EQ(instances, 18);
}

TEST(BackpropUnsupervised, BatchedGradientIsSumOfPerExample) {
  const auto inst = make_instance(MeasurementKind::Gaussian, 14, 5, 7, 6, 0.25, 9, 3);
  const auto enc = fista_encode(inst.r, inst.dict, inst.phi, inst.params, true);
  const auto batched = backprop_unsupervised(*enc.trace, inst.r, inst.dict, inst.phi);
  Matd summed = Matd::Zero(14, 5);
  double loss = 0.0;
  for (Index j = 0; j < 3; ++j) {
    const Matd rj = inst.r.col(j);
    const auto e = fista_encode(rj, inst.dict, inst.phi, inst.params, true);
    const auto g = backprop_unsupervised(*e.trace, rj, inst.dict, inst.phi);
    summed += g.delta_a;
    loss += g.loss_value;
  }
  EXPECT_LE((batched.delta_a - summed).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_NEAR(batched.loss_value, loss, 1e-12);
}

TEST(BackpropUnsupervised, GramAndMeasurementRoutesAgree) {
  // p < M takes the code-space route, p >= M the measurement-space route.
  for (Index m : {3, 10}) {
    const auto inst = make_instance(MeasurementKind::Gaussian, 16, 6, m, 7, 0.2, 300 + static_cast<std::uint64_t>(m));
    const auto enc = fista_encode(inst.r, inst.dict, inst.phi, inst.params, true);
    ProjectedDictionary<double> proj(inst.dict, inst.phi);
    const auto first = backprop_projected(*enc.trace, inst.r, proj);
    proj.use_gram = !proj.use_gram;
    if (proj.use_gram) proj.gram = proj.d.transpose() * proj.d;
    const auto second = backprop_projected(*enc.trace, inst.r, proj);
    EXPECT_LE((first.delta_d - second.delta_d).cwiseAbs().maxCoeff(), 1e-11 * (1.0 + first.delta_d.cwiseAbs().maxCoeff()));
  }
}

TEST(BackpropUnsupervised, ZeroCodeGivesZeroGradient) {
  auto inst = make_instance(MeasurementKind::Gaussian, 12, 4, 6, 5, 0.3, 2);
  inst.params.lambda = 1e6;
  const auto enc = fista_encode(inst.r, inst.dict, inst.phi, inst.params, true);
  ASSERT_EQ(enc.code.cwiseAbs().maxCoeff(), 0.0);
  const auto g = backprop_unsupervised(*enc.trace, inst.r, inst.dict, inst.phi);
  EXPECT_EQ(g.delta_a.cwiseAbs().maxCoeff(), 0.0);
}

TEST(BackpropUnsupervised, ExactReconstructionGivesZeroGradient) {
  // r = 0 with lambda = 0 keeps every code at zero, so r_hat = r exactly.
  auto inst = make_instance(MeasurementKind::Gaussian, 12, 4, 6, 5, 0.3, 3);
  inst.r.setZero();
  inst.params.lambda = 0.0;
  const auto enc = fista_encode(inst.r, inst.dict, inst.phi, inst.params, true);
  const auto g = backprop_unsupervised(*enc.trace, inst.r, inst.dict, inst.phi);
  EXPECT_EQ(g.loss_value, 0.0);
  EXPECT_EQ(g.delta_a.cwiseAbs().maxCoeff(), 0.0);
}

TEST(BackpropUnsupervised, EveryTiedContributionMatters) {
  const auto inst = make_instance(MeasurementKind::Gaussian, 12, 4, 6, 4, 0.1, 17);
  ASSERT_LE(check_unsupervised(inst).max_rel_error, 1e-5);
  BackpropOptions no_decoder;
  no_decoder.include_decoder = false;
  EXPECT_GT(check_unsupervised(inst, no_decoder).max_rel_error, 1e-3);
  for (int t = 2; t <= inst.params.T; ++t) {
    BackpropOptions skip;
    skip.skip_iteration = t;
    EXPECT_GT(check_unsupervised(inst, skip).max_rel_error, 1e-3) << "iteration " << t;
  }
}

TEST(BackpropUnsupervised, RejectsMismatchedTrace) {
  const auto inst = make_instance(MeasurementKind::Gaussian, 12, 4, 6, 5, 0.3, 4);
  const auto enc = fista_encode(inst.r, inst.dict, inst.phi, inst.params, true);
  const auto other = Dictionary<double>::random(12, 5, 8);
  EXPECT_THROW(backprop_unsupervised(*enc.trace, inst.r, other, inst.phi), Error);
  const auto no_trace = fista_encode(inst.r, inst.dict, inst.phi, inst.params, false);
  EXPECT_FALSE(no_trace.trace.has_value());
}

TEST(BackpropUnsupervised, SmallStepDecreasesLoss) {
  const auto inst = make_instance(MeasurementKind::RowSparse, 16, 5, 8, 8, 0.1, 21, 4);
  const auto enc = fista_encode(inst.r, inst.dict, inst.phi, inst.params, true);
  const auto g = backprop_unsupervised(*enc.trace, inst.r, inst.dict, inst.phi);
  Dictionary<double> stepped(inst.dict.atoms() - 1e-4 * g.delta_a);
  const auto after = fista_encode(inst.r, stepped, inst.phi, inst.params);
  EXPECT_LT(recon_loss(inst.r, decode(after.code, stepped, inst.phi)), g.loss_value);
}

TEST(BackpropClassifier, TwoClassUniform) {
  ClassifierParams<double> params;
  params.weights = Matd::Zero(2, 3);
  params.bias = Vecd::Zero(2);
  const Vecd x = Vecd::Ones(3);
  const auto g = backprop_classifier(x, LabelVector(0, 2), params);
  EXPECT_NEAR(g.delta_d(0), -0.5, 1e-15);
  EXPECT_NEAR(g.delta_d(1), 0.5, 1e-15);
  EXPECT_NEAR(g.loss_value, std::log(2.0), 1e-15);
}

TEST(BackpropClassifier, PerfectPredictionHasVanishingGradient) {
  ClassifierParams<double> params;
  params.weights = Matd::Zero(3, 2);
  params.bias = Vecd(3);
  params.bias << 60.0, 0.0, 0.0;
  const Vecd x = Vecd::Ones(2);
  const auto g = backprop_classifier(x, LabelVector(0, 3), params);
  EXPECT_LT(g.delta_d.cwiseAbs().maxCoeff(), 1e-25);
  EXPECT_LT(g.delta_c.cwiseAbs().maxCoeff(), 1e-25);
}

TEST(BackpropClassifier, MatchesFiniteDifferences) {
  const Index k = 10;
  const Index p = 8;
  auto params = ClassifierParams<double>::uniform_init(k, p, 77);
  params.weights *= 3.0;
  const Vecd x = testutil::random_matrix(p, 1, 78);
  const LabelVector u(4, static_cast<int>(k));
  const auto g = backprop_classifier(x, u, params);

  Vecd theta(k * p + k);
  theta << Eigen::Map<const Vecd>(params.weights.data(), k * p), params.bias;
  Vecd analytic(k * p + k);
  analytic << g.stacked_c(), g.delta_d;
  const auto loss = [&](const Vecd& t) {
    ClassifierParams<double> q;
    q.weights = Eigen::Map<const Matd>(t.data(), k, p);
    q.bias = t.tail(k);
    return ce_loss(classify(x, q), u);
  };
  const auto res = finite_diff_check<double>(theta, analytic, loss, 1e-4);
  EXPECT_LE(res.max_rel_error, 1e-7);
}

}  // namespace
