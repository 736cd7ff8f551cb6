#ifndef RANDNET_TOOLS_CHECKS_HPP
#define RANDNET_TOOLS_CHECKS_HPP

#include <algorithm>
#include <cstdint>

#include "lasso_cd.hpp"
#include "randnet/randnet.hpp"

// Randomized oracle suites shared by `randnet grad-check` and the acceptance runner.
namespace randnet::cli {

struct GradSuiteResult {
  int instances = 0;
  double max_rel_error = 0.0;
  Index checked = 0;
  Index excluded = 0;
};

// Backprop through the unrolled encoder vs central differences on the
// reconstruction loss. Sizes drawn with N <= 16, p <= 6, T <= 8; even
// instances use Gaussian measurements, odd ones row-sparse.
inline GradSuiteResult gradient_suite(int instances, std::uint64_t seed, double h = 1e-6) {
  GradSuiteResult out;
  for (int i = 0; i < instances; ++i) {
    Xoshiro256 rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
    const Index n = 8 + static_cast<Index>(rng.below(9));
    const Index p = 2 + static_cast<Index>(rng.below(5));
    const Index m = std::max<Index>(p, n / 2);
    const int t = 2 + static_cast<int>(rng.below(7));
    const auto phi = i % 2 == 0 ? MeasurementMatrix<double>::gaussian(m, n, rng())
                                : MeasurementMatrix<double>::row_sparse(m, n, 2, rng());
    const auto dict = Dictionary<double>::random(n, p, rng());
    const Mat<double> r = phi.project(gaussian_matrix<double>(n, 1, 1.0, rng));
    const FistaParams<double> fp{0.05, estimate_lipschitz(dict, phi).value, t};
    const auto enc = fista_encode(r, dict, phi, fp, true);
    const auto g = backprop_unsupervised(*enc.trace, r, dict, phi);
    const Vec<double> point = dict.stacked();
    const auto fd = finite_diff_check<double>(
        point, Vec<double>(g.stacked_a()), [&](const Vec<double>& v) { return unsupervised_probe(v, n, p, r, phi, fp); }, h);
    out.max_rel_error = std::max(out.max_rel_error, fd.max_rel_error);
    out.checked += fd.checked;
    out.excluded += fd.excluded;
    ++out.instances;
  }
  return out;
}

struct LassoSuiteResult {
  int instances = 0;
  double max_rel_gap = 0.0;
};

// FISTA with T = 2000 vs cyclic coordinate descent on the explicit product Phi A.
inline LassoSuiteResult lasso_suite(int instances, std::uint64_t seed, int T = 2000, double lambda = 0.1) {
  LassoSuiteResult out;
  for (int i = 0; i < instances; ++i) {
    Xoshiro256 rng(derive_seed(seed ^ 0x1A550ULL, static_cast<std::uint64_t>(i)));
    const Index n = 12 + static_cast<Index>(rng.below(13));
    const Index p = 3 + static_cast<Index>(rng.below(6));
    const Index m = std::max<Index>(p, n / 2);
    const auto phi = i % 2 == 0 ? MeasurementMatrix<double>::gaussian(m, n, rng())
                                : MeasurementMatrix<double>::row_sparse(m, n, 2, rng());
    const auto dict = Dictionary<double>::random(n, p, rng());
    const Mat<double> r = phi.project(gaussian_matrix<double>(n, 1, 1.0, rng));
    const FistaParams<double> fp{lambda, estimate_lipschitz(dict, phi).value, T};
    const auto enc = fista_encode(r, dict, phi, fp);
    const double f = lasso_objective(r, enc.code, dict, phi, lambda);
    const Eigen::MatrixXd d = phi.densify() * dict.atoms();
    const auto sol = oracle::lasso_coordinate_descent(d, r.col(0), lambda);
    out.max_rel_gap = std::max(out.max_rel_gap, std::abs(f - sol.objective) / std::abs(sol.objective));
    ++out.instances;
  }
  return out;
}

}  // namespace randnet::cli

#endif  // RANDNET_TOOLS_CHECKS_HPP
