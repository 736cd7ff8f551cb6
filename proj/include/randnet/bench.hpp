#ifndef RANDNET_BENCH_HPP
#define RANDNET_BENCH_HPP

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <vector>

#include "randnet/core.hpp"
#include "randnet/dictionary.hpp"
#include "randnet/encoder.hpp"
#include "randnet/measurement.hpp"

namespace randnet {

struct BenchCase {
  MeasurementKind kind = MeasurementKind::RowSparse;
  Index n = 4096;
  Index p = 256;
  Index m = 410;
  Index s = 1;
  Index batch = 16;
  int T = 20;
  int reps = 5;
  std::uint64_t seed = 1;
};

struct BenchResult {
  BenchCase c;
  double project_seconds = 0.0;   // median over reps
  double adjoint_seconds = 0.0;
  double encode_seconds = 0.0;
  std::size_t operator_bytes = 0;    // materialized operator
  std::size_t descriptor_bytes = 0;  // what gets persisted per block
  std::size_t dense_bytes = 0;       // M * N float64
};

namespace detail {

template <typename Fn>
double median_seconds(int reps, Fn&& fn) {
  std::vector<double> times;
  for (int r = 0; r < reps; ++r) {
    const auto start = std::chrono::steady_clock::now();
    fn();
    times.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  }
  std::sort(times.begin(), times.end());
  return times[times.size() / 2];
}

}  // namespace detail

// Times project, adjoint and the chained-operator encode for one operator.
inline BenchResult run_bench(const BenchCase& c) {
  require(c.reps >= 1, ErrorKind::Config, "bench needs reps >= 1");
  MeasurementDescriptor d{c.kind, c.kind == MeasurementKind::Identity ? c.n : c.m, c.n,
                          c.kind == MeasurementKind::RowSparse ? c.s : 0, c.seed};
  const auto phi = MeasurementMatrix<double>::from_descriptor(d);
  const auto dict = Dictionary<double>::random(c.n, c.p, c.seed + 1);
  Xoshiro256 rng(c.seed + 2);
  const Mat<double> y = gaussian_matrix<double>(c.n, c.batch, 1.0, rng);
  const Mat<double> r = phi.project(y);
  const FistaParams<double> fp{0.1, estimate_lipschitz(dict, phi).value, c.T};

  BenchResult out{c};
  volatile double sink = 0.0;
  out.project_seconds = detail::median_seconds(c.reps, [&] { sink = sink + phi.project(y)(0, 0); });
  out.adjoint_seconds = detail::median_seconds(c.reps, [&] { sink = sink + phi.adjoint(r)(0, 0); });
  out.encode_seconds = detail::median_seconds(c.reps, [&] { sink = sink + fista_encode(r, dict, phi, fp).code(0, 0); });
  out.operator_bytes = phi.storage_bytes();
  out.descriptor_bytes = sizeof(MeasurementDescriptor);
  out.dense_bytes = static_cast<std::size_t>(phi.rows() * phi.cols()) * sizeof(double);
  return out;
}

}  // namespace randnet

#endif  // RANDNET_BENCH_HPP
