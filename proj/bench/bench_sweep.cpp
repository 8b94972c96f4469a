// Times a band sweep with the serial and the OpenMP execution policy and
// checks the results are bit-identical. Usage: bench_sweep [fibers] [jobs].

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <vector>

#include "fiberband/field_profile.hpp"
#include "fiberband/spectral.hpp"

using namespace fiberband;

namespace {

template <class F>
double timed(F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  f();
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double>(t1 - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
  const std::size_t fibers = argc > 1 ? std::strtoul(argv[1], nullptr, 10) : 65;
  const int jobs = argc > 2 ? std::atoi(argv[2]) : 0;

  const ProfilePtr profile = make_gaussian_field();
  const double h = 0.01;
  const long long k_max = 4;
  GridPolicy policy;
  Tolerances tol;

  std::vector<double> xis(fibers);
  for (std::size_t i = 0; i < fibers; ++i)
    xis[i] = 0.05 + 0.9 * double(i) / double(fibers - 1);

  BandDiagram serial, parallel;
  const double ts = timed([&] {
    serial = sweep_bands(*profile, xis, h, policy, tol, k_max,
                         ExecPolicy::serial());
  });
  const double tp = timed([&] {
    parallel = sweep_bands(*profile, xis, h, policy, tol, k_max,
                           ExecPolicy::openmp(jobs));
  });

  std::size_t bands = 0;
  for (std::size_t i = 0; i < serial.slices.size(); ++i) {
    const SliceRecord& a = serial.slices[i];
    const SliceRecord& b = parallel.slices[i];
    if (a.valid != b.valid) {
      std::fprintf(stderr, "mismatch at xi=%.6g: validity differs\n", a.xi);
      return 1;
    }
    if (!a.valid) continue;
    if (a.result.lambda.size() != b.result.lambda.size() ||
        (a.result.count() &&
         std::memcmp(a.result.lambda.data(), b.result.lambda.data(),
                     a.result.count() * sizeof(double)) != 0)) {
      std::fprintf(stderr, "mismatch at xi=%.6g: eigenvalues differ\n", a.xi);
      return 1;
    }
    bands += a.result.count();
  }

  std::printf("fibers %zu, bands %zu\n", fibers, bands);
  std::printf("serial   %8.3f s  (%.2f ms/fiber)\n", ts,
              1e3 * ts / double(fibers));
  std::printf("parallel %8.3f s  (%.2f ms/fiber)  speedup %.2fx\n", tp,
              1e3 * tp / double(fibers), ts / tp);
  std::printf("results identical\n");
  return 0;
}
