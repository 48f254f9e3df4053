// Wall-clock comparison of the OpenMP kernels against their serial reference
// implementations on a fixed workload. Not a test; numbers land on stdout.

#include <chrono>
#include <cstdio>
#include <string>

#include "stablewalk/parallel.hpp"
#include "stablewalk/stable.hpp"
#include "stablewalk/survival.hpp"

using namespace stablewalk;

namespace {

ChainModel symmetric_model() {
  return build_model({{1.0}}, {{1.5, 0.5, 0.5, 1.0, 0.0}});
}

template <class Fn>
double time_ms(Fn&& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  fn();
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count();
}

void report(const char* name, double serial_ms, double parallel_ms) {
  std::printf("%-28s serial %9.1f ms   parallel %9.1f ms   speedup %.2fx\n", name,
              serial_ms, parallel_ms, serial_ms / parallel_ms);
}

}  // namespace

int main(int argc, char** argv) {
  const int workers = argc > 1 ? std::atoi(argv[1]) : 0;
  const std::uint64_t seed = 20260810;
  const auto model = symmetric_model();

  std::printf("workers: %d (0 = OpenMP default)\n", resolve_workers(workers));

  {
    const StableParams params(1.5, 0.0, 1.0);
    constexpr std::int64_t kCount = 4000000;
    double serial_ms = 0.0, parallel_ms = 0.0;
    std::vector<double> a, b;
    serial_ms = time_ms([&] { a = sample_stable_batch_serial(params, kCount, seed); });
    parallel_ms = time_ms([&] { b = sample_stable_batch(params, kCount, seed, workers); });
    report("stable draws (4e6)", serial_ms, parallel_ms);
    if (a != b) std::printf("  WARNING: serial/parallel outputs differ\n");
  }

  {
    ExitConfig cfg;
    cfg.y = 1.0;
    cfg.n_grid = {64, 256, 1024, 4096};
    cfg.paths = 400000;
    cfg.seed = seed;
    cfg.workers = workers;
    SurvivalTable s, p;
    const double serial_ms = time_ms([&] { s = estimate_survival_serial(model, cfg); });
    const double parallel_ms = time_ms([&] { p = estimate_survival(model, cfg); });
    report("survival scan (4e5 paths)", serial_ms, parallel_ms);
    for (std::size_t i = 0; i < s.rows.size(); ++i)
      if (s.rows[i].survivors != p.rows[i].survivors)
        std::printf("  WARNING: survivor counts differ at n=%lld\n",
                    static_cast<long long>(s.rows[i].n));
  }

  {
    const StableParams params(1.5, 0.0, 1.0);
    MeanderBatch s, p;
    const double serial_ms =
        time_ms([&] { s = sample_meander_endpoints_serial(params, 512, 4000, seed); });
    const double parallel_ms =
        time_ms([&] { p = sample_meander_endpoints(params, 512, 4000, seed, workers); });
    report("meander rejection (4e3)", serial_ms, parallel_ms);
    if (s.attempts != p.attempts) std::printf("  WARNING: attempt counts differ\n");
  }

  return 0;
}
