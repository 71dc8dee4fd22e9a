// Compares the serial reference planner against the OpenMP kernels on random
// instances and verifies the two produce bit-identical tables.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "regretlab/envs.hpp"
#include "regretlab/planner.hpp"

using namespace regretlab;

namespace {

double time_ms(const TabularMdp& m, Exec ex, int reps, PlanResult* last) {
  using clock = std::chrono::steady_clock;
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = clock::now();
    *last = bellman_optimal(m, ex);
    const auto t1 = clock::now();
    best = std::min(best, std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  return best;
}

bool bit_equal(const ValueTable& a, const ValueTable& b) {
  return a.v.size() == b.v.size() && a.q.size() == b.q.size() &&
         std::memcmp(a.v.data(), b.v.data(), a.v.size() * sizeof(double)) == 0 &&
         std::memcmp(a.q.data(), b.q.data(), a.q.size() * sizeof(double)) == 0;
}

}  // namespace

int main(int argc, char** argv) {
  int reps = 3;
  std::vector<int> sizes = {64, 128, 256, 384};
  if (argc > 1) reps = std::atoi(argv[1]);
  if (argc > 2) {
    sizes.clear();
    for (int i = 2; i < argc; ++i) sizes.push_back(std::atoi(argv[i]));
  }

  std::printf("%8s %4s %4s %12s %12s %8s %6s\n", "S", "A", "H", "serial_ms",
              "parallel_ms", "speedup", "match");
  bool all_match = true;
  for (int S : sizes) {
    TabularMdp m = gen_random(S, 4, 10, 12345 + static_cast<std::uint64_t>(S), 0.3);
    PlanResult ps, pp;
    const double ts = time_ms(m, Exec::serial, reps, &ps);
    const double tp = time_ms(m, Exec::parallel, reps, &pp);
    const bool match =
        bit_equal(ps.vt, pp.vt) && ps.pi.a == pp.pi.a;
    all_match = all_match && match;
    std::printf("%8d %4d %4d %12.3f %12.3f %7.2fx %6s\n", S, 4, 10, ts, tp,
                ts / tp, match ? "yes" : "NO");
  }
  if (!all_match) {
    std::printf("MISMATCH: parallel kernels diverge from serial reference\n");
    return 1;
  }
  return 0;
}
