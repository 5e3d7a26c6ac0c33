// Times the OpenMP replication kernel against the serial reference and
// checks that both produce the same table.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <sstream>

#include "ipdmeta/mc.hpp"

int main(int argc, char** argv) {
  const std::size_t reps = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 200;
  const auto config = ipdmeta::ExemplarConfig::defaults();
  const auto estimators = ipdmeta::default_estimators(config);

  using clock = std::chrono::steady_clock;

  const auto t0 = clock::now();
  const auto serial = ipdmeta::replicate_serial(config, reps, estimators);
  const auto t1 = clock::now();
  const auto parallel = ipdmeta::replicate(config, reps, estimators);
  const auto t2 = clock::now();

  const auto secs = [](auto a, auto b) {
    return std::chrono::duration<double>(b - a).count();
  };

  std::ostringstream a, b;
  ipdmeta::write_opchar_csv(serial, a);
  ipdmeta::write_opchar_csv(parallel, b);
  const bool identical = a.str() == b.str();

  std::printf("replications : %zu\n", reps);
  std::printf("serial       : %.3f s\n", secs(t0, t1));
  std::printf("parallel     : %.3f s\n", secs(t1, t2));
  std::printf("speedup      : %.2fx\n", secs(t0, t1) / secs(t1, t2));
  std::printf("tables match : %s\n", identical ? "yes" : "NO");
  return identical ? 0 : 1;
}
