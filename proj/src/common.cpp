#include "wkit/common.hpp"

#include <cstdlib>
#include <thread>

namespace wkit {

double pairwise_sum(const double* x, size_t n) {
  if (n <= 16) {
    double s = 0.0;
    for (size_t i = 0; i < n; ++i) s += x[i];
    return s;
  }
  size_t half = n / 2;
  return pairwise_sum(x, half) + pairwise_sum(x + half, n - half);
}

int thread_cap() {
  const char* env = std::getenv("WKIT_THREADS");
  if (!env) return 1;
  int v = std::atoi(env);
  if (v < 1) return 1;
  int hw = static_cast<int>(std::thread::hardware_concurrency());
  if (hw > 0 && v > hw) v = hw;
  return v;
}

void parallel_for(size_t n, const std::function<void(size_t, size_t)>& run_chunk) {
  int nt = thread_cap();
  if (nt <= 1 || n < 1024) {
    run_chunk(0, n);
    return;
  }
  size_t chunk = (n + nt - 1) / nt;
  std::vector<std::thread> threads;
  threads.reserve(nt);
  for (int t = 0; t < nt; ++t) {
    size_t b = t * chunk;
    size_t e = std::min(n, b + chunk);
    if (b >= e) break;
    threads.emplace_back([=, &run_chunk] { run_chunk(b, e); });
  }
  for (auto& th : threads) th.join();
}

}  // namespace wkit
