#pragma once

#include <cstdint>
#include <cstddef>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace wkit {

// Domain failures carry a short machine-readable tag as the message prefix,
// e.g. "DegenerateMetric: det g = -0.3 at node 17".
struct DomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Deterministic splittable RNG. splitmix64 core; never std:: distributions,
// their streams differ across standard libraries.
struct Rng {
  uint64_t state;
  explicit Rng(uint64_t seed) : state(seed) {}
  uint64_t next_u64() {
    uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }
  // in [0,1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }
  double normal() {
    double u1 = (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
  }
  // independent stream keyed by id; stable across platforms
  Rng split(uint64_t id) const {
    uint64_t z = state ^ (id * 0xff51afd7ed558ccdull + 0xc4ceb9fe1a85ec53ull);
    z = (z ^ (z >> 33)) * 0xff51afd7ed558ccdull;
    return Rng(z ^ (z >> 33));
  }
};

// order-insensitive up to association; fixed association => bit-reproducible
double pairwise_sum(const double* x, size_t n);
inline double pairwise_sum(const std::vector<double>& v) {
  return pairwise_sum(v.data(), v.size());
}

// thread cap from WKIT_THREADS (default 1); chunked map, no shared writes
int thread_cap();
void parallel_for(size_t n, const std::function<void(size_t, size_t)>& run_chunk);

inline double sq(double x) { return x * x; }

constexpr double kPi = 3.14159265358979323846264338327950288;

}  // namespace wkit
