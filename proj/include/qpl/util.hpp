#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace qpl {

// Fixed-order pairwise reduction; the result does not depend on thread count,
// only on the order of xs.
double pairwise_sum(const double* xs, std::size_t n);
double pairwise_sum(const std::vector<double>& xs);

// Compensated accumulator for long sequential sums.
struct KahanSum {
  double s = 0.0, c = 0.0;
  void add(double x) {
    double y = x - c;
    double t = s + y;
    c = (t - s) - y;
    s = t;
  }
  double value() const { return s; }
};

// Static partition of [0,n); results must be written to per-index slots so the
// outcome is identical for any thread count.  The first worker exception is
// rethrown on the calling thread.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& body);
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

// Process-wide worker count used by the two-argument parallel_for (default 1).
void set_default_threads(int threads);
int default_threads();

std::uint64_t fnv1a64(std::string_view bytes);

// Round-trip decimal formatting used for all file output.
std::string fmt_g17(double x);

}  // namespace qpl
