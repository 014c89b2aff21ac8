#include "qpl/util.hpp"

#include <cstdio>
#include <exception>
#include <mutex>
#include <thread>

namespace qpl {

double pairwise_sum(const double* xs, std::size_t n) {
  if (n == 0) return 0.0;
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += xs[i];
    return s;
  }
  std::size_t half = n / 2;
  return pairwise_sum(xs, half) + pairwise_sum(xs + half, n - half);
}

double pairwise_sum(const std::vector<double>& xs) { return pairwise_sum(xs.data(), xs.size()); }

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& body) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::size_t t = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
  std::vector<std::thread> pool;
  pool.reserve(t);
  std::exception_ptr first_error;
  std::mutex error_mutex;
  for (std::size_t w = 0; w < t; ++w) {
    pool.emplace_back([&, w]() {
      try {
        for (std::size_t i = w; i < n; i += t) body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

namespace {
int g_default_threads = 1;
}

void set_default_threads(int threads) { g_default_threads = threads < 1 ? 1 : threads; }
int default_threads() { return g_default_threads; }

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
  parallel_for(n, g_default_threads, body);
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string fmt_g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace qpl
