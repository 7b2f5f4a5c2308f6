#include "mssl/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace mssl {

namespace {

std::atomic<int> g_override{0};
thread_local bool t_inside_region = false;

int env_workers() {
  const char* raw = std::getenv("MISSPEC_SSL_THREADS");
  if (raw == nullptr) return 0;
  try {
    return std::max(0, std::stoi(raw));
  } catch (const std::exception&) {
    return 0;
  }
}

}  // namespace

int worker_count() {
  if (int o = g_override.load(); o > 0) return o;
  if (int e = env_workers(); e > 0) return e;
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

void set_worker_count(int n) { g_override.store(std::max(0, n)); }

void parallel_for(Index n, const std::function<void(Index, Index)>& body) {
  if (n <= 0) return;
  const Index workers = std::min<Index>(worker_count(), n);
  if (workers <= 1 || t_inside_region) {
    body(0, n);
    return;
  }

  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  const Index chunk = (n + workers - 1) / workers;
  for (Index w = 0; w < workers; ++w) {
    const Index begin = w * chunk;
    const Index end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&, begin, end] {
      t_inside_region = true;
      try {
        body(begin, end);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace mssl
