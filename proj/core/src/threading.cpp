#include "fracheat/threading.hpp"

#include <cstdlib>
#include <thread>
#include <vector>

namespace fracheat {

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char *env = std::getenv("FRACHEAT_THREADS")) {
    int v = std::atoi(env);
    if (v > 0) return v;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw ? int(hw) : 1;
}

void parallel_for(size_t n, const std::function<void(size_t)> &body, int threads) {
  int nt = resolve_threads(threads);
  if (nt <= 1 || n < 2) {
    for (size_t i = 0; i < n; ++i) body(i);
    return;
  }
  size_t workers = std::min<size_t>(size_t(nt), n);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w]() {
      for (size_t i = w; i < n; i += workers) body(i);
    });
  }
  for (auto &t : pool) t.join();
}

} // namespace fracheat
