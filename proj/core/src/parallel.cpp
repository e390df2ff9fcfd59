#include "matzoh/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace matzoh {

std::size_t thread_count() {
  static const std::size_t cached = [] {
    std::size_t n = std::max<std::size_t>(1, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("MATZOH_THREADS")) {
      char* end = nullptr;
      const long parsed = std::strtol(env, &end, 10);
      if (end != env && parsed > 0) n = std::min<std::size_t>(n, static_cast<std::size_t>(parsed));
    }
    return n;
  }();
  return cached;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn,
                  std::size_t min_grain) {
  if (n == 0) return;
  const std::size_t workers =
      std::min(thread_count(), std::max<std::size_t>(1, n / std::max<std::size_t>(1, min_grain)));
  if (workers <= 1) {
    fn(0, n);
    return;
  }
  // Contiguous, deterministic partition: chunk i covers
  // [i*n/workers, (i+1)*n/workers).
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) {
    const std::size_t begin = w * n / workers;
    const std::size_t end = (w + 1) * n / workers;
    pool.emplace_back([&fn, begin, end] { fn(begin, end); });
  }
  fn(0, n / workers);
  for (auto& t : pool) t.join();
}

}  // namespace matzoh
