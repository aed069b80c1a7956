#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace wncs {

// Shortest decimal string that round-trips to the same double. "inf"/"nan"
// are emitted literally so CSV/JSON output stays byte-stable.
inline std::string fmt_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

// Runs fn(begin, end) over contiguous chunks of [0, count) on `threads`
// workers. Chunk boundaries depend only on (count, threads), so any
// per-chunk partial results combined in chunk order are reproducible.
inline void parallel_chunks(std::int64_t count, int threads,
                            const std::function<void(std::int64_t, std::int64_t, int)>& fn) {
  if (threads < 1) throw std::invalid_argument("thread count must be >= 1");
  if (count <= 0) return;
  const int workers = static_cast<int>(std::min<std::int64_t>(threads, count));
  if (workers == 1) {
    fn(0, count, 0);
    return;
  }
  const std::int64_t base = count / workers;
  const std::int64_t rem = count % workers;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::int64_t begin = 0;
  for (int w = 0; w < workers; ++w) {
    const std::int64_t len = base + (w < rem ? 1 : 0);
    pool.emplace_back(fn, begin, begin + len, w);
    begin += len;
  }
  for (auto& t : pool) t.join();
}

}  // namespace wncs
