#pragma once

#include <functional>
#include <thread>
#include <vector>

namespace kaclab {

/// Runs body(0..count-1) on a small worker pool. Each index writes only its
/// own output slot and draws from its own forked RngStream, so results are
/// identical for every worker count. workers <= 0 picks the hardware count.
inline void parallel_for(long count, int workers,
                         const std::function<void(long)>& body) {
  if (count <= 0) return;
  int w = workers > 0 ? workers
                      : static_cast<int>(std::thread::hardware_concurrency());
  if (w < 1) w = 1;
  if (w > count) w = static_cast<int>(count);
  if (w == 1) {
    for (long i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(w);
  for (int id = 0; id < w; ++id) {
    pool.emplace_back([&, id] {
      for (long i = id; i < count; i += w) body(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace kaclab
