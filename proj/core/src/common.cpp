#include "gje/common.hpp"

#include <cstdio>
#include <thread>

namespace gje {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void parallel_for(std::int64_t count, int threads, const std::function<void(std::int64_t)>& fn) {
  if (threads <= 1 || count < 2) {
    for (std::int64_t i = 0; i < count; ++i) fn(i);
    return;
  }
  int nt = std::min<std::int64_t>(threads, count);
  std::vector<std::thread> pool;
  pool.reserve(nt);
  for (int t = 0; t < nt; ++t) {
    pool.emplace_back([&, t] {
      for (std::int64_t i = t; i < count; i += nt) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace gje
