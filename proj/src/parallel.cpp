#include "accel/parallel.hpp"

#include <atomic>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <vector>

namespace accel {

void for_each_chunk(std::size_t total, std::size_t chunk_size, int workers,
                    const std::function<void(std::size_t, std::size_t, std::size_t)>& fn) {
  if (total == 0) return;
  if (chunk_size == 0) throw std::invalid_argument("for_each_chunk: chunk_size must be positive");
  const std::size_t chunks = (total + chunk_size - 1) / chunk_size;

  auto run_chunk = [&](std::size_t c) {
    std::size_t begin = c * chunk_size;
    std::size_t count = begin + chunk_size <= total ? chunk_size : total - begin;
    fn(c, begin, count);
  };

  if (workers <= 1 || chunks == 1) {
    for (std::size_t c = 0; c < chunks; ++c) run_chunk(c);
    return;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      std::size_t c = next.fetch_add(1);
      if (c >= chunks) return;
      try {
        run_chunk(c);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  std::size_t nthreads = std::min<std::size_t>(static_cast<std::size_t>(workers), chunks);
  std::vector<std::thread> pool;
  pool.reserve(nthreads);
  for (std::size_t t = 0; t < nthreads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace accel
