#pragma once

// Deterministic block-parallel execution. Work is cut into fixed-size
// blocks that do not depend on the worker count, and block results are
// folded strictly in block order, so floating-point reductions are
// reproducible bit for bit for any number of workers.

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <exception>
#include <map>
#include <mutex>
#include <thread>
#include <vector>

namespace rhom {

struct BlockRange {
  std::uint64_t index = 0;
  std::uint64_t begin = 0;
  std::uint64_t end = 0;
};

/// Runs `work(BlockRange) -> R` over [0, total) in blocks of `block_size`
/// and calls `fold(R&&)` for block 0, 1, 2, ... in order.
template <class R, class Work, class Fold>
void run_blocks(std::uint64_t total, std::uint64_t block_size, unsigned workers, Work&& work, Fold&& fold) {
  if (total == 0) return;
  block_size = std::max<std::uint64_t>(1, block_size);
  const std::uint64_t blocks = (total + block_size - 1) / block_size;
  auto range = [&](std::uint64_t b) {
    return BlockRange{b, b * block_size, std::min(total, (b + 1) * block_size)};
  };
  workers = static_cast<unsigned>(std::clamp<std::uint64_t>(workers, 1, blocks));
  if (workers == 1) {
    for (std::uint64_t b = 0; b < blocks; ++b) fold(work(range(b)));
    return;
  }

  std::atomic<std::uint64_t> next{0};
  std::mutex mu;
  std::condition_variable room;
  std::map<std::uint64_t, R> pending;
  std::uint64_t folded = 0;
  std::exception_ptr error;
  // Bound on finished-but-unfolded blocks so memory stays flat when one
  // block is slow.
  const std::uint64_t window = 4ull * workers;

  auto loop = [&] {
    for (;;) {
      const std::uint64_t b = next.fetch_add(1);
      if (b >= blocks) return;
      {
        std::unique_lock lock(mu);
        room.wait(lock, [&] { return b < folded + window || error; });
        if (error) return;
      }
      R result;
      try {
        result = work(range(b));
      } catch (...) {
        std::lock_guard lock(mu);
        if (!error) error = std::current_exception();
        room.notify_all();
        return;
      }
      std::lock_guard lock(mu);
      pending.emplace(b, std::move(result));
      try {
        for (auto it = pending.find(folded); it != pending.end(); it = pending.find(folded)) {
          fold(std::move(it->second));
          pending.erase(it);
          ++folded;
        }
      } catch (...) {
        if (!error) error = std::current_exception();
      }
      room.notify_all();
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned i = 0; i < workers; ++i) pool.emplace_back(loop);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace rhom
