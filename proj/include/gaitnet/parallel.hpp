#pragma once

#include <Eigen/Dense>
#include <atomic>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace gaitnet {

// Worker count for all internal parallelism. Block boundaries never depend on
// it, so results are bit-identical for any setting.
int max_threads();
void set_max_threads(int n);

// Fixed block size used by every parallel path.
inline constexpr std::int64_t kBlock = 256;

// Runs fn(begin, end) over consecutive [begin, end) blocks of size kBlock.
// fn must write only to slots within its own range.
inline void parallel_blocks(std::int64_t n, const std::function<void(std::int64_t, std::int64_t)>& fn) {
  if (n <= 0) return;
  const std::int64_t nblocks = (n + kBlock - 1) / kBlock;
  const int workers = static_cast<int>(std::min<std::int64_t>(max_threads(), nblocks));
  if (workers <= 1) {
    for (std::int64_t b = 0; b < nblocks; ++b)
      fn(b * kBlock, std::min(n, (b + 1) * kBlock));
    return;
  }
  std::atomic<std::int64_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto work = [&] {
    try {
      for (;;) {
        std::int64_t b = next.fetch_add(1);
        if (b >= nblocks) return;
        fn(b * kBlock, std::min(n, (b + 1) * kBlock));
      }
    } catch (...) {
      std::scoped_lock lock(error_mutex);
      if (!first_error) first_error = std::current_exception();
      next.store(nblocks);  // stop remaining blocks
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (int t = 1; t < workers; ++t) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

// C = A * B, blocked over rows of A. Each output row is produced by exactly
// one sequential Eigen product on a fixed slice, so the result does not
// depend on the thread count.
template <typename RhsT>
void matmul_rows(const Eigen::MatrixXd& a, const RhsT& b, Eigen::MatrixXd& c) {
  c.resize(a.rows(), b.cols());
  parallel_blocks(a.rows(), [&](std::int64_t r0, std::int64_t r1) {
    c.middleRows(r0, r1 - r0).noalias() = a.middleRows(r0, r1 - r0) * b;
  });
}

}  // namespace gaitnet
