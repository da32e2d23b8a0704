#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <optional>
#include <thread>
#include <type_traits>
#include <vector>

namespace facex {

/// Runs compute(i) for i in [0, n) on up to `workers` threads and hands each
/// result to reduce(i, result) strictly in ascending i on the calling
/// thread. Work is processed in bounded batches so at most a few results per
/// worker are alive at a time. The first exception in index order is
/// rethrown.
template <class Compute, class Reduce>
void ordered_parallel_for(std::size_t n, std::size_t workers, Compute&& compute, Reduce&& reduce) {
  using Result = std::invoke_result_t<Compute&, std::size_t>;
  workers = std::max<std::size_t>(1, workers);
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) reduce(i, compute(i));
    return;
  }

  const std::size_t batch = workers * 16;
  std::vector<std::optional<Result>> results(batch);
  std::vector<std::exception_ptr> errors(batch);
  for (std::size_t begin = 0; begin < n; begin += batch) {
    const std::size_t end = std::min(n, begin + batch);
    std::atomic<std::size_t> next{begin};
    {
      std::vector<std::jthread> pool;
      const std::size_t threads = std::min(workers, end - begin);
      pool.reserve(threads);
      for (std::size_t t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
          for (std::size_t i = next++; i < end; i = next++) {
            try {
              results[i - begin].emplace(compute(i));
            } catch (...) {
              errors[i - begin] = std::current_exception();
            }
          }
        });
      }
    }
    for (std::size_t i = begin; i < end; ++i) {
      if (errors[i - begin]) std::rethrow_exception(errors[i - begin]);
      reduce(i, std::move(*results[i - begin]));
      results[i - begin].reset();
    }
  }
}

}  // namespace facex
