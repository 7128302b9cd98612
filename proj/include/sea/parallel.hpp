#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <vector>

namespace sea {

struct RowRange {
  std::size_t begin;
  std::size_t end;
  std::size_t size() const noexcept { return end - begin; }
};

// Work is always split into chunks of this many rows, whatever the worker
// count, so results do not depend on how many workers run.
inline constexpr std::size_t kChunkRows = 64;

inline std::vector<RowRange> row_chunks(std::size_t rows, std::size_t chunk = kChunkRows) {
  std::vector<RowRange> out;
  for (std::size_t begin = 0; begin < rows; begin += chunk) {
    out.push_back({begin, std::min(rows, begin + chunk)});
  }
  return out;
}

// Calls fn(chunk_index, range) for every chunk, on up to `threads` workers.
// The first exception thrown by any chunk is rethrown on the caller.
template <typename Fn>
void for_each_chunk(const std::vector<RowRange>& chunks, std::size_t threads, Fn&& fn) {
  const auto count = static_cast<std::ptrdiff_t>(chunks.size());
  if (threads <= 1 || count <= 1) {
    for (std::ptrdiff_t k = 0; k < count; ++k) fn(static_cast<std::size_t>(k), chunks[k]);
    return;
  }
  std::exception_ptr failure;
  std::mutex guard;
#pragma omp parallel for num_threads(static_cast<int>(threads)) schedule(static)
  for (std::ptrdiff_t k = 0; k < count; ++k) {
    try {
      fn(static_cast<std::size_t>(k), chunks[k]);
    } catch (...) {
      std::lock_guard lock(guard);
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace sea
