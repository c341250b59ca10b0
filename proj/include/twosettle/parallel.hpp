#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>

namespace twosettle {

// Worker count used by parallel_for. 0 selects hardware concurrency.
// Only speed depends on it; every result is assembled in index order.
void set_thread_count(unsigned n);
unsigned thread_count();

// Runs body(k) for k in [0, count). Nested calls run serially on the
// calling worker. The first exception thrown by any body is rethrown.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

// Seed for stream `stream` of a run seeded with `seed`.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace twosettle
