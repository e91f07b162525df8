#pragma once

#include <complex>
#include <cstddef>
#include <thread>
#include <vector>

#include "magpi/common.hpp"

namespace magpi {

// Pairwise (cascade) summation with a recursion shape fixed by n alone.
// Monte Carlo accumulators go through this, so the result is identical no
// matter how many threads produced the per-sample buffer.
template <class T>
T pairwise_sum(const T* data, std::size_t n, std::size_t stride = 1) {
  if (n <= 8) {
    T acc{};
    for (std::size_t i = 0; i < n; ++i) acc += data[i * stride];
    return acc;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(data, half, stride) +
         pairwise_sum(data + half * stride, n - half, stride);
}

struct MeanStderr {
  cplx mean{};
  double stderr_re = 0.0;
  double stderr_im = 0.0;
};

// Sample mean and standard error (per real/imaginary component) of a
// strided buffer of complex values, using two pairwise passes.
inline MeanStderr mean_stderr(const cplx* data, std::size_t n,
                              std::size_t stride = 1) {
  MeanStderr out;
  if (n == 0) return out;
  out.mean = pairwise_sum(data, n, stride) / static_cast<double>(n);
  if (n < 2) return out;
  std::vector<cplx> sq(n);
  for (std::size_t i = 0; i < n; ++i) {
    const cplx d = data[i * stride] - out.mean;
    sq[i] = cplx(d.real() * d.real(), d.imag() * d.imag());
  }
  const cplx s2 = pairwise_sum(sq.data(), n);
  const double denom = static_cast<double>(n) * static_cast<double>(n - 1);
  out.stderr_re = std::sqrt(s2.real() / denom);
  out.stderr_im = std::sqrt(s2.imag() / denom);
  return out;
}

// Runs fn(begin, end) over [0, n) split into contiguous chunks, one per
// worker.  With threads <= 1 the call is inline.  Chunks only partition the
// index range; combined with counter-based RNG and pairwise reduction this
// keeps results independent of the thread count.
template <class Fn>
void parallel_for_samples(std::uint64_t n, int threads, Fn&& fn) {
  if (threads <= 1 || n < 2) {
    fn(std::uint64_t{0}, n);
    return;
  }
  const auto nt = static_cast<std::uint64_t>(threads);
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (std::uint64_t w = 0; w < nt; ++w) {
    const std::uint64_t begin = n * w / nt;
    const std::uint64_t end = n * (w + 1) / nt;
    if (begin == end) continue;
    pool.emplace_back([&fn, begin, end] { fn(begin, end); });
  }
  for (auto& th : pool) th.join();
}

}  // namespace magpi
