#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "kernels_impl.hpp"

namespace guidebot::kernels {
namespace {

bool cpu_has_avx2() {
#if defined(GUIDEBOT_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

Backend detect() {
  if (const char* env = std::getenv("GUIDEBOT_SIMD"); env != nullptr && std::string(env) == "scalar") {
    return Backend::Scalar;
  }
  return cpu_has_avx2() ? Backend::Avx2 : Backend::Scalar;
}

std::atomic<Backend>& current() {
  static std::atomic<Backend> backend{detect()};
  return backend;
}

const KernelTable& table() {
#ifdef GUIDEBOT_HAVE_AVX2
  if (current().load(std::memory_order_relaxed) == Backend::Avx2) return avx2::table;
#endif
  return scalar::table;
}

void check_sizes(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) {
    throw std::invalid_argument("kernels: coordinate spans differ in length");
  }
}

}  // namespace

bool backend_available(Backend b) { return b == Backend::Scalar || cpu_has_avx2(); }

Backend active_backend() { return current().load(); }

std::string_view backend_name(Backend b) { return b == Backend::Avx2 ? "avx2" : "scalar"; }

void set_backend(Backend b) {
  if (!backend_available(b)) {
    throw std::invalid_argument("kernels: backend not available on this CPU");
  }
  current().store(b);
}

std::size_t count_within(std::span<const double> xs, std::span<const double> ys, double qx, double qy,
                         double eps, Metric metric) {
  check_sizes(xs, ys);
  return table().count_within(xs.data(), ys.data(), xs.size(), qx, qy, eps, metric);
}

void collect_within(std::span<const double> xs, std::span<const double> ys, double qx, double qy, double eps,
                    Metric metric, std::vector<std::uint32_t>& out) {
  check_sizes(xs, ys);
  table().collect_within(xs.data(), ys.data(), xs.size(), qx, qy, eps, metric, out);
}

double sum_distances(std::span<const double> xs, std::span<const double> ys, double qx, double qy) {
  check_sizes(xs, ys);
  return table().sum_distances(xs.data(), ys.data(), xs.size(), qx, qy);
}

void sobel_magnitude(std::span<const double> padded, int width, int height, std::span<double> out) {
  const auto w = static_cast<std::size_t>(width);
  const auto h = static_cast<std::size_t>(height);
  if (width <= 0 || height <= 0 || padded.size() != (w + 2) * (h + 2) || out.size() != w * h) {
    throw std::invalid_argument("sobel_magnitude: buffer sizes do not match the grid");
  }
  table().sobel_magnitude(padded.data(), width, height, out.data());
}

}  // namespace guidebot::kernels
