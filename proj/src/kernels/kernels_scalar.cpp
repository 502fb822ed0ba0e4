#include <cmath>

#include "kernels_impl.hpp"

namespace guidebot::kernels::scalar {
namespace {

inline bool within(double dx, double dy, double eps, double eps2, Metric metric) {
  if (metric == Metric::Chebyshev) {
    return std::fabs(dx) <= eps && std::fabs(dy) <= eps;
  }
  return dx * dx + dy * dy <= eps2;
}

std::size_t count_within(const double* xs, const double* ys, std::size_t n, double qx, double qy, double eps,
                         Metric metric) {
  const double eps2 = eps * eps;
  std::size_t count = 0;
  for (std::size_t j = 0; j < n; ++j) {
    count += within(xs[j] - qx, ys[j] - qy, eps, eps2, metric) ? 1 : 0;
  }
  return count;
}

void collect_within(const double* xs, const double* ys, std::size_t n, double qx, double qy, double eps,
                    Metric metric, std::vector<std::uint32_t>& out) {
  const double eps2 = eps * eps;
  for (std::size_t j = 0; j < n; ++j) {
    if (within(xs[j] - qx, ys[j] - qy, eps, eps2, metric)) {
      out.push_back(static_cast<std::uint32_t>(j));
    }
  }
}

double sum_distances(const double* xs, const double* ys, std::size_t n, double qx, double qy) {
  double sum = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double dx = xs[j] - qx;
    const double dy = ys[j] - qy;
    sum += std::sqrt(dx * dx + dy * dy);
  }
  return sum;
}

void sobel_magnitude(const double* padded, int width, int height, double* out) {
  const std::size_t stride = static_cast<std::size_t>(width) + 2;
  for (int r = 0; r < height; ++r) {
    const double* up = padded + static_cast<std::size_t>(r) * stride;
    const double* mid = up + stride;
    const double* dn = mid + stride;
    double* o = out + static_cast<std::size_t>(r) * static_cast<std::size_t>(width);
    for (int c = 0; c < width; ++c) {
      const double left = (up[c] + 2.0 * mid[c]) + dn[c];
      const double right = (up[c + 2] + 2.0 * mid[c + 2]) + dn[c + 2];
      const double top = (up[c] + 2.0 * up[c + 1]) + up[c + 2];
      const double bottom = (dn[c] + 2.0 * dn[c + 1]) + dn[c + 2];
      const double gx = right - left;
      const double gy = bottom - top;
      o[c] = std::sqrt(gx * gx + gy * gy);
    }
  }
}

}  // namespace

const KernelTable table{&count_within, &collect_within, &sum_distances, &sobel_magnitude};

}  // namespace guidebot::kernels::scalar
