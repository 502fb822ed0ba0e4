#include <immintrin.h>

#include <bit>
#include <cmath>

#include "kernels_impl.hpp"

namespace guidebot::kernels::avx2 {
namespace {

inline __m256d abs_pd(__m256d v) { return _mm256_andnot_pd(_mm256_set1_pd(-0.0), v); }

// Bit j of the result is set when lane j lies within eps of the query.
inline unsigned within_mask(const double* xs, const double* ys, __m256d qx, __m256d qy, __m256d eps,
                            __m256d eps2, Metric metric) {
  const __m256d dx = _mm256_sub_pd(_mm256_loadu_pd(xs), qx);
  const __m256d dy = _mm256_sub_pd(_mm256_loadu_pd(ys), qy);
  __m256d hit;
  if (metric == Metric::Chebyshev) {
    hit = _mm256_and_pd(_mm256_cmp_pd(abs_pd(dx), eps, _CMP_LE_OQ), _mm256_cmp_pd(abs_pd(dy), eps, _CMP_LE_OQ));
  } else {
    const __m256d d2 = _mm256_add_pd(_mm256_mul_pd(dx, dx), _mm256_mul_pd(dy, dy));
    hit = _mm256_cmp_pd(d2, eps2, _CMP_LE_OQ);
  }
  return static_cast<unsigned>(_mm256_movemask_pd(hit));
}

inline bool within_tail(double dx, double dy, double eps, double eps2, Metric metric) {
  if (metric == Metric::Chebyshev) {
    return std::fabs(dx) <= eps && std::fabs(dy) <= eps;
  }
  return dx * dx + dy * dy <= eps2;
}

std::size_t count_within(const double* xs, const double* ys, std::size_t n, double qx, double qy, double eps,
                         Metric metric) {
  const __m256d vqx = _mm256_set1_pd(qx);
  const __m256d vqy = _mm256_set1_pd(qy);
  const __m256d veps = _mm256_set1_pd(eps);
  const __m256d veps2 = _mm256_set1_pd(eps * eps);
  std::size_t count = 0;
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    count += static_cast<std::size_t>(std::popcount(within_mask(xs + j, ys + j, vqx, vqy, veps, veps2, metric)));
  }
  const double eps2 = eps * eps;
  for (; j < n; ++j) {
    count += within_tail(xs[j] - qx, ys[j] - qy, eps, eps2, metric) ? 1 : 0;
  }
  return count;
}

void collect_within(const double* xs, const double* ys, std::size_t n, double qx, double qy, double eps,
                    Metric metric, std::vector<std::uint32_t>& out) {
  const __m256d vqx = _mm256_set1_pd(qx);
  const __m256d vqy = _mm256_set1_pd(qy);
  const __m256d veps = _mm256_set1_pd(eps);
  const __m256d veps2 = _mm256_set1_pd(eps * eps);
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    unsigned mask = within_mask(xs + j, ys + j, vqx, vqy, veps, veps2, metric);
    while (mask != 0) {
      const int lane = std::countr_zero(mask);
      out.push_back(static_cast<std::uint32_t>(j + static_cast<std::size_t>(lane)));
      mask &= mask - 1;
    }
  }
  const double eps2 = eps * eps;
  for (; j < n; ++j) {
    if (within_tail(xs[j] - qx, ys[j] - qy, eps, eps2, metric)) {
      out.push_back(static_cast<std::uint32_t>(j));
    }
  }
}

double sum_distances(const double* xs, const double* ys, std::size_t n, double qx, double qy) {
  const __m256d vqx = _mm256_set1_pd(qx);
  const __m256d vqy = _mm256_set1_pd(qy);
  __m256d acc = _mm256_setzero_pd();
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    const __m256d dx = _mm256_sub_pd(_mm256_loadu_pd(xs + j), vqx);
    const __m256d dy = _mm256_sub_pd(_mm256_loadu_pd(ys + j), vqy);
    acc = _mm256_add_pd(acc, _mm256_sqrt_pd(_mm256_add_pd(_mm256_mul_pd(dx, dx), _mm256_mul_pd(dy, dy))));
  }
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, acc);
  double sum = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
  for (; j < n; ++j) {
    const double dx = xs[j] - qx;
    const double dy = ys[j] - qy;
    sum += std::sqrt(dx * dx + dy * dy);
  }
  return sum;
}

void sobel_magnitude(const double* padded, int width, int height, double* out) {
  const std::size_t stride = static_cast<std::size_t>(width) + 2;
  const __m256d two = _mm256_set1_pd(2.0);
  for (int r = 0; r < height; ++r) {
    const double* up = padded + static_cast<std::size_t>(r) * stride;
    const double* mid = up + stride;
    const double* dn = mid + stride;
    double* o = out + static_cast<std::size_t>(r) * static_cast<std::size_t>(width);
    int c = 0;
    for (; c + 4 <= width; c += 4) {
      const __m256d u0 = _mm256_loadu_pd(up + c);
      const __m256d u1 = _mm256_loadu_pd(up + c + 1);
      const __m256d u2 = _mm256_loadu_pd(up + c + 2);
      const __m256d m0 = _mm256_loadu_pd(mid + c);
      const __m256d m2 = _mm256_loadu_pd(mid + c + 2);
      const __m256d d0 = _mm256_loadu_pd(dn + c);
      const __m256d d1 = _mm256_loadu_pd(dn + c + 1);
      const __m256d d2 = _mm256_loadu_pd(dn + c + 2);
      const __m256d left = _mm256_add_pd(_mm256_add_pd(u0, _mm256_mul_pd(two, m0)), d0);
      const __m256d right = _mm256_add_pd(_mm256_add_pd(u2, _mm256_mul_pd(two, m2)), d2);
      const __m256d top = _mm256_add_pd(_mm256_add_pd(u0, _mm256_mul_pd(two, u1)), u2);
      const __m256d bottom = _mm256_add_pd(_mm256_add_pd(d0, _mm256_mul_pd(two, d1)), d2);
      const __m256d gx = _mm256_sub_pd(right, left);
      const __m256d gy = _mm256_sub_pd(bottom, top);
      _mm256_storeu_pd(o + c, _mm256_sqrt_pd(_mm256_add_pd(_mm256_mul_pd(gx, gx), _mm256_mul_pd(gy, gy))));
    }
    for (; c < width; ++c) {
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

}  // namespace guidebot::kernels::avx2
