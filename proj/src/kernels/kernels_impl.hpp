#pragma once

#include "guidebot/kernels.hpp"

namespace guidebot::kernels {

struct KernelTable {
  std::size_t (*count_within)(const double* xs, const double* ys, std::size_t n, double qx, double qy, double eps,
                              Metric metric);
  void (*collect_within)(const double* xs, const double* ys, std::size_t n, double qx, double qy, double eps,
                         Metric metric, std::vector<std::uint32_t>& out);
  double (*sum_distances)(const double* xs, const double* ys, std::size_t n, double qx, double qy);
  void (*sobel_magnitude)(const double* padded, int width, int height, double* out);
};

namespace scalar {
extern const KernelTable table;
}

#ifdef GUIDEBOT_HAVE_AVX2
namespace avx2 {
extern const KernelTable table;
}
#endif

}  // namespace guidebot::kernels
