#pragma once

// Data-parallel inner loops used by perception and the clustering metrics.
// Every kernel has a portable scalar reference; vector variants are chosen
// once at runtime from the CPU feature set and must agree with the reference
// (bit-exact for comparisons and the stencil, to rounding for reductions).
//
// Set GUIDEBOT_SIMD=scalar in the environment to force the reference path.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace guidebot::kernels {

enum class Backend { Scalar, Avx2 };

enum class Metric { Euclidean, Chebyshev };

[[nodiscard]] bool backend_available(Backend b);
[[nodiscard]] Backend active_backend();
[[nodiscard]] std::string_view backend_name(Backend b);

/// Overrides the runtime choice; throws std::invalid_argument if the backend
/// is not available on this machine.
void set_backend(Backend b);

/// Number of points j with dist((qx,qy), (xs[j],ys[j])) <= eps.
std::size_t count_within(std::span<const double> xs, std::span<const double> ys, double qx, double qy,
                         double eps, Metric metric);

/// Appends the indices counted by count_within to `out`, in increasing order.
void collect_within(std::span<const double> xs, std::span<const double> ys, double qx, double qy, double eps,
                    Metric metric, std::vector<std::uint32_t>& out);

/// Sum of Euclidean distances from (qx,qy) to every point.
double sum_distances(std::span<const double> xs, std::span<const double> ys, double qx, double qy);

/// 3x3 Sobel gradient magnitude (unnormalized kernels). `padded` is a
/// row-major (height+2) x (width+2) image with a one-cell border already
/// filled; `out` receives height x width magnitudes.
void sobel_magnitude(std::span<const double> padded, int width, int height, std::span<double> out);

}  // namespace guidebot::kernels
