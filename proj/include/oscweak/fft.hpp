#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace oscweak::fft {

/// In-place unnormalized multi-dimensional DFT (row-major, first dimension
/// slowest). sign = -1 forward, +1 backward.
void transform(std::span<std::complex<double>> data, std::span<const std::size_t> dims, int sign);

/// Frequencies of an n-point DFT with sample spacing h (numpy fftfreq order).
std::vector<double> frequencies(std::size_t n, double h);

}  // namespace oscweak::fft
