#pragma once

// Minimal in-place radix-2 FFT with precomputed twiddle and bit-reversal
// tables.  Grid sizes in this project are powers of two, so no general-n
// machinery is needed.  Strided transforms cover the second axis of
// row-major 2D arrays without a transpose.

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace tdosc::fft {

inline bool is_power_of_two(std::size_t n) { return n > 0 && (n & (n - 1)) == 0; }

// Angular wavenumbers in standard FFT order: k_j = 2 pi j / (n dx) for
// j < n/2, then the negative branch.
inline std::vector<double> wavenumbers(std::size_t n, double dx) {
  std::vector<double> k(n);
  const double base = 2.0 * 3.14159265358979323846 / (static_cast<double>(n) * dx);
  for (std::size_t j = 0; j < n; ++j) {
    const double jj = (j < n / 2) ? static_cast<double>(j)
                                  : static_cast<double>(j) - static_cast<double>(n);
    k[j] = base * jj;
  }
  return k;
}

class Radix2Plan {
 public:
  explicit Radix2Plan(std::size_t n) : n_(n) {
    if (!is_power_of_two(n)) throw std::invalid_argument("fft: size must be a power of two");
    log2n_ = 0;
    while ((std::size_t{1} << log2n_) < n) ++log2n_;
    rev_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t r = 0;
      for (std::size_t b = 0; b < log2n_; ++b)
        if (i & (std::size_t{1} << b)) r |= std::size_t{1} << (log2n_ - 1 - b);
      rev_[i] = r;
    }
    tw_.resize(n / 2);
    const double step = -2.0 * 3.14159265358979323846 / static_cast<double>(n);
    for (std::size_t j = 0; j < n / 2; ++j)
      tw_[j] = std::polar(1.0, step * static_cast<double>(j));
  }

  std::size_t size() const { return n_; }

  // Unscaled forward transform: X_k = sum_j x_j exp(-2 pi i j k / n).
  void forward(std::complex<double>* data, std::size_t stride = 1) const {
    transform(data, stride, false);
  }

  // Inverse with 1/n normalization, so inverse(forward(x)) == x.
  void inverse(std::complex<double>* data, std::size_t stride = 1) const {
    transform(data, stride, true);
    const double s = 1.0 / static_cast<double>(n_);
    for (std::size_t i = 0; i < n_; ++i) data[i * stride] *= s;
  }

 private:
  void transform(std::complex<double>* data, std::size_t stride, bool conj) const {
    for (std::size_t i = 0; i < n_; ++i) {
      const std::size_t j = rev_[i];
      if (i < j) std::swap(data[i * stride], data[j * stride]);
    }
    for (std::size_t len = 2; len <= n_; len <<= 1) {
      const std::size_t half = len >> 1;
      const std::size_t tstep = n_ / len;
      for (std::size_t base = 0; base < n_; base += len) {
        for (std::size_t j = 0; j < half; ++j) {
          std::complex<double> w = tw_[j * tstep];
          if (conj) w = std::conj(w);
          std::complex<double>& a = data[(base + j) * stride];
          std::complex<double>& b = data[(base + j + half) * stride];
          const std::complex<double> t = w * b;
          b = a - t;
          a += t;
        }
      }
    }
  }

  std::size_t n_ = 0;
  std::size_t log2n_ = 0;
  std::vector<std::size_t> rev_;
  std::vector<std::complex<double>> tw_;
};

}  // namespace tdosc::fft
