#pragma once

#include <complex>
#include <cstddef>
#include <span>

namespace dirspeech::detail {

/// Real-input FFT of a fixed size. Instances are per-thread; see real_fft().
class RealFft {
public:
    explicit RealFft(std::size_t size);
    ~RealFft();
    RealFft(const RealFft&) = delete;
    RealFft& operator=(const RealFft&) = delete;

    std::size_t size() const { return size_; }
    std::size_t bins() const { return size_ / 2 + 1; }

    /// in.size() == size(), out.size() == bins().
    void forward(std::span<const double> in, std::span<std::complex<double>> out);
    /// Unnormalized inverse: forward followed by inverse scales by size().
    void inverse(std::span<const std::complex<double>> in, std::span<double> out);

private:
    std::size_t size_;
    double* real_ = nullptr;
    void* spectrum_ = nullptr;
    void* forward_plan_ = nullptr;
    void* inverse_plan_ = nullptr;
};

/// Thread-local cached transform for `size`.
RealFft& real_fft(std::size_t size);

}  // namespace dirspeech::detail
