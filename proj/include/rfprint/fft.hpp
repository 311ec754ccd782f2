#pragma once

#include <complex>
#include <cstddef>
#include <span>

namespace rfprint {

/// Owning handle to an FFTW plan for one transform size and direction.
/// Planning is serialized internally; execute() may run concurrently on
/// distinct buffers.
class FftPlan {
public:
    enum class Direction { Forward, Inverse };

    FftPlan(std::size_t n, Direction dir);
    ~FftPlan();
    FftPlan(FftPlan&& other) noexcept;
    FftPlan& operator=(FftPlan&& other) noexcept;
    FftPlan(const FftPlan&) = delete;
    FftPlan& operator=(const FftPlan&) = delete;

    std::size_t size() const { return n_; }

    /// Unnormalized DFT of `in` into `out`; both must have size(). In-place
    /// (same span) is allowed.
    void execute(std::span<const std::complex<double>> in, std::span<std::complex<double>> out) const;

private:
    std::size_t n_ = 0;
    void* plan_ = nullptr;
};

/// Forward DFT, X[k] = sum_n x[n] exp(-j 2 pi k n / N), in place.
void fft_inplace(std::span<std::complex<double>> data);
/// Inverse DFT scaled by 1/N, in place.
void ifft_inplace(std::span<std::complex<double>> data);

}  // namespace rfprint
